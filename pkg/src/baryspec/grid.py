"""Interpolation grids: Chebyshev-Gauss-Lobatto and equispaced Fourier axes.

A :class:`Grid1D` stores one axis of a (possibly multi-dimensional) solution
grid: the node locations mapped to a physical interval, plus the barycentric
weights needed for stable polynomial evaluation. :class:`TensorGrid` is an
ordered product of such axes. Grids are immutable after construction and safe
to share across threads.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

# Absolute slack (relative to interval length) allowed when checking that a
# query point lies inside the interval. Collocation samplers may produce
# boundary points with rounding.
INTERVAL_TOL = 1e-12


class Basis(enum.Enum):
    CHEBYSHEV = "chebyshev"
    FOURIER = "fourier"


def cgl_nodes(N: int) -> np.ndarray:
    """Canonical Chebyshev-Gauss-Lobatto nodes cos(j*pi/N), j = 0..N.

    The nodes are strictly decreasing from +1 to -1. The endpoints (and the
    midpoint, for even N) are set exactly so that barycentric evaluation can
    branch on exact node hits without spurious out-of-domain queries.
    """
    if N < 1:
        raise ValueError(f"cgl_nodes requires N >= 1, got {N}")
    j = np.arange(N + 1)
    x = np.cos(j * np.pi / N)
    x[0] = 1.0
    x[N] = -1.0
    if N % 2 == 0:
        x[N // 2] = 0.0
    return x


def cgl_bary_weights(N: int) -> np.ndarray:
    """Barycentric weights for CGL nodes: (-1)^j, halved at both endpoints."""
    if N < 1:
        raise ValueError(f"cgl_bary_weights requires N >= 1, got {N}")
    w = np.ones(N + 1)
    w[1::2] = -1.0
    w[0] *= 0.5
    w[N] *= 0.5
    return w


def fourier_nodes(N: int) -> np.ndarray:
    """Canonical equispaced periodic nodes 2*pi*j/N, j = 0..N-1."""
    if N < 2:
        raise ValueError(f"fourier_nodes requires N >= 2, got {N}")
    return 2.0 * np.pi * np.arange(N) / N


def clenshaw_curtis_weights(N: int) -> np.ndarray:
    """Diagonal of the population Gram on CGL nodes: pi/(2N) at endpoints, pi/N inside."""
    if N < 1:
        raise ValueError(f"clenshaw_curtis_weights requires N >= 1, got {N}")
    w = np.full(N + 1, np.pi / N)
    w[0] = np.pi / (2 * N)
    w[N] = np.pi / (2 * N)
    return w


@dataclass(frozen=True, eq=False)
class Grid1D:
    """One grid axis: basis kind, node-count parameter, physical interval.

    ``n`` is the node-count parameter: a Chebyshev axis holds ``n + 1`` nodes,
    a Fourier axis holds ``n`` nodes. ``nodes`` are physical-domain
    coordinates; ``bary_weights`` is populated for Chebyshev axes only.
    """

    basis: Basis
    n: int
    interval: tuple[float, float]
    nodes: np.ndarray = field(repr=False)
    bary_weights: np.ndarray | None = field(repr=False)

    def __eq__(self, other) -> bool:
        """Structural equality on (basis, n, interval); node arrays are derived."""
        if not isinstance(other, Grid1D):
            return NotImplemented
        return (
            self.basis is other.basis
            and self.n == other.n
            and self.interval == other.interval
        )

    def __hash__(self) -> int:
        return hash((self.basis, self.n, self.interval))

    @property
    def size(self) -> int:
        return self.n + 1 if self.basis is Basis.CHEBYSHEV else self.n

    @property
    def canonical_nodes(self) -> np.ndarray:
        if self.basis is Basis.CHEBYSHEV:
            return cgl_nodes(self.n)
        return fourier_nodes(self.n)

    @property
    def length(self) -> float:
        a, b = self.interval
        return b - a

    @property
    def deriv_scale(self) -> float:
        """Factor applied per derivative order when mapping canonical -> physical."""
        if self.basis is Basis.CHEBYSHEV:
            return 2.0 / self.length
        return 2.0 * np.pi / self.length

    def to_jsonable(self) -> dict:
        return {
            "basis": self.basis.value,
            "n": self.n,
            "interval": list(self.interval),
        }

    @staticmethod
    def from_jsonable(d: dict) -> "Grid1D":
        basis = Basis(d["basis"])
        a, b = d["interval"]
        if basis is Basis.CHEBYSHEV:
            return chebyshev_grid(d["n"], (a, b))
        return fourier_grid(d["n"], (a, b))


def chebyshev_grid(N: int, interval: tuple[float, float] = (-1.0, 1.0)) -> Grid1D:
    """Chebyshev-Gauss-Lobatto grid with N+1 nodes on [a, b]."""
    a, b = interval
    if not (a < b):
        raise ValueError(f"interval must satisfy a < b, got {interval}")
    xc = cgl_nodes(N)
    # Convex-combination form maps the canonical endpoints exactly to a and b.
    nodes = 0.5 * (a * (1.0 - xc) + b * (1.0 + xc))
    return Grid1D(Basis.CHEBYSHEV, N, (a, b), nodes, cgl_bary_weights(N))


def fourier_grid(N: int, interval: tuple[float, float] = (0.0, 2.0 * np.pi)) -> Grid1D:
    """Equispaced periodic grid with N nodes on [a, b), b identified with a."""
    a, b = interval
    if not (a < b):
        raise ValueError(f"interval must satisfy a < b, got {interval}")
    xc = fourier_nodes(N)
    nodes = a + xc * (b - a) / (2.0 * np.pi)
    return Grid1D(Basis.FOURIER, N, (a, b), nodes, None)


def map_point(grid: Grid1D, x: float | np.ndarray) -> tuple[np.ndarray, float]:
    """Map physical coordinates into the canonical domain.

    Returns the canonical coordinate(s) and the per-order derivative scale
    (the factor by which one canonical derivative must be multiplied per
    derivative order). Fourier intervals are treated periodically; Chebyshev
    queries must lie inside the interval up to a small rounding tolerance.
    """
    a, b = grid.interval
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite query point")
    if grid.basis is Basis.CHEBYSHEV:
        tol = INTERVAL_TOL * (b - a)
        if np.any(x < a - tol) or np.any(x > b + tol):
            raise ValueError(
                f"point outside interval [{a}, {b}] beyond tolerance"
            )
        xt = 2.0 * (x - a) / (b - a) - 1.0
        xt = np.clip(xt, -1.0, 1.0)
        return xt, 2.0 / (b - a)
    xt = 2.0 * np.pi * (x - a) / (b - a)
    xt = np.mod(xt, 2.0 * np.pi)
    return xt, 2.0 * np.pi / (b - a)


@dataclass(frozen=True, eq=False)
class TensorGrid:
    """Ordered product of Grid1D axes defining a multidimensional grid."""

    axes: tuple[Grid1D, ...]

    def __init__(self, axes) -> None:
        object.__setattr__(self, "axes", tuple(axes))

    def __eq__(self, other) -> bool:
        if not isinstance(other, TensorGrid):
            return NotImplemented
        return self.axes == other.axes

    def __hash__(self) -> int:
        return hash(self.axes)

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.size for ax in self.axes)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    def meshgrid(self) -> list[np.ndarray]:
        """Physical node coordinates, one array of grid shape per axis."""
        return list(np.meshgrid(*[ax.nodes for ax in self.axes], indexing="ij"))

    def node_points(self) -> np.ndarray:
        """All grid nodes as a (size, ndim) array, in C order of the shape."""
        mesh = self.meshgrid()
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def to_jsonable(self) -> dict:
        return {"axes": [ax.to_jsonable() for ax in self.axes]}

    @staticmethod
    def from_jsonable(d: dict) -> "TensorGrid":
        return TensorGrid([Grid1D.from_jsonable(a) for a in d["axes"]])
