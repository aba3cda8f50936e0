"""Interpolant evaluation from node values.

Barycentric Chebyshev evaluation, balanced trigonometric (Fourier)
evaluation, and their tensor-product composition. All evaluators are batch
first: they accept vectors of query points and return vectors of values.
Everything here is linear in the node values, which is what makes analytic
gradient assembly possible downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Basis, Grid1D, TensorGrid, map_point
from .transforms import fft

# A query counts as an exact node hit when the canonical distance is below
# this; exact equality is fragile under the affine map's rounding.
NODE_HIT_TOL = 1e-14


@dataclass
class NodeValues:
    """Function values attached to a grid (1-D or tensor-product)."""

    grid: Grid1D | TensorGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        shape = (self.grid.size,) if isinstance(self.grid, Grid1D) else self.grid.shape
        if self.values.shape != shape:
            self.values = self.values.reshape(shape)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("node values must be finite")


def cheb_cardinal_matrix(xt: np.ndarray, nodes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Rows of Lagrange cardinal functions at canonical points xt.

    Row i evaluates to e_j exactly when xt[i] hits node j, so interpolation
    at the nodes reproduces node data bitwise.
    """
    xt = np.atleast_1d(np.asarray(xt, dtype=float))
    diff = xt[:, None] - nodes[None, :]
    hits = np.abs(diff) <= NODE_HIT_TOL
    hit_rows = hits.any(axis=1)
    diff[hits] = 1.0  # avoid divide-by-zero; rows overwritten below
    C = weights[None, :] / diff
    E = C / C.sum(axis=1, keepdims=True)
    if hit_rows.any():
        E[hit_rows] = 0.0
        rows, cols = np.nonzero(hits)
        E[rows, cols] = 1.0
    return E


def fourier_cardinal_matrix(xt: np.ndarray, N: int) -> np.ndarray:
    """Rows evaluating the balanced trigonometric interpolant at canonical xt.

    Coefficients with index k > N/2 act as negative frequencies k - N; for
    even N the Nyquist coefficient is split symmetrically so real node data
    yields a real interpolant.
    """
    xt = np.atleast_1d(np.asarray(xt, dtype=float))
    k = np.arange(N)
    k_eff = np.where(k <= N // 2, k, k - N)
    phases = np.exp(1j * np.outer(xt, k_eff))
    if N % 2 == 0:
        # Split exp(i*(N/2)*x) and exp(-i*(N/2)*x) evenly at the Nyquist index.
        phases[:, N // 2] = np.cos((N // 2) * xt)
    W = np.exp(-2j * np.pi * np.outer(k, np.arange(N)) / N)
    E = np.real(phases @ W) / N
    nodes = 2.0 * np.pi * np.arange(N) / N
    diff = np.abs(xt[:, None] - nodes[None, :])
    hits = np.minimum(diff, 2.0 * np.pi - diff) <= NODE_HIT_TOL
    hit_rows = hits.any(axis=1)
    if hit_rows.any():
        E[hit_rows] = 0.0
        rows, cols = np.nonzero(hits)
        E[rows, cols] = 1.0
    return E


def axis_eval_matrix(grid: Grid1D, x: np.ndarray) -> np.ndarray:
    """Evaluation matrix of one axis at physical points x: (len(x), grid.size)."""
    xt, _ = map_point(grid, x)
    if grid.basis is Basis.CHEBYSHEV:
        return cheb_cardinal_matrix(xt, grid.canonical_nodes, grid.bary_weights)
    return fourier_cardinal_matrix(xt, grid.n)


def bary_eval(nv: NodeValues, x: float | np.ndarray) -> float | np.ndarray:
    """Evaluate a Chebyshev-axis interpolant at physical point(s) x."""
    grid = nv.grid
    if not isinstance(grid, Grid1D) or grid.basis is not Basis.CHEBYSHEV:
        raise TypeError("bary_eval requires node values on a Chebyshev Grid1D")
    scalar = np.isscalar(x) or np.ndim(x) == 0
    xt, _ = map_point(grid, np.atleast_1d(x))
    E = cheb_cardinal_matrix(xt, grid.canonical_nodes, grid.bary_weights)
    out = E @ nv.values
    # Exact-hit rows must return the stored value bitwise.
    hits = np.abs(xt[:, None] - grid.canonical_nodes[None, :]) <= NODE_HIT_TOL
    rows, cols = np.nonzero(hits)
    out[rows] = nv.values[cols]
    return float(out[0]) if scalar else out


def fourier_eval(nv: NodeValues, x: float | np.ndarray) -> float | np.ndarray:
    """Evaluate a trigonometric interpolant at physical point(s) x (periodic)."""
    grid = nv.grid
    if not isinstance(grid, Grid1D) or grid.basis is not Basis.FOURIER:
        raise TypeError("fourier_eval requires node values on a Fourier Grid1D")
    scalar = np.isscalar(x) or np.ndim(x) == 0
    xt, _ = map_point(grid, np.atleast_1d(x))
    N = grid.n
    coeffs = fft(nv.values).values / N
    k = np.arange(N)
    k_eff = np.where(k <= N // 2, k, k - N)
    phases = np.exp(1j * np.outer(xt, k_eff))
    if N % 2 == 0:
        phases[:, N // 2] = np.cos((N // 2) * xt)
    out = np.real(phases @ coeffs)
    nodes = 2.0 * np.pi * np.arange(N) / N
    diff = np.abs(xt[:, None] - nodes[None, :])
    hits = np.minimum(diff, 2.0 * np.pi - diff) <= NODE_HIT_TOL
    rows, cols = np.nonzero(hits)
    out[rows] = nv.values[cols]
    return float(out[0]) if scalar else out


def point_eval_matrices(grid: TensorGrid, points: np.ndarray) -> list[np.ndarray]:
    """Per-axis evaluation matrices for a batch of coordinate tuples."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != grid.ndim:
        raise ValueError(
            f"points have {points.shape[1]} coordinates, grid has {grid.ndim} axes"
        )
    return [axis_eval_matrix(ax, points[:, i]) for i, ax in enumerate(grid.axes)]


def contract_point_eval(mats: list[np.ndarray], values: np.ndarray) -> np.ndarray:
    """Contract a values tensor against per-axis point-evaluation matrices.

    values may carry extra trailing axes (e.g. a block of parameter vectors);
    the contraction broadcasts over them.
    """
    tmp = mats[0] @ values.reshape(values.shape[0], -1)
    tmp = tmp.reshape((mats[0].shape[0],) + values.shape[1:])
    for E in mats[1:]:
        # tmp[i, j, ...] with E[i, j] -> sum over j, keeping point index i.
        tmp = np.einsum("ij,ij...->i...", E, tmp)
    return tmp


def contract_point_eval_adjoint(
    mats: list[np.ndarray], w: np.ndarray, shape: tuple[int, ...]
) -> np.ndarray:
    """Adjoint of :func:`contract_point_eval`: scatter weights back to a tensor."""
    d = len(mats)
    tmp = w
    for axis in range(d - 1, 0, -1):
        # Inverse of the einsum contraction over axis `axis`.
        tmp = np.einsum("ij,i...->ij...", mats[axis], tmp)
    out = mats[0].T @ tmp.reshape(tmp.shape[0], -1)
    return out.reshape(shape + w.shape[1:])


def tensor_eval(nv: NodeValues, points: np.ndarray) -> float | np.ndarray:
    """Evaluate a tensor-product interpolant at one point or a batch of points."""
    grid = nv.grid
    if not isinstance(grid, TensorGrid):
        raise TypeError("tensor_eval requires node values on a TensorGrid")
    points = np.asarray(points, dtype=float)
    scalar = points.ndim == 1
    mats = point_eval_matrices(grid, points)
    out = contract_point_eval(mats, nv.values)
    return float(out[0]) if scalar else out
