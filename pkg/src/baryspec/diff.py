"""Derivatives of node-value data.

Three routes: the FFT-based Chebyshev spectral derivative (even extension,
frequency multiply, chain-rule correction), the explicit cotangent Fourier
differentiation matrix, and Fornberg finite-difference matrices of arbitrary
order and stencil width. Axis-wise composition over tensor grids, with
physical-domain rescaling, lives here too.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .grid import Basis, Grid1D, TensorGrid, cgl_nodes
from .interp import NodeValues
from .transforms import even_extension, fft, ifft


class DiffMethod(enum.Enum):
    CHEB_SPECTRAL = "cheb_spectral"
    FOURIER_MATRIX = "fourier_matrix"
    FINITE_DIFFERENCE = "finite_difference"


def cheb_fft_derivative(values: np.ndarray) -> np.ndarray:
    """First derivative at CGL nodes (canonical domain) in O(N log N).

    Accepts a vector of N+1 node values or a batch with the node axis last.
    The Nyquist mode's derivative contribution is zeroed (its sign is
    ambiguous; zeroing preserves realness and polynomial exactness), and the
    endpoint values use the Chebyshev-series formulas d_0 = sum n^2 a_n,
    d_N = sum (-1)^{n+1} n^2 a_n.
    """
    values = np.asarray(values, dtype=float)
    N = values.shape[-1] - 1
    if N < 2:
        raise ValueError("cheb_fft_derivative requires N >= 2")
    V = even_extension(values)
    Vhat = np.fft.fft(V, axis=-1)
    k = np.arange(2 * N)
    k_eff = np.where(k <= N, k, k - 2 * N).astype(float)
    k_eff[N] = 0.0
    W = np.real(np.fft.ifft(1j * k_eff * Vhat, axis=-1))

    x = cgl_nodes(N)
    d = np.empty_like(values)
    interior = np.sqrt(1.0 - x[1:N] ** 2)
    d[..., 1:N] = -W[..., 1:N] / interior

    # Chebyshev coefficients under values = sum_n a_n T_n: interior modes of
    # the even-extension spectrum scaled by 1/N, the first and last by 1/(2N).
    a = np.real(Vhat[..., : N + 1]) / N
    a[..., 0] *= 0.5
    a[..., N] *= 0.5
    n2 = np.arange(N + 1) ** 2
    d[..., 0] = np.sum(n2 * a, axis=-1)
    signs = (-1.0) ** (np.arange(N + 1) + 1)
    d[..., N] = np.sum(signs * n2 * a, axis=-1)
    return d


def fourier_diff_matrix(N: int) -> np.ndarray:
    """Cotangent-form first-derivative matrix on N equispaced periodic nodes."""
    if N < 2:
        raise ValueError("fourier_diff_matrix requires N >= 2")
    if N % 2 == 1:
        warnings.warn(
            "odd-N Fourier differentiation matrix is experimental", stacklevel=2
        )
    i = np.arange(N)
    delta = i[:, None] - i[None, :]
    D = np.zeros((N, N))
    off = delta != 0
    D[off] = 0.5 * (-1.0) ** delta[off] / np.tan(np.pi * delta[off] / N)
    return D


def fornberg_weights(nodes: np.ndarray, z: float, m: int) -> np.ndarray:
    """Finite-difference weights on an arbitrary stencil, orders 0..m.

    Returns an (m+1, len(nodes)) array whose row q gives weights w with
    f^(q)(z) ~= sum_i w_i f(node_i), exact for polynomials up to degree
    len(nodes)-1. Fornberg's recurrence.
    """
    nodes = np.asarray(nodes, dtype=float)
    n = nodes.size
    if n < m + 1:
        raise ValueError(f"stencil of size {n} cannot produce order-{m} weights")
    if np.unique(nodes).size != n:
        raise ValueError("stencil nodes must be distinct")
    c = np.zeros((n, m + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = nodes[0] - z
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i] - z
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for q in range(mn, 0, -1):
                    c[i, q] = c1 * (q * c[i - 1, q - 1] - c5 * c[i - 1, q]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for q in range(mn, 0, -1):
                c[j, q] = (c4 * c[j, q] - q * c[j, q - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c.T


def fd_diff_matrix(grid: Grid1D, m: int, k: int) -> np.ndarray:
    """Banded Fornberg differentiation matrix of order m, half-bandwidth k.

    Non-periodic grids clip the stencil window at the boundaries; Fourier
    grids wrap periodically with uniform spacing. A global stencil (k >= N)
    reproduces spectral differentiation on polynomial data.
    """
    if 2 * k + 1 < m + 1:
        raise ValueError(f"half-bandwidth {k} too small for derivative order {m}")
    n = grid.size
    xc = grid.canonical_nodes
    D = np.zeros((n, n))
    if grid.basis is Basis.FOURIER:
        h = 2.0 * np.pi / grid.n
        offsets = np.arange(-k, k + 1)
        if 2 * k + 1 > n:
            raise ValueError("periodic stencil wider than the grid")
        w = fornberg_weights(offsets * h, 0.0, m)[m]
        for i in range(n):
            D[i, (i + offsets) % n] += w
    else:
        for i in range(n):
            lo = max(0, i - k)
            hi = min(n - 1, i + k)
            if hi - lo < m:
                raise ValueError(
                    f"clipped stencil at row {i} too small for order {m}"
                )
            w = fornberg_weights(xc[lo : hi + 1], xc[i], m)[m]
            D[i, lo : hi + 1] = w
    return D


def cheb_spectral_matrix(N: int) -> np.ndarray:
    """Dense realization of the canonical CGL first-derivative operator.

    Built by running the FFT derivative on identity columns; used where the
    transpose action or an explicit matrix is required (gradients, probes).
    """
    return cheb_fft_derivative(np.eye(N + 1)).T


@dataclass(frozen=True)
class DiffOperator:
    """A one-axis derivative operator bound to its grid.

    ``matrix`` acts on canonical node values; ``scale`` carries the
    physical-domain chain-rule factor applied once per derivative order.
    """

    method: DiffMethod
    order: int
    grid: Grid1D
    matrix: np.ndarray
    half_bandwidth: int | None = None

    @property
    def scale(self) -> float:
        return self.grid.deriv_scale**self.order

    @property
    def physical_matrix(self) -> np.ndarray:
        return self.scale * self.matrix


def make_diff_operator(
    grid: Grid1D,
    m: int,
    method: DiffMethod | str = DiffMethod.CHEB_SPECTRAL,
    half_bandwidth: int | None = None,
) -> DiffOperator:
    """Construct the order-m derivative operator for one grid axis."""
    if m < 1:
        raise ValueError("derivative order must be >= 1")
    method = DiffMethod(method)
    if method is DiffMethod.CHEB_SPECTRAL:
        if grid.basis is not Basis.CHEBYSHEV:
            raise ValueError("spectral Chebyshev derivative requires a Chebyshev axis")
        D1 = cheb_spectral_matrix(grid.n)
        D = np.linalg.matrix_power(D1, m)  # higher orders by repeated application
    elif method is DiffMethod.FOURIER_MATRIX:
        if grid.basis is not Basis.FOURIER:
            raise ValueError("Fourier differentiation matrix requires a Fourier axis")
        D = np.linalg.matrix_power(fourier_diff_matrix(grid.n), m)
    else:
        if half_bandwidth is None:
            raise ValueError("finite-difference operator needs a half-bandwidth")
        D = fd_diff_matrix(grid, m, half_bandwidth)
    return DiffOperator(method, m, grid, D, half_bandwidth)


def default_method(grid: Grid1D) -> DiffMethod:
    if grid.basis is Basis.CHEBYSHEV:
        return DiffMethod.CHEB_SPECTRAL
    return DiffMethod.FOURIER_MATRIX


def apply_along_axis(matrix: np.ndarray, values: np.ndarray, axis: int) -> np.ndarray:
    """Apply a dense one-axis operator to every fiber of a tensor."""
    out = np.tensordot(matrix, values, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def axis_derivative(
    nv: NodeValues,
    axis: int,
    m: int,
    method: DiffMethod | str | None = None,
    half_bandwidth: int | None = None,
) -> NodeValues:
    """Differentiate tensor node values m times along one axis (physical units)."""
    grid = nv.grid
    if not isinstance(grid, TensorGrid):
        raise TypeError("axis_derivative requires node values on a TensorGrid")
    if not (0 <= axis < grid.ndim):
        raise ValueError(f"axis {axis} out of range for {grid.ndim}-D grid")
    g = grid.axes[axis]
    op = make_diff_operator(g, m, method or default_method(g), half_bandwidth)
    return NodeValues(grid, apply_along_axis(op.physical_matrix, nv.values, axis))
