"""Linear maps from parameter tensors to residual rows.

Every evaluation/differentiation of a node-value model is linear in the
parameters, so losses, gradients, and Gauss-Newton products reduce to the
forward and transpose actions collected here. Operators accept an optional
trailing block axis so sketches of Hessian-vector products stay vectorized.
"""

from __future__ import annotations

import math

import numpy as np

from .interp import contract_point_eval, contract_point_eval_adjoint


class TensorOp:
    """Axis-factored map: contract each grid axis with a dense matrix.

    ``mats[i]`` is applied along axis i (None means identity). Output rows
    are the flattened product of per-axis row counts.
    """

    def __init__(self, in_shape: tuple[int, ...], mats: list[np.ndarray | None]):
        if len(mats) != len(in_shape):
            raise ValueError("one matrix (or None) per grid axis required")
        self.in_shape = tuple(in_shape)
        self.mats = mats
        self.row_shape = tuple(
            m.shape[0] if m is not None else n for m, n in zip(mats, in_shape)
        )
        self.out_size = math.prod(self.row_shape)

    def matvec(self, theta: np.ndarray) -> np.ndarray:
        out = theta
        for axis, m in enumerate(self.mats):
            if m is not None:
                out = np.moveaxis(np.tensordot(m, out, axes=([1], [axis])), 0, axis)
        extra = out.shape[len(self.in_shape):]
        return out.reshape((self.out_size,) + extra)

    def rmatvec(self, w: np.ndarray) -> np.ndarray:
        extra = w.shape[1:]
        out = w.reshape(self.row_shape + extra)
        for axis, m in enumerate(self.mats):
            if m is not None:
                out = np.moveaxis(np.tensordot(m.T, out, axes=([1], [axis])), 0, axis)
        return out


class PointOp:
    """Row-wise tensor contraction against per-axis matrices at scattered points."""

    def __init__(self, in_shape: tuple[int, ...], mats: list[np.ndarray]):
        self.in_shape = tuple(in_shape)
        self.mats = mats
        self.out_size = mats[0].shape[0]

    def matvec(self, theta: np.ndarray) -> np.ndarray:
        return contract_point_eval(self.mats, theta)

    def rmatvec(self, w: np.ndarray) -> np.ndarray:
        return contract_point_eval_adjoint(self.mats, w, self.in_shape)


class SumOp:
    """Linear combination of operators with identical row spaces."""

    def __init__(self, terms: list[tuple[float, TensorOp | PointOp]]):
        if not terms:
            raise ValueError("empty operator sum")
        self.terms = terms
        self.in_shape = terms[0][1].in_shape
        self.out_size = terms[0][1].out_size

    def matvec(self, theta: np.ndarray) -> np.ndarray:
        out = self.terms[0][0] * self.terms[0][1].matvec(theta)
        for c, op in self.terms[1:]:
            out = out + c * op.matvec(theta)
        return out

    def rmatvec(self, w: np.ndarray) -> np.ndarray:
        out = self.terms[0][0] * self.terms[0][1].rmatvec(w)
        for c, op in self.terms[1:]:
            out = out + c * op.rmatvec(w)
        return out


class MaskedOp:
    """Row subset of another operator (e.g. interior-mask filtering)."""

    def __init__(self, base, keep: np.ndarray):
        self.base = base
        self.keep = np.asarray(keep, dtype=bool)
        self.in_shape = base.in_shape
        self.out_size = int(self.keep.sum())

    def matvec(self, theta: np.ndarray) -> np.ndarray:
        return self.base.matvec(theta)[self.keep]

    def rmatvec(self, w: np.ndarray) -> np.ndarray:
        full = np.zeros((self.base.out_size,) + w.shape[1:])
        full[self.keep] = w
        return self.base.rmatvec(full)


def dense_matrix(op, in_shape: tuple[int, ...]) -> np.ndarray:
    """Materialize an operator as a dense (out_size, prod(in_shape)) matrix."""
    n = math.prod(in_shape)
    eye = np.eye(n).reshape(in_shape + (n,))
    return op.matvec(eye)


def broadcast_rows(u: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Multiply row data u (shape (M,)) into x (shape (M, *extra))."""
    return u.reshape(u.shape + (1,) * (x.ndim - 1)) * x
