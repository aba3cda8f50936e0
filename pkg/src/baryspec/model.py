"""Trainable node-value models on tensor-product grids.

The model's parameters are literally the solution values at the grid nodes;
evaluation interpolates them and differentiation applies the configured
per-axis derivative operators before interpolating. Both operations are
linear in the parameters, so gradients are assembled from operator
transposes and no autodiff framework is involved.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass

import numpy as np

from .diff import DiffMethod, apply_along_axis, default_method, make_diff_operator
from .grid import TensorGrid
from .interp import NodeValues, point_eval_matrices, tensor_eval
from .operators import PointOp, TensorOp

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class DerivSpec:
    """Per-axis derivative method choice."""

    method: DiffMethod
    half_bandwidth: int | None = None

    @staticmethod
    def spectral() -> "DerivSpec":
        return DerivSpec(DiffMethod.CHEB_SPECTRAL)

    @staticmethod
    def fourier() -> "DerivSpec":
        return DerivSpec(DiffMethod.FOURIER_MATRIX)

    @staticmethod
    def fd(half_bandwidth: int) -> "DerivSpec":
        return DerivSpec(DiffMethod.FINITE_DIFFERENCE, half_bandwidth)


class GridModel:
    """Vector of trainable function values on a TensorGrid."""

    def __init__(
        self,
        grid: TensorGrid,
        theta: np.ndarray | None = None,
        deriv_config: tuple[DerivSpec, ...] | None = None,
    ):
        self.grid = grid
        if deriv_config is None:
            deriv_config = tuple(
                DerivSpec(default_method(ax)) for ax in grid.axes
            )
        if len(deriv_config) != grid.ndim:
            raise ValueError("deriv_config must match grid dimensionality")
        self.deriv_config = tuple(deriv_config)
        if theta is None:
            theta = np.zeros(grid.shape)
        theta = np.asarray(theta, dtype=float).reshape(grid.shape)
        if not np.all(np.isfinite(theta)):
            raise ValueError("model parameters must be finite")
        self._theta = theta
        self._axis_mats: dict[tuple[int, int], np.ndarray] = {}

    @property
    def theta(self) -> np.ndarray:
        return self._theta

    @theta.setter
    def theta(self, value: np.ndarray) -> None:
        value = np.asarray(value, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(value)):
            raise ValueError("rejecting non-finite parameter update")
        self._theta = value

    @property
    def n_params(self) -> int:
        return self.grid.size

    def axis_matrix(self, axis: int, m: int) -> np.ndarray:
        """Physical-domain derivative matrix for one axis (cached)."""
        key = (axis, m)
        if key not in self._axis_mats:
            spec = self.deriv_config[axis]
            op = make_diff_operator(
                self.grid.axes[axis], m, spec.method, spec.half_bandwidth
            )
            self._axis_mats[key] = op.physical_matrix
        return self._axis_mats[key]

    def deriv_tensor_op(self, multi_order: tuple[int, ...]) -> TensorOp:
        """Node-to-node derivative operator for a per-axis order tuple."""
        self._check_orders(multi_order)
        mats = [
            self.axis_matrix(axis, m) if m > 0 else None
            for axis, m in enumerate(multi_order)
        ]
        return TensorOp(self.grid.shape, mats)

    def deriv_point_op(self, multi_order: tuple[int, ...], points: np.ndarray) -> PointOp:
        """Operator taking theta to derivative values at scattered points."""
        self._check_orders(multi_order)
        evals = point_eval_matrices(self.grid, points)
        mats = [
            E @ self.axis_matrix(axis, m) if m > 0 else E
            for axis, (E, m) in enumerate(zip(evals, multi_order))
        ]
        return PointOp(self.grid.shape, mats)

    def _check_orders(self, multi_order: tuple[int, ...]) -> None:
        if len(multi_order) != self.grid.ndim:
            raise ValueError("one derivative order per grid axis required")
        if any(m < 0 for m in multi_order):
            raise ValueError("derivative orders must be >= 0")

    def evaluate(self, points: np.ndarray) -> float | np.ndarray:
        """Interpolate the current parameters at a batch of domain points."""
        return tensor_eval(NodeValues(self.grid, self._theta), points)

    def differentiate(
        self, multi_order: tuple[int, ...], points: np.ndarray
    ) -> float | np.ndarray:
        """Mixed partial derivative of the interpolant at a batch of points."""
        self._check_orders(multi_order)
        if all(m == 0 for m in multi_order):
            return self.evaluate(points)
        values = self._theta
        for axis, m in enumerate(multi_order):
            if m > 0:
                values = apply_along_axis(self.axis_matrix(axis, m), values, axis)
        return tensor_eval(NodeValues(self.grid, values), points)

    def node_derivative(self, multi_order: tuple[int, ...]) -> np.ndarray:
        """Derivative values at the grid nodes themselves."""
        return self.deriv_tensor_op(multi_order).matvec(self._theta).reshape(
            self.grid.shape
        )

    def copy(self) -> "GridModel":
        return GridModel(self.grid, self._theta.copy(), self.deriv_config)

    def save(self, path: str) -> None:
        """Write a versioned checkpoint: JSON header plus base64 float64 payload."""
        payload = base64.b64encode(self._theta.astype("<f8").tobytes()).decode("ascii")
        doc = {
            "format": "grid-model-checkpoint",
            "version": CHECKPOINT_VERSION,
            "grid": self.grid.to_jsonable(),
            "deriv_config": [
                {"method": s.method.value, "half_bandwidth": s.half_bandwidth}
                for s in self.deriv_config
            ],
            "theta_b64": payload,
        }
        with open(path, "w") as f:
            json.dump(doc, f)

    @staticmethod
    def load(path: str) -> "GridModel":
        with open(path) as f:
            doc = json.load(f)
        if doc.get("format") != "grid-model-checkpoint":
            raise ValueError("not a model checkpoint file")
        if doc.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {doc.get('version')}")
        grid = TensorGrid.from_jsonable(doc["grid"])
        deriv_config = tuple(
            DerivSpec(DiffMethod(s["method"]), s["half_bandwidth"])
            for s in doc["deriv_config"]
        )
        theta = np.frombuffer(
            base64.b64decode(doc["theta_b64"]), dtype="<f8"
        ).reshape(grid.shape)
        return GridModel(grid, theta.copy(), deriv_config)


def warm_start(model: GridModel, source) -> GridModel:
    """Fill a model's parameters with a source function's values at the nodes.

    ``source`` may be another GridModel, a NodeValues bundle, or any callable
    over (n, ndim) point batches. The derivative configuration is preserved.
    """
    out = model.copy()
    if isinstance(source, GridModel):
        if source.grid == model.grid:
            out.theta = source.theta.copy()
            return out
        source_fn = source.evaluate
    elif isinstance(source, NodeValues):
        source_fn = lambda pts: tensor_eval(source, pts)
    elif callable(source):
        source_fn = source
    else:
        raise TypeError(f"cannot warm-start from {type(source).__name__}")
    pts = model.grid.node_points()
    values = np.asarray(source_fn(pts), dtype=float)
    if values.shape != (model.grid.size,) or not np.all(np.isfinite(values)):
        raise ValueError("source evaluation failed over the model grid")
    out.theta = values.reshape(model.grid.shape)
    return out
