"""Benchmark PDE problems and physics-informed loss assembly.

Each problem bundles its residual operator, initial/boundary condition
groups, exact solution (when one exists), and default hyperparameters. The
composite loss is mean-square residual over collocation points plus a
weighted mean-square initial/boundary mismatch; gradients and Gauss-Newton
products are assembled analytically through the operator transposes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import Basis, Grid1D, TensorGrid, chebyshev_grid, fourier_grid
from .model import DerivSpec, GridModel
from .operators import MaskedOp, PointOp, SumOp, TensorOp, broadcast_rows


# ---------------------------------------------------------------------------
# Collocation sampling
# ---------------------------------------------------------------------------

class CollocationKind(enum.Enum):
    NODAL = "nodal"
    UNIFORM_RANDOM = "uniform"
    CHEBYSHEV_WEIGHTED = "chebyshev"


@dataclass(frozen=True)
class CollocationScheme:
    kind: CollocationKind = CollocationKind.NODAL
    count: int = 0
    seed: int = 0


def sample_collocation(
    scheme: CollocationScheme,
    grid: TensorGrid,
    interior_mask: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray | None:
    """Draw collocation points; returns None for the nodal scheme.

    Nodal collocation is handled without materializing points (the residual
    operators act on node values directly); masked problems filter nodes via
    ``interior_mask`` inside the residual instead.
    """
    if scheme.kind is CollocationKind.NODAL:
        return None
    if scheme.count < 1:
        raise ValueError("random collocation requires count >= 1")
    rng = np.random.default_rng(scheme.seed)
    cols = []
    for ax in grid.axes:
        a, b = ax.interval
        if scheme.kind is CollocationKind.CHEBYSHEV_WEIGHTED and ax.basis is Basis.CHEBYSHEV:
            xt = np.cos(rng.uniform(0.0, np.pi, scheme.count))
            cols.append(0.5 * (a * (1 - xt) + b * (1 + xt)))
        else:
            cols.append(rng.uniform(a, b, scheme.count))
    pts = np.column_stack(cols)
    if interior_mask is not None:
        pts = pts[interior_mask(pts)]
    return pts


def nodal_points(grid: TensorGrid, interior_mask=None) -> np.ndarray:
    """Grid nodes as explicit points, filtered by the interior mask."""
    pts = grid.node_points()
    if interior_mask is not None:
        pts = pts[interior_mask(pts)]
    return pts


# ---------------------------------------------------------------------------
# Residual operators
# ---------------------------------------------------------------------------

class LinearResidual:
    """r(theta) = A theta - rhs for a fixed operator A."""

    linear = True

    def __init__(self, op, rhs: np.ndarray | float = 0.0):
        self.op = op
        self.rhs = rhs
        self.size = op.out_size

    def value(self, theta: np.ndarray) -> np.ndarray:
        return self.op.matvec(theta) - self.rhs

    def jvp(self, theta: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.op.matvec(v)

    def vjp(self, theta: np.ndarray, w: np.ndarray) -> np.ndarray:
        return self.op.rmatvec(w)

    def curvature_vjp(self, theta, r, v):
        return 0.0


class ReactionResidual:
    """r = u_t - rho * u * (1 - u) at the collocation rows."""

    linear = False

    def __init__(self, dt_op, sel_op, rho: float):
        self.dt_op = dt_op
        self.sel_op = sel_op
        self.rho = rho
        self.size = dt_op.out_size

    def value(self, theta):
        u = self.sel_op.matvec(theta)
        return self.dt_op.matvec(theta) - self.rho * u * (1.0 - u)

    def jvp(self, theta, v):
        u = self.sel_op.matvec(theta)
        return self.dt_op.matvec(v) - broadcast_rows(
            self.rho * (1.0 - 2.0 * u), self.sel_op.matvec(v)
        )

    def vjp(self, theta, w):
        u = self.sel_op.matvec(theta)
        return self.dt_op.rmatvec(w) - self.sel_op.rmatvec(
            broadcast_rows(self.rho * (1.0 - 2.0 * u), w)
        )

    def curvature_vjp(self, theta, r, v):
        # d^2 r / du^2 = 2 rho, contracted against the residual.
        rv = broadcast_rows(2.0 * self.rho * r, self.sel_op.matvec(v))
        return self.sel_op.rmatvec(rv)


class BurgersResidual:
    """r = u_t + u * u_x - nu * u_xx at the collocation rows."""

    linear = False

    def __init__(self, dt_op, dx_op, dxx_op, sel_op, nu: float):
        self.dt_op = dt_op
        self.dx_op = dx_op
        self.dxx_op = dxx_op
        self.sel_op = sel_op
        self.nu = nu
        self.size = dt_op.out_size

    def value(self, theta):
        u = self.sel_op.matvec(theta)
        ux = self.dx_op.matvec(theta)
        return self.dt_op.matvec(theta) + u * ux - self.nu * self.dxx_op.matvec(theta)

    def jvp(self, theta, v):
        u = self.sel_op.matvec(theta)
        ux = self.dx_op.matvec(theta)
        return (
            self.dt_op.matvec(v)
            + broadcast_rows(u, self.dx_op.matvec(v))
            + broadcast_rows(ux, self.sel_op.matvec(v))
            - self.nu * self.dxx_op.matvec(v)
        )

    def vjp(self, theta, w):
        u = self.sel_op.matvec(theta)
        ux = self.dx_op.matvec(theta)
        return (
            self.dt_op.rmatvec(w)
            + self.dx_op.rmatvec(broadcast_rows(u, w))
            + self.sel_op.rmatvec(broadcast_rows(ux, w))
            - self.nu * self.dxx_op.rmatvec(w)
        )

    def curvature_vjp(self, theta, r, v):
        # Bilinear term: d^2 r[v, .] applied to r.
        dv = self.dx_op.matvec(v)
        sv = self.sel_op.matvec(v)
        return self.sel_op.rmatvec(broadcast_rows(r, dv)) + self.dx_op.rmatvec(
            broadcast_rows(r, sv)
        )


@dataclass
class IbcGroup:
    """One initial/boundary condition group: linear op plus target values."""

    name: str
    op: TensorOp | PointOp | SumOp
    target: np.ndarray


# ---------------------------------------------------------------------------
# Composite loss
# ---------------------------------------------------------------------------

class LossFunction:
    """Physics loss L = mean(r^2) + lambda_ibc * mean(s^2) with analytic gradients."""

    def __init__(self, residual, groups: list[IbcGroup], lambda_ibc: float):
        if lambda_ibc <= 0:
            raise ValueError("lambda_ibc must be positive")
        if residual.size == 0:
            raise ValueError("empty collocation set")
        self.residual = residual
        self.groups = groups
        self.lambda_ibc = lambda_ibc
        self.n_ibc = sum(g.op.out_size for g in groups)

    @property
    def is_quadratic(self) -> bool:
        return self.residual.linear

    def ibc_vec(self, theta: np.ndarray) -> np.ndarray:
        if not self.groups:
            return np.zeros(0)
        return np.concatenate([g.op.matvec(theta) - g.target for g in self.groups])

    def value(self, theta: np.ndarray) -> float:
        r = self.residual.value(theta)
        out = float(np.mean(r**2))
        if self.n_ibc:
            s = self.ibc_vec(theta)
            out += self.lambda_ibc * float(np.mean(s**2))
        return out

    def value_grad(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        r = self.residual.value(theta)
        val = float(np.mean(r**2))
        grad = (2.0 / r.size) * self.residual.vjp(theta, r)
        if self.n_ibc:
            c = self.lambda_ibc * 2.0 / self.n_ibc
            sq = 0.0
            for g in self.groups:
                s = g.op.matvec(theta) - g.target
                sq += float(np.sum(s**2))
                grad = grad + c * g.op.rmatvec(s)
            val += self.lambda_ibc * sq / self.n_ibc
        return val, grad

    def hvp(self, theta: np.ndarray, v: np.ndarray, mode: str = "gauss_newton") -> np.ndarray:
        """Hessian-vector product; v may carry a trailing block axis."""
        r = self.residual.value(theta)
        out = (2.0 / r.size) * self.residual.vjp(theta, self.residual.jvp(theta, v))
        if mode == "exact" and not self.residual.linear:
            out = out + (2.0 / r.size) * self.residual.curvature_vjp(theta, r, v)
        elif mode not in ("gauss_newton", "exact"):
            raise ValueError(f"unknown hvp mode {mode!r}")
        if self.n_ibc:
            c = self.lambda_ibc * 2.0 / self.n_ibc
            for g in self.groups:
                out = out + c * g.op.rmatvec(g.op.matvec(v))
        return out


# ---------------------------------------------------------------------------
# Problem definitions
# ---------------------------------------------------------------------------

@dataclass
class PdeProblem:
    """One benchmark: residual operator, conditions, exact solution, defaults."""

    name: str
    intervals: tuple[tuple[float, float], ...]
    bases: tuple[Basis, ...]
    default_n: tuple[int, ...]
    default_deriv: tuple[DerivSpec, ...]
    default_lambda_ibc: float
    default_optimizer: dict
    is_linear: bool
    residual_factory: Callable
    ibc_factory: Callable
    exact: Callable[[np.ndarray], np.ndarray] | None = None
    interior_mask: Callable[[np.ndarray], np.ndarray] | None = None
    params: dict = field(default_factory=dict)
    reference: tuple[np.ndarray, np.ndarray] | None = None

    def default_grid(self, n: tuple[int, ...] | None = None) -> TensorGrid:
        n = n or self.default_n
        axes = []
        for ni, basis, iv in zip(n, self.bases, self.intervals):
            if basis is Basis.CHEBYSHEV:
                axes.append(chebyshev_grid(ni, iv))
            else:
                axes.append(fourier_grid(ni, iv))
        return TensorGrid(axes)

    def default_model(self, grid: TensorGrid | None = None) -> GridModel:
        return GridModel(grid or self.default_grid(), deriv_config=self.default_deriv)

    def make_loss(
        self,
        model: GridModel,
        lambda_ibc: float | None = None,
        scheme: CollocationScheme | None = None,
    ) -> LossFunction:
        scheme = scheme or CollocationScheme()
        pts = sample_collocation(scheme, model.grid, self.interior_mask)
        residual = self.residual_factory(self, model, pts)
        groups = self.ibc_factory(self, model)
        lam = self.default_lambda_ibc if lambda_ibc is None else lambda_ibc
        return LossFunction(residual, groups, lam)


def _term_op(problem: PdeProblem, model: GridModel, orders, pts):
    """Derivative operator at either the (masked) nodes or scattered points."""
    if pts is None:
        op = model.deriv_tensor_op(tuple(orders))
        if problem.interior_mask is not None:
            keep = problem.interior_mask(model.grid.node_points())
            op = MaskedOp(op, keep)
        return op
    return model.deriv_point_op(tuple(orders), pts)


def _boundary_row(grid1d: Grid1D, side: str) -> np.ndarray:
    """Unit row selecting the grid node at the interval's lower/upper end."""
    if grid1d.basis is not Basis.CHEBYSHEV:
        raise ValueError("boundary rows only exist on non-periodic axes")
    row = np.zeros((1, grid1d.size))
    # Canonical CGL nodes descend from +1 to -1, so index N is the lower end.
    row[0, grid1d.n if side == "lower" else 0] = 1.0
    return row


# -- convection --------------------------------------------------------------

def _convection_residual(problem, model, pts):
    c = problem.params["c"]
    op = SumOp([
        (1.0, _term_op(problem, model, (1, 0), pts)),
        (c, _term_op(problem, model, (0, 1), pts)),
    ])
    return LinearResidual(op)


def _convection_ibc(problem, model):
    tg = model.grid
    row = _boundary_row(tg.axes[0], "lower")  # t = 0 plane
    op = TensorOp(tg.shape, [row, None])
    x = tg.axes[1].nodes
    return [IbcGroup("initial", op, np.sin(x))]


def convection_problem(c: float = 40.0) -> PdeProblem:
    if c == 80.0:
        default_n, steps = (161, 160), 2500
    else:
        default_n, steps = (81, 80), 350

    def exact(pts):
        pts = np.atleast_2d(pts)
        return np.sin(pts[:, 1] - c * pts[:, 0])

    return PdeProblem(
        name="convection",
        intervals=((0.0, 1.0), (0.0, 2.0 * np.pi)),
        bases=(Basis.CHEBYSHEV, Basis.FOURIER),
        default_n=default_n,
        default_deriv=(DerivSpec.spectral(), DerivSpec.fourier()),
        default_lambda_ibc=1.0,
        default_optimizer={"kind": "nncg", "steps": steps, "rank": 1000, "cg_iters": 100},
        is_linear=True,
        residual_factory=_convection_residual,
        ibc_factory=_convection_ibc,
        exact=exact,
        params={"c": c},
    )


# -- reaction ----------------------------------------------------------------

def _reaction_h(x: np.ndarray) -> np.ndarray:
    return np.exp(-((x - np.pi) ** 2) / (2.0 * (np.pi / 4.0) ** 2))


def _reaction_residual(problem, model, pts):
    return ReactionResidual(
        _term_op(problem, model, (1, 0), pts),
        _term_op(problem, model, (0, 0), pts),
        problem.params["rho"],
    )


def _reaction_ibc(problem, model):
    tg = model.grid
    t_row = _boundary_row(tg.axes[0], "lower")
    ic_op = TensorOp(tg.shape, [t_row, None])
    x = tg.axes[1].nodes
    # Chebyshev x-axis: periodicity is enforced as an explicit matching term.
    x_lo = _boundary_row(tg.axes[1], "lower")
    x_hi = _boundary_row(tg.axes[1], "upper")
    match_op = TensorOp(tg.shape, [None, x_lo - x_hi])
    nt = tg.shape[0]
    return [
        IbcGroup("initial", ic_op, _reaction_h(x)),
        IbcGroup("periodic_match", match_op, np.zeros(nt)),
    ]


def reaction_problem(rho: float = 5.0) -> PdeProblem:
    def exact(pts):
        pts = np.atleast_2d(pts)
        h = _reaction_h(pts[:, 1])
        e = np.exp(rho * pts[:, 0])
        return h * e / (h * e + 1.0 - h)

    return PdeProblem(
        name="reaction",
        intervals=((0.0, 1.0), (0.0, 2.0 * np.pi)),
        bases=(Basis.CHEBYSHEV, Basis.CHEBYSHEV),
        default_n=(81, 81),
        default_deriv=(DerivSpec.spectral(), DerivSpec.spectral()),
        default_lambda_ibc=1.0,
        default_optimizer={"kind": "nncg", "steps": 250000, "rank": 16, "cg_iters": 16},
        is_linear=False,
        residual_factory=_reaction_residual,
        ibc_factory=_reaction_ibc,
        exact=exact,
        params={"rho": rho},
    )


# -- wave --------------------------------------------------------------------

def _wave_residual(problem, model, pts):
    op = SumOp([
        (1.0, _term_op(problem, model, (2, 0), pts)),
        (-4.0, _term_op(problem, model, (0, 2), pts)),
    ])
    return LinearResidual(op)


def _wave_ibc(problem, model):
    tg = model.grid
    beta = problem.params["beta"]
    t_row = _boundary_row(tg.axes[0], "lower")
    x = tg.axes[1].nodes
    ic_target = np.sin(np.pi * x) + 0.5 * np.sin(beta * np.pi * x)
    ic_op = TensorOp(tg.shape, [t_row, None])
    vel_op = TensorOp(tg.shape, [t_row @ model.axis_matrix(0, 1), None])
    nt = tg.shape[0]
    wall_lo = TensorOp(tg.shape, [None, _boundary_row(tg.axes[1], "lower")])
    wall_hi = TensorOp(tg.shape, [None, _boundary_row(tg.axes[1], "upper")])
    return [
        IbcGroup("initial_position", ic_op, ic_target),
        IbcGroup("initial_velocity", vel_op, np.zeros(x.size)),
        IbcGroup("wall_x0", wall_lo, np.zeros(nt)),
        IbcGroup("wall_x1", wall_hi, np.zeros(nt)),
    ]


def wave_problem(beta: float = 5.0) -> PdeProblem:
    def exact(pts):
        pts = np.atleast_2d(pts)
        t, x = pts[:, 0], pts[:, 1]
        return np.sin(np.pi * x) * np.cos(2 * np.pi * t) + 0.5 * np.sin(
            beta * np.pi * x
        ) * np.cos(2 * beta * np.pi * t)

    return PdeProblem(
        name="wave",
        intervals=((0.0, 1.0), (0.0, 1.0)),
        bases=(Basis.CHEBYSHEV, Basis.CHEBYSHEV),
        default_n=(41, 41),
        default_deriv=(DerivSpec.spectral(), DerivSpec.spectral()),
        default_lambda_ibc=100.0,
        default_optimizer={"kind": "nncg", "steps": 200, "rank": 1000, "cg_iters": 1000},
        is_linear=True,
        residual_factory=_wave_residual,
        ibc_factory=_wave_ibc,
        exact=exact,
        params={"beta": beta},
    )


# -- Burgers -----------------------------------------------------------------

def _burgers_residual(problem, model, pts):
    return BurgersResidual(
        _term_op(problem, model, (1, 0), pts),
        _term_op(problem, model, (0, 1), pts),
        _term_op(problem, model, (0, 2), pts),
        _term_op(problem, model, (0, 0), pts),
        problem.params["nu"],
    )


def _burgers_ibc(problem, model):
    tg = model.grid
    t_row = _boundary_row(tg.axes[0], "lower")
    x = tg.axes[1].nodes
    ic_op = TensorOp(tg.shape, [t_row, None])
    nt = tg.shape[0]
    wall_lo = TensorOp(tg.shape, [None, _boundary_row(tg.axes[1], "lower")])
    wall_hi = TensorOp(tg.shape, [None, _boundary_row(tg.axes[1], "upper")])
    return [
        IbcGroup("initial", ic_op, -np.sin(np.pi * x)),
        IbcGroup("wall_left", wall_lo, np.zeros(nt)),
        IbcGroup("wall_right", wall_hi, np.zeros(nt)),
    ]


def burgers_problem(nu: float = 0.01 / np.pi) -> PdeProblem:
    return PdeProblem(
        name="burgers",
        intervals=((0.0, 1.0), (-1.0, 1.0)),
        bases=(Basis.CHEBYSHEV, Basis.CHEBYSHEV),
        default_n=(321, 321),
        # 1st-order, 3-point finite-difference stencils in time.
        default_deriv=(DerivSpec.fd(1), DerivSpec.spectral()),
        default_lambda_ibc=10.0,
        default_optimizer={"kind": "nncg", "steps": 850, "rank": 1000, "cg_iters": 2000},
        is_linear=False,
        residual_factory=_burgers_residual,
        ibc_factory=_burgers_ibc,
        exact=None,
        params={"nu": nu},
    )


# -- Poisson -----------------------------------------------------------------

_POISSON_CENTERS = [(0.3, 0.3), (-0.3, 0.3), (0.3, -0.3), (-0.3, -0.3)]
_POISSON_RADIUS = 0.1


def _poisson_mask(pts: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(pts)
    keep = np.ones(pts.shape[0], dtype=bool)
    for cx, cy in _POISSON_CENTERS:
        keep &= (pts[:, 0] - cx) ** 2 + (pts[:, 1] - cy) ** 2 > _POISSON_RADIUS**2
    return keep


def _poisson_residual(problem, model, pts):
    op = SumOp([
        (-1.0, _term_op(problem, model, (2, 0), pts)),
        (-1.0, _term_op(problem, model, (0, 2), pts)),
    ])
    return LinearResidual(op)


def poisson_boundary_points(
    n_side: int = 64, n_circle: int = 64
) -> tuple[np.ndarray, np.ndarray]:
    """Sample the outer square (target 1) and the four holes (target 0)."""
    s = np.arange(n_side) / n_side  # avoid double-counting corners
    lo, hi = -0.5, 0.5
    edges = np.concatenate([
        np.column_stack([lo + s, np.full(n_side, lo)]),
        np.column_stack([np.full(n_side, hi), lo + s]),
        np.column_stack([hi - s, np.full(n_side, hi)]),
        np.column_stack([np.full(n_side, lo), hi - s]),
    ])
    ang = 2 * np.pi * np.arange(n_circle) / n_circle
    circles = np.concatenate([
        np.column_stack([cx + _POISSON_RADIUS * np.cos(ang), cy + _POISSON_RADIUS * np.sin(ang)])
        for cx, cy in _POISSON_CENTERS
    ])
    return edges, circles


def _poisson_ibc(problem, model):
    n_side = problem.params.get("n_side", 64)
    n_circle = problem.params.get("n_circle", 64)
    edges, circles = poisson_boundary_points(n_side, n_circle)
    sq_op = model.deriv_point_op((0, 0), edges)
    circ_op = model.deriv_point_op((0, 0), circles)
    return [
        IbcGroup("square_boundary", sq_op, np.ones(edges.shape[0])),
        IbcGroup("hole_boundaries", circ_op, np.zeros(circles.shape[0])),
    ]


def poisson_problem() -> PdeProblem:
    return PdeProblem(
        name="poisson",
        intervals=((-0.5, 0.5), (-0.5, 0.5)),
        bases=(Basis.CHEBYSHEV, Basis.CHEBYSHEV),
        default_n=(51, 51),
        default_deriv=(DerivSpec.spectral(), DerivSpec.spectral()),
        default_lambda_ibc=100.0,
        default_optimizer={"kind": "nncg", "steps": 51000, "rank": 1000, "cg_iters": 64},
        is_linear=True,
        residual_factory=_poisson_residual,
        ibc_factory=_poisson_ibc,
        exact=None,
        interior_mask=_poisson_mask,
        params={},
    )


PROBLEM_FACTORIES = {
    "convection": convection_problem,
    "reaction": reaction_problem,
    "wave": wave_problem,
    "burgers": burgers_problem,
    "poisson": poisson_problem,
}


def make_problem(name: str, **params) -> PdeProblem:
    try:
        factory = PROBLEM_FACTORIES[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}") from None
    return factory(**params)


# ---------------------------------------------------------------------------
# Module-level operations over problems
# ---------------------------------------------------------------------------

def residual(problem: PdeProblem, model: GridModel, pts: np.ndarray | None) -> np.ndarray:
    """PDE residual of the model at collocation points (None = nodal)."""
    if pts is not None and problem.interior_mask is not None:
        if not np.all(problem.interior_mask(pts)):
            raise ValueError("collocation points include masked-out locations")
    return problem.residual_factory(problem, model, pts).value(model.theta)


def ibc_residual(problem: PdeProblem, model: GridModel) -> np.ndarray:
    """Concatenated initial/boundary mismatches across all condition groups."""
    groups = problem.ibc_factory(problem, model)
    if not groups:
        raise ValueError("problem declares no initial/boundary conditions")
    return np.concatenate([g.op.matvec(model.theta) - g.target for g in groups])


def loss(
    problem: PdeProblem,
    model: GridModel,
    lambda_ibc: float | None = None,
    scheme: CollocationScheme | None = None,
) -> tuple[float, np.ndarray]:
    """Composite loss value and its analytic gradient w.r.t. the parameters."""
    return problem.make_loss(model, lambda_ibc, scheme).value_grad(model.theta)


def exact_solution(problem: PdeProblem, pts: np.ndarray) -> np.ndarray:
    """Analytic solution at points, or reference-data error when unavailable."""
    if problem.exact is None:
        raise ValueError(
            f"problem {problem.name!r} has no analytic solution; "
            "use a reference-solution file"
        )
    return problem.exact(pts)


def load_reference(problem: PdeProblem, path: str) -> None:
    """Attach a columnar reference-solution file (coords..., u) with one header line."""
    data = np.loadtxt(path, skiprows=1)
    if data.ndim != 2 or data.shape[1] != len(problem.intervals) + 1:
        raise ValueError("reference file must have one column per axis plus values")
    problem.reference = (data[:, :-1], data[:, -1])


def evaluation_points(
    problem: PdeProblem, resolution: int = 256
) -> tuple[np.ndarray, np.ndarray] | None:
    """Dense equispaced test grid with reference values, or None if unavailable."""
    if problem.exact is not None:
        axes = [np.linspace(a, b, resolution) for a, b in problem.intervals]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        if problem.interior_mask is not None:
            pts = pts[problem.interior_mask(pts)]
        return pts, problem.exact(pts)
    if problem.reference is not None:
        pts, vals = problem.reference
        if problem.interior_mask is not None:
            keep = problem.interior_mask(pts)
            pts, vals = pts[keep], vals[keep]
        return pts, vals
    return None


def model_l2re(problem: PdeProblem, model: GridModel, resolution: int = 256) -> float:
    """L2 relative error of the model against the problem's reference."""
    ref = evaluation_points(problem, resolution)
    if ref is None:
        return math.nan
    pts, truth = ref
    pred = model.evaluate(pts)
    return float(np.linalg.norm(pred - truth) / np.linalg.norm(truth))
