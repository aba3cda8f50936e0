"""Metrics and theory probes.

Condition numbers of interpolation/Gram/collocation matrices, Lebesgue
constants, operator mis-specification estimates, the sample-interpolation
study, and the precision-conditioning decomposition experiment, plus the
report containers the CLI serializes.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .diff import DiffMethod, DiffOperator, make_diff_operator
from .grid import Basis, Grid1D, TensorGrid, chebyshev_grid, clenshaw_curtis_weights
from .interp import cheb_cardinal_matrix
from .model import DerivSpec, GridModel
from .operators import SumOp
from .pde import LinearResidual, LossFunction, PdeProblem, convection_problem, model_l2re


# ---------------------------------------------------------------------------
# Basic metrics
# ---------------------------------------------------------------------------

def l2re(pred: np.ndarray, truth: np.ndarray) -> float:
    """l2 relative error ||pred - truth|| / ||truth||."""
    pred = np.asarray(pred, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if pred.shape != truth.shape:
        raise ValueError("pred and truth must have equal lengths")
    denom = np.linalg.norm(truth)
    if denom == 0.0:
        raise ValueError("truth has zero norm")
    return float(np.linalg.norm(pred - truth) / denom)


def interpolation_matrix(grid: Grid1D, samples: np.ndarray) -> np.ndarray:
    """Cardinal-function matrix L[i, j] = l_j(sample_i) on the canonical domain."""
    if grid.basis is not Basis.CHEBYSHEV:
        raise ValueError("interpolation matrix is defined on Chebyshev grids")
    samples = np.asarray(samples, dtype=float).ravel()
    return cheb_cardinal_matrix(samples, grid.canonical_nodes, grid.bary_weights)


def condition_number_sq(mat: np.ndarray, null_rtol: float = 1e-12) -> float:
    """kappa^2 = lambda_max / lambda_min of the normal matrix M^T M.

    Eigenvalues below ``null_rtol * lambda_max`` are treated as an exact
    nullspace (e.g. the polynomial kernel of a pure derivative operator) and
    excluded; a matrix with no positive eigenvalues reports +inf.
    """
    normal = mat.T @ mat
    evals = np.linalg.eigvalsh(0.5 * (normal + normal.T))
    hi = float(evals[-1])
    if hi <= 0.0:
        return float("inf")
    positive = evals[evals > null_rtol * hi]
    return hi / float(positive[0])


@dataclass(frozen=True)
class GramResult:
    g_emp: np.ndarray
    g_pop: np.ndarray
    kappa_sq_emp: float
    kappa_sq_pop: float


def gram_matrices(interp_mat: np.ndarray, n: int) -> GramResult:
    """Empirical Gram L^T L / M and the diagonal population Gram.

    The population Gram is the Clenshaw-Curtis weight diagonal for the dx/2
    uniform sampling measure; its condition number is exactly 2 for any N.
    """
    m = interp_mat.shape[0]
    if m == 0:
        raise ValueError("empty interpolation matrix")
    g_emp = interp_mat.T @ interp_mat / m
    g_pop = np.diag(clenshaw_curtis_weights(n) / 2.0)
    evals = np.linalg.eigvalsh(0.5 * (g_emp + g_emp.T))
    k_emp = float("inf") if evals[0] <= 0 else float(evals[-1] / evals[0])
    diag = np.diag(g_pop)
    k_pop = float(diag.max() / diag.min())
    return GramResult(g_emp, g_pop, k_emp, k_pop)


def gram_probe(n: int, m: int, seed: int = 0) -> GramResult:
    """Monte-Carlo Gram conditioning probe at the concentration measure.

    Samples are drawn uniformly in the angle theta (x = cos(theta)), the
    measure under which the node-weight diagonal is the population Gram and
    the empirical condition number concentrates near 2.
    """
    rng = np.random.default_rng(seed)
    samples = np.cos(rng.uniform(0.0, np.pi, m))
    grid = chebyshev_grid(n, (-1.0, 1.0))
    return gram_matrices(interpolation_matrix(grid, samples), n)


def lebesgue_constant(grid: Grid1D, resolution: int | None = None) -> float:
    """Max over a dense canonical grid of the l1 norm of the cardinal row."""
    if resolution is None:
        resolution = 10 * grid.size
    if resolution < 10 * grid.size:
        raise ValueError("resolution must be at least 10 * (N + 1)")
    dense = np.linspace(-1.0, 1.0, resolution)
    mat = interpolation_matrix(grid, dense)
    return float(np.max(np.sum(np.abs(mat), axis=1)))


# ---------------------------------------------------------------------------
# Collocation matrix for linear 1-D operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearOperatorSpec:
    """Linear operator sum_alpha a_alpha(x) d^alpha/dx^alpha with rhs g(x).

    Coefficients may be scalars or callables of the physical coordinate.
    """

    terms: tuple
    rhs: object = None

    def coefficient_values(self, x: np.ndarray) -> list[np.ndarray]:
        out = []
        for coeff, _ in self.terms:
            out.append(coeff(x) if callable(coeff) else np.full(x.shape, float(coeff)))
        return out


def collocation_matrix(
    spec: LinearOperatorSpec,
    grid: Grid1D,
    surrogate: DerivSpec | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Square collocation matrix A[i, j] = (L l_j)(x_i) at the grid nodes."""
    surrogate = surrogate or DerivSpec.spectral()
    x = grid.nodes
    size = grid.size
    mat = np.zeros((size, size))
    coeffs = spec.coefficient_values(x)
    for a, (_, order) in zip(coeffs, spec.terms):
        if order == 0:
            term = np.eye(size)
        else:
            term = make_diff_operator(
                grid, order, surrogate.method, surrogate.half_bandwidth
            ).physical_matrix
        mat += a[:, None] * term
    rhs = (
        np.zeros(size)
        if spec.rhs is None
        else np.asarray(spec.rhs(x) if callable(spec.rhs) else spec.rhs, dtype=float)
    )
    return mat, rhs


# ---------------------------------------------------------------------------
# Operator mis-specification
# ---------------------------------------------------------------------------

def _random_unit_interpolants(grid, rng, trials, degree, dense_pts):
    """Random fixed-degree smooth test functions normalized to unit sup-norm."""
    x_nodes = grid.canonical_nodes
    if grid.basis is Basis.CHEBYSHEV:
        dense = np.linspace(-1.0, 1.0, dense_pts)
        deg = min(degree, grid.n)
        for _ in range(trials):
            c = rng.standard_normal(deg + 1)
            sup = np.max(np.abs(np.polynomial.chebyshev.chebval(dense, c)))
            yield np.polynomial.chebyshev.chebval(x_nodes, c) / sup
    else:
        dense = np.linspace(0.0, 2.0 * np.pi, dense_pts, endpoint=False)
        deg = min(degree, (grid.n - 1) // 2)
        ks = np.arange(deg + 1)
        for _ in range(trials):
            a = rng.standard_normal(deg + 1)
            b = rng.standard_normal(deg + 1)
            b[0] = 0.0

            def f(t):
                return np.cos(np.outer(t, ks)) @ a + np.sin(np.outer(t, ks)) @ b

            sup = np.max(np.abs(f(dense)))
            yield f(x_nodes) / sup


def epsilon_op(
    true_op: DiffOperator,
    surrogate_op: DiffOperator,
    trials: int = 200,
    dense_pts: int = 2048,
    degree: int = 10,
    seed: int = 0,
) -> float:
    """Monte-Carlo lower estimate of sup ||(L - L~) v||_inf over unit test functions.

    Test functions are random degree-`degree` polynomial (or trigonometric)
    interpolants normalized to unit sup-norm on a dense grid; both operators
    are applied to their node values and the node-wise sup discrepancy is
    maximized over trials.
    """
    ga, gb = true_op.grid, surrogate_op.grid
    if ga.basis is not gb.basis or ga.size != gb.size or ga.interval != gb.interval:
        raise ValueError("operators must act on the same grid")
    a = true_op.physical_matrix
    b = surrogate_op.physical_matrix
    rng = np.random.default_rng(seed)
    worst = 0.0
    for v in _random_unit_interpolants(true_op.grid, rng, trials, degree, dense_pts):
        worst = max(worst, float(np.max(np.abs(a @ v - b @ v))))
    return worst


def fit_decay_rate(ns, errs) -> float:
    """Least-squares exponent p in err ~ C * N^(-p)."""
    ns = np.asarray(ns, dtype=float)
    errs = np.asarray(errs, dtype=float)
    slope, _ = np.polyfit(np.log(ns), np.log(errs), 1)
    return float(-slope)


def fit_bernstein_rho(ns, errs) -> float:
    """Least-squares geometric rate rho in err ~ C * rho^(-N)."""
    ns = np.asarray(ns, dtype=float)
    errs = np.asarray(errs, dtype=float)
    slope, _ = np.polyfit(ns, np.log(errs), 1)
    return float(np.exp(-slope))


# ---------------------------------------------------------------------------
# Report containers
# ---------------------------------------------------------------------------

@dataclass
class TheoryProbe:
    """One probe record; unused fields stay at their NaN/None defaults."""

    n: int
    m: int = 0
    kappa_sq: float = float("nan")
    lebesgue: float = float("nan")
    eps_op: float = float("nan")
    rho_fit: float = float("nan")
    bound_constants: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.isnan(self.kappa_sq) and self.kappa_sq < 1.0:
            raise ValueError("kappa_sq must be >= 1")
        if not np.isnan(self.lebesgue) and self.lebesgue < 1.0:
            raise ValueError("lebesgue must be >= 1")
        if not np.isnan(self.eps_op) and self.eps_op < 0.0:
            raise ValueError("eps_op must be >= 0")

    def to_jsonable(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "kappa_sq": self.kappa_sq,
            "lebesgue": self.lebesgue,
            "eps_op": self.eps_op,
            "rho_fit": self.rho_fit,
            "bound_constants": self.bound_constants,
        }

    @classmethod
    def from_jsonable(cls, d: dict) -> "TheoryProbe":
        return cls(**d)


@dataclass
class ExperimentReport:
    """Self-contained run artifact: config echo, traces, metrics, probes."""

    config: dict
    seed: int
    traces: dict = field(default_factory=dict)  # name -> {steps, losses, l2re}
    final_metrics: dict = field(default_factory=dict)
    probes: list = field(default_factory=list)
    runtime_seconds: float = 0.0

    def add_trace(self, name: str, history) -> None:
        self.traces[name] = {
            "steps": list(history.steps),
            "losses": list(history.losses),
            "l2re": list(history.metrics),
        }

    def to_jsonable(self) -> dict:
        return {
            "config": self.config,
            "seed": self.seed,
            "traces": self.traces,
            "final_metrics": self.final_metrics,
            "probes": [p.to_jsonable() for p in self.probes],
            "runtime_seconds": self.runtime_seconds,
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_jsonable(), fh, indent=2, allow_nan=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ExperimentReport":
        with open(path) as fh:
            d = json.load(fh)
        return cls(
            config=d["config"],
            seed=d["seed"],
            traces=d["traces"],
            final_metrics=d["final_metrics"],
            probes=[TheoryProbe.from_jsonable(p) for p in d["probes"]],
            runtime_seconds=d["runtime_seconds"],
        )

    def write_trace_csv(self, path, name: str | None = None) -> None:
        """Write one trace (or the only trace) as iteration,loss,l2re rows."""
        if name is None:
            if len(self.traces) != 1:
                raise ValueError("trace name required when multiple traces exist")
            name = next(iter(self.traces))
        tr = self.traces[name]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "loss", "l2re"])
            for s, lo, er in zip(tr["steps"], tr["losses"], tr["l2re"]):
                writer.writerow([s, f"{lo:.17g}", f"{er:.17g}"])


# ---------------------------------------------------------------------------
# Sample-interpolation study
# ---------------------------------------------------------------------------

def interpolation_task(
    n: int,
    target,
    m: int = 100,
    interval: tuple[float, float] = (-1.0, 1.0),
    seed: int = 0,
) -> tuple[GridModel, LossFunction]:
    """Least-squares fit of a target function from uniform random samples.

    Returns a 1-D node-value model and the quadratic loss
    mean((E theta - target(samples))^2) over m uniform samples.
    """
    grid = TensorGrid([chebyshev_grid(n, interval)])
    model = GridModel(grid)
    rng = np.random.default_rng(seed)
    samples = rng.uniform(interval[0], interval[1], m)[:, None]
    op = model.deriv_point_op((0,), samples)
    residual = LinearResidual(op, target(samples[:, 0]))
    return model, LossFunction(residual, [], 1.0)


def interpolation_l2re(model: GridModel, target, resolution: int = 1000) -> float:
    """Test L2RE of a 1-D fit on an equispaced grid."""
    a, b = model.grid.axes[0].interval
    xs = np.linspace(a, b, resolution)
    return l2re(model.evaluate(xs[:, None]), target(xs))


# ---------------------------------------------------------------------------
# Decomposition experiment (precision-conditioning tradeoff)
# ---------------------------------------------------------------------------

def _stencil_label(k) -> str:
    return "spectral" if k is None else f"fd_k{k}"


def _train_stencil(args):
    """Train one stencil variant of the convection decomposition study.

    Two stages per stencil: a first-order (Adam) stage whose loss trace
    exposes the conditioning-driven early convergence rate, and a Newton-CG
    stage that drives the model to its misspecification floor for the
    plateau measurement.
    """
    from . import optim  # local import: keeps module import cheap

    k, steps, rank, cg_iters, seed, grid_n, probe_n, eval_every, c, adam_steps = args
    problem = convection_problem(c)
    time_spec = DerivSpec.spectral() if k is None else DerivSpec.fd(k)
    deriv = (time_spec, DerivSpec.fourier())

    grid = problem.default_grid(grid_n)
    t0 = time.perf_counter()

    # Stage 1: first-order slope probe (fresh model; rate reflects kappa).
    slope_model = GridModel(grid, deriv_config=deriv)
    slope_loss = problem.make_loss(slope_model)
    adam_history = optim.run_adam(
        slope_model,
        slope_loss,
        steps=adam_steps,
        eval_every=max(1, adam_steps // 20),
    )

    # Stage 2: Newton-CG to the plateau (bias floor of the surrogate).
    model = GridModel(grid, deriv_config=deriv)
    loss_fn = problem.make_loss(model)
    cfg = optim.NncgConfig(
        steps=steps, rank=rank, cg_iters=cg_iters, precond_update_freq=0, seed=seed
    )
    history = optim.run_nncg(
        model,
        loss_fn,
        cfg,
        eval_every=eval_every,
        metric_fn=lambda mm: model_l2re(problem, mm, 128),
    )
    elapsed = time.perf_counter() - t0

    # Conditioning probe on a reduced grid (dense eigen-solve).
    small = GridModel(problem.default_grid(probe_n), deriv_config=deriv)
    small_loss = problem.make_loss(small)
    nsmall = small.theta.size
    eye = np.eye(nsmall).reshape(small.grid.shape + (nsmall,))
    hess = small_loss.hvp(small.theta, eye).reshape(nsmall, nsmall)
    evals = np.linalg.eigvalsh(0.5 * (hess + hess.T))
    kappa = float("inf") if evals[0] <= 0 else float(evals[-1] / evals[0])
    return _stencil_label(k), history, adam_history, elapsed, kappa


def trace_plateau_slope(steps, errors, early_frac: float = 0.25) -> tuple[float, float]:
    """Plateau (min trace value) and best early-phase decay rate in decades/step."""
    steps = np.asarray(steps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    plateau = float(np.nanmin(errors))
    cutoff = steps[0] + early_frac * (steps[-1] - steps[0])
    slope = 0.0
    for s, e in zip(steps[1:], errors[1:]):
        if s > cutoff:
            break
        if e > 0 and s > steps[0]:
            slope = max(slope, (np.log10(errors[0]) - np.log10(e)) / (s - steps[0]))
    return plateau, float(slope)


def decomposition_experiment(
    stencils=(1, 2, None),
    steps: int = 100,
    rank: int = 400,
    cg_iters: int = 50,
    seed: int = 0,
    grid_n: tuple[int, int] = (81, 80),
    probe_n: tuple[int, int] = (21, 20),
    eval_every: int = 5,
    c: float = 40.0,
    jobs: int = 1,
    adam_steps: int = 2000,
) -> ExperimentReport:
    """Train convection models with varied time-derivative stencils.

    For each finite-difference half-bandwidth (None = spectral) this runs a
    first-order slope stage (Adam; early loss decay reflects the surrogate's
    conditioning) and a Newton-CG plateau stage (L2RE floor reflects the
    surrogate's misspecification bias), plus a reduced-grid Hessian
    condition-number probe.
    """
    config = {
        "experiment": "decomposition",
        "stencils": [None if k is None else int(k) for k in stencils],
        "steps": steps,
        "rank": rank,
        "cg_iters": cg_iters,
        "grid_n": list(grid_n),
        "probe_n": list(probe_n),
        "eval_every": eval_every,
        "c": c,
        "adam_steps": adam_steps,
    }
    report = ExperimentReport(config=config, seed=seed)
    argsets = [
        (k, steps, rank, cg_iters, seed, grid_n, probe_n, eval_every, c, adam_steps)
        for k in stencils
    ]
    t0 = time.perf_counter()
    if jobs > 1:
        from multiprocessing import get_context

        with get_context("spawn").Pool(min(jobs, len(argsets))) as pool:
            results = pool.map(_train_stencil, argsets)
    else:
        results = [_train_stencil(a) for a in argsets]
    for label, history, adam_history, elapsed, kappa in results:
        report.add_trace(label, history)
        report.add_trace(label + "_adam", adam_history)
        plateau, _ = trace_plateau_slope(history.steps, history.metrics)
        _, slope = trace_plateau_slope(adam_history.steps, adam_history.losses)
        report.final_metrics[label] = {
            "plateau_l2re": plateau,
            "initial_slope": slope,
            "kappa_sq": kappa,
            "final_loss": history.final_loss,
            "train_seconds": elapsed,
        }
    report.runtime_seconds = time.perf_counter() - t0
    return report
