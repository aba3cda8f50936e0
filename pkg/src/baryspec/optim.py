"""Optimizers for physics-informed least-squares training.

Three trainers share a common interface over :class:`~baryspec.pde.LossFunction`:
plain gradient descent (with an automatic 1/lambda_max step size for quadratic
losses), Adam with a cosine learning-rate schedule, and a Nystrom-preconditioned
Newton-CG method that sketches the (Gauss-Newton or exact) Hessian through
Hessian-vector products only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import GridModel
from .pde import LossFunction


class NumericalAbort(RuntimeError):
    """Raised when training encounters non-finite values or CG breakdown."""


@dataclass
class TrainHistory:
    """Sparse training trace: loss (and optional metric) at logged steps."""

    steps: list[int] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)
    metrics: list[float] = field(default_factory=list)

    def log(self, step: int, loss: float, metric: float = float("nan")) -> None:
        self.steps.append(step)
        self.losses.append(loss)
        self.metrics.append(metric)

    def extend(self, other: "TrainHistory", offset: int) -> None:
        self.steps.extend(s + offset for s in other.steps)
        self.losses.extend(other.losses)
        self.metrics.extend(other.metrics)

    @property
    def final_loss(self) -> float:
        return self.losses[-1] if self.losses else float("nan")


def _check_finite(val: float, theta: np.ndarray, step: int, name: str) -> None:
    if not np.isfinite(val) or not np.all(np.isfinite(theta)):
        raise NumericalAbort(f"{name} produced non-finite values at step {step}")


def _log_point(history, step, val, model, metric_fn, theta, progress_fn=None, lr=float("nan")):
    metric = float("nan")
    if metric_fn is not None:
        model.theta = theta
        metric = float(metric_fn(model))
    history.log(step, val, metric)
    if progress_fn is not None:
        progress_fn(step, val, metric, lr)


def hessian_max_eig(
    loss_fn: LossFunction,
    theta: np.ndarray,
    iters: int = 100,
    tol: float = 1e-10,
    seed: int = 0,
) -> float:
    """Largest Hessian eigenvalue by power iteration on the HVP."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(theta.shape)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        hv = loss_fn.hvp(theta, v)
        new = float(np.sum(v * hv))
        nrm = np.linalg.norm(hv)
        if nrm == 0.0:
            return 0.0
        v = hv / nrm
        if lam != 0.0 and abs(new - lam) <= tol * abs(lam):
            return new
        lam = new
    return lam


# ---------------------------------------------------------------------------
# Gradient descent and Adam
# ---------------------------------------------------------------------------

def run_gd(
    model: GridModel,
    loss_fn: LossFunction,
    steps: int,
    lr: float | str = "auto",
    eval_every: int = 100,
    metric_fn=None,
    progress_fn=None,
) -> TrainHistory:
    """Plain gradient descent; lr='auto' uses 1/lambda_max (quadratic losses only)."""
    theta = model.theta.copy()
    if lr == "auto":
        if not loss_fn.is_quadratic:
            raise ValueError("automatic step size requires a quadratic loss")
        lam = hessian_max_eig(loss_fn, theta)
        if lam <= 0:
            raise NumericalAbort("non-positive curvature estimate for automatic step")
        lr = 1.0 / lam
    history = TrainHistory()
    # For small quadratic losses the gradient is the affine map H theta + g0;
    # materializing H once makes each step a dense matvec, with iterates
    # identical to the operator path.
    dense = None
    if loss_fn.is_quadratic and theta.size <= 2000:
        n = theta.size
        eye = np.eye(n).reshape(theta.shape + (n,))
        hess = loss_fn.hvp(theta * 0.0, eye).reshape(n, n)
        _, g0 = loss_fn.value_grad(theta * 0.0)
        dense = (hess, g0.ravel())
    for step in range(steps):
        if dense is not None:
            grad = (dense[0] @ theta.ravel() + dense[1]).reshape(theta.shape)
            val = loss_fn.value(theta) if step % eval_every == 0 else 0.0
        else:
            val, grad = loss_fn.value_grad(theta)
        if step % eval_every == 0:
            _check_finite(val, theta, step, "gradient descent")
            _log_point(history, step, val, model, metric_fn, theta, progress_fn, lr)
        theta = theta - lr * grad
    val = loss_fn.value(theta)
    _check_finite(val, theta, steps, "gradient descent")
    _log_point(history, steps, val, model, metric_fn, theta, progress_fn, lr)
    model.theta = theta
    return history


def cosine_lr(step: int, steps: int, lr0: float, lr_min: float = 1e-6) -> float:
    """Cosine decay from lr0 at step 0 to lr_min at the final step."""
    if steps <= 0:
        return lr0
    return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + np.cos(np.pi * step / steps))


def run_adam(
    model: GridModel,
    loss_fn: LossFunction,
    steps: int,
    lr: float = 1e-3,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
    eval_every: int = 100,
    metric_fn=None,
    progress_fn=None,
) -> TrainHistory:
    """Adam with a cosine learning-rate schedule decaying to 1e-6."""
    theta = model.theta.copy()
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    b1, b2 = betas
    history = TrainHistory()
    for step in range(steps):
        val, grad = loss_fn.value_grad(theta)
        _check_finite(val, theta, step, "adam")
        if step % eval_every == 0:
            _log_point(
                history, step, val, model, metric_fn, theta,
                progress_fn, cosine_lr(step, steps, lr),
            )
        m = b1 * m + (1 - b1) * grad
        v = b2 * v + (1 - b2) * grad**2
        mh = m / (1 - b1 ** (step + 1))
        vh = v / (1 - b2 ** (step + 1))
        theta = theta - cosine_lr(step, steps, lr) * mh / (np.sqrt(vh) + eps)
    val = loss_fn.value(theta)
    _check_finite(val, theta, steps, "adam")
    _log_point(history, steps, val, model, metric_fn, theta, progress_fn, 1e-6)
    model.theta = theta
    return history


# ---------------------------------------------------------------------------
# Nystrom-preconditioned Newton-CG
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NncgConfig:
    """Hyperparameters for the Nystrom-Newton-CG trainer."""

    steps: int = 100
    rank: int = 100
    cg_iters: int = 100
    cg_tol: float = 1e-8
    hvp_mode: str = "gauss_newton"
    # 0 = build the preconditioner once (constant Hessian); k = every k steps.
    precond_update_freq: int = 1
    armijo_c: float = 1e-4
    max_backtracks: int = 40
    seed: int = 0
    # None = automatic damping; a float fixes the CG regularizer mu directly.
    damping: float | None = None


class NystromPreconditioner:
    """Rank-r randomized Nystrom approximation H ~ U diag(lam) U^T."""

    def __init__(self, u: np.ndarray, lams: np.ndarray):
        self.u = u
        self.lams = lams
        self.lam_r = float(lams[-1]) if lams.size else 0.0

    @classmethod
    def build(
        cls, loss_fn, theta, rank: int, rng, power_iters: int = 1
    ) -> "NystromPreconditioner":
        n = theta.size
        rank = min(rank, n)
        omega = rng.standard_normal((n, rank))
        omega, _ = np.linalg.qr(omega)
        # subspace (power) iteration sharpens the sketch when the spectrum
        # decays slowly; one round is usually enough
        for _ in range(power_iters):
            y = loss_fn.hvp(theta, omega.reshape(theta.shape + (rank,))).reshape(n, rank)
            if not np.all(np.isfinite(y)):
                raise NumericalAbort("non-finite Hessian sketch")
            omega, _ = np.linalg.qr(y)
        block = omega.reshape(theta.shape + (rank,))
        y = loss_fn.hvp(theta, block).reshape(n, rank)
        if not np.all(np.isfinite(y)):
            raise NumericalAbort("non-finite Hessian sketch")
        shift = np.sqrt(n) * np.finfo(float).eps * np.linalg.norm(y)
        y_shift = y + shift * omega
        core = omega.T @ y_shift
        core = 0.5 * (core + core.T)
        try:
            chol = np.linalg.cholesky(core)
        except np.linalg.LinAlgError:
            core += 10 * shift * np.eye(rank)
            chol = np.linalg.cholesky(core)
        b = np.linalg.solve(chol, y_shift.T).T  # Y C^{-T}, via C B^T = Y^T
        u, s, _ = np.linalg.svd(b, full_matrices=False)
        lams = np.maximum(s**2 - shift, 0.0)
        return cls(u, lams)

    def trace_estimate(self) -> float:
        return float(np.sum(self.lams))

    def solve(self, v: np.ndarray, mu: float) -> np.ndarray:
        """Apply P^{-1} with regularizer mu: exact on the captured subspace."""
        flat = v.reshape(v.size)
        coeff = self.u.T @ flat
        scaled = ((self.lam_r + mu) / (self.lams + mu)) * coeff
        out = self.u @ scaled + (flat - self.u @ coeff)
        return out.reshape(v.shape)


def _run_nncg_quadratic(
    model: GridModel,
    loss_fn: LossFunction,
    config: NncgConfig,
    eval_every: int,
    metric_fn,
    progress_fn,
) -> TrainHistory:
    """NNCG specialization for quadratic losses.

    The Newton system (H theta_step = -grad) is constant, so the inner CG
    state is carried across outer steps instead of restarting: ``steps``
    outer iterations of ``cg_iters`` inner iterations behave as one long
    preconditioned CG solve with periodic logging. Restarted CG on these
    severely ill-conditioned systems loses most of its progress at each
    restart; the continued solve reaches the floating-point floor instead.
    """
    theta0 = model.theta.copy()
    rng = np.random.default_rng(config.seed)
    history = TrainHistory()
    val, grad = loss_fn.value_grad(theta0)
    _check_finite(val, theta0, 0, "newton-cg")
    precond = NystromPreconditioner.build(loss_fn, theta0, config.rank, rng)
    mu = config.damping if config.damping is not None else 0.0
    rhs = -grad
    rhs_norm = float(np.linalg.norm(rhs))
    x = np.zeros_like(rhs)
    r = rhs.copy()
    z = precond.solve(r, mu)
    p = z.copy()
    rz = float(np.sum(r * z))
    theta = theta0
    for step in range(config.steps):
        if step % eval_every == 0:
            _log_point(history, step, val, model, metric_fn, theta, progress_fn, mu)
        if rhs_norm == 0.0 or np.linalg.norm(r) <= config.cg_tol * rhs_norm:
            break  # converged to the requested relative residual
        done = False
        for _ in range(config.cg_iters):
            hp = loss_fn.hvp(theta0, p) + mu * p
            php = float(np.sum(p * hp))
            if not np.isfinite(php) or php <= 0.0:
                done = True  # curvature lost to rounding: at the float floor
                break
            alpha = rz / php
            x = x + alpha * p
            r = r - alpha * hp
            if np.linalg.norm(r) <= config.cg_tol * rhs_norm:
                done = True
                break
            z = precond.solve(r, mu)
            rz_new = float(np.sum(r * z))
            if not np.isfinite(rz_new):
                done = True
                break
            p = z + (rz_new / rz) * p
            rz = rz_new
        theta = theta0 + x
        val = loss_fn.value(theta)
        _check_finite(val, theta, step, "newton-cg")
        if done:
            break
    _log_point(history, config.steps, val, model, metric_fn, theta, progress_fn, mu)
    model.theta = theta
    return history


def run_nncg(
    model: GridModel,
    loss_fn: LossFunction,
    config: NncgConfig,
    eval_every: int = 100,
    metric_fn=None,
    progress_fn=None,
) -> TrainHistory:
    """Nystrom-preconditioned Newton-CG with Armijo backtracking line search.

    Quadratic losses (linear PDE residuals) dispatch to a continued-CG
    specialization; see :func:`_run_nncg_quadratic`.
    """
    if loss_fn.is_quadratic and config.hvp_mode == "gauss_newton":
        return _run_nncg_quadratic(
            model, loss_fn, config, eval_every, metric_fn, progress_fn
        )
    # Nonquadratic losses: Levenberg-Marquardt-damped modified Newton. The
    # Hessian is frozen at an anchor point and the inner CG state is carried
    # across outer steps (restarting CG every step discards its Krylov
    # progress on these ill-conditioned systems). The anchor is re-linearized
    # once the damped solve converges or the true loss stops improving, with
    # an Armijo backtracking line search along the accumulated step; the
    # damping mu shrinks on clean full steps and grows on rejections.
    anchor = model.theta.copy()
    rng = np.random.default_rng(config.seed)
    history = TrainHistory()
    val, grad = loss_fn.value_grad(anchor)
    _check_finite(val, anchor, 0, "newton-cg")
    precond = NystromPreconditioner.build(loss_fn, anchor, config.rank, rng)
    last_build = 0
    lam_max = max(float(precond.lams[0]) if precond.lams.size else 1.0, 1e-30)
    mu = config.damping if config.damping is not None else 1e-3 * lam_max
    alpha = float("nan")

    def new_state(g, muv):
        r = -g.copy()
        z = precond.solve(r, muv)
        return {
            "x": np.zeros_like(g), "r": r, "p": z.copy(),
            "rz": float(np.sum(r * z)), "rhs_norm": float(np.linalg.norm(g)),
        }

    st = new_state(grad, mu)
    for step in range(config.steps):
        if step % eval_every == 0:
            _log_point(history, step, val, model, metric_fn, anchor, progress_fn, alpha)
        # loss-scaled inner tolerance: solve deeper as the residual shrinks so
        # the low-curvature components of the Newton step are not left behind
        cg_tol = max(config.cg_tol, min(1e-2, 0.03 * np.sqrt(max(val, 0.0))))
        done = st["rhs_norm"] == 0.0
        for _ in range(config.cg_iters):
            if done:
                break
            hp = loss_fn.hvp(anchor, st["p"], config.hvp_mode) + mu * st["p"]
            php = float(np.sum(st["p"] * hp))
            if not np.isfinite(php) or php <= 0.0:
                done = True
                break
            a = st["rz"] / php
            st["x"] = st["x"] + a * st["p"]
            st["r"] = st["r"] - a * hp
            if np.linalg.norm(st["r"]) <= cg_tol * st["rhs_norm"]:
                done = True
                break
            z = precond.solve(st["r"], mu)
            rz_new = float(np.sum(st["r"] * z))
            if not np.isfinite(rz_new):
                done = True
                break
            st["p"] = z + (rz_new / st["rz"]) * st["p"]
            st["rz"] = rz_new
        cand = anchor + st["x"]
        cval, cgrad = loss_fn.value_grad(cand)
        slope = float(np.sum(grad * st["x"]))
        if done or not (np.isfinite(cval) and cval <= val + config.armijo_c * slope):
            # re-linearize: Armijo backtracking from the anchor along the step
            alpha, accepted = 1.0, False
            for _ in range(config.max_backtracks):
                if (
                    np.isfinite(cval)
                    and cval <= val + config.armijo_c * alpha * slope
                    and cval < val
                ):
                    accepted = True
                    break
                alpha *= 0.5
                cand = anchor + alpha * st["x"]
                cval, cgrad = loss_fn.value_grad(cand)
            if accepted:
                anchor, val, grad = cand, cval, cgrad
                _check_finite(val, anchor, step, "newton-cg")
                if done and alpha == 1.0:
                    mu /= 3.0
            else:
                mu *= 4.0
                if mu > 1e12 * lam_max:
                    break  # stationary up to damping resolution
            if config.precond_update_freq > 0 and (
                step - last_build >= config.precond_update_freq
            ):
                precond = NystromPreconditioner.build(
                    loss_fn, anchor, config.rank, rng
                )
                lam_max = max(
                    float(precond.lams[0]) if precond.lams.size else lam_max, 1e-30
                )
                last_build = step
            st = new_state(grad, mu)
    _check_finite(val, anchor, config.steps, "newton-cg")
    _log_point(history, config.steps, val, model, metric_fn, anchor, progress_fn, alpha)
    model.theta = anchor
    return history


# ---------------------------------------------------------------------------
# Stage runner
# ---------------------------------------------------------------------------

def run_stages(
    model: GridModel,
    loss_fn: LossFunction,
    stages: list[dict],
    eval_every: int = 100,
    metric_fn=None,
    progress_fn=None,
) -> TrainHistory:
    """Run optimizer stages in sequence, warm-starting each from the last.

    Each stage dict needs a ``kind`` of 'gd', 'adam', or 'nncg'; remaining keys
    are forwarded to the matching trainer (NncgConfig fields for 'nncg').
    """
    history = TrainHistory()
    offset = 0
    for stage in stages:
        stage = dict(stage)
        kind = stage.pop("kind")
        kw = {"eval_every": eval_every, "metric_fn": metric_fn, "progress_fn": progress_fn}
        if kind == "gd":
            h = run_gd(model, loss_fn, **stage, **kw)
        elif kind == "adam":
            h = run_adam(model, loss_fn, **stage, **kw)
        elif kind == "nncg":
            h = run_nncg(model, loss_fn, NncgConfig(**stage), **kw)
        else:
            raise ValueError(f"unknown optimizer kind {kind!r}")
        steps = h.steps[-1] if h.steps else 0
        history.extend(h, offset)
        offset += steps
    return history
