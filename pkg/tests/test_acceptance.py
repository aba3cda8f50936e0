"""Acceptance gate: nine end-to-end criteria, one summary line each.

Each test prints exactly one ``[PASS]``/``[FAIL]`` line (use ``pytest -s`` to
see them) and then asserts. Criteria that are unattainable at this compute
scale fail honestly; the referenced analysis lives outside the package in
the project notes.
"""

import time

import numpy as np
import pytest

from baryspec import analysis, optim, pde
from baryspec.diff import DiffMethod, cheb_fft_derivative, make_diff_operator
from baryspec.grid import chebyshev_grid, fourier_grid
from baryspec.model import warm_start
from baryspec.transforms import fft


def _report(num: int, ok: bool, detail: str) -> None:
    tag = "PASS" if ok else "FAIL"
    print(f"[{tag}] criterion {num}: {detail}")
    assert ok, f"criterion {num}: {detail}"


# ---------------------------------------------------------------------------
# 1. Interpolation spectral convergence
# ---------------------------------------------------------------------------

def test_criterion_1_interpolation_spectral_convergence():
    t0 = time.perf_counter()
    target = lambda x: np.sin(4.0 * x)
    errs = {}
    for n in (8, 16, 24, 32, 40):
        model, loss_fn = analysis.interpolation_task(n, target, m=100, seed=0)
        # GD to convergence: iterate in chunks until the loss stops moving
        prev, total = np.inf, 0
        while total < 6_000_000:
            h = optim.run_gd(model, loss_fn, 250000, "auto", eval_every=250000)
            total += 250000
            if h.losses[-1] == 0.0 or h.losses[-1] >= prev * 0.9:
                break
            prev = h.losses[-1]
        errs[n] = analysis.interpolation_l2re(model, target)
    elapsed = time.perf_counter() - t0
    final = errs[40]
    # log-linear before plateau: geometric decay rate fitted on the
    # pre-plateau segment must be clearly > 1 and the segment monotone
    ns = np.array(sorted(errs))
    es = np.array([errs[n] for n in ns])
    pre = es > 1e-11
    monotone = bool(np.all(np.diff(np.log10(es[pre])) < 0))
    rho = analysis.fit_bernstein_rho(ns[pre], es[pre]) if pre.sum() >= 2 else np.inf
    ok = final <= 1e-10 and monotone and rho > 1.2 and elapsed <= 60.0
    _report(1, ok, f"L2RE(N=40)={final:.2e}, rho={rho:.2f}, "
                   f"monotone={monotone}, {elapsed:.0f}s (limit 60s)")


# ---------------------------------------------------------------------------
# 2. Convection near machine precision
# ---------------------------------------------------------------------------

def test_criterion_2_convection_machine_precision():
    t0 = time.perf_counter()
    problem = pde.make_problem("convection")
    model = problem.default_model()
    loss_fn = problem.make_loss(model)
    cfg = optim.NncgConfig(steps=500, rank=1000, cg_iters=100, seed=0)
    optim.run_nncg(model, loss_fn, cfg, eval_every=100)
    err = pde.model_l2re(problem, model, 256)
    elapsed = time.perf_counter() - t0
    ok = err <= 1e-10 and elapsed <= 1800.0
    _report(2, ok, f"L2RE={err:.2e} (<=1e-10), {elapsed:.0f}s (limit 1800s)")


# ---------------------------------------------------------------------------
# 3. Wave equation (full gate + reduced fast gate)
# ---------------------------------------------------------------------------

def test_criterion_3_wave_full_gate():
    t0 = time.perf_counter()
    problem = pde.make_problem("wave")
    model = problem.default_model()  # 41 x 41
    loss_fn = problem.make_loss(model)
    cfg = optim.NncgConfig(steps=200, rank=1000, cg_iters=1000, seed=0)
    optim.run_nncg(model, loss_fn, cfg, eval_every=50)
    err = pde.model_l2re(problem, model, 256)
    elapsed = time.perf_counter() - t0
    ok = err <= 1e-8 and elapsed <= 7200.0
    _report(3, ok, f"full gate L2RE={err:.2e} (<=1e-8), {elapsed:.0f}s (limit 2h)")


def test_criterion_3_wave_fast_gate_unattainable():
    # Honest red: at N=25 the exact solution's cos(10*pi*t) component puts the
    # best degree-25 interpolant at L2RE ~6e-5 and the training-loss minimizer
    # (dense least-squares oracle) at L2RE ~1e-2, both far above the 1e-6
    # target. See the project notes for the full analysis.
    t0 = time.perf_counter()
    problem = pde.make_problem("wave")
    model = problem.default_model(problem.default_grid((25, 25)))
    loss_fn = problem.make_loss(model)
    cfg = optim.NncgConfig(steps=200, rank=400, cg_iters=1000, seed=0)
    optim.run_nncg(model, loss_fn, cfg, eval_every=50)
    err = pde.model_l2re(problem, model, 256)
    elapsed = time.perf_counter() - t0
    ok = err <= 1e-6 and elapsed <= 900.0
    _report(3, ok, f"fast gate L2RE={err:.2e} vs 1e-6 target, {elapsed:.0f}s; "
                   "representation floor ~6e-5, loss-minimizer floor ~1e-2 "
                   "(see notes) - unattainable at N=25")


# ---------------------------------------------------------------------------
# 4. Reaction at desk scale
# ---------------------------------------------------------------------------

def test_criterion_4_reaction_monotone_and_warm_start():
    problem = pde.make_problem("reaction")

    # warm start from the exact solution: loss <= 1e-13 immediately
    warm = warm_start(problem.default_model(), problem.exact)
    warm_loss = problem.make_loss(warm).value(warm.theta)

    model = problem.default_model()
    loss_fn = problem.make_loss(model)
    cfg = optim.NncgConfig(steps=5000, rank=16, cg_iters=16, seed=0)
    history = optim.run_nncg(model, loss_fn, cfg, eval_every=250)
    err = pde.model_l2re(problem, model, 256)
    monotone = bool(np.all(np.diff(history.losses) <= 1e-15))
    ok = monotone and warm_loss <= 1e-13
    _report(4, ok, f"monotone={monotone}, warm-start loss={warm_loss:.2e} "
                   f"(<=1e-13); L2RE={err:.2e} (clause <=1e-4 tested separately)")


def test_criterion_4_reaction_l2re_unattainable():
    # Honest red: from the theta=0 initialization (the logistic's unstable
    # equilibrium) no Newton-CG variant at this budget reaches 1e-4; the
    # best honest run lands near L2RE 0.3 and the trajectory needs ~5e4
    # steps. See the project notes for the measurements.
    problem = pde.make_problem("reaction")
    model = problem.default_model()
    loss_fn = problem.make_loss(model)
    cfg = optim.NncgConfig(steps=5000, rank=16, cg_iters=16, seed=0)
    optim.run_nncg(model, loss_fn, cfg, eval_every=1000)
    err = pde.model_l2re(problem, model, 256)
    ok = err <= 1e-4
    _report(4, ok, f"L2RE={err:.2e} vs 1e-4 target after 5000 steps from "
                   "zero init - unattainable at this budget (see notes)")


# ---------------------------------------------------------------------------
# 5. Precision-conditioning tradeoff
# ---------------------------------------------------------------------------

def test_criterion_5_precision_conditioning_decomposition():
    report = analysis.decomposition_experiment(
        stencils=(1, 2, None), steps=100, rank=400, cg_iters=50,
        seed=0, jobs=1,
    )
    m = report.final_metrics
    p1, p2, ps = (m[k]["plateau_l2re"] for k in ("fd_k1", "fd_k2", "spectral"))
    s1, ss = m["fd_k1"]["initial_slope"], m["spectral"]["initial_slope"]
    ordering = p1 > p2 > ps
    decade_gap = p1 / max(ps, 1e-300) >= 10.0
    slope_ok = s1 >= ss
    ok = ordering and decade_gap and slope_ok
    _report(5, ok, f"plateaus k1={p1:.2e} > k2={p2:.2e} > spectral={ps:.2e} "
                   f"({np.log10(p1 / max(ps, 1e-300)):.1f} decades), "
                   f"slopes k1={s1:.2e} >= spectral={ss:.2e}")


# ---------------------------------------------------------------------------
# 6. Gram concentration
# ---------------------------------------------------------------------------

def test_criterion_6_gram_concentration():
    hits = 0
    for seed in range(20):
        res = analysis.gram_probe(16, 4000, seed=seed)
        if res.kappa_sq_emp <= 3.0:
            hits += 1
    pop = analysis.gram_probe(16, 10, seed=0).kappa_sq_pop
    ok = hits >= 18 and abs(pop - 2.0) <= 1e-12
    _report(6, ok, f"kappa_sq_emp<=3.0 in {hits}/20 seeds (need >=18), "
                   f"kappa_sq_pop={pop:.12f} (=2 exactly)")


# ---------------------------------------------------------------------------
# 7. Operator mis-specification rate
# ---------------------------------------------------------------------------

def test_criterion_7_eps_op_decay_rate():
    ns = (32, 64, 128, 256)
    errs = []
    for n in ns:
        grid = fourier_grid(n, (0.0, 2.0 * np.pi))
        true_op = make_diff_operator(grid, 1, DiffMethod.FOURIER_MATRIX)
        fd_op = make_diff_operator(grid, 1, DiffMethod.FINITE_DIFFERENCE, 1)
        errs.append(analysis.epsilon_op(true_op, fd_op, trials=200, seed=0))
    rate = analysis.fit_decay_rate(ns, errs)
    ok = 1.7 <= rate <= 2.3
    _report(7, ok, f"fitted eps_op decay exponent {rate:.3f} in [1.7, 2.3]")


# ---------------------------------------------------------------------------
# 8. Oracle equivalences
# ---------------------------------------------------------------------------

def test_criterion_8_oracle_equivalences():
    rng = np.random.default_rng(0)
    checks = []

    # (a) fft vs direct DFT up to length 64
    ok_fft = True
    for length in (1, 2, 3, 8, 17, 64):
        x = rng.standard_normal(length)
        k = np.arange(length)
        dft = np.exp(-2j * np.pi * np.outer(k, k) / length) @ x
        ok_fft &= bool(np.max(np.abs(fft(x).values - dft)) <= 1e-10)
    checks.append(("fft=dft", ok_fft))

    # (b) Chebyshev FFT derivative exact on polynomials of degree <= N
    ok_cheb = True
    for n in (4, 9, 16, 20):
        grid = chebyshev_grid(n, (-1.0, 1.0))
        coeffs = rng.standard_normal(n + 1)
        vals = np.polynomial.polynomial.polyval(grid.canonical_nodes, coeffs)
        deriv = np.polynomial.polynomial.polyval(
            grid.canonical_nodes, np.polynomial.polynomial.polyder(coeffs))
        got = cheb_fft_derivative(vals)
        scale = max(1.0, float(np.max(np.abs(deriv))))
        ok_cheb &= bool(np.max(np.abs(got - deriv)) / scale <= 1e-12)
    checks.append(("cheb-exact", ok_cheb))

    # (c) loss gradient vs central differences, 20 coordinates per benchmark
    ok_grad = True
    for name in ("convection", "reaction", "wave", "burgers", "poisson"):
        problem = pde.make_problem(name)
        small = tuple(min(12, n) for n in problem.default_n)
        model = problem.default_model(problem.default_grid(small))
        loss_fn = problem.make_loss(model)
        theta = 0.1 * rng.standard_normal(model.grid.shape)
        _, grad = loss_fn.value_grad(theta)
        idx = rng.choice(theta.size, size=20, replace=False)
        h = 1e-6
        for flat in idx:
            e = np.zeros(theta.size)
            e[flat] = h
            e = e.reshape(theta.shape)
            fd = (loss_fn.value(theta + e) - loss_fn.value(theta - e)) / (2 * h)
            denom = max(abs(fd), 1e-8)
            ok_grad &= bool(abs(grad.ravel()[flat] - fd) / denom <= 1e-5)
    checks.append(("grad=fd", ok_grad))

    # (d) interpolation matrix at the nodes is the identity
    grid = chebyshev_grid(16, (-1.0, 1.0))
    mat = analysis.interpolation_matrix(grid, grid.canonical_nodes)
    checks.append(("interp=I", bool(np.allclose(mat, np.eye(17), atol=1e-10))))

    ok = all(flag for _, flag in checks)
    _report(8, ok, ", ".join(f"{nm}={'ok' if fl else 'FAIL'}" for nm, fl in checks))


# ---------------------------------------------------------------------------
# 9. Burgers / Poisson parity
# ---------------------------------------------------------------------------

def test_criterion_9_burgers_loss_reduction_unattainable():
    # Target: 2000 NNCG steps cut the Burgers loss by >= 4 decades from the
    # zero initialization.  This is not attainable on this hardware: at
    # theta = 0 the loss is carried entirely by the initial-condition
    # penalty, whose descent directions are the lowest-curvature modes of a
    # Gauss-Newton system with a ~5e8 eigenvalue cluster wider than any
    # memory-feasible sketch rank (lambda_300 / lambda_1 > 0.997), so
    # truncated CG spends its budget on stiff modes that carry no loss.  A
    # single step with a 2000-iteration CG budget (the per-step budget used
    # for the reference result, which took 8+ GPU-hours total) reduces the
    # loss by only 0.4%, and a rank-1000 preconditioner exceeds available
    # memory.  The run below is a bona fide 2000-step budget that documents
    # the stall; see README for the analysis.
    problem = pde.make_problem("burgers")
    model = problem.default_model()
    loss_fn = problem.make_loss(model)
    v0 = loss_fn.value(model.theta)
    cfg = optim.NncgConfig(steps=2000, rank=100, cg_iters=20, seed=0,
                           precond_update_freq=0)
    history = optim.run_nncg(model, loss_fn, cfg, eval_every=500)
    decades = float(np.log10(v0 / history.losses[-1]))
    _report(9, decades >= 4.0,
            f"burgers loss drop {decades:.2f} decades (>=4) "
            f"[{v0:.3e} -> {history.losses[-1]:.3e}]")


def test_criterion_9_poisson_mask_and_boundaries():
    # Poisson: nodal mask excludes exactly the four holes; boundary groups
    # satisfied to <= 1e-2 sup-norm after 5000 steps
    pois = pde.make_problem("poisson")
    pmodel = pois.default_model()
    nodes = pmodel.grid.node_points()
    keep = pois.interior_mask(nodes)
    centers = [(0.3, 0.3), (0.3, -0.3), (-0.3, 0.3), (-0.3, -0.3)]
    in_hole = np.zeros(len(nodes), dtype=bool)
    for cx, cy in centers:
        in_hole |= (nodes[:, 0] - cx) ** 2 + (nodes[:, 1] - cy) ** 2 <= 0.01
    mask_ok = bool(np.array_equal(~keep, in_hole))

    ploss = pois.make_loss(pmodel)
    pcfg = optim.NncgConfig(steps=5000, rank=400, cg_iters=64, seed=0)
    optim.run_nncg(pmodel, ploss, pcfg, eval_every=1000)
    sup = 0.0
    for group in pois.ibc_factory(pois, pmodel):
        resid = group.op.matvec(pmodel.theta) - group.target
        sup = max(sup, float(np.max(np.abs(resid))))
    ok = mask_ok and sup <= 1e-2
    _report(9, ok, f"poisson mask(4 holes)={mask_ok}, boundary sup={sup:.2e} "
                   "(<=1e-2)")
