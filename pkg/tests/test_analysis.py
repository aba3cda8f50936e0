"""Tests for the metrics, theory probes, and report containers.

Oracles: closed-form condition numbers (population Gram = 2 for all N),
known decay laws for finite-difference surrogates, classical Lebesgue
constant growth, and round-trip serialization identities.
"""

import json

import numpy as np
import pytest

from baryspec import analysis, optim
from baryspec.diff import DiffMethod, make_diff_operator
from baryspec.grid import chebyshev_grid, fourier_grid
from baryspec.model import DerivSpec


# ---------------------------------------------------------------------------
# l2re and condition numbers
# ---------------------------------------------------------------------------

def test_l2re_exact_value():
    truth = np.array([3.0, 4.0])
    pred = np.array([3.0, 4.0 + 5.0])
    assert analysis.l2re(pred, truth) == pytest.approx(1.0)


def test_l2re_zero_truth_rejected():
    with pytest.raises(ValueError):
        analysis.l2re(np.ones(3), np.zeros(3))


def test_l2re_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        analysis.l2re(np.ones(3), np.ones(4))


def test_condition_number_sq_diagonal_oracle():
    mat = np.diag([3.0, 1.0, 2.0])
    assert analysis.condition_number_sq(mat) == pytest.approx(9.0)


def test_condition_number_sq_excludes_nullspace():
    # first-derivative matrix annihilates constants; kappa^2 over the
    # complement must be finite
    grid = fourier_grid(16, (0.0, 2.0 * np.pi))
    d = make_diff_operator(grid, 1, DiffMethod.FOURIER_MATRIX).physical_matrix
    k2 = analysis.condition_number_sq(d)
    assert np.isfinite(k2)
    assert k2 >= 1.0


def test_interpolation_matrix_identity_at_nodes():
    grid = chebyshev_grid(12, (-1.0, 1.0))
    mat = analysis.interpolation_matrix(grid, grid.canonical_nodes)
    assert np.allclose(mat, np.eye(13), atol=1e-10)


def test_interpolation_matrix_requires_chebyshev():
    grid = fourier_grid(8, (0.0, 2.0 * np.pi))
    with pytest.raises(ValueError):
        analysis.interpolation_matrix(grid, np.array([0.5]))


# ---------------------------------------------------------------------------
# Gram probes
# ---------------------------------------------------------------------------

def test_population_gram_kappa_exactly_two():
    for n in (8, 16, 32):
        res = analysis.gram_probe(n, 100, seed=0)
        assert res.kappa_sq_pop == pytest.approx(2.0, abs=1e-12)


def test_empirical_gram_concentrates():
    res = analysis.gram_probe(16, 4000, seed=3)
    assert res.kappa_sq_emp <= 3.0


def test_empirical_gram_kappa_concentrates_at_large_m():
    # the empirical Gram has genuine off-diagonals, so it does not converge
    # entrywise to the diagonal population Gram; its condition number
    # concentrates near (and slightly above) the population value instead
    res = analysis.gram_probe(8, 200000, seed=0)
    assert 2.0 <= res.kappa_sq_emp <= 3.0


def test_gram_matrices_rejects_empty():
    with pytest.raises(ValueError):
        analysis.gram_matrices(np.zeros((0, 5)), 4)


# ---------------------------------------------------------------------------
# Lebesgue constant
# ---------------------------------------------------------------------------

def test_lebesgue_constant_log_growth():
    # Chebyshev points: Lambda_N <= (2/pi) log(N+1) + 1
    for n in (8, 16, 32, 64):
        lam = analysis.lebesgue_constant(chebyshev_grid(n, (-1.0, 1.0)))
        assert 1.0 <= lam <= (2.0 / np.pi) * np.log(n + 1) + 1.0 + 1e-6


def test_lebesgue_resolution_guard():
    grid = chebyshev_grid(16, (-1.0, 1.0))
    with pytest.raises(ValueError):
        analysis.lebesgue_constant(grid, resolution=20)


# ---------------------------------------------------------------------------
# Operator mis-specification
# ---------------------------------------------------------------------------

def test_epsilon_op_zero_for_identical_operators():
    grid = fourier_grid(32, (0.0, 2.0 * np.pi))
    op = make_diff_operator(grid, 1, DiffMethod.FOURIER_MATRIX)
    assert analysis.epsilon_op(op, op, trials=5) == 0.0


def test_epsilon_op_decay_rate_second_order():
    # 3-point FD vs spectral: eps_op(N) ~ N^{-2} (Cor. of the truncation law)
    errs, ns = [], (32, 64, 128, 256)
    for n in ns:
        grid = fourier_grid(n, (0.0, 2.0 * np.pi))
        true_op = make_diff_operator(grid, 1, DiffMethod.FOURIER_MATRIX)
        fd_op = make_diff_operator(grid, 1, DiffMethod.FINITE_DIFFERENCE, 1)
        errs.append(analysis.epsilon_op(true_op, fd_op, trials=100, seed=0))
    rate = analysis.fit_decay_rate(ns, errs)
    assert 1.7 <= rate <= 2.3


def test_epsilon_op_grid_mismatch_rejected():
    op_a = make_diff_operator(fourier_grid(16, (0.0, 2.0 * np.pi)), 1,
                              DiffMethod.FOURIER_MATRIX)
    op_b = make_diff_operator(fourier_grid(32, (0.0, 2.0 * np.pi)), 1,
                              DiffMethod.FOURIER_MATRIX)
    with pytest.raises(ValueError):
        analysis.epsilon_op(op_a, op_b)


def test_fit_decay_rate_recovers_exponent():
    ns = np.array([10, 20, 40, 80])
    errs = 3.0 * ns**-2.5
    assert analysis.fit_decay_rate(ns, errs) == pytest.approx(2.5, abs=1e-10)


def test_fit_bernstein_rho_recovers_rate():
    ns = np.arange(4, 40, 4)
    errs = 7.0 * 1.5**(-ns)
    assert analysis.fit_bernstein_rho(ns, errs) == pytest.approx(1.5, abs=1e-10)


# ---------------------------------------------------------------------------
# Collocation matrix
# ---------------------------------------------------------------------------

def test_collocation_matrix_advection_exact_on_interpolant():
    # L = d/dx + 2*Id applied to a degree-N polynomial is exact with the
    # spectral surrogate
    grid = chebyshev_grid(10, (-1.0, 1.0))
    spec = analysis.LinearOperatorSpec(terms=((2.0, 0), (1.0, 1)))
    mat, rhs = analysis.collocation_matrix(spec, grid)
    v = grid.nodes**3
    expect = 3.0 * grid.nodes**2 + 2.0 * grid.nodes**3
    assert np.allclose(mat @ v, expect, atol=1e-9)
    assert np.array_equal(rhs, np.zeros(grid.size))


def test_collocation_matrix_callable_coefficient_and_rhs():
    grid = chebyshev_grid(8, (-1.0, 1.0))
    spec = analysis.LinearOperatorSpec(
        terms=((lambda x: x, 1),), rhs=lambda x: np.sin(x))
    mat, rhs = analysis.collocation_matrix(spec, grid)
    v = grid.nodes**2
    assert np.allclose(mat @ v, grid.nodes * 2.0 * grid.nodes, atol=1e-9)
    assert np.allclose(rhs, np.sin(grid.nodes))


# ---------------------------------------------------------------------------
# Report containers
# ---------------------------------------------------------------------------

def test_theory_probe_validation():
    with pytest.raises(ValueError):
        analysis.TheoryProbe(n=4, kappa_sq=0.5)
    with pytest.raises(ValueError):
        analysis.TheoryProbe(n=4, lebesgue=0.0)
    with pytest.raises(ValueError):
        analysis.TheoryProbe(n=4, eps_op=-1.0)


def test_report_round_trip(tmp_path):
    history = optim.TrainHistory()
    history.log(0, 1.0, 0.9)
    history.log(10, 0.1, 0.09)
    report = analysis.ExperimentReport(config={"a": 1}, seed=5)
    report.add_trace("run", history)
    report.final_metrics = {"final_loss": 0.1}
    report.probes = [analysis.TheoryProbe(n=8, kappa_sq=2.0)]
    path = tmp_path / "report.json"
    report.save(path)
    loaded = analysis.ExperimentReport.load(path)
    assert loaded.config == {"a": 1}
    assert loaded.seed == 5
    assert loaded.traces["run"]["losses"] == [1.0, 0.1]
    assert loaded.probes[0].kappa_sq == 2.0


def test_trace_csv_format(tmp_path):
    history = optim.TrainHistory()
    history.log(0, 0.5, 1.0)
    history.log(5, 0.25, 0.5)
    report = analysis.ExperimentReport(config={}, seed=0)
    report.add_trace("only", history)
    path = tmp_path / "trace.csv"
    report.write_trace_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "iteration,loss,l2re"
    assert lines[1].startswith("0,0.5,1")
    assert len(lines) == 3


def test_trace_csv_requires_name_when_ambiguous(tmp_path):
    history = optim.TrainHistory()
    history.log(0, 1.0)
    report = analysis.ExperimentReport(config={}, seed=0)
    report.add_trace("a", history)
    report.add_trace("b", history)
    with pytest.raises(ValueError):
        report.write_trace_csv(tmp_path / "x.csv")


# ---------------------------------------------------------------------------
# Interpolation study helpers
# ---------------------------------------------------------------------------

def test_interpolation_task_converges_spectrally():
    target = lambda x: np.sin(4.0 * x)
    errs = []
    for n in (8, 16, 24):
        model, loss_fn = analysis.interpolation_task(n, target, m=100, seed=0)
        optim.run_gd(model, loss_fn, 3000, "auto", eval_every=1000)
        errs.append(analysis.interpolation_l2re(model, target))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-8


def test_trace_plateau_slope_on_synthetic_trace():
    steps = np.arange(0, 101, 10)
    errors = np.maximum(1e-8, 10.0**(-0.1 * steps))  # 0.1 decades/step, floor 1e-8
    plateau, slope = analysis.trace_plateau_slope(steps, errors)
    assert plateau == pytest.approx(1e-8)
    assert slope == pytest.approx(0.1, rel=1e-6)


def test_decomposition_experiment_small_smoke():
    # tiny grid/budget smoke test: structure of the report, not the physics
    report = analysis.decomposition_experiment(
        stencils=(1, None), steps=5, rank=20, cg_iters=5, seed=0,
        grid_n=(12, 12), probe_n=(8, 8), eval_every=1, c=2.0, jobs=1,
        adam_steps=20,
    )
    assert set(report.final_metrics) == {"fd_k1", "spectral"}
    for label, metrics in report.final_metrics.items():
        assert metrics["kappa_sq"] >= 1.0
        assert np.isfinite(metrics["plateau_l2re"])
        assert label in report.traces
        assert label + "_adam" in report.traces
