"""Tests for barycentric and trigonometric interpolation."""

import numpy as np
import pytest

from baryspec.grid import TensorGrid, chebyshev_grid, fourier_grid
from baryspec.interp import (
    NODE_HIT_TOL,
    NodeValues,
    bary_eval,
    cheb_cardinal_matrix,
    contract_point_eval,
    contract_point_eval_adjoint,
    fourier_eval,
    point_eval_matrices,
    tensor_eval,
)


class TestBaryEval:
    def test_node_reproduction_bitwise(self):
        g = chebyshev_grid(17)
        rng = np.random.default_rng(0)
        vals = rng.standard_normal(18)
        nv = NodeValues(g, vals)
        out = bary_eval(nv, g.nodes)
        assert np.array_equal(out, vals)

    def test_near_node_hit_uses_node_value(self):
        g = chebyshev_grid(9)
        vals = np.random.default_rng(1).standard_normal(10)
        nv = NodeValues(g, vals)
        x = g.nodes[3] + 0.5 * NODE_HIT_TOL
        assert bary_eval(nv, x) == vals[3]

    @pytest.mark.parametrize("deg", [0, 1, 3, 7])
    def test_polynomial_reproduction(self, deg):
        g = chebyshev_grid(8, (0.0, 2.0))
        coeffs = np.random.default_rng(deg).standard_normal(deg + 1)
        f = np.polynomial.Polynomial(coeffs)
        nv = NodeValues(g, f(g.nodes))
        x = np.linspace(0.0, 2.0, 37)
        assert np.max(np.abs(bary_eval(nv, x) - f(x))) < 1e-12

    def test_sin4x_spectral_accuracy(self):
        g = chebyshev_grid(40, (-1.0, 1.0))
        nv = NodeValues(g, np.sin(4 * g.nodes))
        x = np.linspace(-1.0, 1.0, 1000)
        pred = bary_eval(nv, x)
        truth = np.sin(4 * x)
        assert np.linalg.norm(pred - truth) / np.linalg.norm(truth) < 1e-10

    def test_scalar_query(self):
        g = chebyshev_grid(6)
        nv = NodeValues(g, g.nodes**2)
        assert bary_eval(nv, 0.3) == pytest.approx(0.09, abs=1e-13)

    def test_rejects_nonfinite_values(self):
        g = chebyshev_grid(4)
        vals = np.ones(5)
        vals[2] = np.nan
        with pytest.raises(ValueError):
            NodeValues(g, vals)


class TestCardinalMatrix:
    def test_identity_at_nodes(self):
        g = chebyshev_grid(10)
        mat = cheb_cardinal_matrix(g.canonical_nodes, g.canonical_nodes, g.bary_weights)
        assert np.array_equal(mat, np.eye(11))

    def test_partition_of_unity(self):
        g = chebyshev_grid(12)
        x = np.linspace(-1, 1, 201)
        mat = cheb_cardinal_matrix(x, g.canonical_nodes, g.bary_weights)
        assert np.max(np.abs(mat.sum(axis=1) - 1.0)) < 1e-13


class TestFourierEval:
    def test_node_reproduction_bitwise(self):
        g = fourier_grid(12)
        vals = np.random.default_rng(2).standard_normal(12)
        nv = NodeValues(g, vals)
        assert np.array_equal(fourier_eval(nv, g.nodes), vals)

    @pytest.mark.parametrize("n", [8, 9, 16])
    def test_trig_polynomial_exact(self, n):
        g = fourier_grid(n)
        f = lambda x: 1.0 + np.sin(x) - 0.5 * np.cos(3 * x)
        nv = NodeValues(g, f(g.nodes))
        x = np.linspace(0, 2 * np.pi, 101)
        assert np.max(np.abs(fourier_eval(nv, x) - f(x))) < 1e-13

    def test_real_data_gives_real_interpolant(self):
        # even N: the Nyquist mode must be balanced into a pure cosine
        g = fourier_grid(8)
        vals = np.random.default_rng(3).standard_normal(8)
        nv = NodeValues(g, vals)
        out = fourier_eval(nv, np.linspace(0, 2 * np.pi, 57))
        assert np.isrealobj(out)

    def test_nyquist_mode_symmetric(self):
        # data sampled from cos(4x) on 8 nodes must reproduce cos(4x), not e^{4ix}
        g = fourier_grid(8)
        nv = NodeValues(g, np.cos(4 * g.nodes))
        x = np.linspace(0, 2 * np.pi, 33)
        assert np.max(np.abs(fourier_eval(nv, x) - np.cos(4 * x))) < 1e-12

    def test_periodic_queries(self):
        g = fourier_grid(10, (0.0, 1.0))
        nv = NodeValues(g, np.sin(2 * np.pi * g.nodes))
        assert fourier_eval(nv, 1.3) == pytest.approx(fourier_eval(nv, 0.3), abs=1e-13)


class TestTensorEval:
    def test_separable_product(self):
        tg = TensorGrid([chebyshev_grid(16, (0.0, 1.0)), fourier_grid(16)])
        t, x = tg.meshgrid()
        vals = np.exp(-t) * np.sin(x)
        nv = NodeValues(tg, vals)
        rng = np.random.default_rng(4)
        pts = np.column_stack([rng.uniform(0, 1, 50), rng.uniform(0, 2 * np.pi, 50)])
        pred = tensor_eval(nv, pts)
        truth = np.exp(-pts[:, 0]) * np.sin(pts[:, 1])
        assert np.max(np.abs(pred - truth)) < 1e-10

    def test_grid_nodes_reproduced(self):
        tg = TensorGrid([chebyshev_grid(5), chebyshev_grid(4, (0.0, 1.0))])
        vals = np.random.default_rng(5).standard_normal(tg.shape)
        nv = NodeValues(tg, vals)
        out = tensor_eval(nv, tg.node_points())
        assert np.allclose(out, vals.ravel(), atol=1e-14)

    def test_adjoint_identity(self):
        tg = TensorGrid([chebyshev_grid(6), fourier_grid(8)])
        rng = np.random.default_rng(6)
        pts = np.column_stack([rng.uniform(-1, 1, 20), rng.uniform(0, 2 * np.pi, 20)])
        mats = point_eval_matrices(tg, pts)
        v = rng.standard_normal(tg.shape)
        w = rng.standard_normal(20)
        lhs = np.dot(contract_point_eval(mats, v), w)
        rhs = np.sum(v * contract_point_eval_adjoint(mats, w, tg.shape))
        assert lhs == pytest.approx(rhs, rel=1e-12)
