import math

import numpy as np
import pytest

from conftest import ENTROPY_06_04, bisect
from mixmin.baselines import grid_search
from mixmin.errors import MixMinError, ZeroProbabilityError
from mixmin.objectives import LossKind, PredictionMatrix, ce_objective, objective
from mixmin.solver import SolverConfig, exact_expectation_matrix, mixmin_fit
from mixmin.synthworld import WorldSpec, gen_world


def _skewed_optimum():
    # d/dw of -0.6 ln(0.2 + 0.6 w) - 0.4 ln(0.8 - 0.6 w)
    def deriv(w):
        return -0.36 / (0.2 + 0.6 * w) + 0.24 / (0.8 - 0.6 * w)
    return bisect(deriv, 0.0, 1.0)


class TestMixminFit:
    def test_single_source(self):
        m = PredictionMatrix(LossKind.CE_UNCONDITIONAL, [[-1.0], [-2.0]])
        w, trace = mixmin_fit(m, SolverConfig(steps=7))
        np.testing.assert_array_equal(w.values, [1.0])
        assert len(trace) == 8

    def test_symmetric_world(self, symmetric_world):
        m = exact_expectation_matrix(symmetric_world, symmetric_world.sources)
        w, _ = mixmin_fit(m)
        np.testing.assert_allclose(w.values, [0.5, 0.5], atol=1e-6)

    def test_skewed_world_closed_form(self, skewed_world):
        w_star = _skewed_optimum()
        assert w_star == pytest.approx(2 / 3, abs=1e-12)
        m = exact_expectation_matrix(skewed_world, skewed_world.sources)
        w, _ = mixmin_fit(m, SolverConfig(eta=1.0, steps=100))
        np.testing.assert_allclose(w.values, [w_star, 1 - w_star], atol=1e-3)
        g, _ = grid_search(m, 1e-3)
        np.testing.assert_allclose(w.values, g.values, atol=1e-3)

    def test_trace_shape_and_validity(self, skewed_world):
        m = exact_expectation_matrix(skewed_world, skewed_world.sources)
        _, trace = mixmin_fit(m, SolverConfig(steps=25))
        assert trace.objectives.shape == (26,)
        assert trace.weights.shape == (26, 2)
        np.testing.assert_array_equal(trace.weights[0], [0.5, 0.5])
        assert trace.objectives[0] == pytest.approx(math.log(2))
        np.testing.assert_allclose(trace.weights.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(trace.weights >= 0)
        assert np.all(np.isfinite(trace.objectives))

    def test_no_trace(self, skewed_world):
        m = exact_expectation_matrix(skewed_world, skewed_world.sources)
        w, trace = mixmin_fit(m, SolverConfig(record_trace=False))
        assert trace is None
        w2, _ = mixmin_fit(m)
        assert w == w2

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        m = PredictionMatrix(LossKind.CE_UNCONDITIONAL, np.log(rng.uniform(0.01, 1, (200, 4))))
        a, ta = mixmin_fit(m)
        b, tb = mixmin_fit(m)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(ta.objectives, tb.objectives)
        assert np.array_equal(ta.weights, tb.weights)

    def test_descent_on_random_worlds(self):
        for seed in range(10):
            world = gen_world(WorldSpec(6, 3, seed=seed))
            m = exact_expectation_matrix(world, world.sources)
            _, trace = mixmin_fit(m)
            assert trace.objectives[-1] <= trace.objectives[0]

    def test_mse(self):
        # y = 0.3 f1 + 0.7 f2 exactly
        rng = np.random.default_rng(4)
        f = rng.normal(size=(50, 2))
        m = PredictionMatrix(LossKind.MSE, f, targets=f @ [0.3, 0.7])
        w, _ = mixmin_fit(m, SolverConfig(steps=2000))
        np.testing.assert_allclose(w.values, [0.3, 0.7], atol=1e-4)

    def test_error_reports_step(self):
        m = PredictionMatrix(LossKind.CE_UNCONDITIONAL, [[-np.inf, -np.inf]])
        with pytest.raises(ZeroProbabilityError, match="step 0"):
            mixmin_fit(m)

    @pytest.mark.parametrize("kwargs", [{"eta": 0.0}, {"eta": -1.0}, {"steps": 0}])
    def test_bad_config(self, kwargs):
        with pytest.raises(MixMinError):
            SolverConfig(**kwargs)


class TestExactExpectationMatrix:
    def test_point_mass(self):
        m = exact_expectation_matrix([1.0, 0.0], [[1.0, 0.0]])
        assert ce_objective(m, [1.0]) == 0.0

    def test_entropy_at_optimum(self, skewed_world):
        m = exact_expectation_matrix(skewed_world, skewed_world.sources)
        value = ce_objective(m, [2 / 3, 1 / 3])
        assert value == pytest.approx(ENTROPY_06_04, abs=1e-12)
        assert value == pytest.approx(0.67301, abs=1e-5)

    def test_uniform(self):
        m = exact_expectation_matrix([0.5, 0.5], [[0.5, 0.5]])
        assert ce_objective(m, [1.0]) == pytest.approx(math.log(2), abs=1e-15)

    def test_matches_cross_entropy(self):
        rng = np.random.default_rng(5)
        target = rng.dirichlet(np.ones(6))
        q = rng.dirichlet(np.ones(6), size=3)
        lam = rng.dirichlet(np.ones(3))
        mix = lam @ q
        expected = -np.sum(target * np.log(mix))
        assert objective(exact_expectation_matrix(target, q), lam) == pytest.approx(expected, rel=1e-13)

    def test_no_proxy_covers_symbol(self):
        with pytest.raises(MixMinError, match="symbol 1"):
            exact_expectation_matrix([0.5, 0.5], [[1.0, 0.0], [1.0, 0.0]])
