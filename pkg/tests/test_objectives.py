import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fd_tangent_gradient, interior_point, random_ce_matrix, random_mse_matrix
from mixmin.errors import MixMinError, ZeroProbabilityError
from mixmin.objectives import (
    LossKind,
    PredictionMatrix,
    batch_objective,
    ce_gradient,
    ce_objective,
    mix_log_scores,
    mse_gradient,
    mse_objective,
    objective,
    gradient,
)
from mixmin.simplex import validate_simplex


class TestMixLogScores:
    def test_single_source(self):
        assert mix_log_scores([-2.0], [1.0]) == -2.0

    @pytest.mark.parametrize("lam", [[0.5, 0.5], [0.1, 0.9], [1.0, 0.0]])
    def test_equal_scores(self, lam):
        assert mix_log_scores([-3.7, -3.7], lam) == pytest.approx(-3.7, abs=1e-15)

    def test_two_sources(self):
        value = mix_log_scores([math.log(0.9), math.log(0.1)], [0.5, 0.5])
        assert value == pytest.approx(math.log(0.5), abs=1e-15)
        assert value == pytest.approx(-0.69315, abs=1e-5)

    def test_zero_weight_ignores_minus_inf(self):
        assert mix_log_scores([-1.0, -np.inf], [1.0, 0.0]) == -1.0

    def test_all_mass_on_zero_probability(self):
        with pytest.raises(ZeroProbabilityError, match="zero probability"):
            mix_log_scores([-np.inf, -1.0], [1.0, 0.0])

    def test_no_underflow_for_long_sequences(self):
        # sequence log-likelihoods far below exp's range
        value = mix_log_scores([-5000.0, -5001.0], [0.5, 0.5])
        expected = -5000.0 + math.log(0.5 + 0.5 * math.exp(-1.0))
        assert value == pytest.approx(expected, abs=1e-9)


class TestCeObjective:
    def test_perfect_model(self):
        m = PredictionMatrix(LossKind.CE_UNCONDITIONAL, np.zeros((4, 1)))
        assert ce_objective(m, [1.0]) == 0.0

    def test_balanced_mixture(self, two_symbol_matrix):
        assert ce_objective(two_symbol_matrix, [0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-15)

    def test_vertex(self, two_symbol_matrix):
        expected = -(2 * math.log(0.8) + math.log(0.2)) / 3
        value = ce_objective(two_symbol_matrix, [1.0, 0.0])
        assert value == pytest.approx(expected, abs=1e-15)
        assert value == pytest.approx(0.6852417, abs=1e-7)

    def test_error_names_sample(self):
        m = PredictionMatrix(
            LossKind.CE_UNCONDITIONAL,
            [[0.0, -1.0], [-np.inf, -1.0]],
            sample_ids=("ok", "bad"),
        )
        with pytest.raises(ZeroProbabilityError, match="'bad'"):
            ce_objective(m, [1.0, 0.0])

    def test_rejects_mse_matrix(self):
        m = PredictionMatrix(LossKind.MSE, [[1.0]], targets=[1.0])
        with pytest.raises(MixMinError):
            ce_objective(m, [1.0])

    def test_source_id_mismatch(self, two_symbol_matrix):
        with pytest.raises(MixMinError, match="sources"):
            ce_objective(two_symbol_matrix, validate_simplex([0.5, 0.5], source_ids=["x", "y"]))


class TestCeGradient:
    def test_identical_columns(self):
        col = np.log(np.random.default_rng(0).uniform(0.1, 1, size=(7, 1)))
        m = PredictionMatrix(LossKind.CE_UNCONDITIONAL, np.hstack([col, col, col]))
        g = ce_gradient(m, [0.2, 0.3, 0.5])
        np.testing.assert_allclose(g, g[0], rtol=0, atol=1e-15)

    def test_two_symbol_world(self, two_symbol_matrix):
        # -(1/3)(0.8/0.5 + 0.8/0.5 + 0.2/0.5), -(1/3)(0.2/0.5 + 0.2/0.5 + 0.8/0.5)
        np.testing.assert_allclose(
            ce_gradient(two_symbol_matrix, [0.5, 0.5]), [-1.2, -0.8], atol=1e-9
        )

    def test_dot_identity(self, two_symbol_matrix):
        for lam in ([0.5, 0.5], [0.9, 0.1], [1.0, 0.0]):
            assert np.dot(lam, ce_gradient(two_symbol_matrix, lam)) == pytest.approx(-1, abs=1e-12)

    def test_zero_weight_source_with_minus_inf(self):
        m = PredictionMatrix(LossKind.CE_UNCONDITIONAL, [[-1.0, -np.inf], [-2.0, -0.5]])
        g = ce_gradient(m, [1.0, 0.0])
        assert np.all(np.isfinite(g))
        assert g[0] == pytest.approx(-1.0)


class TestMse:
    def test_perfect_fit(self):
        m = PredictionMatrix(LossKind.MSE, [[0.3], [1.2]], targets=[0.3, 1.2])
        assert mse_objective(m, [1.0]) == 0.0

    @pytest.fixture
    def hull(self):
        return PredictionMatrix(LossKind.MSE, [[1.0, 0.0], [1.0, 0.0]], targets=[0.3, 0.3])

    def test_midpoint(self, hull):
        assert mse_objective(hull, [0.5, 0.5]) == pytest.approx(0.04, abs=1e-15)

    def test_interpolation(self, hull):
        assert mse_objective(hull, [0.3, 0.7]) == pytest.approx(0.0, abs=1e-15)

    def test_gradient(self, hull):
        np.testing.assert_allclose(mse_gradient(hull, [0.5, 0.5]), [0.4, 0.0], atol=1e-15)

    def test_stationary(self, hull):
        np.testing.assert_allclose(mse_gradient(hull, [0.3, 0.7]), [0.0, 0.0], atol=1e-15)

    def test_missing_targets(self):
        with pytest.raises(MixMinError, match="targets"):
            PredictionMatrix(LossKind.MSE, [[1.0]])


class TestPredictionMatrix:
    def test_nan_rejected(self):
        with pytest.raises(MixMinError, match="NaN"):
            PredictionMatrix(LossKind.CE_UNCONDITIONAL, [[np.nan]])

    def test_conditional_must_be_log_probability(self):
        with pytest.raises(MixMinError):
            PredictionMatrix(LossKind.CE_CONDITIONAL, [[0.1]])

    def test_unconditional_density_may_exceed_one(self):
        m = PredictionMatrix(LossKind.CE_UNCONDITIONAL, [[2.0, 1.0]])
        assert ce_objective(m, [0.5, 0.5]) < 0

    def test_duplicate_sample_ids(self):
        with pytest.raises(MixMinError, match="duplicate"):
            PredictionMatrix(LossKind.CE_UNCONDITIONAL, [[0.0], [0.0]], sample_ids=("a", "a"))

    def test_row_weights_match_replication(self):
        scores = np.log([[0.8, 0.2], [0.2, 0.8]])
        weighted = PredictionMatrix(LossKind.CE_UNCONDITIONAL, scores, row_weights=[2 / 3, 1 / 3])
        replicated = PredictionMatrix(LossKind.CE_UNCONDITIONAL, scores[[0, 0, 1]])
        for lam in ([0.5, 0.5], [0.2, 0.8]):
            assert ce_objective(weighted, lam) == pytest.approx(ce_objective(replicated, lam), abs=1e-15)
            np.testing.assert_allclose(
                ce_gradient(weighted, lam), ce_gradient(replicated, lam), atol=1e-15
            )


def _ce_or_mse(rng, loss):
    return random_ce_matrix(rng) if loss == "ce" else random_mse_matrix(rng)


class TestProperties:
    @pytest.mark.parametrize("loss", ["ce", "mse"])
    def test_convexity(self, loss):
        rng = np.random.default_rng(11)
        for _ in range(200):
            m = _ce_or_mse(rng, loss)
            a = rng.dirichlet(np.ones(m.n_sources))
            b = rng.dirichlet(np.ones(m.n_sources))
            t = rng.uniform()
            lhs = objective(m, t * a + (1 - t) * b)
            rhs = t * objective(m, a) + (1 - t) * objective(m, b)
            assert lhs <= rhs + 1e-9

    @pytest.mark.parametrize("loss", ["ce", "mse"])
    def test_finite_differences(self, loss):
        rng = np.random.default_rng(12)
        for _ in range(50):
            m = _ce_or_mse(rng, loss)
            lam = interior_point(rng, m.n_sources)
            g = gradient(m, lam)
            fd = fd_tangent_gradient(lambda x: objective(m, x), lam)
            an = g[:-1] - g[-1]
            assert np.max(np.abs(fd - an)) <= 1e-6 * max(np.max(np.abs(an)), 1e-3)

    def test_mse_full_coordinate_finite_differences(self):
        rng = np.random.default_rng(13)
        m = random_mse_matrix(rng, n=30, p=4)
        lam = interior_point(rng, 4)
        h = 1e-5
        fd = np.array([
            (mse_objective(m, lam + h * e) - mse_objective(m, lam - h * e)) / (2 * h)
            for e in np.eye(4)
        ])
        g = mse_gradient(m, lam)
        assert np.max(np.abs(fd - g)) <= 1e-6 * np.max(np.abs(g))

    @given(st.integers(0, 10_000))
    @settings(max_examples=100, deadline=None)
    def test_ce_dot_identity(self, seed):
        rng = np.random.default_rng(seed)
        m = random_ce_matrix(rng)
        lam = rng.dirichlet(np.ones(m.n_sources))
        assert abs(np.dot(lam, ce_gradient(m, lam)) + 1) <= 1e-9

    @pytest.mark.parametrize("loss", ["ce", "mse"])
    def test_permutations(self, loss):
        rng = np.random.default_rng(14)
        m = _ce_or_mse(rng, loss)
        lam = rng.dirichlet(np.ones(m.n_sources))
        rows = rng.permutation(m.n_samples)
        cols = rng.permutation(m.n_sources)
        row_perm = m.take(rows)
        col_perm = PredictionMatrix(
            m.loss_kind, m.scores[:, cols], m.targets, m.sample_ids,
            tuple(m.source_ids[c] for c in cols),
        )
        assert objective(row_perm, lam) == pytest.approx(objective(m, lam), rel=1e-13)
        assert objective(col_perm, lam[cols]) == pytest.approx(objective(m, lam), rel=1e-13)
        np.testing.assert_allclose(gradient(col_perm, lam[cols]), gradient(m, lam)[cols], rtol=1e-13)

    @pytest.mark.parametrize("loss", ["ce", "mse"])
    def test_batch_matches_scalar(self, loss):
        rng = np.random.default_rng(15)
        m = _ce_or_mse(rng, loss)
        cands = rng.dirichlet(np.ones(m.n_sources), size=50)
        batch = batch_objective(m, cands)
        scalar = np.array([objective(m, c) for c in cands])
        np.testing.assert_allclose(batch, scalar, rtol=1e-12)

    def test_bit_reproducible(self):
        rng = np.random.default_rng(16)
        m = random_ce_matrix(rng, n=500, p=5)
        lam = rng.dirichlet(np.ones(5))
        assert ce_objective(m, lam) == ce_objective(m, lam.copy())
        assert np.array_equal(ce_gradient(m, lam), ce_gradient(m, lam.copy()))
