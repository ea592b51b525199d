import math

import numpy as np
import pytest

from cpmarg import (
    ChangepointWeights,
    ContractViolation,
    EvaluationError,
    SegmentLikelihoodMatrix,
    build_likelihood_matrix,
    changepoint_index,
    log_normalizer,
    marginal_log_likelihood,
)
from cpmarg.models import GaussianParams
from cpmarg.oracle import enumerate_matrix, iter_configurations, joint_log_prob, restricted_log_sum

from conftest import random_instance


class TestChangepointIndex:
    def test_last_index_is_t(self):
        assert changepoint_index(3, 7, 4) == 7

    def test_formula(self):
        assert changepoint_index(1, 7, 4) == 5

    @pytest.mark.parametrize("t", [1, 5, 9])
    def test_two_segments(self, t):
        assert changepoint_index(1, t, 2) == t

    @pytest.mark.parametrize("k,t", [(0, 5), (4, 5), (1, 2)])
    def test_out_of_range(self, k, t):
        with pytest.raises(ContractViolation):
            changepoint_index(k, t, 4, n=10)

    def test_t_beyond_n(self):
        with pytest.raises(ContractViolation):
            changepoint_index(1, 10, 4, n=10)


class TestLogNormalizer:
    def test_single_segment(self):
        assert log_normalizer(ChangepointWeights(np.array([0.3, -1.0, 0.0]), 1)) == 0.0

    def test_uniform_counts_configurations(self):
        assert log_normalizer(ChangepointWeights.uniform(5, 3)) == pytest.approx(math.log(6), abs=1e-14)

    def test_weighted_hand_example(self):
        w = ChangepointWeights.from_weights([2.0, 3.0, 4.0, 1.0], 3)
        assert log_normalizer(w) == pytest.approx(math.log(26), abs=1e-14)

    def test_m_equals_n(self):
        w = ChangepointWeights.from_weights([2.0, 3.0, 1.0], 3)
        # single configuration tau = (0, 1, 2, 3)
        assert log_normalizer(w) == pytest.approx(math.log(6))

    def test_m_greater_than_n_rejected(self):
        with pytest.raises(ContractViolation):
            ChangepointWeights.uniform(3, 4)

    def test_last_weight_must_be_one(self):
        with pytest.raises(ContractViolation):
            ChangepointWeights.from_weights([1.0, 2.0], 1)

    @pytest.mark.parametrize("n", [10, 33, 60])
    def test_binomial(self, n):
        for m in range(1, n + 1):
            got = log_normalizer(ChangepointWeights.uniform(n, m))
            expected = math.lgamma(n) - math.lgamma(m) - math.lgamma(n - m + 1)
            assert abs(math.expm1(got - expected)) <= 1e-10


class TestLikelihoodMatrix:
    def test_shape_and_values(self, model):
        x = np.array([0.0, 1.0, -2.0, 3.5])
        z = GaussianParams([0.0, 1.0, 2.0], [1.0, 2.0, 0.5])
        mat = build_likelihood_matrix(model, x, z)
        assert mat.log_p.shape == (3, 4)
        r = (x[None, :] - z.mu[:, None]) / z.sigma[:, None]
        expected = -0.5 * math.log(2 * math.pi) - np.log(z.sigma)[:, None] - 0.5 * r * r
        np.testing.assert_allclose(mat.log_p, expected, rtol=0, atol=1e-14)

    def test_prefix_sums(self, model):
        rng = np.random.default_rng(3)
        x, z, _ = random_instance(rng, 25, 4)
        mat = build_likelihood_matrix(model, x, z)
        for i in range(1, 5):
            for s in range(0, 25):
                for t in range(s + 1, 26):
                    direct = sum(mat.log_p[i - 1, s:t])
                    assert abs(mat.segment_log_prob(i, s, t) - direct) <= 1e-12

    def test_nan_named(self):
        lp = np.zeros((2, 3))
        lp[1, 2] = np.nan
        with pytest.raises(EvaluationError, match=r"i=2, j=3"):
            SegmentLikelihoodMatrix.from_log_p(lp)


class TestMarginal:
    def test_single_segment_standard_normal(self, model):
        mat = build_likelihood_matrix(model, [0.0, 0.0], GaussianParams([0.0], [1.0]))
        value, _ = marginal_log_likelihood(mat, ChangepointWeights.uniform(2, 1))
        assert value == pytest.approx(-math.log(2 * math.pi), abs=1e-14)

    def test_m_equals_n(self, model):
        rng = np.random.default_rng(0)
        x, z, w = random_instance(rng, 6, 6)
        mat = build_likelihood_matrix(model, x, z)
        value, _ = marginal_log_likelihood(mat, w)
        expected = sum(mat.log_p[j, j] for j in range(6))
        assert value == pytest.approx(expected, abs=1e-12)

    def test_small_enumeration(self, model):
        x = [0.0, 0.0, 5.0, 5.0]
        z = GaussianParams([0.0, 5.0], [1.0, 1.0])
        mat = build_likelihood_matrix(model, x, z)
        w = ChangepointWeights.uniform(4, 2)
        value, _ = marginal_log_likelihood(mat, w)
        scores = [joint_log_prob(mat, w, (0, t, 4)) for t in (1, 2, 3)]
        assert abs(value - np.logaddexp.reduce(scores)) <= 1e-10

    def test_dead_row_gives_minus_inf(self):
        lp = np.zeros((3, 6))
        lp[1, :] = -np.inf
        value, _ = marginal_log_likelihood(
            SegmentLikelihoodMatrix.from_log_p(lp), ChangepointWeights.uniform(6, 3)
        )
        assert value == -np.inf

    def test_zero_denominator_raises(self):
        lp = np.zeros((2, 5))
        lp[1, 2] = -np.inf
        with pytest.raises(EvaluationError, match="i=2, j=3"):
            marginal_log_likelihood(
                SegmentLikelihoodMatrix.from_log_p(lp), ChangepointWeights.uniform(5, 2)
            )

    def test_long_series_no_underflow(self, model):
        rng = np.random.default_rng(1)
        x, z, w = random_instance(rng, 1000, 5, weighted=False)
        value, _ = marginal_log_likelihood(build_likelihood_matrix(model, x, z), w)
        assert np.isfinite(value) and value < -1000

    def test_mismatched_inputs(self, model):
        mat = build_likelihood_matrix(model, [0.0, 1.0, 2.0], GaussianParams([0.0, 1.0], [1.0, 1.0]))
        with pytest.raises(ContractViolation):
            marginal_log_likelihood(mat, ChangepointWeights.uniform(3, 3))


class TestTables:
    def test_table_invariants(self, model):
        rng = np.random.default_rng(5)
        x, z, w = random_instance(rng, 12, 4)
        _, tables = marginal_log_likelihood(build_likelihood_matrix(model, x, z), w)
        m, n = 4, 12
        assert np.all(tables.log_L[0, m - 1:] == -np.inf)
        assert np.all(tables.log_R[m, m - 1:] == 0.0)
        base = tables.log_L[1:, m - 1]
        assert np.all(base == base[0])
        assert not tables.log_L.flags.writeable

    def test_R_matches_product_definition(self, model):
        rng = np.random.default_rng(11)
        for _ in range(20):
            n, m = int(rng.integers(4, 15)), int(rng.integers(2, 5))
            x, z, w = random_instance(rng, n, m)
            mat = build_likelihood_matrix(model, x, z)
            _, tables = marginal_log_likelihood(mat, w)
            lp, lw = mat.log_p, w.log_w
            for k in range(1, m + 1):
                for t in range(m - 1, n):
                    log_r = 0.0
                    for j in range(k, m):
                        b = changepoint_index(j, t, m)
                        # shifting tau_j from b to b+1 moves x_{b+1} from segment j+1 to j
                        log_r += lp[j - 1, b] + lw[b] - lp[j, b] - lw[b - 1]
                    assert math.isclose(
                        math.exp(tables.log_R[k, t]), math.exp(log_r), rel_tol=1e-10
                    )

    def test_L_is_restricted_sum(self, model):
        rng = np.random.default_rng(7)
        for _ in range(10):
            n, m = int(rng.integers(4, 10)), int(rng.integers(2, 5))
            m = min(m, n)
            x, z, w = random_instance(rng, n, m)
            mat = build_likelihood_matrix(model, x, z)
            _, tables = marginal_log_likelihood(mat, w)
            for k in range(1, m):
                for t in range(m - 1, n):
                    ref = restricted_log_sum(mat, w, k, t)
                    assert tables.log_L[k, t] == pytest.approx(ref, abs=1e-10)

    def test_partition_identities(self, model):
        # T_{k,t} splits on whether tau_{k-1} sits at b(k-1, t)
        rng = np.random.default_rng(8)
        for _ in range(10):
            n, m = int(rng.integers(5, 11)), 4
            x, z, w = random_instance(rng, n, m)
            mat = build_likelihood_matrix(model, x, z)
            _, tables = marginal_log_likelihood(mat, w)
            for k in range(2, m):
                for t in range(m, n):
                    at_b = restricted_log_sum(mat, w, k, t, prev_at_b=True)
                    off_b = restricted_log_sum(mat, w, k, t, prev_at_b=False)
                    assert at_b == pytest.approx(tables.log_L[k - 1, t], abs=1e-10)
                    shifted = tables.log_L[k, t - 1] + tables.log_R[k, t - 1]
                    assert off_b == pytest.approx(shifted, abs=1e-10)


class TestProperties:
    def test_lower_bound(self, model):
        rng = np.random.default_rng(21)
        for _ in range(15):
            n, m = int(rng.integers(3, 9)), int(rng.integers(1, 4))
            m = min(m, n)
            x, z, w = random_instance(rng, n, m)
            mat = build_likelihood_matrix(model, x, z)
            value, _ = marginal_log_likelihood(mat, w)
            for tau in iter_configurations(n, m):
                assert value >= joint_log_prob(mat, w, tau) - 1e-12

    def test_translation_invariance(self, model):
        rng = np.random.default_rng(22)
        for _ in range(10):
            x, z, w = random_instance(rng, 40, 4)
            c = float(rng.normal(0, 50))
            a, _ = marginal_log_likelihood(build_likelihood_matrix(model, x, z), w)
            zs = GaussianParams(z.mu + c, z.sigma)
            b, _ = marginal_log_likelihood(build_likelihood_matrix(model, np.asarray(x) + c, zs), w)
            assert abs(a - b) <= 1e-9

    def test_matches_enumeration_weighted(self, model):
        rng = np.random.default_rng(23)
        x, z, w = random_instance(rng, 9, 3)
        mat = build_likelihood_matrix(model, x, z)
        assert abs(marginal_log_likelihood(mat, w)[0] - enumerate_matrix(mat, w)) <= 1e-9
