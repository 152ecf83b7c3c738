import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from curiefield.coupling import ExactPmf, exact_pmf_definetti, exact_pmf_tilted
from curiefield.definetti import ModelParams, normalise
from curiefield.errors import DomainError, SupportMismatchError
from curiefield.rng import block_sizes, stream
from curiefield.stats import (EmpiricalSample, ExperimentReport, batch_means_se, convergence_sweep,
                              count_inversions, covariance, empirical_pmf, independence_calibration,
                              independence_check, independence_statistic, ks_distance,
                              ks_two_sample, magnetisation_replicas, mean_se, run_blocks,
                              tv_distance, var_se)


def _normal_block(rng, size):
    return rng.standard_normal(size)


def _pair_block(rng, size):
    return rng.random(size), rng.integers(0, 10, size)


class TestStreams:
    def test_reproducible(self):
        a = stream(5, "x", 3).random(4)
        b = stream(5, "x", 3).random(4)
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("other", [(6, "x", 3), (5, "y", 3), (5, "x", 4), (5, "x")])
    def test_distinct(self, other):
        assert not np.array_equal(stream(5, "x", 3).random(4), stream(*other).random(4))

    def test_rejects(self):
        with pytest.raises(ValueError):
            stream(None, "x")
        with pytest.raises(ValueError):
            stream(1, -2)

    @settings(max_examples=100)
    @given(total=st.integers(0, 10 ** 6), block=st.integers(1, 5000))
    def test_block_sizes(self, total, block):
        sizes = block_sizes(total, block)
        assert sum(sizes) == total and all(0 < s <= block for s in sizes)


class TestEmpiricalSample:
    def test_sorts(self):
        s = EmpiricalSample.of([3.0, 1.0, 2.0], seed=4)
        np.testing.assert_array_equal(s.values, [1.0, 2.0, 3.0])
        assert s.size == 3 and s.seed == 4

    def test_unsorted_rejected(self):
        with pytest.raises(DomainError):
            EmpiricalSample(np.array([2.0, 1.0]))


class TestKS:
    def test_median_point(self):
        assert ks_distance(EmpiricalSample.of([0.0]), norm.cdf) == 0.5

    def test_point_mass(self):
        step = lambda x: (np.asarray(x) >= 1.0).astype(float)
        left = lambda x: (np.asarray(x) > 1.0).astype(float)
        assert ks_distance(np.ones(100), step, left) == 0.0

    def test_two_atoms(self):
        cdf = lambda x: 0.5 * (np.asarray(x) >= -1) + 0.5 * (np.asarray(x) >= 1)
        left = lambda x: 0.5 * (np.asarray(x) > -1) + 0.5 * (np.asarray(x) > 1)
        x = np.array([-1.0] * 40 + [1.0] * 60)
        assert ks_distance(x, cdf, left) == pytest.approx(0.1)

    def test_matches_textbook_formula(self, rng):
        x = np.sort(rng.standard_normal(500))
        i = np.arange(1, 501)
        f = norm.cdf(x)
        ref = max(np.max(i / 500 - f), np.max(f - (i - 1) / 500))
        assert ks_distance(x, norm.cdf) == pytest.approx(ref, abs=1e-15)

    def test_large_sample(self):
        x = stream(31, "ks").standard_normal(10 ** 6)
        assert ks_distance(x, norm.cdf) <= 0.002

    def test_empty(self):
        with pytest.raises(DomainError):
            ks_distance(np.array([]), norm.cdf)

    def test_two_sample(self, rng):
        assert ks_two_sample([0.0, 1.0], [0.0, 1.0]) == 0.0
        assert ks_two_sample([0.0], [1.0]) == 1.0
        a, b = rng.standard_normal(10 ** 5), rng.standard_normal(10 ** 5)
        assert ks_two_sample(a, b) < 0.01

    @settings(max_examples=50, deadline=None)
    @given(x=st.lists(st.floats(-5, 5), min_size=1, max_size=200))
    def test_bounds(self, x):
        d = ks_distance(np.array(x), norm.cdf)
        assert 0.0 <= d <= 1.0 and d >= 0.5 / len(x) - 1e-12


class TestTV:
    def test_identical(self):
        p = exact_pmf_tilted(ModelParams(10, 0.5))
        assert tv_distance(p, p) == 0.0

    def test_disjoint(self):
        sup = np.array([-1, 1])
        assert tv_distance(ExactPmf(1, sup, np.array([1.0, 0.0])),
                           ExactPmf(1, sup, np.array([0.0, 1.0]))) == 1.0

    def test_support_mismatch(self):
        with pytest.raises(SupportMismatchError):
            tv_distance(exact_pmf_tilted(ModelParams(3, 1.0)), exact_pmf_tilted(ModelParams(4, 1.0)))

    def test_coupling_oracles(self):
        params = ModelParams(12, 0.8)
        assert tv_distance(exact_pmf_tilted(params),
                           exact_pmf_definetti(params, normalise(params))) <= 1e-8

    def test_empirical_pmf(self):
        pmf = empirical_pmf(np.array([-2, 0, 0, 2]), 2)
        np.testing.assert_array_equal(pmf.probs, [0.25, 0.5, 0.25])
        with pytest.raises(DomainError):
            empirical_pmf(np.array([1]), 2)


class TestIndependence:
    def test_independent_pairs(self, rng):
        n = 10 ** 5
        stat = independence_statistic(rng.standard_normal(n), rng.standard_normal(n))
        assert stat <= 3 / math.sqrt(n)

    def test_comonotone(self, rng):
        x = rng.standard_normal(10 ** 4)
        assert independence_statistic(x, x) >= 0.1

    def test_check_and_calibration(self, rng):
        pairs = rng.standard_normal((20000, 2))
        stat, calib = independence_check(pairs, stream(1, "calib"))
        assert calib > 0 and stat <= 2 * calib
        assert independence_check(pairs) == stat

    def test_calibration_detects_dependence(self, rng):
        x = rng.standard_normal(20000)
        y = 0.3 * x + rng.standard_normal(20000)
        assert independence_statistic(x, y) > 2 * independence_calibration(x, y, rng)

    def test_shape_errors(self):
        with pytest.raises(DomainError):
            independence_check(np.zeros((5, 3)))
        with pytest.raises(DomainError):
            independence_statistic(np.zeros(3), np.zeros(4))


class TestMoments:
    def test_mean_se(self):
        x = np.array([1.0, -1.0] * 50)
        assert mean_se(x) == pytest.approx(0.1)

    def test_var_se_gaussian(self, rng):
        x = rng.standard_normal(10 ** 5)
        assert var_se(x) == pytest.approx(math.sqrt(2 / 10 ** 5), rel=0.05)

    def test_batch_means_matches_iid(self, rng):
        x = rng.standard_normal(10 ** 5)
        assert batch_means_se(x) == pytest.approx(mean_se(x), rel=0.3)

    def test_batch_means_sees_correlation(self, rng):
        x = np.repeat(rng.standard_normal(1000), 100)
        assert batch_means_se(x) > 5 * mean_se(x)

    def test_covariance(self, rng):
        x = rng.standard_normal((1000, 3))
        np.testing.assert_allclose(covariance(x), np.cov(x.T, bias=True), atol=1e-14)


class TestRunBlocks:
    def test_worker_independence(self):
        a = run_blocks(_normal_block, 10000, 3, "rb", block_size=1000, workers=1)
        b = run_blocks(_normal_block, 10000, 3, "rb", block_size=1000, workers=3)
        np.testing.assert_array_equal(a, b)

    def test_tuples(self):
        u, k = run_blocks(_pair_block, 2500, 3, "tuple", block_size=1000)
        assert u.shape == k.shape == (2500,)

    def test_magnetisation_replicas(self):
        m, t = magnetisation_replicas(ModelParams(100, 0.5), 5000, 4, workers=2, block_size=1024)
        m2, t2 = magnetisation_replicas(ModelParams(100, 0.5), 5000, 4, workers=1, block_size=1024)
        np.testing.assert_array_equal(m, m2)
        np.testing.assert_array_equal(t, t2)
        assert np.all((m + 100) % 2 == 0)


class TestReport:
    def test_check_and_verdicts(self):
        r = ExperimentReport("demo")
        assert r.check("ks", 0.01, 0.02)
        assert not r.check("tv", 0.5, 0.1)
        assert r.check("count", 3, 3, "==")
        assert not r.passed
        for v in r.verdicts.values():
            assert v["threshold"] in r.thresholds

    def test_custom_verdict_needs_threshold(self):
        r = ExperimentReport("demo")
        with pytest.raises(DomainError):
            r.verdict("x", True, "missing")
        r.thresholds["bound"] = 1.0
        r.verdict("x", True, "bound")
        assert r.passed

    def test_json(self):
        r = ExperimentReport("demo", params={"n": np.int64(4)})
        r.check("value", np.float64(0.5), 1.0)
        r.timing["wall_clock_s"] = 1.23
        d = json.loads(r.to_json())
        assert d["schema"] == "1" and d["passed"] and d["params"]["n"] == 4
        assert "timing" not in json.loads(r.statistics_json())


class TestSweep:
    def test_decreasing(self):
        r = convergence_sweep(lambda n, reps, seed, w: 1.0 / n, [2, 4, 8], 10, 0, threshold=0.2)
        assert r.passed and r.statistics["inversions"] == 0
        assert r.info["distances"] == [0.5, 0.25, 0.125]

    def test_inversion_budget(self):
        vals = {1: 0.3, 2: 0.4, 3: 0.2, 4: 0.25}
        r = convergence_sweep(lambda n, *a: vals[n], [1, 2, 3, 4], 10, 0, allowed_inversions=1)
        assert not r.passed and r.statistics["inversions"] == 2

    def test_calibration_recorded(self):
        r = convergence_sweep(lambda n, *a: 1.0 / n, [1, 2], 10, 0,
                              calibration=lambda reps, seed, w: reps)
        assert r.info["calibration_distance_2x"] == 20

    def test_grid_must_increase(self):
        with pytest.raises(DomainError):
            convergence_sweep(lambda *a: 0.0, [4, 2], 10, 0)

    def test_error_context(self):
        def boom(n, *a):
            raise ValueError("bad draw")
        with pytest.raises(ValueError, match="n=8"):
            convergence_sweep(boom, [8], 10, 0)

    def test_count_inversions(self):
        assert count_inversions([3, 2, 2, 1]) == 0
        assert count_inversions([1, 2, 1, 2]) == 2
