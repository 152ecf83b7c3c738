import numpy as np
import pytest
from scipy.stats import norm

from curiefield.experiments import (REGISTRY, ExperimentConfig, cdf_table, histogram_table,
                                    matrix_table, run_experiment)


class TestTables:
    def test_histogram(self, rng):
        header, rows = histogram_table(rng.standard_normal(1000), bins=10)
        assert header == ["bin_left", "bin_right", "count", "density"]
        assert sum(r[2] for r in rows) == 1000
        assert sum(r[3] * (r[1] - r[0]) for r in rows) == pytest.approx(1.0)

    def test_cdf(self, rng):
        header, rows = cdf_table(rng.standard_normal(5000), norm.cdf, points=11)
        assert header == ["x", "empirical", "limit"] and len(rows) == 11
        assert rows[-1][1] == 1.0
        assert all(abs(e - l) < 0.05 for _, e, l in rows)

    def test_matrix(self):
        header, rows = matrix_table([0.1, 0.2], np.eye(2), np.zeros((2, 2)))
        assert len(header) == 6 and len(rows) == 4 and rows[0][4] == 1.0


class TestConfig:
    def test_pick(self):
        cfg = ExperimentConfig("verify-series", beta=[0.7])
        assert cfg.pick("beta", [1.0]) == [0.7] and cfg.pick("gamma", [0.0]) == [0.0]

    def test_every_experiment_has_anchor(self):
        assert len(REGISTRY) == 14
        for exp in REGISTRY.values():
            assert exp.description and exp.anchor

    @pytest.mark.parametrize("name", ["verify-definetti", "verify-laplace-indicator", "verify-series"])
    def test_deterministic_experiments_need_no_seed(self, name):
        assert not REGISTRY[name].stochastic

    def test_small_runs(self):
        small = {"verify-window": dict(gamma=[0.0], n=[256], replicas=20000),
                 "verify-functional-supercritical": dict(n=[1024], replicas=20000),
                 "verify-sheet": dict(n=[512], replicas=20000)}
        for name, kw in small.items():
            report, tables = run_experiment(ExperimentConfig(name, seed=1, **kw))
            assert report.statistics and tables
            for verdict in report.verdicts.values():
                assert verdict["threshold"] in report.thresholds
