import math

import numpy as np
import pytest

from curiefield.errors import QuadratureError
from curiefield.quad import (GAUSS_WEIGHTS, KRONROD_WEIGHTS, NODES, adaptive_quad,
                             cell_integrals, log_integral)


class TestRule:
    def test_weights_sum_to_two(self):
        assert KRONROD_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)
        assert GAUSS_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)

    @pytest.mark.parametrize("degree", range(0, 23))
    def test_kronrod_exact_to_degree_22(self, degree):
        exact = 0.0 if degree % 2 else 2.0 / (degree + 1)
        assert np.dot(KRONROD_WEIGHTS, NODES ** degree) == pytest.approx(exact, abs=1e-14)

    @pytest.mark.parametrize("degree", range(0, 14))
    def test_gauss_exact_to_degree_13(self, degree):
        exact = 0.0 if degree % 2 else 2.0 / (degree + 1)
        assert np.dot(GAUSS_WEIGHTS, NODES ** degree) == pytest.approx(exact, abs=1e-14)


class TestAdaptive:
    def test_gaussian_integral(self):
        res = adaptive_quad(lambda x: np.exp(-x * x / 2), -12, 12, rel_tol=1e-12)
        assert res.value == pytest.approx(math.sqrt(2 * math.pi), rel=1e-12)

    def test_vector_valued(self):
        res = adaptive_quad(lambda x: np.stack([np.sin(x), np.cos(x)]), 0, math.pi)
        np.testing.assert_allclose(res.value, [2.0, 0.0], atol=1e-12)

    def test_budget_exhaustion_reports_estimates(self):
        with pytest.raises(QuadratureError) as info:
            adaptive_quad(lambda x: np.sin(1.0 / (x + 1e-3)), 0, 1, rel_tol=1e-14,
                          initial=1, max_intervals=4)
        low, high = info.value.estimates
        assert np.isfinite(low) and np.isfinite(high)

    def test_log_integral_survives_huge_scale(self):
        val = log_integral(lambda x: 5000.0 - x * x / 2, -40, 40)
        assert val == pytest.approx(5000.0 + 0.5 * math.log(2 * math.pi), rel=1e-12)

    def test_cell_integrals_add_up(self):
        edges = np.linspace(-3, 3, 31)
        parts = cell_integrals(np.cos, edges)
        assert parts.sum() == pytest.approx(2 * math.sin(3), abs=1e-13)
