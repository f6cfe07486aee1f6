from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nvsd.assoc import s_delta
from nvsd.errors import InvalidSampleError
from nvsd.roughening import (
    DCOL_GRADIENT,
    SMOOTHER,
    RougheningConfig,
    SmootherSpec,
    fit_smoother,
    grad_s_delta,
    roughen,
    roughen_dcol,
    roughen_smoother,
)

vectors = arrays(np.float64, st.integers(3, 50),
                 elements=st.floats(-100, 100, allow_nan=False).map(lambda v: round(v, 6)))


def laplacian(n):
    L = 2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    L[0, 0] = L[-1, -1] = 1
    return L


class TestConfig:
    @pytest.mark.parametrize("theta", [0.0, -0.1, 1.5])
    def test_theta_range(self, theta):
        with pytest.raises(ValueError):
            RougheningConfig(theta=theta)

    def test_mode(self):
        with pytest.raises(ValueError):
            RougheningConfig(mode="lowess")


class TestGradient:
    def test_doc_example(self):
        assert grad_s_delta([1.0, 2.0, 3.0]).tolist() == [-1.0, 0.0, 1.0]

    @given(vectors)
    def test_equals_laplacian(self, y):
        np.testing.assert_allclose(grad_s_delta(y), laplacian(y.size) @ y / (y.size - 2), atol=1e-9)

    def test_finite_differences(self, rng):
        y = rng.standard_normal(30)
        h = 1e-6
        fd = np.array([(s_delta(y + h * e) - s_delta(y - h * e)) / (2 * h) for e in np.eye(30)])
        np.testing.assert_allclose(grad_s_delta(y), fd, rtol=1e-6, atol=1e-9)

    def test_short(self):
        with pytest.raises(InvalidSampleError):
            grad_s_delta([1.0, 2.0])


class TestDcolStep:
    def test_hand_case(self):
        y = np.array([1.0, 3.0, 2.0, 5.0])
        t = 0.1
        expected = [1 * 1.1 - 3 * t, 3 * 1.2 - (1 + 2) * t, 2 * 1.2 - (3 + 5) * t, 5 * 1.1 - 2 * t]
        np.testing.assert_allclose(roughen_dcol(y, t), expected, atol=1e-15)

    @given(vectors, st.floats(1e-4, 1.0))
    def test_gradient_form(self, y, theta):
        np.testing.assert_allclose(roughen_dcol(y, theta), y + theta * (y.size - 2) * grad_s_delta(y),
                                   atol=1e-9)

    @given(vectors)
    def test_increases_s(self, y):
        if np.any(grad_s_delta(y) != 0):
            assert s_delta(roughen_dcol(y, 1e-4)) > s_delta(y)

    def test_three_point_example(self):
        np.testing.assert_allclose(roughen_dcol([1.0, 2.0, 3.0], 0.1), [0.9, 2.0, 3.1], atol=1e-15)

    def test_zero_theta_and_constant(self, rng):
        y = rng.standard_normal(10)
        np.testing.assert_array_equal(roughen_dcol(y, 0.0), y)
        np.testing.assert_array_equal(roughen_dcol(np.full(7, 2.5), 0.4), np.full(7, 2.5))

    def test_linear_interior_gradient_zero(self):
        g = grad_s_delta(np.linspace(0, 5, 11))
        np.testing.assert_allclose(g[1:-1], 0, atol=1e-14)
        assert g.sum() == pytest.approx(0, abs=1e-14)

    def test_preserves_sum(self, rng):
        # L has zero column sums, so the mean is untouched
        y = rng.standard_normal(40)
        assert roughen_dcol(y, 0.3).sum() == pytest.approx(y.sum(), abs=1e-12)


class TestSmootherFit:
    def test_reproduces_line(self, rng):
        x = np.sort(rng.uniform(0, 3, 40))
        np.testing.assert_allclose(fit_smoother(x, 2 * x - 1), 2 * x - 1, atol=1e-8)

    def test_constant(self):
        x = np.linspace(0, 1, 12)
        np.testing.assert_allclose(fit_smoother(x, np.full(12, 4.2)), 4.2, atol=1e-10)

    def test_denoises(self):
        rng = np.random.default_rng(21)
        better = 0
        for _ in range(20):
            x = np.sort(rng.uniform(0, 2 * np.pi, 500))
            y = np.sin(x) + 0.1 * rng.standard_normal(500)
            better += np.mean((fit_smoother(x, y) - np.sin(x)) ** 2) < np.mean((y - np.sin(x)) ** 2)
        assert better == 20


class TestSmootherStep:
    def test_arithmetic(self, monkeypatch):
        import nvsd.roughening as rough

        monkeypatch.setattr(rough, "fit_smoother", lambda x, y, spec=None: np.array([2.0, 8.0]))
        np.testing.assert_allclose(rough.roughen_smoother([0.0, 1.0], [0.0, 10.0], 0.5), [-1.0, 11.0])

    def test_point_on_curve_unmoved(self, rng):
        x = np.linspace(0, 1, 30)
        y = 3 * x + 1
        np.testing.assert_allclose(roughen_smoother(x, y, 0.3), y, atol=1e-7)

    def test_mean_nearly_preserved(self, rng):
        x = np.sort(rng.uniform(0, 1, 200))
        y = np.sin(6 * x) + 0.3 * rng.standard_normal(200)
        assert roughen_smoother(x, y, 0.1).mean() == pytest.approx(y.mean(), abs=1e-3)

    def test_formula(self, rng):
        x = np.sort(rng.uniform(0, 1, 60))
        y = np.sin(5 * x) + 0.2 * rng.standard_normal(60)
        fitted = fit_smoother(x, y)
        np.testing.assert_allclose(roughen_smoother(x, y, 0.2), y + 0.2 * (y - fitted), atol=1e-12)

    def test_fixed_penalty_used(self, rng):
        x = np.sort(rng.uniform(0, 1, 30))
        y = rng.standard_normal(30)
        line = fit_smoother(x, y, SmootherSpec(penalty=np.inf))
        slope, icpt = np.polyfit(x, y, 1)
        np.testing.assert_allclose(line, icpt + slope * x, atol=1e-10)

    def test_increases_residual_spread(self, rng):
        x = np.sort(rng.uniform(0, 1, 80))
        y = x**2 + 0.1 * rng.standard_normal(80)
        new = roughen_smoother(x, y, 0.5)
        assert np.var(new - fit_smoother(x, y)) > np.var(y - fit_smoother(x, y))


class TestRoughenOrder:
    @pytest.mark.parametrize("mode", [DCOL_GRADIENT, SMOOTHER])
    def test_matches_sorted_computation(self, rng, mode):
        x = rng.uniform(0, 1, 50)
        y = np.cos(3 * x) + rng.standard_normal(50)
        cfg = RougheningConfig(0.05, mode)
        order = np.argsort(x, kind="stable")
        sorted_new = roughen_dcol(y[order], 0.05) if mode == DCOL_GRADIENT else roughen_smoother(
            x[order], y[order], 0.05)
        out = roughen(x, y, cfg)
        np.testing.assert_allclose(out[order], sorted_new, atol=1e-12)
        np.testing.assert_array_equal(roughen(x, y, cfg, order=order), out)

    def test_input_not_modified(self, rng):
        x, y = rng.standard_normal(20), rng.standard_normal(20)
        y0 = y.copy()
        roughen(x, y, RougheningConfig())
        np.testing.assert_array_equal(y, y0)
