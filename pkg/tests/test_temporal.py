import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evspec.temporal import (
    Ar2Site,
    NonStationaryError,
    TemporalParams,
    ZeroVarianceError,
    ar2_stationary_variance,
    colorize,
    fit_ar2_site,
    fit_ar2_sites,
    is_stationary,
    project_stationary,
    whiten,
    yule_walker_ar2,
)


def ar2_series(rng, phi1, phi2, sigma, K, R, burn=500):
    H = rng.standard_normal((1, 1, K + burn, R))
    p = TemporalParams.constant(1, 1, phi1, phi2, sigma)
    return colorize(H, p, burn_in=burn)[0, 0]


def ar2_acf(phi1, phi2, lags):
    rho = np.empty(lags + 1)
    rho[0] = 1.0
    rho[1] = phi1 / (1 - phi2)
    for h in range(2, lags + 1):
        rho[h] = phi1 * rho[h - 1] + phi2 * rho[h - 2]
    return rho


class TestYuleWalker:
    @pytest.mark.parametrize("rho", [0.0, 0.3, -0.6, 0.9])
    def test_ar1_closed_form(self, rho):
        p1, p2, s2 = yule_walker_ar2(1.0, rho, rho**2)
        assert p1 == pytest.approx(rho, abs=1e-14)
        assert p2 == pytest.approx(0.0, abs=1e-14)
        assert s2 == pytest.approx(1 - rho**2, abs=1e-14)

    def test_ar2_exact(self):
        phi1, phi2 = 0.5, -0.2
        rho = ar2_acf(phi1, phi2, 2)
        p1, p2, _ = yule_walker_ar2(*rho)
        assert (p1, p2) == pytest.approx((phi1, phi2), abs=1e-14)

    def test_iid(self, rng):
        K, R = 2000, 5
        s = fit_ar2_site(rng.standard_normal((K, R)))
        tol = 3 / np.sqrt(K * R)
        assert abs(s.phi1) < tol and abs(s.phi2) < tol and abs(s.sigma - 1) < tol

    def test_ar2_recovery(self, rng):
        s = fit_ar2_site(ar2_series(rng, 0.5, -0.2, 1.0, 5000, 2))
        assert s.phi1 == pytest.approx(0.5, abs=0.05)
        assert s.phi2 == pytest.approx(-0.2, abs=0.05)
        assert s.sigma == pytest.approx(1.0, abs=0.05)

    def test_heterogeneous_sites(self, rng):
        M, N, K, R = 2, 3, 2500, 4
        phi1 = rng.uniform(-0.5, 0.8, (M, N))
        phi2 = rng.uniform(-0.4, 0.1, (M, N))
        sig = rng.uniform(0.5, 2, (M, N))
        p = TemporalParams(phi1, phi2, sig)
        x = colorize(rng.standard_normal((M, N, K + 300, R)), p, burn_in=300)
        est = fit_ar2_sites(x)
        assert np.max(np.abs(est.phi1 - phi1)) < 0.05
        assert np.max(np.abs(est.phi2 - phi2)) < 0.05
        assert np.max(np.abs(est.sigma / sig - 1)) < 0.05

    def test_zero_variance(self, rng):
        x = rng.standard_normal((2, 3, 10, 2))
        x[1, 2] = 5.0
        with pytest.raises(ZeroVarianceError) as err:
            fit_ar2_sites(x)
        assert err.value.sites == [(1, 2)]
        assert "zero-variance site" in str(err.value)

    def test_short_series(self):
        with pytest.raises(ValueError):
            fit_ar2_sites(np.ones((1, 1, 4, 2)))

    @given(st.floats(-5, 5), st.floats(-5, 5))
    @settings(max_examples=100, deadline=None)
    def test_projection_lands_inside(self, a, b):
        p1, p2 = project_stationary(a, b)
        assert is_stationary(p1, p2)
        if is_stationary(a, b) and (b + a <= 1 - 1e-4) and (b - a <= 1 - 1e-4) and b >= -1 + 1e-4:
            assert (p1, p2) == (a, b)


class TestParams:
    def test_nonstationary(self):
        with pytest.raises(NonStationaryError):
            Ar2Site(0.6, 0.5, 1.0)
        with pytest.raises(NonStationaryError):
            TemporalParams.constant(1, 2, 0.0, -1.0, 1.0)

    def test_sigma_positive(self):
        with pytest.raises(ValueError):
            Ar2Site(0.1, 0.1, 0.0)


class TestFilters:
    def test_identity_filter(self, rng):
        eps = rng.standard_normal((2, 3, 7, 2))
        H = whiten(eps, TemporalParams.constant(2, 3, 0, 0, 1))
        assert np.array_equal(H, eps[:, :, 2:])

    def test_hand_arithmetic(self):
        eps = np.array([1.0, 4.0, 6.0]).reshape(1, 1, 3, 1)
        H = whiten(eps, TemporalParams.constant(1, 1, 0.5, 0.0, 2.0))
        assert H.shape == (1, 1, 1, 1)
        assert H[0, 0, 0, 0] == pytest.approx(2.0, abs=1e-15)

    def test_zero_innovations(self):
        p = TemporalParams.constant(1, 2, 0.5, -0.2, 1.0)
        assert not colorize(np.zeros((1, 2, 9, 3)), p).any()

    def test_no_memory(self, rng):
        H = rng.standard_normal((1, 2, 6, 2))
        p = TemporalParams(np.zeros((1, 2)), np.zeros((1, 2)), np.array([[2.0, 0.5]]))
        assert np.allclose(colorize(H, p), H * np.array([2.0, 0.5])[None, :, None, None])

    def test_burn_in(self, rng):
        H = rng.standard_normal((1, 1, 10, 2))
        p = TemporalParams.constant(1, 1, 0.5, -0.2, 1.0)
        assert np.array_equal(colorize(H, p, burn_in=4), colorize(H, p)[:, :, 4:])
        with pytest.raises(ValueError):
            colorize(H, p, burn_in=11)

    @given(seed=st.integers(0, 2**32 - 1), K=st.integers(3, 20))
    @settings(max_examples=40, deadline=None)
    def test_inverse_pair(self, seed, K):
        rng = np.random.default_rng(seed)
        p = TemporalParams(rng.uniform(-0.5, 0.5, (2, 3)), rng.uniform(-0.4, 0.4, (2, 3)), rng.uniform(0.3, 3, (2, 3)))
        H = rng.standard_normal((2, 3, K, 2))
        assert np.allclose(whiten(colorize(H, p), p), H[:, :, 2:], atol=1e-10)

    def test_shape_mismatch(self, rng):
        with pytest.raises(ValueError):
            whiten(rng.standard_normal((2, 2, 5, 2)), TemporalParams.constant(2, 3, 0, 0, 1))

    def test_stationary_variance_monte_carlo(self, rng):
        phi1, phi2 = 0.5, -0.2
        n = 100_000
        x = colorize(rng.standard_normal((1, 1, n + 1000, 1)), TemporalParams.constant(1, 1, phi1, phi2, 1.0), 1000)
        g0 = ar2_stationary_variance(phi1, phi2, 1.0)
        rho = ar2_acf(phi1, phi2, 200)
        # large-sample variance of the sample variance of a Gaussian linear process
        se = g0 * np.sqrt(2 * (1 + 2 * np.sum(rho[1:] ** 2)) / n)
        assert abs(np.var(x) - g0) < 3 * se

    def test_stationary_variance_closed_form(self):
        assert ar2_stationary_variance(0.0, 0.0, 2.0) == pytest.approx(4.0)
        assert ar2_stationary_variance(0.6, 0.0, 1.0) == pytest.approx(1 / (1 - 0.36))
        with pytest.raises(NonStationaryError):
            ar2_stationary_variance(1.2, 0.0, 1.0)
