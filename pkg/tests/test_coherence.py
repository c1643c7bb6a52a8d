import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evspec.coherence import (
    CoherencePair,
    LatitudeCoherenceProfile,
    coherence_covariance,
    coherence_value,
    cross_band_correlation,
    latitude_innovation_sd,
    step_coefficients,
    tropical_bands,
)

from oracles import ar1_chain_covariance, chain_rho, step_value


def test_pair_bounds():
    for xi, tau in [(1.0, 0.0), (-0.1, 0.0), (0.5, -1.0), (0.5, np.inf)]:
        with pytest.raises(ValueError):
            CoherencePair(xi, tau)


class TestValue:
    def test_zero_wavenumber(self):
        assert coherence_value(CoherencePair(0.63, 2.0), 0, 16) == pytest.approx(0.63)

    def test_zero_tau(self):
        assert np.allclose(coherence_value(CoherencePair(0.4, 0.0), np.arange(16), 16), 0.4)

    def test_hand_value(self):
        assert coherence_value(CoherencePair(0.8, 1.0), 2, 8) == pytest.approx(0.8 / 3, rel=1e-14)

    @given(xi=st.floats(0, 0.99), tau=st.floats(0, 5), N=st.integers(2, 40))
    @settings(max_examples=50, deadline=None)
    def test_matches_oracle(self, xi, tau, N):
        c = np.arange(N)
        v = coherence_value(CoherencePair(xi, tau), c, N)
        assert np.allclose(v, step_value(xi, tau, c, N))
        assert np.all((v >= 0) & (v < 1))


class TestProfile:
    lat = [-40.0, -20.0, -5.0, 10.0, 30.0]

    def test_tropical_bands(self):
        assert tropical_bands(self.lat) == [1, 2, 3]
        assert tropical_bands([-10.0, 0.0, 10.0]) == [0, 1]

    def test_stationary_rejects_tropical(self):
        with pytest.raises(ValueError):
            LatitudeCoherenceProfile("stationary", CoherencePair(0.5, 1), {1: CoherencePair(0.2, 0)})

    def test_self(self):
        prof = LatitudeCoherenceProfile.stationary(0.7, 0.5)
        assert np.allclose(cross_band_correlation(prof, 2, 2, np.arange(8), 8), 1.0)

    def test_single_step(self):
        prof = LatitudeCoherenceProfile.stationary(0.7, 0.5)
        c = np.arange(8)
        assert np.allclose(cross_band_correlation(prof, 3, 2, c, 8), coherence_value(prof.global_pair, c, 8))

    def test_product_along_chain(self):
        prof = LatitudeCoherenceProfile(
            "nonstationary", CoherencePair(0.9, 1.0), {1: CoherencePair(0.5, 0.0), 2: CoherencePair(0.4, 0.0)}
        )
        assert cross_band_correlation(prof, 1, 3, 5, 16) == pytest.approx(0.20, abs=1e-15)

    def test_nonstationary_against_oracle(self):
        pairs = [(0.7, 0.5), (0.3, 0.0), (0.9, 2.0), (0.7, 0.5)]
        prof = LatitudeCoherenceProfile(
            "nonstationary", CoherencePair(*pairs[0]), {1: CoherencePair(*pairs[1]), 2: CoherencePair(*pairs[2])}
        )
        N = 12
        c = np.arange(N)
        for m1 in range(5):
            for m2 in range(5):
                assert np.allclose(cross_band_correlation(prof, m1, m2, c, N), chain_rho(pairs, m1, m2, N))
        S = step_coefficients(prof, 5, c, N)
        assert S.shape == (4, N)
        assert np.allclose(S[2], step_value(*pairs[2], c, N))


class TestInnovationSd:
    def test_first_band(self):
        assert latitude_innovation_sd(LatitudeCoherenceProfile.stationary(0.9, 0), 0, 3, 8) == 1.0

    def test_independent(self):
        assert latitude_innovation_sd(LatitudeCoherenceProfile.stationary(0.0, 0), 3, 3, 8) == 1.0

    def test_pythagorean(self):
        assert latitude_innovation_sd(LatitudeCoherenceProfile.stationary(0.6, 0), 1, 3, 8) == pytest.approx(0.8)


class TestCovariance:
    def test_single(self):
        assert np.array_equal(coherence_covariance(LatitudeCoherenceProfile.stationary(0.5, 0), [4], 0, 8), [[1.0]])

    def test_markov_powers(self):
        C = coherence_covariance(LatitudeCoherenceProfile.stationary(0.5, 0), [0, 1, 2], 1, 8)
        assert np.allclose(C, [[1, 0.5, 0.25], [0.5, 1, 0.5], [0.25, 0.5, 1]])

    def test_non_contiguous(self):
        with pytest.raises(ValueError):
            coherence_covariance(LatitudeCoherenceProfile.stationary(0.5, 0), [0, 2], 1, 8)

    @given(steps=st.lists(st.floats(0, 0.99), min_size=1, max_size=6))
    @settings(max_examples=50, deadline=None)
    def test_chain_oracle(self, steps):
        # stationary recursion with unit marginal variances
        trop = {m: CoherencePair(s, 0.0) for m, s in enumerate(steps)}
        prof = LatitudeCoherenceProfile("nonstationary", CoherencePair(0.0, 0.0), trop)
        C = coherence_covariance(prof, range(len(steps) + 1), 3, 8)
        assert np.allclose(C, ar1_chain_covariance(steps), atol=1e-12)
        assert np.linalg.eigvalsh(C).min() > -1e-12

    def test_markov_property(self):
        # partial correlation of bands 0 and 2 given band 1 vanishes
        C = coherence_covariance(LatitudeCoherenceProfile.stationary(0.7, 0.5), [0, 1, 2, 3], 2, 8)
        P = np.linalg.inv(C)
        assert abs(P[0, 2]) < 1e-12 and abs(P[0, 3]) < 1e-12 and abs(P[1, 3]) < 1e-12

    def test_monte_carlo(self, rng):
        xi, n = 0.6, 200_000
        e = rng.standard_normal((n, 3))
        z = np.empty_like(e)
        z[:, 0] = e[:, 0]
        for m in (1, 2):
            z[:, m] = xi * z[:, m - 1] + np.sqrt(1 - xi**2) * e[:, m]
        emp = np.corrcoef(z.T)
        C = coherence_covariance(LatitudeCoherenceProfile.stationary(xi, 0), [0, 1, 2], 0, 8)
        se = (1 - C**2) / np.sqrt(n)
        assert np.all(np.abs(emp - C) <= 3 * se + 1e-12)
