"""Across-latitude dependence of spectral coefficients.

Coefficients of the same wavenumber follow an AR(1) chain running south to
north, ``z_m = phi_m(c) z_{m-1} + e_m`` with ``var(e_m) = 1 - phi_m(c)^2``,
so correlations between bands are products of the step coefficients
between them. Step coefficients come from ``xi / (1 + 4 sin^2(c pi / N))^tau``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

TROPIC_BOUND_DEG = 23.0


@dataclass(frozen=True)
class CoherencePair:
    xi: float
    tau: float

    def __post_init__(self):
        xi, tau = float(self.xi), float(self.tau)
        if not (0.0 <= xi < 1.0):
            raise ValueError(f"xi must be in [0, 1), got {xi}")
        if not (tau >= 0.0 and np.isfinite(tau)):
            raise ValueError(f"tau must be nonnegative, got {tau}")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "tau", tau)


INDEPENDENT = CoherencePair(0.0, 0.0)


@dataclass(frozen=True)
class LatitudeCoherenceProfile:
    """Stationary (one global pair) or tropically varying coherence.

    In nonstationary mode ``tropical[m]`` is the pair used for the step from
    band m to band m + 1; all other steps use ``global_pair``.
    """

    mode: str = "stationary"
    global_pair: CoherencePair = INDEPENDENT
    tropical: Mapping[int, CoherencePair] = field(default_factory=dict)
    tropic_bound_deg: float = TROPIC_BOUND_DEG

    def __post_init__(self):
        if self.mode not in ("stationary", "nonstationary"):
            raise ValueError(f"unknown coherence mode {self.mode!r}")
        trop = {int(k): v for k, v in dict(self.tropical).items()}
        if self.mode == "stationary" and trop:
            raise ValueError("stationary coherence profile cannot carry tropical pairs")
        object.__setattr__(self, "tropical", trop)

    @classmethod
    def stationary(cls, xi: float, tau: float, **kw) -> "LatitudeCoherenceProfile":
        return cls("stationary", CoherencePair(xi, tau), {}, **kw)

    def pair_for_step(self, m: int) -> CoherencePair:
        """Pair governing the step between bands m and m + 1."""
        if self.mode == "nonstationary":
            return self.tropical.get(int(m), self.global_pair)
        return self.global_pair


def tropical_bands(latitudes_deg: Sequence[float], bound_deg: float = TROPIC_BOUND_DEG) -> list[int]:
    """Bands strictly inside the tropics that start a step to a northern neighbour."""
    lat = np.asarray(latitudes_deg, dtype=np.float64)
    return [int(m) for m in np.flatnonzero(np.abs(lat) < bound_deg) if m < lat.size - 1]


def coherence_value(pair: CoherencePair, c, N: int):
    """``xi / (1 + 4 sin^2(c pi / N))^tau``."""
    s2 = np.sin(np.asarray(c, dtype=np.float64) * np.pi / N) ** 2
    return pair.xi * np.exp(-pair.tau * np.log1p(4.0 * s2))


def step_coefficients(profile: LatitudeCoherenceProfile, M: int, c, N: int) -> np.ndarray:
    """Array (M - 1, len(c)) of step coefficients; row m links band m to m + 1."""
    c = np.atleast_1d(np.asarray(c))
    out = np.empty((max(M - 1, 0), c.size))
    for m in range(M - 1):
        out[m] = coherence_value(profile.pair_for_step(m), c, N)
    return out


def cross_band_correlation(profile: LatitudeCoherenceProfile, m: int, m2: int, c, N: int):
    """Correlation of wavenumber-c coefficients between bands m and m2."""
    lo, hi = sorted((int(m), int(m2)))
    out = np.ones_like(np.asarray(c, dtype=np.float64))
    for j in range(lo, hi):
        out = out * coherence_value(profile.pair_for_step(j), c, N)
    return out if out.ndim else float(out)


def latitude_innovation_sd(profile: LatitudeCoherenceProfile, m: int, c, N: int):
    """Standard deviation of the chain innovation entering band m (1 for the first band)."""
    if m == 0:
        return np.ones_like(np.asarray(c, dtype=np.float64)) if np.ndim(c) else 1.0
    phi = coherence_value(profile.pair_for_step(m - 1), c, N)
    return np.sqrt(1.0 - phi**2)


def coherence_covariance(profile: LatitudeCoherenceProfile, bands: Sequence[int], c, N: int) -> np.ndarray:
    """Correlation matrix of the chain over a contiguous run of bands at wavenumber c."""
    bands = [int(b) for b in bands]
    if any(b2 != b1 + 1 for b1, b2 in zip(bands, bands[1:])):
        raise ValueError("bands must be contiguous and increasing")
    steps = np.array([float(coherence_value(profile.pair_for_step(b), c, N)) for b in bands[:-1]])
    P = len(bands)
    out = np.eye(P)
    for i in range(P):
        acc = 1.0
        for j in range(i + 1, P):
            acc *= steps[j - 1]
            out[i, j] = out[j, i] = acc
    return out
