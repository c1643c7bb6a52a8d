"""Trend smoothing, surrogate ensemble generation and compression accounting."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solveh_banded

from .coherence import step_coefficients
from .fitting import FittedModel, parameter_count
from .grid import EnsembleField, SphereGrid
from .likelihood import band_factor
from .spectral import fourier_basis
from .temporal import colorize

DEFAULT_LAMBDA = 0.01
DEFAULT_BURN_IN = 200
TREND_POLICIES = ("store-full", "store-spline-knots", "none")


@dataclass(frozen=True)
class TrendField:
    """Smoothed ensemble mean, shape (M, N, K)."""

    values: np.ndarray
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 3:
            raise ValueError("trend must be an (M, N, K) array")
        if not np.all(np.isfinite(v)):
            raise ValueError("trend values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape

    @classmethod
    def zeros(cls, M: int, N: int, K: int) -> "TrendField":
        return cls(np.zeros((M, N, K)), DEFAULT_LAMBDA)


@dataclass(frozen=True)
class SurrogateEnsemble:
    field: EnsembleField
    seed: int
    variant: str


def _second_difference_banded(K: int, lam: float) -> np.ndarray:
    """Upper banded form of ``lam I + (1 - lam) D'D`` for second differences D."""
    D = np.zeros((K - 2, K))
    idx = np.arange(K - 2)
    D[idx, idx] = 1.0
    D[idx, idx + 1] = -2.0
    D[idx, idx + 2] = 1.0
    A = lam * np.eye(K) + (1.0 - lam) * (D.T @ D)
    ab = np.zeros((3, K))
    for u in range(3):
        ab[2 - u, u:] = np.diagonal(A, u)
    return ab


def fit_trend(mean_field, lam: float = DEFAULT_LAMBDA) -> TrendField:
    """Discrete cubic smoothing spline along time at every site.

    Minimizes ``lam * sum (x - s)^2 + (1 - lam) * sum (second diff of s)^2``.
    Straight lines carry no penalty, so the ordinary least-squares line is
    split off first and only the residual goes through the banded solve;
    this stays well conditioned as ``lam`` approaches zero.
    """
    x = np.asarray(mean_field, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError("mean field must be an (M, N, K) array")
    if not (0.0 < lam <= 1.0):
        raise ValueError(f"lambda must lie in (0, 1], got {lam}")
    M, N, K = x.shape
    if K < 4:
        raise ValueError(f"trend fitting needs K >= 4, got {K}")
    if lam == 1.0:
        return TrendField(x.copy(), lam)
    Y = x.reshape(-1, K).T  # (K, sites)
    t = np.arange(K, dtype=np.float64)
    X = np.stack([np.ones(K), t - t.mean()], axis=1)
    coef, *_ = np.linalg.lstsq(X, Y, rcond=None)
    line = X @ coef
    resid = Y - line
    smooth = solveh_banded(_second_difference_banded(K, lam), lam * resid)
    return TrendField((line + smooth).T.reshape(M, N, K), lam)


def _substream(seed: int, r: int, m: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(r), int(m)))
    return np.random.Generator(np.random.Philox(ss))


def simulate_innovations(model: FittedModel, n_time: int, runs: int, seed: int, first_run: int = 0) -> np.ndarray:
    """Whitened innovation fields of shape (M, N, n_time, runs).

    Basis coefficients follow the latitude chain with unit marginal
    variance and are mapped to longitude by each band's square factor.
    Each (realization, band) pair draws from its own counter-based stream,
    keyed by the absolute realization index ``first_run + r``, so large
    ensembles can be generated in chunks with identical results.
    """
    grid = model.grid
    M, N = grid.M, grid.N
    out = np.empty((M, N, n_time, runs))
    if model.variant == "ind":
        for r in range(runs):
            for m in range(M):
                out[m, :, :, r] = _substream(seed, first_run + r, m).standard_normal((N, n_time))
        return out
    _, waves = fourier_basis(N)
    phi = step_coefficients(model.coherence, M, waves, N)
    factors = [band_factor(model.bands[m], model.mask.indicator[m], N) for m in range(M)]
    for r in range(runs):
        z = None
        for m in range(M):
            e = _substream(seed, first_run + r, m).standard_normal((N, n_time))
            if m == 0:
                z = e
            else:
                p = phi[m - 1][:, None]
                z = p * z + np.sqrt(1.0 - p * p) * e
            out[m, :, :, r] = factors[m] @ z
    return out


def simulate_surrogates(
    model: FittedModel,
    trend: TrendField,
    runs: int,
    seed: int,
    burn_in: int = DEFAULT_BURN_IN,
    noise_scale: float = 1.0,
    first_run: int = 0,
) -> SurrogateEnsemble:
    """Generate surrogate runs: spatial innovations, AR(2) colorizing, plus trend.

    Parameters
    ----------
    model : FittedModel
    trend : TrendField
        Added to every realization; its time length sets K.
    runs : int
        Number of surrogate realizations.
    seed : int
        Root seed; output is a deterministic function of it.
    burn_in : int
        Leading AR(2) steps discarded so the recursion forgets its zero start.
    noise_scale : float
        Multiplies the innovations; 0 returns the trend replicated.
    first_run : int
        Index of the first realization, for chunked generation.
    """
    runs = int(runs)
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")
    M, N = model.grid.M, model.grid.N
    if trend.shape[:2] != (M, N):
        raise ValueError(f"trend shape {trend.shape} does not match model grid ({M}, {N})")
    K = trend.shape[2]
    H = simulate_innovations(model, K + burn_in, runs, seed, first_run)
    if noise_scale != 1.0:
        H *= float(noise_scale)
    eps = colorize(H, model.temporal, burn_in=burn_in)
    values = eps + trend.values[..., None]
    grid = SphereGrid(model.grid.latitudes, N, K, runs)
    return SurrogateEnsemble(EnsembleField(grid, values), int(seed), model.variant)


def default_knots(K: int) -> int:
    return max(4, math.ceil(K / 10))


def knot_indices(K: int, knots: int) -> np.ndarray:
    return np.unique(np.round(np.linspace(0, K - 1, int(knots))).astype(int))


def trend_for_policy(trend: TrendField | None, policy: str, shape, knots: int | None = None) -> TrendField:
    """Trend as reconstructed from what a storage policy keeps.

    ``store-full`` returns the trend itself, ``store-spline-knots`` the cubic
    spline through its values at evenly spaced knots, and ``none`` zeros of
    ``shape`` (M, N, K).
    """
    if policy not in TREND_POLICIES:
        raise ValueError(f"unknown trend policy {policy!r}; expected one of {TREND_POLICIES}")
    if policy == "none":
        return TrendField.zeros(*shape)
    if trend is None:
        raise ValueError(f"trend policy {policy!r} needs a stored trend")
    if policy == "store-full":
        return trend
    K = trend.shape[2]
    knots = default_knots(K) if knots is None else int(knots)
    if not 2 <= knots <= K:
        raise ValueError(f"knot count must lie in [2, K], got {knots}")
    idx = knot_indices(K, knots)
    spline = CubicSpline(idx, trend.values[..., idx], axis=-1, bc_type="natural")
    return TrendField(spline(np.arange(K)), trend.lam)


def compression_report(
    variant: str,
    dims: tuple[int, int, int, int],
    trend_policy: str = "store-full",
    tropical_band_count: int = 0,
    knots: int | None = None,
) -> dict:
    """Itemized stored-number count relative to ``M N K R`` data values.

    ``parameter_ratio`` counts spatial and temporal parameters only;
    ``ratio`` also includes the trend under ``trend_policy``.
    """
    if trend_policy not in TREND_POLICIES:
        raise ValueError(f"unknown trend policy {trend_policy!r}; expected one of {TREND_POLICIES}")
    M, N, K, R = (int(v) for v in dims)
    if min(M, N, K, R) < 1:
        raise ValueError(f"invalid data dimensions {dims}")
    spatial = parameter_count(variant, M, tropical_band_count)
    temporal = 3 * M * N
    if trend_policy == "store-full":
        trend = M * N * K
    elif trend_policy == "store-spline-knots":
        knots = default_knots(K) if knots is None else int(knots)
        if not 2 <= knots <= K:
            raise ValueError(f"knot count must lie in [2, K], got {knots}")
        trend = M * N * knots
    else:
        trend = 0
    data = M * N * K * R
    return {
        "variant": variant,
        "dims": [M, N, K, R],
        "trend_policy": trend_policy,
        "knots": knots if trend_policy == "store-spline-knots" else None,
        "spatial": spatial,
        "temporal": temporal,
        "trend": trend,
        "parameters": spatial + temporal,
        "total": spatial + temporal + trend,
        "data_values": data,
        "parameter_ratio": (spatial + temporal) / data,
        "ratio": (spatial + temporal + trend) / data,
    }


def model_compression_report(model: FittedModel, dims=None, trend_policy: str = "store-full", knots=None) -> dict:
    dims = dims or model.grid.shape
    return compression_report(model.variant, dims, trend_policy, model.tropical_band_count, knots)


__all__ = [
    "TrendField",
    "SurrogateEnsemble",
    "fit_trend",
    "simulate_innovations",
    "simulate_surrogates",
    "trend_for_policy",
    "compression_report",
    "model_compression_report",
]
