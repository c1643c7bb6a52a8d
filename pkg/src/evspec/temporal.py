"""Per-site AR(2) temporal structure: Yule-Walker fitting, whitening, colorizing."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

STATIONARITY_SHRINK = 1e-4
SIGMA_FLOOR = 1e-8


class ZeroVarianceError(ValueError):
    """Raised when a site's series has no variability."""

    def __init__(self, sites):
        self.sites = [tuple(int(i) for i in s) for s in sites]
        shown = ", ".join(str(s) for s in self.sites[:10])
        more = "" if len(self.sites) <= 10 else f" (+{len(self.sites) - 10} more)"
        super().__init__(f"zero-variance site(s): {shown}{more}")


class NonStationaryError(ValueError):
    """Raised when AR(2) coefficients fall outside the stationarity triangle."""


def is_stationary(phi1, phi2) -> np.ndarray:
    phi1 = np.asarray(phi1)
    phi2 = np.asarray(phi2)
    return (phi2 + phi1 < 1) & (phi2 - phi1 < 1) & (np.abs(phi2) < 1)


@dataclass(frozen=True)
class Ar2Site:
    phi1: float
    phi2: float
    sigma: float

    def __post_init__(self):
        if not is_stationary(self.phi1, self.phi2):
            raise NonStationaryError(f"AR(2) coefficients ({self.phi1}, {self.phi2}) are not stationary")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class TemporalParams:
    """AR(2) coefficients and innovation standard deviations, each of shape (M, N)."""

    phi1: np.ndarray
    phi2: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        arrs = [np.array(getattr(self, k), dtype=np.float64) for k in ("phi1", "phi2", "sigma")]
        if arrs[0].ndim != 2 or any(a.shape != arrs[0].shape for a in arrs):
            raise ValueError("phi1, phi2 and sigma must be 2-D arrays of equal shape")
        if not np.all(is_stationary(arrs[0], arrs[1])):
            bad = np.argwhere(~is_stationary(arrs[0], arrs[1]))
            raise NonStationaryError(f"non-stationary AR(2) parameters at sites {bad[:5].tolist()}")
        if not np.all(arrs[2] > 0):
            raise ValueError("sigma must be positive at every site")
        for k, a in zip(("phi1", "phi2", "sigma"), arrs):
            a.setflags(write=False)
            object.__setattr__(self, k, a)

    @property
    def shape(self) -> tuple[int, int]:
        return self.phi1.shape

    def site(self, m: int, n: int) -> Ar2Site:
        return Ar2Site(float(self.phi1[m, n]), float(self.phi2[m, n]), float(self.sigma[m, n]))

    def scaled(self, factor: float) -> "TemporalParams":
        return TemporalParams(self.phi1, self.phi2, self.sigma * factor)

    @classmethod
    def constant(cls, M: int, N: int, phi1: float, phi2: float, sigma: float) -> "TemporalParams":
        return cls(np.full((M, N), phi1), np.full((M, N), phi2), np.full((M, N), sigma))


def yule_walker_ar2(gamma0, gamma1, gamma2):
    """Solve the order-2 Yule-Walker system; returns ``(phi1, phi2, sigma2)``.

    Works elementwise on arrays of autocovariances.
    """
    g0 = np.asarray(gamma0, dtype=np.float64)
    g1 = np.asarray(gamma1, dtype=np.float64)
    g2 = np.asarray(gamma2, dtype=np.float64)
    det = g0 * g0 - g1 * g1
    phi1 = (g1 * g0 - g1 * g2) / det
    phi2 = (g0 * g2 - g1 * g1) / det
    sigma2 = g0 - phi1 * g1 - phi2 * g2
    return phi1, phi2, sigma2


def _project_point(p: np.ndarray, verts: np.ndarray) -> np.ndarray:
    best, best_d = None, np.inf
    for i in range(3):
        a, b = verts[i], verts[(i + 1) % 3]
        ab = b - a
        t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
        q = a + t * ab
        d = np.sum((p - q) ** 2)
        if d < best_d:
            best, best_d = q, d
    return best


def project_stationary(phi1, phi2, shrink: float = STATIONARITY_SHRINK):
    """Nearest point of the stationarity triangle shrunk by ``shrink`` (elementwise)."""
    phi1 = np.array(phi1, dtype=np.float64)
    phi2 = np.array(phi2, dtype=np.float64)
    d = shrink
    inside = (phi2 + phi1 <= 1 - d) & (phi2 - phi1 <= 1 - d) & (phi2 >= -1 + d)
    if np.all(inside):
        return phi1, phi2
    verts = np.array([[2 - 2 * d, -1 + d], [0.0, 1 - d], [-2 + 2 * d, -1 + d]])
    f1 = phi1.reshape(-1)
    f2 = phi2.reshape(-1)
    for i in np.flatnonzero(~inside.reshape(-1)):
        if not (np.isfinite(f1[i]) and np.isfinite(f2[i])):
            f1[i], f2[i] = 0.0, 0.0
            continue
        f1[i], f2[i] = _project_point(np.array([f1[i], f2[i]]), verts)
    return f1.reshape(phi1.shape), f2.reshape(phi2.shape)


def pooled_autocovariances(series: np.ndarray):
    """Lag 0, 1, 2 autocovariances pooled over realizations.

    ``series`` has time on axis -2 and realizations on axis -1; leading
    axes are sites. The pooled mean is removed and the biased (1/(K R))
    normalization keeps the Toeplitz system positive definite.
    """
    x = np.asarray(series, dtype=np.float64)
    K, R = x.shape[-2:]
    x = x - x.mean(axis=(-2, -1), keepdims=True)
    n = K * R
    g0 = np.sum(x * x, axis=(-2, -1)) / n
    g1 = np.sum(x[..., 1:, :] * x[..., :-1, :], axis=(-2, -1)) / n
    g2 = np.sum(x[..., 2:, :] * x[..., :-2, :], axis=(-2, -1)) / n
    return g0, g1, g2


def fit_ar2_sites(anoms: np.ndarray) -> TemporalParams:
    """Yule-Walker AR(2) fit at every site of an (M, N, K, R) array."""
    x = np.asarray(anoms, dtype=np.float64)
    if x.ndim != 4:
        raise ValueError("expected an (M, N, K, R) array")
    if x.shape[2] < 5:
        raise ValueError(f"AR(2) fitting needs K >= 5, got {x.shape[2]}")
    g0, g1, g2 = pooled_autocovariances(x)
    scale = np.sqrt(np.maximum(g0, 0.0))
    raw = np.max(np.abs(x - x.mean(axis=(-2, -1), keepdims=True)), axis=(-2, -1))
    zero = (g0 <= 0) | (raw == 0)
    if np.any(zero):
        raise ZeroVarianceError(np.argwhere(zero))
    phi1, phi2, sigma2 = yule_walker_ar2(g0, g1, g2)
    phi1, phi2 = project_stationary(phi1, phi2)
    sigma2 = g0 - phi1 * g1 - phi2 * g2
    sigma = np.maximum(np.sqrt(np.maximum(sigma2, 0.0)), SIGMA_FLOOR * scale)
    return TemporalParams(phi1, phi2, sigma)


def fit_ar2_site(series) -> Ar2Site:
    """AR(2) fit for one site's K x R series."""
    x = np.asarray(series, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    p = fit_ar2_sites(x[None, None])
    return p.site(0, 0)


def _check_shape(arr: np.ndarray, params: TemporalParams) -> None:
    if arr.ndim != 4 or arr.shape[:2] != params.shape:
        raise ValueError(f"array shape {arr.shape} does not match temporal parameters {params.shape}")


def whiten(anoms, params: TemporalParams) -> np.ndarray:
    """Innovations ``H`` of shape (M, N, K - 2, R) from an (M, N, K, R) array."""
    x = np.asarray(anoms, dtype=np.float64)
    _check_shape(x, params)
    M, N, K, R = x.shape
    if K < 3:
        raise ValueError("whitening needs at least 3 time steps")
    H = kernels.ar2_whiten(
        x.reshape(M * N, K, R), params.phi1.reshape(-1), params.phi2.reshape(-1), params.sigma.reshape(-1)
    )
    return H.reshape(M, N, K - 2, R)


def colorize(innovations, params: TemporalParams, burn_in: int = 0) -> np.ndarray:
    """Run ``eps_k = phi1 eps_{k-1} + phi2 eps_{k-2} + sigma H_k`` forward per site.

    The recursion starts from zero; the first ``burn_in`` outputs are dropped,
    so an (M, N, L, R) input gives an (M, N, L - burn_in, R) output.
    """
    H = np.asarray(innovations, dtype=np.float64)
    _check_shape(H, params)
    M, N, L, R = H.shape
    eps = kernels.ar2_colorize(
        H.reshape(M * N, L, R),
        params.phi1.reshape(-1),
        params.phi2.reshape(-1),
        params.sigma.reshape(-1),
        burn_in,
    )
    return eps.reshape(M, N, L - burn_in, R)


def ar2_stationary_variance(phi1, phi2, sigma):
    """Stationary variance of an AR(2) process with innovation SD ``sigma``."""
    phi1 = np.asarray(phi1, dtype=np.float64)
    phi2 = np.asarray(phi2, dtype=np.float64)
    if not np.all(is_stationary(phi1, phi2)):
        raise NonStationaryError("stationary variance undefined outside the stationarity triangle")
    return np.asarray(sigma) ** 2 * (1 - phi2) / ((1 + phi2) * ((1 - phi2) ** 2 - phi1**2))
