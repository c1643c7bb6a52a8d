"""Goodness-of-fit diagnostics: tapered periodograms and contrast variances."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coherence import step_coefficients
from .fitting import FittedModel
from .grid import EnsembleField, LandMask, anomalies
from .likelihood import band_factor
from .spectral import TWO_PI, fourier_basis, land_weights
from .temporal import whiten

DEFAULT_TAPER_SPACINGS = 4.0


def tapered_periodogram(x, taper) -> np.ndarray:
    """Time-averaged periodogram of tapered band data.

    Parameters
    ----------
    x : array (N, K)
        One band's data, longitude by time.
    taper : array (N,)
        Nonnegative weights; normalized internally to unit mean energy
        so a flat taper gives the ordinary periodogram.

    Returns
    -------
    array (N,)
        Ordinates for wavenumbers ``c = 0..N-1``.
    """
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(taper, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    N = x.shape[0]
    if h.shape != (N,):
        raise ValueError(f"taper must have shape ({N},), got {h.shape}")
    if np.any(h < 0) or not np.all(np.isfinite(h)):
        raise ValueError("taper must be finite and nonnegative")
    energy = float(np.sum(h * h))
    if energy == 0.0:
        raise ValueError("taper is identically zero")
    p = N / energy
    spec = np.abs(np.fft.fft(h[:, None] * x, axis=0)) ** 2
    return (p / N) * spec.mean(axis=1)


def regime_taper(indicator_row, gamma: float) -> np.ndarray | None:
    """Smooth taper supported on the points where ``indicator_row`` is 1.

    The region is eroded by one point, smoothed with the transition kernel
    and cut back to the region, so the taper rises gradually from zero at
    region edges. Narrow regions that vanish under erosion fall back to
    the raw indicator. Returns None when the region is empty.
    """
    row = np.asarray(indicator_row).astype(np.int8)
    if not row.any():
        return None
    if row.all():
        return np.ones(row.size)
    h = land_weights(row, -1, gamma, warn=False) * row
    if not np.any(h > 0):
        h = row.astype(np.float64)
    return h


@dataclass
class LandOceanPeriodograms:
    """Per-band periodograms, shape (M, N); rows of an absent regime are NaN."""

    land: np.ndarray
    ocean: np.ndarray
    land_present: np.ndarray
    ocean_present: np.ndarray

    def rows(self, latitudes_deg=None):
        M, N = self.land.shape
        for m in range(M):
            for c in range(N):
                lat = float(latitudes_deg[m]) if latitudes_deg is not None else float("nan")
                yield (m, lat, c, self.land[m, c], self.ocean[m, c])


def difference_field(field: EnsembleField, r1: int = 0, r2: int = 1) -> np.ndarray:
    """``T_r1 - T_r2``, shape (M, N, K); removes any common trend."""
    if field.grid.R < 2:
        raise ValueError("a difference field needs two realizations")
    return field.values[..., r1] - field.values[..., r2]


def landocean_periodograms(diff, mask: LandMask, sds=None, gamma: float | None = None) -> LandOceanPeriodograms:
    """Land and ocean tapered periodograms of a realization-difference field.

    Parameters
    ----------
    diff : array (M, N, K)
        Difference of two realizations.
    mask : LandMask
    sds : array (M, N), optional
        Per-site normalizing standard deviations; identity when omitted.
    gamma : float, optional
        Taper transition range in radians; default four grid spacings.
    """
    x = np.asarray(diff, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError("difference field must be (M, N, K)")
    M, N, _ = x.shape
    if mask.indicator.shape != (M, N):
        raise ValueError("mask does not match the difference field")
    if sds is not None:
        s = np.asarray(sds, dtype=np.float64).reshape(M, N)
        if np.any(s <= 0):
            raise ValueError("normalizing standard deviations must be positive")
        x = x / s[..., None]
    if gamma is None:
        gamma = TWO_PI * DEFAULT_TAPER_SPACINGS / N
    land = np.full((M, N), np.nan)
    ocean = np.full((M, N), np.nan)
    lp = np.zeros(M, dtype=bool)
    op = np.zeros(M, dtype=bool)
    for m in range(M):
        row = mask.indicator[m]
        h1 = regime_taper(row, gamma)
        h2 = regime_taper(1 - row, gamma)
        if h1 is not None:
            land[m] = tapered_periodogram(x[m], h1)
            lp[m] = True
        if h2 is not None:
            ocean[m] = tapered_periodogram(x[m], h2)
            op[m] = True
    return LandOceanPeriodograms(land, ocean, lp, op)


@dataclass
class ContrastReport:
    """East-west and north-south contrast variances, shape (M, N).

    ``ns[0]`` is undefined (NaN): the southernmost band has no southern
    neighbour. ``ew_se``/``ns_se`` are Monte Carlo standard errors for
    empirical reports and None for model-implied ones.
    """

    ew: np.ndarray
    ns: np.ndarray
    kind: str = "empirical"
    ew_se: np.ndarray | None = None
    ns_se: np.ndarray | None = None
    model: "ContrastReport | None" = None

    @property
    def ew_lat(self) -> np.ndarray:
        return self.ew.mean(axis=1)

    @property
    def ns_lat(self) -> np.ndarray:
        return self.ns.mean(axis=1)

    @property
    def ew_lon(self) -> np.ndarray:
        return self.ew.mean(axis=0)

    @property
    def ns_lon(self) -> np.ndarray:
        if self.ns.shape[0] < 2:
            return np.full(self.ns.shape[1], np.nan)
        return self.ns[1:].mean(axis=0)

    @property
    def lat_means(self) -> dict:
        return {"ew": self.ew_lat, "ns": self.ns_lat}

    @property
    def lon_means(self) -> dict:
        return {"ew": self.ew_lon, "ns": self.ns_lon}

    def table(self, latitudes_deg=None):
        """Rows (m, n, lat, ew, ns[, model_ew, model_ns]) for CSV export."""
        header = ["m", "n", "lat_deg", "ew", "ns"]
        if self.model is not None:
            header += ["model_ew", "model_ns"]
        rows = []
        M, N = self.ew.shape
        for m in range(M):
            lat = float(latitudes_deg[m]) if latitudes_deg is not None else float("nan")
            for n in range(N):
                row = [m, n, lat, self.ew[m, n], self.ns[m, n]]
                if self.model is not None:
                    row += [self.model.ew[m, n], self.model.ns[m, n]]
                rows.append(row)
        return header, rows


def _mean_and_se(sq: np.ndarray):
    count = sq.shape[-1] * sq.shape[-2]
    flat = sq.reshape(sq.shape[:-2] + (count,))
    mean = flat.mean(axis=-1)
    se = flat.std(axis=-1, ddof=1) / np.sqrt(count) if count > 1 else np.full(mean.shape, np.nan)
    return mean, se


def contrast_variances(innovations) -> ContrastReport:
    """Empirical contrast variances of innovations shaped (M, N, K', R)."""
    H = np.asarray(innovations, dtype=np.float64)
    if H.ndim != 4:
        raise ValueError("innovations must be (M, N, K', R)")
    M, N = H.shape[:2]
    ew, ew_se = _mean_and_se((H - np.roll(H, 1, axis=1)) ** 2)
    ns = np.full((M, N), np.nan)
    ns_se = np.full((M, N), np.nan)
    if M > 1:
        ns[1:], ns_se[1:] = _mean_and_se((H[1:] - H[:-1]) ** 2)
    return ContrastReport(ew, ns, "empirical", ew_se, ns_se)


def field_innovations(model: FittedModel, field: EnsembleField) -> np.ndarray:
    """Whitened anomalies rescaled to unit process scale.

    Anomalies about the ensemble mean carry ``(R - 1) / R`` of the process
    variance, which the ``sqrt(R / (R - 1))`` factor restores.
    """
    R = field.grid.R
    H = whiten(anomalies(field), model.temporal)
    return H * np.sqrt(R / (R - 1.0))


def model_implied_contrasts(model: FittedModel) -> ContrastReport:
    """Expected contrast variances of innovations under a fitted model."""
    M, N = model.grid.M, model.grid.N
    if model.bands is None:
        ew = np.full((M, N), 2.0)
        ns = np.full((M, N), 2.0)
        ns[0] = np.nan
        return ContrastReport(ew, ns, "model")
    _, waves = fourier_basis(N)
    phi = step_coefficients(model.coherence, M, waves, N)
    factors = [band_factor(model.bands[m], model.mask.indicator[m], N) for m in range(M)]
    ew = np.empty((M, N))
    ns = np.full((M, N), np.nan)
    for m in range(M):
        B = factors[m]
        C = B @ B.T
        d = np.diag(C)
        ew[m] = d + np.roll(d, 1) - 2.0 * np.diag(np.roll(C, 1, axis=1))
        if m > 0:
            Bp = factors[m - 1]
            dp = np.einsum("ij,ij->i", Bp, Bp)
            cross = np.einsum("ij,ij,j->i", B, Bp, phi[m - 1])
            ns[m] = d + dp - 2.0 * cross
    return ContrastReport(np.maximum(ew, 0.0), np.where(np.isnan(ns), ns, np.maximum(ns, 0.0)), "model")


def contrast_report(model: FittedModel, field: EnsembleField | None = None) -> ContrastReport:
    """Model-implied contrasts, paired with empirical ones when data is given."""
    implied = model_implied_contrasts(model)
    if field is None:
        return implied
    emp = contrast_variances(field_innovations(model, field))
    emp.model = implied
    return emp


def contrast_agreement(report: ContrastReport, n_se: float = 3.0) -> dict:
    """Fraction of sites whose empirical contrasts lie within ``n_se`` SEs of the model."""
    if report.model is None or report.ew_se is None:
        raise ValueError("report needs both empirical and model parts")
    ok_ew = np.abs(report.ew - report.model.ew) <= n_se * report.ew_se
    valid = ~np.isnan(report.ns)
    ok_ns = np.abs(report.ns - report.model.ns)[valid] <= n_se * report.ns_se[valid]
    total = ok_ew.size + ok_ns.size
    return {
        "ew": float(ok_ew.mean()),
        "ns": float(ok_ns.mean()) if ok_ns.size else float("nan"),
        "all": float((ok_ew.sum() + ok_ns.sum()) / total),
    }
