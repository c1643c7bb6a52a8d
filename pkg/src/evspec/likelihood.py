"""Restricted (REML) negative log-likelihoods for anomaly ensembles.

For R realizations with anomalies ``D_r = T_r - mean`` of dimension ``d``,

    l = d (R - 1)/2 log(2 pi) + (R - 1)/2 log|Sigma| + d/2 log R
        + 1/2 sum_r D_r' Sigma^{-1} D_r.

The spatial model makes whitened innovations independent over time with
covariance ``Sigma_H = Bd Q Bd'`` where ``Bd = blockdiag(B_m)`` holds the
square per-band basis factors and ``Q`` is the AR(1)-in-latitude
correlation of the basis coefficients (diagonal in wavenumber). Writing
``z_m = B_m^{-1} h_m`` the log-likelihood splits into per-band terms plus
one term per pair of adjacent bands, which is what every fitting step uses.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, lu_factor, lu_solve

from . import kernels
from .coherence import LatitudeCoherenceProfile, step_coefficients
from .spectral import BandSpectralParams, fourier_basis, land_weights, matern_like_spectrum

LOG_2PI = np.log(2.0 * np.pi)


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """A covariance block failed to factor; ``block`` identifies it."""

    def __init__(self, block, detail: str = ""):
        self.block = block
        msg = f"covariance block {block!r} is not positive definite"
        super().__init__(msg + (f": {detail}" if detail else ""))


def reml_constant(dim: int, R: int) -> float:
    """Data-independent part of the restricted likelihood for ``dim``-vectors."""
    return 0.5 * dim * (R - 1) * LOG_2PI + 0.5 * dim * np.log(R)


def reml_negloglik(D, sigma) -> float:
    """Dense evaluation for anomalies ``D`` of shape (dim, R) and covariance ``sigma``."""
    D = np.asarray(D, dtype=np.float64)
    dim, R = D.shape
    try:
        cf = cho_factor(np.asarray(sigma, dtype=np.float64), lower=True, check_finite=False)
    except LinAlgError as exc:
        raise NotPositiveDefiniteError("dense", str(exc)) from None
    logdet = 2.0 * np.sum(np.log(np.diag(cf[0])))
    quad = float(np.sum(D * cho_solve(cf, D, check_finite=False)))
    return reml_constant(dim, R) + 0.5 * (R - 1) * logdet + 0.5 * quad


def temporal_jacobian(sigma, n_time: int, R: int) -> float:
    """Contribution of the AR(2) innovation scales when moving from H to anomaly space."""
    return (R - 1) * n_time * float(np.sum(np.log(sigma)))


def scatter_factor(Y: np.ndarray) -> np.ndarray:
    """Factor ``G`` with ``G G' = Y Y'`` and at most ``Y.shape[0]`` columns."""
    N, q = Y.shape
    if q <= N:
        return np.ascontiguousarray(Y)
    S = Y @ Y.T
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    return np.ascontiguousarray(V * np.sqrt(np.clip(w, 0.0, None)))


@dataclass
class BandBlock:
    """Innovations of one band flattened over (time, realization)."""

    H: np.ndarray  # (N, n_time * R)
    n_time: int
    R: int

    def __post_init__(self):
        self.H = np.ascontiguousarray(self.H, dtype=np.float64)
        self.G = scatter_factor(self.H)

    @classmethod
    def from_band(cls, H_band: np.ndarray) -> "BandBlock":
        N, n_time, R = H_band.shape
        return cls(H_band.reshape(N, n_time * R), n_time, R)

    @property
    def N(self) -> int:
        return self.H.shape[0]

    @property
    def dof(self) -> int:
        return (self.R - 1) * self.n_time

    @property
    def constant(self) -> float:
        return reml_constant(self.N * self.n_time, self.R)

    def negloglik_from_terms(self, logdet: float, quad: float) -> float:
        return self.constant + 0.5 * self.dof * logdet + 0.5 * quad


def spectral_roots(params: BandSpectralParams, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Square-root spectra of both regimes at the basis wavenumbers."""
    _, waves = fourier_basis(N)
    f_land = np.sqrt(matern_like_spectrum(waves, params.land, N))
    f_ocean = f_land if params.is_axial else np.sqrt(matern_like_spectrum(waves, params.ocean, N))
    return f_land, f_ocean


def band_weights(params: BandSpectralParams, mask_row, warn: bool = True) -> np.ndarray:
    row = np.asarray(mask_row)
    if params.is_axial:
        return np.ones(row.size)
    params.taper.check(row.size)
    return land_weights(row, params.taper.g, params.taper.gamma, warn=warn)


def band_negloglik(params: BandSpectralParams, mask_row, block: BandBlock) -> float:
    """Restricted negative log-likelihood of one band treated as independent."""
    N = block.N
    W, _ = fourier_basis(N)
    f_land, f_ocean = spectral_roots(params, N)
    b = band_weights(params, mask_row)
    logdet, quad = kernels.band_terms(b, f_land, f_ocean, W, block.G)
    return block.negloglik_from_terms(logdet, quad)


def band_factor(params: BandSpectralParams, mask_row, N: int) -> np.ndarray:
    """Square basis factor ``B`` with ``B B' = band_covariance``."""
    W, _ = fourier_basis(N)
    f_land, f_ocean = spectral_roots(params, N)
    b = band_weights(params, mask_row, warn=False)
    return (b[:, None] * f_land[None, :] + (1.0 - b)[:, None] * f_ocean[None, :]) * W


@dataclass
class ChainStatistics:
    """Sufficient statistics of basis coefficients for the latitude chain.

    ``base`` is the negative log-likelihood with independent bands; the
    arrays (M - 1, N) hold ``sum z_m^2``, ``sum z_m z_{m+1}`` and
    ``sum z_{m+1}^2`` over samples, for each step m and basis column.
    """

    base: float
    band_nll: np.ndarray
    lo_sq: np.ndarray
    cross: np.ndarray
    hi_sq: np.ndarray
    dof: int
    N: int

    @property
    def M(self) -> int:
        return self.band_nll.size

    def step_gain(self, phi: np.ndarray, steps=None) -> np.ndarray:
        """Change in negative log-likelihood per step for coefficients ``phi`` (rows = steps)."""
        if steps is None:
            steps = slice(None)
        a, b, c = self.lo_sq[steps], self.cross[steps], self.hi_sq[steps]
        one_m = 1.0 - phi * phi
        quad = (c - 2.0 * phi * b + phi * phi * a) / one_m - c
        return 0.5 * self.dof * np.sum(np.log(one_m), axis=-1) + 0.5 * np.sum(quad, axis=-1)

    def negloglik(self, profile: LatitudeCoherenceProfile | None) -> float:
        if profile is None or self.M < 2:
            return self.base
        _, waves = fourier_basis(self.N)
        phi = step_coefficients(profile, self.M, waves, self.N)
        return self.base + float(np.sum(self.step_gain(phi)))


def chain_statistics(bands, mask: np.ndarray, H: np.ndarray) -> ChainStatistics:
    """Per-band terms and chain statistics for innovations ``H`` of shape (M, N, n_time, R)."""
    M, N, n_time, R = H.shape
    band_nll = np.empty(M)
    Z = np.empty((M, N, n_time * R))
    for m in range(M):
        Bm = band_factor(bands[m], mask[m], N)
        Y = H[m].reshape(N, n_time * R)
        try:
            lu, piv = lu_factor(Bm, check_finite=False)
        except (LinAlgError, ValueError) as exc:
            raise NotPositiveDefiniteError(("band", m), str(exc)) from None
        d = np.abs(np.diag(lu))
        if not np.all(np.isfinite(d)) or np.any(d <= np.finfo(float).tiny):
            raise NotPositiveDefiniteError(("band", m), "singular transfer factor")
        Z[m] = lu_solve((lu, piv), Y, check_finite=False)
        logdet = 2.0 * np.sum(np.log(d))
        band_nll[m] = reml_constant(N * n_time, R) + 0.5 * (R - 1) * n_time * logdet + 0.5 * np.sum(Z[m] ** 2)
    sq = np.sum(Z * Z, axis=2)
    cross = np.sum(Z[:-1] * Z[1:], axis=2)
    return ChainStatistics(
        base=float(np.sum(band_nll)),
        band_nll=band_nll,
        lo_sq=sq[:-1],
        cross=cross,
        hi_sq=sq[1:],
        dof=(R - 1) * n_time,
        N=N,
    )


def spatial_negloglik(bands, profile, mask, H) -> float:
    """Restricted negative log-likelihood of innovations under the full spatial model.

    ``bands = None`` means spatial independence with unit variances.
    """
    H = np.asarray(H, dtype=np.float64)
    M, N, n_time, R = H.shape
    if bands is None:
        return reml_constant(M * N * n_time, R) + 0.5 * float(np.sum(H * H))
    return chain_statistics(bands, np.asarray(mask), H).negloglik(profile)
