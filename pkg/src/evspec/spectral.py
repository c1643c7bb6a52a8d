"""Evolutionary transfer functions built from land/ocean covariates.

Within one latitude band the innovation process is

    H(ell_n) = sum_c f_n(c) exp(i ell_n c) Htilde(c),

with ``f_n(c) = b(n) f_land(c) + (1 - b(n)) f_ocean(c)`` and ``b`` a
smoothed land indicator. Each ``f_j`` is the positive square root of a
Matern-like circular spectrum. The real-valued realization uses a cosine /
sine basis with independent standard-normal coefficients, which gives the
covariance returned by :func:`band_covariance`.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

TWO_PI = 2.0 * np.pi


class LandErasedWarning(UserWarning):
    """Erosion by a negative boundary shift removed every land point of a band."""


@dataclass(frozen=True)
class MaternSpectrumParams:
    phi: float
    alpha: float
    nu: float

    def __post_init__(self):
        for name in ("phi", "alpha", "nu"):
            v = float(getattr(self, name))
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")
            object.__setattr__(self, name, v)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.phi, self.alpha, self.nu)


@dataclass(frozen=True)
class TaperParams:
    """Boundary shift ``g`` (grid points) and Tukey range ``gamma`` (radians)."""

    g: int = 0
    gamma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "g", int(self.g))
        gamma = float(self.gamma)
        if not (0.0 <= gamma < TWO_PI):
            raise ValueError(f"gamma must be in [0, 2*pi), got {gamma}")
        object.__setattr__(self, "gamma", gamma)

    def check(self, N: int) -> None:
        if 2 * abs(self.g) >= N:
            raise ValueError(f"|g| must be < N/2, got g={self.g} with N={N}")


@dataclass(frozen=True)
class BandSpectralParams:
    land: MaternSpectrumParams
    ocean: MaternSpectrumParams
    taper: TaperParams = TaperParams()

    @classmethod
    def axial(cls, params: MaternSpectrumParams) -> "BandSpectralParams":
        """Both regimes share one spectrum: the band is stationary in longitude."""
        return cls(params, params, TaperParams())

    @property
    def is_axial(self) -> bool:
        return self.land == self.ocean


def matern_like_spectrum(c, p: MaternSpectrumParams, N: int):
    """``phi / (alpha^2 + 4 sin^2(c pi / N))^(nu + 1/2)``, vectorized over ``c``."""
    s2 = np.sin(np.asarray(c, dtype=np.float64) * np.pi / N) ** 2
    return p.phi / (p.alpha**2 + 4.0 * s2) ** (p.nu + 0.5)


def tukey_window(offset, gamma: float):
    """Tukey (tapered-cosine) window on a circle of circumference 2 pi.

    Cosine rise on [0, gamma/2], plateau of 1 on [gamma/2, 2 pi - gamma/2]
    and cosine fall back towards 0 at 2 pi. ``gamma = 0`` gives the constant 1.
    """
    gamma = float(gamma)
    if not (0.0 <= gamma < TWO_PI):
        raise ValueError(f"gamma must be in [0, 2*pi), got {gamma}")
    x = np.mod(np.asarray(offset, dtype=np.float64), TWO_PI)
    out = np.ones_like(x)
    if gamma == 0.0:
        return out if out.ndim else float(out)
    half = gamma / 2.0
    rise = x < half
    fall = x > TWO_PI - half
    out[rise] = 0.5 * (1.0 + np.cos(np.pi * (x[rise] - half) / half))
    out[fall] = 0.5 * (1.0 + np.cos(np.pi * (x[fall] - TWO_PI + half) / half))
    return out if out.ndim else float(out)


def transition_kernel(N: int, gamma: float) -> np.ndarray:
    """Unit-sum smoothing kernel on the longitude grid, indexed by circular offset.

    The kernel is the complement of :func:`tukey_window`, a raised-cosine
    bump of half-width ``gamma / 2`` centred on offset 0. When no offset
    other than 0 falls inside the bump the kernel is a delta.
    """
    k = 1.0 - tukey_window(TWO_PI * np.arange(N) / N, gamma)
    k[0] = 1.0
    return k / k.sum()


def modified_indicator(mask_row, g: int) -> np.ndarray:
    """Shift every land/ocean boundary by ``g`` points (dilate land if g > 0, erode if g < 0)."""
    row = np.asarray(mask_row).astype(np.int8)
    N = row.size
    g = int(g)
    if 2 * abs(g) >= N:
        raise ValueError(f"|g| must be < N/2, got g={g} with N={N}")
    if g == 0 or row.all() or not row.any():
        return row.copy()
    stacked = np.stack([np.roll(row, d) for d in range(-abs(g), abs(g) + 1)])
    return (stacked.max(axis=0) if g > 0 else stacked.min(axis=0)).astype(np.int8)


def _circular_convolve(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    N = x.size
    idx = (np.arange(N)[:, None] - np.arange(N)[None, :]) % N
    return kernel[idx] @ x


def land_weights(mask_row, g: int, gamma: float, warn: bool = True) -> np.ndarray:
    """Smoothed land fraction ``b_land`` for one band, every entry in [0, 1]."""
    row = np.asarray(mask_row)
    if row.all():
        return np.ones(row.size)
    if not row.any():
        return np.zeros(row.size)
    tilde = modified_indicator(row, g)
    if not tilde.any():
        if warn:
            warnings.warn(f"boundary shift g={g} erodes all land; using b = 0", LandErasedWarning, stacklevel=2)
        return np.zeros(row.size)
    b = _circular_convolve(tilde.astype(np.float64), transition_kernel(row.size, gamma))
    return np.clip(b, 0.0, 1.0)


def land_modulation(mask_row, taper: TaperParams) -> np.ndarray:
    """``b_land`` from a mask row and taper parameters."""
    taper.check(np.asarray(mask_row).size)
    return land_weights(mask_row, taper.g, taper.gamma)


def evolutionary_transfer(params: BandSpectralParams, mask_row, N: int | None = None) -> np.ndarray:
    """Transfer function ``F[n, c]`` for wavenumbers ``c = 0..N-1``."""
    row = np.asarray(mask_row)
    N = row.size if N is None else int(N)
    if row.size != N:
        raise ValueError(f"mask row has {row.size} entries, expected {N}")
    c = np.arange(N)
    f_land = np.sqrt(matern_like_spectrum(c, params.land, N))
    if params.is_axial:
        return np.tile(f_land, (N, 1))
    f_ocean = np.sqrt(matern_like_spectrum(c, params.ocean, N))
    b = land_modulation(row, params.taper)
    return b[:, None] * f_land[None, :] + (1.0 - b)[:, None] * f_ocean[None, :]


@lru_cache(maxsize=64)
def _trig(N: int) -> tuple[np.ndarray, np.ndarray]:
    ang = np.outer(np.arange(N), np.arange(N)) * (TWO_PI / N)
    cos, sin = np.cos(ang), np.sin(ang)
    cos.setflags(write=False)
    sin.setflags(write=False)
    return cos, sin


def band_covariance(F: np.ndarray) -> np.ndarray:
    """``C[n, n'] = sum_c F[n, c] F[n', c] cos(c (ell_n - ell_n'))``."""
    F = np.asarray(F, dtype=np.float64)
    cos, sin = _trig(F.shape[0])
    A = F * cos
    S = F * sin
    C = A @ A.T + S @ S.T
    return 0.5 * (C + C.T)


@lru_cache(maxsize=64)
def fourier_basis(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Real orthogonal Fourier basis ``W`` (N x N, ``W.T @ W = N I``) and its wavenumbers.

    Column j is ``1`` for c = 0, ``sqrt(2) cos`` / ``sqrt(2) sin`` for
    0 < c < N/2 and ``(-1)^n`` for c = N/2 when N is even. Pairing c with
    N - c this way turns ``band_covariance(F)`` into ``B @ B.T`` with
    ``B = F[:, wavenumbers] * W`` square.
    """
    n = np.arange(N)
    cols = [np.ones(N)]
    waves = [0]
    for c in range(1, (N - 1) // 2 + 1):
        cols.append(np.sqrt(2.0) * np.cos(TWO_PI * n * c / N))
        cols.append(np.sqrt(2.0) * np.sin(TWO_PI * n * c / N))
        waves += [c, c]
    if N % 2 == 0:
        cols.append(np.cos(np.pi * n))
        waves.append(N // 2)
    W = np.ascontiguousarray(np.stack(cols, axis=1))
    wavenumbers = np.array(waves, dtype=np.intp)
    W.setflags(write=False)
    wavenumbers.setflags(write=False)
    return W, wavenumbers


def basis_factor(F: np.ndarray) -> np.ndarray:
    """Square factor ``B`` with ``B @ B.T == band_covariance(F)``."""
    W, waves = fourier_basis(F.shape[0])
    return F[:, waves] * W
