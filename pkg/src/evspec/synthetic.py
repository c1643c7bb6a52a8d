"""Synthetic ensembles drawn from fully specified parameters.

A generator spec is a plain JSON-compatible dict::

    {
      "latitudes_deg": [...], "N": 48, "K": 60, "R": 4,
      "mask": "half-split" | {"kind": "blocks", "intervals": [...]} | [[0, 1, ...], ...],
      "bands": [{"land": {"phi":, "alpha":, "nu":}, "ocean": {...}, "taper": {"g":, "gamma":}}, ...],
      "coherence": {"mode": "stationary", "xi": 0.7, "tau": 0.5, "tropical": {"4": [xi, tau]}},
      "temporal": {"phi1": float or M x N list, "phi2": ..., "sigma": ...},
      "trend": {"offset": 0.0, "slope": 0.0, "lat_gradient": 0.0},
      "noise_scale": 1.0, "burn_in": 200
    }

``bands`` may also be a single dict used for every band, and a band entry
without ``ocean`` is axially symmetric.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from .coherence import CoherencePair, LatitudeCoherenceProfile, TROPIC_BOUND_DEG
from .fitting import FittedModel
from .grid import EnsembleField, GridError, LandMask, SphereGrid, synthetic_mask
from .simulation import DEFAULT_BURN_IN, TrendField, simulate_surrogates
from .spectral import BandSpectralParams, MaternSpectrumParams, TaperParams, matern_like_spectrum
from .temporal import TemporalParams


class SpecError(ValueError):
    """Generator spec is malformed."""


@dataclass
class SyntheticDataset:
    field: EnsembleField
    mask: LandMask
    truth: FittedModel
    trend: TrendField
    spec: dict


def unit_variance_phi(alpha: float, nu: float, N: int) -> float:
    """``phi`` giving a band marginal variance of one."""
    shape = matern_like_spectrum(np.arange(N), MaternSpectrumParams(1.0, alpha, nu), N)
    return float(1.0 / np.sum(shape))


def _desk_mask_intervals(M: int, N: int) -> list[list[list[int]]]:
    # band 0 is open ocean; the rest carry one or two continents drifting east
    out: list[list[list[int]]] = [[]]
    for m in range(1, M):
        start = (4 + 3 * m) % N
        width = N // 4 + (m % 3) * 2
        blocks = [[start, (start + width) % N]]
        if m % 2 == 0:
            s2 = (start + N // 2) % N
            blocks.append([s2, (s2 + N // 8) % N])
        out.append(blocks)
    return out


def default_spec() -> dict:
    """Desk-scale spec: M=12, N=48, K=60, R=4 with rough land and smooth ocean."""
    M, N = 12, 48
    lat = [-50.0 + 10.0 * m for m in range(M)]
    bands = []
    for m in range(M):
        a_land, nu_land = 1.2 + 0.05 * m, 0.5
        a_ocean, nu_ocean = 0.4 + 0.02 * m, 1.5
        bands.append(
            {
                "land": {"phi": unit_variance_phi(a_land, nu_land, N), "alpha": a_land, "nu": nu_land},
                "ocean": {"phi": unit_variance_phi(a_ocean, nu_ocean, N), "alpha": a_ocean, "nu": nu_ocean},
                "taper": {"g": 1, "gamma": 2.0 * np.pi * 4.0 / N},
            }
        )
    lat_r = np.radians(lat)
    n = np.arange(N)
    phi1 = 0.45 + 0.15 * np.cos(lat_r)[:, None] + 0.05 * np.sin(2 * np.pi * n / N)[None, :]
    phi2 = -0.1 + 0.1 * np.cos(2 * np.pi * n / N)[None, :] * np.ones((M, 1))
    sigma = 0.8 + 0.4 * np.abs(np.sin(lat_r))[:, None] * np.ones((1, N))
    return {
        "latitudes_deg": lat,
        "N": N,
        "K": 60,
        "R": 4,
        "mask": {"kind": "blocks", "intervals": _desk_mask_intervals(M, N)},
        "bands": bands,
        "coherence": {"mode": "stationary", "xi": 0.7, "tau": 0.5},
        "temporal": {"phi1": phi1.tolist(), "phi2": phi2.tolist(), "sigma": sigma.tolist()},
        "trend": {"offset": 14.0, "slope": 0.02, "lat_gradient": -0.3},
        "noise_scale": 1.0,
        "burn_in": DEFAULT_BURN_IN,
    }


def _matern(d, what) -> MaternSpectrumParams:
    try:
        return MaternSpectrumParams(float(d["phi"]), float(d["alpha"]), float(d["nu"]))
    except (KeyError, TypeError) as exc:
        raise SpecError(f"{what}: expected phi, alpha and nu ({exc})") from None
    except ValueError as exc:
        raise SpecError(f"{what}: {exc}") from None


def _site_array(value, M: int, N: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        return np.full((M, N), float(arr))
    if arr.shape != (M, N):
        raise SpecError(f"temporal {name} must be a scalar or an {M} x {N} array, got shape {arr.shape}")
    return arr


def build_truth(spec: dict) -> tuple[FittedModel, TrendField]:
    """Parse a generator spec into a true model and trend."""
    try:
        grid = SphereGrid.from_degrees(spec["latitudes_deg"], spec["N"], spec["K"], spec["R"])
    except KeyError as exc:
        raise SpecError(f"spec is missing {exc}") from None
    except GridError as exc:
        raise SpecError(str(exc)) from None
    M, N, K = grid.M, grid.N, grid.K
    mask_spec = spec.get("mask", "all-ocean")
    try:
        if isinstance(mask_spec, list) and mask_spec and isinstance(mask_spec[0], list) and all(
            isinstance(v, (int, float)) for v in mask_spec[0]
        ):
            mask = LandMask(np.asarray(mask_spec))
        else:
            mask = synthetic_mask(M, N, mask_spec)
        mask.check_grid(grid)
    except (GridError, TypeError, KeyError) as exc:
        raise SpecError(f"mask: {exc}") from None

    raw_bands = spec.get("bands")
    if raw_bands is None:
        raise SpecError("spec is missing 'bands'")
    if isinstance(raw_bands, dict):
        raw_bands = [raw_bands] * M
    if len(raw_bands) != M:
        raise SpecError(f"expected {M} band entries, got {len(raw_bands)}")
    bands = []
    for m, b in enumerate(raw_bands):
        land = _matern(b.get("land", {}), f"band {m} land")
        if "ocean" not in b:
            bands.append(BandSpectralParams.axial(land))
            continue
        ocean = _matern(b["ocean"], f"band {m} ocean")
        t = b.get("taper", {})
        try:
            taper = TaperParams(int(t.get("g", 0)), float(t.get("gamma", 0.0)))
            taper.check(N)
        except ValueError as exc:
            raise SpecError(f"band {m} taper: {exc}") from None
        bands.append(BandSpectralParams(land, ocean, taper))

    coh = spec.get("coherence", {})
    try:
        mode = coh.get("mode", "stationary")
        pair = CoherencePair(float(coh.get("xi", 0.0)), float(coh.get("tau", 0.0)))
        trop = {int(k): CoherencePair(*v) for k, v in coh.get("tropical", {}).items()}
        bound = float(coh.get("tropic_bound_deg", TROPIC_BOUND_DEG))
        profile = LatitudeCoherenceProfile(mode, pair, trop, bound)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"coherence: {exc}") from None

    tp = spec.get("temporal", {})
    try:
        temporal = TemporalParams(
            _site_array(tp.get("phi1", 0.0), M, N, "phi1"),
            _site_array(tp.get("phi2", 0.0), M, N, "phi2"),
            _site_array(tp.get("sigma", 1.0), M, N, "sigma"),
        )
    except ValueError as exc:
        raise SpecError(f"temporal: {exc}") from None

    tr = spec.get("trend", {})
    k = np.arange(K, dtype=np.float64)
    lat = grid.latitudes_deg[:, None, None]
    trend_vals = (
        float(tr.get("offset", 0.0))
        + float(tr.get("lat_gradient", 0.0)) * np.abs(lat) * np.ones((1, N, 1))
        + float(tr.get("slope", 0.0)) * k[None, None, :]
    )
    trend = TrendField(np.broadcast_to(trend_vals, (M, N, K)))

    if all(b.is_axial for b in bands) and mode == "stationary":
        variant = "ax"
    else:
        variant = "ev-nst" if mode == "nonstationary" else "ev-st"
    variant = spec.get("variant", variant)
    try:
        truth = FittedModel(variant, grid, mask, temporal, bands, profile, {"source": "synthetic truth"})
    except ValueError as exc:
        raise SpecError(str(exc)) from None
    return truth, trend


def gen_synthetic(spec: dict | None = None, seed: int = 0) -> SyntheticDataset:
    """Simulate an ensemble from ``spec`` (the desk default when ``None``)."""
    spec = copy.deepcopy(spec) if spec is not None else default_spec()
    truth, trend = build_truth(spec)
    noise = float(spec.get("noise_scale", 1.0))
    burn = int(spec.get("burn_in", DEFAULT_BURN_IN))
    if noise < 0 or burn < 0:
        raise SpecError("noise_scale and burn_in must be nonnegative")
    sur = simulate_surrogates(truth, trend, truth.grid.R, seed, burn_in=burn, noise_scale=noise)
    return SyntheticDataset(sur.field, truth.mask, truth, trend, spec)
