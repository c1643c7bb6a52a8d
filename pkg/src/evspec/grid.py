"""Sphere-time grid, ensemble tensors, land masks and the mean/anomaly split.

Arrays follow the (m, n, k, r) convention throughout the package:
latitude band, longitude, time step, realization. Latitude bands are
stored south to north.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class GridError(ValueError):
    """Raised when a grid, field or mask violates its invariants."""


@dataclass(frozen=True)
class SphereGrid:
    """Regular latitude/longitude/time grid for an ensemble.

    Parameters
    ----------
    latitudes : sequence of float
        Band latitudes in radians, strictly increasing, inside (-pi/2, pi/2).
    N : int
        Number of equally spaced longitudes, ``ell_n = 2 pi n / N``.
    K : int
        Number of time steps.
    R : int
        Number of realizations.
    """

    latitudes: np.ndarray
    N: int
    K: int
    R: int

    def __post_init__(self):
        lat = np.array(self.latitudes, dtype=np.float64).reshape(-1)
        lat.setflags(write=False)
        object.__setattr__(self, "latitudes", lat)
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "R", int(self.R))
        if lat.size < 1:
            raise GridError("grid needs at least one latitude band")
        if self.N < 2:
            raise GridError(f"N must be >= 2, got {self.N}")
        if self.K < 3:
            raise GridError(f"K must be >= 3, got {self.K}")
        if self.R < 1:
            raise GridError(f"R must be >= 1, got {self.R}")
        if not np.all(np.isfinite(lat)) or np.any(np.abs(lat) >= np.pi / 2):
            raise GridError("latitudes must lie strictly inside (-pi/2, pi/2)")
        if np.any(np.diff(lat) <= 0):
            raise GridError("latitudes must be strictly increasing (south to north)")

    @property
    def M(self) -> int:
        return int(self.latitudes.size)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.M, self.N, self.K, self.R)

    @property
    def longitudes(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.N) / self.N

    @property
    def latitudes_deg(self) -> np.ndarray:
        return np.degrees(self.latitudes)

    def with_runs(self, R: int) -> "SphereGrid":
        return SphereGrid(self.latitudes, self.N, self.K, R)

    def with_times(self, K: int) -> "SphereGrid":
        return SphereGrid(self.latitudes, self.N, K, self.R)

    @classmethod
    def from_degrees(cls, latitudes_deg: Sequence[float], N: int, K: int, R: int) -> "SphereGrid":
        return cls(np.radians(np.asarray(latitudes_deg, dtype=np.float64)), N, K, R)


@dataclass(frozen=True)
class EnsembleField:
    """Ensemble tensor ``T_r(L_m, ell_n, t_k)`` with shape (M, N, K, R)."""

    grid: SphereGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64, order="C")
        if vals.shape != self.grid.shape:
            raise GridError(f"values shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise GridError("ensemble values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class LandMask:
    """Binary land indicator ``I_m(ell_n)``: 1 = land, 0 = ocean."""

    indicator: np.ndarray

    def __post_init__(self):
        ind = np.asarray(self.indicator)
        if ind.ndim != 2:
            raise GridError("land mask must be a 2-D (M, N) array")
        if not np.all((ind == 0) | (ind == 1)):
            raise GridError("land mask entries must be 0 or 1")
        ind = ind.astype(np.int8)
        ind.setflags(write=False)
        object.__setattr__(self, "indicator", ind)

    @property
    def M(self) -> int:
        return self.indicator.shape[0]

    @property
    def N(self) -> int:
        return self.indicator.shape[1]

    def row(self, m: int) -> np.ndarray:
        return self.indicator[m]

    def check_grid(self, grid: SphereGrid) -> None:
        if (self.M, self.N) != (grid.M, grid.N):
            raise GridError(f"mask shape {(self.M, self.N)} does not match grid {(grid.M, grid.N)}")


def _values(field) -> np.ndarray:
    return field.values if isinstance(field, EnsembleField) else np.asarray(field, dtype=np.float64)


def ensemble_mean(field) -> np.ndarray:
    """Pointwise mean over realizations, shape (M, N, K).

    This is also the restricted-likelihood estimator of the mean field.
    """
    return _values(field).mean(axis=-1)


def anomalies(field) -> np.ndarray:
    """Deviations of each realization from the ensemble mean, shape (M, N, K, R)."""
    vals = _values(field)
    if vals.shape[-1] < 2:
        raise GridError("anomalies undefined for single realization")
    if vals.shape[-1] == 2:
        # half-difference keeps the pair exactly antisymmetric
        half = 0.5 * (vals[..., 0] - vals[..., 1])
        return np.stack([half, -half], axis=-1)
    return vals - vals.mean(axis=-1, keepdims=True)


def synthetic_mask(M: int, N: int, spec) -> LandMask:
    """Build a land mask from a pattern descriptor.

    ``spec`` is one of ``"all-land"``, ``"all-ocean"``, ``"half-split"``,
    ``("blocks", intervals)`` or ``("random", p, seed)``. For blocks,
    ``intervals`` has one entry per band: a list of ``(start, stop)``
    longitude index pairs (stop exclusive, wrapping when ``stop < start``).
    Dict forms ``{"kind": "blocks", "intervals": ...}`` and
    ``{"kind": "random", "p": ..., "seed": ...}`` are accepted too.
    """
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind == "blocks":
            spec = ("blocks", spec["intervals"])
        elif kind == "random":
            spec = ("random", spec["p"], spec.get("seed", 0))
        else:
            spec = kind
    if isinstance(spec, str):
        if spec == "all-land":
            return LandMask(np.ones((M, N), dtype=np.int8))
        if spec == "all-ocean":
            return LandMask(np.zeros((M, N), dtype=np.int8))
        if spec == "half-split":
            ind = np.zeros((M, N), dtype=np.int8)
            ind[:, : N // 2] = 1
            return LandMask(ind)
        raise GridError(f"unknown mask pattern {spec!r}")

    kind = spec[0]
    if kind == "random":
        _, p, seed = spec
        if not 0.0 <= p <= 1.0:
            raise GridError("random mask probability must be in [0, 1]")
        rng = np.random.default_rng(seed)
        return LandMask((rng.random((M, N)) < p).astype(np.int8))
    if kind == "blocks":
        intervals = spec[1]
        if len(intervals) != M:
            raise GridError(f"blocks descriptor needs {M} interval lists, got {len(intervals)}")
        ind = np.zeros((M, N), dtype=np.int8)
        for m, band in enumerate(intervals):
            for item in band:
                try:
                    start, stop = (int(v) for v in item)
                except (TypeError, ValueError):
                    raise GridError(f"malformed interval {item!r} in band {m}") from None
                if not (0 <= start < N and 0 <= stop <= N):
                    raise GridError(f"interval {item!r} in band {m} outside 0..{N}")
                if start < stop:
                    ind[m, start:stop] = 1
                elif stop < start:
                    ind[m, start:] = 1
                    ind[m, :stop] = 1
                else:
                    raise GridError(f"empty interval {item!r} in band {m}")
        return LandMask(ind)
    raise GridError(f"unknown mask pattern {spec!r}")
