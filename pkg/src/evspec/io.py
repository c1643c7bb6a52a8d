"""Binary ensemble tensors, JSON model files, CSV masks and tables.

Tensor layout (all little-endian)::

    b"EVSP" | uint32 version=1 | uint64 M, N, K, R | float64 latitudes[M] | float64 payload[M*N*K*R]

The payload is in (m, n, k, r) order with r varying fastest.
"""
from __future__ import annotations

import csv
import json
import math
import os
import struct
from pathlib import Path

import numpy as np

from .coherence import CoherencePair, LatitudeCoherenceProfile
from .fitting import FittedModel
from .grid import EnsembleField, GridError, LandMask, SphereGrid
from .simulation import TrendField
from .spectral import BandSpectralParams, MaternSpectrumParams, TaperParams
from .temporal import TemporalParams

MAGIC = b"EVSP"
TENSOR_VERSION = 1
MODEL_SCHEMA = "evspec.model"
MODEL_SCHEMA_VERSION = 1
_HEADER = struct.Struct("<4sI4Q")
_MAX_VALUES = 2**60


class TensorIOError(OSError):
    """Base class for tensor file errors; ``code`` names the failure kind."""

    code = "io"
    exit_code = 3

    def __init__(self, path, detail: str):
        self.path = str(path)
        super().__init__(f"{self.code} error in {self.path}: {detail}")


class TensorFormatError(TensorIOError):
    code = "format"
    exit_code = 6


class TensorLengthError(TensorIOError):
    code = "payload length"
    exit_code = 7


class TensorDimensionError(TensorIOError):
    code = "dimension overflow"
    exit_code = 8


class ModelFileError(ValueError):
    """Model file is malformed or from an unsupported schema."""


# ---------------------------------------------------------------------------
# tensors


def write_tensor_array(path, latitudes, values) -> None:
    """Write a raw (M, N, K, R) array with its band latitudes (radians)."""
    vals = np.asarray(values, dtype=np.float64)
    lat = np.asarray(latitudes, dtype=np.float64).reshape(-1)
    if vals.ndim != 4:
        raise ValueError("tensor values must be 4-D (M, N, K, R)")
    if lat.size != vals.shape[0]:
        raise ValueError(f"{lat.size} latitudes for {vals.shape[0]} bands")
    header = _HEADER.pack(MAGIC, TENSOR_VERSION, *vals.shape)
    tmp = Path(f"{path}.tmp")
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(lat.astype("<f8").tobytes())
        fh.write(np.ascontiguousarray(vals).astype("<f8", copy=False).tobytes(order="C"))
    os.replace(tmp, path)


def write_tensor(field: EnsembleField, path) -> None:
    write_tensor_array(path, field.grid.latitudes, field.values)


def read_tensor_array(path) -> tuple[np.ndarray, np.ndarray]:
    """Read ``(latitudes, values)`` without grid validation (e.g. K = R = 1 grids)."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            if head[:4] != MAGIC[: len(head[:4])]:
                raise TensorFormatError(path, "bad magic bytes")
            raise TensorLengthError(path, f"header truncated at {len(head)} bytes")
        magic, version, *dims = _HEADER.unpack(head)
        if magic != MAGIC:
            raise TensorFormatError(path, f"bad magic bytes {magic!r}")
        if version != TENSOR_VERSION:
            raise TensorFormatError(path, f"unsupported version {version}")
        count = math.prod(dims)
        if dims[0] > _MAX_VALUES or count > _MAX_VALUES:
            raise TensorDimensionError(path, f"dimensions {tuple(dims)} exceed the supported size")
        if min(dims) < 1:
            raise TensorFormatError(path, f"zero dimension in {tuple(dims)}")
        lat_bytes = fh.read(8 * dims[0])
        if len(lat_bytes) != 8 * dims[0]:
            raise TensorLengthError(path, "latitude table truncated")
        body = fh.read(8 * count + 1)
    if len(body) != 8 * count:
        raise TensorLengthError(path, f"expected {8 * count} payload bytes, found {len(body)}")
    lat = np.frombuffer(lat_bytes, dtype="<f8").astype(np.float64)
    vals = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape(dims)
    return lat, vals


def read_tensor(path) -> EnsembleField:
    lat, vals = read_tensor_array(path)
    M, N, K, R = vals.shape
    try:
        return EnsembleField(SphereGrid(lat, N, K, R), vals)
    except GridError as exc:
        raise TensorFormatError(path, str(exc)) from None


# ---------------------------------------------------------------------------
# masks and CSV tables


def read_mask(path) -> LandMask:
    """CSV mask: M rows of N comma-separated 0/1 values, south to north."""
    rows = []
    with open(path, newline="") as fh:
        for line in csv.reader(fh):
            if not line or all(not c.strip() for c in line):
                continue
            try:
                rows.append([int(c) for c in line])
            except ValueError:
                raise GridError(f"{path}: non-integer mask entry in row {len(rows)}") from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise GridError(f"{path}: mask rows must be non-empty and of equal length")
    return LandMask(np.array(rows))


def write_mask(mask: LandMask, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in mask.indicator:
            w.writerow([int(v) for v in row])


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return v


def write_csv(path, header, rows) -> None:
    """LF-terminated CSV with shortest round-trip float formatting."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


# ---------------------------------------------------------------------------
# model files


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def model_to_dict(model: FittedModel, trend: TrendField | None = None) -> dict:
    report = {k: v for k, v in model.fit_report.items() if k != "timings"}
    d = {
        "schema": MODEL_SCHEMA,
        "schema_version": MODEL_SCHEMA_VERSION,
        "variant": model.variant,
        "grid": {
            "latitudes": model.grid.latitudes.tolist(),
            "N": model.grid.N,
            "K": model.grid.K,
            "R": model.grid.R,
        },
        "mask": model.mask.indicator.tolist(),
        "temporal": {
            "phi1": model.temporal.phi1.tolist(),
            "phi2": model.temporal.phi2.tolist(),
            "sigma": model.temporal.sigma.tolist(),
        },
        "bands": None,
        "coherence": None,
        "trend": None,
        "fit_report": report,
    }
    if model.bands is not None:
        d["bands"] = [
            {
                "land": list(b.land.as_tuple()),
                "ocean": list(b.ocean.as_tuple()),
                "taper": {"g": b.taper.g, "gamma": b.taper.gamma},
            }
            for b in model.bands
        ]
    if model.coherence is not None:
        c = model.coherence
        d["coherence"] = {
            "mode": c.mode,
            "global": [c.global_pair.xi, c.global_pair.tau],
            "tropical": {str(m): [p.xi, p.tau] for m, p in sorted(c.tropical.items())},
            "tropic_bound_deg": c.tropic_bound_deg,
        }
    if trend is not None:
        d["trend"] = {"lambda": trend.lam, "values": trend.values.tolist()}
    return _jsonable(d)


def model_from_dict(d: dict) -> tuple[FittedModel, TrendField | None]:
    if d.get("schema") != MODEL_SCHEMA:
        raise ModelFileError(f"not a model file (schema {d.get('schema')!r})")
    if d.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise ModelFileError(f"unsupported model schema version {d.get('schema_version')!r}")
    try:
        g = d["grid"]
        grid = SphereGrid(g["latitudes"], g["N"], g["K"], g["R"])
        mask = LandMask(np.array(d["mask"]))
        t = d["temporal"]
        temporal = TemporalParams(np.array(t["phi1"]), np.array(t["phi2"]), np.array(t["sigma"]))
        bands = None
        if d.get("bands") is not None:
            bands = [
                BandSpectralParams(
                    MaternSpectrumParams(*b["land"]),
                    MaternSpectrumParams(*b["ocean"]),
                    TaperParams(b["taper"]["g"], b["taper"]["gamma"]),
                )
                for b in d["bands"]
            ]
        coherence = None
        if d.get("coherence") is not None:
            c = d["coherence"]
            coherence = LatitudeCoherenceProfile(
                c["mode"],
                CoherencePair(*c["global"]),
                {int(m): CoherencePair(*p) for m, p in c.get("tropical", {}).items()},
                c["tropic_bound_deg"],
            )
        model = FittedModel(d["variant"], grid, mask, temporal, bands, coherence, dict(d.get("fit_report", {})))
        trend = None
        if d.get("trend") is not None:
            trend = TrendField(np.array(d["trend"]["values"]), d["trend"]["lambda"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"invalid model file: {exc}") from None
    return model, trend


def write_model(model: FittedModel, path, trend: TrendField | None = None) -> None:
    """Serialize a model (and optional trend) as JSON; floats round-trip exactly."""
    text = json.dumps(model_to_dict(model, trend), indent=1, allow_nan=False)
    tmp = Path(f"{path}.tmp")
    with open(tmp, "w", newline="\n") as fh:
        fh.write(text)
        fh.write("\n")
    os.replace(tmp, path)


def read_model(path) -> tuple[FittedModel, TrendField | None]:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: not valid JSON ({exc})") from None
    return model_from_dict(d)
