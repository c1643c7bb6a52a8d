"""Three-step conditional restricted-likelihood fitting.

Step 1 fits AR(2) coefficients per site treating innovations as spatially
independent. Step 2 fits each latitude band's longitudinal spectrum with
bands independent. Step 3 fits the latitudinal coherence with everything
else held fixed. Every step optimizes an exact block of the restricted
likelihood, so summed step values are comparable across model variants.
"""
from __future__ import annotations

import logging
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize
from threadpoolctl import threadpool_limits

from . import kernels
from .coherence import (
    CoherencePair,
    LatitudeCoherenceProfile,
    TROPIC_BOUND_DEG,
    coherence_value,
    tropical_bands,
)
from .grid import EnsembleField, LandMask, SphereGrid, anomalies
from .likelihood import (
    BandBlock,
    ChainStatistics,
    chain_statistics,
    reml_constant,
    spatial_negloglik,
    temporal_jacobian,
)
from .spectral import (
    TWO_PI,
    BandSpectralParams,
    MaternSpectrumParams,
    TaperParams,
    fourier_basis,
    modified_indicator,
    transition_kernel,
)
from .temporal import TemporalParams, fit_ar2_sites, whiten

log = logging.getLogger(__name__)

VARIANTS = ("ind", "ax", "ev-st", "ev-nst")
XI_MAX = 1.0 - 1e-6
_LOG_BOUND = 30.0


class FitError(RuntimeError):
    """A fitting step failed; ``step`` and ``band`` locate the failure."""

    def __init__(self, message: str, step: int, band: int | None = None):
        self.step = step
        self.band = band
        where = f"step {step}" + (f", band {band}" if band is not None else "")
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class FitConfig:
    variant: str = "ev-nst"
    g_range: tuple[int, int] = (-3, 3)
    fatol: float = 1e-8
    xatol: float = 1e-4
    max_fev: int = 4000
    start_points: tuple[tuple[float, float], ...] = ((1.0, 1.0), (0.3, 0.5), (3.0, 2.0))
    gamma_start: float = 3.0
    tropic_bound_deg: float = TROPIC_BOUND_DEG
    threads: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if not (self.fatol > 0 and self.xatol > 0 and self.max_fev > 0):
            raise ValueError("optimizer tolerances and max_fev must be positive")
        lo, hi = (int(v) for v in self.g_range)
        if lo > hi:
            raise ValueError(f"empty g range {self.g_range}")
        object.__setattr__(self, "g_range", (lo, hi))
        object.__setattr__(self, "start_points", tuple(tuple(float(v) for v in p) for p in self.start_points))
        if not self.start_points:
            raise ValueError("at least one starting point is required")
        if int(self.threads) < 1:
            raise ValueError("threads must be >= 1")
        object.__setattr__(self, "threads", int(self.threads))

    def g_values(self, N: int) -> list[int]:
        lo, hi = self.g_range
        return [g for g in range(lo, hi + 1) if 2 * abs(g) < N]

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "g_range": list(self.g_range),
            "fatol": self.fatol,
            "xatol": self.xatol,
            "max_fev": self.max_fev,
            "start_points": [list(p) for p in self.start_points],
            "gamma_start": self.gamma_start,
            "tropic_bound_deg": self.tropic_bound_deg,
            "threads": self.threads,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitConfig":
        kw = dict(d)
        if "g_range" in kw:
            kw["g_range"] = tuple(kw["g_range"])
        if "start_points" in kw:
            kw["start_points"] = tuple(tuple(p) for p in kw["start_points"])
        return cls(**kw)


@dataclass
class FittedModel:
    """Complete parameter bundle of one fitted variant."""

    variant: str
    grid: SphereGrid
    mask: LandMask
    temporal: TemporalParams
    bands: list[BandSpectralParams] | None = None
    coherence: LatitudeCoherenceProfile | None = None
    fit_report: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "ind":
            if self.bands is not None or self.coherence is not None:
                raise ValueError("variant 'ind' carries no spatial parameters")
            return
        if self.bands is None or len(self.bands) != self.grid.M:
            raise ValueError(f"variant {self.variant!r} needs one band parameter set per latitude")
        if self.coherence is None:
            raise ValueError(f"variant {self.variant!r} needs a coherence profile")
        if self.variant == "ax" and not all(b.is_axial for b in self.bands):
            raise ValueError("variant 'ax' requires identical land and ocean spectra in every band")
        want = "nonstationary" if self.variant == "ev-nst" else "stationary"
        if self.coherence.mode != want:
            raise ValueError(f"variant {self.variant!r} requires {want} coherence")

    @property
    def tropical_band_count(self) -> int:
        if self.variant != "ev-nst":
            return 0
        return len(self.coherence.tropical)

    @property
    def parameter_count(self) -> int:
        return parameter_count(self.variant, self.grid.M, self.tropical_band_count)


# ---------------------------------------------------------------------------
# counting and model comparison


def parameter_count(variant: str, M: int, tropical_band_count: int = 0) -> int:
    """Spatial parameter count of a variant (temporal parameters excluded)."""
    if variant == "ind":
        return 0
    if variant == "ax":
        return 3 * M + 2
    if variant == "ev-st":
        return 8 * M + 2
    if variant == "ev-nst":
        return 8 * M + 2 + 2 * int(tropical_band_count)
    raise ValueError(f"unknown variant {variant!r}")


def effective_observations(grid: SphereGrid) -> int:
    """``M N (K - 2) (R - 1)``: anomaly degrees of freedom after AR(2) whitening."""
    return grid.M * grid.N * (grid.K - 2) * (grid.R - 1)


def bic(negloglik: float, p: int, n_obs: int) -> float:
    """Bayesian information criterion ``2 nll + p log n``; lower is better."""
    return 2.0 * float(negloglik) + p * np.log(n_obs)


# ---------------------------------------------------------------------------
# optimizer plumbing


def _sigmoid(u):
    return 0.5 * (1.0 + np.tanh(0.5 * u))


def _logit(p):
    return np.log(p) - np.log1p(-p)


def _nelder_mead(fun, x0, step, config: FitConfig, max_restarts: int = 4):
    """Simplex search restarted from its best point until it stops improving.

    A fresh full-size simplex after each run escapes the premature collapse
    that Nelder-Mead suffers along curved ridges.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    step = np.broadcast_to(np.asarray(step, dtype=np.float64), x0.shape)
    best_x, best_f, nfev, converged = x0, fun(x0), 1, False
    for _ in range(1 + max_restarts):
        simplex = np.vstack([best_x, best_x + np.diag(step)])
        res = minimize(
            fun,
            best_x,
            method="Nelder-Mead",
            options={
                "initial_simplex": simplex,
                "xatol": config.xatol,
                "fatol": config.fatol,
                "maxfev": config.max_fev,
                "maxiter": config.max_fev,
            },
        )
        nfev += res.nfev
        converged = bool(res.success)
        gain = best_f - float(res.fun)
        if res.fun <= best_f:
            best_x, best_f = np.asarray(res.x), float(res.fun)
        if converged and not gain > 10.0 * config.fatol:
            break
    return best_x, best_f, converged, nfev


# ---------------------------------------------------------------------------
# step 1


def fit_step1_temporal(anoms, config: FitConfig | None = None) -> TemporalParams:
    """Per-site AR(2) fit on anomalies, rescaled to process innovation scale.

    Anomalies carry ``(R - 1) / R`` of the process variance, so the
    Yule-Walker innovation SD is inflated by ``sqrt(R / (R - 1))``.
    """
    anoms = np.asarray(anoms, dtype=np.float64)
    R = anoms.shape[-1]
    if R < 2:
        raise FitError("at least two realizations are required", step=1)
    params = fit_ar2_sites(anoms)
    return params.scaled(np.sqrt(R / (R - 1.0)))


# ---------------------------------------------------------------------------
# step 2


@dataclass
class BandFit:
    band: int
    ax: MaternSpectrumParams
    ax_negloglik: float
    ev: BandSpectralParams | None = None
    ev_negloglik: float | None = None
    converged: bool = True
    nfev: int = 0
    warnings: list[str] = field(default_factory=list)


class _BandObjective:
    """Band negative log-likelihood in transformed coordinates."""

    def __init__(self, block: BandBlock, mask_row):
        self.block = block
        self.row = np.asarray(mask_row)
        self.N = block.N
        self.W, waves = fourier_basis(self.N)
        self.sin2x4 = 4.0 * np.sin(waves * np.pi / self.N) ** 2
        self.ones = np.ones(self.N)
        idx = np.arange(self.N)
        self.circ = (idx[:, None] - idx[None, :]) % self.N
        self.tilde = None

    def root_spectrum(self, log_phi, log_alpha, log_nu):
        alpha2 = np.exp(2.0 * log_alpha)
        nu = np.exp(log_nu)
        return np.exp(0.5 * (log_phi - (nu + 0.5) * np.log(alpha2 + self.sin2x4)))

    def _nll(self, b, f1, f2) -> float:
        if not (np.all(np.isfinite(f1)) and np.all(np.isfinite(f2))):
            return np.inf
        logdet, quad = kernels.band_terms(b, f1, f2, self.W, self.block.G)
        val = self.block.negloglik_from_terms(logdet, quad)
        return val if np.isfinite(val) else np.inf

    def axial(self, theta) -> float:
        if np.any(np.abs(theta) > _LOG_BOUND):
            return np.inf
        f = self.root_spectrum(*theta)
        return self._nll(self.ones, f, f)

    def set_shift(self, g: int) -> None:
        self.tilde = modified_indicator(self.row, g).astype(np.float64)

    def weights(self, gamma: float) -> np.ndarray:
        if not self.tilde.any():
            return np.zeros(self.N)
        if self.tilde.all():
            return np.ones(self.N)
        k = transition_kernel(self.N, gamma)
        return np.clip(k[self.circ] @ self.tilde, 0.0, 1.0)

    def evolutionary(self, theta) -> float:
        if np.any(np.abs(theta[:6]) > _LOG_BOUND) or abs(theta[6]) > _LOG_BOUND:
            return np.inf
        f1 = self.root_spectrum(*theta[0:3])
        f2 = self.root_spectrum(*theta[3:6])
        gamma = TWO_PI * _sigmoid(theta[6])
        if not gamma < TWO_PI:
            return np.inf
        return self._nll(self.weights(gamma), f1, f2)


def _matern_from_theta(theta) -> MaternSpectrumParams:
    return MaternSpectrumParams(*np.exp(np.asarray(theta, dtype=np.float64)))


def fit_step2_band(H_band, mask_row, config: FitConfig, evolutionary: bool = True, band: int = 0) -> BandFit:
    """Fit one band: axially symmetric first, then the land/ocean model warm-started from it.

    ``H_band`` has shape (N, n_time, R). The evolutionary fit searches
    every integer boundary shift in ``config.g_range`` and optimizes the six
    spectral parameters and the taper range for each.
    """
    block = BandBlock.from_band(np.asarray(H_band, dtype=np.float64))
    obj = _BandObjective(block, mask_row)
    N = block.N
    notes: list[str] = []

    var_hat = float(np.mean(block.H**2))
    if not var_hat > 0:
        raise FitError("band innovations are identically zero", step=2, band=band)
    _, waves = fourier_basis(N)
    best = None
    nfev = 0
    starts = []
    for alpha, nu in config.start_points:
        shape = (alpha**2 + 4.0 * np.sin(waves * np.pi / N) ** 2) ** -(nu + 0.5)
        phi = var_hat / shape.sum()
        theta0 = np.log([phi, alpha, nu])
        starts.append((obj.axial(theta0), theta0))
    starts.sort(key=lambda s: s[0])
    converged = True
    for _, theta0 in starts:
        x, f, ok, n = _nelder_mead(obj.axial, theta0, 0.5, config)
        nfev += n
        if best is None or f < best[1]:
            best = (x, f, ok)
    ax_theta, ax_nll, ok = best
    converged &= ok
    ax = _matern_from_theta(ax_theta)
    result = BandFit(band=band, ax=ax, ax_negloglik=float(ax_nll), converged=converged, nfev=nfev)
    if not evolutionary:
        return result

    row = np.asarray(mask_row)
    if row.all() or not row.any():
        result.ev = BandSpectralParams(ax, ax, TaperParams(0, 0.0))
        result.ev_negloglik = float(ax_nll)
        return result

    u0 = float(_logit(min(max(config.gamma_start, 0.5), N / 2.0) / N))
    ax_start = np.concatenate([ax_theta, ax_theta, [u0]])
    step = np.array([0.5] * 6 + [1.0])
    best_theta, best_nll, best_g, best_ok = ax_start, float(ax_nll), 0, converged
    for g in config.g_values(N):
        obj.set_shift(g)
        if not obj.tilde.any():
            notes.append(f"g={g} erodes all land in band {band}")
        # the previous shift's optimum can sit on a flat-spectrum plateau, so
        # the axial start is always tried as well
        starts = [ax_start] if best_theta is ax_start else [ax_start, best_theta]
        for theta0 in starts:
            x, f, ok, n = _nelder_mead(obj.evolutionary, theta0, step, config)
            nfev += n
            if f < best_nll:
                best_theta, best_nll, best_g, best_ok = x, f, g, ok
    gamma = float(TWO_PI * _sigmoid(best_theta[6]))
    if not gamma < TWO_PI:
        gamma = np.nextafter(TWO_PI, 0.0)
    result.ev = BandSpectralParams(
        _matern_from_theta(best_theta[0:3]),
        _matern_from_theta(best_theta[3:6]),
        TaperParams(best_g, gamma),
    )
    result.ev_negloglik = float(best_nll)
    converged = bool(best_ok)
    result.converged = converged
    result.nfev = nfev
    if not converged:
        notes.append(f"optimizer did not converge in band {band}; best point kept")
    result.warnings = notes
    return result


def _band_task(args):
    m, H_band, row, config, evolutionary = args
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = fit_step2_band(H_band, row, config, evolutionary, band=m)
    res.warnings.extend(str(w.message) for w in caught)
    return res


def _init_worker():
    threadpool_limits(1)


def parallel_map(fn, items, threads: int):
    """Ordered map, in-process for one worker and over processes otherwise."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        with threadpool_limits(1):
            return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=threads, initializer=_init_worker) as pool:
        return list(pool.map(fn, items, chunksize=1))


def fit_step2(H, mask: LandMask, config: FitConfig, evolutionary: bool) -> list[BandFit]:
    """Band-wise fits, parallel over bands with results in band order."""
    tasks = [(m, H[m], mask.row(m), config, evolutionary) for m in range(H.shape[0])]
    return parallel_map(_band_task, tasks, config.threads)


# ---------------------------------------------------------------------------
# step 3


def _pair_from_theta(theta) -> CoherencePair:
    xi = float(_sigmoid(theta[0]))
    return CoherencePair(min(xi, XI_MAX), float(np.exp(theta[1])))


def _theta_from_pair(pair: CoherencePair):
    xi = min(max(pair.xi, 1e-6), XI_MAX)
    return np.array([_logit(xi), np.log(max(pair.tau, 1e-8))])


_COHERENCE_STARTS = (CoherencePair(0.5, 0.5), CoherencePair(0.2, 0.1), CoherencePair(0.9, 1.0))


def _fit_shared_pair(stats: ChainStatistics, steps: list[int], config: FitConfig, warm=None):
    """Single (xi, tau) maximizing the likelihood of the listed chain steps."""
    _, waves = fourier_basis(stats.N)
    steps = list(steps)

    def fun(theta):
        if np.any(np.abs(theta) > _LOG_BOUND):
            return np.inf
        phi = coherence_value(_pair_from_theta(theta), waves, stats.N)
        if np.any(phi >= 1.0):
            return np.inf
        val = float(np.sum(stats.step_gain(np.broadcast_to(phi, (len(steps), phi.size)), steps)))
        return val if np.isfinite(val) else np.inf

    starts = [warm] if warm is not None else []
    starts += list(_COHERENCE_STARTS)
    thetas = [_theta_from_pair(p) for p in starts]
    vals = [fun(t) for t in thetas]
    order = np.argsort(vals, kind="stable")
    best = None
    for i in order[:2]:
        x, f, _, _ = _nelder_mead(fun, thetas[i], 0.5, config)
        if best is None or f < best[1]:
            best = (x, f)
    return _pair_from_theta(best[0]), float(best[1])


def fit_pairwise_coherence(stats: ChainStatistics, config: FitConfig) -> dict[int, CoherencePair]:
    """Independent (xi, tau) for every adjacent band pair (m, m + 1)."""
    out = {}
    for m in range(stats.M - 1):
        pair, _ = _fit_shared_pair(stats, [m], config)
        out[m] = pair
    return out


def fit_step3_coherence(stats: ChainStatistics, latitudes_deg, config: FitConfig, mode: str, pairwise=None, warm=None):
    """Latitudinal coherence given fixed band transfer functions.

    Returns ``(profile, negloglik, pairwise, notes)``. In nonstationary mode
    the tropical steps are fixed at their pairwise estimates and one shared
    pair is fitted for the remaining steps.
    """
    notes: list[str] = []
    M = stats.M
    bound = config.tropic_bound_deg
    if M < 2:
        prof = LatitudeCoherenceProfile("stationary" if mode == "stationary" else "nonstationary",
                                        CoherencePair(0.0, 0.0), {}, bound)
        return prof, stats.base, {}, notes
    if pairwise is None:
        pairwise = fit_pairwise_coherence(stats, config)
    for m, p in pairwise.items():
        if p.xi >= XI_MAX:
            notes.append(f"pairwise xi for bands ({m}, {m + 1}) clamped at {XI_MAX}")
    if mode == "stationary":
        pair, _ = _fit_shared_pair(stats, list(range(M - 1)), config, warm=warm)
        if pair.xi >= XI_MAX:
            notes.append(f"global xi clamped at {XI_MAX}")
        prof = LatitudeCoherenceProfile("stationary", pair, {}, bound)
    elif mode == "nonstationary":
        trop = tropical_bands(latitudes_deg, bound)
        rest = [m for m in range(M - 1) if m not in trop]
        if rest:
            pair, _ = _fit_shared_pair(stats, rest, config, warm=warm)
        else:
            pair = warm if warm is not None else CoherencePair(0.0, 0.0)
        prof = LatitudeCoherenceProfile("nonstationary", pair, {m: pairwise[m] for m in trop}, bound)
    else:
        raise ValueError(f"unknown coherence mode {mode!r}")
    return prof, stats.negloglik(prof), pairwise, notes


# ---------------------------------------------------------------------------
# full pipeline


def _check_inputs(field: EnsembleField, mask: LandMask, config: FitConfig) -> None:
    mask.check_grid(field.grid)
    if field.grid.R < 2:
        raise FitError("at least two realizations are required", step=1)
    if field.grid.K < 5:
        raise FitError(f"at least 5 time steps are required, got {field.grid.K}", step=1)
    N = field.grid.N
    lo, hi = config.g_range
    if 2 * max(abs(lo), abs(hi)) >= N:
        raise ValueError(f"g range {config.g_range} violates |g| < N/2 for N={N}")


def _report(variant, grid, nll, jac, steps, band_nll, extra, timings) -> dict:
    n_obs = effective_observations(grid)
    rep = {
        "variant": variant,
        "negloglik": float(nll),
        "loglik": -float(nll),
        "n_obs": n_obs,
        "bic": None,
        "bic_convention": "2*negloglik + p*log(n_obs); lower is better",
        "temporal_jacobian": float(jac),
        "steps": {k: float(v) for k, v in steps.items()},
        "band_negloglik": [float(v) for v in band_nll] if band_nll is not None else None,
        "timings": dict(timings),
        "kernel_backend": kernels.BACKEND,
    }
    rep.update(extra)
    return rep


def fit_variants(field: EnsembleField, mask: LandMask, config: FitConfig | None = None, variants=None) -> dict:
    """Fit several nested variants sharing steps 1 and 2.

    The land/ocean fits are warm-started from the axially symmetric ones and
    the nonstationary coherence from the stationary one.
    """
    config = config or FitConfig()
    variants = tuple(variants or (config.variant,))
    for v in variants:
        if v not in VARIANTS:
            raise ValueError(f"unknown variant {v!r}")
    _check_inputs(field, mask, config)
    grid = field.grid
    timings: dict[str, float] = {}
    out: dict[str, FittedModel] = {}

    t0 = time.perf_counter()
    D = anomalies(field)
    try:
        temporal = fit_step1_temporal(D, config)
    except ValueError as exc:
        raise FitError(str(exc), step=1) from exc
    H = whiten(D, temporal)
    n_time = grid.K - 2
    jac = temporal_jacobian(temporal.sigma, n_time, grid.R)
    nll_ind = reml_constant(grid.M * grid.N * n_time, grid.R) + 0.5 * float(np.sum(H * H)) + jac
    timings["step1"] = time.perf_counter() - t0
    log.info("step 1 done in %.2fs", timings["step1"])

    if "ind" in variants:
        rep = _report("ind", grid, nll_ind, jac, {"step1": nll_ind}, None, {"warnings": []}, timings)
        rep["bic"] = bic(nll_ind, 0, rep["n_obs"])
        out["ind"] = FittedModel("ind", grid, mask, temporal, None, None, rep)

    spatial = [v for v in variants if v != "ind"]
    if not spatial:
        return out

    need_ev = any(v.startswith("ev") for v in spatial)
    t0 = time.perf_counter()
    fits = fit_step2(H, mask, config, need_ev)
    timings["step2"] = time.perf_counter() - t0
    log.info("step 2 done in %.2fs", timings["step2"])
    band_warnings = [w for f in fits for w in f.warnings]
    ax_bands = [BandSpectralParams.axial(f.ax) for f in fits]
    ax_band_nll = np.array([f.ax_negloglik for f in fits])
    lat_deg = grid.latitudes_deg
    ntrop = len(tropical_bands(lat_deg, config.tropic_bound_deg))

    def finish(variant, bands, band_nll, stats, prof, nll3, pairwise, notes):
        nll2 = float(np.sum(band_nll)) + jac
        nll = nll3 + jac
        extra = {
            "warnings": band_warnings + notes,
            "band_negloglik_ax": [float(v) for v in ax_band_nll],
            "pairwise_coherence": {str(m): [p.xi, p.tau] for m, p in sorted(pairwise.items())},
        }
        rep = _report(variant, grid, nll, jac, {"step1": nll_ind, "step2": nll2, "step3": nll}, band_nll, extra, timings)
        p = parameter_count(variant, grid.M, ntrop if variant == "ev-nst" else 0)
        rep["param_count"] = p
        rep["bic"] = bic(nll, p, rep["n_obs"])
        return FittedModel(variant, grid, mask, temporal, list(bands), prof, rep)

    t0 = time.perf_counter()
    if "ax" in spatial:
        stats = chain_statistics(ax_bands, mask.indicator, H)
        prof, nll3, pw, notes = fit_step3_coherence(stats, lat_deg, config, "stationary")
        out["ax"] = finish("ax", ax_bands, ax_band_nll, stats, prof, nll3, pw, notes)
    if need_ev:
        ev_bands = [f.ev for f in fits]
        ev_band_nll = np.array([f.ev_negloglik for f in fits])
        stats = chain_statistics(ev_bands, mask.indicator, H)
        pairwise = fit_pairwise_coherence(stats, config)
        prof_st, nll_st, _, notes_st = fit_step3_coherence(stats, lat_deg, config, "stationary", pairwise=pairwise)
        if "ev-st" in spatial:
            out["ev-st"] = finish("ev-st", ev_bands, ev_band_nll, stats, prof_st, nll_st, pairwise, notes_st)
        if "ev-nst" in spatial:
            prof, nll3, _, notes = fit_step3_coherence(
                stats, lat_deg, config, "nonstationary", pairwise=pairwise, warm=prof_st.global_pair
            )
            out["ev-nst"] = finish("ev-nst", ev_bands, ev_band_nll, stats, prof, nll3, pairwise, notes)
    timings["step3"] = time.perf_counter() - t0
    for model in out.values():
        model.fit_report["timings"] = dict(timings)
    return out


def fit(field: EnsembleField, mask: LandMask, config: FitConfig | None = None) -> FittedModel:
    """Run steps 1 to 3 for ``config.variant``."""
    config = config or FitConfig()
    return fit_variants(field, mask, config, (config.variant,))[config.variant]


def model_innovations(model: FittedModel, field: EnsembleField) -> np.ndarray:
    """Whitened anomalies of ``field`` under the model's temporal parameters."""
    return whiten(anomalies(field), model.temporal)


def model_negloglik(model: FittedModel, field: EnsembleField) -> float:
    """Full restricted negative log-likelihood of ``field`` under ``model``."""
    H = model_innovations(model, field)
    grid = field.grid
    jac = temporal_jacobian(model.temporal.sigma, grid.K - 2, grid.R)
    return spatial_negloglik(model.bands, model.coherence, model.mask.indicator, H) + jac


def with_variant(config: FitConfig, variant: str) -> FitConfig:
    return replace(config, variant=variant)
