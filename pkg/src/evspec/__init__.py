"""Evolutionary-spectrum space-time Gaussian processes for gridded ensembles.

Fits a nonstationary covariance model (AR(2) in time, land/ocean evolutionary
spectra in longitude, AR(1) coherence in latitude) to an initial-condition
ensemble by successive restricted-likelihood steps, and draws surrogate runs
from the fitted parameters.
"""
from .coherence import CoherencePair, LatitudeCoherenceProfile
from .fitting import FitConfig, FittedModel, bic, fit, fit_variants, model_negloglik, parameter_count
from .grid import EnsembleField, LandMask, SphereGrid, anomalies, ensemble_mean, synthetic_mask
from .kernels import BACKEND as KERNEL_BACKEND
from .simulation import TrendField, compression_report, fit_trend, simulate_surrogates
from .spectral import BandSpectralParams, MaternSpectrumParams, TaperParams
from .temporal import TemporalParams

__version__ = "0.1.0"

__all__ = [
    "BandSpectralParams",
    "CoherencePair",
    "EnsembleField",
    "FitConfig",
    "FittedModel",
    "KERNEL_BACKEND",
    "LandMask",
    "LatitudeCoherenceProfile",
    "MaternSpectrumParams",
    "SphereGrid",
    "TaperParams",
    "TemporalParams",
    "TrendField",
    "anomalies",
    "bic",
    "compression_report",
    "ensemble_mean",
    "fit",
    "fit_trend",
    "fit_variants",
    "model_negloglik",
    "parameter_count",
    "simulate_surrogates",
    "synthetic_mask",
]
