"""Hot numerical kernels with a compiled backend and a pure-Python fallback.

The compiled extension is used when it was built and importable; setting
``EVSP_PURE_PYTHON=1`` forces the fallback. ``BACKEND`` names the active one.
"""
import os

import numpy as np

from . import _pykernels

if os.environ.get("EVSP_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def band_terms(b, f_land, f_ocean, W, G):
    return _impl.band_terms(_c(b), _c(f_land), _c(f_ocean), _c(W), _c(G))


def ar2_whiten(eps, phi1, phi2, sigma):
    return _impl.ar2_whiten(_c(eps), _c(phi1), _c(phi2), _c(sigma))


def ar2_colorize(H, phi1, phi2, sigma, burn_in=0):
    burn_in = int(burn_in)
    if burn_in < 0 or burn_in > H.shape[1]:
        raise ValueError(f"burn_in must be in [0, {H.shape[1]}], got {burn_in}")
    return _impl.ar2_colorize(_c(H), _c(phi1), _c(phi2), _c(sigma), burn_in)
