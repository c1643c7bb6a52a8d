import numpy as np
import pytest

from evspec import (
    BandSpectralParams,
    CoherencePair,
    FitConfig,
    LandMask,
    LatitudeCoherenceProfile,
    MaternSpectrumParams,
    SphereGrid,
    TaperParams,
    TemporalParams,
)
from evspec.coherence import tropical_bands
from evspec.fitting import FittedModel

# criterion number -> (title, passed, detail)
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")


@pytest.fixture
def record():
    def _record(n, title, ok, detail):
        ACCEPTANCE[n] = (title, bool(ok), detail)
        print(f"criterion {n} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        return ok

    return _record


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_model(rng, M, N, K=6, R=3, variant="ev-nst", lat=None) -> FittedModel:
    """A model with randomized valid parameters on a small grid."""
    lat = np.linspace(-40, 40, M) if lat is None else np.asarray(lat)
    grid = SphereGrid.from_degrees(lat, N, K, R)
    mask = LandMask((rng.random((M, N)) < 0.5).astype(int))
    temporal = TemporalParams(
        rng.uniform(-0.5, 0.6, (M, N)), rng.uniform(-0.3, 0.3, (M, N)), rng.uniform(0.5, 2.0, (M, N))
    )
    if variant == "ind":
        return FittedModel("ind", grid, mask, temporal)

    def matern():
        return MaternSpectrumParams(rng.uniform(0.2, 2.0), rng.uniform(0.3, 2.0), rng.uniform(0.3, 2.0))

    if variant == "ax":
        bands = [BandSpectralParams.axial(matern()) for _ in range(M)]
    else:
        bands = [
            BandSpectralParams(matern(), matern(), TaperParams(int(rng.integers(-1, 2)), rng.uniform(0, 3.0)))
            for _ in range(M)
        ]
    pair = CoherencePair(rng.uniform(0, 0.9), rng.uniform(0, 2))
    if variant == "ev-nst":
        trop = {m: CoherencePair(rng.uniform(0, 0.9), rng.uniform(0, 2)) for m in tropical_bands(lat)}
        prof = LatitudeCoherenceProfile("nonstationary", pair, trop)
    else:
        prof = LatitudeCoherenceProfile("stationary", pair)
    return FittedModel(variant, grid, mask, temporal, bands, prof)


@pytest.fixture
def small_model(rng):
    return random_model(rng, 4, 8)


@pytest.fixture(scope="session")
def quick_config():
    return FitConfig(g_range=(-1, 1), max_fev=1500, start_points=((1.0, 1.0),))
