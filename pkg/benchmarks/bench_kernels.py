"""Time the compiled kernels against the pure-Python fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--N 48] [--json out.json]

Both backends are called on identical inputs; the script also checks that
their outputs agree before reporting timings.
"""
import argparse
import json
import sys
import timeit

import numpy as np

from evspec.kernels import _pykernels
from evspec.spectral import fourier_basis

try:
    from evspec.kernels import _ckernels
except ImportError:
    _ckernels = None


def cases(N, seed=0):
    rng = np.random.default_rng(seed)
    W, _ = fourier_basis(N)
    q = 58 * 10
    band = (
        (rng.random(N) < 0.4).astype(float),
        rng.uniform(0.2, 2, N),
        rng.uniform(0.2, 2, N),
        W,
        rng.standard_normal((N, q)),
    )
    S, K, R = 12 * N, 60, 10
    p1, p2, s = rng.uniform(-0.5, 0.5, S), rng.uniform(-0.4, 0.4, S), rng.uniform(0.5, 2, S)
    eps = rng.standard_normal((S, K, R))
    H = rng.standard_normal((S, K + 200, R))
    return {
        "band_terms": lambda mod: mod.band_terms(*band),
        "ar2_whiten": lambda mod: mod.ar2_whiten(eps, p1, p2, s),
        "ar2_colorize": lambda mod: mod.ar2_colorize(H, p1, p2, s, 200),
    }


def run(N, repeat):
    if _ckernels is None:
        sys.exit("compiled kernels are not built; run `pip install -e . --no-build-isolation` first")
    rows = []
    for name, call in cases(N).items():
        a, b = call(_ckernels), call(_pykernels)
        if not np.allclose(np.asarray(a, float), np.asarray(b, float), rtol=1e-10):
            sys.exit(f"{name}: backends disagree")
        t_c = min(timeit.repeat(lambda: call(_ckernels), number=1, repeat=repeat))
        t_p = min(timeit.repeat(lambda: call(_pykernels), number=1, repeat=repeat))
        rows.append({"kernel": name, "cython_s": t_c, "python_s": t_p, "speedup": t_p / t_c})
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=48, help="longitudes per band")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)
    rows = run(args.N, args.repeat)
    print(f"{'kernel':<14}{'cython [s]':>12}{'python [s]':>12}{'speedup':>10}")
    for r in rows:
        print(f"{r['kernel']:<14}{r['cython_s']:>12.4f}{r['python_s']:>12.4f}{r['speedup']:>9.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
