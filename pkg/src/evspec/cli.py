"""Command-line interface: ``evspec <command> [options]``.

Exit codes: 0 success, 2 usage, 3 I/O failure, 4 invalid input,
5 numerical failure; tensor files that fail to parse exit with 6 (format),
7 (payload length) or 8 (dimension overflow).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import contrast_variances, contrast_report, difference_field, landocean_periodograms
from .fitting import VARIANTS, FitConfig, FitError, effective_observations, fit_step1_temporal, fit_variants
from .grid import GridError, anomalies, ensemble_mean
from .io import (
    ModelFileError,
    TensorIOError,
    read_mask,
    read_model,
    read_tensor,
    read_tensor_array,
    write_csv,
    write_mask,
    write_model,
    write_tensor,
)
from .simulation import TREND_POLICIES, fit_trend, model_compression_report, simulate_surrogates, trend_for_policy
from .synthetic import SpecError, gen_synthetic
from .temporal import whiten

log = logging.getLogger("evspec")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_VALIDATION = 4
EXIT_NUMERICAL = 5


class UsageError(Exception):
    pass


def _threads(args) -> int:
    env = os.environ.get("EVSP_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"EVSP_THREADS must be an integer, got {env!r}") from None
    return max(1, args.threads)


def _load_config(args) -> FitConfig:
    overrides = {}
    if args.config:
        with open(args.config) as fh:
            overrides = json.load(fh)
        if not isinstance(overrides, dict):
            raise ValueError("config file must hold a JSON object")
    overrides["variant"] = args.variant
    overrides["threads"] = _threads(args)
    return FitConfig.from_dict(overrides)


def cmd_fit(args) -> int:
    field = read_tensor(args.data)
    mask = read_mask(args.mask)
    config = _load_config(args)
    model = fit_variants(field, mask, config, (config.variant,))[config.variant]
    trend = fit_trend(ensemble_mean(field), args.trend_lambda)
    write_model(model, args.out_model, trend)
    rep = model.fit_report
    log.info("timings: %s", {k: round(v, 3) for k, v in rep["timings"].items()})
    print(f"{model.variant}: loglik={rep['loglik']:.6f} bic={rep['bic']:.6f} -> {args.out_model}")
    for w in rep.get("warnings", []):
        log.warning(w)
    return EXIT_OK


def cmd_simulate(args) -> int:
    model, trend = read_model(args.model)
    K = args.time_steps or model.grid.K
    shape = (model.grid.M, model.grid.N, K)
    used = trend_for_policy(trend, args.trend_policy, shape, args.knots)
    sur = simulate_surrogates(model, used, args.runs, args.seed, burn_in=args.burn_in)
    write_tensor(sur.field, args.out)
    print(f"wrote {args.runs} surrogate run(s) of shape {sur.field.grid.shape} to {args.out}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    if not args.data and not args.model:
        raise UsageError("diagnose needs --data and/or --model")
    model = read_model(args.model)[0] if args.model else None
    field = read_tensor(args.data) if args.data else None
    grid = model.grid if model is not None else field.grid
    lat = grid.latitudes_deg
    if args.report == "contrasts":
        if model is not None:
            rep = contrast_report(model, field)
        else:
            temporal = fit_step1_temporal(anomalies(field))
            R = field.grid.R
            rep = contrast_variances(whiten(anomalies(field), temporal) * np.sqrt(R / (R - 1.0)))
        header, rows = rep.table(lat)
        write_csv(args.out_csv, header, rows)
    else:
        if field is None:
            raise UsageError("periodogram report needs --data")
        if args.mask:
            mask = read_mask(args.mask)
        elif model is not None:
            mask = model.mask
        else:
            raise UsageError("periodogram report needs --mask or --model")
        sds = None
        if args.sds:
            _, s = read_tensor_array(args.sds)
            sds = s[..., 0, 0]
        gamma = None if args.taper_spacings is None else 2 * np.pi * args.taper_spacings / grid.N
        per = landocean_periodograms(difference_field(field), mask, sds, gamma)
        write_csv(args.out_csv, ["m", "lat_deg", "c", "land", "ocean"], per.rows(lat))
    print(f"wrote {args.report} report to {args.out_csv}")
    return EXIT_OK


def cmd_compare(args) -> int:
    models = [read_model(p)[0] for p in args.model]
    grids = {(m.grid.M, m.grid.N, m.grid.K, m.grid.R) for m in models}
    if len(grids) != 1:
        raise ValueError("compared models must share one grid")
    grid = models[0].grid
    n_norm = effective_observations(grid)
    base = next((m for m in models if m.variant == "ind"), models[0])
    base_ll = base.fit_report["loglik"]
    rows = []
    for m in models:
        rep = m.fit_report
        rows.append([m.variant, m.parameter_count, rep["loglik"], (rep["loglik"] - base_ll) / n_norm, rep["bic"]])
    header = ["variant", "param_count", "loglik", "dloglik_norm", "bic"]
    if args.out_csv:
        write_csv(args.out_csv, header, rows)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return EXIT_OK


def cmd_gen_synthetic(args) -> int:
    spec = None
    if args.spec:
        with open(args.spec) as fh:
            spec = json.load(fh)
    ds = gen_synthetic(spec, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_tensor(ds.field, out / "data.evsp")
    write_mask(ds.mask, out / "mask.csv")
    write_model(ds.truth, out / "truth.json", ds.trend)
    print(f"wrote data.evsp, mask.csv and truth.json to {out}")
    return EXIT_OK


def cmd_report_compression(args) -> int:
    model, _ = read_model(args.model)
    dims = None
    if args.data_dims:
        try:
            dims = tuple(int(v) for v in args.data_dims.split(","))
        except ValueError:
            raise UsageError(f"--data-dims expects M,N,K,R, got {args.data_dims!r}") from None
        if len(dims) != 4:
            raise UsageError(f"--data-dims expects M,N,K,R, got {args.data_dims!r}")
    rep = model_compression_report(model, dims, args.trend_policy, args.knots)
    print(json.dumps(rep, indent=1))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evspec", description="Evolutionary-spectrum space-time model fitting and surrogates")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit a model variant to an ensemble")
    f.add_argument("--data", required=True, help="ensemble tensor file")
    f.add_argument("--mask", required=True, help="land mask CSV")
    f.add_argument("--variant", choices=VARIANTS, default="ev-nst")
    f.add_argument("--out-model", required=True)
    f.add_argument("--threads", type=int, default=1, help="band-parallel workers (EVSP_THREADS overrides)")
    f.add_argument("--config", help="JSON file of FitConfig overrides")
    f.add_argument("--trend-lambda", type=float, default=0.01, help="smoothing-spline fidelity weight")
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("simulate", help="generate surrogate runs from a model file")
    s.add_argument("--model", required=True)
    s.add_argument("--trend-policy", choices=TREND_POLICIES, default="store-full")
    s.add_argument("--knots", type=int, default=None, help="knot count for store-spline-knots")
    s.add_argument("--runs", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--time-steps", type=int, default=None, help="K for trend policy 'none' (default: model grid)")
    s.add_argument("--burn-in", type=int, default=200)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("diagnose", help="contrast or periodogram diagnostics as CSV")
    d.add_argument("--data")
    d.add_argument("--model")
    d.add_argument("--mask")
    d.add_argument("--sds", help="per-site normalizing SDs as a tensor with K = R = 1")
    d.add_argument("--report", choices=("contrasts", "periodogram"), required=True)
    d.add_argument("--taper-spacings", type=float, default=None)
    d.add_argument("--out-csv", required=True)
    d.set_defaults(func=cmd_diagnose)

    c = sub.add_parser("compare", help="model comparison table as CSV")
    c.add_argument("--model", action="append", required=True)
    c.add_argument("--out-csv")
    c.set_defaults(func=cmd_compare)

    g = sub.add_parser("gen-synthetic", help="simulate a synthetic ensemble with known truth")
    g.add_argument("--spec", help="generator spec JSON (default: desk-scale spec)")
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--out-dir", required=True)
    g.set_defaults(func=cmd_gen_synthetic)

    r = sub.add_parser("report-compression", help="stored-number accounting")
    r.add_argument("--model", required=True)
    r.add_argument("--data-dims", help="M,N,K,R (default: model grid)")
    r.add_argument("--trend-policy", choices=TREND_POLICIES, default="store-full")
    r.add_argument("--knots", type=int, default=None)
    r.set_defaults(func=cmd_report_compression)
    return p


def exit_code_for(exc: BaseException) -> int:
    chain = []
    e = exc
    while e is not None:
        chain.append(e)
        e = e.__cause__ or e.__context__
    if isinstance(exc, UsageError):
        return EXIT_USAGE
    if isinstance(exc, TensorIOError):
        return exc.exit_code
    if any(isinstance(e, (np.linalg.LinAlgError, FloatingPointError, ArithmeticError)) for e in chain):
        return EXIT_NUMERICAL
    if isinstance(exc, (ModelFileError, SpecError, GridError, json.JSONDecodeError)):
        return EXIT_VALIDATION
    if isinstance(exc, OSError):
        return EXIT_IO
    if isinstance(exc, FitError):
        return EXIT_VALIDATION if any(isinstance(e, ValueError) for e in chain[1:]) else EXIT_NUMERICAL
    if isinstance(exc, ValueError):
        return EXIT_VALIDATION
    return EXIT_NUMERICAL


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes
        code = exit_code_for(exc)
        if code == EXIT_USAGE:
            parser.print_usage(sys.stderr)
        print(f"evspec: error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
