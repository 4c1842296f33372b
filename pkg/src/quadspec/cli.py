"""Command-line entry point: ``quadspec {simulate,estimate,debias,ensemble,diagnose}``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .harness import (
    ExperimentConfig,
    build_kernel,
    load_config,
    parse_estimator,
    run_ensemble,
    write_svg,
    _debiaser,
)
from .quadcore import diagnostics, estimate
from .signal import load_series, save_series, simulate_ar


def _config(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    updates = {}
    if getattr(args, "n", None) is not None:
        updates["n"] = args.n
    if getattr(args, "phi", None) is not None:
        updates["phi"] = tuple(args.phi)
    if getattr(args, "sigma", None) is not None:
        updates["sigma"] = args.sigma
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "ensemble", None) is not None:
        updates["ensemble"] = args.ensemble
    if getattr(args, "estimator", None):
        updates["estimator"] = parse_estimator(args.estimator)
    deb = config.debias
    if getattr(args, "clip_negative", False):
        deb = replace(deb, clip_negative=True)
    if getattr(args, "S", None) is not None:
        deb = replace(deb, S=args.S)
    if getattr(args, "p", None) is not None:
        deb = replace(deb, p=args.p)
    updates["debias"] = deb
    return replace(config, **updates)


def _series(args, config):
    if args.input:
        return load_series(args.input).values
    return simulate_ar(config.model, config.n, config.seed, config.burn_in).values


def cmd_simulate(args):
    config = _config(args)
    x = simulate_ar(config.model, config.n, config.seed, config.burn_in)
    save_series(x, args.out)


def cmd_estimate(args):
    config = _config(args)
    x = _series(args, config)
    est = estimate(build_kernel(config.estimator, x.size), x)
    est.save(args.out)


def cmd_debias(args):
    config = _config(args)
    x = _series(args, config)
    config = replace(config, n=x.size)
    kernel = build_kernel(config.estimator, x.size)
    fit = _debiaser(config, kernel).fit(estimate(kernel, x))
    fit.save(args.out)
    if args.svg:
        write_svg(args.svg, fit.frequencies, {"raw": fit.raw, "debiased": fit.debiased}, title="single sample")


def cmd_ensemble(args):
    config = _config(args)
    out = Path(args.out or config.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    report = run_ensemble(config, workers=args.workers)
    report.write_csv(out / "ensemble.csv")
    report.write_summary(out / "summary.txt")
    if args.svg:
        report.write_svg(out / "ensemble.svg")
    for key, value in report.aggregates.items():
        print(f"{key} = {value:.6f}")
    print(f"runtime: {report.runtime['total_s']:.2f} s", file=sys.stderr)


def cmd_diagnose(args):
    config = _config(args)
    kernel = build_kernel(config.estimator, config.n)
    diag = diagnostics(kernel)
    print(f"n = {config.n}")
    print(f"zeta = {diag.ess:.10g}")
    print(f"M = {diag.variance_factor:.10g}")
    print(f"B_Quad = {diag.bandwidth:.10g}")
    print("eta R(eta)")
    for j in range(args.eta_points):
        eta = 2 * np.pi * j / config.n
        print(f"{eta:.10g} {float(diag.correlation(eta)):.10g}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quadspec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, series=False):
        p.add_argument("--config", help="INI experiment configuration")
        p.add_argument("--seed", type=int)
        p.add_argument("--n", type=int, help="series length")
        p.add_argument("--phi", type=float, nargs="*", help="AR coefficients")
        p.add_argument("--sigma", type=float, help="innovation standard deviation")
        p.add_argument("--estimator", help="family[:key=value,...], e.g. welch:L=256,M=16,taper=hamming")
        if series:
            p.add_argument("--input", help="one-column series file (simulated from the config if absent)")

    p = sub.add_parser("simulate", help="simulate an AR series")
    common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="write (frequency, value) of the raw estimate")
    common(p, series=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("debias", help="fit biased bases and write the debiased spectrum")
    common(p, series=True)
    p.add_argument("--S", type=int, help="number of bases (default: effective sample size)")
    p.add_argument("--p", type=int, help="basis order")
    p.add_argument("--clip-negative", action="store_true")
    p.add_argument("--svg")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_debias)

    p = sub.add_parser("ensemble", help="ensemble bias / RMSE of raw and debiased estimates")
    common(p)
    p.add_argument("--ensemble", type=int)
    p.add_argument("--S", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--clip-negative", action="store_true")
    p.add_argument("--svg", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("diagnose", help="print zeta, M, B_Quad and an R(eta) table")
    common(p)
    p.add_argument("--eta-points", type=int, default=8)
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError, np.linalg.LinAlgError, MemoryError) as exc:
        print(f"quadspec {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
