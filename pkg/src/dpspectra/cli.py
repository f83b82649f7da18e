"""Command-line entry points.

    dpspectra run --setting S1a --scale small --seed 7 --out results.csv
    dpspectra summarize results.csv --out summary.csv
    dpspectra estimate --data X.bin --r 3 --eps 1 --delta 0.1 --sigma2 private --out est.json
    dpspectra probe-sensitivity --p 50 --r 1 --lam 10 --sigma2 1 --n 10000 --trials 200
    dpspectra sample --p 50 --r 3 --lam 10 --sigma2 1 --n 10000 --seed 3 --out X.bin

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from . import harness, mechanisms, sensitivity
from .linalg import EigenSolverError, random_orthonormal
from .model import (
    DISTRIBUTIONS,
    SpikedModel,
    load_data_auto,
    sample,
    save_data_bin,
    save_data_csv,
)

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpspectra",
        description="Differentially private PCA and spiked covariance estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo experiment sweep")
    run.add_argument("--setting", default=None, help=f"one of {sorted(harness.SETTINGS)} or 'custom'")
    run.add_argument("--scale", default="small", choices=["small", "paper"])
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--config", default=None, help="TOML/JSON config file; CLI flags override")
    run.add_argument("--reps", type=int, default=None)
    run.add_argument("--methods", default=None, help="comma-separated method subset")
    run.add_argument("--metrics", default=None, help="comma-separated metric list")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--no-timing", action="store_true", help="write ms=0 for bit-reproducible files")
    run.add_argument("--summary-out", default=None, help="also write the summary CSV here")
    run.add_argument("--out", required=True)

    summ = sub.add_parser("summarize", help="aggregate a results CSV")
    summ.add_argument("results")
    summ.add_argument("--out", required=True)

    est = sub.add_parser("estimate", help="private estimate from a data file")
    est.add_argument("--data", required=True, help="DPSP binary or CSV data matrix")
    est.add_argument("--r", type=int, required=True)
    est.add_argument("--eps", type=float, required=True)
    est.add_argument("--delta", type=float, required=True)
    est.add_argument(
        "--sigma2",
        required=True,
        help="known noise variance as a number, or 'private' for the three-way split",
    )
    est.add_argument(
        "--lam",
        type=float,
        default=None,
        help="signal strength for sensitivity calibration; when omitted a "
        "non-private plug-in estimate is used and recorded as such",
    )
    est.add_argument("--constants", default=None, help="c1,c2,c3 sensitivity constants")
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--out", required=True)

    probe = sub.add_parser("probe-sensitivity", help="empirical vs calibrated sensitivities")
    probe.add_argument("--p", type=int, required=True)
    probe.add_argument("--r", type=int, required=True)
    probe.add_argument("--lam", type=float, required=True)
    probe.add_argument("--sigma2", type=float, required=True)
    probe.add_argument("--n", type=int, required=True)
    probe.add_argument("--trials", type=int, default=200)
    probe.add_argument("--constant", type=float, default=sensitivity.DEFAULT_CONSTANT)
    probe.add_argument("--dist", default="gaussian", choices=DISTRIBUTIONS)
    probe.add_argument("--seed", type=int, default=0)
    probe.add_argument("--out", default=None, help="optional JSON report path")

    gen = sub.add_parser("sample", help="draw a synthetic data matrix to a file")
    gen.add_argument("--p", type=int, required=True)
    gen.add_argument("--r", type=int, required=True)
    gen.add_argument("--lam", type=float, required=True)
    gen.add_argument("--sigma2", type=float, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--dist", default="gaussian", choices=DISTRIBUTIONS)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--csv", action="store_true", help="write CSV instead of DPSP binary")
    gen.add_argument("--out", required=True)

    return parser


def _cmd_run(args) -> int:
    if args.config:
        doc = harness.load_config_file(args.config)
        doc.setdefault("setting", args.setting or "custom")
        config = harness.ExperimentConfig(
            setting=doc["setting"],
            param_name=doc["param_name"],
            grid=tuple(doc["grid"]),
            fixed=dict(doc.get("fixed", {})),
            reps=int(doc.get("reps", 40)),
            seed=int(doc.get("seed", 0)),
            methods=tuple(doc.get("methods", ("ours",))),
            metrics=tuple(doc.get("metrics", ("subspace_fro",))),
        )
    elif args.setting:
        config = harness.preset_config(args.setting, scale=args.scale)
    else:
        raise ValueError("provide --setting or --config")
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.reps is not None:
        overrides["reps"] = args.reps
    if args.methods:
        overrides["methods"] = tuple(args.methods.split(","))
    if args.metrics:
        overrides["metrics"] = tuple(args.metrics.split(","))
    if args.no_timing:
        overrides["record_timing"] = False
    if overrides:
        config = replace(config, **overrides)
    rows = harness.run_experiment(config, workers=args.workers)
    harness.write_rows(rows, args.out)
    if args.summary_out:
        harness.write_summaries(harness.summarize(rows), args.summary_out)
    n_failed = sum(1 for r in rows if np.isnan(r.value))
    print(f"wrote {len(rows)} rows to {args.out}" + (f" ({n_failed} failed)" if n_failed else ""))
    return 0


def _cmd_summarize(args) -> int:
    rows = harness.read_rows(args.results)
    harness.write_summaries(harness.summarize(rows), args.out)
    print(f"wrote summary to {args.out}")
    return 0


def _cmd_estimate(args) -> int:
    x = load_data_auto(args.data)
    private = args.sigma2.strip().lower() == "private"
    sigma2 = None if private else float(args.sigma2)
    constants = (
        tuple(float(c) for c in args.constants.split(","))
        if args.constants
        else (4.0, 4.0, 4.0)
    )
    if len(constants) != 3:
        raise ValueError("--constants expects three comma-separated values")
    lam = args.lam
    lam_source = "user"
    if lam is None:
        # plug-in calibration exactly like the image-data workflow: average
        # the top-r sample eigenvalues and subtract the bulk noise estimate
        from .mp import sigma2_hat

        eigs = np.sort(np.linalg.eigvalsh(x.sample_cov))[::-1]
        bulk = sigma2_hat(eigs, x.p, x.n)
        lam = max(float(eigs[: args.r].mean()) - bulk, bulk * 1e-3)
        lam_source = "plugin_nonprivate"
    budget = mechanisms.PrivacyBudget(
        args.eps, args.delta, split="thirds" if private else "halves"
    )
    est = mechanisms.dp_estimate(
        x, args.r, lam=lam, sigma2=sigma2, budget=budget, rng=args.seed, constants=constants
    )
    doc = est.to_dict()
    doc["lambda_calibration"] = {"value": lam, "source": lam_source}
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=1)
    print(f"wrote estimate to {args.out} (sigma2_used={est.sigma2_used:.6g})")
    return 0


def _cmd_probe(args) -> int:
    rng = np.random.default_rng(args.seed)
    u = random_orthonormal(args.p, args.r, rng)
    model = SpikedModel(u=u, spike_eigs=np.full(args.r, args.lam), sigma2=args.sigma2)
    proj = sensitivity.empirical_projector_sensitivity(
        model, args.n, args.r, args.trials, rng, dist=args.dist
    )
    eig = sensitivity.empirical_eigenvalue_sensitivity(
        model, args.n, args.trials, rng, dist=args.dist
    )
    d1 = sensitivity.delta1(args.lam, args.sigma2, args.p, args.r, args.n, c=args.constant)
    d2 = sensitivity.delta2(args.lam, args.sigma2, args.p, args.r, args.n, c=args.constant)
    report = {
        "projector": {
            "max": proj.max,
            "mean": proj.mean,
            "p99": proj.p99,
            "calibrated": d1,
            "fraction_below": proj.fraction_below(d1),
        },
        "eigenvalues": {
            "max": eig.max,
            "mean": eig.mean,
            "p99": eig.p99,
            "calibrated": d2,
            "fraction_below": eig.fraction_below(d2),
        },
        "constant": args.constant,
        "trials": args.trials,
    }
    for name, block in (("projector", report["projector"]), ("eigenvalues", report["eigenvalues"])):
        print(
            f"{name}: max={block['max']:.6g} mean={block['mean']:.6g} "
            f"p99={block['p99']:.6g} calibrated={block['calibrated']:.6g} "
            f"covered={block['fraction_below']:.1%}"
        )
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=1)
    return 0


def _cmd_sample(args) -> int:
    rng = np.random.default_rng(args.seed)
    u = random_orthonormal(args.p, args.r, rng)
    model = SpikedModel(u=u, spike_eigs=np.full(args.r, args.lam), sigma2=args.sigma2)
    x = sample(model, args.n, dist=args.dist, rng=rng)
    if args.csv:
        save_data_csv(x, args.out)
    else:
        save_data_bin(x, args.out)
    print(f"wrote {args.p} x {args.n} data matrix to {args.out}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "summarize": _cmd_summarize,
    "estimate": _cmd_estimate,
    "probe-sensitivity": _cmd_probe,
    "sample": _cmd_sample,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (EigenSolverError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, FileNotFoundError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
