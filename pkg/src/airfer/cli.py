"""Command-line front end: ``calibrate``, ``simulate``, ``sweep`` and ``report``.

Exit codes: 0 success, 2 usage or config error, 1 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .evaluation import rank_summary
from .experiment import (
    ExperimentResult,
    atomic_write,
    read_records,
    records_csv,
    resolve_dataset,
    run_experiment,
    summary_json,
)
from .privacy import SQRT2, InfeasibleAmplificationError, PrivacyBudget, amplify_by_sampling

CALIBRATE_COLUMNS = (
    "epsilon_target",
    "delta_target",
    "p",
    "n",
    "base_epsilon",
    "base_delta",
    "sigma_total",
    "sigma_client_at_full_participation",
)


class UsageError(Exception):
    pass


def _float_list(text: str, *, lo=None, hi=None, lo_open=True, name="value"):
    out = []
    for part in text.split(","):
        try:
            v = float(part)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad {name} {part!r}") from None
        if lo is not None and (v < lo or (lo_open and v == lo)):
            raise argparse.ArgumentTypeError(f"{name} must be {'>' if lo_open else '>='} {lo}, got {part}")
        if hi is not None and v > hi:
            raise argparse.ArgumentTypeError(f"{name} must be <= {hi}, got {part}")
        out.append(v)
    return out


def _int_list(text: str):
    try:
        vals = [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None
    if any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("n must be >= 1")
    return vals


def _token(text: str):
    text = text.strip()
    return text if text.lower() == "inf" else float(text)


def cmd_calibrate(args) -> int:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CALIBRATE_COLUMNS)
    for eps in args.eps:
        for p in args.p:
            for n in args.n:
                budget = PrivacyBudget(eps, args.delta, args.sensitivity)
                spec = amplify_by_sampling(budget, p, n)
                w.writerow(
                    [
                        repr(eps),
                        repr(args.delta),
                        repr(p),
                        n,
                        repr(spec.base_epsilon),
                        repr(spec.base_delta),
                        repr(spec.sigma_total),
                        repr(spec.sigma_total / math.sqrt(n)),
                    ]
                )
    sys.stdout.write(buf.getvalue())
    return 0


def _load(args) -> cfgmod.ExperimentConfig:
    cfg = cfgmod.load_config(args.config)
    if args.output_dir:
        cfg = replace(cfg, output_dir=args.output_dir)
    return cfg


def _write_outputs(out: Path, result: ExperimentResult, cfg) -> None:
    atomic_write(out / "results.csv", records_csv(result.records))
    atomic_write(out / "summary.json", summary_json(result.summary()))
    atomic_write(out / "config.json", cfgmod.dumps(cfg))


def cmd_simulate(args) -> int:
    cfg = _load(args)
    result = run_experiment(cfg, threads=args.threads)
    out = Path(cfg.output_dir)
    _write_outputs(out, result, cfg)
    print(f"wrote {len(result.records)} records to {out / 'results.csv'}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    axis = args.axis
    if args.values is not None:
        try:
            values = [
                cfgmod.parse_axis_value(axis, _token(v), f"--values[{i}]")
                for i, v in enumerate(args.values.split(","))
            ]
        except (cfgmod.ConfigSchemaError, ValueError) as exc:
            raise UsageError(str(exc)) from None
    elif axis in cfg.sweep:
        values = list(cfg.sweep[axis])
    else:
        raise UsageError(f"no values for axis {axis!r}: pass --values or set sweep.{axis} in the config")

    dataset = resolve_dataset(cfg)
    records = []
    for v in values:
        res = run_experiment(cfg, dataset, threads=args.threads, overrides={axis: v})
        records.extend(res.records)
    merged = ExperimentResult(records)
    out = Path(cfg.output_dir)
    _write_outputs(out, merged, cfg)

    # plot-ready: one row per (axis value, arm, epsilon)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([axis, "label", "method", "scheme", "epsilon", "mean", "std", "count"])
    for s in merged.summary():
        w.writerow([s[axis], s["label"], s["method"], s["scheme"], s["epsilon"], repr(s["mean"]), repr(s["std"]), s["count"]])
    atomic_write(out / f"sweep_{axis}.csv", buf.getvalue())
    print(f"swept {axis} over {len(values)} values; wrote {out / 'results.csv'}")
    return 0


def build_score_matrix(paths, epsilon=None):
    """Methods x columns Macro-F1 matrix; a column is one (file, seed, setting)."""
    table: dict[str, dict[tuple, float]] = {}
    method_sets = []
    eps_seen = set()
    for fi, path in enumerate(paths):
        try:
            recs = read_records(path)
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from None
        eps_seen.update(r.epsilon for r in recs)
        if epsilon is not None:
            recs = [r for r in recs if r.epsilon == epsilon]
        method_sets.append(frozenset(r.label for r in recs))
        for r in recs:
            col = (fi, r.seed, r.p, r.d, r.snr_db, r.n)
            table.setdefault(r.label, {})[col] = r.macro_f1
    if epsilon is None and len(eps_seen) > 1:
        raise UsageError(f"results mix epsilons {sorted(eps_seen)}; pick one with --epsilon")
    if not method_sets or not method_sets[0]:
        raise UsageError("no records to rank")
    if any(s != method_sets[0] for s in method_sets):
        raise UsageError("result files do not share the same method set")
    methods = sorted(method_sets[0])
    cols = sorted(set().union(*(t.keys() for t in table.values())))
    missing = [(m, c) for m in methods for c in cols if c not in table[m]]
    if missing:
        raise UsageError(f"method {missing[0][0]} has no score for column {missing[0][1]}")
    scores = np.array([[table[m][c] for c in cols] for m in methods])
    return methods, scores


def cmd_report(args) -> int:
    eps = None
    if args.epsilon is not None:
        eps = math.inf if args.epsilon.lower() == "inf" else float(args.epsilon)
    methods, scores = build_score_matrix(args.results, eps)
    if len(methods) < 2:
        raise UsageError("ranking needs at least two methods")
    if scores.shape[1] < 2:
        raise UsageError("ranking needs at least two columns (files x seeds)")
    summary = rank_summary(methods, scores, alpha=args.alpha)
    text = json.dumps(summary.to_json(), indent=2) + "\n"
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)

    order = np.argsort(summary.avg_ranks, kind="stable")
    lines = [f"CD = {summary.cd:.4f} (M={len(methods)}, N={scores.shape[1]}, alpha={args.alpha})"]
    verdict = "significant" if summary.significant else "no significant difference"
    lines.append(f"Friedman = {summary.friedman_stat:.4f} vs critical {summary.friedman_critical:.4f}: {verdict}")
    for i in order:
        lines.append(f"  {summary.avg_ranks[i]:6.3f}  {methods[i]}")
    for g in summary.groups():
        lines.append("  group: " + " | ".join(g))
    print("\n".join(lines), file=sys.stderr if not args.out else sys.stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="airfer", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)

    c = sub.add_parser("calibrate", help="print the DP noise calibration table")
    c.add_argument("--eps", type=lambda s: _float_list(s, lo=0.0, name="eps"), required=True)
    c.add_argument("--delta", type=float, default=1e-5)
    c.add_argument("--p", type=lambda s: _float_list(s, lo=0.0, hi=1.0, name="p"), default=[1.0])
    c.add_argument("--n", type=_int_list, default=[20])
    c.add_argument("--sensitivity", type=float, default=SQRT2)
    c.set_defaults(func=cmd_calibrate)

    for name, func, helptext in (
        ("simulate", cmd_simulate, "run the experiment grid of a config"),
        ("sweep", cmd_sweep, "run the grid once per value of one axis"),
    ):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", required=True)
        s.add_argument("--output-dir", default=None)
        s.add_argument("--threads", type=int, default=None, help="worker threads (default: $AIRFER_THREADS or CPU count)")
        if name == "sweep":
            s.add_argument("--axis", required=True, choices=cfgmod.SWEEP_AXES)
            s.add_argument("--values", default=None, help="comma-separated axis values")
        s.set_defaults(func=func)

    r = sub.add_parser("report", help="average ranks, Friedman test and Nemenyi CD")
    r.add_argument("--results", nargs="+", required=True, help="results.csv files, one per dataset")
    r.add_argument("--epsilon", default=None)
    r.add_argument("--alpha", type=float, default=0.05, choices=(0.05, 0.10))
    r.add_argument("--out", default=None, help="write ranks JSON here instead of stdout")
    r.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "delta", None) is not None and args.verb == "calibrate" and not 0 < args.delta < 1:
        parser.error("--delta must be in (0, 1)")
    try:
        return args.func(args)
    except (cfgmod.ConfigSchemaError, UsageError) as exc:
        print(f"airfer {args.verb}: error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"airfer {args.verb}: error: {exc}", file=sys.stderr)
        return 2 if args.verb in ("simulate", "sweep") else 1
    except (InfeasibleAmplificationError, Exception) as exc:  # noqa: BLE001
        print(f"airfer {args.verb}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
