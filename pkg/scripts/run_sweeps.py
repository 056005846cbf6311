"""Macro-F1 against projection dimension d and participation probability p at eps = 1.

Writes one plot-ready CSV per axis (axis value, arm, mean, std) and prints the curves.
"""
from __future__ import annotations

import argparse
import csv
import io
from pathlib import Path

from airfer.config import DEFAULT_ARMS, load_config, parse_config
from airfer.experiment import ExperimentResult, atomic_write, resolve_dataset, run_experiment

DEFAULT_VALUES = {"d": [2, 5, 10, 20], "p": [0.25, 0.5, 0.75, 1.0]}


def sweep(cfg, axis, values, epsilon, threads=None, dataset=None) -> ExperimentResult:
    dataset = resolve_dataset(cfg) if dataset is None else dataset
    records = []
    for v in values:
        res = run_experiment(cfg, dataset, threads=threads, overrides={axis: v, "epsilon": epsilon})
        records.extend(res.records)
    return ExperimentResult(records)


def curves(result: ExperimentResult, axis: str) -> dict[str, list[tuple]]:
    out: dict[str, list[tuple]] = {}
    for s in result.summary():
        out.setdefault(s["label"], []).append((s[axis], s["mean"], s["std"]))
    return {k: sorted(v) for k, v in out.items()}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=None)
    ap.add_argument("--axes", default="d,p")
    ap.add_argument("--epsilon", type=float, default=1.0)
    ap.add_argument("--out", default="results/sweeps")
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()

    cfg = load_config(args.config) if args.config else parse_config({})
    dataset = resolve_dataset(cfg)
    for axis in args.axes.split(","):
        values = list(cfg.sweep.get(axis, DEFAULT_VALUES[axis]))
        result = sweep(cfg, axis, values, args.epsilon, args.threads, dataset)
        cv = curves(result, axis)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([axis, "label", "mean", "std"])
        print(f"\nMacro-F1 vs {axis} (eps={args.epsilon})")
        print(f"{'arm':<12}" + "".join(f"{v:>10}" for v in values))
        for arm in DEFAULT_ARMS:
            pts = cv.get(arm.label, [])
            for x, m, s in pts:
                w.writerow([x, arm.label, repr(m), repr(s)])
            print(f"{arm.label:<12}" + "".join(f"{m:>10.4f}" for _, m, _ in pts))
        atomic_write(Path(args.out) / f"sweep_{axis}.csv", buf.getvalue())


if __name__ == "__main__":
    main()
