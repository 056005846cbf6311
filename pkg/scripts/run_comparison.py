"""Seven-arm comparison (Best Client, BA/WBA/MV over orthogonal and OAC) on the synthetic ensemble.

Prints mean +- std Macro-F1 per arm and epsilon and writes results.csv/summary.json.
"""
from __future__ import annotations

import argparse
import time
from pathlib import Path

from airfer.config import DEFAULT_ARMS, load_config, parse_config
from airfer.experiment import atomic_write, records_csv, run_experiment, summary_json


def format_table(result, epsilons) -> str:
    rows = {}
    for s in result.summary():
        rows.setdefault(s["label"], {})[str(s["epsilon"])] = (s["mean"], s["std"])
    cols = [str(e if e != float("inf") else "inf") for e in epsilons]
    lines = [f"{'arm':<12}" + "".join(f"{'eps=' + c:>18}" for c in cols)]
    for arm in DEFAULT_ARMS:
        cells = rows.get(arm.label, {})
        line = f"{arm.label:<12}"
        for c in cols:
            m, s = cells.get(c, (float("nan"), float("nan")))
            line += f"{m:>11.4f} +-{s:.3f}"
        lines.append(line)
    return "\n".join(lines)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=None, help="experiment config (default: built-in defaults)")
    ap.add_argument("--out", default="results/comparison")
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()

    cfg = load_config(args.config) if args.config else parse_config({})
    t0 = time.perf_counter()
    result = run_experiment(cfg, threads=args.threads)
    elapsed = time.perf_counter() - t0
    out = Path(args.out)
    atomic_write(out / "results.csv", records_csv(result.records))
    atomic_write(out / "summary.json", summary_json(result.summary()))
    print(format_table(result, cfg.epsilon))
    print(f"\n{len(result.records)} runs in {elapsed:.1f}s -> {out}")


if __name__ == "__main__":
    main()
