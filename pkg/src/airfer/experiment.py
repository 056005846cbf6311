"""Seeded experiment grids: arms x epsilon x seed, scored by Macro-F1 on the test split."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import statistics
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import Arm, ExperimentConfig
from .data import Dataset, generate_synthetic, load_scores
from .evaluation import macro_f1
from .fusion import FusionMethod, class_weights_from_arrays
from .pipeline import (
    CHUNK_ROUNDS,
    RoundConfig,
    Scheme,
    Streams,
    observes_participation,
    payloads,
    rr_payloads,
    select_best_client,
    simulate_rounds,
)
from .privacy import PrivacyBudget, amplify_by_sampling
from .projection import ProjectionSpec, sample_projection

RESULT_COLUMNS = ("method", "scheme", "epsilon", "p", "d", "snr_db", "n", "seed", "macro_f1")


@dataclass(frozen=True)
class Record:
    method: str
    scheme: str
    epsilon: float
    p: float
    d: int
    snr_db: float
    n: int
    seed: int
    macro_f1: float

    @property
    def label(self) -> str:
        return Arm(FusionMethod(self.method), Scheme(self.scheme)).label

    def arm_key(self) -> tuple:
        return (self.method, self.scheme, self.epsilon, self.p, self.d, self.snr_db, self.n)


@dataclass
class ExperimentResult:
    records: list[Record]
    grid: dict = field(default_factory=dict)

    def summary(self) -> list[dict]:
        groups: dict[tuple, list[Record]] = {}
        for r in self.records:
            groups.setdefault(r.arm_key(), []).append(r)
        out = []
        for key, recs in groups.items():
            vals = [r.macro_f1 for r in recs]
            std = statistics.stdev(vals) if len(vals) > 1 else 0.0
            r0 = recs[0]
            out.append(
                {
                    "label": r0.label,
                    "method": r0.method,
                    "scheme": r0.scheme,
                    "epsilon": _fmt_num(r0.epsilon),
                    "p": r0.p,
                    "d": r0.d,
                    "snr_db": _fmt_num(r0.snr_db),
                    "n": r0.n,
                    "mean": statistics.fmean(vals),
                    "std": std,
                    "count": len(vals),
                }
            )
        return out

    def mean(self, label: str, epsilon: float, **match) -> float:
        vals = [
            r.macro_f1
            for r in self.records
            if r.label == label
            and r.epsilon == epsilon
            and all(getattr(r, k) == v for k, v in match.items())
        ]
        if not vals:
            raise KeyError(f"no records for {label} at epsilon={epsilon} {match}")
        return statistics.fmean(vals)


def _fmt_num(v) -> str | float:
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def resolve_dataset(cfg: ExperimentConfig) -> Dataset:
    if cfg.dataset.scores is not None:
        return load_scores(cfg.dataset.scores)
    return generate_synthetic(cfg.dataset.synthetic)


def default_threads() -> int:
    env = os.environ.get("AIRFER_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _projection_seed(base: int, seed: int) -> int:
    return int(np.random.SeedSequence([base, seed]).generate_state(1)[0])


@dataclass
class _Prepared:
    labels: np.ndarray  # (T,)
    beliefs: np.ndarray  # (T, n, k)
    weights: np.ndarray  # (n, k)
    best_client: int


def prepare(dataset: Dataset) -> _Prepared:
    val = dataset.val_split
    test = dataset.test_split
    if len(val) == 0:
        raise ValueError("dataset has an empty validation split")
    k = dataset.k
    val_labels = dataset.labels[val]
    weights = np.stack(
        [class_weights_from_arrays(dataset.beliefs[c, val], val_labels, k) for c in range(dataset.num_clients)]
    )
    val_f1 = [
        macro_f1(np.argmax(dataset.beliefs[c, val], axis=-1), val_labels, k) for c in range(dataset.num_clients)
    ]
    return _Prepared(
        labels=dataset.labels[test],
        beliefs=np.ascontiguousarray(dataset.beliefs[:, test].transpose(1, 0, 2)),
        weights=weights,
        best_client=select_best_client(val_f1),
    )


def run_arm(
    prep: _Prepared,
    arm: Arm,
    epsilon: float,
    seed: int,
    cfg: ExperimentConfig,
    *,
    n: int,
    p: float,
    d: int,
    snr_db: float,
) -> np.ndarray:
    """Decisions for every test sample of one (arm, epsilon, seed) cell."""
    T, _, k = prep.beliefs.shape
    beliefs = prep.beliefs[:, :n]
    weights = prep.weights[:n]
    best = prep.best_client
    p_eff = 1.0 if arm.scheme is Scheme.BEST_CLIENT else p
    privacy = None
    if math.isfinite(epsilon):
        budget = PrivacyBudget(epsilon, cfg.privacy.delta, cfg.privacy.sensitivity)
        privacy = amplify_by_sampling(budget, 1.0 if observes_participation(arm.scheme) else p_eff, n)
    proj = ProjectionSpec(cfg.projection.kind, d, k, _projection_seed(cfg.projection.seed, seed))
    rc = RoundConfig(
        n=n,
        p=p_eff,
        k=k,
        d=d,
        method=arm.method,
        scheme=arm.scheme,
        noise_placement=cfg.noise_placement,
        privacy=privacy,
        projection=proj,
        channel=replace(cfg.channel, snr_db=snr_db),
        master_seed=cfg.master_seed,
    )
    P = sample_projection(proj)
    rr = arm.scheme in (Scheme.RR_OAC, Scheme.RR_ORTHOGONAL)
    eps_rr = math.inf if privacy is None else privacy.base_epsilon
    decisions = np.empty(T, dtype=np.int64)
    for block, start in enumerate(range(0, T, CHUNK_ROUNDS)):
        stop = min(T, start + CHUNK_ROUNDS)
        streams = Streams.derived(cfg.master_seed, seed, block)
        B = beliefs[start:stop]
        F = rr_payloads(B, eps_rr, streams.rr) if rr else payloads(B, arm.method, weights)
        trace = simulate_rounds(F, rc, P, streams, best_client=best)
        decisions[start:stop] = trace.decisions
    return decisions


def _axis_values(cfg: ExperimentConfig, dataset: Dataset) -> dict:
    k = dataset.k
    return {
        "n": cfg.n,
        "p": cfg.p,
        "d": cfg.d if cfg.d is not None else k,
        "snr_db": cfg.channel.snr_db,
    }


def run_experiment(
    cfg: ExperimentConfig,
    dataset: Dataset | None = None,
    *,
    threads: int | None = None,
    overrides: dict | None = None,
) -> ExperimentResult:
    """Every arm x epsilon x seed on the dataset's test split.

    ``overrides`` pins any of n, p, d, snr_db, or a single epsilon (used by sweeps).
    """
    dataset = resolve_dataset(cfg) if dataset is None else dataset
    if cfg.k is not None and cfg.k != dataset.k:
        raise ValueError(f"config k={cfg.k} but dataset has {dataset.k} classes")
    axes = _axis_values(cfg, dataset)
    overrides = dict(overrides or {})
    epsilons = (overrides.pop("epsilon"),) if "epsilon" in overrides else cfg.epsilon
    axes.update(overrides)
    n = int(axes["n"])
    if n > dataset.num_clients:
        raise ValueError(f"n={n} exceeds the dataset's {dataset.num_clients} clients")
    prep = prepare(dataset.first_clients(n))

    tasks = [(arm, eps, seed) for arm in cfg.arms for eps in epsilons for seed in cfg.seeds]

    def work(task):
        arm, eps, seed = task
        dec = run_arm(prep, arm, eps, seed, cfg, n=n, p=axes["p"], d=int(axes["d"]), snr_db=axes["snr_db"])
        return Record(
            method=arm.method.value,
            scheme=arm.scheme.value,
            epsilon=float(eps),
            p=float(axes["p"]),
            d=int(axes["d"]),
            snr_db=float(axes["snr_db"]),
            n=n,
            seed=int(seed),
            macro_f1=macro_f1(dec, prep.labels, dataset.k),
        )

    workers = threads or default_threads()
    if workers <= 1:
        records = [work(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(work, tasks))
    return ExperimentResult(records, grid={**axes, "epsilon": list(epsilons), "seeds": list(cfg.seeds)})


# output files


def records_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in records:
        w.writerow(
            [
                r.method,
                r.scheme,
                _fmt_num(r.epsilon),
                repr(r.p),
                r.d,
                _fmt_num(r.snr_db),
                r.n,
                r.seed,
                repr(r.macro_f1),
            ]
        )
    return buf.getvalue()


def read_records(path: str | Path) -> list[Record]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != RESULT_COLUMNS:
            raise ValueError(f"{path}: expected columns {','.join(RESULT_COLUMNS)}")
        return [
            Record(
                method=row["method"],
                scheme=row["scheme"],
                epsilon=float(row["epsilon"]),
                p=float(row["p"]),
                d=int(row["d"]),
                snr_db=float(row["snr_db"]),
                n=int(row["n"]),
                seed=int(row["seed"]),
                macro_f1=float(row["macro_f1"]),
            )
            for row in reader
        ]


def atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def summary_json(summary) -> str:
    return json.dumps({"arms": summary}, indent=2) + "\n"
