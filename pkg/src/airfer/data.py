"""Per-client belief sources: a synthetic generator and a score-CSV reader/writer."""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .fusion import normalize_beliefs

VAL_FRACTION = 0.1


class ScoreFormatError(ValueError):
    pass


class IncompleteMatrixError(ScoreFormatError):
    pass


@dataclass(frozen=True)
class Dataset:
    """Precomputed beliefs, ``beliefs[client, sample, class]``."""

    labels: np.ndarray
    beliefs: np.ndarray = field(repr=False)
    val_split: np.ndarray
    sample_ids: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        n, s, k = self.beliefs.shape
        if self.labels.shape != (s,):
            raise ValueError("labels must have one entry per sample")
        if k < 2:
            raise ValueError("need k >= 2")
        if np.any((self.labels < 0) | (self.labels >= k)):
            raise ValueError("labels outside [0, k)")

    @property
    def num_clients(self) -> int:
        return self.beliefs.shape[0]

    @property
    def num_samples(self) -> int:
        return self.beliefs.shape[1]

    @property
    def k(self) -> int:
        return self.beliefs.shape[2]

    @property
    def test_split(self) -> np.ndarray:
        mask = np.ones(self.num_samples, dtype=bool)
        mask[self.val_split] = False
        return np.flatnonzero(mask)

    def first_clients(self, n: int) -> "Dataset":
        if not 1 <= n <= self.num_clients:
            raise ValueError(f"dataset has {self.num_clients} clients, asked for {n}")
        return Dataset(self.labels, self.beliefs[:n], self.val_split, self.sample_ids)


@dataclass(frozen=True)
class SyntheticSpec:
    n: int = 20
    k: int = 10
    num_samples: int = 11111
    client_accuracy: float | Sequence[float] = 0.6
    dirichlet_blend: float = 0.3
    seed: int = 0

    def accuracies(self) -> np.ndarray:
        acc = np.broadcast_to(np.asarray(self.client_accuracy, dtype=float), (self.n,))
        return acc.copy()


def tail_val_split(num_samples: int) -> np.ndarray:
    n_val = int(num_samples * VAL_FRACTION)
    return np.arange(num_samples - n_val, num_samples)


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Each client hits the true label with its accuracy, else a uniform wrong label;
    its belief blends that one-hot target with a flat Dirichlet draw."""
    if spec.k < 2 or spec.num_samples < 10 or spec.n < 1:
        raise ValueError("synthetic spec needs k >= 2, num_samples >= 10, n >= 1")
    acc = spec.accuracies()
    if np.any((acc <= 0) | (acc > 1)):
        raise ValueError("client_accuracy must lie in (0, 1]")
    beta = float(spec.dirichlet_blend)
    if not 0.0 <= beta <= 1.0:
        raise ValueError("dirichlet_blend must lie in [0, 1]")

    rng = np.random.default_rng(spec.seed)
    n, s, k = spec.n, spec.num_samples, spec.k
    labels = rng.integers(0, k, size=s)
    hit = rng.random((n, s)) < acc[:, None]
    wrong = (labels[None, :] + rng.integers(1, k, size=(n, s))) % k
    target = np.where(hit, labels[None, :], wrong)
    flat = rng.dirichlet(np.ones(k), size=(n, s))
    beliefs = (1.0 - beta) * np.eye(k)[target] + beta * flat
    beliefs = normalize_beliefs(beliefs)
    return Dataset(labels, beliefs, tail_val_split(s))


def _fmt(x: float) -> str:
    return repr(float(x))


def save_scores(dataset: Dataset, path: str | os.PathLike) -> None:
    """Write the score CSV: one row per (sample, client), label repeated per row."""
    k = dataset.k
    ids = dataset.sample_ids if dataset.sample_ids is not None else np.arange(dataset.num_samples)
    buf = io.StringIO()
    buf.write(",".join(["sample_id", "client_id", "label"] + [f"s{j}" for j in range(k)]) + "\n")
    for s in range(dataset.num_samples):
        lab = int(dataset.labels[s])
        for c in range(dataset.num_clients):
            row = dataset.beliefs[c, s]
            buf.write(f"{int(ids[s])},{c},{lab}," + ",".join(_fmt(x) for x in row) + "\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")


def load_scores(path: str | os.PathLike, val_split: np.ndarray | None = None) -> Dataset:
    """Read a score CSV into a :class:`Dataset`.

    Samples are ordered by sample_id; the validation split defaults to the
    last 10% of that order.
    """
    text = Path(path).read_text(encoding="utf-8")
    if not text.strip():
        raise ScoreFormatError(f"{path}: empty score file")
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header[:3] != ["sample_id", "client_id", "label"] or len(header) < 5:
        raise ScoreFormatError(f"{path}: line 1: bad header {header[:3]!r}")
    k = len(header) - 3
    if header[3:] != [f"s{j}" for j in range(k)]:
        raise ScoreFormatError(f"{path}: line 1: score columns must be s0..s{k - 1}")

    cells: dict[tuple[int, int], np.ndarray] = {}
    labels: dict[int, int] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != k + 3:
            raise ScoreFormatError(f"{path}: line {lineno}: expected {k + 3} columns, got {len(row)}")
        try:
            sid, cid, lab = int(row[0]), int(row[1]), int(row[2])
            scores = np.array([float(x) for x in row[3:]])
        except ValueError as exc:
            raise ScoreFormatError(f"{path}: line {lineno}: {exc}") from None
        if not 0 <= lab < k:
            raise ScoreFormatError(f"{path}: line {lineno}: label {lab} outside [0, {k})")
        if np.any(scores < 0) or not np.all(np.isfinite(scores)):
            raise ScoreFormatError(f"{path}: line {lineno}: scores must be finite and nonnegative")
        if labels.setdefault(sid, lab) != lab:
            raise ScoreFormatError(f"{path}: line {lineno}: label disagrees for sample {sid}")
        if (sid, cid) in cells:
            raise ScoreFormatError(f"{path}: line {lineno}: duplicate (sample {sid}, client {cid})")
        cells[(sid, cid)] = scores
    if not cells:
        raise ScoreFormatError(f"{path}: no data rows")

    sample_ids = np.array(sorted(labels))
    client_ids = sorted({c for _, c in cells})
    if client_ids != list(range(len(client_ids))):
        raise ScoreFormatError(f"{path}: client ids must be 0..n-1, got {client_ids[:5]}...")
    n = len(client_ids)
    beliefs = np.empty((n, len(sample_ids), k))
    for si, sid in enumerate(sample_ids):
        for c in range(n):
            try:
                beliefs[c, si] = cells[(sid, c)]
            except KeyError:
                raise IncompleteMatrixError(
                    f"{path}: missing score row for (sample {sid}, client {c})"
                ) from None
    beliefs = normalize_beliefs(beliefs)
    if val_split is None:
        val_split = tail_val_split(len(sample_ids))
    lab_arr = np.array([labels[s] for s in sample_ids])
    return Dataset(lab_arr, beliefs, np.asarray(val_split), sample_ids)
