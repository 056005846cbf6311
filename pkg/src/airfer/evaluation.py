"""Macro-F1 and the Friedman / Nemenyi rank analysis used to compare arms."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

# Studentized range / sqrt(2) for the Nemenyi test, M = 2..10 methods
NEMENYI_Q = {
    0.05: (1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164),
    0.10: (1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920),
}


def confusion_matrix(preds, labels, k: int) -> np.ndarray:
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if preds.shape != labels.shape or preds.ndim != 1 or preds.size == 0:
        raise ValueError("preds and labels must be equal-length, non-empty 1-D sequences")
    for name, arr in (("preds", preds), ("labels", labels)):
        if arr.min() < 0 or arr.max() >= k:
            raise ValueError(f"{name} contain a class outside [0, {k})")
    return np.bincount(labels * k + preds, minlength=k * k).reshape(k, k)


def macro_f1(preds, labels, k: int) -> float:
    """Unweighted mean of per-class F1 over all k classes, with 0/0 taken as 0."""
    cm = confusion_matrix(preds, labels, k)
    tp = np.diag(cm).astype(float)
    pred_pos = cm.sum(axis=0)
    true_pos = cm.sum(axis=1)
    # F1 = 2TP / (predicted + actual); zero whenever TP is zero
    denom = (pred_pos + true_pos).astype(float)
    f1 = np.divide(2.0 * tp, denom, out=np.zeros(k), where=denom > 0)
    return float(f1.mean())


def average_ranks(scores) -> np.ndarray:
    """Mean rank of each method (rows) across columns; 1 = best, ties get mid-ranks."""
    s = np.asarray(scores, dtype=float)
    if s.ndim != 2 or s.shape[0] < 2 or s.shape[1] < 1:
        raise ValueError("scores must be a methods x columns matrix with >= 2 methods")
    if np.isnan(s).any():
        raise ValueError("scores contain NaN")
    ranks = stats.rankdata(-s, axis=0, method="average")
    return ranks.mean(axis=1)


def friedman_statistic(scores) -> float:
    s = np.asarray(scores, dtype=float)
    R = average_ranks(s)
    M, N = s.shape
    stat = 12.0 * N / (M * (M + 1)) * (np.sum(R**2) - M * (M + 1) ** 2 / 4.0)
    return max(0.0, float(stat))


def friedman_critical(M: int, alpha: float = 0.05) -> float:
    return float(stats.chi2.ppf(1.0 - alpha, M - 1))


def nemenyi_cd(M: int, N: int, alpha: float = 0.05) -> float:
    if alpha not in NEMENYI_Q:
        raise ValueError(f"alpha must be one of {sorted(NEMENYI_Q)}")
    if not 2 <= M <= 10:
        raise ValueError(f"Nemenyi table covers 2..10 methods, got {M}")
    if N < 2:
        raise ValueError("need N >= 2 columns")
    q = NEMENYI_Q[alpha][M - 2]
    return q * math.sqrt(M * (M + 1) / (6.0 * N))


@dataclass
class RankSummary:
    methods: list[str]
    avg_ranks: np.ndarray
    cd: float
    friedman_stat: float
    friedman_critical: float
    alpha: float

    @property
    def significant(self) -> bool:
        return self.friedman_stat > self.friedman_critical

    def indistinguishable_pairs(self) -> list[tuple[str, str]]:
        out = []
        for i in range(len(self.methods)):
            for j in range(i + 1, len(self.methods)):
                if abs(self.avg_ranks[i] - self.avg_ranks[j]) <= self.cd:
                    out.append((self.methods[i], self.methods[j]))
        return out

    def groups(self) -> list[list[str]]:
        """Maximal runs of rank-sorted methods whose rank spread is within CD."""
        order = np.argsort(self.avg_ranks, kind="stable")
        r = self.avg_ranks[order]
        runs = []
        for i in range(len(order)):
            j = i
            while j + 1 < len(order) and r[j + 1] - r[i] <= self.cd:
                j += 1
            if j > i and not any(a <= i and j <= b for a, b in runs):
                runs.append((i, j))
        return [[self.methods[order[t]] for t in range(a, b + 1)] for a, b in runs]

    def to_json(self) -> dict:
        return {
            "methods": list(self.methods),
            "avg_ranks": {m: float(r) for m, r in zip(self.methods, self.avg_ranks)},
            "friedman_stat": self.friedman_stat,
            "friedman_critical": self.friedman_critical,
            "significant": self.significant,
            "cd": self.cd,
            "alpha": self.alpha,
            "indistinguishable_pairs": [list(p) for p in self.indistinguishable_pairs()],
            "groups": self.groups(),
        }


def rank_summary(methods, scores, alpha: float = 0.05) -> RankSummary:
    s = np.asarray(scores, dtype=float)
    M, N = s.shape
    return RankSummary(
        methods=list(methods),
        avg_ranks=average_ranks(s),
        cd=nemenyi_cd(M, N, alpha),
        friedman_stat=friedman_statistic(s),
        friedman_critical=friedman_critical(M, alpha),
        alpha=alpha,
    )
