"""Client-side decision payloads: BA, WBA and MV, all mean-centered before sending."""
from __future__ import annotations

import enum
from typing import Iterable

import numpy as np

TIE_ATOL = 1e-9


class FusionMethod(str, enum.Enum):
    BA = "ba"
    WBA = "wba"
    MV = "mv"


class DegenerateBeliefError(ValueError):
    pass


def normalize_beliefs(raw_scores) -> np.ndarray:
    """L1-normalize nonnegative scores along the last axis."""
    r = np.asarray(raw_scores, dtype=float)
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise ValueError("belief scores must be finite and nonnegative")
    total = r.sum(axis=-1, keepdims=True)
    if np.any(total <= 0):
        raise DegenerateBeliefError("belief vector has no positive entry")
    return r / total


def fuse_ba(r) -> np.ndarray:
    return np.array(r, dtype=float, copy=True)


def fuse_wba(r, w) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    w = np.asarray(w, dtype=float)
    if r.shape[-1] != w.shape[-1]:
        raise ValueError(f"weights have {w.shape[-1]} classes, beliefs have {r.shape[-1]}")
    return r * w


def argmax_lowest(v, atol: float = TIE_ATOL) -> np.ndarray | int:
    """Argmax along the last axis; entries within ``atol`` of the max count as
    tied and the lowest index wins."""
    v = np.asarray(v, dtype=float)
    top = v.max(axis=-1, keepdims=True)
    idx = np.argmax(v >= top - atol, axis=-1)
    return int(idx) if idx.ndim == 0 else idx


def fuse_mv(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    k = r.shape[-1]
    if k < 2:
        raise ValueError("majority voting needs k >= 2")
    # exact ties only: beliefs are client-local and not subject to channel rounding
    return np.eye(k)[np.argmax(r, axis=-1)]


def mean_center(f_tilde) -> np.ndarray:
    f = np.asarray(f_tilde, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValueError("cannot center non-finite payload")
    return f - f.mean(axis=-1, keepdims=True)


def class_weights(val_predictions: Iterable[tuple], k: int) -> np.ndarray:
    """Per-class validation accuracy, L1-normalized (uniform if all zero).

    ``val_predictions`` holds ``(belief, true_label)`` pairs.
    """
    pairs = list(val_predictions)
    if not pairs:
        raise ValueError("class_weights needs at least one validation sample")
    beliefs = np.asarray([b for b, _ in pairs], dtype=float)
    labels = np.asarray([y for _, y in pairs], dtype=np.int64)
    return class_weights_from_arrays(beliefs, labels, k)


def class_weights_from_arrays(beliefs: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    if len(labels) == 0:
        raise ValueError("class_weights needs at least one validation sample")
    preds = np.argmax(beliefs, axis=-1)
    counts = np.bincount(labels, minlength=k).astype(float)
    correct = np.bincount(labels[preds == labels], minlength=k).astype(float)
    acc = np.divide(correct, counts, out=np.zeros(k), where=counts > 0)
    total = acc.sum()
    if total == 0:
        return np.full(k, 1.0 / k)
    return acc / total


def decision_payload(method: FusionMethod | str, r, w=None) -> np.ndarray:
    """Mean-centered payload f_i for a belief (or a stack of beliefs)."""
    method = FusionMethod(method)
    if method is FusionMethod.BA:
        f = fuse_ba(r)
    elif method is FusionMethod.WBA:
        if w is None:
            raise ValueError("WBA needs class weights")
        f = fuse_wba(r, w)
        # renormalize so the payload keeps BA's scale against channel noise
        total = f.sum(axis=-1, keepdims=True)
        f = np.divide(f, total, out=np.zeros_like(f), where=total > 0)
    else:
        f = fuse_mv(r)
    return mean_center(f)
