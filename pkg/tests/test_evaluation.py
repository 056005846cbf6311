from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from sklearn.metrics import f1_score

from airfer.evaluation import (
    average_ranks,
    confusion_matrix,
    friedman_critical,
    friedman_statistic,
    macro_f1,
    nemenyi_cd,
    rank_summary,
)


def test_macro_f1_hand_example():
    assert macro_f1([0, 0, 1, 1], [0, 1, 1, 1], 2) == pytest.approx((2 / 3 + 4 / 5) / 2, abs=1e-9)
    assert macro_f1([0, 0, 1, 1], [0, 1, 1, 1], 2) == pytest.approx(0.733333, abs=1e-6)


def test_macro_f1_perfect_and_absent_class():
    assert macro_f1([0, 1, 2], [0, 1, 2], 3) == 1.0
    # class 2 never appears: contributes 0 under the 0/0 := 0 convention
    assert macro_f1([0, 1, 1, 0], [0, 1, 1, 0], 3) == pytest.approx(2 / 3)


@settings(max_examples=100, deadline=None)
@given(k=st.integers(2, 7), n=st.integers(1, 80), seed=st.integers(0, 10**6))
def test_macro_f1_matches_sklearn(k, n, seed):
    rng = np.random.default_rng(seed)
    p, y = rng.integers(0, k, n), rng.integers(0, k, n)
    want = f1_score(y, p, labels=list(range(k)), average="macro", zero_division=0)
    assert macro_f1(p, y, k) == pytest.approx(want, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(k=st.integers(2, 6), seed=st.integers(0, 10**6))
def test_macro_f1_invariances(k, seed):
    rng = np.random.default_rng(seed)
    p, y = rng.integers(0, k, 50), rng.integers(0, k, 50)
    base = macro_f1(p, y, k)
    order = rng.permutation(50)
    assert macro_f1(p[order], y[order], k) == pytest.approx(base, abs=1e-12)
    relabel = rng.permutation(k)
    assert macro_f1(relabel[p], relabel[y], k) == pytest.approx(base, abs=1e-12)


def test_macro_f1_domain():
    with pytest.raises(ValueError):
        macro_f1([0, 3], [0, 1], 3)
    with pytest.raises(ValueError):
        macro_f1([0], [0, 1], 3)
    with pytest.raises(ValueError):
        macro_f1([], [], 3)


def test_confusion_matrix_layout():
    cm = confusion_matrix([1, 1, 0], [0, 1, 0], 2)
    assert cm.tolist() == [[1, 1], [0, 1]]  # rows = true labels


def test_average_ranks_examples():
    assert average_ranks([[0.9, 0.8, 0.7], [0.1, 0.2, 0.3]]).tolist() == [1.0, 2.0]
    tied = average_ranks(np.full((4, 3), 0.5))
    assert np.allclose(tied, 2.5)
    s = np.random.default_rng(0).random((5, 9))
    assert np.allclose(average_ranks(s), average_ranks(s[:, ::-1]))
    with pytest.raises(ValueError):
        average_ranks([[0.1, math.nan], [0.2, 0.3]])


@settings(max_examples=100, deadline=None)
@given(M=st.integers(2, 9), N=st.integers(1, 12), seed=st.integers(0, 10**6), ties=st.booleans())
def test_rank_sum_invariant(M, N, seed, ties):
    rng = np.random.default_rng(seed)
    s = rng.integers(0, 3, (M, N)).astype(float) if ties else rng.random((M, N))
    R = average_ranks(s)
    assert R.sum() == pytest.approx(M * (M + 1) / 2, abs=1e-9)
    assert np.all((R >= 1) & (R <= M))


def test_friedman():
    assert friedman_statistic(np.full((7, 40), 0.3)) == 0.0
    M, N = 7, 40
    ordered = np.tile(np.arange(M, 0, -1, dtype=float)[:, None], (1, N))
    want = 12 * N / (M * (M + 1)) * (sum(j * j for j in range(1, M + 1)) - M * (M + 1) ** 2 / 4)
    assert friedman_statistic(ordered) == pytest.approx(want)
    assert friedman_critical(7, 0.05) == pytest.approx(12.592, abs=1e-3)
    assert friedman_statistic(ordered) > friedman_critical(7, 0.05)


def test_friedman_matches_scipy():
    s = np.random.default_rng(3).random((5, 12))
    # scipy's statistic has no tie correction to worry about for continuous scores
    assert friedman_statistic(s) == pytest.approx(stats.friedmanchisquare(*s).statistic, rel=1e-12)


def test_nemenyi():
    assert nemenyi_cd(7, 40, 0.05) == pytest.approx(1.42, abs=0.01)
    assert nemenyi_cd(2, 9) == pytest.approx(1.960 * math.sqrt(1 / 9))
    cds = [nemenyi_cd(5, n) for n in (2, 5, 10, 40)]
    assert all(a > b for a, b in zip(cds, cds[1:]))
    with pytest.raises(ValueError):
        nemenyi_cd(11, 5)
    with pytest.raises(ValueError):
        nemenyi_cd(5, 5, alpha=0.01)


def test_rank_summary_groups():
    s = np.vstack([np.full(40, 0.9), np.full(40, 0.1)])
    summ = rank_summary(["good", "bad"], s)
    assert summ.avg_ranks.tolist() == [1.0, 2.0]
    assert summ.cd < 1.0
    assert summ.groups() == []
    assert summ.indistinguishable_pairs() == []
    same = rank_summary(["a", "b", "c"], np.full((3, 6), 0.5))
    assert not same.significant
    assert same.groups() == [["a", "b", "c"]]
    js = same.to_json()
    assert set(js) >= {"avg_ranks", "friedman_stat", "friedman_critical", "cd"}
