from __future__ import annotations

import json
import math

import numpy as np
import pytest

from airfer.config import parse_config
from airfer.evaluation import macro_f1
from airfer.experiment import (
    RESULT_COLUMNS,
    ExperimentResult,
    prepare,
    read_records,
    records_csv,
    resolve_dataset,
    run_experiment,
    summary_json,
)

SMALL = {
    "n": 6,
    "seeds": [0, 1, 2],
    "epsilon": ["inf", 1],
    "dataset": {"synthetic": {"n": 6, "k": 4, "num_samples": 600, "seed": 1}},
}


@pytest.fixture(scope="module")
def small_result():
    return run_experiment(parse_config(SMALL), threads=1)


def test_record_count_and_range(small_result):
    cfg = parse_config(SMALL)
    assert len(small_result.records) == len(cfg.arms) * 2 * 3
    assert all(0.0 <= r.macro_f1 <= 1.0 for r in small_result.records)
    for s in small_result.summary():
        assert s["count"] == 3


def test_five_seeds_five_records():
    cfg = parse_config({**SMALL, "seeds": [0, 1, 2, 3, 4], "epsilon": [1], "arms": [{"method": "ba", "scheme": "oac"}]})
    res = run_experiment(cfg, threads=2)
    assert len(res.records) == 5 and [r.seed for r in res.records] == [0, 1, 2, 3, 4]


def test_threads_do_not_change_bytes(small_result):
    again = run_experiment(parse_config(SMALL), threads=4)
    assert records_csv(again.records) == records_csv(small_result.records)
    assert summary_json(again.summary()) == summary_json(small_result.summary())


def test_noiseless_ba_equals_direct_oracle():
    raw = {
        **SMALL,
        "epsilon": ["inf"],
        "arms": [{"method": "ba", "scheme": "oac"}, {"method": "ba", "scheme": "orthogonal"}],
        "projection": {"kind": "identity"},
        "channel": {"snr_db": "inf"},
    }
    cfg = parse_config(raw)
    res = run_experiment(cfg, threads=1)
    ds = resolve_dataset(cfg)
    prep = prepare(ds)
    direct = np.argmax(prep.beliefs.mean(axis=1), axis=1)
    want = macro_f1(direct, prep.labels, ds.k)
    assert all(r.macro_f1 == want for r in res.records)
    # nothing random is left, so the spread over seeds is zero
    assert all(s["std"] == 0.0 for s in res.summary())


def test_overrides_pin_axes():
    cfg = parse_config({**SMALL, "arms": [{"method": "mv", "scheme": "oac"}]})
    res = run_experiment(cfg, threads=1, overrides={"d": 2, "p": 0.5, "epsilon": 1.0})
    assert {(r.d, r.p, r.epsilon) for r in res.records} == {(2, 0.5, 1.0)}


def test_too_many_clients():
    cfg = parse_config({**SMALL, "n": 7})
    with pytest.raises(ValueError):
        run_experiment(cfg, threads=1)


def test_csv_round_trip(tmp_path, small_result):
    text = records_csv(small_result.records)
    assert text.splitlines()[0] == ",".join(RESULT_COLUMNS)
    assert ",inf," in text
    p = tmp_path / "r.csv"
    p.write_text(text)
    assert read_records(p) == small_result.records


def test_summary_json(small_result):
    js = json.loads(summary_json(small_result.summary()))
    arm = js["arms"][0]
    assert {"mean", "std", "count", "label", "epsilon"} <= set(arm)
    assert any(a["epsilon"] == "inf" for a in js["arms"])


def test_mean_lookup(small_result):
    m = small_result.mean("MV-OAC", math.inf)
    vals = [r.macro_f1 for r in small_result.records if r.label == "MV-OAC" and r.epsilon == math.inf]
    assert m == pytest.approx(np.mean(vals))
    with pytest.raises(KeyError):
        ExperimentResult([]).mean("MV-OAC", 1.0)


def test_private_arms_degrade_faster_in_p():
    # share of the p=1 above-chance Macro-F1 kept at lower p; chance is about 1/k
    arms = [{"method": "ba", "scheme": "oac"}, {"method": "mv", "scheme": "oac"}]
    cfg = parse_config({"arms": arms, "epsilon": ["inf", 1], "seeds": [0, 1]})
    ds = resolve_dataset(cfg)
    f1 = {p: run_experiment(cfg, ds, overrides={"p": p}) for p in (0.25, 0.5, 1.0)}
    chance = 1 / ds.k
    for label in ("BA-OAC", "MV-OAC"):
        for p in (0.25, 0.5):
            kept = {
                eps: (f1[p].mean(label, eps) - chance) / (f1[1.0].mean(label, eps) - chance)
                for eps in (math.inf, 1.0)
            }
            assert kept[1.0] < kept[math.inf]
