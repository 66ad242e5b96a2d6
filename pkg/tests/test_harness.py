import json

import pytest

from mirlab.errors import ConfigError, SchemaMismatch
from mirlab.features import FEATURE_NAMES
from mirlab.harness import (
    COMPARE_SCHEMA,
    DATASET_SCHEMA,
    EVAL_SCHEMA,
    REPORT_SCHEMA,
    SUMMARY_SCHEMA,
    TRACE_SCHEMA,
    ExperimentConfig,
    cmd_compare,
    cmd_generate,
    cmd_report,
    cmd_train,
    read_csv,
    trace_path,
    write_csv,
)
from mirlab.learning import ConstantSelector

KNAP = "builtin:knapsack2"


def config(tmp_path, sub, **kw):
    kw.setdefault("node_limit", 500)
    kw.setdefault("sep_time_limit", 30.0)
    kw.setdefault("max_rounds", 5)
    return ExperimentConfig(out=tmp_path / sub, **kw)


@pytest.fixture(scope="module")
def knap_family(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("knap")
    cfg = config(tmp, "gen", base=KNAP, family_size=2, neg_std=0.5)
    doc = cmd_generate(cfg)
    return tmp, cfg, doc


def test_csv_round_trip(tmp_path):
    rows = [["a", 1, 0.1, None, True], ["b", -2, 1e-300, "x y", False]]
    write_csv(tmp_path / "t.csv", "demo/1", {"seed": 7}, ["s", "i", "f", "n", "b"], rows)
    t = read_csv(tmp_path / "t.csv", "demo/1")
    assert t.meta == {"seed": "7"}
    assert t.rows[0] == {"s": "a", "i": "1", "f": "0.1", "n": "", "b": "1"}
    assert float(t.rows[1]["f"]) == 1e-300
    with pytest.raises(SchemaMismatch):
        read_csv(tmp_path / "t.csv", "other/1")


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig(split=1.0)
    with pytest.raises(ConfigError):
        ExperimentConfig(workers=0)
    with pytest.raises(ConfigError):
        cmd_generate(ExperimentConfig(out=tmp_path))


def test_generate_single_knapsack_variation(tmp_path):
    cfg = config(tmp_path, "one", base=KNAP, family_size=1)
    doc = cmd_generate(cfg)
    assert len(doc["variations"]) == 1 and doc["failed"] == []
    trace = read_csv(trace_path(cfg.out, 0), TRACE_SCHEMA)
    assert len(trace.rows) >= 1
    assert trace.meta["seed"] == "0"
    data = read_csv(cfg.out / "dataset.csv", DATASET_SCHEMA)
    assert data.header[-len(FEATURE_NAMES):] == list(FEATURE_NAMES)
    separated_rounds = [r for r in trace.rows if r["reason"] != "IntegralPoint"]
    m = 1
    assert len(data.rows) == m * len(separated_rounds)


def test_generate_empty_family(tmp_path):
    cfg = config(tmp_path, "empty", base=KNAP, family_size=0)
    doc = cmd_generate(cfg)
    assert doc["variations"] == [] and doc["kept"] == [] and doc["discarded"] == []
    assert read_csv(cfg.out / "dataset.csv", DATASET_SCHEMA).rows == []


def test_train_knapsack_family(knap_family, tmp_path):
    tmp, gcfg, doc = knap_family
    cfg = config(tmp_path, "model")
    cmd_train(gcfg.out / "dataset.csv", cfg)
    ev = read_csv(cfg.out / "eval.csv", EVAL_SCHEMA)
    assert [r["side"] for r in ev.rows] == ["train", "test"]
    for r in ev.rows:
        for k in ("accuracy", "precision", "recall"):
            if r[k] != "Undefined":
                assert 0.0 <= float(r[k]) <= 1.0
    split = json.loads((cfg.out / "split.json").read_text())
    assert sorted(split["train"] + split["test"]) == ["v0000", "v0001"]
    first = (cfg.out / "model.json").read_bytes()
    cmd_train(gcfg.out / "dataset.csv", cfg)
    assert (cfg.out / "model.json").read_bytes() == first


def test_train_single_variation_is_config_error(tmp_path):
    cfg = config(tmp_path, "one", base=KNAP, family_size=1)
    cmd_generate(cfg)
    with pytest.raises(ConfigError):
        cmd_train(cfg.out / "dataset.csv", config(tmp_path, "m"))


def _strip(rows, drop=("wall_time", "support_superset", "separator")):
    return [tuple(v for k, v in r.items() if k not in drop) for r in rows]


def test_compare_with_constant_selectors(knap_family, tmp_path):
    tmp, gcfg, doc = knap_family
    mcfg = config(tmp_path, "model")
    cmd_train(gcfg.out / "dataset.csv", mcfg)
    manifest = gcfg.out / "manifest.json"

    pos = config(tmp_path, "pos")
    cmd_compare(manifest, mcfg.out / "model.json", pos, selector_factory=lambda _: ConstantSelector(True))
    t = read_csv(pos.out / "compare.csv", COMPARE_SCHEMA)
    full = [r for r in t.rows if r["separator"] == "full"]
    red = [r for r in t.rows if r["separator"] == "reduced"]
    assert full and _strip(full) == _strip(red)

    neg = config(tmp_path, "neg")
    cmd_compare(manifest, mcfg.out / "model.json", neg, selector_factory=lambda _: ConstantSelector(False))
    t = read_csv(neg.out / "compare.csv", COMPARE_SCHEMA)
    red = [r for r in t.rows if r["separator"] == "reduced"]
    assert all(r["round"] == "1" and float(r["gap_closed"]) == 0.0 and r["n_allowed"] == "0" for r in red)
    assert len(red) == len(doc["variations"])


def test_compare_with_trained_model_and_report(knap_family, tmp_path):
    tmp, gcfg, doc = knap_family
    mcfg = config(tmp_path, "model")
    cmd_train(gcfg.out / "dataset.csv", mcfg)
    ccfg = config(tmp_path, "cmp")
    rows = cmd_compare(gcfg.out / "manifest.json", mcfg.out / "model.json", ccfg)
    t = read_csv(ccfg.out / "compare.csv", COMPARE_SCHEMA)
    assert len(t.rows) == len(rows)
    full_r1 = {r["variation"]: float(r["gap_closed"]) for r in t.rows if r["separator"] == "full" and r["round"] == "1"}
    for r in t.rows:
        assert float(r["gap_closed"]) >= 0.0
        if r["separator"] == "reduced" and r["round"] == "1" and r["support_superset"] == "1":
            assert float(r["gap_closed"]) <= full_r1[r["variation"]] + 1e-6
    report, summary = cmd_report(ccfg.out / "compare.csv", ccfg)
    rep = read_csv(ccfg.out / "report.csv", REPORT_SCHEMA)
    summ = read_csv(ccfg.out / "summary.csv", SUMMARY_SCHEMA)
    assert len(rep.rows) == len(report) and len(summ.rows) == len(summary)
    r1 = [r for r in rep.rows if r["round"] == "1"]
    assert sum(int(r["survivors"]) for r in r1 if r["separator"] == "full") == len(doc["variations"])


def test_full_rows_reproducible(tmp_path):
    def full_rows(sub):
        cfg = config(tmp_path, sub, base="builtin:synth0", family_size=2, max_rounds=3)
        cmd_generate(cfg)
        return [_strip(read_csv(trace_path(cfg.out, i), TRACE_SCHEMA).rows, drop=("sep_time",)) for i in range(2)]

    assert full_rows("a") == full_rows("b")


def test_failures_do_not_abort_batch(tmp_path, monkeypatch):
    import mirlab.harness as h

    real = h.run_cutting_loop
    calls = {"n": 0}

    def flaky(inst, cfg, z_int=None):
        calls["n"] += 1
        if calls["n"] == 1:
            raise RuntimeError("boom")
        return real(inst, cfg, z_int=z_int)

    monkeypatch.setattr(h, "run_cutting_loop", flaky)
    cfg = config(tmp_path, "fail", base=KNAP, family_size=2, neg_std=0.5)
    doc = cmd_generate(cfg)
    assert [f["id"] for f in doc["failed"]] == [0]
    assert "boom" in doc["failed"][0]["error"]
    assert doc["variations"][0]["status"] == "failed"
    assert doc["variations"][1]["status"] in ("kept", "discarded")
