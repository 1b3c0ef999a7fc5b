import dataclasses
import json
import random
import warnings

import numpy as np
import pytest

from crossdex.config import ConfigError, ExperimentConfig, IndexRef, config_from_dict, load_config
from crossdex.harness import (
    PairingError, ResultMatrix, RunKey, SessionRecord, compare_cross_vs_ablation, derive_seed,
    paired_mape, rolling_forecasts, run_experiment, training_set,
)
from crossdex.models import ForecasterSpec, build
from crossdex.report import EmptyReportError, accuracy_table, cross_table, full_report, wilcoxon_table
from crossdex.series import IndexSeries
from crossdex.stats import wilcoxon_signed_rank
from crossdex.storage import IntegrityWarning, SchemaVersionError, load_results, persist_results
from crossdex.synth import correlated_gbm, gbm
from crossdex.windowing import WindowConfig, plan_sessions

from oracles import signed_rank_enumeration


def _cfg(symbols, kinds=("AR",), **kw):
    models = tuple(ForecasterSpec(k, epochs=kw.pop("epochs", 2), hidden=kw.pop("hidden", None)) for k in kinds)
    return ExperimentConfig(tuple(IndexRef(s, f"{s}.csv") for s in symbols), models, **kw)


@pytest.fixture(scope="module")
def pair():
    a, b = correlated_gbm(600, rho=0.9, seed=5, names=("AAA", "BBB"))
    return {"AAA": a, "BBB": b}


@pytest.fixture(scope="module")
def matrix(pair):
    return run_experiment(_cfg(["AAA", "BBB"], ("AR", "MLP_LINEAR")), pair)


def test_matrix_shape(matrix):
    # 600 days -> 5 sessions -> 4 pairs; 2 models x 2 train x 2 test x 4 sessions
    assert len(matrix.records) == 32
    assert matrix.models == ["AR", "MLP_LINEAR"] and matrix.indexes == ["AAA", "BBB"]
    assert set(matrix.cells) == {(m, t, s) for m in matrix.models for t in ("AAA", "BBB") for s in ("AAA", "BBB")}
    for summary in matrix.cells.values():
        assert summary.n_sessions == 4
    assert matrix.meta["session_pairs"] == {"AAA": 4, "BBB": 4}


def test_run_keys_are_ordered():
    assert RunKey("AR", "A", "B", 2) < RunKey("AR", "A", "B", 10) < RunKey("AR", "B", "A", 0)


def test_diagonal_equals_standalone_ablation(pair, matrix):
    solo = run_experiment(_cfg(["AAA"], ("AR", "MLP_LINEAR")), {"AAA": pair["AAA"]})
    for m in ("AR", "MLP_LINEAR"):
        assert solo.cell_records(m, "AAA", "AAA") == matrix.cell_records(m, "AAA", "AAA")


def test_same_series_under_two_symbols_is_bitwise_identical():
    s = gbm(480, seed=9)
    twins = {"X": dataclasses.replace(s, name="X"), "Y": dataclasses.replace(s, name="Y")}
    m = run_experiment(_cfg(["X", "Y"], ("AR", "MLP_TANH")), twins)
    for model in m.models:
        base = [(r.mape, r.rmse) for r in m.cell_records(model, "X", "X")]
        for train, test in (("X", "Y"), ("Y", "X"), ("Y", "Y")):
            assert [(r.mape, r.rmse) for r in m.cell_records(model, train, test)] == base


def test_train_once_is_independent_of_other_test_indexes(pair, matrix):
    third = gbm(600, seed=77, name="CCC")
    m3 = run_experiment(_cfg(["AAA", "BBB", "CCC"], ("AR", "MLP_LINEAR")), {**pair, "CCC": third})
    for model in ("AR", "MLP_LINEAR"):
        assert m3.cell_records(model, "AAA", "BBB") == matrix.cell_records(model, "AAA", "BBB")


def test_determinism_across_thread_counts(pair):
    cfg = _cfg(["AAA", "BBB"], ("AR", "MLP_RELU"))
    assert run_experiment(cfg, pair, threads=1) == run_experiment(cfg, pair, threads=2)


def test_seed_derivation():
    assert derive_seed(0, "AR", 3) == derive_seed(0, "AR", 3)
    assert len({derive_seed(0, "AR", k) for k in range(50)}) == 50
    assert derive_seed(0, "AR", 1) != derive_seed(0, "GMDH", 1) != derive_seed(1, "GMDH", 1)


def test_training_uses_only_the_training_session():
    values = gbm(360, seed=1).closes.copy()
    plan = plan_sessions(360)
    a = training_set(values, plan, 0)
    values[89:] = 1.0  # everything from day 90 on, including the whole test session
    b = training_set(values, plan, 0)
    assert np.array_equal(a.inputs, b.inputs) and np.array_equal(a.labels, b.labels)


def test_recursive_rolling_feeds_own_forecasts():
    values = gbm(360, seed=2).closes
    plan = plan_sessions(360, WindowConfig(rolling="recursive"))
    model = build("AR").fit(training_set(values, plan, 0))
    X, P, Y = rolling_forecasts(model, values, plan, 0)
    te = plan.test_sessions[0]
    # window r starts r days after the bridge: its last r entries are forecasts
    assert np.array_equal(X[0], values[90:120])
    assert X[3][-3:].tolist() == [P[0][0], P[1][0], P[2][0]]
    assert P.shape == Y.shape == (len(te.window_starts), 30)


def test_pairing_is_by_session_id(matrix):
    shuffled = list(matrix.records)
    random.Random(0).shuffle(shuffled)
    again = ResultMatrix(shuffled, matrix.traces, matrix.meta)
    for c1, c2 in zip(compare_cross_vs_ablation(matrix), compare_cross_vs_ablation(again)):
        assert c1.result == c2.result
    x, y, dropped = paired_mape(matrix, "AR", "AAA", "BBB")
    expect_x = [r.mape for r in matrix.cell_records("AR", "BBB", "BBB")]
    expect_y = [r.mape for r in matrix.cell_records("AR", "AAA", "BBB")]
    assert x.tolist() == expect_x and y.tolist() == expect_y and dropped == 0


def _constructed(self_mape, cross_mape, test="T", train="S", model="AR"):
    recs = []
    for k, (a, b) in enumerate(zip(self_mape, cross_mape)):
        recs.append(SessionRecord(RunKey(model, test, test, k), "ok", a, 1.0, 30))
        recs.append(SessionRecord(RunKey(model, train, test, k), "ok", b, 1.0, 30))
        recs.append(SessionRecord(RunKey(model, train, train, k), "ok", a, 1.0, 30))
    return ResultMatrix(recs)


def test_identical_distributions_are_degenerate():
    vals = list(np.linspace(0.02, 0.08, 34))
    (c,) = compare_cross_vs_ablation(_constructed(vals, vals), train_index="S")
    assert c.result.degenerate and c.result.p_two_sided == 1.0


def test_constructed_gap_against_oracle():
    rng = np.random.default_rng(0)
    self_m = rng.uniform(0.03, 0.06, size=12)
    cross_m = self_m + 0.05 + rng.uniform(-0.004, 0.004, size=12)
    m = _constructed(self_m, cross_m)
    # self - cross is around -0.05; "less" is the direction where cross is worse
    (c0,) = compare_cross_vs_ablation(m, mu=0.0, train_index="S")
    pg, pl, p2, _ = signed_rank_enumeration(list(self_m - cross_m - 0.0))
    assert abs(c0.result.p_less - pl) < 1e-12 and c0.result.p_less < 0.05
    (c6p,) = compare_cross_vs_ablation(m, mu=0.06, train_index="S")
    assert c6p.result.p_greater > 0.5
    # shifting by mu = -0.06 makes the gap point the other way
    (c6,) = compare_cross_vs_ablation(m, mu=-0.06, train_index="S")
    pg6, _, _, _ = signed_rank_enumeration(list(self_m - cross_m + 0.06))
    assert abs(c6.result.p_greater - pg6) < 1e-12
    assert c6.result.p_less > 0.5


def test_failed_sessions_drop_pairwise():
    recs = []
    for k in range(6):
        recs.append(SessionRecord(RunKey("RBF", "T", "T", k), "ok", 0.05 + k / 100, 1.0, 30))
        if k == 2:
            recs.append(SessionRecord(RunKey("RBF", "S", "T", k), "failed", error="diverged", epoch=3))
        else:
            recs.append(SessionRecord(RunKey("RBF", "S", "T", k), "ok", 0.06 + k / 90, 1.0, 30))
    x, y, dropped = paired_mape(ResultMatrix(recs), "RBF", "S", "T")
    assert dropped == 1 and x.size == y.size == 5


def test_session_count_mismatch_raises():
    recs = [SessionRecord(RunKey("AR", "T", "T", k), "ok", 0.1, 1.0, 30) for k in range(4)]
    recs += [SessionRecord(RunKey("AR", "S", "T", k), "ok", 0.1, 1.0, 30) for k in range(3)]
    with pytest.raises(PairingError):
        paired_mape(ResultMatrix(recs), "AR", "S", "T")


def test_divergent_run_is_recorded_not_raised():
    huge = IndexSeries("H", gbm(360, seed=0).dates, np.full(360, 1e200) * np.linspace(1, 2, 360))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        m = run_experiment(_cfg(["H"], ("MLP_LINEAR",)), {"H": huge})
    assert m.failures and all(r.epoch == 1 for r in m.failures)


# -- persistence -------------------------------------------------------------------

def test_round_trip(tmp_path, matrix):
    persist_results(matrix, tmp_path)
    back = load_results(tmp_path)
    assert back == matrix
    assert back.meta["config_hash"] == matrix.meta["config_hash"]


def test_failure_markers_round_trip(tmp_path):
    recs = [SessionRecord(RunKey("RBF", "A", "A", 0), "ok", 0.1, 2.0, 30),
            SessionRecord(RunKey("RBF", "A", "A", 1), "failed", error="non-finite loss nan at epoch 7", epoch=7)]
    persist_results(ResultMatrix(recs), tmp_path)
    back = load_results(tmp_path)
    assert back.records == recs and back.failures[0].epoch == 7


def test_tampered_hash_warns(tmp_path, matrix):
    path = persist_results(matrix, tmp_path)
    doc = json.loads(path.read_text())
    doc["meta"]["config"]["seed"] = 999
    path.write_text(json.dumps(doc))
    with pytest.warns(IntegrityWarning):
        load_results(tmp_path)


def test_version_mismatch(tmp_path, matrix):
    path = persist_results(matrix, tmp_path)
    doc = json.loads(path.read_text())
    doc["schema_version"] = 0
    path.write_text(json.dumps(doc))
    with pytest.raises(SchemaVersionError, match="migrate"):
        load_results(tmp_path)


def test_rerun_artifacts_byte_identical(tmp_path, pair):
    cfg = _cfg(["AAA", "BBB"], ("AR",))
    for name, threads in (("one", 1), ("two", 2)):
        persist_results(run_experiment(cfg, pair, threads=threads), tmp_path / name,
                        provenance={"run": name})
    for f in ("results.json", "metrics.csv", "traces.csv"):
        assert (tmp_path / "one" / f).read_bytes() == (tmp_path / "two" / f).read_bytes()


def test_trace_covers_test_session_once(matrix):
    days = [t.day for t in matrix.traces if t.key == RunKey("AR", "AAA", "BBB", 0)]
    assert days == list(range(120, 240))


# -- reports ----------------------------------------------------------------------

def test_report_tables(matrix):
    md = accuracy_table(matrix, "AAA")
    assert md.splitlines()[2] == "| Model | MAPE | RMSE |"
    assert "±" in md
    csv_text = cross_table(matrix, "AR", "mape", "csv")
    assert csv_text.splitlines()[0] == "Index,AAA,BBB"
    files = full_report(matrix, "csv")
    assert {"accuracy_AAA.csv", "cross_mape_AR.csv", "cross_rmse_MLP_LINEAR.csv", "plot_AR.csv"} <= set(files)
    out = wilcoxon_table(compare_cross_vs_ablation(matrix, train_index="AAA"))
    header, *rows = out.splitlines()
    assert header == "model,index,greater,less,two_side"
    assert all(len(r.split(",")[2].split(".")[1]) == 5 for r in rows)


def test_empty_report():
    with pytest.raises(EmptyReportError):
        full_report(ResultMatrix([]))


# -- config -----------------------------------------------------------------------

CONFIG = """
[data]
indexes = [{symbol = "AAA", path = "a.csv"}, {symbol = "BBB", path = "b.csv"}]

[window]
session_len = 120

[models]
kinds = ["AR", "LSTM_VEC"]
epochs = 50
[models.overrides.LSTM_VEC]
epochs = 5
hidden = 8

[experiment]
seed = 3
mu_shifts = [0.0, 0.02]
threads = 2
"""


def test_load_config(tmp_path):
    p = tmp_path / "exp.toml"
    p.write_text(CONFIG)
    cfg = load_config(p)
    assert cfg.symbols == ("AAA", "BBB")
    assert [(m.kind, m.epochs, m.hidden) for m in cfg.models] == [("AR", 50, None), ("LSTM_VEC", 5, 8)]
    assert cfg.seed == 3 and cfg.threads == 2
    assert cfg.resolve(cfg.indexes[0]) == tmp_path / "a.csv"
    assert cfg.config_hash() == load_config(p).config_hash()


@pytest.mark.parametrize("doc, where", [
    ({"data": {"indexes": []}, "models": {"kinds": ["AR"]}}, "data.indexes"),
    ({"data": {"indexes": [{"symbol": "A", "path": "a"}]}, "models": {"kinds": ["XX"]}}, r"models.kinds\[0\]"),
    ({"data": {"indexes": [{"symbol": "A", "path": "a"}]}, "models": {"kinds": ["AR"], "depth": 2}}, "models"),
    ({"data": {"indexes": [{"symbol": "A", "path": "a"}]}, "models": {"kinds": ["AR"]},
      "window": {"stride": 0}}, "window"),
    ({"data": {"indexes": [{"symbol": "A"}]}, "models": {"kinds": ["AR"]}}, r"data.indexes\[0\]"),
    ({"data": {"indexes": [{"symbol": "A", "path": "a"}]}, "models": {"kinds": ["AR"], "overrides": {"RBF": {}}}},
     "models.overrides"),
])
def test_config_errors_name_field(doc, where):
    with pytest.raises(ConfigError, match=where):
        config_from_dict(doc)


def test_missing_series_is_config_error(tmp_path):
    cfg = dataclasses.replace(_cfg(["NOPE"]), base_dir=str(tmp_path))
    with pytest.raises(ConfigError, match="NOPE.csv"):
        run_experiment(cfg)


def test_thread_cap_env(monkeypatch):
    cfg = _cfg(["A"], threads=4)
    monkeypatch.setenv("CROSSDEX_THREADS", "2")
    assert cfg.effective_threads() == 2
    monkeypatch.setenv("CROSSDEX_THREADS", "x")
    with pytest.raises(ConfigError):
        cfg.effective_threads()


def test_wilcoxon_used_by_harness_is_the_stats_one(matrix):
    (c,) = [c for c in compare_cross_vs_ablation(matrix, train_index="AAA") if c.model == "AR"]
    x, y, _ = paired_mape(matrix, "AR", "AAA", "BBB")
    assert c.result == wilcoxon_signed_rank(x, y)
