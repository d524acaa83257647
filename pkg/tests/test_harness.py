import json

import pytest

from fraclab.errors import ContractViolation
from fraclab.harness import (
    SWEEP_WINDOW,
    ExperimentConfig,
    parallel_map,
    run_experiment,
    summarize_sweep,
    sweep_directions,
    worker_count,
)


def small_sweep(**kw):
    base = dict(kind="marstrand", fractal="fourcorner", directions=4, window=(6, 12), seed=3)
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_defaults_and_validation():
    assert ExperimentConfig("marstrand").window == SWEEP_WINDOW
    assert ExperimentConfig("packing").window == SWEEP_WINDOW
    with pytest.raises(ContractViolation, match="unknown experiment kind"):
        ExperimentConfig("histogram")
    with pytest.raises(ContractViolation, match="window"):
        ExperimentConfig("marstrand", window=(10, 30))
    with pytest.raises(ContractViolation, match="window"):
        ExperimentConfig("marstrand", window=(10, 12))
    with pytest.raises(ContractViolation):
        ExperimentConfig("marstrand", directions=0)
    with pytest.raises(ContractViolation):
        ExperimentConfig("dim-point", source="irrational")
    with pytest.raises(ContractViolation, match="unknown config fields"):
        ExperimentConfig.from_dict({"kind": "marstrand", "colour": "red"})


def test_config_load_and_hash(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"kind": "marstrand", "directions": 7}))
    cfg = ExperimentConfig.load(path, seed=5, out=None)
    assert cfg.directions == 7 and cfg.seed == 5
    # the output location does not change what is computed
    assert cfg.config_hash() == ExperimentConfig.load(path, seed=5, out="x/y").config_hash()
    assert cfg.config_hash() != ExperimentConfig.load(path, seed=6).config_hash()
    with pytest.raises(ContractViolation, match="cannot read config"):
        ExperimentConfig.load(tmp_path / "missing.json")


def test_sweep_directions_are_seeded():
    a = sweep_directions(2, 5, 1)
    assert a == sweep_directions(2, 5, 1) and a != sweep_directions(2, 5, 2)


def test_summary_recomputes_from_records():
    rep = run_experiment(small_sweep())
    summary, verdicts = summarize_sweep(rep.records, rep.ground_truth, rep.config["tol"], rep.config["fraction"], True)
    assert summary == {k: rep.summary[k] for k in summary}
    assert verdicts == rep.verdicts
    assert sum(r["exceptional"] for r in rep.records) == 2
    assert rep.provenance["config_hash"] == ExperimentConfig(**{**rep.config, "window": tuple(rep.config["window"])}).config_hash()
    assert set(rep.provenance) == {"seed", "config_hash", "estimators", "constants_version", "fraclab_version"}


def test_rerun_is_byte_identical(tmp_path):
    a = run_experiment(small_sweep(out=str(tmp_path / "a")))
    b = run_experiment(small_sweep(out=str(tmp_path / "b")))
    da, db = a.to_dict(timestamp=False), b.to_dict(timestamp=False)
    assert da["config"].pop("out") != db["config"].pop("out")
    assert json.dumps(da, sort_keys=True) == json.dumps(db, sort_keys=True)
    assert run_experiment(small_sweep()).to_json(timestamp=False) == run_experiment(small_sweep()).to_json(timestamp=False)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    saved = json.loads((tmp_path / "a.json").read_text())
    assert saved["schema"] == 1 and saved["timestamp"]


def test_empty_instance_lists():
    rep = run_experiment(ExperimentConfig("toy-verify", instances=0))
    assert rep.records == [] and rep.records_csv() == ""
    rep = run_experiment(ExperimentConfig("recovery-sweep", instances=0))
    assert rep.summary["instances"] == 0 and rep.summary["pass_fraction"] is None


def test_recovery_csv_columns(tmp_path):
    rep = run_experiment(ExperimentConfig("recovery-sweep", instances=12, out=str(tmp_path / "rec")))
    head = (tmp_path / "rec.csv").read_text().splitlines()[0]
    assert head == "seed,n,r,t,error,bound,pass,uninformative"
    assert rep.passed and [r["n"] for r in rep.records[:3]] == [2, 3, 4]


def test_dim_point_report():
    rep = run_experiment(ExperimentConfig("dim-point", source="rational", point=[1], denominator=3, r_max=512))
    assert rep.passed and rep.summary["liminf"] <= rep.summary["limsup"]
    assert rep.records[0].keys() == {"r", "k_r", "density"}


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("FRACLAB_THREADS", "1")
    assert worker_count() == 1
    monkeypatch.setenv("FRACLAB_THREADS", "many")
    with pytest.raises(ContractViolation):
        worker_count()


def test_parallel_map_keeps_order():
    assert parallel_map(abs, [-3, 2, -1], workers=2) == [3, 2, 1]
    assert parallel_map(abs, [], workers=2) == []
