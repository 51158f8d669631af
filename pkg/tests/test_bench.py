import json

import pytest

import binclust.bench as bench
from binclust.bench import BenchConfig, run_bench, run_replicate


def test_config_key_ignores_replicate_count_and_changes_with_settings():
    a = BenchConfig(n=100)
    assert a.key() == BenchConfig(n=100).key()
    assert a.key() != BenchConfig(n=101).key()
    with pytest.raises(ValueError):
        BenchConfig(mode="other")


def test_known_k_records_scores():
    rec = run_replicate(BenchConfig(n=150, J=8, mode="known-k", restarts=2), 0)
    assert rec["error"] is None and rec["k_hat"] == 3
    assert 0 <= rec["sen"] <= 1 and 0 <= rec["spe"] <= 1


def test_k_only_has_no_variable_scores():
    rec = run_replicate(BenchConfig(design="kasahara", n=150, mode="k-only", kmax=3, restarts=2), 0)
    assert rec["error"] is None and "sen" not in rec


def test_failures_are_recorded(monkeypatch):
    def boom(*args, **kwargs):
        raise RuntimeError("boom")

    monkeypatch.setattr(bench, "select_full", boom)
    report = run_bench(BenchConfig(n=60, J=6, restarts=1, kmax=2), 2)
    assert [r["error"] for r in report.records] == ["RuntimeError: boom"] * 2
    assert report.summary()["failed"] == 2


def test_resume_from_partial_cache(tmp_path):
    cfg = BenchConfig(n=80, J=6, restarts=1, kmax=2, seed=3)
    full = run_bench(cfg, 3, cache_dir=tmp_path)
    victim = tmp_path / cfg.key() / "rep_00001.json"
    victim.unlink()
    resumed = run_bench(cfg, 3, cache_dir=tmp_path)
    assert resumed.to_json() == full.to_json()
    assert victim.exists()


def test_parallel_bench_identical():
    cfg = BenchConfig(n=80, J=6, restarts=1, kmax=2, seed=5)
    assert run_bench(cfg, 3, jobs=1).to_json() == run_bench(cfg, 3, jobs=2).to_json()


def test_report_text():
    report = run_bench(BenchConfig(n=80, J=6, restarts=1, kmax=2), 1)
    text = report.format()
    assert "Tr." in text and "mean sen" in text
    json.loads(report.to_json())
