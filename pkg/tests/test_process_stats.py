import json

import pytest

from dgc.optimizer import RunStats
from dgc.process_stats import RunStatistics


def test_summary_per_method():
    recorder = RunStatistics()
    recorder.record_run("nn", 0.5)
    recorder.record_run("nn", 1.5)
    recorder.record_run("nn", 1.0, success=False)
    summary = recorder.get_summary()["methods"]["nn"]
    assert summary["total"] == 3
    assert summary["failed"] == 1
    assert summary["success_rate"] == pytest.approx(66.67)
    assert summary["avg_time"] == pytest.approx(1.0)
    assert (summary["fastest_time"], summary["slowest_time"]) == (0.5, 1.5)


def test_realizations():
    recorder = RunStatistics()
    recorder.record_realizations("dgc", [
        RunStats(mc_steps=100, accepted_updates=10, residual_u=0.01, wall_time=0.2, retries=1),
        RunStats(mc_steps=300, accepted_updates=20, residual_u=0.03, wall_time=0.4),
        RunStats(mc_steps=200, accepted_updates=5, residual_u=0.02, wall_time=0.1, converged=False),
    ])
    summary = recorder.get_summary()["methods"]["dgc"]
    assert (summary["successful"], summary["failed"]) == (2, 1)
    assert summary["mean_mc_steps"] == pytest.approx(200.0)
    assert summary["total_retries"] == 1
    assert summary["max_residual"] == pytest.approx(0.03)


def test_errors_and_save(tmp_path):
    recorder = RunStatistics()
    for _ in range(2):
        recorder.record_error("ConvergenceError", {"sample": 1})
    recorder.record_error("ValueError")
    path = tmp_path / "nested" / "run_stats.json"
    recorder.save(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    assert data["errors"]["count"] == 3
    assert data["errors"]["top_errors"][0] == {"type": "ConvergenceError", "count": 2}
    assert data["methods"] == {}
