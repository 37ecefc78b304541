import json
import pathlib
import subprocess
import sys

import jsonschema
import pytest

from spinframe.cli import SCHEMA, main, run_job, validate_job

JOBS = pathlib.Path(__file__).resolve().parent.parent / "demos" / "jobs"


def write_job(tmp_path, job, name="job.json"):
    path = tmp_path / name
    path.write_text(json.dumps(job))
    return str(path)


def run(tmp_path, job, *extra):
    out = tmp_path / "report.json"
    code = main(["run", write_job(tmp_path, job), "--out", str(out), *extra])
    text = out.read_text() if out.exists() else None
    return code, text


def test_schema_validates_shipped_jobs():
    jobs = sorted(JOBS.glob("*.json"))
    assert len(jobs) >= 5
    for path in jobs:
        validate_job(json.loads(path.read_text()))


@pytest.mark.parametrize("job", [
    {"command": "verify", "field": {"family": "mystery"}},
    {"command": "gcr", "field": {"family": "paper_example"}, "fd": {"step": -1e-5}},
    {"command": "launch", "field": {"family": "paper_example"}},
    {"command": "compose", "field": {"family": "paper_example"}},
])
def test_schema_rejects_bad_jobs(job):
    with pytest.raises(jsonschema.ValidationError):
        validate_job(job)


def test_schema_command_prints_json(capsys):
    assert main(["schema"]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed == json.loads(json.dumps(SCHEMA))


def test_example_job_passes(tmp_path):
    code, text = run(tmp_path, json.loads((JOBS / "example.json").read_text()))
    assert code == 0
    rep = json.loads(text)
    assert rep["summary"]["ok"] and rep["summary"]["counts"]["failed"] == 0
    keys = set(rep["points"][0]["errors"])
    assert {"H", "omega", "R", "metric", "immersion_map"} <= keys
    assert rep["summary"]["max_residuals"]["R"] < 1e-9


def test_even_counterexample_job_fails_at_index_one(tmp_path):
    code, text = run(tmp_path, json.loads((JOBS / "even_counterexample.json").read_text()))
    assert code == 1
    point = json.loads(text)["points"][0]
    assert 1 in point["failing_frame_indices"]
    assert point["sandwich_outputs"]["1"] == [{"blade": [2, 3, 4, 5, 6], "coeff": pytest.approx(1.0, abs=1e-15)}]


def test_gcr_grid_job(tmp_path):
    job = json.loads((JOBS / "gcr_grid.json").read_text())
    code, text = run(tmp_path, job)
    rep = json.loads(text)
    assert code == 0
    assert rep["summary"]["counts"]["points"] == 125
    assert max(rep["summary"]["max_residuals"].values()) < 1e-4


def test_schema_error_exit_code(tmp_path):
    code, _ = run(tmp_path, {"command": "gcr", "field": {"family": "paper_example"}, "fd": {"step": -1}})
    assert code == 2
    code, _ = run(tmp_path, {"command": "verify", "field": {"family": "typeA", "normal_index": 5,
                                                            "f": "1 +", "coeffs": ["0", "0", "0", "0"]}})
    assert code == 2
    missing = tmp_path / "nope.json"
    assert main(["run", str(missing)]) == 2


def test_evaluation_error_exit_code(tmp_path):
    job = {"command": "extract",
           "field": {"family": "typeA", "normal_index": 5, "f": "1/(x1 - 1)", "coeffs": ["0", "0", "0", "0"]},
           "points": [[0, 1, 0, 0]]}
    code, text = run(tmp_path, job)
    assert code == 3 and text is None


def test_tolerance_failure_exit_code(tmp_path):
    job = {"command": "verify",
           "field": {"family": "typeA", "normal_index": 5, "f": "1", "coeffs": ["0", "x1", "0", "0"]},
           "points": [[0, 0.5, 0, 0]]}
    code, text = run(tmp_path, job)
    assert code == 1
    assert json.loads(text)["summary"]["counts"]["failed"] == 1


def test_report_is_deterministic(tmp_path):
    job = {"command": "curvature", "field": {"family": "paper_example"},
           "points": [[0, 0.5, 0, 0], [0, -0.2, 0.3, 0.1], [0, 0, 0, 0]]}
    _, first = run(tmp_path, job)
    _, second = run(tmp_path, job)
    assert first == second
    rep = json.loads(first)
    xs = [tuple(p["x"]) for p in rep["points"]]
    assert xs == sorted(xs)
    assert set(rep["header"]) == {"tool", "version", "command"}


def test_threads_do_not_change_report(tmp_path, monkeypatch):
    job = {"command": "gcr", "field": {"family": "paper_example"},
           "points": {"grid": {"x0": 0.0, "ranges": [[-1, 1], [-1, 1], [-1, 1]], "counts": [2, 2, 2]}}}
    _, serial = run(tmp_path, job, "--threads", "1")
    _, parallel = run(tmp_path, job, "--threads", "2")
    assert serial == parallel
    monkeypatch.setenv("SPINFRAME_THREADS", "2")
    _, env = run(tmp_path, job)
    assert env == serial


def test_csv_output(tmp_path):
    job = {"command": "gcr", "field": {"family": "paper_example"}, "points": [[0, 0.1, 0.2, 0.3]]}
    code, text = run(tmp_path, job, "--format", "csv")
    assert code == 0
    lines = text.splitlines()
    assert lines[0].startswith("x0,x1,x2,x3,ok,codazzi_residual")
    assert len(lines) == 2 and "\r" not in text


def test_compose_job_reports_printed_discrepancy():
    job = json.loads((JOBS / "compose.json").read_text())
    rep, code = run_job(job)
    assert code == 0
    point = rep["points"][0]
    assert point["oracle_residual"] < 1e-10 and point["product_extraction_residual"] < 1e-10
    assert "H^{mu n}" in point["printed_formula_discrepancy"]


def test_immerse_job_writes_cloud(tmp_path):
    job = json.loads((JOBS / "immerse.json").read_text())
    job["immerse"]["cloud_path"] = str(tmp_path / "cloud.csv")
    job["immerse"]["grid"]["counts"] = [3, 3, 3]
    rep, code = run_job(job)
    assert code == 0
    assert rep["summary"]["max_residuals"]["path_independence"] < 1e-5
    lines = (tmp_path / "cloud.csv").read_text().splitlines()
    assert len(lines) == 28


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "spinframe.cli", "run",
                          str(JOBS / "even_counterexample.json"), "--format", "csv"],
                         capture_output=True, text=True)
    assert out.returncode == 1
    assert out.stdout.startswith("x0,x1,x2,x3,ok")
