import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from drawmark.cli import main


def run(args):
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def session_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("sessions") / "s1"
    code = run([
        "simulate", "--seed", 7, "-o", path, "--blocks", 6, "--trials", 8,
        "--channels", 4, "--epoch-duration", 1.0, "--id", "demo",
    ])
    assert code == 0
    return path


class TestSimulate:
    def test_outputs_present(self, session_dir):
        assert (session_dir / "session.json").exists()
        assert (session_dir / "ground_truth.json").exists()
        truth = json.loads((session_dir / "ground_truth.json").read_text())
        assert truth["seed"] == 7
        assert len(truth["conditions"]) == 48
        assert truth["mixing"] is not None

    def test_no_neural_flag(self, tmp_path):
        out = tmp_path / "s"
        assert run(["simulate", "--seed", 1, "-o", out, "--blocks", 4,
                    "--trials", 4, "--no-neural"]) == 0
        manifest = json.loads((out / "session.json").read_text())
        assert all(
            t["epoch"] is None
            for b in manifest["blocks"]
            for t in b["trials"]
        )


class TestBehavioralDecode:
    def test_report_written(self, session_dir, tmp_path):
        out = tmp_path / "rep"
        code = run(["behavioral-decode", session_dir, "-o", out,
                    "--n-perm", 200, "--seed", 3])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["session_id"] == "demo"
        beh = report["behavioral"]
        assert "mean_auc" in beh and beh["mean_auc"] is not None
        assert beh["chance"]["n_permutations"] == 200
        assert beh["config"]["seed"] == 3
        assert beh["task_performance"]["mean_auc"] is not None
        assert isinstance(beh["significant"], bool)

    def test_dump_features(self, session_dir, tmp_path):
        csv_path = tmp_path / "features.csv"
        code = run(["behavioral-decode", session_dir, "-o", tmp_path / "r",
                    "--n-perm", 0, "--dump-features", csv_path,
                    "--skip-task-performance"])
        assert code == 0
        with open(csv_path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0][:3] == ["block", "trial", "condition"]
        assert rows[0][3] == "speed"
        assert len(rows) == 1 + 48

    def test_byte_identical_reports(self, session_dir, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        args = ["behavioral-decode", session_dir, "--n-perm", 100, "--seed", 5,
                "--skip-task-performance"]
        assert run(args + ["-o", out1]) == 0
        assert run(args + ["-o", out2, "--workers", 3]) == 0
        assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()


class TestNeuralAndOutcome:
    def test_full_chain(self, session_dir, tmp_path):
        out = tmp_path / "rep"
        assert run(["behavioral-decode", session_dir, "-o", out,
                    "--n-perm", 150, "--seed", 3, "--skip-task-performance"]) == 0
        assert run(["neural-decode", session_dir, "-o", out,
                    "--n-perm", 100, "--seed", 4]) == 0
        assert run(["controllability", session_dir, "-o", out,
                    "--marker", out / "marker_copydraw.json",
                    "--n-perm", 100, "--seed", 5]) == 0
        report = json.loads((out / "report.json").read_text())
        assert set(report) >= {"behavioral", "neural", "controllability"}
        assert report["neural"]["marker_file"] == "marker_copydraw.json"
        assert (out / "marker_copydraw.json").exists()
        assert (out / "predictions_copydraw.csv").exists()

        code = run(["outcome-type", out / "report.json"])
        assert code == 0
        merged = json.loads((out / "report.json").read_text())
        assert merged["outcome"]["type"] in range(1, 7)
        assert set(merged["outcome"]) >= {
            "auc_significant", "r_significant", "icc_high", "inputs"
        }

        agg = tmp_path / "agg"
        assert run(["report", out / "report.json", "-o", agg]) == 0
        assert (agg / "sessions.csv").exists()
        assert (agg / "band_counts.csv").exists()
        summary = json.loads((agg / "summary.json").read_text())
        assert summary["n_sessions"] == 1

    def test_task_performance_target_tagged(self, session_dir, tmp_path):
        out = tmp_path / "rep"
        assert run(["neural-decode", session_dir, "-o", out, "--n-perm", 0,
                    "--target", "task-performance"]) == 0
        report = json.loads((out / "report.json").read_text())
        section = report["neural_task_performance"]
        assert section["target_kind"] == "task_performance"
        assert (out / "marker_task_performance.json").exists()

    def test_predictions_csv_columns(self, session_dir, tmp_path):
        out = tmp_path / "rep"
        assert run(["neural-decode", session_dir, "-o", out, "--n-perm", 0]) == 0
        with open(out / "predictions_copydraw.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["trial", "block", "condition", "true_score",
                           "predicted_score"]
        assert len(rows) == 1 + 48
        conditions = {row[2] for row in rows[1:]}
        assert conditions == {"ON", "OFF"}


class TestExitCodes:
    def test_missing_session_is_validation_error(self, tmp_path):
        assert run(["behavioral-decode", tmp_path / "missing", "--n-perm", 0]) == 2

    def test_outcome_requires_sections(self, session_dir, tmp_path):
        out = tmp_path / "rep"
        assert run(["behavioral-decode", session_dir, "-o", out, "--n-perm", 0,
                    "--skip-task-performance"]) == 0
        assert run(["outcome-type", out / "report.json"]) == 2

    def test_console_entrypoint(self):
        proc = subprocess.run(
            [sys.executable, "-m", "drawmark.cli", "--help"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert "simulate" in proc.stdout
