"""End-to-end tests for the command line client.

Every subcommand is driven through main() in-process, which routes the
requests into the service app via an ASGI test client; one subprocess
smoke test checks the installed entry point for real.
"""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from privreg.cli import main
from privreg.theorylab import TheoryRow

CURVE_HEADER = "candidate,baseline,metric,ratio,cumulative_count"
THEORY_HEADER = "claim,point,bound,observed,pass"


def _write_json(path: Path, doc: dict) -> str:
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


@pytest.fixture
def fit_config(tmp_path, regression_csv):
    doc = {
        "csv_path": str(regression_csv["csv"]),
        "schema_path": str(regression_csv["schema"]),
        "algorithm": "adassp",
        "epsilon": 1.0,
        "tau": 1.0,
        "seed": 0,
        "test_fraction": 0.25,
    }
    return _write_json(tmp_path / "fit.json", doc)


@pytest.fixture
def bench_config(tmp_path, bench_config_dict):
    cfg = dict(bench_config_dict)
    cfg["seeds"] = [0, 1]
    return _write_json(tmp_path / "bench.json", cfg)


class TestFit:
    def test_prints_document(self, fit_config, capsys):
        assert main(["fit", "--config", fit_config]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["algorithm"] == "adassp"
        assert len(doc["theta"]) == 2
        assert "mse" in doc["metrics"]
        assert [r["label"] for r in doc["releases"]] == ["gram", "lambda-min", "cross-1"]

    def test_out_file(self, fit_config, tmp_path, capsys):
        out = tmp_path / "fit_result.json"
        assert main(["fit", "--config", fit_config, "--out", str(out)]) == 0
        assert f"wrote {out}" in capsys.readouterr().out
        doc = json.loads(out.read_text(encoding="utf-8"))
        assert doc["seed"] == 0

    def test_seed_flag_overrides_payload(self, fit_config, tmp_path, capsys):
        base = tmp_path / "a.json"
        other = tmp_path / "b.json"
        assert main(["fit", "--config", fit_config, "--out", str(base)]) == 0
        assert main(["fit", "--config", fit_config, "--seed", "7", "--out", str(other)]) == 0
        a = json.loads(base.read_text(encoding="utf-8"))
        b = json.loads(other.read_text(encoding="utf-8"))
        assert b["seed"] == 7
        assert a["theta"] != b["theta"]

    def test_unknown_algorithm_is_client_error(self, tmp_path, regression_csv, capsys):
        cfg = _write_json(tmp_path / "bad.json", {
            "csv_path": str(regression_csv["csv"]),
            "schema_path": str(regression_csv["schema"]),
            "algorithm": "deep_net",
        })
        assert main(["fit", "--config", cfg]) == 1
        assert "error (422)" in capsys.readouterr().err

    def test_missing_dataset_is_404(self, tmp_path, regression_csv, capsys):
        cfg = _write_json(tmp_path / "gone.json", {
            "csv_path": str(tmp_path / "nope.csv"),
            "schema_path": str(regression_csv["schema"]),
        })
        assert main(["fit", "--config", cfg]) == 1
        assert "error (404)" in capsys.readouterr().err


class TestBench:
    def test_writes_report_dir(self, bench_config, tmp_path, capsys):
        out = tmp_path / "report"
        assert main(["bench", "--config", bench_config, "--out", str(out)]) == 0
        text = capsys.readouterr().out
        assert "grid size: 4" in text
        assert "results: 4 (0 failed)" in text
        for name in ("results.csv", "results.jsonl", "failures.csv", "report_meta.json"):
            assert (out / name).is_file()
            assert name in text

    def test_seed_flag_replaces_seed_list(self, bench_config, capsys):
        assert main(["bench", "--config", bench_config, "--seed", "3"]) == 0
        text = capsys.readouterr().out
        assert "grid size: 2" in text
        assert "results: 2 (0 failed)" in text


class TestTheory:
    def test_out_csv_and_exit_zero(self, tmp_path, capsys):
        out = tmp_path / "rows.csv"
        rc = main(["theory", "--trials", "200", "--claims", "thm7-hand,lemma1", "--out", str(out)])
        assert rc == 0
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines[0] == THEORY_HEADER
        assert {line.split(",")[0] for line in lines[1:]} == {"thm7-hand", "lemma1"}
        assert "0 failed" in capsys.readouterr().err

    def test_stdout_csv(self, capsys):
        assert main(["theory", "--trials", "200", "--claims", "thm7-hand"]) == 0
        captured = capsys.readouterr()
        assert captured.out.startswith(THEORY_HEADER)

    def test_failure_exits_two(self, monkeypatch, capsys):
        import privreg.service.app as app_module

        def fake_suite(**kwargs):
            return [TheoryRow("fake", "p", bound=0.0, observed=1.0, passed=False)]

        monkeypatch.setattr(app_module, "run_theory_suite", fake_suite)
        assert main(["theory", "--trials", "10"]) == 2
        captured = capsys.readouterr()
        assert "1 checks, 1 failed" in captured.err
        assert "FAIL" in captured.out


class TestReport:
    @pytest.fixture
    def results_jsonl(self, bench_config, tmp_path, capsys):
        out = tmp_path / "report"
        assert main(["bench", "--config", bench_config, "--out", str(out)]) == 0
        capsys.readouterr()
        return str(out / "results.jsonl")

    def test_curve_to_stdout(self, results_jsonl, capsys):
        assert main(["report", "--results", results_jsonl]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == CURVE_HEADER
        # One grid cell, so the seed-median collapses to a single curve point.
        assert len(lines) == 2
        assert lines[1].startswith("boosted_adassp,adassp,mse,")
        assert lines[1].endswith(",1")

    def test_out_file_and_optimize_over(self, results_jsonl, tmp_path, capsys):
        out = tmp_path / "curve.csv"
        rc = main([
            "report", "--results", results_jsonl,
            "--candidate", "adassp", "--baseline", "adassp",
            "--optimize-over", "tau", "--out", str(out),
        ])
        assert rc == 0
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines[0] == CURVE_HEADER
        # Candidate equal to baseline after collapsing tau pins every ratio at 1.
        assert all(line.split(",")[3] == "1.0" for line in lines[1:])

    def test_missing_results_file(self, tmp_path, capsys):
        assert main(["report", "--results", str(tmp_path / "none.jsonl")]) == 1
        assert "error:" in capsys.readouterr().err


class TestErrors:
    def test_missing_config_file(self, capsys):
        assert main(["fit", "--config", "/no/such/config.json"]) == 1
        assert "error:" in capsys.readouterr().err

    def test_malformed_config_json(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json", encoding="utf-8")
        assert main(["fit", "--config", str(bad)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_unreachable_server(self, fit_config, capsys):
        rc = main(["fit", "--config", fit_config, "--server", "http://127.0.0.1:9"])
        assert rc == 1
        assert "request failed:" in capsys.readouterr().err


def test_module_entry_point_smoke():
    proc = subprocess.run(
        [sys.executable, "-m", "privreg", "theory", "--trials", "50", "--claims", "thm7-hand"],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith(THEORY_HEADER)
    assert "thm7-hand" in proc.stdout
