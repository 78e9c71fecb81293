"""CLI behavior: file emission, determinism, exit codes."""

import filecmp
import json
from pathlib import Path

from pointbudget.cli import EXIT_OK, EXIT_SCENARIO, main

SCN = str(Path(__file__).resolve().parent.parent / "scenarios" / "case_study_ape.scn")


def run_cli(args):
    return main(args)


class TestRun:
    def test_run_writes_outputs(self, tmp_path, capsys):
        code = run_cli(["run", SCN, "--out", str(tmp_path / "out"),
                        "--samples", "20000"])
        assert code == EXIT_OK
        out = tmp_path / "out"
        assert (out / "report.json").exists()
        assert (out / "budget.txt").exists()
        assert (out / "scenario_resolved.json").exists()
        assert (out / "plotdata" / "cdf_total_x.dat").exists()
        table = (out / "budget.txt").read_text()
        assert "Time constant" in table and "Total" in table
        report = json.loads((out / "report.json").read_text())
        assert report["metadata"]["combination_samples"] == 20000

    def test_dump_model_writes_diagnostics(self, tmp_path):
        code = run_cli(["run", SCN, "--out", str(tmp_path / "o"),
                        "--samples", "20000", "--dump-model"])
        assert code == EXIT_OK
        diag = json.loads((tmp_path / "o" / "diagnostics.json").read_text())
        assert diag["closed_loop_states"] == 30

    def test_byte_identical_reruns(self, tmp_path):
        for name in ("a", "b"):
            code = run_cli(["run", SCN, "--out", str(tmp_path / name),
                            "--samples", "20000"])
            assert code == EXIT_OK
        match, mismatch, errors = filecmp.cmpfiles(
            tmp_path / "a", tmp_path / "b",
            ["report.json", "budget.txt", "scenario_resolved.json"], shallow=False)
        assert not mismatch and not errors
        for sub in sorted((tmp_path / "a" / "plotdata").iterdir()):
            other = tmp_path / "b" / "plotdata" / sub.name
            assert other.read_bytes() == sub.read_bytes()

    def test_seed_override_changes_report(self, tmp_path):
        run_cli(["run", SCN, "--out", str(tmp_path / "a"), "--samples", "20000"])
        run_cli(["run", SCN, "--out", str(tmp_path / "b"), "--samples", "20000",
                 "--seed", "99"])
        a = (tmp_path / "a" / "report.json").read_bytes()
        b = (tmp_path / "b" / "report.json").read_bytes()
        assert a != b

    def test_missing_file(self, capsys):
        assert run_cli(["run", "/nonexistent.scn"]) == EXIT_SCENARIO

    def test_schema_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.scn"
        bad.write_text("metric: {index: APE}\n")
        assert run_cli(["run", str(bad)]) == EXIT_SCENARIO
        assert "metric" in capsys.readouterr().err

    def test_wc_flag_requires_section(self, tmp_path, capsys):
        # APE scenario has no worst-case section: --wc must fail loudly
        assert run_cli(["run", SCN, "--out", str(tmp_path / "o"),
                        "--samples", "20000", "--wc"]) == EXIT_SCENARIO

    def test_unstable_plant_exit_code(self, tmp_path, capsys):
        from pointbudget.cli import EXIT_MODEL

        bad = tmp_path / "unstable.scn"
        bad.write_text(
            "metric: {index: APE, confidence: 0.997, requirement: [1.0, 1.0, 1.0]}\n"
            "plant:\n"
            "  external:\n"
            "    a: [[0.1]]\n"
            "    b: [[1.0]]\n"
            "    c: [[1.0]]\n"
            "    d: [[0.0]]\n"
            "    inputs: [torque_x]\n"
            "    outputs: [err_x]\n"
            "sources:\n"
            "  - {name: bias, kind: time_constant, distribution: delta, units: Nm,\n"
            "     input: torque_x, values: {x: 0.5}}\n"
        )
        assert run_cli(["run", str(bad), "--out", str(tmp_path / "o")]) == EXIT_MODEL


class TestValidate:
    def test_valid(self, capsys):
        assert run_cli(["validate", SCN]) == EXIT_OK
        assert "valid" in capsys.readouterr().out

    def test_dump_normalized(self, capsys):
        assert run_cli(["validate", SCN, "--dump-normalized"]) == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["metric"]["index"] == "APE"

    def test_invalid(self, tmp_path, capsys):
        bad = tmp_path / "bad.scn"
        bad.write_text("metric: {index: APE}\n")
        assert run_cli(["validate", str(bad)]) == EXIT_SCENARIO
