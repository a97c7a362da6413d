"""CLI surface: subcommands, flags, exit codes, and output artifacts."""

import json
import os
import subprocess
import sys

import pytest

from rpltaguchi.cli import PAPER_SCALE_DURATION_MS, _load_spec, build_parser, main

CLI_SPEC = """
[experiment]
array = auto
repetitions = 2
seeds = 11, 12
budget = 30

[factors]
a = dio_interval_min: 6, 8, 10
b = redundancy_constant: 2, 6, 10

[simulation]
node_count = 8
duration_ms = 4000
mobility_speed = 0
radio_range = 60
"""


@pytest.fixture()
def spec_file(tmp_path):
    path = tmp_path / "cli.spec"
    path.write_text(CLI_SPEC)
    return str(path)


class TestDesign:
    def test_prints_reference_design_by_default(self, capsys):
        assert main(["design"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "A,B,C,D,E"
        assert lines[1] == "20,5,8,4,6"
        assert len(lines) == 28

    def test_writes_design_file(self, spec_file, tmp_path, capsys):
        out = str(tmp_path / "d")
        assert main(["design", "--spec", spec_file, "--out", out]) == 0
        assert "9 runs on L9" in capsys.readouterr().out
        with open(os.path.join(out, "design.csv")) as fp:
            assert fp.readline().strip() == "A,B"

    def test_bad_spec_path(self, capsys):
        assert main(["design", "--spec", "/no/such.spec"]) == 2
        assert "error:" in capsys.readouterr().err

    def test_malformed_spec(self, tmp_path, capsys):
        bad = tmp_path / "bad.spec"
        bad.write_text("[factors]\na = 1, 2, 3\n")
        assert main(["design", "--spec", str(bad)]) == 2
        assert "error:" in capsys.readouterr().err


class TestRun:
    def test_full_pipeline(self, spec_file, tmp_path, capsys):
        out = str(tmp_path / "out")
        assert main(["run", "--spec", spec_file, "--out", out]) == 0
        stdout = capsys.readouterr().out
        assert "point 1: mean" in stdout
        assert "Experiment report" in stdout
        for name in (
            "report.txt",
            "report.json",
            "anova.csv",
            "response_table.csv",
            "main_effects.csv",
            "interactions.csv",
            "design.csv",
            "records.csv",
            "runlog.jsonl",
        ):
            assert os.path.exists(os.path.join(out, name)), name

    def test_resume_skips_simulation(self, spec_file, tmp_path, capsys):
        out = str(tmp_path / "out")
        main(["run", "--spec", spec_file, "--out", out])
        capsys.readouterr()
        assert main(["run", "--spec", spec_file, "--out", out]) == 0
        stdout = capsys.readouterr().out
        assert "point 1: mean" not in stdout  # nothing re-simulated
        assert "Experiment report" in stdout

    def test_seed_override(self, spec_file, tmp_path):
        out = str(tmp_path / "out")
        assert main(["run", "--spec", spec_file, "--out", out, "--seed", "3,4"]) == 0
        with open(os.path.join(out, "runlog.jsonl")) as fp:
            entry = json.loads(fp.readlines()[1])
        assert entry["seeds"] == [3, 4]

    def test_seed_override_must_cover_repetitions(self, spec_file, tmp_path, capsys):
        out = str(tmp_path / "out")
        assert main(["run", "--spec", spec_file, "--out", out, "--seed", "3"]) == 2
        assert "seeds" in capsys.readouterr().err

    def test_jobs_flag(self, spec_file, tmp_path):
        out = str(tmp_path / "out")
        assert main(["run", "--spec", spec_file, "--out", out, "--jobs", "2"]) == 0

    def test_anova_space_flag(self, spec_file, tmp_path, capsys):
        out = str(tmp_path / "out")
        assert main(["run", "--spec", spec_file, "--out", out, "--anova-space", "snr"]) == 0
        assert "ANOVA (snr space)" in capsys.readouterr().out

    def test_paper_scale_and_repetitions_override_spec(self, spec_file):
        parser = build_parser()
        args = parser.parse_args(
            ["run", "--spec", spec_file, "--out", "x", "--paper-scale",
             "--repetitions", "1"]
        )
        spec = _load_spec(args)
        assert spec.duration_ms == PAPER_SCALE_DURATION_MS
        assert spec.repetitions == 1

    def test_failed_points_exit_one(self, spec_file, tmp_path, capsys, monkeypatch):
        import rpltaguchi.sim as sim_module

        real_run = sim_module.run

        def flaky(config):
            if config.trickle.k == 6 and config.trickle.i_min_exp == 8:
                raise RuntimeError("injected fault")
            return real_run(config)

        monkeypatch.setattr(sim_module, "run", flaky)
        out = str(tmp_path / "out")
        assert main(["run", "--spec", spec_file, "--out", out]) == 1
        captured = capsys.readouterr()
        assert "FAILED" in captured.err
        assert "WARNING" in captured.out

    def test_out_is_required(self, spec_file):
        with pytest.raises(SystemExit) as exc:
            main(["run", "--spec", spec_file])
        assert exc.value.code == 2


class TestAnalyze:
    @pytest.fixture()
    def records_csv(self, spec_file, tmp_path):
        out = str(tmp_path / "out")
        main(["run", "--spec", spec_file, "--out", out])
        return os.path.join(out, "records.csv")

    def test_from_csv(self, records_csv, capsys):
        assert main(["analyze", "--responses", records_csv]) == 0
        stdout = capsys.readouterr().out
        assert "Experiment report" in stdout
        assert "Verdicts" in stdout

    def test_with_spec_factors(self, records_csv, spec_file, capsys):
        assert main(["analyze", "--responses", records_csv, "--spec", spec_file]) == 0
        assert "dio_interval_min" in capsys.readouterr().out

    def test_export_dir(self, records_csv, tmp_path):
        out = str(tmp_path / "reanalysis")
        assert main(["analyze", "--responses", records_csv, "--out", out]) == 0
        assert os.path.exists(os.path.join(out, "report.json"))

    def test_mismatched_spec_rejected(self, records_csv, tmp_path, capsys):
        other = tmp_path / "other.spec"
        other.write_text(CLI_SPEC.replace("a = dio_interval_min", "q = dio_interval_min"))
        assert main(["analyze", "--responses", records_csv, "--spec", str(other)]) == 2
        assert "error:" in capsys.readouterr().err

    def test_snr_space(self, records_csv, capsys):
        assert main(["analyze", "--responses", records_csv, "--anova-space", "snr"]) == 0
        assert "ANOVA (snr space)" in capsys.readouterr().out

    def test_missing_csv(self, capsys):
        assert main(["analyze", "--responses", "/no/records.csv"]) == 2
        assert "error:" in capsys.readouterr().err


class TestReport:
    def test_reexport(self, spec_file, tmp_path, capsys):
        out = str(tmp_path / "out")
        main(["run", "--spec", spec_file, "--out", out])
        capsys.readouterr()
        again = str(tmp_path / "again")
        rc = main(["report", "--report", os.path.join(out, "report.json"), "--out", again])
        assert rc == 0
        assert os.path.exists(os.path.join(again, "report.txt"))
        first = open(os.path.join(out, "report.json")).read()
        second = open(os.path.join(again, "report.json")).read()
        assert first == second

    def test_missing_report(self, tmp_path, capsys):
        rc = main(["report", "--report", "/no/report.json", "--out", str(tmp_path)])
        assert rc == 2


class TestVerification:
    def test_verify_paper_passes(self, capsys):
        assert main(["verify-paper"]) == 0
        assert "PASS (55/55" in capsys.readouterr().out

    def test_verify_paper_writes_artifact(self, tmp_path, capsys):
        out = str(tmp_path / "v")
        assert main(["verify-paper", "--out", out]) == 0
        with open(os.path.join(out, "verify-paper.txt")) as fp:
            assert "PASS" in fp.read()

    def test_verify_oa_default(self, capsys):
        assert main(["verify-oa"]) == 0
        assert "L27" in capsys.readouterr().out

    def test_verify_oa_l9(self, capsys):
        assert main(["verify-oa", "--array", "L9"]) == 0
        assert "balanced" in capsys.readouterr().out

    def test_verify_oa_spec_columns(self, spec_file, capsys):
        assert main(["verify-oa", "--spec", spec_file]) == 0
        out = capsys.readouterr().out
        assert "L9" in out and "columns 1, 2" in out

    def test_verify_oa_rejects_unknown_array(self):
        with pytest.raises(SystemExit) as exc:
            main(["verify-oa", "--array", "L81"])
        assert exc.value.code == 2


class TestParserBasics:
    def test_no_arguments(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "rpltaguchi" in capsys.readouterr().out


class TestSubprocessIntegration:
    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "rpltaguchi.cli", "verify-oa", "--array", "L9"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "balanced" in proc.stdout

    def test_verify_paper_without_simulator(self):
        # the analysis path must not touch the simulator module at all
        code = (
            "import sys; sys.modules['rpltaguchi.sim'] = None; "
            "from rpltaguchi.cli import main; sys.exit(main(['verify-paper']))"
        )
        proc = subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True
        )
        assert proc.returncode == 0, proc.stderr
        assert "PASS (55/55" in proc.stdout
