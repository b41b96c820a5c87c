import csv
import subprocess
import sys

import pytest

from eroranking import experiment as ex
from eroranking.cli import LEMMA_HEADER, main

RUN_CFG = """\
kind = uniform-grid
n = 40
eta = 0.5, 1.0
p = 0.5, 1.0
trials = 3
methods = unnormalized, normalized
seed = 9
errorbar = true
"""

VALIDATE_CFG = """\
n = 24
eta = 0.7
p = 0.8
trials = 3
checks = noise_norm, row_noise, davis_kahan, normalized_noise, weyl, interlacing
seed = 4
"""

# leave-one-out and Davis-Kahan constants are calibrated in-regime (SNR 2)
REGIME_CFG = """\
n = 300
snr = 2
p = 1
trials = 3
checks = davis_kahan, leave_one_out, interlacing
k_indices = 1, 150, 300
seed = 4
"""


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv(ex.OUTPUT_DIR_ENV, raising=False)
    return tmp_path


def test_demo(capsys):
    assert main(["demo"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 2
    for line in out:
        perm = line.split(":")[1].split()
        assert perm in ([str(i) for i in range(1, 11)], [str(i) for i in range(10, 0, -1)])


def test_run_writes_outputs(workdir):
    (workdir / "a.cfg").write_text(RUN_CFG)
    assert main(["run", "a.cfg", "--out", "o"]) == 0
    out = workdir / "o"
    rows = list(csv.reader(open(out / "records.csv")))
    assert ",".join(rows[0]) == ex.RECORD_HEADER
    assert len(rows) - 1 == 2 * 2 * 2 * 3
    assert (out / "summary.csv").read_text().splitlines()[0] == ex.SUMMARY_HEADER
    for metric in ("rel_linf", "rho_max", "rho_mean"):
        for method in ("unnormalized", "normalized"):
            assert (out / f"heatmap_{metric}_{method}.svg").exists()
    assert len(list(out.glob("errorbar_*.svg"))) == 4


def test_run_no_plots_and_config_flag(workdir):
    (workdir / "a.cfg").write_text(RUN_CFG)
    assert main(["run", "--config", "a.cfg", "--out", "o", "--no-plots"]) == 0
    assert not list((workdir / "o").glob("*.svg"))


def test_run_is_byte_deterministic(workdir):
    (workdir / "a.cfg").write_text(RUN_CFG)
    assert main(["run", "a.cfg", "--out", "x", "--no-plots"]) == 0
    assert main(["run", "a.cfg", "--out", "y", "--no-plots", "--workers", "2"]) == 0
    assert (workdir / "x/records.csv").read_bytes() == (workdir / "y/records.csv").read_bytes()
    assert main(["run", "a.cfg", "--out", "z", "--no-plots", "--seed", "10"]) == 0
    assert (workdir / "x/records.csv").read_bytes() != (workdir / "z/records.csv").read_bytes()


def test_timing_flag_fills_wall_ms(workdir):
    (workdir / "a.cfg").write_text(RUN_CFG.replace("n = 40", "n = 300").replace("trials = 3", "trials = 1"))
    assert main(["run", "a.cfg", "--out", "t", "--no-plots", "--timing"]) == 0
    recs = ex.read_records(workdir / "t/records.csv")
    assert any(r.wall_ms > 0 for r in recs)


def test_env_output_dir(workdir, monkeypatch):
    (workdir / "a.cfg").write_text(RUN_CFG)
    monkeypatch.setenv(ex.OUTPUT_DIR_ENV, str(workdir / "envout"))
    assert main(["run", "a.cfg", "--no-plots"]) == 0
    assert (workdir / "envout/records.csv").exists()


def test_config_error_exit_code(workdir, capsys):
    (workdir / "bad.cfg").write_text("n = 10\ntrials = many\n")
    assert main(["run", "bad.cfg"]) == 1
    assert "line 2" in capsys.readouterr().err
    assert main(["run", "missing.cfg"]) == 1
    assert main(["validate", "bad.cfg"]) == 1
    assert main(["run"]) == 1


def test_validate_passes(workdir, capsys):
    (workdir / "v.cfg").write_text(VALIDATE_CFG)
    assert main(["validate", "v.cfg", "--out", "v"]) == 0
    lines = (workdir / "v/lemma_checks.csv").read_text().splitlines()
    assert lines[0] == LEMMA_HEADER
    rows = list(csv.DictReader(lines))
    assert len(rows) == 6
    dk = [r for r in rows if r["check"] == "davis_kahan"][0]
    assert dk["note"].startswith("skipped")
    assert all(r["passed"] == "True" for r in rows if r["check"] != "davis_kahan")


def test_validate_in_regime(workdir):
    (workdir / "r.cfg").write_text(REGIME_CFG)
    assert main(["validate", "r.cfg", "--out", "r"]) == 0
    rows = {r["check"]: r for r in csv.DictReader(open(workdir / "r/lemma_checks.csv"))}
    assert rows["davis_kahan"]["passed"] == "True"
    assert rows["leave_one_out"]["passed"] == "True"
    assert rows["interlacing"]["note"].startswith("skipped")


def test_validate_forced_failure(workdir):
    (workdir / "cal.txt").write_text("noise_norm 0 1 20\nrow_noise 3 1 20\n")
    (workdir / "v.cfg").write_text(VALIDATE_CFG.replace(
        "checks = noise_norm, row_noise, davis_kahan, normalized_noise, weyl, interlacing",
        "checks = noise_norm, row_noise\ncalibration = cal.txt"))
    assert main(["validate", "v.cfg", "--out", "v"]) == 2
    rows = list(csv.DictReader(open(workdir / "v/lemma_checks.csv")))
    assert {r["check"]: r["passed"] for r in rows} == {"noise_norm": "False", "row_noise": "True"}


def test_validate_incomplete_calibration(workdir, capsys):
    (workdir / "cal.txt").write_text("noise_norm 3 1 20\n")
    (workdir / "v.cfg").write_text(VALIDATE_CFG + "calibration = cal.txt\n")
    assert main(["validate", "v.cfg", "--out", "v"]) == 1
    assert "row_noise" in capsys.readouterr().err


def test_calibrate_subcommand(workdir):
    assert main(["calibrate", "--out", "c.txt", "--trials", "1", "--seed", "5"]) == 0
    text = (workdir / "c.txt").read_text()
    assert "seed=5" in text and "noise_norm 3.0 5 1" in text


def test_console_script_module():
    out = subprocess.run([sys.executable, "-m", "eroranking.cli", "demo"], capture_output=True, text=True)
    assert out.returncode == 0 and "permutation" in out.stdout
