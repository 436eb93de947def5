import shutil
import subprocess
import sys

import pytest

from sector_heat.cli import RunConfig, main
from sector_heat.exceptions import ConfigError

FAST = """
[domain]
N = 1
m = 1
gamma = 0.5
alpha = 1.0

[solver]
h = 0.1
R = 12
snapshots = 0.5, 1

[verify]
checks = kernel_identity, closedform, domination
times = 0.5, 1
samples = 50
"""


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text(FAST)
    return p


def _run(cmd, cfg, out, *extra):
    return main([cmd, "--config", str(cfg), "--out", str(out), *extra])


def test_verify_passes_and_writes_reports(cfg_file, tmp_path):
    out = tmp_path / "v"
    assert _run("verify", cfg_file, out) == 0
    text = (out / "reports.txt").read_text()
    assert "kernel_identity" in text
    summary = (out / "summary.csv").read_text().splitlines()
    assert summary[0].startswith("# config_fingerprint=")


def test_solve_writes_fields(cfg_file, tmp_path):
    out = tmp_path / "s"
    assert _run("solve", cfg_file, out) == 0
    field = (out / "field_000.csv").read_text().splitlines()
    assert field[1] == "x1,value,time"
    assert (out / "solve_summary.csv").exists()


def test_eigen_table(tmp_path):
    cfg = tmp_path / "e.ini"
    cfg.write_text("[eigen]\ncases = 1:1\nh = 0.01\n")
    out = tmp_path / "e"
    assert _run("eigen", cfg, out) == 0
    row = (out / "eigen.csv").read_text().splitlines()[2].split(",")
    assert float(row[3]) == pytest.approx(9.8696, rel=1e-3)


def test_bad_config_exits_two_without_output(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[domain]\nN = 2\nbogus = 1\n")
    out = tmp_path / "never"
    assert _run("verify", cfg, out) == 2
    assert not out.exists()
    assert main(["verify", "--config", str(tmp_path / "missing.ini")]) == 2
    assert main(["frobnicate", "--config", str(cfg)]) == 2


def test_config_rejects_unknown_sections():
    with pytest.raises(ConfigError):
        RunConfig.from_text("[nope]\nx = 1\n")
    rc = RunConfig.from_text("")
    assert RunConfig.from_text(rc.to_text()).fingerprint == rc.fingerprint


def test_outputs_are_deterministic_across_jobs(cfg_file, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run("verify", cfg_file, a, "--jobs", "1") == 0
    assert _run("verify", cfg_file, b, "--jobs", "3") == 0
    for name in ("reports.txt", "summary.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_jobs_environment_fallback(cfg_file, tmp_path, monkeypatch):
    monkeypatch.setenv("SECTOR_HEAT_JOBS", "zero")
    assert _run("verify", cfg_file, tmp_path / "j") == 2
    monkeypatch.setenv("SECTOR_HEAT_JOBS", "2")
    assert _run("verify", cfg_file, tmp_path / "j") == 0


def test_report_collects_previous_runs(cfg_file, tmp_path):
    out = tmp_path / "r"
    assert _run("verify", cfg_file, out / "verify") == 0
    assert _run("eigen", cfg_file, out / "eigen") == 0
    assert _run("report", cfg_file, out) == 0
    assert (out / "report_summary.csv").exists()
    assert _run("report", cfg_file, tmp_path / "empty") == 2


@pytest.mark.skipif(shutil.which("sector-heat") is None, reason="console script not installed")
def test_console_script(cfg_file, tmp_path):
    proc = subprocess.run(["sector-heat", "verify", "--config", str(cfg_file),
                           "--out", str(tmp_path / "c")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
