import json
import os
import pathlib
import subprocess
import time

import pytest

CLI = os.environ.get("MNLS_CLI", "mnls")
CONFIGS = pathlib.Path(os.environ.get("MNLS_CONFIGS", pathlib.Path(__file__).parents[2] / "configs"))


def run(*args, timeout=600):
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, timeout=timeout)


def ndjson(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def test_missing_config_is_a_validation_error(tmp_path):
    r = run("evolve", "--config", tmp_path / "absent.ini", "--out", tmp_path)
    assert r.returncode == 2
    assert "absent.ini" in r.stderr


@pytest.mark.parametrize("integrator", ["strang", "picard"])
def test_free_particle_conserves_energy(tmp_path, integrator):
    r = run("evolve", "--config", CONFIGS / "free_particle.ini", "--out", tmp_path,
            "--integrator", integrator, "--snapshot-stride", 50)
    assert r.returncode == 0, r.stderr
    lines = ndjson(r.stdout)
    keys = {"t", "charge", "E_kin", "E_V", "E_loc", "E_nonloc", "F_A", "H1A_norm"}
    assert all(set(d) == keys for d in lines)
    assert lines[-1]["t"] == pytest.approx(1.0)
    assert abs(lines[-1]["F_A"] - lines[0]["F_A"]) < 1e-9
    assert ndjson((tmp_path / "diagnostics.ndjson").read_text()) == lines
    assert sorted(p.name for p in tmp_path.glob("snap_*.bin")) == [
        "snap_000000.bin", "snap_000001.bin", "snap_000002.bin"]
    assert (tmp_path / "final.bin").stat().st_size > 0
    assert "status completed" in (tmp_path / "summary.txt").read_text()


def test_require_global_names_the_violated_condition(tmp_path):
    r = run("evolve", "--config", CONFIGS / "quintic_blowup.ini", "--require-global", "--out", tmp_path)
    assert r.returncode == 2
    assert "Theorem (solGlobal)" in r.stderr
    assert "l_0 < 4/N" in r.stderr


def test_require_global_accepts_trapped_hartree(tmp_path):
    r = run("evolve", "--config", CONFIGS / "hartree_1d.ini", "--require-global", "--out", tmp_path)
    assert r.returncode == 0, r.stderr
    lines = ndjson(r.stdout)
    assert abs(lines[-1]["charge"][0] - lines[0]["charge"][0]) < 1e-10


def test_nonlocal_exponent_error_names_the_condition(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[grid]\ndim = 1\nn = 64\nL = 8\n[nonlocal]\nw = 1\ngamma = 0.5\nmu = 9\n")
    r = run("evolve", "--config", cfg, "--out", tmp_path)
    assert r.returncode == 2
    assert "(restrh-localwp)" in r.stderr


def test_blowup_run_reports_t_star(tmp_path):
    r = run("evolve", "--config", CONFIGS / "quintic_blowup.ini", "--out", tmp_path)
    assert r.returncode == 0, r.stderr
    summary = (tmp_path / "summary.txt").read_text()
    assert "status blowup_detected" in summary
    t_star = float(summary.split("t_star_estimate ")[1].split()[0])
    assert 0.0 < t_star < 0.2


def test_verify_default_suite(tmp_path):
    start = time.monotonic()
    r = run("verify", "--out", tmp_path)
    elapsed = time.monotonic() - start
    assert r.returncode == 0, r.stdout
    assert elapsed < 60.0
    reports = ndjson(r.stdout)
    assert len(reports) >= 7
    assert all(rep["pass"] for rep in reports)


def test_decay_slope(tmp_path):
    r = run("decay", "--out", tmp_path)
    assert r.returncode == 0, r.stderr
    (res,) = ndjson(r.stdout)
    assert res["slope"] == pytest.approx(-0.5, abs=0.05)
    rows = (tmp_path / "decay.tsv").read_text().splitlines()
    assert rows[0] == "t\tnorm" and len(rows) == 11


def test_groundstate_sech(tmp_path):
    r = run("groundstate", "--config", CONFIGS / "sech_groundstate.ini", "--out", tmp_path)
    assert r.returncode == 0, r.stderr
    (res,) = ndjson(r.stdout)
    assert res["status"] == "converged"
    assert res["label"] == "ground state candidate"
    assert res["lambda"][0] == pytest.approx(-1.0, abs=1e-7)
    assert res["F_A"] == pytest.approx(-2.0 / 3.0, abs=1e-7)
    assert (tmp_path / "groundstate.bin").exists()
