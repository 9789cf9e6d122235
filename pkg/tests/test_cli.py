"""Command-line surface: files, headers, determinism, exit codes."""

import math
from pathlib import Path

import pytest
from click.testing import CliRunner

from spinprobe.cli import main
from spinprobe.config import load_config, parse_time


def run(*args):
    return CliRunner().invoke(main, list(args))


def all_output(result):
    """stdout plus stderr; click captures them separately."""
    try:
        return result.output + result.stderr
    except ValueError:
        return result.output


def read_summary(path):
    pairs = {}
    for line in Path(path).read_text().splitlines():
        if line.startswith("#") or not line.strip():
            continue
        key, _, value = line.partition(":")
        pairs[key.strip()] = value.strip()
    return pairs


def test_parse_time():
    assert parse_time("80us") == pytest.approx(8e-5)
    assert parse_time("1.5 ms") == pytest.approx(1.5e-3)
    assert parse_time("2e-5 s") == pytest.approx(2e-5)
    assert parse_time("75 µs") == pytest.approx(75e-6)
    assert parse_time("75μs") == pytest.approx(75e-6)
    assert parse_time("3ns") == pytest.approx(3e-9)
    assert parse_time(4e-5) == pytest.approx(4e-5)
    assert parse_time(2) == pytest.approx(2.0)
    for bad in ("80", "fast", "", "-1us", True, None):
        with pytest.raises(ValueError):
            parse_time(bad)


def test_default_config_roundtrip(tmp_path):
    cfg = load_config(None)
    assert cfg.seed == 0
    assert cfg.preset_name == "ideal"
    path = tmp_path / "run.toml"
    path.write_text(
        "[run]\nseed = 9\nshots = 50\n\n"
        "[noise]\npreset = \"imperfect\"\nt2 = \"100us\"\n"
    )
    cfg = load_config(str(path))
    assert cfg.seed == 9
    assert cfg.n_shots == 50
    assert cfg.noise.t2 == pytest.approx(100e-6)
    assert cfg.noise.duty == pytest.approx(0.3)  # preset base survives overrides


def test_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[run]\nsede = 3\n")
    with pytest.raises(ValueError, match="unknown key"):
        load_config(str(path))
    path.write_text("[rnu]\nseed = 3\n")
    with pytest.raises(ValueError, match="unknown section"):
        load_config(str(path))


def test_config_t2_none_disables_decay(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("[noise]\npreset = \"imperfect\"\nt2 = \"none\"\n")
    cfg = load_config(str(path))
    assert cfg.noise.t2 is None
    assert cfg.noise.contrast(1.0) == pytest.approx(1.0 - 4 * 0.05**2)


def test_qfi_curve_outputs(tmp_path):
    result = run("qfi-curve", "--out", str(tmp_path))
    assert result.exit_code == 0, result.output
    table = (tmp_path / "qfi_curve.csv").read_text().splitlines()
    assert table[0] == "# spinprobe 0.1.0"
    assert "# command: qfi-curve" in table
    body = [ln for ln in table if not ln.startswith("#")]
    assert body[0] == "variant,time_s,qfi"
    assert len(body) == 1 + 2 * 91
    summary = read_summary(tmp_path / "qfi_curve_summary.txt")
    assert float(summary["controlled_loglog_slope"]) == pytest.approx(4.0, abs=0.05)
    assert float(summary["uncontrolled_loglog_slope"]) == pytest.approx(2.0, abs=0.05)


def test_qfi_curve_rerun_byte_identical(tmp_path):
    run("qfi-curve", "--out", str(tmp_path / "a"))
    run("qfi-curve", "--out", str(tmp_path / "b"))
    assert (tmp_path / "a/qfi_curve.csv").read_bytes() == (
        tmp_path / "b/qfi_curve.csv"
    ).read_bytes()


def test_qfi_curve_rejects_empty_grid(tmp_path):
    cfgfile = tmp_path / "run.toml"
    cfgfile.write_text("[qfi]\nmin_periods = 50\nmax_periods = 50\n")
    result = run("qfi-curve", "--config", str(cfgfile), "--out", str(tmp_path))
    assert result.exit_code != 0
    assert "periods" in all_output(result)


def test_sensitivity_and_fit_pipeline(tmp_path):
    cfgfile = tmp_path / "run.toml"
    cfgfile.write_text(
        "[sensitivity]\nmax_time = \"40us\"\n\n[run]\nshots = 200\nreplicates = 8\n"
    )
    result = run(
        "sensitivity", "--config", str(cfgfile), "--out", str(tmp_path), "--seed", "9"
    )
    assert result.exit_code == 0, result.output
    table = (tmp_path / "sensitivity.csv").read_text().splitlines()
    assert "# seed: 9" in table  # flag wins over the config default
    body = [ln for ln in table if not ln.startswith("#")]
    assert len(body) == 1 + 3  # header plus 20, 30, 40 us
    summary = read_summary(tmp_path / "sensitivity_summary.txt")
    assert summary["fit_status"] == "ok"
    assert float(summary["exponent"]) == pytest.approx(-2.0, abs=0.3)
    assert summary["failure_fraction"] == "0.0"

    fitted = run("fit", str(tmp_path / "sensitivity.csv"), "--out", str(tmp_path))
    assert fitted.exit_code == 0, fitted.output
    fit_summary = read_summary(tmp_path / "fit_summary.txt")
    assert float(fit_summary["slope"]) == pytest.approx(float(summary["exponent"]))
    assert (tmp_path / "chi2_map.csv").exists()
    contours = (tmp_path / "chi2_contours.csv").read_text().splitlines()
    rows = [ln for ln in contours if not ln.startswith("#")]
    assert rows[0] == "confidence,slope,intercept"
    assert len(rows) > 10


def test_sensitivity_single_point_reports_fit_failure(tmp_path):
    cfgfile = tmp_path / "run.toml"
    cfgfile.write_text(
        "[sensitivity]\nmax_time = \"25us\"\n\n[run]\nshots = 100\nreplicates = 6\n"
    )
    result = run("sensitivity", "--config", str(cfgfile), "--out", str(tmp_path))
    assert result.exit_code == 0, result.output  # dataset written, fit reported failed
    summary = read_summary(tmp_path / "sensitivity_summary.txt")
    assert summary["fit_status"].startswith("failed")


def test_sensitivity_preset_flag(tmp_path):
    cfgfile = tmp_path / "run.toml"
    cfgfile.write_text("[sensitivity]\nmax_time = \"40us\"\n\n[run]\nreplicates = 6\n")
    result = run(
        "sensitivity", "--config", str(cfgfile), "--out", str(tmp_path), "--imperfect"
    )
    assert result.exit_code == 0, result.output
    header = (tmp_path / "sensitivity.csv").read_text().splitlines()
    assert "# config: noise.preset=imperfect" in header
    assert "# config: run.shots=400" in header


def test_scan2d_single_cell(tmp_path):
    cfgfile = tmp_path / "run.toml"
    cfgfile.write_text(
        "[scan2d]\nfreq_start_hz = 5e4\nfreq_stop_hz = 5e4\nfreq_points = 1\n"
        "phase_points = 1\nreplicates = 30\n"
    )
    result = run("scan2d", "--config", str(cfgfile), "--out", str(tmp_path))
    assert result.exit_code == 0, result.output
    summary = read_summary(tmp_path / "scan2d_summary.txt")
    assert summary["peak_index_freq"] == "0"
    assert summary["peak_index_phase"] == "0"
    assert float(summary["peak_control_freq_hz"]) == pytest.approx(50e3)
    assert summary["cells"] == "1"


def test_alp_outputs(tmp_path):
    result = run("alp", "--out", str(tmp_path))
    assert result.exit_code == 0, result.output
    summary = read_summary(tmp_path / "alp_summary.txt")
    assert float(summary["anchor_delta_omega"]) == pytest.approx(1250.0)
    assert float(summary["anchor_coupling_gev_inv"]) == pytest.approx(416.6667, rel=1e-4)
    table = [
        ln for ln in (tmp_path / "alp_reach.csv").read_text().splitlines()
        if not ln.startswith("#")
    ]
    assert table[0] == "time_s,probe_count,g_limit_gev_inv"
    assert len(table) == 1 + 25 * 27


def test_unknown_config_key_fails_command(tmp_path):
    cfgfile = tmp_path / "bad.toml"
    cfgfile.write_text("[drive]\nomega0 = 1.0\n")
    result = run("qfi-curve", "--config", str(cfgfile), "--out", str(tmp_path))
    assert result.exit_code != 0
    assert "unknown key" in all_output(result)


def test_fit_rejects_unusable_dataset(tmp_path):
    path = tmp_path / "thin.csv"
    path.write_text(
        "observation_time_s,target,controlled,inverse_sensitivity,std_error,"
        "slope,slope_err,significant,halfwidth,scan_points,n_shots,replicates,"
        "replicates_used,failures\n"
        "2e-05,frequency,True,100.0,1.0,0.001,0.0001,True,10.0,7,100,22,22,0\n"
    )
    result = run("fit", str(path), "--out", str(tmp_path))
    assert result.exit_code != 0
    assert "fit failed" in all_output(result)
