"""Command-line interface: figure-ready datasets and summary reports.

Every output file starts with a '#'-prefixed header recording the artifact
version, the subcommand, the seed and the full configuration, so a dataset
can always be traced back to the run that produced it; reruns with the same
inputs are byte-identical.  Tables are plain CSV, reports are 'key: value'
text.  Log messages go to standard error only.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, alp as alp_mod, analysis
from . import experiment as ex
from . import fisher
from .config import RunConfig, describe, load_config

log = logging.getLogger("spinprobe")

TWO_PI = 2.0 * math.pi


def _setup_logging() -> None:
    root = logging.getLogger("spinprobe")
    for handler in root.handlers:
        if isinstance(handler, logging.StreamHandler):
            handler.setStream(sys.stderr)
            break
    else:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
        root.addHandler(handler)
    root.setLevel(logging.INFO)


def _header(command: str, cfg: RunConfig) -> list[str]:
    lines = [
        f"# spinprobe {__version__}",
        f"# command: {command}",
        f"# seed: {cfg.seed}",
    ]
    lines.extend(f"# config: {entry}" for entry in describe(cfg))
    return lines


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list[str], columns: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in header:
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    log.info("wrote %s", path)


def _write_summary(path: Path, header: list[str], pairs) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in header:
            fh.write(line + "\n")
        for key, value in pairs:
            fh.write(f"{key}: {_fmt(value)}\n")
    log.info("wrote %s", path)


def _load(config_path, seed, out_dir) -> RunConfig:
    try:
        cfg = load_config(config_path)
    except (ValueError, OSError) as err:
        raise click.ClickException(f"bad config: {err}") from err
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=seed)
    if out_dir is not None:
        cfg = dataclasses.replace(cfg, out_dir=out_dir)
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    return cfg


config_option = click.option(
    "--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
    help="TOML configuration file.",
)
seed_option = click.option("--seed", type=click.IntRange(min=0), default=None, help="RNG seed.")
out_option = click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
                          help="Output directory (default: current directory or run.out).")
preset_flag = click.option(
    "--ideal/--imperfect", "ideal", default=None,
    help="Select the noiseless or the imperfection-budget preset.",
)


@click.group()
@click.version_option(version=__version__, prog_name="spinprobe")
def main() -> None:
    """Simulated two-level probe: QFI curves, sensitivity scans, ALP reach."""
    _setup_logging()


@main.command("qfi-curve")
@config_option
@seed_option
@out_option
def cmd_qfi_curve(config_path, seed, out_dir) -> None:
    """Tabulate the controlled and uncontrolled QFI versus time."""
    cfg = _load(config_path, seed, out_dir)
    opts = cfg.qfi
    period = TWO_PI / cfg.drive.omega
    ks = np.arange(opts.min_periods, opts.max_periods + 1)
    controlled_times = ks * period
    free_times = (ks - 0.25) * period

    curve_c = fisher.qfi_curve(opts.target, cfg.drive, True, controlled_times)
    curve_u = fisher.qfi_curve(opts.target, cfg.drive, False, free_times)

    rows = []
    for t, q in zip(curve_c.times, curve_c.qfi_values):
        rows.append(("controlled", float(t), float(q)))
    for t, q in zip(curve_u.times, curve_u.qfi_values):
        rows.append(("uncontrolled", float(t), float(q)))

    header = _header("qfi-curve", cfg)
    out = Path(cfg.out_dir)
    _write_csv(out / "qfi_curve.csv", header, ["variant", "time_s", "qfi"], rows)

    pairs = [("target", opts.target), ("points_per_variant", ks.size)]
    for label, curve in (("controlled", curve_c), ("uncontrolled", curve_u)):
        values = np.asarray(curve.qfi_values)
        if np.all(values > 0.0):
            fit = analysis.fit_loglog_arrays(curve.times, values, 0.01 * values)
            pairs.append((f"{label}_loglog_slope", fit.slope))
        else:
            pairs.append((f"{label}_loglog_slope", "undefined (zero values)"))
    _write_summary(out / "qfi_curve_summary.txt", header, pairs)


@main.command("sensitivity")
@config_option
@seed_option
@out_option
@preset_flag
@click.option("--controlled/--uncontrolled", "controlled", default=None,
              help="Override the control setting from the config.")
def cmd_sensitivity(config_path, seed, out_dir, ideal, controlled) -> None:
    """Measure inverse sensitivity versus interrogation time."""
    cfg = _load(config_path, seed, out_dir)
    if ideal is not None:
        cfg = cfg.with_preset("ideal" if ideal else "imperfect")
    opts = cfg.sensitivity
    use_control = opts.controlled if controlled is None else controlled

    times = (
        ex.controlled_time_grid(opts.max_time, opts.step)
        if use_control
        else ex.uncontrolled_time_grid(cfg.drive, opts.max_time)
    )
    log.info(
        "sensitivity: target=%s controlled=%s preset=%s points=%d",
        opts.target, use_control, cfg.preset_name, times.size,
    )
    points = ex.sensitivity_scaling_dataset(
        cfg.seed, opts.target, cfg.drive, cfg.noise, use_control,
        times=times, max_time=opts.max_time,
        n_shots=cfg.n_shots, replicates=cfg.replicates, scan_points=opts.scan_points,
    )

    columns = [
        "observation_time_s", "target", "controlled", "inverse_sensitivity",
        "std_error", "slope", "slope_err", "significant", "halfwidth",
        "scan_points", "n_shots", "replicates", "replicates_used", "failures",
    ]
    rows = [
        (
            p.observation_time, p.target, p.controlled, p.inverse_sensitivity,
            p.std_error, p.slope, p.slope_err, p.significant, p.halfwidth,
            p.scan_points, p.n_shots, p.replicates, p.replicates_used, p.failures,
        )
        for p in points
    ]
    header = _header("sensitivity", cfg)
    out = Path(cfg.out_dir)
    _write_csv(out / "sensitivity.csv", header, columns, rows)

    usable = [p for p in points if p.significant and math.isfinite(p.inverse_sensitivity)]
    pairs = [
        ("target", opts.target),
        ("controlled", use_control),
        ("preset", cfg.preset_name),
        ("points_total", len(points)),
        ("points_usable", len(usable)),
    ]
    try:
        fit = analysis.fit_loglog(usable)
        pairs += [
            ("fit_status", "ok"),
            ("exponent", fit.slope),
            ("exponent_err", fit.slope_err),
            ("intercept", fit.intercept),
            ("chi2_reduced", fit.chi2_reduced),
            ("dof", fit.dof),
        ]
    except ValueError as err:
        log.error("scaling fit failed: %s", err)
        pairs.append(("fit_status", f"failed ({err})"))

    attempts = sum(p.replicates for p in points)
    failures = sum(p.failures for p in points)
    fraction = failures / attempts if attempts else 0.0
    pairs += [("replicate_failures", failures), ("failure_fraction", fraction)]
    _write_summary(out / "sensitivity_summary.txt", header, pairs)

    if fraction >= cfg.failure_threshold:
        log.error(
            "failure fraction %.3f exceeds threshold %.3f", fraction, cfg.failure_threshold
        )
        sys.exit(1)


@main.command("scan2d")
@config_option
@seed_option
@out_option
@preset_flag
def cmd_scan2d(config_path, seed, out_dir, ideal) -> None:
    """Map measured QFI over control frequency and control phase."""
    cfg = _load(config_path, seed, out_dir)
    if ideal is not None:
        cfg = cfg.with_preset("ideal" if ideal else "imperfect")
    opts = cfg.scan2d
    freqs = np.linspace(opts.freq_start, opts.freq_stop, opts.freq_points)
    phases = np.linspace(-math.pi, math.pi, opts.phase_points)
    log.info(
        "scan2d: %dx%d grid, T=%s s, replicates=%d",
        opts.freq_points, opts.phase_points, opts.total_time, opts.replicates,
    )
    noise = cfg.noise if cfg.preset_name != "ideal" else None
    grid = ex.qfi_scan_2d(
        cfg.seed, cfg.drive, noise, opts.total_time,
        control_freqs=freqs, control_phases=phases,
        n_shots=opts.n_shots, replicates=opts.replicates,
    )

    rows = []
    for i, f in enumerate(grid.control_freqs):
        for j, p in enumerate(grid.control_phases):
            rows.append((
                float(f), float(p), float(grid.qfi_estimates[i, j]),
                float(grid.slopes[i, j]), int(grid.failures[i, j]),
            ))
    header = _header("scan2d", cfg)
    out = Path(cfg.out_dir)
    _write_csv(
        out / "scan2d.csv", header,
        ["control_freq_hz", "control_phase_rad", "qfi", "slope", "failed_replicates"],
        rows,
    )

    i0, j0 = grid.peak_index
    cells = grid.qfi_estimates.size
    failed_cells = int(np.sum(~np.isfinite(grid.qfi_estimates)))
    attempts = cells * grid.replicates
    failures = int(np.sum(grid.failures))
    fraction = failures / attempts
    pairs = [
        ("peak_index_freq", i0),
        ("peak_index_phase", j0),
        ("peak_control_freq_hz", float(grid.control_freqs[i0])),
        ("peak_control_phase_rad", float(grid.control_phases[j0])),
        ("peak_qfi", float(grid.qfi_estimates[i0, j0])),
        ("cells", cells),
        ("failed_cells", failed_cells),
        ("replicate_failures", failures),
        ("failure_fraction", fraction),
    ]
    _write_summary(out / "scan2d_summary.txt", header, pairs)

    if fraction >= cfg.failure_threshold:
        log.error(
            "failure fraction %.3f exceeds threshold %.3f", fraction, cfg.failure_threshold
        )
        sys.exit(1)


def read_sensitivity_csv(path) -> list[ex.SensitivityPoint]:
    """Read back a sensitivity.csv table written by this CLI."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if not ln.startswith("#")]
    if not lines:
        raise ValueError(f"{path}: no data rows")
    columns = lines[0].split(",")
    points = []
    for ln in lines[1:]:
        if not ln:
            continue
        rec = dict(zip(columns, ln.split(",")))
        try:
            points.append(ex.SensitivityPoint(
                observation_time=float(rec["observation_time_s"]),
                target=rec["target"],
                controlled=rec["controlled"] == "True",
                inverse_sensitivity=float(rec["inverse_sensitivity"]),
                std_error=float(rec["std_error"]),
                slope=float(rec["slope"]),
                slope_err=float(rec["slope_err"]),
                significant=rec["significant"] == "True",
                halfwidth=float(rec["halfwidth"]),
                scan_points=int(rec["scan_points"]),
                n_shots=int(rec["n_shots"]),
                replicates=int(rec["replicates"]),
                replicates_used=int(rec["replicates_used"]),
                failures=int(rec["failures"]),
            ))
        except (KeyError, ValueError) as err:
            raise ValueError(f"{path}: malformed row {ln!r} ({err})") from err
    return points


@main.command("fit")
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False))
@config_option
@seed_option
@out_option
def cmd_fit(dataset, config_path, seed, out_dir) -> None:
    """Fit a power law to a sensitivity table and map its chi-square surface."""
    cfg = _load(config_path, seed, out_dir)
    try:
        points = read_sensitivity_csv(dataset)
    except (OSError, ValueError) as err:
        raise click.ClickException(str(err)) from err
    usable = [p for p in points if p.significant and math.isfinite(p.inverse_sensitivity)]
    log.info("fit: %d points read, %d usable", len(points), len(usable))
    try:
        fit = analysis.fit_loglog(usable)
    except ValueError as err:
        raise click.ClickException(f"fit failed: {err}") from err

    k = cfg.fit.range_sigmas
    slope_range = (fit.slope - k * fit.slope_err, fit.slope + k * fit.slope_err)
    intercept_range = (
        fit.intercept - k * fit.intercept_err,
        fit.intercept + k * fit.intercept_err,
    )
    cmap = analysis.chi2_map(usable, slope_range, intercept_range, cfg.fit.resolution)

    header = _header("fit", cfg)
    out = Path(cfg.out_dir)
    rows = []
    for i, m in enumerate(cmap.slope_axis):
        for j, b in enumerate(cmap.intercept_axis):
            rows.append((float(m), float(b), float(cmap.chi2_values[i, j])))
    _write_csv(out / "chi2_map.csv", header, ["slope", "intercept", "chi2_reduced"], rows)

    crows = []
    for level, poly in cmap.contours:
        for s, b in poly:
            crows.append((float(level), float(s), float(b)))
    _write_csv(out / "chi2_contours.csv", header, ["confidence", "slope", "intercept"], crows)

    pairs = [
        ("dataset", str(dataset)),
        ("points_used", len(usable)),
        ("slope", fit.slope),
        ("slope_err", fit.slope_err),
        ("intercept", fit.intercept),
        ("intercept_err", fit.intercept_err),
        ("cov_slope_intercept", float(fit.covariance[0, 1])),
        ("chi2_reduced", fit.chi2_reduced),
        ("dof", fit.dof),
        ("flagged_points", ",".join(str(i) for i in fit.flagged) or "none"),
        ("ellipse_area_90", analysis.confidence_ellipse_area(fit, 0.90)),
        ("ellipse_area_95", analysis.confidence_ellipse_area(fit, 0.95)),
    ]
    _write_summary(out / "fit_summary.txt", header, pairs)


@main.command("alp")
@config_option
@seed_option
@out_option
def cmd_alp(config_path, seed, out_dir) -> None:
    """Tabulate the dark-matter coupling reach over time and probe number."""
    cfg = _load(config_path, seed, out_dir)
    opts = cfg.alp
    params = alp_mod.AlpParams(
        m_a=TWO_PI * opts.m_a_hz,
        rho_dm=opts.rho_dm,
        v_anchor=opts.v_anchor,
        g_ref=opts.g_ref,
    )
    times = np.geomspace(opts.t_min, opts.t_max, opts.t_points)
    counts = np.geomspace(opts.n_min, opts.n_max, opts.n_points)
    grid = alp_mod.reach_grid(times, counts, params)

    rows = []
    for i, t in enumerate(grid.times):
        for j, n in enumerate(grid.probe_counts):
            rows.append((float(t), float(n), float(grid.g_limits[i, j])))
    header = _header("alp", cfg)
    out = Path(cfg.out_dir)
    _write_csv(
        out / "alp_reach.csv", header,
        ["time_s", "probe_count", "g_limit_gev_inv"], rows,
    )

    anchor_delta = alp_mod.min_detectable_amplitude(80e-6, 100)
    pairs = [
        ("anchor_time_s", 80e-6),
        ("anchor_shots", 100),
        ("anchor_delta_omega", anchor_delta),
        ("anchor_coupling_gev_inv", alp_mod.coupling_bound(anchor_delta, params)),
        ("corner_time_s", float(grid.times[-1])),
        ("corner_probe_count", float(grid.probe_counts[-1])),
        ("corner_coupling_gev_inv", float(grid.g_limits[-1, -1])),
    ]
    _write_summary(out / "alp_summary.txt", header, pairs)


if __name__ == "__main__":
    main()
