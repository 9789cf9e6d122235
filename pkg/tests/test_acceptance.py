"""End-to-end acceptance checks for the headline claims of this package.

Each test exercises one quantitative claim at its quoted tolerance and
prints a single PASS/FAIL line with the measured numbers, so a full run
reads as a seven-line scorecard (pytest runs with -s via pyproject).
"""

import math

import numpy as np

from spinprobe import alp, analysis
from spinprobe import dynamics as dyn
from spinprobe import experiment as ex
from spinprobe import fisher


def report(label: str, ok: bool, detail: str) -> bool:
    print(f"{label}: {'PASS' if ok else 'FAIL'} ({detail})", flush=True)
    return ok


def loglog_slope(times, values):
    values = np.asarray(values, dtype=float)
    fit = analysis.fit_loglog_arrays(times, values, 0.01 * values)
    return fit.slope


def dataset_exponent(seed, target, controlled, noise, times, n_shots,
                     replicates=22, max_time=80e-6):
    points = ex.sensitivity_scaling_dataset(
        seed, target, ex.default_drive(), noise, controlled,
        times=times, max_time=max_time, n_shots=n_shots, replicates=replicates,
    )
    usable = [p for p in points if p.significant and math.isfinite(p.inverse_sensitivity)]
    return analysis.fit_loglog(usable), points


def test_qfi_time_scaling():
    drive = ex.default_drive()
    period = 2.0 * math.pi / drive.omega
    ks = np.arange(10, 101)
    slopes = {}
    for label, target, controlled, times in (
        ("ctrl-freq", "frequency", True, ks * period),
        ("free-freq", "frequency", False, (ks - 0.25) * period),
        ("ctrl-amp", "amplitude", True, ks * period),
    ):
        curve = fisher.qfi_curve(target, drive, controlled, times)
        slopes[label] = loglog_slope(curve.times, curve.qfi_values)
    ok = (
        abs(slopes["ctrl-freq"] - 4.0) <= 0.05
        and abs(slopes["free-freq"] - 2.0) <= 0.05
        and abs(slopes["ctrl-amp"] - 2.0) <= 0.05
    )
    detail = (
        f"controlled frequency {slopes['ctrl-freq']:+.4f} vs 4.00+-0.05, "
        f"uncontrolled frequency {slopes['free-freq']:+.4f} vs 2.00+-0.05, "
        f"controlled amplitude {slopes['ctrl-amp']:+.4f} vs 2.00+-0.05"
    )
    assert report("qfi time scaling", ok, detail)


def test_ideal_sensitivity_exponents():
    drive = ex.default_drive()
    noise = ex.NoiseModel.ideal()
    period = 2.0 * math.pi / drive.omega
    ks = np.array([25.0, 50.0, 75.0, 100.0])
    got = {}
    for label, target, controlled, times in (
        ("ctrl-freq", "frequency", True, ks * period),
        ("free-freq", "frequency", False, (ks - 0.25) * period),
        ("ctrl-amp", "amplitude", True, ks * period),
        ("free-amp", "amplitude", False, (ks - 0.25) * period),
    ):
        fit, _ = dataset_exponent(
            0, target, controlled, noise, times, n_shots=10_000, max_time=2.1e-3
        )
        got[label] = fit.slope
    ok = (
        abs(got["ctrl-freq"] + 2.0) <= 0.02
        and abs(got["free-freq"] + 1.0) <= 0.02
        and abs(got["ctrl-amp"] + 1.0) <= 0.02
        and abs(got["free-amp"]) <= 0.05
    )
    detail = (
        f"controlled frequency {got['ctrl-freq']:+.4f} vs -2.00+-0.02, "
        f"uncontrolled frequency {got['free-freq']:+.4f} vs -1.00+-0.02, "
        f"controlled amplitude {got['ctrl-amp']:+.4f} vs -1.00+-0.02, "
        f"uncontrolled amplitude {got['free-amp']:+.4f} vs 0.00+-0.05"
    )
    assert report("ideal sensitivity scaling", ok, detail)


def test_imperfect_sensitivity_exponents():
    drive = ex.default_drive()
    run = ex.preset("imperfect")
    fit_c, _ = dataset_exponent(
        0, "frequency", True, run.noise, ex.controlled_time_grid(),
        n_shots=run.n_shots, replicates=run.replicates,
    )
    fit_u, _ = dataset_exponent(
        0, "frequency", False, run.noise, ex.uncontrolled_time_grid(drive),
        n_shots=run.n_shots, replicates=run.replicates,
    )
    ok = -1.9 <= fit_c.slope <= -1.6 and -1.0 <= fit_u.slope <= -0.8
    detail = (
        f"controlled {fit_c.slope:+.3f} vs [-1.9, -1.6], "
        f"uncontrolled {fit_u.slope:+.3f} vs [-1.0, -0.8]"
    )
    assert report("imperfect sensitivity scaling", ok, detail)


def test_alp_reach_anchors():
    delta = alp.min_detectable_amplitude(80e-6, 100)
    bound = float(alp.coupling_bound(delta))
    corner = float(alp.reach_grid().g_limits[-1, -1])
    ok = (
        abs(delta - 1250.0) <= 1e-9 * 1250.0
        and abs(bound - 400.0) <= 0.10 * 400.0
        and 1e-10 <= corner <= 1e-6
    )
    detail = (
        f"floor(80us, 100) = {delta:.6f} /s vs 1250, "
        f"coupling {bound:.2f} vs 400+-10% GeV^-1, "
        f"deep corner {corner:.3e} in [1e-10, 1e-6] GeV^-1"
    )
    assert report("dark-matter reach anchors", ok, detail)


def test_scan_peak_at_matched_control():
    drive = ex.default_drive()
    cell_f = 1e3
    cell_p = math.pi / 20.0
    hits = 0
    peaks = []
    for seed in range(10):
        grid = ex.qfi_scan_2d(seed, drive, None, 75e-6, n_shots=100, replicates=5000)
        f, p = ex.peak_location(grid)
        folded = abs(p) % math.pi
        dp = min(folded, math.pi - folded)
        if abs(f - 50e3) <= cell_f + 1e-9 and dp <= cell_p + 1e-9:
            hits += 1
        peaks.append((f, p))
    ok = hits == 10
    worst = max(abs(f - 50e3) for f, _ in peaks)
    detail = f"{hits}/10 seeds peak at matched cell, worst |f - 50 kHz| = {worst:.0f} Hz"
    assert report("2-d scan peak placement", ok, detail)


def test_oracle_equivalence():
    rng = np.random.default_rng(42)
    worst_phase = 0.0
    for _ in range(1000):
        w = rng.uniform(2e5, 8e5)
        drive = dyn.DriveParams(
            omega0=rng.uniform(1e5, 1e6),
            omega_d=rng.uniform(1e3, 1e5),
            omega=w,
            theta=rng.uniform(-math.pi, math.pi),
        )
        total_time = rng.uniform(2.0, 12.0) * 2.0 * math.pi / w
        schedule = None
        if rng.random() < 0.5:
            wc = w * rng.uniform(0.8, 1.2)
            tau = rng.uniform(0.0, 0.2) * math.pi / wc
            schedule = dyn.make_optimal_schedule(
                wc, rng.uniform(-math.pi, math.pi), total_time, tau
            )
        closed = dyn.accumulated_phase(drive, schedule, total_time)
        quad = dyn.accumulated_phase_oracle(drive, schedule, total_time)
        worst_phase = max(worst_phase, abs(closed - quad) / abs(quad))

    worst_fd = 0.0
    for _ in range(200):
        w = rng.uniform(2e5, 8e5)
        drive = dyn.DriveParams(
            omega0=rng.uniform(1e5, 1e6),
            omega_d=rng.uniform(1e3, 1e5),
            omega=w,
            theta=rng.uniform(-math.pi, math.pi),
        )
        total_time = rng.uniform(2.0, 12.0) * 2.0 * math.pi / w
        for target, step in (
            ("frequency", 1e-5 * drive.omega),
            ("amplitude", 1e-6 * drive.omega_d),
        ):
            phi_c = fisher.matched_control_phase(target, drive.theta)
            schedule = dyn.make_optimal_schedule(w, phi_c, total_time, 0.0)
            fd = fisher.phase_sensitivity_fd(target, drive, schedule, total_time, step)
            bound = fisher.qfi_control_bound(target, drive, schedule, total_time)
            worst_fd = max(worst_fd, abs(fd * fd - bound) / bound)

    ok = worst_phase <= 1e-9 and worst_fd <= 1e-6
    detail = (
        f"closed vs quadrature worst rel {worst_phase:.2e} vs 1e-9 (1000 draws), "
        f"finite-difference vs rectified bound worst rel {worst_fd:.2e} vs 1e-6"
    )
    assert report("oracle equivalence", ok, detail)


def test_statistical_properties():
    drive = ex.default_drive()
    noise = ex.NoiseModel(t2=80e-6, envelope="gaussian", prep_error=0.05)
    total_time = 40e-6
    phi_c = fisher.matched_control_phase("frequency", drive.theta)
    schedule = dyn.make_optimal_schedule(drive.omega, phi_c, total_time, 0.0)
    scaled = []
    for i, n in enumerate((100, 400, 1600)):
        estimates = [
            ex.estimate_phase(
                ex.substream(9, 1, i, r), drive, schedule, noise, total_time, n
            ).phi_hat
            for r in range(5000)
        ]
        scaled.append(float(np.std(estimates, ddof=1)) * math.sqrt(n))
    shot_spread = max(scaled) / min(scaled) - 1.0
    ok_shot = shot_spread <= 0.05

    times = np.geomspace(1e-5, 1e-4, 8)
    truth = -2.0
    values = 3.7 * times**truth
    errors = 0.01 * values
    sigma_log = errors / (analysis.LN10 * values)
    hits = 0
    for k in range(1000):
        draw = np.random.default_rng(10_000 + k).normal(0.0, sigma_log)
        fit = analysis.fit_loglog_arrays(times, values * 10.0**draw, errors)
        if abs(fit.slope - truth) <= 1.96 * fit.slope_err:
            hits += 1
    coverage = hits / 1000.0
    ok_cover = abs(coverage - 0.95) <= 0.02

    period = 2.0 * math.pi / drive.omega
    ks = np.array([25.0, 50.0, 75.0, 100.0])
    fit, points = dataset_exponent(
        0, "frequency", True, ex.NoiseModel.ideal(), ks * period,
        n_shots=10_000, max_time=2.1e-3,
    )
    usable = [p for p in points if p.significant and math.isfinite(p.inverse_sensitivity)]
    span = 5.0
    slope_range = (fit.slope - span * fit.slope_err, fit.slope + span * fit.slope_err)
    icept_range = (
        fit.intercept - span * fit.intercept_err,
        fit.intercept + span * fit.intercept_err,
    )
    resolution = 101
    cmap = analysis.chi2_map(usable, slope_range, icept_range, resolution)
    i0, j0 = cmap.min_index
    cell_s = (slope_range[1] - slope_range[0]) / (resolution - 1)
    cell_i = (icept_range[1] - icept_range[0]) / (resolution - 1)
    ok_min = (
        abs(cmap.slope_axis[i0] - fit.slope) <= cell_s * (1 + 1e-9)
        and abs(cmap.intercept_axis[j0] - fit.intercept) <= cell_i * (1 + 1e-9)
    )
    level95 = float(np.min(cmap.chi2_values)) + analysis.DELTA_CHI2_TWO_PARAM[0.95] / fit.dof
    col = int(np.argmin(np.abs(cmap.slope_axis - truth)))
    ok_slope2 = float(np.min(cmap.chi2_values[col, :])) <= level95

    ok = ok_shot and ok_cover and ok_min and ok_slope2
    detail = (
        f"shot-noise 1/sqrt(n) spread {100 * shot_spread:.2f}% vs 5%, "
        f"CI coverage {coverage:.3f} vs 0.95+-0.02, "
        f"chi2 minimum {'at' if ok_min else 'OFF'} the least-squares optimum, "
        f"slope -2 {'inside' if ok_slope2 else 'OUTSIDE'} the 95% contour"
    )
    assert report("statistical properties", ok, detail)
