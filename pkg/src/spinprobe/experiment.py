"""Simulated Ramsey interrogation of the modulated dephasing probe.

A run prepares an equal superposition, lets it accumulate phase under the
drive (optionally toggled by a pi-pulse train), closes the interferometer
with an analysis rotation of settable phase and reads out in the energy
basis.  The excited-state probability follows the fringe

    p = (1/2) * (1 - C(T) * cos(phi + beta)),

with beta the analysis phase and C(T) the contrast left by decoherence and
preparation/readout errors.  Working points sit mid-fringe (beta is pi/2
minus the calibrated center phase, the standard differential-Ramsey practice
that also cancels the static Stark phase), phases are recovered by arcsin
inversion against the calibrated contrast, and parameter slopes come from
straight-line fits over small symmetric scans.

Randomness is reproducible and order-independent: every replicate draws from
its own counter-based substream keyed by (seed, path indices), so reordering
or parallelizing scan points never changes a sampled value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import (
    ControlSchedule,
    DriveParams,
    QubitState,
    _segments,
    _splitting_integral,
    make_optimal_schedule,
)
from .fisher import matched_control_phase, phase_derivative, qfi_bures

__all__ = [
    "NoiseModel",
    "RunPreset",
    "preset",
    "default_drive",
    "substream",
    "fringe_phase",
    "ramsey_probability",
    "fringe_probability",
    "ramsey_shot",
    "FringeInversionError",
    "PhaseEstimate",
    "estimate_phase",
    "default_scan_halfwidth",
    "SensitivityPoint",
    "measure_sensitivity",
    "controlled_time_grid",
    "uncontrolled_time_grid",
    "sensitivity_scaling_dataset",
    "ScanGrid",
    "qfi_scan_2d",
    "peak_location",
]

# Scan design constants: target phase excursion at the scan edge, the
# detuning-time cap that keeps frequency scans inside the linear zone of the
# central rectification lobe, and the fraction of the modulation depth an
# amplitude scan may traverse (keeps the depth positive).  The 2-D map uses
# a wider excursion: its two-point slopes tolerate secant compression, and
# the extra lever arm beats shot noise down enough to resolve the cos^2
# falloff between neighboring control-phase cells.
TARGET_EXCURSION = 0.35
MAP_EXCURSION = 1.0
DETUNING_TIME_CAP = 1.0
AMPLITUDE_FRACTION_CAP = 0.9

# Per-completed-pulse phase retention of the imperfect preset, calibrated so
# the controlled scaling exponent matches hardware-like pulse-error pileup.
IMPERFECT_RETENTION = 0.90

_ENVELOPES = ("gaussian", "exponential")
_BALANCED = QubitState(p0=0.5, p1=0.5, phi=0.0)


def substream(seed: int, *path: int) -> np.random.Generator:
    """Counter-based generator for the substream keyed by (seed, *path)."""
    entropy = (int(seed),) + tuple(int(p) for p in path)
    if any(p < 0 for p in entropy[1:]):
        raise ValueError("path indices must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


@dataclass(frozen=True)
class NoiseModel:
    """Imperfections of the probe and its control.

    Parameters
    ----------
    t2 : float or None
        Coherence time of the fringe envelope; ``None`` disables decay.
    envelope : str
        "gaussian" (exp(-(T/t2)^2)) or "exponential" (exp(-T/t2)).
    prep_error : float
        Preparation/readout tilt epsilon (populations 1/2 +- epsilon);
        contrast shrinks by 1 - 4*epsilon^2.
    duty : float
        Pi-pulse duration as a fraction of the pulse spacing pi/omega_c.
    pulse_retention : float
        Fraction of the coherent phase response surviving each completed
        pulse; phase accumulated after n pulses is weighted by retention^n.
        1.0 recovers ideal pulses.
    """

    t2: float | None = None
    envelope: str = "gaussian"
    prep_error: float = 0.0
    duty: float = 0.0
    pulse_retention: float = 1.0

    def __post_init__(self) -> None:
        if self.t2 is not None and self.t2 <= 0.0:
            raise ValueError("t2 must be positive or None")
        if self.envelope not in _ENVELOPES:
            raise ValueError(f"envelope must be one of {_ENVELOPES}")
        if not 0.0 <= self.prep_error < 0.5:
            raise ValueError("prep_error must lie in [0, 0.5)")
        if not 0.0 <= self.duty < 1.0:
            raise ValueError("duty must lie in [0, 1)")
        if not 0.0 < self.pulse_retention <= 1.0:
            raise ValueError("pulse_retention must lie in (0, 1]")

    def contrast(self, total_time: float) -> float:
        """Fringe contrast C(T) from the envelope and preparation errors."""
        c = 1.0 - 4.0 * self.prep_error**2
        if self.t2 is not None:
            ratio = total_time / self.t2
            if self.envelope == "gaussian":
                c *= math.exp(-(ratio**2))
            else:
                c *= math.exp(-ratio)
        return c

    def pulse_duration(self, omega_c: float) -> float:
        """Pi-pulse length implied by the duty fraction at control rate omega_c."""
        return self.duty * math.pi / omega_c

    @classmethod
    def ideal(cls) -> "NoiseModel":
        return cls()

    @classmethod
    def imperfect(cls) -> "NoiseModel":
        """Hardware-like preset: finite coherence, finite pulses, pulse errors."""
        return cls(
            t2=80e-6,
            envelope="gaussian",
            prep_error=0.05,
            duty=0.3,
            pulse_retention=IMPERFECT_RETENTION,
        )


@dataclass(frozen=True)
class RunPreset:
    """Bundled noise model and statistics defaults for a named run mode."""

    noise: NoiseModel
    n_shots: int
    replicates: int


def preset(name: str) -> RunPreset:
    """Named run presets: "ideal" and "imperfect"."""
    if name == "ideal":
        return RunPreset(noise=NoiseModel.ideal(), n_shots=100, replicates=22)
    if name == "imperfect":
        return RunPreset(noise=NoiseModel.imperfect(), n_shots=400, replicates=22)
    raise ValueError(f"unknown preset {name!r}")


def default_drive() -> DriveParams:
    """Reference drive: 50 kHz modulation, depth 7.5 kHz on a 100 kHz shift."""
    return DriveParams(
        omega0=2.0 * math.pi * 100e3,
        omega_d=2.0 * math.pi * 7.5e3,
        omega=2.0 * math.pi * 50e3,
        theta=0.0,
    )


def fringe_phase(
    drive: DriveParams,
    schedule: ControlSchedule | None,
    total_time: float,
    noise: NoiseModel | None = None,
) -> float:
    """Accumulated phase including per-pulse retention damping.

    Each free-evolution segment is weighted by retention^(pulses completed
    before it); with retention = 1 this equals the ideal accumulated phase.
    """
    starts, ends, signs, before = _segments(schedule, total_time)
    weights = signs
    if noise is not None and noise.pulse_retention != 1.0:
        weights = signs * noise.pulse_retention**before
    return 2.0 * float(np.sum(weights * _splitting_integral(drive, starts, ends)))


def ramsey_probability(phi: float, analysis_phase: float, contrast: float) -> float:
    """Excited-state probability of the closed fringe."""
    if not 0.0 <= contrast <= 1.0:
        raise ValueError("contrast must lie in [0, 1]")
    return 0.5 * (1.0 - contrast * math.cos(phi + analysis_phase))


def fringe_probability(
    drive: DriveParams,
    schedule: ControlSchedule | None,
    noise: NoiseModel,
    total_time: float,
    analysis_phase: float,
) -> float:
    """Fringe probability of the full physical model at one setting."""
    phi = fringe_phase(drive, schedule, total_time, noise)
    return ramsey_probability(phi, analysis_phase, noise.contrast(total_time))


def ramsey_shot(
    rng: np.random.Generator,
    drive: DriveParams,
    schedule: ControlSchedule | None,
    noise: NoiseModel,
    total_time: float,
    analysis_phase: float,
) -> int:
    """One run of the full sequence: returns the measured population (0/1)."""
    if total_time <= 0.0:
        raise ValueError("total_time must be positive")
    p = fringe_probability(drive, schedule, noise, total_time, analysis_phase)
    return int(rng.random() < p)


class FringeInversionError(RuntimeError):
    """Raised when an estimate falls outside the invertible fringe window."""


@dataclass(frozen=True)
class PhaseEstimate:
    """Phase estimate from n readouts at one mid-fringe analysis setting."""

    phi_hat: float
    phi_std: float
    p_hat: float
    n_shots: int


def _invert_fringe(p_hat: float, n_shots: int, guess: float, contrast: float) -> PhaseEstimate:
    x = (2.0 * p_hat - 1.0) / contrast
    if abs(x) > 1.0:
        raise FringeInversionError(
            f"normalized fringe signal {x:+.3f} outside [-1, 1]; "
            "the true phase likely left the inversion window"
        )
    phi_hat = guess + math.asin(x)
    slack = 1.0 - x * x
    if slack > 0.0 and 0.0 < p_hat < 1.0:
        phi_std = 2.0 * math.sqrt(p_hat * (1.0 - p_hat) / n_shots) / (
            contrast * math.sqrt(slack)
        )
    else:
        phi_std = math.inf
    return PhaseEstimate(phi_hat=phi_hat, phi_std=phi_std, p_hat=p_hat, n_shots=n_shots)


def estimate_phase(
    rng: np.random.Generator,
    drive: DriveParams,
    schedule: ControlSchedule | None,
    noise: NoiseModel,
    total_time: float,
    n_shots: int,
    guess: float | None = None,
) -> PhaseEstimate:
    """Estimate the accumulated phase from n shots at one analysis setting.

    The analysis phase is set to pi/2 - guess (mid-fringe at the guess), so
    the fringe reads p = (1 + C*sin(phi - guess))/2 and the estimator is

        phi_hat = guess + arcsin((2*p_hat - 1)/C),

    with C the calibrated contrast.  The arcsin branch pins the estimate to
    the window |phi_hat - guess| <= pi/2, valid while the true phase stays
    inside it.  phi_std is the binomial delta-method error, about
    1/(C*sqrt(n)) near mid-fringe; it diverges at the window edge.  With
    ``guess=None`` the model's own center phase is used (a perfectly
    calibrated working point).

    Raises
    ------
    FringeInversionError
        If |2*p_hat - 1| exceeds the calibrated contrast.
    """
    if n_shots < 1:
        raise ValueError("n_shots must be at least 1")
    if guess is None:
        guess = fringe_phase(drive, schedule, total_time, noise)
    contrast = noise.contrast(total_time)
    if contrast <= 0.0:
        raise ValueError("contrast vanished; nothing to invert")
    p = fringe_probability(drive, schedule, noise, total_time, math.pi / 2.0 - guess)
    k = int(rng.binomial(n_shots, p))
    return _invert_fringe(k / n_shots, n_shots, guess, contrast)


def _with_target(drive: DriveParams, target: str, value: float) -> DriveParams:
    if target == "frequency":
        return replace(drive, omega=value)
    return replace(drive, omega_d=value)


def _target_value(drive: DriveParams, target: str) -> float:
    return drive.omega if target == "frequency" else drive.omega_d


def default_scan_halfwidth(
    target: str,
    drive: DriveParams,
    schedule: ControlSchedule | None,
    total_time: float,
    excursion: float = TARGET_EXCURSION,
) -> float:
    """Scan halfwidth keeping the fringe inversion linear and in-window.

    Chooses the parameter offset that maps to an ``excursion`` phase swing
    under the retention-free model slope, clamped by |delta_omega|*T <= 1 for
    frequency scans (stays inside the central rectification lobe, where the
    response is monotone) and by a fraction of the modulation depth for
    amplitude scans (keeps the scanned depth positive).
    """
    s_pred = abs(phase_derivative(target, drive, schedule, total_time))
    h = excursion / s_pred if s_pred > 0.0 else math.inf
    if target == "frequency":
        return min(h, DETUNING_TIME_CAP / total_time)
    if drive.omega_d <= 0.0:
        raise ValueError("amplitude scans need a positive modulation depth")
    return min(h, AMPLITUDE_FRACTION_CAP * drive.omega_d)


@dataclass(frozen=True)
class SensitivityPoint:
    """Slope-fit summary of one small parameter scan at fixed duration.

    ``inverse_sensitivity`` is 1/(2*pi*|slope|) for the frequency target
    (Hz per rad of resolved phase) and 1/|slope| for the amplitude target
    (rad/s per rad); ``std_error`` is its delta-method error from the
    replicate spread.  Points whose slope is consistent with zero at two
    standard errors are flagged non-significant and carry NaN values.
    """

    observation_time: float
    target: str
    controlled: bool
    inverse_sensitivity: float
    std_error: float
    slope: float
    slope_err: float
    significant: bool
    halfwidth: float
    scan_points: int
    n_shots: int
    replicates: int
    replicates_used: int
    failures: int
    slopes: tuple[float, ...] = ()


def measure_sensitivity(
    seed: int,
    target: str,
    drive: DriveParams,
    noise: NoiseModel,
    controlled: bool,
    total_time: float,
    scan_halfwidth: float | None = None,
    scan_points: int = 7,
    n_shots: int = 100,
    replicates: int = 22,
    stream_index: int = 0,
) -> SensitivityPoint:
    """Measure d(phi)/d(target) at one duration by a small symmetric scan.

    The estimation target (drive frequency or modulation depth) is stepped
    over ``scan_points`` values centered on its true value; each replicate
    fits a straight line through the per-point phase estimates, and the
    reported slope is the replicate mean with its standard error.  The pulse
    schedule (for ``controlled=True``: matched tone at the drive frequency
    and matched phase for the target) is programmed once at the center and
    held fixed across the scan.

    Each point is referenced to the calibrated center phase, so the static
    Stark contribution drops out of the fitted slope.  Fringe-inversion
    failures are counted and their points dropped; replicates keeping fewer
    than 3 points are discarded entirely.
    """
    if target not in ("frequency", "amplitude"):
        raise ValueError(f"target must be 'frequency' or 'amplitude', got {target!r}")
    if scan_points < 3:
        raise ValueError("a scan needs at least 3 points")
    if replicates < 2:
        raise ValueError("need at least 2 replicates for a slope error")

    if controlled:
        phi_c = matched_control_phase(target, drive.theta)
        schedule = make_optimal_schedule(
            drive.omega, phi_c, total_time, noise.pulse_duration(drive.omega)
        )
    else:
        schedule = None

    if scan_halfwidth is None:
        scan_halfwidth = default_scan_halfwidth(target, drive, schedule, total_time)
    if not (scan_halfwidth > 0.0 and math.isfinite(scan_halfwidth)):
        raise ValueError("scan_halfwidth must be positive and finite")

    center = _target_value(drive, target)
    offsets = np.linspace(-scan_halfwidth, scan_halfwidth, scan_points)
    guess = fringe_phase(drive, schedule, total_time, noise)
    scanned = [_with_target(drive, target, center + off) for off in offsets]

    slopes = []
    failures = 0
    for r in range(replicates):
        rng = substream(seed, 1, stream_index, r)
        xs, ys = [], []
        for off, drv in zip(offsets, scanned):
            try:
                est = estimate_phase(rng, drv, schedule, noise, total_time, n_shots, guess)
            except FringeInversionError:
                failures += 1
                continue
            xs.append(off)
            ys.append(est.phi_hat)
        if len(xs) >= 3:
            slopes.append(float(np.polyfit(np.asarray(xs), np.asarray(ys), 1)[0]))
    slopes_arr = np.asarray(slopes)

    if slopes_arr.size >= 2:
        slope = float(np.mean(slopes_arr))
        slope_err = float(np.std(slopes_arr, ddof=1) / math.sqrt(slopes_arr.size))
    else:
        slope, slope_err = math.nan, math.nan

    significant = bool(
        np.isfinite(slope) and np.isfinite(slope_err) and abs(slope) > 2.0 * slope_err
    )
    if significant:
        scale = 2.0 * math.pi if target == "frequency" else 1.0
        inverse = 1.0 / (scale * abs(slope))
        std_error = slope_err / (scale * slope**2)
    else:
        inverse, std_error = math.nan, math.nan

    return SensitivityPoint(
        observation_time=total_time,
        target=target,
        controlled=controlled,
        inverse_sensitivity=inverse,
        std_error=std_error,
        slope=slope,
        slope_err=slope_err,
        significant=significant,
        halfwidth=float(scan_halfwidth),
        scan_points=scan_points,
        n_shots=n_shots,
        replicates=replicates,
        replicates_used=int(slopes_arr.size),
        failures=failures,
        slopes=tuple(float(s) for s in slopes_arr),
    )


def controlled_time_grid(max_time: float = 80e-6, step: float = 10e-6) -> np.ndarray:
    """Default interrogation times for controlled scaling runs."""
    if max_time < 2.0 * step:
        raise ValueError("max_time too short for the default grid")
    return np.arange(2.0 * step, max_time + 0.5 * step, step)


def uncontrolled_time_grid(drive: DriveParams, max_time: float = 80e-6) -> np.ndarray:
    """Quarter-period-offset times (k - 1/4)*2*pi/omega up to max_time.

    At exact period multiples the free-evolution response vanishes for both
    targets, so uncontrolled runs sample just short of each multiple, where
    the response is extremal.
    """
    period = 2.0 * math.pi / drive.omega
    ks = np.arange(1, int(math.floor(max_time / period + 0.25)) + 1)
    times = (ks - 0.25) * period
    if times.size == 0:
        raise ValueError("max_time shorter than 3/4 of a modulation period")
    return times


def sensitivity_scaling_dataset(
    seed: int,
    target: str,
    drive: DriveParams,
    noise: NoiseModel,
    controlled: bool = True,
    times: np.ndarray | None = None,
    max_time: float = 80e-6,
    n_shots: int = 100,
    replicates: int = 22,
    scan_points: int = 7,
) -> list[SensitivityPoint]:
    """Inverse sensitivity versus interrogation time.

    Runs :func:`measure_sensitivity` at each duration with independent
    random substreams keyed by the time index, so the dataset is
    reproducible point by point regardless of evaluation order.  Durations
    must stay at or below ``max_time`` (default 80 us, the coherence onset);
    pass a larger cap explicitly for idealized scaling studies.
    """
    if times is None:
        times = (
            controlled_time_grid(max_time)
            if controlled
            else uncontrolled_time_grid(drive, max_time)
        )
    times = np.asarray(times, dtype=float)
    if np.any(times > max_time * (1.0 + 1e-12)):
        raise ValueError(f"times exceed the configured maximum {max_time} s")
    return [
        measure_sensitivity(
            seed,
            target,
            drive,
            noise,
            controlled,
            float(total_time),
            scan_points=scan_points,
            n_shots=n_shots,
            replicates=replicates,
            stream_index=i,
        )
        for i, total_time in enumerate(times)
    ]


@dataclass(frozen=True, eq=False)
class ScanGrid:
    """Measured QFI over a grid of control frequencies and control phases."""

    control_freqs: np.ndarray
    control_phases: np.ndarray
    qfi_estimates: np.ndarray
    slopes: np.ndarray
    failures: np.ndarray
    target: str
    total_time: float
    n_shots: int
    replicates: int

    def __post_init__(self) -> None:
        expected = (self.control_freqs.size, self.control_phases.size)
        if self.qfi_estimates.shape != expected:
            raise ValueError("qfi_estimates shape must match the axis lengths")

    @property
    def peak_index(self) -> tuple[int, int]:
        """Grid indices of the largest QFI estimate (NaN cells excluded)."""
        if np.all(np.isnan(self.qfi_estimates)):
            raise ValueError("all grid cells failed; no peak")
        flat = np.nanargmax(self.qfi_estimates)
        i, j = np.unravel_index(flat, self.qfi_estimates.shape)
        return int(i), int(j)


def qfi_scan_2d(
    seed: int,
    drive: DriveParams,
    noise: NoiseModel | None = None,
    total_time: float = 75e-6,
    control_freqs: np.ndarray | None = None,
    control_phases: np.ndarray | None = None,
    n_shots: int = 100,
    replicates: int = 150,
    target: str = "frequency",
) -> ScanGrid:
    """Map the measured QFI against the control tone (frequency, phase).

    Every grid cell programs its own pulse train, measures the phase-response
    slope to the estimation target by a replicated two-point scan (the
    minimal straight-line fit), and stores the Bures-form QFI of balanced
    preparation, 4*(1/2)*(1/2)*slope^2.  The map peaks where the control tone
    matches the drive; the matched control phase is defined modulo pi because
    a pi shift reproduces the identical pulse train.

    One common scan halfwidth is used for the whole map, sized so the
    best-rectifying cell swings MAP_EXCURSION radians.  A per-cell width
    would entangle each cell's value with its own secant compression and
    bias the comparison between cells.

    Cells draw from substreams keyed by their grid indices; cells where every
    replicate fails inversion carry NaN and are excluded from the peak.
    """
    noise = NoiseModel.ideal() if noise is None else noise
    if control_freqs is None:
        control_freqs = np.linspace(30e3, 70e3, 41)
    if control_phases is None:
        control_phases = np.linspace(-math.pi, math.pi, 41)
    control_freqs = np.asarray(control_freqs, dtype=float)
    control_phases = np.asarray(control_phases, dtype=float)
    if control_freqs.size == 0 or control_phases.size == 0:
        raise ValueError("grid axes must be non-empty")

    center = _target_value(drive, target)
    contrast = noise.contrast(total_time)
    qfi_est = np.empty((control_freqs.size, control_phases.size))
    slopes = np.empty_like(qfi_est)
    fails = np.zeros(qfi_est.shape, dtype=int)

    schedules = []
    for f_c in control_freqs:
        omega_c = 2.0 * math.pi * f_c
        tau = noise.pulse_duration(omega_c)
        schedules.append(
            [
                make_optimal_schedule(omega_c, float(phi_c), total_time, tau)
                for phi_c in control_phases
            ]
        )
    h = min(
        default_scan_halfwidth(target, drive, sch, total_time, excursion=MAP_EXCURSION)
        for row in schedules
        for sch in row
    )

    for i, f_c in enumerate(control_freqs):
        for j, phi_c in enumerate(control_phases):
            schedule = schedules[i][j]
            guess = fringe_phase(drive, schedule, total_time, noise)
            probs = np.array(
                [
                    ramsey_probability(
                        fringe_phase(
                            _with_target(drive, target, center + off),
                            schedule,
                            total_time,
                            noise,
                        ),
                        math.pi / 2.0 - guess,
                        contrast,
                    )
                    for off in (-h, h)
                ]
            )
            rng = substream(seed, 2, i, j)
            counts = rng.binomial(n_shots, probs, size=(replicates, 2))
            x = (2.0 * counts / n_shots - 1.0) / contrast
            valid = np.all(np.abs(x) <= 1.0, axis=1)
            fails[i, j] = int(replicates - np.count_nonzero(valid))
            if not np.any(valid):
                slopes[i, j] = math.nan
                qfi_est[i, j] = math.nan
                continue
            phases = np.arcsin(x[valid])
            rep_slopes = (phases[:, 1] - phases[:, 0]) / (2.0 * h)
            slopes[i, j] = float(np.mean(rep_slopes))
            qfi_est[i, j] = qfi_bures(_BALANCED, slopes[i, j])

    return ScanGrid(
        control_freqs=control_freqs,
        control_phases=control_phases,
        qfi_estimates=qfi_est,
        slopes=slopes,
        failures=fails,
        target=target,
        total_time=total_time,
        n_shots=n_shots,
        replicates=replicates,
    )


def peak_location(grid: ScanGrid) -> tuple[float, float]:
    """Axis values (control frequency Hz, control phase rad) of the QFI peak."""
    i, j = grid.peak_index
    return float(grid.control_freqs[i]), float(grid.control_phases[j])
