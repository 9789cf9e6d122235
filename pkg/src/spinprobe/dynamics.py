"""Coherence dynamics of a two-level probe under a modulated dephasing field.

The probe Hamiltonian is diagonal in the sigma_z basis with a time dependent
splitting, H(t)/hbar = (-Omega_0 + Omega_d*sin(omega*t + theta)) * sigma_z,
the static part coming from an off-resonant Stark shift and the sinusoidal
part from an intensity modulation of the same beam.  A superposition prepared
on the equator of the Bloch sphere accumulates the relative phase

    phi(T) = 2 * int_0^T s(t) * (-Omega_0 + Omega_d*sin(omega*t + theta)) dt

where s(t) is the toggling sign imposed by a train of pi pulses about
sigma_x: +1 before the first pulse, flipped after each completed pulse, and 0
(accumulation frozen) inside a finite pulse window [t_n, t_n + tau_pi).

All frequencies are angular (rad/s) and hbar = 1 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

__all__ = [
    "DriveParams",
    "IntensityModel",
    "ControlSchedule",
    "QubitState",
    "OracleConvergenceError",
    "make_optimal_schedule",
    "toggling_sign",
    "accumulated_phase",
    "accumulated_phase_oracle",
    "stark_params_from_intensity",
]


class OracleConvergenceError(RuntimeError):
    """Raised when the quadrature oracle cannot reach the requested tolerance."""


@dataclass(frozen=True)
class DriveParams:
    """Parameters of the sigma_z dephasing drive.

    Parameters
    ----------
    omega0 : float
        Static splitting Omega_0 (rad/s).  Any sign.
    omega_d : float
        Modulation depth Omega_d (rad/s), non-negative.  A sign flip is
        equivalent to a pi shift of ``theta``.
    omega : float
        Modulation angular frequency (rad/s), strictly positive.
    theta : float
        Modulation phase offset (rad).
    """

    omega0: float
    omega_d: float
    omega: float
    theta: float = 0.0

    def __post_init__(self) -> None:
        for name in ("omega0", "omega_d", "omega", "theta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.omega <= 0.0:
            raise ValueError("omega must be positive")
        if self.omega_d < 0.0:
            raise ValueError("omega_d must be non-negative; fold a sign flip into theta")


@dataclass(frozen=True)
class IntensityModel:
    """Beam intensity I(t) = i0 + i_d*sin(omega*t + theta) behind a Stark shift.

    The induced splitting is q_const * I(t) / detuning, so i0 maps to the
    static splitting and i_d to the modulation depth.
    """

    i0: float
    i_d: float
    detuning: float
    q_const: float

    def __post_init__(self) -> None:
        if self.detuning == 0.0:
            raise ValueError("detuning must be nonzero")
        if self.i0 < 0.0:
            raise ValueError("i0 must be non-negative")
        if not 0.0 <= self.i_d <= self.i0:
            raise ValueError("modulation depth must satisfy 0 <= i_d <= i0")


@dataclass(frozen=True)
class ControlSchedule:
    """A train of sigma_x pi pulses.

    ``pulse_times`` are the window start times; the toggling sign is frozen to
    0 on [t_n, t_n + pulse_duration) and flips once the window completes.
    ``omega_c`` and ``phi_c`` record the generating control frequency and
    phase for bookkeeping; the physics only reads the pulse windows.
    """

    pulse_times: tuple[float, ...]
    omega_c: float
    phi_c: float
    pulse_duration: float = 0.0

    def __post_init__(self) -> None:
        if self.omega_c <= 0.0 or not math.isfinite(self.omega_c):
            raise ValueError("omega_c must be positive and finite")
        if self.pulse_duration < 0.0:
            raise ValueError("pulse_duration must be non-negative")
        times = self.pulse_times
        if any(t < 0.0 for t in times):
            raise ValueError("pulse times must be non-negative")
        for earlier, later in zip(times, times[1:]):
            if later - earlier <= self.pulse_duration:
                raise ValueError(
                    "pulse times must be strictly increasing with separations "
                    "exceeding pulse_duration"
                )

    @property
    def count(self) -> int:
        return len(self.pulse_times)


@dataclass(frozen=True)
class QubitState:
    """Populations and accumulated relative phase of the probe superposition."""

    p0: float
    p1: float
    phi: float

    def __post_init__(self) -> None:
        if self.p0 < 0.0 or self.p1 < 0.0:
            raise ValueError("populations must be non-negative")
        if abs(self.p0 + self.p1 - 1.0) > 1e-12:
            raise ValueError("populations must sum to 1 within 1e-12")


def make_optimal_schedule(
    omega_c: float,
    phi_c: float,
    total_time: float,
    pulse_duration: float = 0.0,
) -> ControlSchedule:
    """Build the level-crossing pulse train for a control tone (omega_c, phi_c).

    Pulses sit at every zero of cos(omega_c*t - phi_c), i.e. at

        t_k = ((k + 1/2)*pi + phi_c) / omega_c        for integer k,

    keeping those with 0 < t_k and t_k + pulse_duration <= total_time.  These
    are the crossing times of the signed sensitivity eigenvalues: spacing is
    half a control period, so the toggling sign is a square wave at omega_c.
    With omega_c equal to the drive frequency and phi_c matched to the
    estimation target the sign rectifies the relevant integrand.  A pi shift
    of phi_c relabels k by one and produces the identical pulse train.

    A pulse whose window ends exactly at ``total_time`` is included.

    Raises
    ------
    ValueError
        If ``pulse_duration >= pi/omega_c`` (windows would overlap) or any
        argument is out of range.
    """
    if omega_c <= 0.0 or not math.isfinite(omega_c):
        raise ValueError("omega_c must be positive and finite")
    if total_time <= 0.0 or not math.isfinite(total_time):
        raise ValueError("total_time must be positive and finite")
    if not math.isfinite(phi_c):
        raise ValueError("phi_c must be finite")
    if pulse_duration < 0.0:
        raise ValueError("pulse_duration must be non-negative")
    spacing = math.pi / omega_c
    if pulse_duration >= spacing:
        raise ValueError("pulse_duration must be shorter than the pulse spacing pi/omega_c")

    # First integer k with t_k > 0, then walk forward until the window no
    # longer fits.  Boundary comparisons are exact (no epsilon).
    k = math.floor(-0.5 - phi_c / math.pi) + 1
    times = []
    while True:
        t = ((k + 0.5) * math.pi + phi_c) / omega_c
        if t <= 0.0:
            k += 1
            continue
        if t + pulse_duration > total_time:
            break
        times.append(t)
        k += 1
    return ControlSchedule(
        pulse_times=tuple(times),
        omega_c=omega_c,
        phi_c=phi_c,
        pulse_duration=pulse_duration,
    )


def toggling_sign(t: float, schedule: ControlSchedule | None) -> int:
    """Toggling sign s(t): +1/-1 between pulses, 0 inside a pulse window.

    The sign starts at +1 and flips after each completed pulse; for
    zero-duration pulses the flip takes effect at the pulse time itself
    (s is right-continuous).
    """
    if schedule is None or not schedule.pulse_times:
        return 1
    times = np.asarray(schedule.pulse_times)
    tau = schedule.pulse_duration
    idx = int(np.searchsorted(times, t, side="right")) - 1
    if idx >= 0 and tau > 0.0 and t < times[idx] + tau:
        return 0
    completed = int(np.searchsorted(times + tau, t, side="right"))
    return -1 if completed % 2 else 1


def _segments(
    schedule: ControlSchedule | None, total_time: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Free-evolution segments of [0, total_time].

    Returns (starts, ends, signs, pulses_before): pulse windows are excluded,
    ``signs`` alternates +1/-1 and ``pulses_before`` counts completed pulses
    ahead of each segment.  Zero-length segments may appear at boundaries and
    contribute nothing.
    """
    if total_time <= 0.0:
        raise ValueError("total_time must be positive")
    if schedule is None or not schedule.pulse_times:
        return (
            np.array([0.0]),
            np.array([total_time]),
            np.array([1.0]),
            np.array([0]),
        )
    tau = schedule.pulse_duration
    starts, ends, signs, before = [], [], [], []
    cursor = 0.0
    n_completed = 0
    for t_n in schedule.pulse_times:
        if t_n >= total_time:
            break
        starts.append(cursor)
        ends.append(min(t_n, total_time))
        signs.append(-1.0 if n_completed % 2 else 1.0)
        before.append(n_completed)
        window_end = t_n + tau
        if window_end > total_time:
            # Trailing incomplete pulse: frozen until the end, no flip.
            cursor = total_time
            break
        cursor = window_end
        n_completed += 1
    if cursor < total_time:
        starts.append(cursor)
        ends.append(total_time)
        signs.append(-1.0 if n_completed % 2 else 1.0)
        before.append(n_completed)
    return (np.array(starts), np.array(ends), np.array(signs), np.array(before))


def _splitting_integral(
    drive: DriveParams, starts: np.ndarray, ends: np.ndarray
) -> np.ndarray:
    """Exact integral of -Omega_0 + Omega_d*sin(omega*t + theta) per segment."""
    static = -drive.omega0 * (ends - starts)
    mod = (drive.omega_d / drive.omega) * (
        np.cos(drive.omega * starts + drive.theta)
        - np.cos(drive.omega * ends + drive.theta)
    )
    return static + mod


def accumulated_phase(
    drive: DriveParams,
    schedule: ControlSchedule | None,
    total_time: float,
) -> float:
    """Closed-form accumulated phase phi(total_time).

    Evaluates the per-segment antiderivative of the splitting, weighted by the
    toggling sign; pulse windows contribute nothing.  With ``omega_d = 0``
    this reduces to -2*Omega_0 * sum_i s_i * dt_i.
    """
    starts, ends, signs, _ = _segments(schedule, total_time)
    return 2.0 * float(np.sum(signs * _splitting_integral(drive, starts, ends)))


def accumulated_phase_oracle(
    drive: DriveParams,
    schedule: ControlSchedule | None,
    total_time: float,
    rel_tol: float = 1e-10,
) -> float:
    """Independent quadrature evaluation of the accumulated phase.

    Integrates the raw splitting (no antiderivatives) with adaptive
    Gauss-Kronrod quadrature on each free-evolution segment.  Intended as a
    cross-check for :func:`accumulated_phase`; not used by the main code
    paths.

    Raises
    ------
    OracleConvergenceError
        If the summed quadrature error estimate exceeds ``rel_tol`` relative
        to the phase scale.
    """

    def integrand(t: float) -> float:
        return -drive.omega0 + drive.omega_d * math.sin(drive.omega * t + drive.theta)

    starts, ends, signs, _ = _segments(schedule, total_time)
    total = 0.0
    err_total = 0.0
    rate_scale = abs(drive.omega0) + drive.omega_d
    for a, b, s in zip(starts, ends, signs):
        if b <= a:
            continue
        eps_abs = max(1e-13 * rate_scale * (b - a), 1e-300)
        val, err = quad(integrand, a, b, epsabs=eps_abs, epsrel=1e-12, limit=200)
        total += s * val
        err_total += err
    phi = 2.0 * total
    # Error budget relative to the largest phase the drive could accumulate.
    scale = 2.0 * (abs(drive.omega0) + drive.omega_d) * total_time
    if err_total * 2.0 > rel_tol * max(abs(phi), 1e-6 * scale, 1e-300):
        raise OracleConvergenceError(
            f"quadrature error {2.0 * err_total:.3e} exceeds tolerance for phi={phi:.6e}"
        )
    return phi


def stark_params_from_intensity(
    model: IntensityModel, omega: float, theta: float = 0.0
) -> DriveParams:
    """Map an intensity model to drive parameters via the Stark shift.

    Omega_0 = q*i0/detuning and Omega_d = q*i_d/detuning; a negative induced
    depth (red detuning) is folded into a pi shift of theta so the returned
    ``omega_d`` is non-negative.
    """
    omega0 = model.q_const * model.i0 / model.detuning
    omega_d = model.q_const * model.i_d / model.detuning
    if omega_d < 0.0:
        omega_d = -omega_d
        theta = theta + math.pi
    theta = math.remainder(theta, 2.0 * math.pi)
    return DriveParams(omega0=omega0, omega_d=omega_d, omega=omega, theta=theta)
