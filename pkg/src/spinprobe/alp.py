"""Dark-matter reach of the modulation-amplitude measurement.

A pseudoscalar field oscillating at its Compton frequency imprints a small
modulation on the probe splitting.  The smallest detectable modulation
amplitude after an interrogation of length T repeated n times is
delta_Omega = 1/(T sqrt(n)), and a calibrated scaling law converts that
amplitude into an upper bound on the electron coupling: an energy shift of
3e-9 1/s corresponds to a coupling of 1e-9 1/GeV at the reference local
density of 0.3 GeV/cm^3, with the bound scaling linearly in delta_Omega
and as the inverse square root of the density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

# Default grid axes for the reach map: interrogation times from 80 us up to
# one second, probe numbers from a single-trap scale up to a gas cell.
DEFAULT_TIMES = tuple(np.geomspace(80e-6, 1.0, 25))
DEFAULT_PROBE_COUNTS = tuple(np.geomspace(1e2, 1e15, 27))


@dataclass(frozen=True)
class AlpParams:
    """Coupling-conversion constants and the assumed field parameters.

    m_a is the field's angular frequency (rad/s); the default corresponds
    to a 50 kHz oscillation, matching the drive used elsewhere.  rho_dm is
    the local dark matter density in GeV/cm^3.  v_anchor and g_ref pin the
    scaling law: a shift of v_anchor (1/s) maps to a coupling of g_ref
    (1/GeV) at rho_dm = 0.3.
    """

    m_a: float = TWO_PI * 50e3
    rho_dm: float = 0.3
    v_anchor: float = 3e-9
    g_ref: float = 1e-9

    def __post_init__(self):
        for name in ("m_a", "rho_dm", "v_anchor", "g_ref"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite")


@dataclass(frozen=True, eq=False)
class ReachGrid:
    """Coupling bounds over (interrogation time, probe count).

    g_limits[i, j] is the bound for times[i] and probe_counts[j], in 1/GeV.
    """

    times: np.ndarray
    probe_counts: np.ndarray
    g_limits: np.ndarray
    params: AlpParams = field(default_factory=AlpParams)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        n = np.asarray(self.probe_counts, dtype=float)
        g = np.asarray(self.g_limits, dtype=float)
        if g.shape != (t.size, n.size):
            raise ValueError("g_limits shape must match the axes")
        if np.any(g <= 0.0):
            raise ValueError("coupling bounds must be positive")
        if t.size > 1 and np.any(np.diff(g, axis=0) >= 0.0):
            raise ValueError("bounds must decrease with interrogation time")
        if n.size > 1 and np.any(np.diff(g, axis=1) >= 0.0):
            raise ValueError("bounds must decrease with probe count")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "probe_counts", n)
        object.__setattr__(self, "g_limits", g)


def min_detectable_amplitude(total_time: float, shots: int) -> float:
    """Smallest resolvable modulation amplitude in rad/s.

    Shot-noise limited: one radian of phase resolution spread over the
    interrogation time, improved by sqrt(shots).
    """
    if not (total_time > 0.0 and math.isfinite(total_time)):
        raise ValueError("total_time must be positive and finite")
    if shots < 1:
        raise ValueError("shots must be at least 1")
    return 1.0 / (total_time * math.sqrt(shots))


def coupling_bound(delta_omega, alp: AlpParams | None = None):
    """Convert an energy-shift resolution (1/s) into a coupling bound (1/GeV).

    Linear in delta_omega, with the density entering as sqrt(0.3/rho_dm).
    Accepts scalars or arrays.
    """
    if alp is None:
        alp = AlpParams()
    d = np.asarray(delta_omega, dtype=float)
    if np.any(d <= 0.0):
        raise ValueError("delta_omega must be positive")
    out = alp.g_ref * (d / alp.v_anchor) * math.sqrt(0.3 / alp.rho_dm)
    return float(out) if np.isscalar(delta_omega) else out


def reach_grid(times=None, probe_counts=None, alp: AlpParams | None = None) -> ReachGrid:
    """Tabulate coupling bounds over interrogation time and probe number."""
    if times is None:
        times = DEFAULT_TIMES
    if probe_counts is None:
        probe_counts = DEFAULT_PROBE_COUNTS
    if alp is None:
        alp = AlpParams()
    t = np.asarray(times, dtype=float)
    n = np.asarray(probe_counts, dtype=float)
    if t.size == 0 or n.size == 0:
        raise ValueError("axes must be non-empty")
    if np.any(t <= 0.0) or np.any(n < 1.0):
        raise ValueError("times must be positive and probe counts at least 1")
    delta = 1.0 / (t[:, None] * np.sqrt(n[None, :]))
    return ReachGrid(t, n, coupling_bound(delta, alp), alp)
