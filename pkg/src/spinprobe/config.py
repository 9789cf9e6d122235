"""Run configuration: TOML file parsing with strict key checking.

One file configures every subcommand.  Frequencies are plain numbers in Hz
(converted to angular frequency internally); durations accept either plain
numbers (seconds) or strings with an SI suffix ("80us", "1.5 ms").  Unknown
sections or keys are rejected outright, since a silently ignored typo in a
config file is the usual way a simulation lies about what it ran.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Any

import tomli

from .dynamics import DriveParams
from .experiment import NoiseModel, preset

TWO_PI = 2.0 * math.pi

_TIME_SUFFIXES = {
    "ns": 1e-9,
    "us": 1e-6,
    "µs": 1e-6,  # micro sign
    "μs": 1e-6,  # greek mu
    "ms": 1e-3,
    "s": 1.0,
}


def parse_time(value: Any) -> float:
    """Convert a duration to seconds.

    Numbers pass through as seconds.  Strings take an SI suffix: "80us",
    "1.5 ms", "2e-5 s".  Raises ValueError for anything else.
    """
    if isinstance(value, bool):
        raise ValueError("a duration cannot be a boolean")
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        text = value.strip()
        for suffix in sorted(_TIME_SUFFIXES, key=len, reverse=True):
            if text.endswith(suffix):
                number = text[: -len(suffix)].strip()
                try:
                    out = float(number) * _TIME_SUFFIXES[suffix]
                except ValueError:
                    raise ValueError(f"cannot parse duration {value!r}") from None
                break
        else:
            raise ValueError(f"duration {value!r} needs a unit suffix (s, ms, us, ns)")
    else:
        raise ValueError(f"cannot parse duration from {type(value).__name__}")
    if not (out > 0.0 and math.isfinite(out)):
        raise ValueError(f"duration must be positive and finite, got {value!r}")
    return out


@dataclass(frozen=True)
class QfiOptions:
    target: str = "frequency"
    min_periods: int = 10
    max_periods: int = 100


@dataclass(frozen=True)
class SensitivityOptions:
    target: str = "frequency"
    controlled: bool = True
    max_time: float = 80e-6
    step: float = 10e-6
    scan_points: int = 7


@dataclass(frozen=True)
class Scan2dOptions:
    total_time: float = 75e-6
    freq_start: float = 30e3
    freq_stop: float = 70e3
    freq_points: int = 41
    phase_points: int = 41
    n_shots: int = 100
    replicates: int = 150


@dataclass(frozen=True)
class AlpOptions:
    m_a_hz: float = 50e3
    rho_dm: float = 0.3
    v_anchor: float = 3e-9
    g_ref: float = 1e-9
    t_min: float = 80e-6
    t_max: float = 1.0
    t_points: int = 25
    n_min: float = 1e2
    n_max: float = 1e15
    n_points: int = 27


@dataclass(frozen=True)
class FitOptions:
    resolution: int = 101
    range_sigmas: float = 5.0


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for one CLI invocation."""

    drive: DriveParams = field(
        default_factory=lambda: DriveParams(TWO_PI * 100e3, TWO_PI * 7.5e3, TWO_PI * 50e3, 0.0)
    )
    noise: NoiseModel = field(default_factory=NoiseModel.ideal)
    preset_name: str = "ideal"
    seed: int = 0
    n_shots: int = 100
    replicates: int = 22
    failure_threshold: float = 0.2
    out_dir: str = "."
    qfi: QfiOptions = field(default_factory=QfiOptions)
    sensitivity: SensitivityOptions = field(default_factory=SensitivityOptions)
    scan2d: Scan2dOptions = field(default_factory=Scan2dOptions)
    alp: AlpOptions = field(default_factory=AlpOptions)
    fit: FitOptions = field(default_factory=FitOptions)

    def with_preset(self, name: str) -> "RunConfig":
        """Return a copy with the named noise preset applied."""
        p = preset(name)
        return replace(
            self,
            noise=p.noise,
            preset_name=name,
            n_shots=p.n_shots,
            replicates=p.replicates,
        )


_SECTIONS = {
    "drive": {"omega0_hz", "omega_d_hz", "omega_hz", "theta"},
    "noise": {"preset", "t2", "envelope", "prep_error", "duty", "pulse_retention"},
    "run": {"seed", "shots", "replicates", "failure_threshold", "out"},
    "qfi": {"target", "min_periods", "max_periods"},
    "sensitivity": {"target", "controlled", "max_time", "step", "scan_points"},
    "scan2d": {
        "total_time",
        "freq_start_hz",
        "freq_stop_hz",
        "freq_points",
        "phase_points",
        "n_shots",
        "replicates",
    },
    "alp": {
        "m_a_hz",
        "rho_dm",
        "v_anchor",
        "g_ref",
        "t_min",
        "t_max",
        "t_points",
        "n_min",
        "n_max",
        "n_points",
    },
    "fit": {"resolution", "range_sigmas"},
}


def _check_keys(section: str, table: dict) -> None:
    unknown = set(table) - _SECTIONS[section]
    if unknown:
        raise ValueError(
            f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}; "
            f"allowed: {', '.join(sorted(_SECTIONS[section]))}"
        )


def _number(table: dict, key: str, default: float) -> float:
    value = table.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{key} must be a number")
    return float(value)


def _integer(table: dict, key: str, default: int) -> int:
    value = table.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{key} must be an integer")
    return value


def _build_noise(table: dict) -> tuple[NoiseModel, str]:
    name = table.get("preset", "ideal")
    if name not in ("ideal", "imperfect"):
        raise ValueError(f"noise preset must be 'ideal' or 'imperfect', got {name!r}")
    noise = preset(name).noise
    overrides: dict[str, Any] = {}
    if "t2" in table:
        raw = table["t2"]
        if isinstance(raw, str) and raw.strip().lower() == "none":
            overrides["t2"] = None
        else:
            overrides["t2"] = parse_time(raw)
    if "envelope" in table:
        overrides["envelope"] = table["envelope"]
    if "prep_error" in table:
        overrides["prep_error"] = _number(table, "prep_error", 0.0)
    if "duty" in table:
        overrides["duty"] = _number(table, "duty", 0.0)
    if "pulse_retention" in table:
        overrides["pulse_retention"] = _number(table, "pulse_retention", 1.0)
    if overrides:
        noise = replace(noise, **overrides)
        name = "custom"
    return noise, name


def from_tables(tables: dict) -> RunConfig:
    """Build a RunConfig from parsed TOML tables, rejecting unknown keys."""
    unknown = set(tables) - set(_SECTIONS)
    if unknown:
        raise ValueError(
            f"unknown section(s): {', '.join(sorted(unknown))}; "
            f"allowed: {', '.join(sorted(_SECTIONS))}"
        )
    for name, table in tables.items():
        if not isinstance(table, dict):
            raise ValueError(f"top-level entry {name!r} must be a [{name}] table")
        _check_keys(name, table)

    d = tables.get("drive", {})
    drive = DriveParams(
        omega0=TWO_PI * _number(d, "omega0_hz", 100e3),
        omega_d=TWO_PI * _number(d, "omega_d_hz", 7.5e3),
        omega=TWO_PI * _number(d, "omega_hz", 50e3),
        theta=_number(d, "theta", 0.0),
    )

    nz = tables.get("noise", {})
    noise, preset_name = _build_noise(nz)
    base = preset("ideal" if preset_name == "custom" else preset_name)

    r = tables.get("run", {})
    seed = _integer(r, "seed", 0)
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    n_shots = _integer(r, "shots", base.n_shots)
    replicates = _integer(r, "replicates", base.replicates)
    threshold = _number(r, "failure_threshold", 0.2)
    if not (0.0 < threshold <= 1.0):
        raise ValueError("failure_threshold must lie in (0, 1]")
    out_dir = r.get("out", ".")
    if not isinstance(out_dir, str):
        raise ValueError("out must be a path string")

    q = tables.get("qfi", {})
    qfi = QfiOptions(
        target=_require_target(q.get("target", "frequency")),
        min_periods=_integer(q, "min_periods", 10),
        max_periods=_integer(q, "max_periods", 100),
    )
    if not (0 < qfi.min_periods < qfi.max_periods):
        raise ValueError("qfi periods must satisfy 0 < min < max")

    s = tables.get("sensitivity", {})
    controlled = s.get("controlled", True)
    if not isinstance(controlled, bool):
        raise ValueError("sensitivity.controlled must be a boolean")
    sens = SensitivityOptions(
        target=_require_target(s.get("target", "frequency")),
        controlled=controlled,
        max_time=parse_time(s.get("max_time", 80e-6)),
        step=parse_time(s.get("step", 10e-6)),
        scan_points=_integer(s, "scan_points", 7),
    )
    if sens.scan_points < 3:
        raise ValueError("sensitivity.scan_points must be at least 3")

    sc = tables.get("scan2d", {})
    scan = Scan2dOptions(
        total_time=parse_time(sc.get("total_time", 75e-6)),
        freq_start=_number(sc, "freq_start_hz", 30e3),
        freq_stop=_number(sc, "freq_stop_hz", 70e3),
        freq_points=_integer(sc, "freq_points", 41),
        phase_points=_integer(sc, "phase_points", 41),
        n_shots=_integer(sc, "n_shots", 100),
        replicates=_integer(sc, "replicates", 150),
    )
    if scan.freq_points < 1 or scan.phase_points < 1:
        raise ValueError("scan2d grid must have at least one point per axis")
    if not (0.0 < scan.freq_start <= scan.freq_stop):
        raise ValueError("scan2d frequency range must be positive and ordered")

    a = tables.get("alp", {})
    alp = AlpOptions(
        m_a_hz=_number(a, "m_a_hz", 50e3),
        rho_dm=_number(a, "rho_dm", 0.3),
        v_anchor=_number(a, "v_anchor", 3e-9),
        g_ref=_number(a, "g_ref", 1e-9),
        t_min=parse_time(a.get("t_min", 80e-6)),
        t_max=parse_time(a.get("t_max", 1.0)),
        t_points=_integer(a, "t_points", 25),
        n_min=_number(a, "n_min", 1e2),
        n_max=_number(a, "n_max", 1e15),
        n_points=_integer(a, "n_points", 27),
    )
    if not (alp.t_min < alp.t_max and alp.n_min < alp.n_max):
        raise ValueError("alp axis ranges must be ordered")
    if alp.t_points < 2 or alp.n_points < 2:
        raise ValueError("alp axes need at least 2 points")

    f = tables.get("fit", {})
    fit = FitOptions(
        resolution=_integer(f, "resolution", 101),
        range_sigmas=_number(f, "range_sigmas", 5.0),
    )
    if fit.resolution < 3:
        raise ValueError("fit.resolution must be at least 3")
    if fit.range_sigmas <= 0.0:
        raise ValueError("fit.range_sigmas must be positive")

    return RunConfig(
        drive=drive,
        noise=noise,
        preset_name=preset_name,
        seed=seed,
        n_shots=n_shots,
        replicates=replicates,
        failure_threshold=threshold,
        out_dir=out_dir,
        qfi=qfi,
        sensitivity=sens,
        scan2d=scan,
        alp=alp,
        fit=fit,
    )


def _require_target(value: Any) -> str:
    if value not in ("frequency", "amplitude"):
        raise ValueError(f"target must be 'frequency' or 'amplitude', got {value!r}")
    return value


def load_config(path: str | None) -> RunConfig:
    """Load a TOML config file, or return defaults when path is None."""
    if path is None:
        return RunConfig()
    with open(path, "rb") as fh:
        tables = tomli.load(fh)
    return from_tables(tables)


def describe(cfg: RunConfig) -> list[str]:
    """Flatten a config into sorted 'section.key=value' strings for headers."""
    out = [
        f"drive.omega0_hz={cfg.drive.omega0 / TWO_PI!r}",
        f"drive.omega_d_hz={cfg.drive.omega_d / TWO_PI!r}",
        f"drive.omega_hz={cfg.drive.omega / TWO_PI!r}",
        f"drive.theta={cfg.drive.theta!r}",
        f"noise.preset={cfg.preset_name}",
        f"noise.t2={cfg.noise.t2!r}",
        f"noise.envelope={cfg.noise.envelope}",
        f"noise.prep_error={cfg.noise.prep_error!r}",
        f"noise.duty={cfg.noise.duty!r}",
        f"noise.pulse_retention={cfg.noise.pulse_retention!r}",
        f"run.seed={cfg.seed}",
        f"run.shots={cfg.n_shots}",
        f"run.replicates={cfg.replicates}",
        f"run.failure_threshold={cfg.failure_threshold!r}",
    ]
    for section in ("qfi", "sensitivity", "scan2d", "alp", "fit"):
        options = getattr(cfg, section)
        for fld in fields(options):
            out.append(f"{section}.{fld.name}={getattr(options, fld.name)!r}")
    return sorted(out)
