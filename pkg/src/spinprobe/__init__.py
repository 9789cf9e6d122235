"""Two-level probe under a modulated splitting: dynamics, control, metrology.

The package simulates a Ramsey-style measurement of a qubit whose energy
splitting is modulated in time, with a programmable pi-pulse train that
rectifies the response to either the modulation frequency or its amplitude.
It provides closed-form phase accumulation with a quadrature oracle
(``dynamics``), quantum Fisher information three ways (``fisher``), a
shot-noise Monte Carlo of the full protocol (``experiment``), power-law
extraction with chi-square maps (``analysis``), dark-matter reach
conversion (``alp``), and a CLI that emits figure-ready tables (``cli``).
"""

from .alp import (
    AlpParams,
    ReachGrid,
    coupling_bound,
    min_detectable_amplitude,
    reach_grid,
)
from .analysis import (
    Chi2Map,
    LogLogFit,
    chi2_map,
    confidence_ellipse_area,
    fit_loglog,
    fit_loglog_arrays,
)
from .dynamics import (
    ControlSchedule,
    DriveParams,
    IntensityModel,
    OracleConvergenceError,
    QubitState,
    accumulated_phase,
    accumulated_phase_oracle,
    make_optimal_schedule,
    stark_params_from_intensity,
    toggling_sign,
)
from .experiment import (
    FringeInversionError,
    NoiseModel,
    PhaseEstimate,
    RunPreset,
    ScanGrid,
    SensitivityPoint,
    default_drive,
    estimate_phase,
    fringe_phase,
    measure_sensitivity,
    peak_location,
    preset,
    qfi_scan_2d,
    ramsey_shot,
    sensitivity_scaling_dataset,
    substream,
)
from .fisher import (
    QfiCurve,
    StepUnderflowError,
    matched_control_phase,
    phase_derivative,
    phase_sensitivity_fd,
    qfi_bures,
    qfi_control_bound,
    qfi_curve,
    sensitivity_eigenvalues,
)

__version__ = "0.1.0"

__all__ = [
    "AlpParams",
    "Chi2Map",
    "ControlSchedule",
    "DriveParams",
    "FringeInversionError",
    "IntensityModel",
    "LogLogFit",
    "NoiseModel",
    "OracleConvergenceError",
    "PhaseEstimate",
    "QfiCurve",
    "QubitState",
    "ReachGrid",
    "RunPreset",
    "ScanGrid",
    "SensitivityPoint",
    "StepUnderflowError",
    "__version__",
    "accumulated_phase",
    "accumulated_phase_oracle",
    "chi2_map",
    "confidence_ellipse_area",
    "coupling_bound",
    "default_drive",
    "estimate_phase",
    "fit_loglog",
    "fit_loglog_arrays",
    "fringe_phase",
    "make_optimal_schedule",
    "matched_control_phase",
    "measure_sensitivity",
    "min_detectable_amplitude",
    "peak_location",
    "phase_derivative",
    "phase_sensitivity_fd",
    "preset",
    "qfi_bures",
    "qfi_control_bound",
    "qfi_curve",
    "qfi_scan_2d",
    "ramsey_shot",
    "reach_grid",
    "sensitivity_eigenvalues",
    "sensitivity_scaling_dataset",
    "stark_params_from_intensity",
    "substream",
    "toggling_sign",
]
