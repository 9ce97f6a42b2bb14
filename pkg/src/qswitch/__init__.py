"""Dynamically Q-switched cavity memory: controlled-phase gate simulator.

A storage mode holds a photonic qubit behind a far-detuned atom while a
switch atom, tuned between a transmissive dark point and a reflective
off point, opens and closes the cavity to the waveguide.  The package
integrates the single-excitation dynamics, derives operating points and
schedules, and reproduces the headline capture-hold-release gate along
with its parameter sweeps.

All rates are in units of the waveguide coupling kappa and all times in
kappa^-1 unless a physical preset says otherwise.
"""

from .dynamics import (
    DEFAULT_DECIMATION,
    DEFAULT_DT,
    QuantumState,
    SimulationRecord,
    integrate,
)
from .errors import (
    ConfigError,
    NumericalFailure,
    ParamError,
    PulseError,
    QSwitchError,
    ScheduleError,
)
from .experiments import (
    SweepResult,
    SweepSpec,
    parse_csv,
    reproduce_all,
    run_fig2,
    run_fig3a,
    run_fig3b,
    run_fig3c,
    run_realizations,
    write_csv,
    write_json,
)
from .optimize import (
    OptimizationProblem,
    OptimizationTrace,
    objective_gate,
    optimize_schedule,
    simplex_search,
)
from .params import Preset, SystemParams, fig_params, params_from_config, preset
from .protocol import (
    DeltaSVariant,
    EmissionResult,
    EmissionSettings,
    GateResult,
    GateTiming,
    calibrate_hold,
    capture_photon,
    default_timing,
    emission_schedule,
    emit_photon,
    gate_schedule,
    run_gate,
)
from .pulses import GaussianFit, Pulse, fit_gaussian, gaussian_pulse, overlap, time_reverse
from .schedule import ControlSchedule, Segment, Track, constant_track
from .spectral import (
    AdiabaticityReport,
    Eigensystem,
    OperatingPoints,
    TrackedBranch,
    absorption_estimate,
    adiabaticity_report,
    dark_state,
    dispersive_phase_rate,
    dressed_matrix,
    eigensystem,
    hold_phase_rate,
    operating_points,
    switch_dressed_energies,
    t_pi,
    track_eigenstate,
)

__version__ = "0.1.0"

__all__ = [
    "AdiabaticityReport",
    "ConfigError",
    "ControlSchedule",
    "DEFAULT_DECIMATION",
    "DEFAULT_DT",
    "DeltaSVariant",
    "Eigensystem",
    "EmissionResult",
    "EmissionSettings",
    "GateResult",
    "GateTiming",
    "GaussianFit",
    "NumericalFailure",
    "OperatingPoints",
    "OptimizationProblem",
    "OptimizationTrace",
    "ParamError",
    "Preset",
    "Pulse",
    "PulseError",
    "QSwitchError",
    "QuantumState",
    "ScheduleError",
    "Segment",
    "SimulationRecord",
    "SweepResult",
    "SweepSpec",
    "SystemParams",
    "Track",
    "TrackedBranch",
    "absorption_estimate",
    "adiabaticity_report",
    "calibrate_hold",
    "capture_photon",
    "constant_track",
    "dark_state",
    "default_timing",
    "dispersive_phase_rate",
    "dressed_matrix",
    "eigensystem",
    "emission_schedule",
    "emit_photon",
    "fig_params",
    "fit_gaussian",
    "gate_schedule",
    "gaussian_pulse",
    "hold_phase_rate",
    "integrate",
    "objective_gate",
    "operating_points",
    "optimize_schedule",
    "overlap",
    "params_from_config",
    "parse_csv",
    "preset",
    "reproduce_all",
    "run_fig2",
    "run_fig3a",
    "run_fig3b",
    "run_fig3c",
    "run_gate",
    "run_realizations",
    "simplex_search",
    "switch_dressed_energies",
    "t_pi",
    "time_reverse",
    "track_eigenstate",
    "write_csv",
    "write_json",
]
