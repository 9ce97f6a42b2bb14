"""System parameters and unit handling.

All dynamics run in cavity-hopping units: the photon hopping rate kappa
between the storage and switch cavities is the frequency unit (kappa = 1)
and its inverse is the time unit.  ``PhysicalParams`` carries absolute
rates in rad/s and converts to and from the dimensionless set.

Rates are plain angular-frequency rates (hbar = 1); decay rates quoted in
Hz enter without a 2*pi factor, oscillation frequencies quoted in Hz are
converted to rad/s with one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ParamError

# The hopping rate is the unit of frequency everywhere in the dimensionless model.
KAPPA = 1.0

# omega_s / |storage_detuning| above this is outside the dispersive regime.
DISPERSIVE_RATIO_MAX = 0.1

# omega_q / kappa above this counts as strong switch coupling.
STRONG_COUPLING_RATIO = 10.0

_CONFIG_KEYS = (
    "omega_s",
    "omega_q",
    "gamma",
    "cavity_detuning",
    "storage_detuning",
    "gamma_q",
    "gamma_e",
)

_PHYSICAL_CONFIG_KEYS = ("q_factor", "omega_c_rad_s", "kappa_abs_rad_s")


@dataclass(frozen=True)
class SystemParams:
    """Dimensionless model parameters, all in units of kappa.

    Attributes
    ----------
    omega_s : float
        Storage atom-cavity coupling.
    omega_q : float
        Switch atom-cavity coupling.
    gamma : float
        Waveguide decay rate of the switch cavity.
    cavity_detuning : float
        Detuning of the switch cavity from the storage cavity (delta_q).
    storage_detuning : float
        Detuning of the storage atom from the storage cavity (Delta_s).
    gamma_q : float
        Transverse (non-waveguide) loss rate of the switch cavity mode.
    gamma_e : float
        Spontaneous emission rate of the switch atom's excited level.
    """

    omega_s: float
    omega_q: float
    gamma: float
    cavity_detuning: float
    storage_detuning: float
    gamma_q: float = 0.0
    gamma_e: float = 0.0

    @property
    def kappa(self) -> float:
        return KAPPA

    def lossless(self) -> "SystemParams":
        """Copy with every incoherent rate except the waveguide coupling zeroed."""
        return replace(self, gamma_q=0.0, gamma_e=0.0)


@dataclass(frozen=True)
class ValidatedParams:
    """A parameter set that passed validation, with regime flags."""

    params: SystemParams
    dispersive: bool
    strong_coupling: bool


def validate_params(params: SystemParams) -> ValidatedParams:
    """Check a parameter set and classify its regime.

    Raises
    ------
    ParamError
        If any rate is negative, or if the cavity detuning vanishes (the
        switch operating points are singular at cavity_detuning = 0).
    """
    for name in ("omega_s", "omega_q", "gamma", "gamma_q", "gamma_e"):
        value = getattr(params, name)
        if not math.isfinite(value) or value < 0.0:
            raise ParamError(f"negative rate: {name} = {value!r}")
    for name in ("cavity_detuning", "storage_detuning"):
        if not math.isfinite(getattr(params, name)):
            raise ParamError(f"non-finite detuning: {name}")
    if params.cavity_detuning == 0.0:
        raise ParamError("singular operating point: cavity_detuning must be nonzero")

    if params.storage_detuning != 0.0:
        ratio = params.omega_s / abs(params.storage_detuning)
    else:
        ratio = math.inf if params.omega_s > 0 else 0.0
    dispersive = ratio <= DISPERSIVE_RATIO_MAX
    strong = params.omega_q / KAPPA >= STRONG_COUPLING_RATIO
    return ValidatedParams(params=params, dispersive=dispersive, strong_coupling=strong)


def params_from_config(block: dict) -> SystemParams:
    """Build ``SystemParams`` from a config mapping with exactly the known keys.

    Unknown keys are fatal rather than ignored, so typos cannot silently
    fall back to defaults.
    """
    if not isinstance(block, dict):
        raise ParamError("params block must be a mapping")
    unknown = set(block) - set(_CONFIG_KEYS) - {"physical"}
    if unknown:
        raise ParamError(f"unknown params keys: {sorted(unknown)}")
    missing = [k for k in _CONFIG_KEYS if k not in block]
    if missing:
        raise ParamError(f"missing params keys: {missing}")
    values = {}
    for key in _CONFIG_KEYS:
        value = block[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParamError(f"params key {key} must be a number, got {value!r}")
        values[key] = float(value)
    physical = block.get("physical")
    if physical is not None:
        if not isinstance(physical, dict):
            raise ParamError("physical block must be a mapping")
        unknown = set(physical) - set(_PHYSICAL_CONFIG_KEYS)
        if unknown:
            raise ParamError(f"unknown physical keys: {sorted(unknown)}")
    params = SystemParams(**values)
    validate_params(params)
    return params


# ---------------------------------------------------------------------------
# absolute units


@dataclass(frozen=True)
class PhysicalParams:
    """Absolute-unit description of one realization.

    All rates are in rad/s.  The waveguide decay follows from the cavity
    quality factor as gamma = omega_c / (2 Q), exactly.
    """

    q_factor: float
    omega_c: float
    kappa_abs: float | None
    omega_s_abs: float
    omega_q_abs: float
    cavity_detuning_abs: float
    storage_detuning_abs: float
    gamma_q_abs: float = 0.0
    gamma_e_abs: float = 0.0

    @property
    def gamma_abs(self) -> float:
        return self.omega_c / (2.0 * self.q_factor)


def to_dimensionless(phys: PhysicalParams) -> tuple[SystemParams, float]:
    """Convert absolute rates to kappa units.

    Returns the dimensionless parameter set and the time unit 1/kappa_abs
    in seconds.

    Raises
    ------
    ParamError
        If no hopping rate is available ("underdetermined": a quality
        factor alone fixes gamma, not kappa).
    """
    if phys.kappa_abs is None:
        raise ParamError(
            "underdetermined conversion: kappa_abs is required "
            "(q_factor fixes gamma, not the hopping rate)"
        )
    if phys.kappa_abs <= 0.0:
        raise ParamError(f"negative rate: kappa_abs = {phys.kappa_abs!r}")
    k = phys.kappa_abs
    params = SystemParams(
        omega_s=phys.omega_s_abs / k,
        omega_q=phys.omega_q_abs / k,
        gamma=phys.gamma_abs / k,
        cavity_detuning=phys.cavity_detuning_abs / k,
        storage_detuning=phys.storage_detuning_abs / k,
        gamma_q=phys.gamma_q_abs / k,
        gamma_e=phys.gamma_e_abs / k,
    )
    validate_params(params)
    return params, 1.0 / k


def from_dimensionless(
    params: SystemParams, kappa_abs: float, omega_c: float
) -> PhysicalParams:
    """Inverse of :func:`to_dimensionless` for a given hopping rate and
    cavity frequency; the quality factor follows from gamma."""
    if kappa_abs <= 0.0:
        raise ParamError(f"negative rate: kappa_abs = {kappa_abs!r}")
    gamma_abs = params.gamma * kappa_abs
    if gamma_abs <= 0.0:
        raise ParamError("cannot infer q_factor for gamma = 0")
    return PhysicalParams(
        q_factor=omega_c / (2.0 * gamma_abs),
        omega_c=omega_c,
        kappa_abs=kappa_abs,
        omega_s_abs=params.omega_s * kappa_abs,
        omega_q_abs=params.omega_q * kappa_abs,
        cavity_detuning_abs=params.cavity_detuning * kappa_abs,
        storage_detuning_abs=params.storage_detuning * kappa_abs,
        gamma_q_abs=params.gamma_q * kappa_abs,
        gamma_e_abs=params.gamma_e * kappa_abs,
    )


# ---------------------------------------------------------------------------
# presets


@dataclass(frozen=True)
class Preset:
    """A named hardware realization with its dimensionless working point."""

    name: str
    physical: PhysicalParams
    params: SystemParams
    time_unit_s: float
    notes: str


# Nitrogen-vacancy center coupled to a diamond microcavity at 638 nm.
# The hopping rate is taken equal to the waveguide rate (the reference
# operating point uses kappa = gamma), which pins kappa_abs to the cavity
# quality factor.
_NV_OMEGA_C = 2.95e15  # rad/s, 638 nm optical transition
_NV_Q = 1.0e6
_NV_GAMMA_E = 1.0e7  # 1/s, excited-state emission (10 MHz, no 2*pi)

# Transmon-style qubit coupled to a stripline resonator near 1 GHz with a
# 0.1 GHz exchange coupling; quality factor ~1e2 then reproduces the
# kappa = gamma working point.
_CQED_OMEGA_C = 2.0 * math.pi * 1.0e9
_CQED_OMEGA_Q = 2.0 * math.pi * 1.0e8
_CQED_GAMMA_E = 1.0e6

# Shared dimensionless operating point (in kappa units).
_BASE_OMEGA_S = 5.0
_BASE_OMEGA_Q = 20.0
_BASE_DELTA_Q = 10.0
_BASE_DELTA_S = 1000.0

PRESET_NAMES = ("nv-diamond", "circuit-qed")


def preset(name: str) -> Preset:
    """Look up a named realization.

    Raises
    ------
    ParamError
        For unknown names; the message lists the known presets.
    """
    if name == "nv-diamond":
        kappa_abs = _NV_OMEGA_C / (2.0 * _NV_Q)  # = gamma_abs by assumption
        phys = PhysicalParams(
            q_factor=_NV_Q,
            omega_c=_NV_OMEGA_C,
            kappa_abs=kappa_abs,
            omega_s_abs=_BASE_OMEGA_S * kappa_abs,
            omega_q_abs=_BASE_OMEGA_Q * kappa_abs,
            cavity_detuning_abs=_BASE_DELTA_Q * kappa_abs,
            storage_detuning_abs=_BASE_DELTA_S * kappa_abs,
            gamma_q_abs=0.0,
            gamma_e_abs=_NV_GAMMA_E,
        )
        notes = (
            "NV center / diamond microcavity at 638 nm, Q = 1e6. "
            "Assumes kappa_abs = gamma_abs (hopping matched to waveguide rate)."
        )
    elif name == "circuit-qed":
        kappa_abs = _CQED_OMEGA_Q / _BASE_OMEGA_Q
        phys = PhysicalParams(
            q_factor=_CQED_OMEGA_C / (2.0 * kappa_abs),  # = 100 for kappa = gamma
            omega_c=_CQED_OMEGA_C,
            kappa_abs=kappa_abs,
            omega_s_abs=_BASE_OMEGA_S * kappa_abs,
            omega_q_abs=_CQED_OMEGA_Q,
            cavity_detuning_abs=_BASE_DELTA_Q * kappa_abs,
            storage_detuning_abs=_BASE_DELTA_S * kappa_abs,
            gamma_q_abs=0.0,
            gamma_e_abs=_CQED_GAMMA_E,
        )
        notes = (
            "Superconducting qubit / stripline resonator, 0.1 GHz coupling. "
            "Assumes kappa_abs = gamma_abs; Q ~ 1e2 follows."
        )
    else:
        raise ParamError(f"unknown preset name {name!r}; known: {list(PRESET_NAMES)}")
    params, time_unit = to_dimensionless(phys)
    return Preset(name=name, physical=phys, params=params, time_unit_s=time_unit, notes=notes)


def fig_params(
    gamma: float = 1.0,
    omega_q: float = _BASE_OMEGA_Q,
    storage_detuning: float = _BASE_DELTA_S,
    gamma_q: float = 0.0,
    gamma_e: float = 0.0,
) -> SystemParams:
    """The reference dimensionless operating point, with common overrides."""
    return SystemParams(
        omega_s=_BASE_OMEGA_S,
        omega_q=omega_q,
        gamma=gamma,
        cavity_detuning=_BASE_DELTA_Q,
        storage_detuning=storage_detuning,
        gamma_q=gamma_q,
        gamma_e=gamma_e,
    )
