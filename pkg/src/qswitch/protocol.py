"""The gate protocol: emission, capture, hold, and the assembled CZ run.

The controlled-phase gate moves an itinerant photon into the storage mode
by Stark-tuning the switch atom from its transmissive point to the dark
point, waits there while the dispersive coupling advances the g-branch
phase by pi, and releases the photon by the mirrored tune.  The incoming
pulse is the conjugate time-reverse of the pulse the release emits, so
capture is the time-reverse of emission.

All orchestration lives here; the integrator is `dynamics.integrate` and
the eigenstructure queries are in `spectral`.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp

from . import spectral
from .dynamics import (
    DEFAULT_DECIMATION,
    DEFAULT_DT,
    QuantumState,
    SimulationRecord,
    integrate,
    qubit_weights,
)
from .errors import PulseError, ScheduleError
from .params import SystemParams
from .pulses import Pulse, fit_gaussian, gaussian_pulse, overlap, time_reverse
from .schedule import ControlSchedule, Segment, Track

__all__ = [
    "EmissionSettings",
    "EmissionResult",
    "GateTiming",
    "GateResult",
    "DeltaSVariant",
    "CaptureResult",
    "HoldLeakage",
    "StaticBaseline",
    "emission_schedule",
    "gate_schedule",
    "default_timing",
    "emit_photon",
    "capture_photon",
    "run_gate",
    "calibrate_hold",
    "hold_leakage",
    "dispersive_hold_phase",
    "static_baseline",
    "chi_for_infidelity",
]

_EMISSION_FAIL_THRESHOLD = 0.5


@dataclass(frozen=True)
class EmissionSettings:
    """Release-only schedule layout: settle dark, open the switch, emit."""

    t_settle: float = 2.0
    t_switch: float = 10.0
    t_emit: float = 50.0
    profile: str = "linear"

    @property
    def span(self) -> float:
        return self.t_settle + self.t_switch + self.t_emit


@dataclass(frozen=True)
class GateTiming:
    """Durations of the five-segment gate schedule plus pulse placement.

    The incoming pulse rides on the lead_in window; align_offset shifts it
    relative to the mirror-symmetric position (positive = later).  When
    pulse_sigma is set the gate is driven by an analytic Gaussian centered
    at t_pulse_peak instead of a supplied waveform.
    """

    t_switch: float = 10.0
    t_hold: float = 120.0
    lead_in: float = 50.0
    lead_out: float = 60.0
    align_offset: float = 0.0
    profile: str = "linear"
    t_pulse_peak: float | None = None
    pulse_sigma: float | None = None

    @property
    def span(self) -> float:
        return self.lead_in + 2.0 * self.t_switch + self.t_hold + self.lead_out

    @property
    def hold_center(self) -> float:
        return self.lead_in + self.t_switch + 0.5 * self.t_hold

    def validate(self) -> None:
        for name in ("t_switch", "t_hold", "lead_in", "lead_out"):
            if getattr(self, name) <= 0.0:
                raise ScheduleError(f"gate timing {name} must be positive")


@dataclass(frozen=True)
class DeltaSVariant:
    """Scheduled storage detuning: large while switching, small while held.

    The storage atom is parked far off resonance (delta_s_high) whenever
    the photon moves, then brought to delta_s_low inside the hold so the
    pi phase accrues quickly and the gate shortens.  Ramps are
    raised-cosine and sit `margin` inside the hold window.
    """

    delta_s_high: float = 1.0e4
    delta_s_low: float = 130.0
    t_ramp: float = 2.0
    margin: float = 0.5


def _ramp_profile(profile: str) -> str:
    if profile not in ("linear", "raised-cosine"):
        raise ScheduleError(f"unknown ramp profile {profile!r}")
    return profile


def emission_schedule(
    params: SystemParams, settings: EmissionSettings | None = None
) -> ControlSchedule:
    """Dark settle, then open the switch and hold it transmissive."""
    settings = settings or EmissionSettings()
    prof = _ramp_profile(settings.profile)
    op = spectral.operating_points(params)
    t1 = settings.t_settle
    t2 = t1 + settings.t_switch
    t3 = t2 + settings.t_emit
    track = Track(
        (
            Segment(0.0, t1, "constant", op.delta_q_off, op.delta_q_off),
            Segment(t1, t2, prof, op.delta_q_off, op.delta_q_on),
            Segment(t2, t3, "constant", op.delta_q_on, op.delta_q_on),
        )
    )
    return ControlSchedule(delta_q=track)


def _variant_track(timing: GateTiming, variant: DeltaSVariant) -> Track:
    hold_start = timing.lead_in + timing.t_switch
    hold_end = hold_start + timing.t_hold
    r0 = hold_start + variant.margin
    r1 = r0 + variant.t_ramp
    r3 = hold_end - variant.margin
    r2 = r3 - variant.t_ramp
    if not r1 < r2:
        raise ScheduleError(
            "hold too short for the storage-detuning ramps "
            f"(t_hold = {timing.t_hold}, need > {2 * (variant.t_ramp + variant.margin)})"
        )
    hi, lo = variant.delta_s_high, variant.delta_s_low
    return Track(
        (
            Segment(0.0, r0, "constant", hi, hi),
            Segment(r0, r1, "raised-cosine", hi, lo),
            Segment(r1, r2, "constant", lo, lo),
            Segment(r2, r3, "raised-cosine", lo, hi),
            Segment(r3, timing.span, "constant", hi, hi),
        )
    )


def gate_schedule(
    params: SystemParams,
    timing: GateTiming,
    variant: DeltaSVariant | None = None,
) -> ControlSchedule:
    """Open lead-in, close over the hold, reopen for the release."""
    timing.validate()
    prof = _ramp_profile(timing.profile)
    op = spectral.operating_points(params)
    on, off = op.delta_q_on, op.delta_q_off
    t1 = timing.lead_in
    t2 = t1 + timing.t_switch
    t3 = t2 + timing.t_hold
    t4 = t3 + timing.t_switch
    t5 = t4 + timing.lead_out
    track = Track(
        (
            Segment(0.0, t1, "constant", on, on),
            Segment(t1, t2, prof, on, off),
            Segment(t2, t3, "constant", off, off),
            Segment(t3, t4, prof, off, on),
            Segment(t4, t5, "constant", on, on),
        )
    )
    delta_s = _variant_track(timing, variant) if variant is not None else None
    return ControlSchedule(delta_q=track, delta_s=delta_s)


def default_timing(
    params: SystemParams,
    settings: EmissionSettings | None = None,
    delta_s: float | None = None,
) -> GateTiming:
    """Mirror-symmetric seed timing with the hold at the phase-flip time.

    lead_in equals the emission window so the reversed pulse lands
    mirror-aligned at offset zero; t_hold seeds at pi over the dispersive
    rate and is refined by `calibrate_hold`.
    """
    settings = settings or EmissionSettings()
    return GateTiming(
        t_switch=settings.t_switch,
        t_hold=spectral.t_pi(params, delta_s),
        lead_in=settings.t_emit,
        lead_out=settings.t_emit + settings.t_settle + 8.0,
        profile=settings.profile,
    )


# ---------------------------------------------------------------------------
# emission and capture


@dataclass
class EmissionResult:
    """One release run: raw output field and the capture pulse made from it."""

    record: SimulationRecord
    output: Pulse          # f_out as emitted, unnormalized
    pulse: Pulse           # conjugate time-reverse, unit norm
    p_out: float
    emission_failed: bool
    settings: EmissionSettings


def emit_photon(
    params: SystemParams,
    settings: EmissionSettings | None = None,
    *,
    dt: float = DEFAULT_DT,
    decimation: int = DEFAULT_DECIMATION,
) -> EmissionResult:
    """Release a photon initially stored in mode s (qubit spectating in f).

    The f branch is used so the emitted waveform carries no dispersive
    dressing from the storage atom; the returned `pulse` is the
    unit-normalized conjugate time-reverse ready to drive a capture.
    """
    settings = settings or EmissionSettings()
    sched = emission_schedule(params, settings)
    rec = integrate(
        params,
        sched,
        initial_state=QuantumState(c_s_f=1.0 + 0.0j),
        dt=dt,
        decimation=decimation,
        weights=(0.0, 1.0),
    )
    output = Pulse(samples=rec.fout_f.copy(), dt=rec.dt, t0=rec.t_start)
    p_out = rec.int_ff
    failed = p_out < _EMISSION_FAIL_THRESHOLD
    reversed_pulse = time_reverse(output)
    norm = reversed_pulse.norm_squared()
    pulse = reversed_pulse.normalized() if norm > 0.0 else reversed_pulse
    return EmissionResult(
        record=rec,
        output=output,
        pulse=pulse,
        p_out=p_out,
        emission_failed=failed,
        settings=settings,
    )


@dataclass
class CaptureResult:
    record: SimulationRecord
    p_capture: float


def capture_photon(
    params: SystemParams,
    pulse: Pulse,
    timing: GateTiming,
    *,
    t_tail: float | None = None,
    dt: float = DEFAULT_DT,
    variant: DeltaSVariant | None = None,
) -> CaptureResult:
    """Capture-only run: lead-in, closing ramp, short dark tail.

    Returns the probability left inside the system (f branch) at the end
    of the tail: the captured fraction.  By default the tail ends exactly
    where the incoming pulse does, so the capture probability is read off
    at the moment absorption completes.  A longer tail lets the bright
    admixture of the stored state radiate and lowers the number.
    """
    timing.validate()
    prof = _ramp_profile(timing.profile)
    op = spectral.operating_points(params)
    t1 = timing.lead_in
    t2 = t1 + timing.t_switch
    if t_tail is None:
        t_tail = max(pulse.t_end + timing.align_offset - t2, 1.0)
    t3 = t2 + t_tail
    track = Track(
        (
            Segment(0.0, t1, "constant", op.delta_q_on, op.delta_q_on),
            Segment(t1, t2, prof, op.delta_q_on, op.delta_q_off),
            Segment(t2, t3, "constant", op.delta_q_off, op.delta_q_off),
        )
    )
    delta_s = None
    if variant is not None:
        hi = variant.delta_s_high
        delta_s = Track((Segment(0.0, t3, "constant", hi, hi),))
    sched = ControlSchedule(delta_q=track, delta_s=delta_s)
    rec = integrate(
        params, sched, pulse=_snap_pulse(pulse, timing.align_offset, dt),
        dt=dt, weights=(0.0, 1.0),
    )
    fin = rec.final_state()
    p_cap = abs(fin.c_s_f) ** 2 + abs(fin.c_q_f) ** 2 + abs(fin.d_q_f) ** 2
    return CaptureResult(record=rec, p_capture=p_cap)


# ---------------------------------------------------------------------------
# the assembled gate


@dataclass
class GateResult:
    """Metrics of one gate run plus everything needed to inspect it."""

    fidelity: float
    conditional_phase: float      # rad, in (-pi, pi]
    p_return: float
    loss_decoherence: float
    loss_residual_internal: float
    mode_overlap: float
    t_gate: float                 # schedule span, hopping-rate units
    qubit_init: str
    record: SimulationRecord
    timing: GateTiming
    pulse: Pulse | None
    reference: Pulse | None

    def metrics(self) -> dict:
        return {
            "fidelity": self.fidelity,
            "conditional_phase_rad": self.conditional_phase,
            "p_return": self.p_return,
            "loss_decoherence": self.loss_decoherence,
            "loss_residual_internal": self.loss_residual_internal,
            "mode_overlap": self.mode_overlap,
            "t_gate_kappa_units": self.t_gate,
        }


def _snap_pulse(pulse: Pulse, align_offset: float, dt: float) -> Pulse:
    """Shift the pulse, snapping the offset to the integrator grid.

    Keeping sample joints on step boundaries preserves the integrator's
    measured convergence order.
    """
    snapped = round(align_offset / dt) * dt
    return pulse.shifted(snapped) if snapped != 0.0 else pulse


def _mirror_reference(pulse: Pulse, timing: GateTiming) -> Pulse:
    """Ideal output mode: the input reflected about the hold center."""
    rev = time_reverse(pulse)
    t_end = pulse.t0 + pulse.dt * (len(pulse.samples) - 1)
    return rev.shifted(2.0 * timing.hold_center - (pulse.t0 + t_end))


def _gate_pulse(pulse: Pulse | None, timing: GateTiming, dt: float) -> Pulse:
    if timing.pulse_sigma is not None:
        peak = timing.t_pulse_peak
        if peak is None:
            peak = timing.lead_in - 2.0 * timing.pulse_sigma
        return gaussian_pulse(peak, timing.pulse_sigma, dt)
    if pulse is None:
        raise PulseError("no input: supply a pulse or set pulse_sigma")
    return _snap_pulse(pulse, timing.align_offset, dt)


def run_gate(
    params: SystemParams,
    timing: GateTiming,
    pulse: Pulse | None,
    *,
    qubit_init: str = "plus",
    dt: float = DEFAULT_DT,
    decimation: int = DEFAULT_DECIMATION,
    field_stride: int = 1,
    variant: DeltaSVariant | None = None,
    reference: Pulse | None = None,
) -> GateResult:
    """Drive the full gate schedule and score it.

    The reference mode for the overlap metric defaults to the input pulse
    mirrored about the hold center — what a perfect gate would emit.
    Metrics for "plus"/"minus" runs come from integrals accumulated inside
    the stepper, so field_stride > 1 only coarsens the recorded waveforms;
    "g"/"f" runs rebuild the output mode from those samples and want
    field_stride = 1.
    """
    timing.validate()
    f_in = _gate_pulse(pulse, timing, dt)
    if abs(f_in.norm_squared() - 1.0) > 1e-6:
        raise PulseError(
            f"input pulse norm {f_in.norm_squared():.6f} is not 1; "
            "normalize before driving the gate"
        )
    if reference is None:
        reference = _mirror_reference(f_in, timing)
    sched = gate_schedule(params, timing, variant)
    weights = qubit_weights(qubit_init)
    rec = integrate(
        params,
        sched,
        pulse=f_in,
        dt=dt,
        decimation=decimation,
        field_stride=field_stride,
        weights=weights,
        reference=reference,
    )

    int_ff, int_gg, int_gf = rec.int_ff, rec.int_gg, rec.int_gf
    if qubit_init in ("plus", "minus"):
        fidelity = 0.25 * (int_ff + int_gg - 2.0 * int_gf.real)
        p_return = 0.5 * (int_ff + int_gg)
        mode_ov = abs(rec.int_ref) ** 2
    elif qubit_init == "g":
        fidelity = int_gg
        p_return = int_gg
        mode_ov = abs(
            overlap(reference, Pulse(rec.fout_g, rec.dt * rec.field_stride, rec.t_start))
        ) ** 2
    else:  # "f"
        fidelity = int_ff
        p_return = int_ff
        mode_ov = abs(
            overlap(reference, Pulse(rec.fout_f, rec.dt * rec.field_stride, rec.t_start))
        ) ** 2
    phase = cmath.phase(int_gf) if int_gf != 0 else 0.0

    return GateResult(
        fidelity=float(fidelity),
        conditional_phase=phase,
        p_return=float(p_return),
        loss_decoherence=float(rec.n_decoh[-1]),
        loss_residual_internal=float(rec.n_int[-1]),
        mode_overlap=float(mode_ov),
        t_gate=timing.span,
        qubit_init=qubit_init,
        record=rec,
        timing=timing,
        pulse=f_in,
        reference=reference,
    )


def _wrap_angle(phi: float) -> float:
    return (phi + math.pi) % (2.0 * math.pi) - math.pi


def calibrate_hold(
    params: SystemParams,
    timing: GateTiming,
    pulse: Pulse | None,
    *,
    dt: float = DEFAULT_DT,
    variant: DeltaSVariant | None = None,
    rounds: int = 2,
) -> tuple[GateTiming, list[tuple[float, float]]]:
    """Adjust t_hold until the conditional phase lands on pi.

    Ramps and capture windows contribute extra dispersive phase beyond the
    hold itself, so the seed (t_hold = pi/rate) is off by a schedule-shaped
    amount.  Each round measures the phase with a full gate run at the
    final dt and corrects the hold by the exact dark-branch rate; the
    loop converges in one step up to the (tiny) curvature of phase vs
    hold and a second round pins it.
    """
    delta_s = variant.delta_s_low if variant is not None else None
    rate = spectral.hold_phase_rate(params, delta_s)
    history: list[tuple[float, float]] = []
    current = timing
    for _ in range(max(1, rounds)):
        result = run_gate(
            params, current, pulse, qubit_init="plus", dt=dt, variant=variant,
            decimation=10 ** 9, field_stride=10 ** 9,
        )
        phi = result.conditional_phase
        history.append((current.t_hold, phi))
        correction = _wrap_angle(phi - math.pi) / rate
        new_hold = current.t_hold + correction
        if new_hold <= 0.0:
            new_hold = current.t_hold + (correction + 2.0 * math.pi / rate)
        current = replace(current, t_hold=new_hold)
    return current, history


# ---------------------------------------------------------------------------
# hold diagnostics


@dataclass(frozen=True)
class HoldLeakage:
    """Probability that left the held system over a dark-hold window."""

    total: float        # 1 - norm_end / norm_start
    emitted: float      # into the waveguide, normalized to norm_start
    decohered: float    # through gamma_q / gamma_e drains
    rate: float         # -ln(norm ratio) / duration


def hold_leakage(
    params: SystemParams,
    duration: float,
    init: str = "exact_dark",
    *,
    pulse: Pulse | None = None,
    timing: GateTiming | None = None,
    dt: float = DEFAULT_DT,
) -> HoldLeakage:
    """Measure leakage out of the closed switch.

    init = "exact_dark": start in the zero-energy eigenstate at the dark
    point and hold.  init = "post_capture": run lead-in + closing ramp
    with the given pulse first, then score the hold window that follows.
    """
    op = spectral.operating_points(params)
    if init == "exact_dark":
        dark, _ = spectral.dark_state(params)
        track = Track(
            (Segment(0.0, duration, "constant", op.delta_q_off, op.delta_q_off),)
        )
        state = QuantumState(c_s_f=dark[0], c_q_f=dark[1], d_q_f=dark[2])
        rec = integrate(
            params, ControlSchedule(delta_q=track), initial_state=state,
            dt=dt, weights=(0.0, 1.0),
        )
        n0, n1 = 1.0, rec.n_int[-1]
        emitted = rec.int_ff
        decohered = rec.n_decoh[-1]
    elif init == "post_capture":
        if pulse is None or timing is None:
            raise ValueError("post_capture mode needs pulse and timing")
        cap = capture_photon(params, pulse, timing, t_tail=duration, dt=dt)
        rec = cap.record
        t_hold_start = timing.lead_in + timing.t_switch
        i0 = int(np.searchsorted(rec.t, t_hold_start - 1e-9))
        n0 = rec.n_int[i0]
        n1 = rec.n_int[-1]
        emitted = rec.n_out[-1] - rec.n_out[i0]
        decohered = rec.n_decoh[-1] - rec.n_decoh[i0]
    else:
        raise ValueError(f"unknown hold init {init!r}")
    if n0 <= 0.0:
        return HoldLeakage(0.0, 0.0, 0.0, 0.0)
    total = 1.0 - n1 / n0
    rate = -math.log(max(n1 / n0, 1e-300)) / duration
    return HoldLeakage(
        total=total, emitted=emitted / n0, decohered=decohered / n0, rate=rate
    )


def dispersive_hold_phase(
    params: SystemParams,
    duration: float,
    delta_s: float | None = None,
) -> float:
    """Phase the storage pair alone accumulates, by direct integration.

    Isolates the (C_s, D_s) block — the system T_pi is defined for — and
    integrates it with an independent adaptive method, so the value checks
    the closed-form rate rather than the production integrator.
    """
    ds = params.storage_detuning if delta_s is None else delta_s
    om = params.omega_s

    def rhs(_t, y):
        c = y[0] + 1j * y[1]
        d = y[2] + 1j * y[3]
        dc = -1j * om * d
        dd = -1j * (ds * d + om * c)
        return [dc.real, dc.imag, dd.real, dd.imag]

    sol = solve_ivp(
        rhs, (0.0, duration), [1.0, 0.0, 0.0, 0.0],
        method="DOP853", rtol=1e-11, atol=1e-12, dense_output=False,
    )
    c_final = sol.y[0, -1] + 1j * sol.y[1, -1]
    return cmath.phase(c_final)


# ---------------------------------------------------------------------------
# static-cavity baseline


@dataclass(frozen=True)
class StaticBaseline:
    """Reflection-phase gate with no dynamical switching."""

    chi: float                  # dispersive pull, same units as gamma
    gamma: float
    differential_phase: float   # carrier phase between qubit branches, rad
    averaged_phase: float       # weighted over the pulse spectrum, rad
    mode_overlap: float         # |spectrum-averaged branch overlap|^2


def chi_for_infidelity(gamma: float, epsilon: float) -> float:
    """Dispersive pull that leaves a conditional-phase infidelity epsilon.

    The carrier phase error of the reflection gate maps to infidelity
    cos^2(phase/2) = 1/(1 + (2 chi/gamma)^2); invert for chi.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be in (0, 1)")
    return 0.5 * gamma * math.sqrt((1.0 - epsilon) / epsilon)


def reflection_coefficient(delta: float, gamma: float) -> complex:
    """Single-sided cavity reflection at detuning delta from resonance."""
    return (1j * delta - 0.5 * gamma) / (1j * delta + 0.5 * gamma)


def static_baseline(
    gamma: float,
    chi: float,
    pulse_sigma: float | None = None,
) -> StaticBaseline:
    """Score the no-switching gate: phase from a dispersively pulled cavity.

    The g branch reflects off a cavity pulled by chi, the f branch off the
    bare cavity; the carrier picks up 2·arctan(2 chi/gamma) between them.
    With a pulse of temporal width sigma (same inverse units as gamma) the
    phase and overlap are averaged over its Gaussian intensity spectrum.
    """
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    carrier = 2.0 * math.atan2(2.0 * chi, gamma)
    if pulse_sigma is None or chi == 0.0:
        averaged = carrier
        mode_ov = 1.0 if chi == 0.0 else abs(
            cmath.exp(1j * carrier)
        ) ** 2  # single frequency: unit magnitude
        return StaticBaseline(chi, gamma, carrier, averaged, mode_ov)
    # amplitude spectrum of exp(-t^2/(4 sigma^2)) has std 1/(2 sigma)
    sigma_w = 1.0 / (2.0 * pulse_sigma)
    w = np.linspace(-8.0 * sigma_w, 8.0 * sigma_w, 4001)
    weight = np.exp(-(w**2) / (2.0 * sigma_w**2))
    weight /= np.trapezoid(weight, w)
    r_g = (1j * (w - chi) - 0.5 * gamma) / (1j * (w - chi) + 0.5 * gamma)
    r_f = (1j * w - 0.5 * gamma) / (1j * w + 0.5 * gamma)
    inner = np.trapezoid(weight * r_g * np.conj(r_f), w)
    averaged = cmath.phase(complex(inner))
    return StaticBaseline(
        chi=chi,
        gamma=gamma,
        differential_phase=carrier,
        averaged_phase=averaged,
        mode_overlap=float(abs(inner) ** 2),
    )
