"""Single-excitation dynamics of the coupled storage/switch cavities.

The joint state of one photon and the two embedded atoms lives in a
seven-amplitude space: four amplitudes when the storage atom holds its
qubit in |g> (photon in mode s, storage atom excited, photon in mode q,
switch atom excited) and three when it holds |f> (the storage atom then
decouples, so its excited amplitude is absent).  Both branches are driven
by the same waveguide input and integrated together with classic
fixed-step fourth-order Runge-Kutta.

The waveguide is eliminated in the Markov approximation; the output field
follows from the input-output relation f_out = sqrt(gamma) C_q - f_in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _rk4
from .errors import NumericalFailure, PulseError
from .params import SystemParams, validate_params
from .pulses import Pulse
from .schedule import ControlSchedule, Track

DEFAULT_DT = 1e-3
DEFAULT_DECIMATION = 100

# RK4 is stable on the imaginary axis up to |lambda| dt = 2*sqrt(2); stay
# clearly inside.
_STABILITY_LIMIT = 2.5

# A run whose ledger drifts past this is reported as a numerical failure.
LEDGER_FAILURE = 1e-4

_QUBIT_WEIGHTS = {
    "plus": (0.5, 0.5),
    "minus": (0.5, 0.5),
    "g": (1.0, 0.0),
    "f": (0.0, 1.0),
}


@dataclass
class QuantumState:
    """The seven single-excitation amplitudes (g branch first)."""

    c_s_g: complex = 0.0
    d_s: complex = 0.0
    c_q_g: complex = 0.0
    d_q_g: complex = 0.0
    c_s_f: complex = 0.0
    c_q_f: complex = 0.0
    d_q_f: complex = 0.0

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.c_s_g, self.d_s, self.c_q_g, self.d_q_g,
             self.c_s_f, self.c_q_f, self.d_q_f],
            dtype=np.complex128,
        )

    @classmethod
    def from_array(cls, arr) -> "QuantumState":
        return cls(*[complex(v) for v in arr])


def derivative(
    state: QuantumState,
    t: float,
    params: SystemParams,
    delta_q: float,
    delta_s: float | None = None,
    f_in: complex = 0.0,
) -> QuantumState:
    """Time derivative of the amplitudes at one instant.

    A readable reference implementation of the equations of motion; the
    integrator uses a compiled copy of the same expressions.
    """
    ds_t = params.storage_detuning if delta_s is None else delta_s
    sqrt_gamma = math.sqrt(params.gamma)
    cq_damp = 1j * params.cavity_detuning + 0.5 * (params.gamma + params.gamma_q)
    dq_damp = 1j * (params.cavity_detuning + delta_q) + 0.5 * params.gamma_e
    return QuantumState(
        c_s_g=-1j * (params.omega_s * state.d_s + state.c_q_g),
        d_s=-1j * (ds_t * state.d_s + params.omega_s * state.c_s_g),
        c_q_g=-cq_damp * state.c_q_g - 1j * (state.c_s_g + params.omega_q * state.d_q_g)
        + sqrt_gamma * f_in,
        d_q_g=-dq_damp * state.d_q_g - 1j * params.omega_q * state.c_q_g,
        c_s_f=-1j * state.c_q_f,
        c_q_f=-cq_damp * state.c_q_f - 1j * (state.c_s_f + params.omega_q * state.d_q_f)
        + sqrt_gamma * f_in,
        d_q_f=-dq_damp * state.d_q_f - 1j * params.omega_q * state.c_q_f,
    )


@dataclass
class SimulationRecord:
    """Decimated trajectory plus full-rate boundary fields for one run."""

    params: SystemParams
    schedule: ControlSchedule
    weights: tuple[float, float]
    t: np.ndarray                 # snapshot times
    amplitudes: np.ndarray        # (n_snap, 7) complex
    delta_q: np.ndarray
    delta_s: np.ndarray
    n_int: np.ndarray
    n_out: np.ndarray
    n_in: np.ndarray
    n_decoh: np.ndarray
    fout_g: np.ndarray            # sampled every field_stride steps
    fout_f: np.ndarray
    fin: np.ndarray
    t_start: float
    dt: float
    n_steps: int
    decimation: int
    int_ff: float                 # integral |f_out^f|^2
    int_gg: float                 # integral |f_out^g|^2
    int_gf: complex               # integral conj(f_out^g) f_out^f
    int_ref: complex              # integral conj(f_ref) (f_out^f - f_out^g)/2
    pulse: Pulse | None = None
    initial_norm: float = 0.0
    field_stride: int = 1

    @property
    def full_times(self) -> np.ndarray:
        """Times of the recorded field samples; last one is always t_end."""
        idx = np.arange(len(self.fout_g), dtype=np.int64) * self.field_stride
        if len(idx):
            idx[-1] = self.n_steps
        return self.t_start + self.dt * idx

    def final_state(self) -> QuantumState:
        return QuantumState.from_array(self.amplitudes[-1])


@dataclass
class NormReport:
    """How well the probability ledger balances along a trajectory."""

    violation: np.ndarray
    max_violation: float
    t_at_max: float


def norm_ledger(record: SimulationRecord) -> NormReport:
    """Ledger residual N_int + N_out + N_decoh - N_in - N_int(0) at each snapshot."""
    if len(record.t) == 0:
        return NormReport(np.zeros(0), 0.0, 0.0)
    violation = (
        record.n_int + record.n_out + record.n_decoh - record.n_in - record.initial_norm
    )
    idx = int(np.argmax(np.abs(violation)))
    return NormReport(
        violation=violation,
        max_violation=float(abs(violation[idx])),
        t_at_max=float(record.t[idx]),
    )


def qubit_weights(qubit_init: str) -> tuple[float, float]:
    try:
        return _QUBIT_WEIGHTS[qubit_init]
    except KeyError:
        raise ValueError(
            f"unknown qubit_init {qubit_init!r}; known: {sorted(_QUBIT_WEIGHTS)}"
        ) from None


def _max_frequency_scale(params: SystemParams, schedule: ControlSchedule) -> float:
    """Bound on the largest eigenfrequency active during the run."""
    dq_ext = [abs(v) for seg in schedule.delta_q.segments for v in (seg.v_start, seg.v_end)]
    if schedule.delta_s is not None:
        ds_ext = [abs(v) for seg in schedule.delta_s.segments for v in (seg.v_start, seg.v_end)]
    else:
        ds_ext = [abs(params.storage_detuning)]
    dc = abs(params.cavity_detuning)
    rows = (
        params.omega_s + 1.0,
        max(ds_ext) + params.omega_s,
        dc + 1.0 + params.omega_q + 0.5 * (params.gamma + params.gamma_q),
        dc + max(dq_ext) + params.omega_q + 0.5 * params.gamma_e,
    )
    return max(rows)


def _empty_track_arrays():
    z = np.zeros(0)
    return z, z, np.zeros(0, dtype=np.int64), z, z


def integrate(
    params: SystemParams,
    schedule: ControlSchedule,
    pulse: Pulse | None = None,
    *,
    initial_state: QuantumState | None = None,
    t_span: tuple[float, float] | None = None,
    dt: float = DEFAULT_DT,
    decimation: int = DEFAULT_DECIMATION,
    field_stride: int = 1,
    weights: tuple[float, float] = (0.5, 0.5),
    reference: Pulse | None = None,
    check_ledger: bool = True,
) -> SimulationRecord:
    """Integrate the equations of motion over the schedule span.

    Parameters
    ----------
    pulse : Pulse or None
        Waveguide input drive, applied identically to both branches.
    initial_state : QuantumState or None
        Defaults to vacuum (all amplitudes zero).
    weights : (wg, wf)
        Branch weights of the initial qubit state, used by the ledger.
    reference : Pulse or None
        Optional reference mode; its overlap with the odd output
        combination is accumulated alongside the trajectory.

    Raises
    ------
    NumericalFailure
        If dt exceeds the RK4 stability bound for the stiffest active
        frequency, or the probability ledger drifts beyond 1e-4.
    """
    validate_params(params)
    if t_span is None:
        t_span = (schedule.t_start, schedule.t_end)
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError(f"empty integration span [{t0}, {t1}]")
    schedule.check_covers(t0, t1)
    if decimation < 1:
        raise ValueError("decimation must be >= 1")
    if field_stride < 1:
        raise ValueError("field_stride must be >= 1")

    scale = _max_frequency_scale(params, schedule)
    if dt * scale > _STABILITY_LIMIT:
        raise NumericalFailure(
            f"dt = {dt} unstable for frequency scale {scale:.3g} "
            f"(need dt < {_STABILITY_LIMIT / scale:.3g})"
        )

    n_steps = max(1, int(math.ceil((t1 - t0) / dt - 1e-9)))
    dt_eff = (t1 - t0) / n_steps

    y = np.zeros(_rk4.NSTATE, dtype=np.complex128)
    if initial_state is not None:
        y[: _rk4.NAMP] = initial_state.as_array()
    wg, wf = float(weights[0]), float(weights[1])
    initial_norm = wg * float(np.sum(np.abs(y[0:4]) ** 2)) + wf * float(
        np.sum(np.abs(y[4:7]) ** 2)
    )

    p = np.array(
        [
            params.omega_s,
            params.omega_q,
            params.gamma,
            params.cavity_detuning,
            params.gamma_q,
            params.gamma_e,
            math.sqrt(params.gamma),
            wg,
            wf,
            params.storage_detuning,
        ]
    )
    qt0, qt1_, qk, qv0, qv1 = schedule.delta_q.pack()
    if schedule.delta_s is not None:
        st0, st1_, sk, sv0, sv1 = schedule.delta_s.pack()
        has_ds = True
    else:
        st0, st1_, sk, sv0, sv1 = _empty_track_arrays()
        has_ds = False

    if pulse is not None:
        fin_s, fin_t0, fin_dt = pulse.samples, pulse.t0, pulse.dt
    else:
        fin_s, fin_t0, fin_dt = np.zeros(0, dtype=np.complex128), 0.0, 1.0
    if reference is not None:
        ref_s, ref_t0, ref_dt = reference.samples, reference.t0, reference.dt
    else:
        ref_s, ref_t0, ref_dt = np.zeros(0, dtype=np.complex128), 0.0, 1.0

    n_snap = n_steps // decimation + 1 + (1 if n_steps % decimation else 0)
    n_field = n_steps // field_stride + 1 + (1 if n_steps % field_stride else 0)
    traj_t = np.zeros(n_snap)
    traj_amp = np.zeros((n_snap, _rk4.NAMP), dtype=np.complex128)
    traj_dq = np.zeros(n_snap)
    traj_ds = np.zeros(n_snap)
    traj_led = np.zeros((n_snap, 4))
    fout_g = np.zeros(n_field, dtype=np.complex128)
    fout_f = np.zeros(n_field, dtype=np.complex128)
    fin_arr = np.zeros(n_field, dtype=np.complex128)

    used = _rk4.run_kernel(
        y, t0, dt_eff, n_steps, decimation, field_stride, p,
        qt0, qt1_, qk, qv0, qv1, st0, st1_, sk, sv0, sv1, has_ds,
        fin_s, fin_t0, fin_dt, ref_s, ref_t0, ref_dt,
        traj_t, traj_amp, traj_dq, traj_ds, traj_led,
        fout_g, fout_f, fin_arr,
    )

    record = SimulationRecord(
        params=params,
        schedule=schedule,
        weights=(wg, wf),
        t=traj_t[:used],
        amplitudes=traj_amp[:used],
        delta_q=traj_dq[:used],
        delta_s=traj_ds[:used],
        n_int=traj_led[:used, 0],
        n_out=traj_led[:used, 1],
        n_in=traj_led[:used, 2],
        n_decoh=traj_led[:used, 3],
        fout_g=fout_g,
        fout_f=fout_f,
        fin=fin_arr,
        t_start=t0,
        dt=dt_eff,
        n_steps=n_steps,
        decimation=decimation,
        int_ff=float(y[9].real),
        int_gg=float(y[10].real),
        int_gf=complex(y[11]),
        int_ref=complex(y[12]),
        pulse=pulse,
        initial_norm=initial_norm,
        field_stride=field_stride,
    )

    if not np.all(np.isfinite(record.amplitudes.view(np.float64))):
        raise NumericalFailure("non-finite amplitudes; integration diverged")
    if check_ledger:
        report = norm_ledger(record)
        if report.max_violation > LEDGER_FAILURE:
            raise NumericalFailure(
                f"probability ledger off by {report.max_violation:.3g} "
                f"at t = {report.t_at_max:.3f}"
            )
    return record
