"""Integrator correctness: kernel vs reference equations, ledger, scaling."""

import math

import numpy as np
import pytest

from qswitch.dynamics import (
    QuantumState,
    derivative,
    integrate,
    norm_ledger,
    qubit_weights,
)
from qswitch.errors import NumericalFailure
from qswitch.params import fig_params
from qswitch.pulses import Pulse, gaussian_pulse
from qswitch.schedule import ControlSchedule, Segment, Track, constant_track


def _random_state(rng, with_d_s=False):
    # d_s rotates at the full storage detuning; a macroscopic amplitude
    # there is unphysical (adiabatic runs keep it at ~omega_s/Delta_s) and
    # under-resolved at dt = 1e-3, so leave it empty unless asked
    amps = rng.normal(size=7) + 1j * rng.normal(size=7)
    if not with_d_s:
        amps[1] = 0.0
    amps /= np.linalg.norm(amps)
    return QuantumState.from_array(amps)


def _rk4_step(state, t, dt, params, sched, pulse):
    """One classic RK4 step through the readable reference derivative."""

    def f(s, ti):
        dq = sched.delta_q.value(ti)
        ds = sched.delta_s.value(ti) if sched.delta_s is not None else None
        fin = complex(pulse(ti)) if pulse is not None else 0.0
        return derivative(s, ti, params, dq, ds, fin).as_array()

    y = state.as_array()
    k1 = f(QuantumState.from_array(y), t)
    k2 = f(QuantumState.from_array(y + 0.5 * dt * k1), t + 0.5 * dt)
    k3 = f(QuantumState.from_array(y + 0.5 * dt * k2), t + 0.5 * dt)
    k4 = f(QuantumState.from_array(y + dt * k3), t + dt)
    return QuantumState.from_array(y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))


def test_kernel_matches_reference_derivative_stepping():
    rng = np.random.default_rng(42)
    params = fig_params(gamma=0.7, gamma_q=0.05, gamma_e=0.02)
    dt = 1e-3
    n = 10
    sched = ControlSchedule(
        delta_q=Track([Segment(0.0, n * dt, "linear", 30.0, 29.0)]),
        delta_s=Track([Segment(0.0, n * dt, "raised-cosine", 1000.0, 990.0)]),
    )
    pulse = gaussian_pulse(t_peak=5 * dt, sigma=3 * dt, dt=dt)
    state = _random_state(rng, with_d_s=True)

    # ledger check off: this state is not physical, only the stepping matters
    rec = integrate(params, sched, pulse, initial_state=state, dt=dt, decimation=1,
                    check_ledger=False)

    y = state
    for i in range(n):
        y = _rk4_step(y, i * dt, dt, params, sched, pulse)
    np.testing.assert_allclose(rec.amplitudes[-1], y.as_array(), rtol=0, atol=1e-12)


def test_single_step_snapshot_count():
    params = fig_params()
    sched = ControlSchedule(delta_q=constant_track(30.0, 0.0, 1e-3))
    rec = integrate(params, sched, dt=1e-3, decimation=1,
                    initial_state=QuantumState(c_s_g=1.0))
    assert rec.n_steps == 1
    assert len(rec.t) == 2
    assert rec.t[0] == 0.0 and abs(rec.t[-1] - 1e-3) < 1e-15


# ---------------------------------------------------------------------------
# conservation


def test_ledger_balances_without_losses():
    # the sudden start still rings d_s a little through omega_s; dt = 2e-4
    # resolves that transient well enough for the 1e-6 budget
    rng = np.random.default_rng(1)
    params = fig_params()
    sched = ControlSchedule(delta_q=constant_track(30.0, 0.0, 20.0))
    for _ in range(3):
        rec = integrate(params, sched, initial_state=_random_state(rng), dt=2e-4)
        assert norm_ledger(rec).max_violation < 1e-6


def test_ledger_balances_with_decoherence():
    rng = np.random.default_rng(2)
    params = fig_params(gamma_q=0.2, gamma_e=0.1)
    sched = ControlSchedule(delta_q=constant_track(-10.0, 0.0, 20.0))
    rec = integrate(params, sched, initial_state=_random_state(rng), dt=1e-3)
    rep = norm_ledger(rec)
    assert rep.max_violation < 1e-6
    assert rec.n_decoh[-1] > 1e-3  # the channels actually fired


def test_ledger_balances_with_input_drive():
    params = fig_params()
    sched = ControlSchedule(delta_q=constant_track(30.0, 0.0, 30.0))
    pulse = gaussian_pulse(t_peak=10.0, sigma=2.0, dt=1e-3)
    rec = integrate(params, sched, pulse, dt=1e-3)
    assert norm_ledger(rec).max_violation < 1e-6
    # all input is accounted for once the pulse has passed
    assert abs(rec.n_in[-1] - 1.0) < 1e-6


def test_input_norm_accumulation_matches_pulse_norm():
    params = fig_params()
    sched = ControlSchedule(delta_q=constant_track(-10.0, 0.0, 12.0))
    pulse = gaussian_pulse(t_peak=6.0, sigma=1.0, dt=1e-3)
    rec = integrate(params, sched, pulse, dt=1e-3)
    assert abs(rec.n_in[-1] - pulse.norm_squared()) < 1e-9


def test_closed_system_conserves_norm():
    # gamma = 0 closes the waveguide port; with no other loss the total
    # population must stay put
    rng = np.random.default_rng(3)
    params = fig_params(gamma=0.0, storage_detuning=50.0)
    sched = ControlSchedule(delta_q=constant_track(5.0, 0.0, 10.0))
    rec = integrate(params, sched, initial_state=_random_state(rng, with_d_s=True),
                    dt=5e-4, weights=(1.0, 0.0))
    n_g = np.sum(np.abs(rec.amplitudes[:, 0:4]) ** 2, axis=1)
    assert np.max(np.abs(n_g - n_g[0])) < 1e-7


# ---------------------------------------------------------------------------
# structure of the equations


def test_dynamics_linear_in_initial_state():
    rng = np.random.default_rng(4)
    params = fig_params(gamma_e=0.05)
    sched = ControlSchedule(delta_q=constant_track(30.0, 0.0, 5.0))
    s1 = _random_state(rng)
    s2 = _random_state(rng)
    alpha = 0.3 - 0.8j
    r1 = integrate(params, sched, initial_state=s1, dt=1e-3, check_ledger=False)
    r2 = integrate(params, sched, initial_state=s2, dt=1e-3, check_ledger=False)
    combo = QuantumState.from_array(alpha * s1.as_array() + s2.as_array())
    r3 = integrate(params, sched, initial_state=combo, dt=1e-3, check_ledger=False)
    np.testing.assert_allclose(
        r3.amplitudes[-1], alpha * r1.amplitudes[-1] + r2.amplitudes[-1],
        rtol=0, atol=1e-12,
    )


def test_branches_do_not_mix():
    params = fig_params()
    sched = ControlSchedule(delta_q=constant_track(30.0, 0.0, 10.0))
    rec_g = integrate(params, sched, initial_state=QuantumState(c_s_g=1.0),
                      dt=1e-3, weights=(1.0, 0.0))
    assert np.max(np.abs(rec_g.amplitudes[:, 4:7])) == 0.0
    rec_f = integrate(params, sched, initial_state=QuantumState(c_s_f=1.0),
                      dt=1e-3, weights=(0.0, 1.0))
    assert np.max(np.abs(rec_f.amplitudes[:, 0:4])) == 0.0


def test_storage_atom_decoupled_in_f_branch():
    # same drive, same schedule: the f branch sees no storage atom, so its
    # mode-s amplitude picks up no dispersive phase from Delta_s
    params = fig_params()
    sched = ControlSchedule(delta_q=constant_track(-10.0, 0.0, 5.0))
    a = integrate(params, sched, initial_state=QuantumState(c_s_f=1.0),
                  dt=1e-3, weights=(0.0, 1.0))
    b_params = fig_params(storage_detuning=500.0)
    b = integrate(b_params, sched, initial_state=QuantumState(c_s_f=1.0),
                  dt=1e-3, weights=(0.0, 1.0))
    np.testing.assert_allclose(a.amplitudes[:, 4], b.amplitudes[:, 4],
                               rtol=0, atol=1e-12)


def test_output_field_obeys_input_output_relation():
    params = fig_params(gamma=0.8)
    sched = ControlSchedule(delta_q=constant_track(30.0, 0.0, 10.0))
    pulse = gaussian_pulse(t_peak=5.0, sigma=1.0, dt=1e-3)
    rec = integrate(params, sched, pulse, dt=1e-3, decimation=50, field_stride=50)
    expect = math.sqrt(params.gamma) * rec.amplitudes[:, 2] - rec.fin
    np.testing.assert_allclose(rec.fout_g, expect, rtol=0, atol=1e-12)


# ---------------------------------------------------------------------------
# recording layout


def test_metrics_independent_of_decimation_and_stride():
    params = fig_params()
    sched = ControlSchedule(delta_q=constant_track(30.0, 0.0, 7.0))
    pulse = gaussian_pulse(t_peak=3.0, sigma=0.8, dt=1e-3)
    ref = integrate(params, sched, pulse, dt=1e-3, decimation=1, field_stride=1,
                    reference=pulse)
    for decim, stride in ((7, 1), (100, 100), (10**9, 10**9)):
        rec = integrate(params, sched, pulse, dt=1e-3, decimation=decim,
                        field_stride=stride, reference=pulse)
        assert rec.int_ff == ref.int_ff
        assert rec.int_gg == ref.int_gg
        assert rec.int_gf == ref.int_gf
        assert rec.int_ref == ref.int_ref
        np.testing.assert_array_equal(rec.amplitudes[-1], ref.amplitudes[-1])


def test_field_array_sizing_and_times():
    params = fig_params()
    sched = ControlSchedule(delta_q=constant_track(30.0, 0.0, 1.0))
    for stride in (1, 3, 7, 100, 999, 1000, 10**9):
        rec = integrate(params, sched, dt=1e-3, decimation=100,
                        field_stride=stride,
                        initial_state=QuantumState(c_s_g=1.0))
        n = rec.n_steps
        expect_len = n // stride + 1 + (1 if n % stride else 0)
        assert len(rec.fout_g) == expect_len
        assert len(rec.fout_f) == expect_len
        assert len(rec.fin) == expect_len
        times = rec.full_times
        assert times[0] == 0.0
        assert abs(times[-1] - 1.0) < 1e-12


def test_snapshot_grid_always_ends_at_t_end():
    params = fig_params()
    sched = ControlSchedule(delta_q=constant_track(30.0, 0.0, 1.0))
    rec = integrate(params, sched, dt=1e-3, decimation=7,
                    initial_state=QuantumState(c_s_g=1.0))
    assert abs(rec.t[-1] - 1.0) < 1e-12
    assert np.all(np.diff(rec.t) > 0)


# ---------------------------------------------------------------------------
# convergence order


def test_rk4_error_quarters_per_halving():
    # moderate detuning keeps every mode well resolved at the coarsest
    # step, so the error sits in the asymptotic fourth-order regime
    params = fig_params(storage_detuning=100.0)
    sched = ControlSchedule(delta_q=constant_track(30.0, 0.0, 4.0))
    state = QuantumState(c_s_g=1.0 / math.sqrt(2), c_q_f=1.0 / math.sqrt(2))

    def final(dt):
        rec = integrate(params, sched, initial_state=state, dt=dt)
        return rec.amplitudes[-1]

    y1, y2, y4 = final(1e-3), final(5e-4), final(2.5e-4)
    e12 = np.linalg.norm(y1 - y2)
    e24 = np.linalg.norm(y2 - y4)
    ratio = e12 / e24
    assert 14.0 < ratio < 18.0


# ---------------------------------------------------------------------------
# failure modes


def test_unstable_step_is_rejected():
    params = fig_params()  # storage_detuning 1000 sets the stiffness
    sched = ControlSchedule(delta_q=constant_track(30.0, 0.0, 1.0))
    with pytest.raises(NumericalFailure, match="unstable"):
        integrate(params, sched, dt=5e-3, initial_state=QuantumState(c_s_g=1.0))


def test_marginally_stable_run_trips_the_ledger():
    # just inside the stability bound the step error is macroscopic; the
    # ledger catches the norm it sheds
    params = fig_params()
    sched = ControlSchedule(delta_q=constant_track(30.0, 0.0, 50.0))
    with pytest.raises(NumericalFailure, match="ledger"):
        integrate(params, sched, dt=2.4e-3, initial_state=QuantumState(d_s=1.0),
                  weights=(1.0, 0.0))


def test_check_ledger_false_lets_a_bad_run_finish():
    params = fig_params()
    sched = ControlSchedule(delta_q=constant_track(30.0, 0.0, 50.0))
    rec = integrate(params, sched, dt=2.4e-3, initial_state=QuantumState(d_s=1.0),
                    weights=(1.0, 0.0), check_ledger=False)
    assert norm_ledger(rec).max_violation > 1e-4


def test_empty_span_rejected():
    params = fig_params()
    sched = ControlSchedule(delta_q=constant_track(30.0, 0.0, 1.0))
    with pytest.raises(ValueError, match="empty integration span"):
        integrate(params, sched, t_span=(0.5, 0.5))


def test_qubit_weights_names():
    assert qubit_weights("plus") == (0.5, 0.5)
    assert qubit_weights("g") == (1.0, 0.0)
    assert qubit_weights("f") == (0.0, 1.0)
    with pytest.raises(ValueError, match="unknown qubit_init"):
        qubit_weights("x")
