"""Pulse grid arithmetic: norms, reversal, Gaussian fitting, overlaps."""

import math

import numpy as np
import pytest

from qswitch.errors import PulseError
from qswitch.pulses import Pulse, fit_gaussian, gaussian_pulse, overlap, time_reverse


def _random_pulse(rng, n=400, dt=0.01):
    samples = rng.normal(size=n) + 1j * rng.normal(size=n)
    return Pulse(samples, dt, t0=rng.uniform(-5, 5))


def test_pulse_validation():
    with pytest.raises(PulseError, match="two samples"):
        Pulse(np.array([1.0 + 0j]), 0.1)
    with pytest.raises(PulseError, match="positive"):
        Pulse(np.ones(4, dtype=complex), 0.0)


def test_call_interpolates_and_vanishes_outside():
    p = Pulse(np.array([0.0, 1.0, 0.0], dtype=complex), 1.0, t0=2.0)
    assert p(2.5) == 0.5
    assert p(3.0) == 1.0
    assert p(1.9) == 0.0
    assert p(4.1) == 0.0
    np.testing.assert_allclose(p(np.array([2.0, 2.5, 3.5])), [0.0, 0.5, 0.5])


def test_norm_squared_exact_for_linear_interpolant():
    # |f|^2 of a linear segment is quadratic; Simpson integrates it exactly.
    # f(t) = t on [0, 1] has integral of t^2 equal to 1/3.
    p = Pulse(np.array([0.0, 0.5, 1.0], dtype=complex), 0.5)
    assert abs(p.norm_squared() - 1.0 / 3.0) < 1e-15


def test_normalized_has_unit_norm():
    rng = np.random.default_rng(11)
    for _ in range(10):
        p = _random_pulse(rng).normalized()
        assert abs(p.norm_squared() - 1.0) < 1e-12


def test_normalize_zero_pulse_fails():
    with pytest.raises(PulseError, match="zero pulse"):
        Pulse(np.zeros(5, dtype=complex), 0.1).normalized()


def test_time_reverse_is_conjugate_flip():
    rng = np.random.default_rng(5)
    p = _random_pulse(rng)
    r = time_reverse(p)
    assert r.t0 == p.t0 and r.dt == p.dt
    np.testing.assert_array_equal(r.samples, np.conj(p.samples[::-1]))
    # involution, bitwise
    rr = time_reverse(r)
    np.testing.assert_array_equal(rr.samples, p.samples)


def test_time_reverse_preserves_norm():
    rng = np.random.default_rng(6)
    p = _random_pulse(rng)
    assert abs(time_reverse(p).norm_squared() - p.norm_squared()) < 1e-12


def test_gaussian_pulse_norm_and_peak():
    g = gaussian_pulse(t_peak=10.0, sigma=1.5, dt=0.01)
    assert abs(g.norm_squared() - 1.0) < 1e-12
    t_max = g.times[np.argmax(np.abs(g.samples))]
    assert abs(t_max - 10.0) < 0.01
    with pytest.raises(PulseError):
        gaussian_pulse(0.0, -1.0, 0.01)


def test_gaussian_intensity_variance_matches_sigma():
    sigma = 2.0
    g = gaussian_pulse(t_peak=0.0, sigma=sigma, dt=0.005)
    w = np.abs(g.samples) ** 2
    t = g.times
    var = (t**2 * w).sum() / w.sum()
    assert abs(math.sqrt(var) - sigma) < 1e-3


def test_fit_gaussian_recovers_parameters():
    g = gaussian_pulse(t_peak=7.0, sigma=0.8, dt=0.01)
    fit = fit_gaussian(g)
    assert abs(fit.t_peak - 7.0) < 1e-6
    assert abs(fit.sigma - 0.8) < 1e-6
    assert fit.residual < 1e-8


def test_fit_gaussian_reports_misfit_for_double_hump():
    # two separated humps cannot be matched by any single Gaussian
    t = 0.01 * np.arange(600)
    mag = np.exp(-((t - 1.5) ** 2)) + np.exp(-((t - 4.5) ** 2))
    fit = fit_gaussian(Pulse(mag.astype(complex), 0.01))
    assert fit.residual > 0.1


def test_overlap_matches_norm():
    rng = np.random.default_rng(9)
    p = _random_pulse(rng)
    self_ov = overlap(p, p)
    assert abs(self_ov.imag) < 1e-12
    assert abs(self_ov.real - p.norm_squared()) < 1e-9


def test_overlap_conjugate_symmetry():
    rng = np.random.default_rng(12)
    # same grid so interpolation error cancels between the two orders
    a = _random_pulse(rng, n=300, dt=0.02)
    b = Pulse(rng.normal(size=300) + 1j * rng.normal(size=300), 0.02, a.t0)
    assert abs(overlap(a, b) - np.conj(overlap(b, a))) < 1e-9


def test_overlap_of_disjoint_pulses_is_zero():
    a = Pulse(np.ones(10, dtype=complex), 0.1, t0=0.0)
    b = Pulse(np.ones(10, dtype=complex), 0.1, t0=100.0)
    assert abs(overlap(a, b)) == 0.0


def test_overlap_cauchy_schwarz():
    rng = np.random.default_rng(21)
    for _ in range(10):
        a = _random_pulse(rng, n=250, dt=0.015).normalized()
        b = Pulse(rng.normal(size=250) + 1j * rng.normal(size=250), 0.015, a.t0).normalized()
        assert abs(overlap(a, b)) <= 1.0 + 1e-9


def test_shifted_moves_window_only():
    rng = np.random.default_rng(30)
    p = _random_pulse(rng)
    q = p.shifted(3.5)
    assert q.t0 == p.t0 + 3.5
    np.testing.assert_array_equal(q.samples, p.samples)
