"""Waveguide pulse envelopes on a uniform grid.

A pulse is a complex amplitude f(t) sampled at spacing dt starting at t0,
linearly interpolated between samples and zero outside its span.  The
squared-norm quadrature is exact for the piecewise-linear interpolant
(Simpson on each interval), so a pulse normalized here integrates to one
under the same rule the dynamics ledger uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from .errors import PulseError


@dataclass(frozen=True)
class Pulse:
    samples: np.ndarray  # complex128
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        if self.samples.ndim != 1 or len(self.samples) < 2:
            raise PulseError("pulse needs at least two samples")
        if not self.dt > 0.0:
            raise PulseError(f"pulse grid spacing must be positive, got {self.dt}")
        object.__setattr__(self, "samples", np.ascontiguousarray(self.samples, dtype=np.complex128))

    @property
    def t_end(self) -> float:
        return self.t0 + (len(self.samples) - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.samples))

    def __call__(self, t):
        """Linear interpolation, zero outside the span."""
        s = (np.asarray(t, dtype=float) - self.t0) / self.dt
        n = len(self.samples) - 1
        inside = (s >= 0.0) & (s <= n)
        idx = np.clip(np.floor(s).astype(int), 0, n - 1)
        frac = s - idx
        vals = self.samples[idx] * (1.0 - frac) + self.samples[idx + 1] * frac
        return np.where(inside, vals, 0.0 + 0.0j)

    def norm_squared(self) -> float:
        """Integral of |f|^2, exact for the linear interpolant."""
        a = self.samples[:-1]
        b = self.samples[1:]
        # Simpson over one interval of a quadratic |f|^2:
        # (|a|^2 + 4|(a+b)/2|^2 + |b|^2)/6 = (|a|^2 + Re(a conj b) + |b|^2)/3
        terms = (np.abs(a) ** 2 + (a * b.conj()).real + np.abs(b) ** 2) / 3.0
        return float(self.dt * terms.sum())

    def normalized(self) -> "Pulse":
        n2 = self.norm_squared()
        if n2 <= 0.0:
            raise PulseError("cannot normalize a zero pulse")
        return Pulse(self.samples / math.sqrt(n2), self.dt, self.t0)

    def shifted(self, offset: float) -> "Pulse":
        return Pulse(self.samples, self.dt, self.t0 + offset)


def time_reverse(pulse: Pulse) -> Pulse:
    """Conjugate time reversal about the pulse span: f'(t) = conj(f(T - t)).

    The reversed pulse occupies the same [t0, t_end] window.  Reversing
    twice returns the original samples bitwise.
    """
    return Pulse(np.conj(pulse.samples[::-1]), pulse.dt, pulse.t0)


def gaussian_pulse(t_peak: float, sigma: float, dt: float, n_sigma: float = 6.0) -> Pulse:
    """Unit-norm Gaussian envelope exp(-(t-t_peak)^2 / (4 sigma^2)).

    sigma is the standard deviation of the intensity profile |f|^2.
    """
    if sigma <= 0.0:
        raise PulseError(f"gaussian width must be positive, got {sigma}")
    half = n_sigma * sigma
    n = max(2, int(math.ceil(2.0 * half / dt)))
    t = t_peak - half + dt * np.arange(n + 1)
    samples = np.exp(-((t - t_peak) ** 2) / (4.0 * sigma**2)).astype(np.complex128)
    return Pulse(samples, dt, t_peak - half).normalized()


@dataclass(frozen=True)
class GaussianFit:
    t_peak: float
    sigma: float
    amplitude: float
    residual: float  # relative L2 misfit of |f|


def fit_gaussian(pulse: Pulse) -> GaussianFit:
    """Least-squares fit of |f(t)| to a Gaussian envelope.

    The residual is ||  |f| - g ||_2 / || f ||_2 on the sample grid; a small
    residual says the envelope is close to Gaussian, which is what makes the
    reversed emission easy to approximate with a conventional source.
    """
    mag = np.abs(pulse.samples)
    total = float(np.sqrt((mag**2).sum()))
    if total == 0.0:
        raise PulseError("cannot fit a zero pulse")
    t = pulse.times
    # moment seeds
    w = mag**2
    t_mean = float((t * w).sum() / w.sum())
    var = float(((t - t_mean) ** 2 * w).sum() / w.sum())
    sigma0 = math.sqrt(max(var, pulse.dt**2))

    def model(x, amp, mu, sig):
        return amp * np.exp(-((x - mu) ** 2) / (4.0 * sig**2))

    p0 = [float(mag.max()), t_mean, sigma0]
    try:
        popt, _ = curve_fit(model, t, mag, p0=p0, maxfev=10000)
    except RuntimeError:
        popt = p0
    amp, mu, sig = float(popt[0]), float(popt[1]), abs(float(popt[2]))
    residual = float(np.sqrt(((mag - model(t, amp, mu, sig)) ** 2).sum()) / total)
    return GaussianFit(t_peak=mu, sigma=sig, amplitude=amp, residual=residual)


def overlap(a: Pulse, b: Pulse) -> complex:
    """Inner product integral(conj(a) * b) dt on a's grid (b interpolated).

    Uses Simpson with midpoints from linear interpolation, matching the
    quadrature order of the norm.
    """
    if len(a.samples) < 2:
        return 0.0j
    t = a.times
    fa = a.samples
    fb = b(t)
    t_mid = t[:-1] + 0.5 * a.dt
    fa_mid = 0.5 * (fa[:-1] + fa[1:])
    fb_mid = b(t_mid)
    integrand_ends = np.conj(fa) * fb
    terms = integrand_ends[:-1] + 4.0 * np.conj(fa_mid) * fb_mid + integrand_ends[1:]
    return complex(a.dt / 6.0 * terms.sum())
