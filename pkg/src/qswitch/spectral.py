"""Dressed-state structure of the coupled cavity-atom system.

In the single-excitation sector with the storage atom spectating, the
photon-in-mode-s, photon-in-mode-q and switch-atom-excited amplitudes mix
through a 3x3 matrix.  Its eigenvectors have the closed form

    (kappa omega_q,  E omega_q,  E (E - delta_q) - kappa^2) / N

for eigenvalue E, which this module evaluates directly: the eigenvalues
come from the characteristic cubic (trigonometric solution in the
lossless case, Newton refinement from the lossless roots otherwise).

Everything here is in hopping units (kappa = 1) unless a kappa override
is passed explicitly, which exists so the decoupled limits can be
inspected.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParamError
from .params import SystemParams, validate_params
from .schedule import ControlSchedule

_DEGENERACY_TOL = 1e-9


def dressed_matrix(
    params: SystemParams,
    delta_q: float,
    include_loss: bool = False,
    kappa: float | None = None,
) -> np.ndarray:
    """The 3x3 coupling matrix in the basis (|1>_s, |1>_q, |e>_q).

    With ``include_loss`` the waveguide and transverse cavity losses enter
    as -i(gamma + gamma_q)/2 on the cavity entry and -i gamma_e/2 on the
    atomic one, making the matrix complex symmetric.
    """
    k = params.kappa if kappa is None else kappa
    b = params.cavity_detuning + 0.0j
    c = params.cavity_detuning + delta_q + 0.0j
    if include_loss:
        b -= 0.5j * (params.gamma + params.gamma_q)
        c -= 0.5j * params.gamma_e
    m = np.array(
        [
            [0.0, k, 0.0],
            [k, b, params.omega_q],
            [0.0, params.omega_q, c],
        ],
        dtype=np.complex128,
    )
    if not include_loss:
        return m.real.astype(np.float64)
    return m


def storage_matrix(
    params: SystemParams, delta_q: float, delta_s: float | None = None
) -> np.ndarray:
    """The 4x4 lossless matrix including the storage atom's excited level.

    Basis (|1>_s, |e>_s, |1>_q, |e>_q); used for tracking the stored
    branch when the dispersive dressing of mode s matters.
    """
    ds = params.storage_detuning if delta_s is None else delta_s
    return np.array(
        [
            [0.0, params.omega_s, params.kappa, 0.0],
            [params.omega_s, ds, 0.0, 0.0],
            [params.kappa, 0.0, params.cavity_detuning, params.omega_q],
            [0.0, 0.0, params.omega_q, params.cavity_detuning + delta_q],
        ]
    )


@dataclass(frozen=True)
class Eigensystem:
    """Eigenvalues (ascending by real part) and matching unit eigenvectors."""

    energies: np.ndarray   # (3,) real or complex
    vectors: np.ndarray    # (3, 3), vectors[k] is the k-th eigenvector
    degenerate: bool
    lossy: bool


def _cubic_roots_real(b: float, c: float, omega: float, kappa: float) -> np.ndarray:
    """Real roots of E^3 - (b+c)E^2 + (bc - omega^2 - kappa^2)E + kappa^2 c."""
    s1 = b + c
    s2 = b * c - omega * omega - kappa * kappa
    s0 = kappa * kappa * c
    # depress with E = x + s1/3
    p = s2 - s1 * s1 / 3.0
    q = -2.0 * s1**3 / 27.0 + s1 * s2 / 3.0 + s0
    if p >= -1e-30:
        # (near-)triple root or decoupled edge; the matrix route is fine here
        h = np.array([[0.0, kappa, 0.0], [kappa, b, omega], [0.0, omega, c]])
        return np.linalg.eigvalsh(h)
    m = 2.0 * math.sqrt(-p / 3.0)
    arg = 3.0 * q / (p * m)
    arg = min(1.0, max(-1.0, arg))
    phi = math.acos(arg)
    roots = np.array(
        [m * math.cos((phi - 2.0 * math.pi * k) / 3.0) + s1 / 3.0 for k in range(3)]
    )
    return np.sort(roots)


def _refine_complex_roots(roots, b, c, omega, kappa):
    """Newton steps on the complex characteristic cubic, seeded per root."""
    s1 = b + c
    s2 = b * c - omega * omega - kappa * kappa
    s0 = kappa * kappa * c
    out = []
    for e in roots:
        z = complex(e)
        for _ in range(60):
            f = ((z - s1) * z + s2) * z + s0
            df = (3.0 * z - 2.0 * s1) * z + s2
            if df == 0:
                break
            step = f / df
            z -= step
            if abs(step) < 1e-15 * max(1.0, abs(z)):
                break
        out.append(z)
    return np.array(out, dtype=np.complex128)


def _closed_form_vector(e, b, omega, kappa):
    v = np.array(
        [kappa * omega, e * omega, e * (e - b) - kappa * kappa], dtype=np.complex128
    )
    n = np.linalg.norm(v)
    if n < 1e-12:
        return None
    v = v / n
    # deterministic phase: largest component real positive
    i = int(np.argmax(np.abs(v)))
    ph = v[i] / abs(v[i])
    return v / ph


def _orthonormal_eigenvectors(h, energies):
    """Fallback via the nullspace of (h - E) for (near-)degenerate pairs."""
    vecs = []
    for e in energies:
        a = h - e * np.eye(3)
        _, _, vh = np.linalg.svd(a)
        v = vh[-1].conj()
        for u in vecs:
            v = v - u * (np.vdot(u, v))
        n = np.linalg.norm(v)
        v = v / n if n > 1e-12 else v
        i = int(np.argmax(np.abs(v)))
        if abs(v[i]) > 0:
            v = v / (v[i] / abs(v[i]))
        vecs.append(v)
    return np.array(vecs)


def eigensystem(
    params: SystemParams,
    delta_q: float,
    include_loss: bool = False,
    kappa: float | None = None,
) -> Eigensystem:
    """Diagonalize the dressed 3x3 matrix via its characteristic cubic.

    Eigenvectors are built from the closed form and checked against the
    matrix; degenerate pairs fall back to an orthogonalized subspace and
    set the ``degenerate`` flag.
    """
    k = params.kappa if kappa is None else kappa
    omega = params.omega_q
    h = dressed_matrix(params, delta_q, include_loss=include_loss, kappa=kappa)
    b = h[1, 1]
    c = h[2, 2]

    real_b = b.real if include_loss else float(b)
    real_c = c.real if include_loss else float(c)
    roots = _cubic_roots_real(real_b, real_c, omega, k)
    if include_loss:
        energies = _refine_complex_roots(roots, b, c, omega, k)
        energies = energies[np.argsort(energies.real)]
    else:
        energies = roots

    scale = max(1.0, float(np.max(np.abs(energies))))
    gaps = np.abs(np.diff(np.sort(np.asarray(energies, dtype=np.complex128).real)))
    degenerate = bool(np.any(gaps < _DEGENERACY_TOL * scale))

    vectors = None
    if omega != 0.0 and not degenerate:
        built = [_closed_form_vector(e, b, omega, k) for e in energies]
        if all(v is not None for v in built):
            vectors = np.array(built)
            resid = max(
                float(np.linalg.norm(h @ v - e * v))
                for e, v in zip(energies, vectors)
            )
            if resid > 1e-7 * scale:
                vectors = None
    if vectors is None:
        if include_loss:
            vectors = _orthonormal_eigenvectors(h, energies)
        else:
            w, v = np.linalg.eigh(h)
            order = np.argsort(w)
            energies = w[order]
            vectors = v[:, order].T.astype(np.complex128)
            vectors = np.array(
                [u / (u[int(np.argmax(np.abs(u)))] / abs(u[int(np.argmax(np.abs(u)))]))
                 for u in vectors]
            )
            # double roots of the cubic split at sqrt(eps); retest with the
            # refreshed energies so the flag reflects what was returned
            gaps = np.abs(np.diff(energies))
            degenerate = degenerate or bool(np.any(gaps < _DEGENERACY_TOL * scale))

    if not include_loss:
        energies = np.asarray(energies, dtype=np.float64)
    return Eigensystem(
        energies=energies, vectors=vectors, degenerate=degenerate, lossy=include_loss
    )


# ---------------------------------------------------------------------------
# operating points and simple derived scales


@dataclass(frozen=True)
class OperatingPoints:
    """Switch-atom detunings that open and close the cavity interface."""

    delta_q_on: float
    delta_q_off: float
    resonant_branch: str  # which dressed switch branch crosses mode s at "on"


def switch_dressed_energies(params: SystemParams, delta_q: float) -> tuple[float, float]:
    """Eigenvalues of the bare switch pair (|1>_q, |e>_q), ascending."""
    mid = params.cavity_detuning + 0.5 * delta_q
    half = math.hypot(0.5 * delta_q, params.omega_q)
    return mid - half, mid + half


def operating_points(params: SystemParams) -> OperatingPoints:
    """The transmissive and dark detunings of the switch atom.

    "On" places one dressed switch branch at the storage-mode frequency;
    "off" is the two-photon resonance where a dark state decouples the
    photon from the waveguide.
    """
    validate_params(params)
    dq = params.cavity_detuning
    on = (params.omega_q**2 - dq**2) / dq
    off = -dq
    e_lo, e_hi = switch_dressed_energies(params, on)
    branch = "lower" if abs(e_lo) <= abs(e_hi) else "upper"
    return OperatingPoints(delta_q_on=on, delta_q_off=off, resonant_branch=branch)


def dark_state(params: SystemParams) -> tuple[np.ndarray, float]:
    """Zero-energy eigenvector at the off point and its |e>_q population.

    The dark state (omega_q, 0, -kappa)/sqrt(omega_q^2 + kappa^2) carries
    no switch-cavity amplitude, so it neither radiates into the waveguide
    nor feels the cavity linewidth; its only exposure is the atomic
    excited-state fraction kappa^2 / (kappa^2 + omega_q^2).
    """
    if params.omega_q == 0.0:
        raise ParamError("dark state undefined for omega_q = 0")
    v = np.array([params.omega_q, 0.0, -params.kappa])
    v = v / np.linalg.norm(v)
    e_pop = params.kappa**2 / (params.kappa**2 + params.omega_q**2)
    return v, e_pop


def t_pi(params: SystemParams, delta_s: float | None = None) -> float:
    """Hold duration for a pi differential phase at the dispersive rate
    omega_s^2 / delta_s."""
    ds = params.storage_detuning if delta_s is None else delta_s
    if params.omega_s == 0.0:
        raise ParamError("t_pi undefined for omega_s = 0")
    return math.pi * abs(ds) / params.omega_s**2


def dispersive_phase_rate(omega_s: float, delta_s: float) -> float:
    """Exact dressed-level splitting rate (sqrt(delta_s^2+4 omega_s^2)-delta_s)/2.

    Reduces to omega_s^2/delta_s to leading order in (omega_s/delta_s)^2.
    """
    return 0.5 * (math.hypot(delta_s, 2.0 * omega_s) - delta_s)


def absorption_estimate(params: SystemParams, delta_s: float | None = None) -> float:
    """Residual storage-atom excitation fraction (omega_s/delta_s)^2."""
    ds = params.storage_detuning if delta_s is None else delta_s
    if ds == 0.0:
        raise ParamError("absorption estimate undefined for delta_s = 0")
    return (params.omega_s / ds) ** 2


def hold_phase_rate(params: SystemParams, delta_s: float | None = None) -> float:
    """Differential phase rate between the qubit branches while stored.

    Both branches hold the photon in the dark superposition at the off
    point; the g branch additionally carries the dispersive dressing of the
    storage atom, which pulls its dark energy below the f branch's.  The
    difference of the two exact eigenvalues is the phase rate the hold
    accumulates.
    """
    op = operating_points(params)
    # f branch: dark eigenvalue of the 3x3 (zero at the off point)
    es_f = eigensystem(params, op.delta_q_off)
    i_f = int(np.argmax(np.abs(es_f.vectors[:, 0]) ** 2))
    e_f = float(es_f.energies[i_f])
    # g branch: storage-dominant eigenvalue of the 4x4
    h = storage_matrix(params, op.delta_q_off, delta_s)
    w, v = np.linalg.eigh(h)
    i_g = int(np.argmax(np.abs(v[0, :]) ** 2))
    e_g = float(w[i_g])
    return e_f - e_g


# ---------------------------------------------------------------------------
# eigenstate tracking along a schedule


@dataclass
class TrackedBranch:
    times: np.ndarray
    energies: np.ndarray
    vectors: np.ndarray  # (n, dim)
    min_overlap: float   # smallest consecutive |<v_i|v_{i+1}>|


def track_eigenstate(
    params: SystemParams,
    schedule: ControlSchedule,
    times: np.ndarray,
    seed_vector: np.ndarray,
    with_storage_atom: bool = False,
) -> TrackedBranch:
    """Follow one eigenstate along the schedule by maximum overlap.

    The branch is continued from sample to sample by picking the
    eigenvector with the largest overlap against the previous one (energy
    order would swap branches at avoided crossings).
    """
    times = np.asarray(times, dtype=float)
    dim = 4 if with_storage_atom else 3
    if len(seed_vector) != dim:
        raise ValueError(f"seed vector must have length {dim}")
    prev = np.asarray(seed_vector, dtype=np.complex128)
    prev = prev / np.linalg.norm(prev)
    energies = np.empty(len(times))
    vectors = np.empty((len(times), dim), dtype=np.complex128)
    min_overlap = 1.0
    for i, t in enumerate(times):
        dq = schedule.delta_q.value(float(t))
        ds = schedule.delta_s.value(float(t)) if schedule.delta_s is not None else None
        if with_storage_atom:
            h = storage_matrix(params, dq, ds)
        else:
            h = dressed_matrix(params, dq)
        w, v = np.linalg.eigh(h)
        ov = np.abs(prev.conj() @ v)
        k = int(np.argmax(ov))
        vec = v[:, k].astype(np.complex128)
        # orient along the previous sample for a continuous gauge
        phase = prev.conj() @ vec
        if phase != 0:
            vec = vec * (phase.conjugate() / abs(phase))
        if i > 0:
            min_overlap = min(min_overlap, float(ov[k]))
        energies[i] = w[k]
        vectors[i] = vec
        prev = vec
    return TrackedBranch(times=times, energies=energies, vectors=vectors,
                         min_overlap=min_overlap)


# ---------------------------------------------------------------------------
# adiabaticity of the sweep


@dataclass(frozen=True)
class AdiabaticityReport:
    times: np.ndarray
    values: np.ndarray
    max_value: float
    t_at_max: float
    mean_value: float
    mode: str


def adiabaticity_at(
    params: SystemParams,
    delta_q: float,
    ddq_dt: float,
    tracked_vector: np.ndarray,
) -> float:
    """Instantaneous sweep-rate criterion |<P'|dH/dt|P>| / gap^2.

    dH/dt is the Stark drive d(delta_q)/dt on the |e>_q projector; P is
    the eigenstate closest to ``tracked_vector`` and P' the eigenstate
    nearest to it in energy.  Evaluated on the lossless matrix.
    """
    h = dressed_matrix(params, delta_q)
    w, v = np.linalg.eigh(h)
    k = int(np.argmax(np.abs(np.asarray(tracked_vector).conj() @ v)))
    others = [j for j in range(3) if j != k]
    j = min(others, key=lambda j: abs(w[j] - w[k]))
    gap = w[j] - w[k]
    if abs(gap) < 1e-12:
        return math.inf
    elem = abs(ddq_dt) * abs(np.conj(v[2, j]) * v[2, k])
    return float(elem / gap**2)


def switch_adiabaticity(params: SystemParams, delta_q: float, ddq_dt: float) -> float:
    """Sweep-rate criterion for the dressed switch pair alone.

    For the two-level block (|1>_q, |e>_q) the matrix element and gap have
    closed forms, giving |d(delta_q)/dt| omega_q / gap^3 with
    gap = sqrt(delta_q^2 + 4 omega_q^2).  This is the figure of merit for
    dragging the dressed switch branch through its Stark sweep; it stays
    finite at the loading resonance, where the full three-level criterion
    is dominated by the intended storage-switch anticrossing itself.
    """
    gap = math.hypot(delta_q, 2.0 * params.omega_q)
    if gap == 0.0:
        return math.inf
    return abs(ddq_dt) * params.omega_q / gap**3


def adiabaticity_report(
    params: SystemParams,
    schedule: ControlSchedule,
    window: tuple[float, float],
    resolution: float = 0.05,
    mode: str = "switch-pair",
) -> AdiabaticityReport:
    """Sample the sweep-rate criterion across a schedule window.

    mode "switch-pair" uses the closed-form two-level criterion;
    mode "full" tracks the storage-dominant branch of the 3x3 from the end
    of the window (where it is the dark state) and applies the
    nearest-eigenstate criterion.  Returns the maximum and the time
    average.
    """
    t0, t1 = float(window[0]), float(window[1])
    n = max(2, int(math.ceil((t1 - t0) / resolution)) + 1)
    times = np.linspace(t0, t1, n)
    values = np.empty(n)
    if mode == "switch-pair":
        for i, t in enumerate(times):
            dq = schedule.delta_q.value(float(t))
            ddq = schedule.delta_q.derivative(float(t))
            values[i] = switch_adiabaticity(params, dq, ddq)
    elif mode == "full":
        # seed with the storage-dominant eigenstate at the window end
        h_end = dressed_matrix(params, schedule.delta_q.value(t1))
        w, v = np.linalg.eigh(h_end)
        seed = v[:, int(np.argmax(np.abs(v[0, :])))]
        branch = track_eigenstate(params, schedule, times[::-1], seed)
        for i, t in enumerate(times):
            dq = schedule.delta_q.value(float(t))
            ddq = schedule.delta_q.derivative(float(t))
            values[i] = adiabaticity_at(params, dq, ddq, branch.vectors[n - 1 - i])
    else:
        raise ValueError(f"unknown adiabaticity mode {mode!r}")
    finite = values[np.isfinite(values)]
    idx = int(np.argmax(values)) if len(finite) == len(values) else int(
        np.argmax(np.where(np.isfinite(values), values, np.inf))
    )
    return AdiabaticityReport(
        times=times,
        values=values,
        max_value=float(values[idx]),
        t_at_max=float(times[idx]),
        mean_value=float(finite.mean()) if len(finite) else math.inf,
        mode=mode,
    )
