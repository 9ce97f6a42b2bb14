"""Canned experiment runners and their file artifacts.

Each runner is a pure function of its inputs: rerunning one produces
byte-identical CSV/JSON output.  Experiments write three files into the
output directory when one is given — `<name>.csv`, `<name>.meta.json`,
`<name>.metrics.json` — and always return their results in memory.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dynamics import DEFAULT_DT, SimulationRecord, integrate
from .errors import ParamError
from .params import SystemParams, fig_params, preset, validate_params
from .protocol import (
    DeltaSVariant,
    EmissionSettings,
    EmissionResult,
    GateResult,
    GateTiming,
    calibrate_hold,
    default_timing,
    emit_photon,
    run_gate,
)
from .optimize import OptimizationProblem, optimize_schedule
from . import spectral

__all__ = [
    "SweepSpec",
    "SweepResult",
    "TRAJECTORY_HEADER",
    "write_csv",
    "write_table",
    "write_json",
    "parse_csv",
    "run_fig2",
    "run_fig3a",
    "run_fig3b",
    "run_fig3c",
    "run_realizations",
    "reproduce_all",
]

TRAJECTORY_HEADER = (
    "t,re_fin,im_fin,ps_g,ds,pq_g,dq_g,ps_f,pq_f,dq_f,"
    "re_fout_g,im_fout_g,re_fout_f,im_fout_f,delta_q,delta_s,"
    "n_int,n_out,n_in,n_decoh"
)


# ---------------------------------------------------------------------------
# deterministic writers

def _fmt(x: float) -> str:
    """Fixed-width scientific notation, 12 significant digits."""
    return f"{x:.11e}"


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError:
        if tmp.exists():
            tmp.unlink()
        raise


def write_table(path: str | Path, header: str, rows: Iterable[Sequence[float]]) -> Path:
    """Write a numeric CSV with the deterministic formatting contract."""
    path = Path(path)
    lines = [header]
    ncol = len(header.split(","))
    for row in rows:
        if len(row) != ncol:
            raise ValueError(f"row width {len(row)} != header width {ncol}")
        lines.append(",".join(_fmt(float(v)) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")
    return path


def _trajectory_rows(record: SimulationRecord) -> list[list[float]]:
    if len(record.fout_g) != len(record.t):
        raise ValueError(
            "field samples do not line up with snapshots; run with "
            "field_stride equal to decimation before exporting"
        )
    pops = np.abs(record.amplitudes) ** 2
    rows = []
    for i in range(len(record.t)):
        rows.append([
            record.t[i],
            record.fin[i].real, record.fin[i].imag,
            pops[i, 0], pops[i, 1], pops[i, 2], pops[i, 3],
            pops[i, 4], pops[i, 5], pops[i, 6],
            record.fout_g[i].real, record.fout_g[i].imag,
            record.fout_f[i].real, record.fout_f[i].imag,
            record.delta_q[i], record.delta_s[i],
            record.n_int[i], record.n_out[i], record.n_in[i], record.n_decoh[i],
        ])
    return rows


def write_csv(target, path: str | Path) -> Path:
    """Write a trajectory record or a (header, rows) sweep table to path."""
    if isinstance(target, SimulationRecord):
        return write_table(path, TRAJECTORY_HEADER, _trajectory_rows(target))
    header, rows = target
    return write_table(path, header, rows)


def write_json(obj: dict, path: str | Path) -> Path:
    path = Path(path)
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def parse_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read back a CSV written by write_table: (column names, data array)."""
    with open(path, "r", newline="") as fh:
        header = fh.readline().strip()
        body = fh.read()
    names = header.split(",")
    if not body.strip():
        return names, np.empty((0, len(names)))
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return names, data


def _params_dict(params: SystemParams) -> dict:
    return dataclasses.asdict(params)


def _timing_dict(timing: GateTiming) -> dict:
    return dataclasses.asdict(timing)


# ---------------------------------------------------------------------------
# sweep plumbing

@dataclass(frozen=True)
class SweepSpec:
    """One-parameter sweep: what to vary and how to derive each point."""

    name: str
    values: tuple[float, ...]
    params: SystemParams
    policy: str = "re-derived"   # or "fixed": keep one schedule for all points

    def __post_init__(self) -> None:
        if not self.values:
            raise ParamError("sweep needs at least one value")
        diffs = [b - a for a, b in zip(self.values, self.values[1:])]
        if diffs and not (all(d > 0 for d in diffs) or all(d < 0 for d in diffs)):
            raise ParamError("sweep values must be strictly monotone")
        if self.policy not in ("re-derived", "fixed"):
            raise ParamError(f"unknown sweep policy {self.policy!r}")
        validate_params(self.params)


@dataclass
class SweepResult:
    name: str
    header: str
    rows: list[list[float]]
    metrics: dict
    meta: dict
    paths: dict[str, Path]


def _run_points(worker, values, workers: int) -> list:
    """Evaluate worker over values, optionally with a thread pool.

    Results come back ordered by position regardless of completion order,
    so the output is independent of scheduling.
    """
    if workers <= 1 or len(values) <= 1:
        return [worker(v) for v in values]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, values))


def _emit_artifacts(result: SweepResult, out_dir: str | Path | None) -> SweepResult:
    if out_dir is None:
        return result
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result.paths["csv"] = write_csv((result.header, result.rows), out / f"{result.name}.csv")
    result.paths["meta"] = write_json(result.meta, out / f"{result.name}.meta.json")
    result.paths["metrics"] = write_json(result.metrics, out / f"{result.name}.metrics.json")
    return result


# ---------------------------------------------------------------------------
# Fig. 2: the reference gate

_FIG2_POLISH_BUDGET = 24


@dataclass
class _Fig2Tuning:
    params: SystemParams
    emission: EmissionResult
    timing: GateTiming
    result: GateResult
    record: SimulationRecord
    calibration: list[tuple[float, float]]
    polish_evals: int


_fig2_cache: dict[tuple, _Fig2Tuning] = {}


def _tuned_fig2(dt: float = DEFAULT_DT, polish_budget: int = _FIG2_POLISH_BUDGET) -> _Fig2Tuning:
    """Emission, hold calibration and a short simplex polish at the
    reference parameters.  Cached per (dt, budget) within the process."""
    key = (dt, polish_budget)
    if key in _fig2_cache:
        return _fig2_cache[key]
    params = fig_params()
    emission = emit_photon(params, dt=dt)
    seed = default_timing(params, emission.settings)
    calibrated, history = calibrate_hold(params, seed, emission.pulse, dt=dt)
    polish_evals = 0
    timing = calibrated
    if polish_budget >= 3:
        problem = OptimizationProblem(
            names=("align_offset", "t_hold"),
            bounds=((-1.0, 1.0), (calibrated.t_hold - 3.0, calibrated.t_hold + 3.0)),
            seed=calibrated,
            budget=polish_budget,
            pulse=emission.pulse,
            dt=dt,
        )
        timing, trace = optimize_schedule(problem, params)
        polish_evals = trace.n_evaluations
    result = run_gate(
        params, timing, emission.pulse, dt=dt,
        decimation=100, field_stride=100,
    )
    tuning = _Fig2Tuning(
        params=params,
        emission=emission,
        timing=timing,
        result=result,
        record=result.record,
        calibration=history,
        polish_evals=polish_evals,
    )
    _fig2_cache[key] = tuning
    return tuning


def run_fig2(
    out_dir: str | Path | None = None,
    *,
    dt: float = DEFAULT_DT,
    polish_budget: int = _FIG2_POLISH_BUDGET,
) -> tuple[SimulationRecord, GateResult]:
    """Reference-point gate with the tuned default schedule.

    Returns the trajectory record and the gate metrics; writes the
    trajectory CSV plus metadata/metrics JSON when out_dir is given.
    """
    tuning = _tuned_fig2(dt, polish_budget)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(tuning.record, out / "fig2.csv")
        write_json(tuning.result.metrics(), out / "fig2.metrics.json")
        meta = {
            "experiment": "fig2",
            "dt": dt,
            "params": _params_dict(tuning.params),
            "timing": _timing_dict(tuning.timing),
            "emission_p_out": tuning.emission.p_out,
            "calibration_history": [list(h) for h in tuning.calibration],
            "polish_evaluations": tuning.polish_evals,
        }
        write_json(meta, out / "fig2.meta.json")
    return tuning.record, tuning.result


# ---------------------------------------------------------------------------
# Fig. 3(a): outcoupling success vs waveguide rate

# Window short enough that slow emptying is visible at the low-gamma end
# while gamma = kappa still reaches 1 - O(1e-4).
_FIG3A_SETTINGS = EmissionSettings(t_settle=2.0, t_switch=10.0, t_emit=18.0)
_FIG3A_DT = 1.0e-4


def default_fig3a_spec() -> SweepSpec:
    return SweepSpec(
        name="gamma",
        values=tuple(float(g) for g in np.logspace(-1.0, 1.0, 13)),
        params=fig_params(),
    )


def run_fig3a(
    spec: SweepSpec | None = None,
    out_dir: str | Path | None = None,
    *,
    dt: float = _FIG3A_DT,
    workers: int = 1,
) -> SweepResult:
    """Emission success probability per waveguide rate."""
    spec = spec or default_fig3a_spec()

    def point(gamma: float) -> list[float]:
        p = dataclasses.replace(spec.params, gamma=float(gamma))
        em = emit_photon(p, _FIG3A_SETTINGS, dt=dt)
        return [float(gamma), em.p_out, 1.0 - em.p_out]

    rows = _run_points(point, spec.values, workers)
    p_out = [r[1] for r in rows]
    peak = int(np.argmax(p_out))
    metrics = {
        "peak_gamma": rows[peak][0],
        "p_out_at_peak": rows[peak][1],
        "p_out_first": rows[0][1],
        "p_out_last": rows[-1][1],
        "interior_maximum": 0 < peak < len(rows) - 1,
    }
    meta = {
        "experiment": "fig3a",
        "dt": dt,
        "params": _params_dict(spec.params),
        "settings": dataclasses.asdict(_FIG3A_SETTINGS),
        "grid": [r[0] for r in rows],
    }
    result = SweepResult("fig3a", "gamma,p_out,residual", rows, metrics, meta, {})
    return _emit_artifacts(result, out_dir)


# ---------------------------------------------------------------------------
# Fig. 3(b): premature leakage vs switch coupling

# Slow raised-cosine ramps keep transfer errors below the hold-shedding
# term whose scaling this sweep measures.
_FIG3B_SETTINGS = EmissionSettings(
    t_settle=2.0, t_switch=25.0, t_emit=50.0, profile="raised-cosine"
)
_FIG3B_DT = 2.0e-4
_FIG3B_DELTA_S = 1.0e4


def default_fig3b_spec() -> SweepSpec:
    return SweepSpec(
        name="omega_q",
        values=(10.0, 20.0, 40.0, 80.0, 100.0),
        params=fig_params(storage_detuning=_FIG3B_DELTA_S),
    )


def run_fig3b(
    spec: SweepSpec | None = None,
    out_dir: str | Path | None = None,
    *,
    dt: float = _FIG3B_DT,
    workers: int = 1,
) -> SweepResult:
    """Gate infidelity per switch coupling, everything re-derived per point."""
    spec = spec or default_fig3b_spec()

    def point(omega_q: float) -> list[float]:
        p = dataclasses.replace(spec.params, omega_q=float(omega_q))
        em = emit_photon(p, _FIG3B_SETTINGS, dt=dt)
        seed = default_timing(p, _FIG3B_SETTINGS)
        timing, _ = calibrate_hold(p, seed, em.pulse, dt=dt, rounds=1)
        res = run_gate(
            p, timing, em.pulse, dt=dt,
            decimation=10 ** 9, field_stride=10 ** 9,
        )
        ratio_sq = (p.kappa / omega_q) ** 2
        return [
            float(omega_q), res.fidelity, 1.0 - res.fidelity, ratio_sq,
            res.conditional_phase, res.p_return, em.p_out,
        ]

    rows = _run_points(point, spec.values, workers)
    logw = np.log([r[0] for r in rows])
    logi = np.log([max(r[2], 1e-300) for r in rows])
    slope, intercept = np.polyfit(logw, logi, 1)
    metrics = {
        "loglog_slope": float(slope),
        "loglog_intercept": float(intercept),
        "fidelity_last": rows[-1][1],
        "infidelity_by_omega_q": {str(r[0]): r[2] for r in rows},
    }
    meta = {
        "experiment": "fig3b",
        "dt": dt,
        "params": _params_dict(spec.params),
        "settings": dataclasses.asdict(_FIG3B_SETTINGS),
        "grid": [r[0] for r in rows],
        "calibration_rounds": 1,
    }
    result = SweepResult(
        "fig3b",
        "omega_q,fidelity,infidelity,kappa_over_omega_q_sq,"
        "conditional_phase_rad,p_return,p_out_emission",
        rows, metrics, meta, {},
    )
    return _emit_artifacts(result, out_dir)


# ---------------------------------------------------------------------------
# Fig. 3(c): fidelity vs decoherence rates

def default_fig3c_spec() -> SweepSpec:
    grid = (0.0,) + tuple(float(g) for g in np.logspace(-4.0, 0.0, 9))
    return SweepSpec(
        name="gamma_beta", values=grid, params=fig_params(), policy="fixed"
    )


def run_fig3c(
    spec: SweepSpec | None = None,
    out_dir: str | Path | None = None,
    *,
    dt: float = DEFAULT_DT,
    workers: int = 1,
) -> SweepResult:
    """Fidelity vs decoherence for three loss channels, fixed schedule.

    The schedule and pulse are the tuned reference-gate ones and are not
    re-calibrated per point, so the whole fidelity drop is attributable to
    the added decoherence; the zero-rate row reproduces the reference run
    bit for bit.
    """
    spec = spec or default_fig3c_spec()
    tuning = _tuned_fig2(dt)
    timing, pulse = tuning.timing, tuning.emission.pulse

    def fidelity_for(params: SystemParams) -> float:
        res = run_gate(
            params, timing, pulse, dt=dt,
            decimation=10 ** 9, field_stride=10 ** 9,
        )
        return res.fidelity

    def point(g: float) -> list[float]:
        g = float(g)
        if g == 0.0:
            f = fidelity_for(spec.params)
            return [g, f, f, f]
        return [
            g,
            fidelity_for(dataclasses.replace(spec.params, gamma_q=g)),
            fidelity_for(dataclasses.replace(spec.params, gamma_e=g)),
            fidelity_for(dataclasses.replace(spec.params, gamma_q=g, gamma_e=g)),
        ]

    rows = _run_points(point, spec.values, workers)
    by_gamma = {r[0]: r for r in rows}
    drop = None
    if 1e-3 in by_gamma and 1e-1 in by_gamma:
        drop = by_gamma[1e-3][3] - by_gamma[1e-1][3]
    metrics = {
        "fidelity_zero_rate": rows[0][1] if rows[0][0] == 0.0 else None,
        "reference_fidelity": tuning.result.fidelity,
        "equal_series_drop_1e-3_to_1e-1": drop,
    }
    meta = {
        "experiment": "fig3c",
        "dt": dt,
        "params": _params_dict(spec.params),
        "timing": _timing_dict(timing),
        "grid": [r[0] for r in rows],
        "series": ["gamma_q only", "gamma_e only", "both equal"],
    }
    result = SweepResult(
        "fig3c", "gamma_beta,f_gamma_q,f_gamma_e,f_both", rows, metrics, meta, {}
    )
    return _emit_artifacts(result, out_dir)


# ---------------------------------------------------------------------------
# physical realizations

_VARIANT = DeltaSVariant(delta_s_high=1.0e4, delta_s_low=130.0, t_ramp=2.0, margin=0.5)
_VARIANT_SETTINGS = EmissionSettings(t_settle=2.0, t_switch=10.0, t_emit=20.0)
_VARIANT_DT = 1.0e-4


def _static_realization(params: SystemParams, time_unit_s: float, dt: float) -> dict:
    em = emit_photon(params, dt=dt)
    seed = default_timing(params, em.settings)
    timing, _ = calibrate_hold(params, seed, em.pulse, dt=dt)
    res = run_gate(params, timing, em.pulse, dt=dt,
                   decimation=10 ** 9, field_stride=10 ** 9)
    return _realization_report(res, em, time_unit_s, variant=False)


def _variant_realization(params: SystemParams, time_unit_s: float) -> dict:
    em = emit_photon(params, _VARIANT_SETTINGS, dt=1.0e-3)
    seed = default_timing(params, _VARIANT_SETTINGS, _VARIANT.delta_s_low)
    seed = dataclasses.replace(seed, lead_out=25.0)
    timing, _ = calibrate_hold(
        params, seed, em.pulse, dt=_VARIANT_DT, variant=_VARIANT
    )
    res = run_gate(params, timing, em.pulse, dt=_VARIANT_DT, variant=_VARIANT,
                   decimation=10 ** 9, field_stride=10 ** 9)
    return _realization_report(res, em, time_unit_s, variant=True)


def _realization_report(
    res: GateResult, em: EmissionResult, time_unit_s: float, variant: bool
) -> dict:
    span = res.timing.span
    return {
        "fidelity": res.fidelity,
        "conditional_phase_rad": res.conditional_phase,
        "p_return": res.p_return,
        "emission_p_out": em.p_out,
        "gate_time_kappa_units": span,
        "gate_time_ns": span * time_unit_s * 1e9,
        "pulse_window_ns": em.settings.span * time_unit_s * 1e9,
        "scheduled_storage_detuning": variant,
    }


def run_realizations(out_dir: str | Path | None = None) -> dict:
    """Run both presets end to end and report in physical units."""
    nv = preset("nv-diamond")
    cq = preset("circuit-qed")
    report = {
        "nv_static": _static_realization(nv.params, nv.time_unit_s, DEFAULT_DT),
        "nv_variant": _variant_realization(nv.params, nv.time_unit_s),
        "circuit_qed_variant": _variant_realization(cq.params, cq.time_unit_s),
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        header = "fidelity,gate_time_ns,pulse_window_ns,p_return,scheduled_storage_detuning"
        rows = [
            [
                r["fidelity"], r["gate_time_ns"], r["pulse_window_ns"],
                r["p_return"], float(r["scheduled_storage_detuning"]),
            ]
            for r in report.values()
        ]
        write_table(out / "realizations.csv", header, rows)
        write_json(report, out / "realizations.metrics.json")
        meta = {
            "experiment": "realizations",
            "rows": list(report.keys()),
            "presets": {
                "nv-diamond": {"time_unit_ns": nv.time_unit_s * 1e9,
                               "params": _params_dict(nv.params)},
                "circuit-qed": {"time_unit_ns": cq.time_unit_s * 1e9,
                                "params": _params_dict(cq.params)},
            },
            "variant": dataclasses.asdict(_VARIANT),
        }
        write_json(meta, out / "realizations.meta.json")
    return report


# ---------------------------------------------------------------------------
# everything at once

def reproduce_all(
    out_dir: str | Path,
    *,
    workers: int = 1,
) -> dict[str, dict]:
    """Run every experiment into out_dir; returns a manifest of artifacts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest: dict[str, dict] = {}

    run_fig2(out)
    manifest["fig2"] = {"csv": str(out / "fig2.csv")}
    a = run_fig3a(out_dir=out, workers=workers)
    manifest["fig3a"] = {"csv": str(a.paths["csv"]), "peak_gamma": a.metrics["peak_gamma"]}
    b = run_fig3b(out_dir=out, workers=workers)
    manifest["fig3b"] = {"csv": str(b.paths["csv"]), "loglog_slope": b.metrics["loglog_slope"]}
    c = run_fig3c(out_dir=out, workers=workers)
    manifest["fig3c"] = {"csv": str(c.paths["csv"])}
    run_realizations(out)
    manifest["realizations"] = {"csv": str(out / "realizations.csv")}
    write_json(manifest, out / "manifest.json")
    return manifest
