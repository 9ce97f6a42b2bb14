"""Command-line front end.

Every run is driven by an optional strict-JSON config file plus a handful
of flags; artifacts land in the output directory as CSV + JSON sidecars.
Exit codes: 0 success, 1 config problem, 2 numerical failure, 3 I/O
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import experiments, spectral
from .dynamics import DEFAULT_DECIMATION, DEFAULT_DT, QuantumState, integrate
from .errors import ConfigError, NumericalFailure, ParamError, PulseError, ScheduleError
from .optimize import OptimizationProblem, optimize_schedule
from .params import SystemParams, fig_params, params_from_config, preset
from .protocol import (
    GateTiming,
    calibrate_hold,
    default_timing,
    emission_schedule,
    emit_photon,
    gate_schedule,
    run_gate,
)

__all__ = ["RunConfig", "parse_config", "dispatch", "main"]

_TIMING_KEYS = (
    "t_switch", "t_hold", "lead_in", "lead_out", "align_offset",
    "profile", "t_pulse_peak", "pulse_sigma",
)
_INTEGRATOR_KEYS = ("dt", "decimation")
_OPTIMIZE_KEYS = ("names", "bounds", "budget", "lambda_time")
_TOP_KEYS = ("params", "timing", "integrator", "experiment", "out", "workers", "optimize")


@dataclass
class RunConfig:
    params: SystemParams
    timing: GateTiming | None
    dt: float
    decimation: int
    experiment: str | None
    out: str | None
    workers: int
    optimize: dict | None
    dt_explicit: bool = False


def _require_mapping(block, name: str) -> dict:
    if not isinstance(block, dict):
        raise ConfigError(f"{name} block must be a mapping")
    return block


def parse_config(text: str) -> RunConfig:
    """Strict JSON config: unknown keys are fatal at every level."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    doc = _require_mapping(doc, "config")
    unknown = set(doc) - set(_TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    if "params" in doc:
        params = params_from_config(_require_mapping(doc["params"], "params"))
    else:
        params = fig_params()

    timing = None
    if "timing" in doc:
        block = _require_mapping(doc["timing"], "timing")
        unknown = set(block) - set(_TIMING_KEYS)
        if unknown:
            raise ConfigError(f"unknown timing keys: {sorted(unknown)}")
        timing = dataclasses.replace(GateTiming(), **block)
        try:
            timing.validate()
        except ScheduleError as exc:
            raise ConfigError(str(exc)) from exc

    dt = DEFAULT_DT
    decimation = DEFAULT_DECIMATION
    dt_explicit = False
    if "integrator" in doc:
        block = _require_mapping(doc["integrator"], "integrator")
        unknown = set(block) - set(_INTEGRATOR_KEYS)
        if unknown:
            raise ConfigError(f"unknown integrator keys: {sorted(unknown)}")
        dt_explicit = "dt" in block
        dt = float(block.get("dt", dt))
        decimation = int(block.get("decimation", decimation))
        if dt <= 0.0 or decimation < 1:
            raise ConfigError("integrator needs dt > 0 and decimation >= 1")

    optimize_block = None
    if "optimize" in doc:
        block = _require_mapping(doc["optimize"], "optimize")
        unknown = set(block) - set(_OPTIMIZE_KEYS)
        if unknown:
            raise ConfigError(f"unknown optimize keys: {sorted(unknown)}")
        optimize_block = block

    experiment = doc.get("experiment")
    if experiment is not None and not isinstance(experiment, str):
        raise ConfigError("experiment must be a string")
    out = doc.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("out must be a path string")
    workers = doc.get("workers", 1)
    if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
        raise ConfigError("workers must be a positive integer")

    return RunConfig(
        params=params, timing=timing, dt=dt, decimation=decimation,
        experiment=experiment, out=out, workers=workers,
        optimize=optimize_block, dt_explicit=dt_explicit,
    )


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as config errors (exit 1)."""

    def error(self, message):  # noqa: A002 - argparse API
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="qswitch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="strict JSON config file")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--workers", type=int, help="sweep worker threads")
        p.add_argument("--dt", type=float, help="integrator step, kappa^-1")

    common(sub.add_parser("simulate", help="run one gate and write its trajectory"))
    sweep = sub.add_parser("sweep", help="run a parameter sweep")
    sweep.add_argument("target", choices=("fig3a", "fig3b", "fig3c"))
    common(sweep)
    common(sub.add_parser("emit", help="release a stored photon and record the pulse"))
    common(sub.add_parser("optimize", help="tune schedule parameters for fidelity"))
    common(sub.add_parser("analyze", help="eigenstructure and adiabaticity along the schedule"))
    pre = sub.add_parser("preset", help="print a named physical realization")
    pre.add_argument("name", choices=("nv-diamond", "circuit-qed"))
    common(sub.add_parser("reproduce-all", help="every experiment into one directory"))
    return parser


def _load_config(args) -> RunConfig:
    if getattr(args, "config", None) is not None:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        cfg = parse_config(text)
    else:
        cfg = parse_config("{}")
    if getattr(args, "dt", None) is not None:
        if args.dt <= 0.0:
            raise ConfigError("dt must be positive")
        cfg.dt = args.dt
        cfg.dt_explicit = True
    if getattr(args, "workers", None) is not None:
        if args.workers < 1:
            raise ConfigError("workers must be >= 1")
        cfg.workers = args.workers
    out = getattr(args, "out", None) or cfg.out or os.environ.get("QSWITCH_OUT")
    cfg.out = str(out) if out else None
    return cfg


def _need_out(cfg: RunConfig) -> Path:
    if cfg.out is None:
        raise ConfigError(
            "an output directory is required: pass --out, set QSWITCH_OUT, "
            "or put \"out\" in the config"
        )
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _resolved_gate(cfg: RunConfig):
    """Emission pulse plus timing: config timing as-is, else calibrated."""
    em = emit_photon(cfg.params, dt=cfg.dt)
    if cfg.timing is not None:
        return em, cfg.timing
    seed = default_timing(cfg.params, em.settings)
    timing, _ = calibrate_hold(cfg.params, seed, em.pulse, dt=cfg.dt)
    return em, timing


def _cmd_simulate(cfg: RunConfig) -> int:
    out = _need_out(cfg)
    em, timing = _resolved_gate(cfg)
    result = run_gate(
        cfg.params, timing, em.pulse, dt=cfg.dt,
        decimation=cfg.decimation, field_stride=cfg.decimation,
    )
    experiments.write_csv(result.record, out / "gate.csv")
    experiments.write_json(result.metrics(), out / "gate.metrics.json")
    experiments.write_json(
        {
            "experiment": "simulate",
            "dt": cfg.dt,
            "decimation": cfg.decimation,
            "params": dataclasses.asdict(cfg.params),
            "timing": dataclasses.asdict(timing),
            "emission_p_out": em.p_out,
        },
        out / "gate.meta.json",
    )
    print(f"F = {result.fidelity:.6f}  phase = {result.conditional_phase:+.6f} rad"
          f"  ->  {out / 'gate.csv'}")
    return 0


def _cmd_sweep(cfg: RunConfig, target: str) -> int:
    out = _need_out(cfg)
    runner = {
        "fig3a": experiments.run_fig3a,
        "fig3b": experiments.run_fig3b,
        "fig3c": experiments.run_fig3c,
    }[target]
    # each sweep carries its own resolved step size; only an explicit
    # --dt or integrator.dt overrides it
    kwargs = {"dt": cfg.dt} if cfg.dt_explicit else {}
    res = runner(out_dir=out, workers=cfg.workers, **kwargs)
    print(f"{target}: {len(res.rows)} points  ->  {res.paths['csv']}")
    return 0


def _cmd_emit(cfg: RunConfig) -> int:
    out = _need_out(cfg)
    em = emit_photon(cfg.params, dt=cfg.dt)
    # the capture pulse needs full-rate fields, the CSV wants fields on
    # the snapshot grid; rerun the (cheap) release with matched strides
    export = integrate(
        cfg.params,
        emission_schedule(cfg.params, em.settings),
        initial_state=QuantumState(c_s_f=1.0 + 0.0j),
        dt=cfg.dt,
        decimation=cfg.decimation,
        field_stride=cfg.decimation,
    )
    experiments.write_csv(export, out / "emit.csv")
    experiments.write_json(
        {
            "p_out": em.p_out,
            "emission_failed": em.emission_failed,
            "pulse_samples": len(em.pulse.samples),
            "pulse_t0": em.pulse.t0,
            "pulse_dt": em.pulse.dt,
        },
        out / "emit.metrics.json",
    )
    experiments.write_json(
        {
            "experiment": "emit",
            "dt": cfg.dt,
            "params": dataclasses.asdict(cfg.params),
            "settings": dataclasses.asdict(em.settings),
        },
        out / "emit.meta.json",
    )
    print(f"P_out = {em.p_out:.6f}  ->  {out / 'emit.metrics.json'}")
    return 0


def _cmd_optimize(cfg: RunConfig) -> int:
    out = _need_out(cfg)
    em, seed = _resolved_gate(cfg)
    block = cfg.optimize or {}
    names = tuple(block.get("names", ("align_offset", "t_hold")))
    default_bounds = {
        "align_offset": (-2.0, 2.0),
        "t_hold": (seed.t_hold - 5.0, seed.t_hold + 5.0),
        "t_switch": (max(1.0, seed.t_switch / 2), seed.t_switch * 2),
        "lead_in": (max(1.0, seed.lead_in / 2), seed.lead_in * 2),
        "lead_out": (max(1.0, seed.lead_out / 2), seed.lead_out * 2),
    }
    if "bounds" in block:
        bounds = tuple(tuple(float(v) for v in b) for b in block["bounds"])
    else:
        try:
            bounds = tuple(default_bounds[n] for n in names)
        except KeyError as exc:
            raise ConfigError(
                f"no default bounds for {exc.args[0]}; give explicit bounds"
            ) from exc
    problem = OptimizationProblem(
        names=names,
        bounds=bounds,
        seed=seed,
        budget=int(block.get("budget", 60)),
        lambda_time=float(block.get("lambda_time", 0.0)),
        pulse=em.pulse,
        dt=cfg.dt,
    )
    best, trace = optimize_schedule(problem, cfg.params)
    rows = [
        [float(i), *point, value]
        for i, (point, value) in enumerate(zip(trace.points, trace.values))
    ]
    header = "iteration," + ",".join(names) + ",objective"
    experiments.write_table(out / "optimize.csv", header, rows)
    experiments.write_json(
        {
            "best_timing": dataclasses.asdict(best),
            "best_objective": trace.best_value,
            "converged": trace.converged,
            "n_evaluations": trace.n_evaluations,
        },
        out / "optimize.metrics.json",
    )
    experiments.write_json(
        {
            "experiment": "optimize",
            "dt": cfg.dt,
            "params": dataclasses.asdict(cfg.params),
            "free_parameters": list(names),
            "bounds": [list(b) for b in bounds],
        },
        out / "optimize.meta.json",
    )
    print(f"best objective = {trace.best_value:.6f} after {trace.n_evaluations} "
          f"evaluations  ->  {out / 'optimize.csv'}")
    return 0


def _cmd_analyze(cfg: RunConfig) -> int:
    out = _need_out(cfg)
    timing = cfg.timing
    if timing is None:
        timing = default_timing(cfg.params)
    sched = gate_schedule(cfg.params, timing)
    window = (sched.t_start, sched.t_end)
    full = spectral.adiabaticity_report(cfg.params, sched, window,
                                        resolution=0.05, mode="full")
    times = full.times
    # follow the storage-dominant branch backwards from the end, where it
    # sits on the dark state (same seeding the report uses internally)
    h_end = spectral.dressed_matrix(cfg.params, sched.delta_q.value(float(times[-1])))
    _, v_end = np.linalg.eigh(h_end)
    seed = v_end[:, int(np.argmax(np.abs(v_end[0, :])))]
    branch = spectral.track_eigenstate(cfg.params, sched, times[::-1], seed)
    rows = []
    for i, t in enumerate(times):
        h = spectral.dressed_matrix(cfg.params, sched.delta_q.value(float(t)))
        energies = np.linalg.eigvalsh(h)
        vec = branch.vectors[len(times) - 1 - i]
        rows.append([
            float(t), energies[0], energies[1], energies[2],
            abs(vec[0]) ** 2, abs(vec[1]) ** 2, abs(vec[2]) ** 2,
            full.values[i],
        ])
    experiments.write_table(
        out / "analyze.csv",
        "t,E1,E2,E3,overlap_s,overlap_q,overlap_e,A_t",
        rows,
    )
    switch = spectral.adiabaticity_report(cfg.params, sched, window,
                                          resolution=0.05, mode="switch-pair")
    experiments.write_json(
        {
            "max_adiabaticity_full": full.max_value,
            "max_adiabaticity_switch_pair": switch.max_value,
            "t_at_max_full": full.t_at_max,
            "t_at_max_switch_pair": switch.t_at_max,
        },
        out / "analyze.metrics.json",
    )
    experiments.write_json(
        {
            "experiment": "analyze",
            "params": dataclasses.asdict(cfg.params),
            "timing": dataclasses.asdict(timing),
            "resolution": 0.05,
        },
        out / "analyze.meta.json",
    )
    print(f"max A (switch pair) = {switch.max_value:.3e}  ->  {out / 'analyze.csv'}")
    return 0


def _cmd_preset(name: str) -> int:
    pr = preset(name)
    doc = {
        "name": pr.name,
        "params": dataclasses.asdict(pr.params),
        "physical": dataclasses.asdict(pr.physical),
        "time_unit_s": pr.time_unit_s,
        "notes": pr.notes,
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def _cmd_reproduce_all(cfg: RunConfig) -> int:
    out = _need_out(cfg)
    manifest = experiments.reproduce_all(out, workers=cfg.workers)
    for name, info in manifest.items():
        print(f"{name}: {info['csv']}")
    return 0


def dispatch(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "preset":
            return _cmd_preset(args.name)
        cfg = _load_config(args)
        if args.command == "simulate":
            return _cmd_simulate(cfg)
        if args.command == "sweep":
            return _cmd_sweep(cfg, args.target)
        if args.command == "emit":
            return _cmd_emit(cfg)
        if args.command == "optimize":
            return _cmd_optimize(cfg)
        if args.command == "analyze":
            return _cmd_analyze(cfg)
        if args.command == "reproduce-all":
            return _cmd_reproduce_all(cfg)
        raise ConfigError(f"unhandled command {args.command!r}")
    except (ConfigError, ParamError, ScheduleError, PulseError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


def main() -> int:
    return dispatch(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
