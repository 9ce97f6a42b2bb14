"""Derivative-free tuning of the gate schedule.

The hold length, ramp duration and pulse alignment that maximize fidelity
are not known in closed form, so they are found with a downhill simplex
search.  The implementation is deliberately plain: no randomness, bounds
handled by reflection, one restart from the best point.  Identical inputs
give identical traces.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import NumericalFailure, ParamError
from .params import SystemParams
from .pulses import Pulse
from .protocol import DeltaSVariant, GateTiming, run_gate
from .dynamics import DEFAULT_DT

__all__ = [
    "OptimizationProblem",
    "OptimizationTrace",
    "simplex_search",
    "objective_gate",
    "optimize_schedule",
]

# Fields of GateTiming the optimizer may touch directly, plus the variant
# knobs it reaches through DeltaSVariant.
_TIMING_FIELDS = frozenset(
    ("t_switch", "t_hold", "lead_in", "lead_out", "align_offset",
     "t_pulse_peak", "pulse_sigma")
)
_VARIANT_FIELDS = frozenset(("delta_s_high", "delta_s_low", "t_ramp", "margin"))

_XTOL = 1.0e-6
_FTOL = 1.0e-10

Vector = list[float]


@dataclass
class OptimizationProblem:
    """What to vary, within what bounds, against which objective."""

    names: tuple[str, ...]
    bounds: tuple[tuple[float, float], ...]
    seed: GateTiming
    budget: int = 200
    lambda_time: float = 0.0     # objective = F - lambda_time * gate span
    pulse: Pulse | None = None
    variant: DeltaSVariant | None = None
    qubit_init: str = "plus"
    dt: float = DEFAULT_DT

    def __post_init__(self) -> None:
        if len(self.names) != len(self.bounds):
            raise ParamError("one bound pair per free parameter required")
        if not self.names:
            raise ParamError("no free parameters to optimize")
        for name in self.names:
            if name not in _TIMING_FIELDS and name not in _VARIANT_FIELDS:
                raise ParamError(f"unknown schedule parameter: {name}")
            if name in _VARIANT_FIELDS and self.variant is None:
                raise ParamError(
                    f"parameter {name} needs a DeltaSVariant on the problem"
                )
        for name, (lo, hi) in zip(self.names, self.bounds):
            if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
                raise ParamError(f"bad bounds for {name}: [{lo}, {hi}]")
        if self.budget < len(self.names) + 1:
            raise ParamError("budget must be at least dimension + 1")

    def seed_vector(self) -> Vector:
        out = []
        for name in self.names:
            src = self.variant if name in _VARIANT_FIELDS else self.seed
            val = getattr(src, name)
            if val is None:
                raise ParamError(f"seed timing has no value for {name}")
            out.append(float(val))
        return out

    def build(self, x: Sequence[float]) -> tuple[GateTiming, DeltaSVariant | None]:
        t_kw = {}
        v_kw = {}
        for name, val in zip(self.names, x):
            (v_kw if name in _VARIANT_FIELDS else t_kw)[name] = float(val)
        timing = dataclasses.replace(self.seed, **t_kw)
        variant = self.variant
        if v_kw:
            variant = dataclasses.replace(variant, **v_kw)
        return timing, variant


@dataclass
class OptimizationTrace:
    points: list[tuple[float, ...]]
    values: list[float]
    best_point: tuple[float, ...]
    best_value: float
    converged: bool
    n_evaluations: int

    def best_so_far(self) -> list[float]:
        out = []
        cur = -math.inf
        for v in self.values:
            cur = max(cur, v)
            out.append(cur)
        return out


def _reflect_into(x: float, lo: float, hi: float) -> float:
    """Fold a coordinate back into [lo, hi] by mirroring at the walls."""
    if lo <= x <= hi:
        return x
    width = hi - lo
    y = (x - lo) % (2.0 * width)
    if y > width:
        y = 2.0 * width - y
    return lo + y


def _spread(xs: list[Vector], fs: list[float]) -> tuple[float, float]:
    xspread = 0.0
    for x in xs[1:]:
        for a, b in zip(x, xs[0]):
            xspread = max(xspread, abs(a - b))
    finite = [f for f in fs if math.isfinite(f)]
    fspread = (max(finite) - min(finite)) if len(finite) > 1 else math.inf
    return xspread, fspread


def simplex_search(
    func: Callable[[Vector], float],
    x0: Sequence[float],
    bounds: Sequence[tuple[float, float]],
    budget: int,
) -> OptimizationTrace:
    """Maximize func by downhill simplex with mirrored bounds.

    Initial simplex edges are 10% of each bound range.  After the first
    descent converges the search restarts once from the incumbent with a
    fresh full-size simplex, which guards against premature collapse and
    guarantees the result is never worse than anything already seen.
    """
    dim = len(x0)
    if len(bounds) != dim:
        raise ParamError("one bound pair per coordinate required")
    if budget < dim + 1:
        raise ParamError("budget must be at least dimension + 1")
    lo = [b[0] for b in bounds]
    hi = [b[1] for b in bounds]
    trace_x: list[tuple[float, ...]] = []
    trace_f: list[float] = []
    evals = 0

    def evaluate(x: Vector) -> float:
        nonlocal evals
        f = func(x)
        if not isinstance(f, float):
            f = float(f)
        if math.isnan(f):
            f = -math.inf
        trace_x.append(tuple(x))
        trace_f.append(f)
        evals += 1
        return f

    def clip(x: Vector) -> Vector:
        return [_reflect_into(v, lo[i], hi[i]) for i, v in enumerate(x)]

    def initial_simplex(center: Vector) -> list[Vector]:
        simplex = [clip(list(center))]
        for i in range(dim):
            cand = list(simplex[0])
            cand[i] = cand[i] + 0.1 * (hi[i] - lo[i])
            simplex.append(clip(cand))
        return simplex

    def descend(start: Vector) -> bool:
        """One Nelder-Mead descent; True if it converged within budget."""
        xs = initial_simplex(start)
        fs = [evaluate(x) for x in xs]
        while evals < budget:
            order = sorted(range(dim + 1), key=lambda i: -fs[i])
            xs = [xs[i] for i in order]
            fs = [fs[i] for i in order]
            xspread, fspread = _spread(xs, fs)
            if xspread < _XTOL and fspread < _FTOL:
                return True
            centroid = [sum(x[i] for x in xs[:-1]) / dim for i in range(dim)]
            worst = xs[-1]
            refl = clip([c + (c - w) for c, w in zip(centroid, worst)])
            f_refl = evaluate(refl)
            if f_refl > fs[0]:
                if evals >= budget:
                    return False
                expd = clip([c + 2.0 * (c - w) for c, w in zip(centroid, worst)])
                f_expd = evaluate(expd)
                if f_expd > f_refl:
                    xs[-1], fs[-1] = expd, f_expd
                else:
                    xs[-1], fs[-1] = refl, f_refl
                continue
            if f_refl > fs[-2]:
                xs[-1], fs[-1] = refl, f_refl
                continue
            if evals >= budget:
                return False
            contr = clip([c + 0.5 * (w - c) for c, w in zip(centroid, worst)])
            f_contr = evaluate(contr)
            if f_contr > fs[-1]:
                xs[-1], fs[-1] = contr, f_contr
                continue
            # total collapse: shrink toward the best vertex
            for i in range(1, dim + 1):
                if evals >= budget:
                    return False
                xs[i] = clip([
                    xs[0][j] + 0.5 * (xs[i][j] - xs[0][j]) for j in range(dim)
                ])
                fs[i] = evaluate(xs[i])
        return False

    converged = descend(list(x0))
    if evals < budget:
        # restart from the best point to confirm the optimum or escape a
        # premature collapse; a cut-short restart that never beat the settled
        # value does not revoke the verdict
        best_i = max(range(len(trace_f)), key=lambda i: trace_f[i])
        best_before = trace_f[best_i]
        restarted = descend(list(trace_x[best_i]))
        converged = restarted or max(trace_f) <= best_before + _FTOL

    best_i = max(range(len(trace_f)), key=lambda i: trace_f[i])
    return OptimizationTrace(
        points=trace_x,
        values=trace_f,
        best_point=trace_x[best_i],
        best_value=trace_f[best_i],
        converged=converged,
        n_evaluations=evals,
    )


def objective_gate(
    params: SystemParams,
    timing: GateTiming,
    *,
    pulse: Pulse | None = None,
    variant: DeltaSVariant | None = None,
    lambda_time: float = 0.0,
    qubit_init: str = "plus",
    dt: float = DEFAULT_DT,
) -> float:
    """Gate fidelity, optionally penalized by gate duration.

    A run that blows up numerically scores -inf so the simplex backs away
    from that region instead of aborting the search.
    """
    try:
        result = run_gate(
            params, timing, pulse,
            qubit_init=qubit_init, dt=dt, variant=variant,
            decimation=10 ** 9, field_stride=10 ** 9,
        )
    except (NumericalFailure, ValueError, OverflowError):
        return -math.inf
    value = result.fidelity - lambda_time * timing.span
    if not math.isfinite(value):
        return -math.inf
    return value


def optimize_schedule(
    problem: OptimizationProblem,
    params: SystemParams,
) -> tuple[GateTiming, OptimizationTrace]:
    """Tune the free schedule parameters of the problem for best fidelity.

    Returns the best timing found and the full evaluation trace.  Raises
    NumericalFailure (with the trace attached) if not a single evaluation
    produced a finite objective.
    """

    def func(x: Vector) -> float:
        timing, variant = problem.build(x)
        return objective_gate(
            params, timing,
            pulse=problem.pulse, variant=variant,
            lambda_time=problem.lambda_time,
            qubit_init=problem.qubit_init, dt=problem.dt,
        )

    trace = simplex_search(
        func, problem.seed_vector(), problem.bounds, problem.budget
    )
    if not math.isfinite(trace.best_value):
        err = NumericalFailure("every objective evaluation failed")
        err.trace = trace  # type: ignore[attr-defined]
        raise err
    timing, _ = problem.build(list(trace.best_point))
    return timing, trace
