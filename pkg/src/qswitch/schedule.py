"""Piecewise control schedules for the tunable detunings.

A schedule is a contiguous list of segments, each holding a constant value
or ramping linearly or with a raised-cosine profile.  Both the switch-atom
detuning delta_q(t) and, optionally, the storage-atom detuning delta_s(t)
are driven this way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ScheduleError

PROFILE_CONSTANT = 0
PROFILE_LINEAR = 1
PROFILE_RAISED_COSINE = 2

_PROFILES = {
    "constant": PROFILE_CONSTANT,
    "linear": PROFILE_LINEAR,
    "raised-cosine": PROFILE_RAISED_COSINE,
}

_JOIN_TOL = 1e-9


@dataclass(frozen=True)
class Segment:
    """One piece of a control track on [t_start, t_end]."""

    t_start: float
    t_end: float
    profile: str
    v_start: float
    v_end: float

    def __post_init__(self):
        if self.profile not in _PROFILES:
            raise ScheduleError(f"unknown profile {self.profile!r}")
        if not self.t_end > self.t_start:
            raise ScheduleError(
                f"segment must have positive duration, got [{self.t_start}, {self.t_end}]"
            )
        if self.profile == "constant" and self.v_start != self.v_end:
            raise ScheduleError("constant segment must have v_start == v_end")

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def value(self, t: float) -> float:
        s = (t - self.t_start) / self.duration
        s = min(max(s, 0.0), 1.0)
        if self.profile == "constant":
            return self.v_start
        if self.profile == "linear":
            return self.v_start + (self.v_end - self.v_start) * s
        return self.v_start + (self.v_end - self.v_start) * 0.5 * (1.0 - math.cos(math.pi * s))

    def derivative(self, t: float) -> float:
        s = (t - self.t_start) / self.duration
        s = min(max(s, 0.0), 1.0)
        if self.profile == "constant":
            return 0.0
        if self.profile == "linear":
            return (self.v_end - self.v_start) / self.duration
        return (
            (self.v_end - self.v_start)
            * 0.5
            * math.pi
            * math.sin(math.pi * s)
            / self.duration
        )


class Track:
    """A contiguous sequence of segments, evaluable over its full span."""

    def __init__(self, segments: list[Segment] | tuple[Segment, ...]):
        if not segments:
            raise ScheduleError("track needs at least one segment")
        segs = tuple(segments)
        for a, b in zip(segs, segs[1:]):
            if abs(b.t_start - a.t_end) > _JOIN_TOL:
                raise ScheduleError(
                    f"schedule gap between t = {a.t_end} and t = {b.t_start}"
                )
            if abs(b.v_start - a.v_end) > _JOIN_TOL:
                raise ScheduleError(
                    f"value jump at t = {a.t_end}: {a.v_end} -> {b.v_start}"
                )
        self.segments = segs
        self.t_start = segs[0].t_start
        self.t_end = segs[-1].t_end

    def _segment_at(self, t: float) -> Segment:
        if t < self.t_start - _JOIN_TOL or t > self.t_end + _JOIN_TOL:
            raise ScheduleError(
                f"schedule gap: t = {t} outside [{self.t_start}, {self.t_end}]"
            )
        for seg in self.segments:
            if t < seg.t_end:
                return seg
        return self.segments[-1]

    def value(self, t: float) -> float:
        return self._segment_at(t).value(t)

    def derivative(self, t: float) -> float:
        """One-sided derivative: at a joint, the segment to the right wins."""
        return self._segment_at(t).derivative(t)

    def values(self, t: np.ndarray) -> np.ndarray:
        return np.array([self.value(float(ti)) for ti in t])

    def pack(self) -> tuple[np.ndarray, ...]:
        """Flatten to plain float arrays for the compiled integrator kernel."""
        n = len(self.segments)
        t0 = np.empty(n)
        t1 = np.empty(n)
        kind = np.empty(n, dtype=np.int64)
        v0 = np.empty(n)
        v1 = np.empty(n)
        for i, seg in enumerate(self.segments):
            t0[i] = seg.t_start
            t1[i] = seg.t_end
            kind[i] = _PROFILES[seg.profile]
            v0[i] = seg.v_start
            v1[i] = seg.v_end
        return t0, t1, kind, v0, v1


def constant_track(value: float, t_start: float, t_end: float) -> Track:
    return Track([Segment(t_start, t_end, "constant", value, value)])


@dataclass(frozen=True)
class ControlSchedule:
    """The pair of control tracks driving one run.

    delta_s may be None, in which case the storage detuning is the constant
    from ``SystemParams``.
    """

    delta_q: Track
    delta_s: Track | None = None

    @property
    def t_start(self) -> float:
        return self.delta_q.t_start

    @property
    def t_end(self) -> float:
        return self.delta_q.t_end

    def check_covers(self, t0: float, t1: float):
        if t0 < self.t_start - _JOIN_TOL or t1 > self.t_end + _JOIN_TOL:
            raise ScheduleError(
                f"schedule covers [{self.t_start}, {self.t_end}], "
                f"integration needs [{t0}, {t1}]"
            )
        if self.delta_s is not None:
            if t0 < self.delta_s.t_start - _JOIN_TOL or t1 > self.delta_s.t_end + _JOIN_TOL:
                raise ScheduleError("delta_s track does not cover the integration span")
