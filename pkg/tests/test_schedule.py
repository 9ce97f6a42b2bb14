"""Piecewise control tracks: profiles, joins, and packing."""

import math

import numpy as np
import pytest

from qswitch.errors import ScheduleError
from qswitch.schedule import ControlSchedule, Segment, Track, constant_track


def test_linear_segment_endpoints_and_midpoint():
    seg = Segment(0.0, 2.0, "linear", 30.0, -10.0)
    assert seg.value(0.0) == 30.0
    assert seg.value(2.0) == -10.0
    assert seg.value(1.0) == 10.0
    assert seg.derivative(1.0) == -20.0


def test_raised_cosine_segment_flat_ends():
    seg = Segment(0.0, 4.0, "raised-cosine", 0.0, 1.0)
    assert seg.value(0.0) == 0.0
    assert seg.value(4.0) == 1.0
    assert abs(seg.value(2.0) - 0.5) < 1e-15
    # zero slope at both ends is the point of this profile
    assert seg.derivative(0.0) == 0.0
    assert abs(seg.derivative(4.0)) < 1e-15
    # steepest in the middle: pi/2 times the mean slope
    assert abs(seg.derivative(2.0) - math.pi / 8.0) < 1e-15


def test_raised_cosine_derivative_matches_finite_difference():
    seg = Segment(1.0, 3.5, "raised-cosine", -4.0, 9.0)
    rng = np.random.default_rng(3)
    h = 1e-7
    for t in rng.uniform(1.0 + 1e-3, 3.5 - 1e-3, size=30):
        fd = (seg.value(t + h) - seg.value(t - h)) / (2.0 * h)
        assert abs(seg.derivative(t) - fd) < 1e-6


def test_segment_validation():
    with pytest.raises(ScheduleError, match="positive duration"):
        Segment(1.0, 1.0, "linear", 0.0, 1.0)
    with pytest.raises(ScheduleError, match="unknown profile"):
        Segment(0.0, 1.0, "spline", 0.0, 1.0)
    with pytest.raises(ScheduleError, match="constant segment"):
        Segment(0.0, 1.0, "constant", 0.0, 1.0)


def test_track_rejects_gap():
    a = Segment(0.0, 1.0, "constant", 5.0, 5.0)
    b = Segment(1.5, 2.0, "constant", 5.0, 5.0)
    with pytest.raises(ScheduleError, match="gap"):
        Track([a, b])


def test_track_rejects_value_jump():
    a = Segment(0.0, 1.0, "constant", 5.0, 5.0)
    b = Segment(1.0, 2.0, "linear", 6.0, 5.0)
    with pytest.raises(ScheduleError, match="value jump"):
        Track([a, b])


def test_track_evaluation_outside_span_is_a_gap_error():
    tr = constant_track(2.0, 0.0, 10.0)
    with pytest.raises(ScheduleError, match="gap"):
        tr.value(10.5)
    with pytest.raises(ScheduleError, match="gap"):
        tr.value(-0.5)


def test_track_joint_takes_right_segment_derivative():
    tr = Track([
        Segment(0.0, 1.0, "linear", 0.0, 2.0),
        Segment(1.0, 3.0, "linear", 2.0, 0.0),
    ])
    assert tr.derivative(1.0) == -1.0
    assert tr.derivative(0.5) == 2.0


def test_track_values_vectorized():
    tr = Track([
        Segment(0.0, 1.0, "linear", 0.0, 2.0),
        Segment(1.0, 2.0, "constant", 2.0, 2.0),
    ])
    t = np.array([0.0, 0.5, 1.0, 1.7, 2.0])
    np.testing.assert_allclose(tr.values(t), [0.0, 1.0, 2.0, 2.0, 2.0])


def test_pack_roundtrips_through_arrays():
    tr = Track([
        Segment(0.0, 1.0, "constant", 3.0, 3.0),
        Segment(1.0, 2.5, "raised-cosine", 3.0, -1.0),
        Segment(2.5, 4.0, "linear", -1.0, 0.0),
    ])
    t0, t1, kind, v0, v1 = tr.pack()
    assert t0.tolist() == [0.0, 1.0, 2.5]
    assert t1.tolist() == [1.0, 2.5, 4.0]
    assert kind.tolist() == [0, 2, 1]
    assert v0.tolist() == [3.0, 3.0, -1.0]
    assert v1.tolist() == [3.0, -1.0, 0.0]


def test_schedule_coverage_check():
    sched = ControlSchedule(delta_q=constant_track(30.0, 0.0, 5.0))
    sched.check_covers(0.0, 5.0)
    with pytest.raises(ScheduleError, match="schedule covers"):
        sched.check_covers(0.0, 6.0)


def test_schedule_delta_s_coverage_check():
    sched = ControlSchedule(
        delta_q=constant_track(30.0, 0.0, 5.0),
        delta_s=constant_track(1e4, 0.0, 4.0),
    )
    with pytest.raises(ScheduleError, match="delta_s"):
        sched.check_covers(0.0, 5.0)


def test_empty_track_rejected():
    with pytest.raises(ScheduleError, match="at least one"):
        Track([])
