import math

import numpy as np
import pytest
from hypothesis import given, settings

from tsptw_lookahead.core import (Instance, MalformedTourError, Point, TimeWindow,
                                  check_legality, distance, propagate, tour_length)

from conftest import instance_and_prefix


def line_instance():
    # depot at origin, nodes along the x axis
    return Instance.build([[0, 0], [1, 0], [2, 0], [3, 0]],
                          [(0, 10), (5, 6), None])


def test_distance_is_euclidean():
    assert distance(Point(0, 0), Point(3, 4)) == 5.0


def test_window_rejects_inverted_bounds():
    with pytest.raises(ValueError):
        TimeWindow(2.0, 1.0)


def test_instance_validation():
    with pytest.raises(ValueError):
        Instance(np.zeros((1, 2)), [0], [0], [True])
    with pytest.raises(ValueError):
        Instance(np.zeros((2, 2)), [0, -1], [0, 1], [True, False])
    with pytest.raises(ValueError):
        Instance(np.zeros((2, 2)), [0, 2], [0, 1], [True, False])


def test_unconstrained_end_is_infinite_deadline():
    inst = line_instance()
    assert inst.deadline[3] == math.inf and inst.tw_end[3] == 0.0
    assert inst.window(3).end_unconstrained


def test_waiting_rule_by_hand():
    sched = propagate(line_instance(), [0, 1, 2, 3])
    assert sched.visit_times.tolist() == [0.0, 1.0, 5.0, 6.0]
    assert sched.waits.tolist() == [0.0, 0.0, 3.0, 0.0]
    assert sched.path_length == 3.0 and sched.total_length == 6.0
    assert sched.total_timeout == 0.0


def test_lateness_recorded_without_stopping():
    inst = Instance.build([[0, 0], [3, 0], [4, 0]], [(0, 1), (0, 2)])
    sched = propagate(inst, [0, 1, 2])
    assert sched.lateness.tolist() == [0.0, 2.0, 2.0]
    rep = check_legality(inst, [0, 1, 2])
    assert not rep.is_legal and rep.reason == "deadline missed" and rep.total_timeout == 4.0


@pytest.mark.parametrize("tour,reason", [
    ([1, 0, 2, 3], "does not start at depot"),
    ([0, 1, 1, 3], "not a permutation"),
    ([0, 1, 2], "not a permutation"),
    (["a"], "not a permutation"),
])
def test_malformed_tours_are_illegal(tour, reason):
    rep = check_legality(line_instance(), tour)
    assert not rep.is_legal and rep.reason == reason


def test_propagate_rejects_repeats():
    with pytest.raises(MalformedTourError):
        propagate(line_instance(), [0, 1, 1])


def test_tour_length_includes_return_edge():
    assert tour_length(line_instance(), [0, 3, 2, 1]) == 6.0


@settings(max_examples=300, deadline=None)
@given(instance_and_prefix())
def test_waiting_rule_and_monotonicity(case):
    inst, prefix = case
    s = propagate(inst, prefix)
    d = inst.dist
    for k in range(1, len(prefix)):
        a, b = prefix[k - 1], prefix[k]
        assert s.visit_times[k] == max(s.visit_times[k - 1] + d[a, b], inst.tw_start[b])
        assert s.visit_times[k] >= s.visit_times[k - 1]
        assert s.visit_times[k] >= inst.tw_start[b]


@settings(max_examples=300, deadline=None)
@given(instance_and_prefix(full=True))
def test_legal_iff_zero_timeout(case):
    inst, tour = case
    rep = check_legality(inst, tour)
    assert rep.is_legal == (rep.total_timeout == 0.0)


@settings(max_examples=200, deadline=None)
@given(instance_and_prefix(full=True))
def test_scaling_covariance(case):
    inst, tour = case
    c = 3.7
    a, b = propagate(inst, tour), propagate(inst.scaled(c), tour)
    np.testing.assert_allclose(b.visit_times, c * a.visit_times, rtol=1e-9, atol=1e-12)
    assert math.isclose(b.total_length, c * a.total_length, rel_tol=1e-9)
    assert check_legality(inst, tour).is_legal == check_legality(inst.scaled(c), tour).is_legal
