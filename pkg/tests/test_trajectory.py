"""Feedback path synthesis from stored value solutions."""

from __future__ import annotations

import numpy as np
import pytest

from visitsolve import chord_deviation, synthesize


def test_path_from_final_state_never_moves(test1_solved):
    traj = synthesize(test1_solved.solution, (0.3, -0.4), 0b111)
    assert not traj.events
    assert np.allclose(traj.positions, traj.positions[0])
    assert np.all(traj.states == 0b111)


def test_start_outside_domain_rejected(test1_solved):
    with pytest.raises(ValueError):
        synthesize(test1_solved.solution, (1.5, 0.0), 0)
    with pytest.raises(ValueError):
        synthesize(test1_solved.solution, (0.0, 0.0), 99)


def test_states_only_gain_bits(test1_trajectories):
    for traj in test1_trajectories:
        for a, b in zip(traj.states, traj.states[1:]):
            assert int(a) & int(b) == int(a)


def test_all_targets_visited_by_horizon(test1_trajectories):
    for traj in test1_trajectories:
        assert int(traj.states[-1]) == 0b111
        assert len(traj.events) == 3
        times = [e.time for e in traj.events]
        assert times == sorted(times)


def test_visit_order_depends_on_start(test1_solved, test1_trajectories):
    origin, corner = test1_trajectories
    ss = test1_solved.statespace
    assert origin.visit_order(ss) == [1, 2, 3]
    assert corner.visit_order(ss) == [3, 1, 2]


def test_segments_are_straight(test1_solved, test1_trajectories):
    for traj in test1_trajectories:
        assert chord_deviation(traj) <= 2 * test1_solved.grid.dx


def test_arrival_time_is_last_event(test1_trajectories):
    origin, _ = test1_trajectories
    assert origin.arrival_time == pytest.approx(origin.events[-1].time)


def test_positions_stay_inside_domain(test1_solved, test1_trajectories):
    g = test1_solved.grid
    for traj in test1_trajectories:
        assert np.all(traj.positions >= np.asarray(g.lower) - 1e-12)
        assert np.all(traj.positions <= np.asarray(g.upper) + 1e-12)


def test_switch_steps_barely_move(test1_solved, test1_trajectories):
    # the control map stores 0 at stopping nodes; interpolation near the
    # boundary can leak a sub-cell displacement but no more
    g = test1_solved.grid
    origin, _ = test1_trajectories
    times = list(origin.times)
    for ev in origin.events:
        if ev.time >= times[-1]:
            continue
        i = times.index(ev.time)
        hop = np.linalg.norm(origin.positions[i + 1] - origin.positions[i])
        assert hop <= g.dx
        assert origin.states[i + 1] != origin.states[i]


def test_event_positions_lie_on_path(test1_trajectories):
    for traj in test1_trajectories:
        for ev in traj.events:
            d = np.min(np.linalg.norm(traj.positions - np.asarray(ev.position), axis=1))
            assert d < 1e-9
