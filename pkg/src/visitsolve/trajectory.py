"""Forward Euler synthesis of single-agent paths from the feedback maps.

Per step n: the switch decision is read at the nearest node of the current
state's map, the drift is the bilinear interpolation of that state's control
field, the position advances one Euler step (clamped), and a prescribed
destination takes effect at the next sample with the position unchanged at
the moment of the jump. Integration ends at the horizon or as soon as the
final state is entered. A walk still outside the final state at the horizon
takes the forced exit there, recorded as a last event.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hjb import ValueSolution


@dataclass(frozen=True)
class SwitchEvent:
    time: float
    position: tuple
    from_bits: int
    to_bits: int


@dataclass
class Trajectory:
    times: np.ndarray      # (M,)
    positions: np.ndarray  # (M, dim)
    states: np.ndarray     # (M,) bitmasks
    events: list[SwitchEvent] = field(default_factory=list)

    @property
    def arrival_time(self) -> float | None:
        """Time of the event entering the final state, None if it started there."""
        if self.events:
            return self.events[-1].time
        return None

    def visit_order(self, statespace) -> list[int]:
        """1-indexed targets in the order their bits were first set."""
        order: list[int] = []
        for ev in self.events:
            for j in statespace.flipped_targets(ev.from_bits, ev.to_bits):
                if j not in order:
                    order.append(j)
        return order


def synthesize(solution: ValueSolution, x0, p0_bits: int) -> Trajectory:
    grid = solution.grid
    ss = solution.statespace
    final = ss.final_mask
    if not (0 <= p0_bits < ss.n_states):
        raise ValueError(f"start state {p0_bits} outside the {ss.n_states}-state space")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.shape != (grid.dim,):
        raise ValueError(f"start point must have {grid.dim} coordinates")
    if not grid.contains(x0):
        raise ValueError(f"start point {tuple(x0)} outside the domain")

    L = grid.n_levels
    times = [float(grid.times[0])]
    positions = [x0.copy()]
    states = [int(p0_bits)]
    events: list[SwitchEvent] = []

    Y = x0.copy()
    p = int(p0_bits)
    for n in range(L - 1):
        if p == final:
            # nothing left to do: zero drift to the horizon
            Y = Y.copy()
        else:
            node = grid.nearest_node_index(Y)
            dest = int(solution.switch[n, p][node])
            a = np.array([float(grid.interpolate(solution.control[n, p, c], Y))
                          for c in range(grid.dim)])
            if dest >= 0:
                events.append(SwitchEvent(float(grid.times[n]), tuple(Y), p, dest))
            Y = grid.clamp(Y + grid.dt * a)
            if dest >= 0:
                p = dest
        times.append(float(grid.times[n + 1]))
        positions.append(Y.copy())
        states.append(p)
        if p == final and p0_bits != final:
            break

    if p != final:
        # horizon reached first: the terminal map forces the exit
        events.append(SwitchEvent(float(grid.times[-1]), tuple(Y), p, final))
        states[-1] = final

    return Trajectory(times=np.array(times), positions=np.array(positions),
                      states=np.array(states, dtype=np.int32), events=events)


def chord_deviation(traj: Trajectory) -> float:
    """Largest distance of any sample from the chord of its inter-event leg.

    Legs run between consecutive switch times (trajectory endpoints included).
    """
    if traj.times.size < 3:
        return 0.0
    cut_times = [traj.times[0]] + [ev.time for ev in traj.events] + [traj.times[-1]]
    cuts = sorted({int(np.argmin(np.abs(traj.times - t))) for t in cut_times})
    worst = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi - lo < 2:
            continue
        a, b = traj.positions[lo], traj.positions[hi]
        chord = b - a
        nrm2 = float(chord @ chord)
        for m in range(lo + 1, hi):
            d = traj.positions[m] - a
            if nrm2 == 0.0:
                off = float(np.sqrt(d @ d))
            else:
                s = float(np.clip((d @ chord) / nrm2, 0.0, 1.0))
                r = d - s * chord
                off = float(np.sqrt(r @ r))
            worst = max(worst, off)
    return worst
