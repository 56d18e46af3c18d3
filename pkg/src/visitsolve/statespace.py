"""Discrete memory states for multi-target visiting problems.

A state is a bitmask over N targets: bit j set means target j has been
visited or renounced. Switching may only set additional bits, so the
admissible destinations from p are the strict bitwise supersets of p.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

MAX_TARGETS = 16


@dataclass(frozen=True)
class DiscreteState:
    """One memory state: a bitmask over ``n_targets`` targets.

    Target j (1-indexed) occupies integer bit ``n_targets - j``, so the
    bitstring with target 1 leftmost reads as the binary form of ``bits``.
    """

    bits: int
    n_targets: int

    def __post_init__(self) -> None:
        if not 1 <= self.n_targets <= MAX_TARGETS:
            raise ValueError(f"n_targets must be in [1, {MAX_TARGETS}], got {self.n_targets}")
        if not 0 <= self.bits < (1 << self.n_targets):
            raise ValueError(f"bits {self.bits} out of range for {self.n_targets} targets")

    @property
    def is_final(self) -> bool:
        return self.bits == (1 << self.n_targets) - 1

    @property
    def popcount(self) -> int:
        return bin(self.bits).count("1")

    def bit(self, j: int) -> int:
        """Value of target j's bit, j in 1..N."""
        if not 1 <= j <= self.n_targets:
            raise ValueError(f"target index {j} out of range 1..{self.n_targets}")
        return (self.bits >> (self.n_targets - j)) & 1

    @property
    def bitstring(self) -> str:
        return format(self.bits, f"0{self.n_targets}b")

    def __str__(self) -> str:
        return self.bitstring


class StateSpace:
    """All 2^N memory states in ascending bitmask order, plus the switch order."""

    def __init__(self, n_targets: int):
        if not 1 <= n_targets <= MAX_TARGETS:
            raise ValueError(f"n_targets must be in [1, {MAX_TARGETS}], got {n_targets}")
        self.n_targets = n_targets
        self.n_states = 1 << n_targets
        self.final_mask = self.n_states - 1

    @cached_property
    def states(self) -> tuple[DiscreteState, ...]:
        return tuple(DiscreteState(m, self.n_targets) for m in range(self.n_states))

    @property
    def final_state(self) -> DiscreteState:
        return self.states[self.final_mask]

    def state(self, bits: int) -> DiscreteState:
        return self.states[bits]

    def from_bitstring(self, s: str) -> DiscreteState:
        if len(s) != self.n_targets or set(s) - {"0", "1"}:
            raise ValueError(f"bad bitstring {s!r} for {self.n_targets} targets")
        return self.states[int(s, 2)]

    def admissible_masks(self, bits: int) -> list[int]:
        """Strict bitwise supersets of ``bits``, ascending. Empty for the final state."""
        return [q for q in range(self.n_states) if q & bits == bits and q != bits]

    def admissible_switches(self, p: DiscreteState) -> list[DiscreteState]:
        if p.n_targets != self.n_targets:
            raise ValueError("state belongs to a different state space")
        return [self.states[q] for q in self.admissible_masks(p.bits)]

    def switch_indicator(self, p: DiscreteState, q: DiscreteState, j: int) -> int:
        """1 if target j's bit differs between p and q, else 0."""
        if not 1 <= j <= self.n_targets:
            raise ValueError(f"target index {j} out of range 1..{self.n_targets}")
        return p.bit(j) ^ q.bit(j)

    def flipped_targets(self, bits_from: int, bits_to: int) -> list[int]:
        """1-indexed targets whose bit differs between the two masks."""
        x = bits_from ^ bits_to
        return [j for j in range(1, self.n_targets + 1) if (x >> (self.n_targets - j)) & 1]

    def __len__(self) -> int:
        return self.n_states

    def __repr__(self) -> str:
        return f"StateSpace(n_targets={self.n_targets})"
