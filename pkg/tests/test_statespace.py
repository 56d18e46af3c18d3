"""Bitmask state lattice: ordering, destinations, flip bookkeeping."""

from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from visitsolve import StateSpace


def test_two_target_lattice_shape():
    ss = StateSpace(2)
    assert ss.n_states == 4
    assert [s.bitstring for s in ss.states] == ["00", "01", "10", "11"]
    assert ss.final_mask == 3
    assert ss.final_state.is_final


def test_destinations_are_strict_supersets_in_ascending_order():
    ss = StateSpace(3)
    assert ss.admissible_masks(0b000) == [1, 2, 3, 4, 5, 6, 7]
    assert ss.admissible_masks(0b101) == [0b111]
    assert ss.admissible_masks(0b111) == []


def test_bit_layout_most_significant_target_first():
    # target 1 owns the highest bit, so bitstring == binary(mask)
    ss = StateSpace(3)
    s = ss.from_bitstring("100")
    assert s.bits == 0b100
    assert s.bit(1) == 1 and s.bit(2) == 0 and s.bit(3) == 0
    assert ss.flipped_targets(0b000, 0b100) == [1]
    assert ss.flipped_targets(0b000, 0b101) == [1, 3]
    assert ss.flipped_targets(0b010, 0b111) == [1, 3]


def test_switch_indicator_is_per_target_xor():
    ss = StateSpace(2)
    p, q = ss.state(0b00), ss.state(0b01)
    assert ss.switch_indicator(p, q, 1) == 0
    assert ss.switch_indicator(p, q, 2) == 1
    assert ss.switch_indicator(p, p, 1) == 0


def test_from_bitstring_rejects_garbage():
    ss = StateSpace(2)
    with pytest.raises(ValueError):
        ss.from_bitstring("0")
    with pytest.raises(ValueError):
        ss.from_bitstring("0x")


def test_target_count_validation():
    with pytest.raises(ValueError):
        StateSpace(0)
    with pytest.raises(ValueError):
        StateSpace(99)


@given(n=st.integers(min_value=1, max_value=6), data=st.data())
def test_destination_set_properties(n, data):
    ss = StateSpace(n)
    bits = data.draw(st.integers(min_value=0, max_value=2**n - 1))
    dests = ss.admissible_masks(bits)
    assert dests == sorted(dests)
    assert len(dests) == 2 ** (n - ss.state(bits).popcount) - 1
    for q in dests:
        assert q != bits and (q & bits) == bits  # strict superset
