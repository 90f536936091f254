"""Disjoint occurrence, witnesses, selection rules, and the count bound."""

import random
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bkverify.boxops import (
    ChangingPathRule,
    FullRule,
    SpinClusterRule,
    UpperOnesRule,
    WitnessPair,
    box,
    boxminus,
    minimal_witnesses,
    reimer_gap,
)
from bkverify.errors import InputError, UnsupportedOperationError
from bkverify.potentials import ising_potential
from bkverify.boxops import PotentialClusterRule
from bkverify.space import Event, SpaceSpec, cylinder, enumerate_increasing


def naive_box(A, B):
    """Literal scan over all disjoint site-set pairs."""
    space = A.space
    sites = range(space.n)
    subsets = [tuple(c) for size in range(space.n + 1) for c in combinations(sites, size)]
    bits = 0
    for idx in range(space.size):
        omega = space.decode(idx)
        hit = False
        for K in subsets:
            for L in subsets:
                if set(K) & set(L):
                    continue
                if cylinder(space, omega, K).issubset(A) and cylinder(space, omega, L).issubset(B):
                    hit = True
                    break
            if hit:
                break
        if hit:
            bits |= 1 << idx
    return Event(space, bits)


def test_minimal_witnesses_full_events():
    space = SpaceSpec(2, (0, 1))
    full = Event.full(space)
    assert minimal_witnesses(full, full, (0, 1)) == (WitnessPair(frozenset(), frozenset()),)


def test_minimal_witnesses_two_sites():
    space = SpaceSpec(2, (0, 1))
    A = cylinder(space, (1, 1), (0,))
    B = cylinder(space, (1, 1), (1,))
    assert minimal_witnesses(A, B, (1, 1)) == (
        WitnessPair(frozenset({0}), frozenset({1})),
    )


def test_minimal_witnesses_no_room():
    space = SpaceSpec(1, (0, 1))
    A = Event.from_members(space, [(1,)])
    B = Event.from_members(space, [(0,)])
    assert minimal_witnesses(A, B, (1,)) == ()


def test_box_examples():
    space = SpaceSpec(2, (0, 1))
    full = Event.full(space)
    assert box(full, full) == full
    A = cylinder(space, (1, 1), (0,))
    B = cylinder(space, (1, 1), (1,))
    assert sorted(box(A, B).members()) == [(1, 1)]
    s1 = SpaceSpec(1, (0, 1))
    one = Event.from_members(s1, [(1,)])
    assert box(one, one) == Event.empty(s1)


def test_box_matches_naive_exhaustive_n2():
    space = SpaceSpec(2, (0, 1))
    for a_bits in range(16):
        for b_bits in range(16):
            A, B = Event(space, a_bits), Event(space, b_bits)
            assert box(A, B) == naive_box(A, B)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 255), st.integers(0, 255))
def test_box_matches_naive_sampled_n3(a_bits, b_bits):
    space = SpaceSpec(3, (0, 1))
    A, B = Event(space, a_bits), Event(space, b_bits)
    assert box(A, B) == naive_box(A, B)


def test_box_commutes_and_contained_exhaustive_n3():
    # via the harness bitmask engine, cross-checked against box() on a sample
    from bkverify.harness import _pair_event_bits, _witness_tables

    space = SpaceSpec(3, (0, 1))
    events = tuple(range(256))
    wits, revs = _witness_tables(space, events)
    rng = random.Random(7)
    for a in events:
        for b in events:
            got = _pair_event_bits(wits[a], revs[b], space.size)
            assert got == _pair_event_bits(wits[b], revs[a], space.size)
            assert got & ~(a & b) == 0
            if rng.random() < 0.002:
                assert got == box(Event(space, a), Event(space, b)).bits


def test_box_monotone_in_arguments():
    space = SpaceSpec(3, (0, 1))
    rng = random.Random(11)
    for _ in range(50):
        a = rng.getrandbits(8)
        b = rng.getrandbits(8)
        A, B = Event(space, a), Event(space, b)
        bigger = Event(space, a | rng.getrandbits(8))
        assert box(A, B).issubset(box(bigger, B))


def test_box_space_mismatch():
    with pytest.raises(InputError):
        box(Event.full(SpaceSpec(2, (0, 1))), Event.full(SpaceSpec(3, (0, 1))))


def test_upper_ones_equals_box_on_increasing_pairs():
    for n in (2, 3, 4):
        space = SpaceSpec(n, (0, 1))
        rule = UpperOnesRule()
        events = enumerate_increasing(space)
        for i, A in enumerate(events):
            for B in events[i:]:
                assert boxminus(A, B, rule) == box(A, B)


def test_upper_ones_restricts_general_events():
    space = SpaceSpec(2, (0, 1))
    # A = "site 0 is 0": witnessed only by pinning a zero, which upper-ones forbids
    A = cylinder(space, (0, 1), (0,))
    full = Event.full(space)
    rule = UpperOnesRule()
    assert (0, 1) in box(A, full)
    assert boxminus(A, full, rule).issubset(box(A, full))
    assert (0, 1) not in boxminus(A, full, rule)


def test_full_rule_boxminus_is_box():
    space = SpaceSpec(3, (0, 1))
    rng = random.Random(3)
    rule = FullRule()
    for _ in range(30):
        A, B = Event(space, rng.getrandbits(8)), Event(space, rng.getrandbits(8))
        assert boxminus(A, B, rule) == box(A, B)
        for idx in range(space.size):
            assert rule.holds(A, B, idx) == bool(rule.pairs(A, B, idx))


def test_spin_cluster_rule_two_sites():
    space = SpaceSpec(2, (-1, 1))
    rule = SpinClusterRule(space, [(0, 1)])
    A = cylinder(space, (1, -1), (0,))  # site 0 is +1
    B = cylinder(space, (1, -1), (1,))  # site 1 is -1
    member = (1, -1)
    assert member in boxminus(A, B, rule)
    assert rule.cluster(member, {0}) == frozenset({0})
    assert rule.cluster(member, {1}) == frozenset({1})
    # aligned spins join the sites into one cluster and block the pair
    aligned = (1, 1)
    Ap = cylinder(space, aligned, (0,))
    Bp = cylinder(space, aligned, (1,))
    assert rule.cluster(aligned, {0}) == frozenset({0, 1})
    assert aligned not in boxminus(Ap, Bp, rule)


def test_cluster_rule_holds_matches_pairs():
    space = SpaceSpec(3, (-1, 1))
    rng = random.Random(5)
    edges = [(0, 1), (1, 2)]
    for rule in (SpinClusterRule(space, edges), ChangingPathRule(space, edges)):
        for _ in range(40):
            A, B = Event(space, rng.getrandbits(8)), Event(space, rng.getrandbits(8))
            for idx in range(space.size):
                assert rule.holds(A, B, idx) == bool(rule.pairs(A, B, idx))


def test_cluster_boxminus_within_box():
    space = SpaceSpec(3, (-1, 1))
    pot = ising_potential(3, [(0, 1, 1.0), (1, 2, 0.5)], [0.1, -0.2, 0.3])
    rule = PotentialClusterRule(pot)
    rng = random.Random(9)
    for _ in range(40):
        A, B = Event(space, rng.getrandbits(8)), Event(space, rng.getrandbits(8))
        assert boxminus(A, B, rule).issubset(box(A, B))


def test_ising_rule_increasing_decreasing_intersection():
    # with nonnegative couplings, an increasing and a decreasing event always
    # occur cluster-disjointly on their intersection
    space = SpaceSpec(3, (-1, 1))
    rule = SpinClusterRule(space, [(0, 1), (1, 2), (0, 2)])
    incr = enumerate_increasing(space)
    for A in incr:
        for Bc in incr:
            B = ~Bc
            assert boxminus(A, B, rule) == A & B


def test_reimer_gap_examples():
    space = SpaceSpec(3, (0, 1))
    full = Event.full(space)
    assert reimer_gap(full, full) == (8, 8)
    s1 = SpaceSpec(1, (0, 1))
    assert reimer_gap(Event.from_members(s1, [(1,)]), Event.from_members(s1, [(0,)])) == (0, 1)


def test_reimer_gap_random_and_guards():
    space = SpaceSpec(3, (0, 1))
    rng = random.Random(13)
    for _ in range(200):
        A, B = Event(space, rng.getrandbits(8)), Event(space, rng.getrandbits(8))
        lhs, rhs = reimer_gap(A, B)
        assert lhs <= rhs
    with pytest.raises(UnsupportedOperationError):
        reimer_gap(Event.full(SpaceSpec(2, (0, 1, 2))), Event.full(SpaceSpec(2, (0, 1, 2))))
