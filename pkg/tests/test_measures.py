"""Measure families, lattice conditions, and pairwise inequality reports."""

import math
from fractions import Fraction

import numpy as np
import pytest

from bkverify.boxops import FullRule
from bkverify.errors import InputError, UnsupportedOperationError
from bkverify.measures import (
    build_measure,
    check_bk_pair,
    check_fkg_pair,
    check_lattice_condition,
    curie_weiss,
    curie_weiss_cubic,
    ising,
    k_out_of_n,
    potts,
    product_measure,
    symmetric_levels,
    total_variation,
)
from bkverify.space import Event, SpaceSpec, cylinder, enumerate_increasing


def test_k_out_of_n_probabilities():
    m = k_out_of_n(3, 1)
    expect = {(1, 0, 0), (0, 1, 0), (0, 0, 1)}
    for cfg in m.space.configurations():
        p = m.prob_index(m.space.encode(cfg))
        assert p == (Fraction(1, 3) if cfg in expect else 0)
    with pytest.raises(InputError):
        k_out_of_n(3, 4)


def test_curie_weiss_two_site_weights():
    m = curie_weiss(2, 0.7, 0.0)
    w = {cfg: m.weight(cfg) for cfg in m.space.configurations()}
    assert w[(1, 1)] == pytest.approx(w[(-1, -1)])
    assert w[(1, -1)] == pytest.approx(w[(-1, 1)])
    assert w[(1, 1)] / w[(1, -1)] == pytest.approx(math.exp(2 * 0.7))


def test_uniform_product():
    space = SpaceSpec(3, (0, 1))
    m = product_measure(space, [0.5, 0.5, 0.5])
    assert np.allclose(m.weights_float(), m.weights_float()[0])


def test_normalization_sums_to_one():
    measures = [
        k_out_of_n(5, 2),
        curie_weiss(6, -0.8, [0.1] * 6),
        curie_weiss_cubic(4, 0.2, -0.5, 0.1),
        ising(4, [(0, 1, 1.0), (2, 3, -0.4)], 0.3),
        potts(3, 3, [(0, 1, -1.0), (1, 2, -0.5)]),
        symmetric_levels(6, x=1.5),
    ]
    for m in measures:
        total = sum(float(w) for w in m.weights_float()) / m.total
        assert total == pytest.approx(1.0, abs=1e-12)


def test_measure_validation():
    space = SpaceSpec(2, (0, 1))
    with pytest.raises(InputError):
        product_measure(space, [0.5])  # wrong arity triggers IndexError? guard below
    with pytest.raises(InputError):
        ising(3, [(0, 0, 1.0)])
    with pytest.raises(InputError):
        ising(3, np.array([[0.0, 1.0, 0.0], [0.5, 0.0, 0.0], [0.0, 0.0, 0.0]]))
    with pytest.raises(InputError):
        potts(2, 1, [(0, 1, -1.0)])


def test_lattice_condition_signs():
    neg = check_lattice_condition(curie_weiss(3, -1.0, [0.3, -0.2, 0.5]), "negative")
    assert neg.ok and neg.witness is None
    pos = check_lattice_condition(curie_weiss(3, 1.0, [0.3, -0.2, 0.5]), "positive")
    assert pos.ok
    # strictly ferromagnetic coupling violates the negative condition
    bad = check_lattice_condition(curie_weiss(3, 1.0, 0.0), "negative")
    assert not bad.ok and bad.witness is not None
    space = SpaceSpec(3, (0, 1))
    prod = product_measure(space, [0.3, 0.6, 0.5])
    assert check_lattice_condition(prod, "negative").ok
    assert check_lattice_condition(prod, "positive").ok
    with pytest.raises(UnsupportedOperationError):
        check_lattice_condition(potts(2, 3, [(0, 1, -1.0)]))


def test_bk_pair_empty_event():
    m = k_out_of_n(2, 1)
    rep = check_bk_pair(m, Event.empty(m.space), Event.full(m.space))
    assert rep.lhs == 0 and rep.passed


def test_bk_pair_one_out_of_two():
    m = k_out_of_n(2, 1)
    A = cylinder(m.space, (1, 1), (0,))
    rep = check_bk_pair(m, A, A, FullRule())
    assert rep.lhs == 0
    assert rep.rhs == pytest.approx(0.25)
    assert rep.exact and rep.passed


def test_bk_pair_antiferro_cw_sweep():
    m = curie_weiss(3, -1.0, 0.0)
    space = m.space
    events = enumerate_increasing(space)
    for i, A in enumerate(events):
        for B in events[i:]:
            rep = check_bk_pair(m, A, B)
            assert rep.passed, (A, B, rep)


def test_bk_pair_detects_positive_correlation():
    # negative control: with a ferromagnetic coupling the unrestricted product
    # bound fails for touching one-site events, and the report says so
    m = ising(2, [(0, 1, 1.0)], 0.0)
    A = cylinder(m.space, (1, 1), (0,))
    B = cylinder(m.space, (1, 1), (1,))
    rep = check_bk_pair(m, A, B)
    assert not rep.passed and rep.margin < -0.05


def test_fkg_examples():
    m = ising(2, [(0, 1, 1.0)], 0.0)
    full = Event.full(m.space)
    rep = check_fkg_pair(m, full, full)
    assert rep.lhs == pytest.approx(1.0) and rep.rhs == pytest.approx(1.0)
    A = cylinder(m.space, (1, 1), (0,))
    B = cylinder(m.space, (1, 1), (1,))
    rep = check_fkg_pair(m, A, B)
    assert rep.lhs > rep.rhs and rep.passed and rep.flipped_passed
    with pytest.raises(InputError):
        check_fkg_pair(m, Event.from_members(m.space, [(1, -1)]), B)
    with pytest.raises(InputError):
        check_fkg_pair(ising(2, [(0, 1, -1.0)], 0.0), A, B)


def test_fkg_product_independence_equality():
    space = SpaceSpec(2, (0, 1))
    m = product_measure(space, [0.5, 0.5])
    A = cylinder(space, (1, 1), (0,))
    B = cylinder(space, (1, 1), (1,))
    rep = check_fkg_pair(m, A, B)
    assert rep.lhs == rep.rhs


def test_cw_strong_antiferro_limit_matches_half_levels():
    for n in (4, 6):
        cw = curie_weiss(n, -20.0, 0.0)
        # compare against the equal-weight middle level on the same space
        target = [1.0 if idx.bit_count() == n // 2 else 0.0 for idx in range(2**n)]
        from bkverify.measures import Measure

        assert total_variation(cw, Measure(cw.space, target)) < 1e-6


def test_cubic_with_zero_triple_matches_pairwise():
    m1 = curie_weiss(4, -0.7, 0.3)
    m2 = curie_weiss_cubic(4, 0.3, -0.7, 0.0)
    assert np.array_equal(m1.weights_float(), m2.weights_float())


def test_potts_two_states_matches_ising():
    for n in (2, 3):
        couplings = [(i, j, -0.8 + 0.3 * (i + j)) for i in range(n) for j in range(i + 1, n)]
        pm = potts(n, 2, couplings)
        im = ising(n, [(i, j, v / 2.0) for i, j, v in couplings], 0.0)
        p1 = pm.weights_float() / pm.total
        p2 = im.weights_float() / im.total
        assert np.allclose(p1, p2, rtol=1e-12)


def test_symmetric_levels_exact_and_flip_symmetry():
    m = symmetric_levels(5, x=Fraction(3, 2), exact=True)
    for idx in range(m.space.size):
        k = bin(idx).count("1")
        assert m.weights[idx] == Fraction(3, 2) ** (min(k, 5 - k) * (5 - min(k, 5 - k)))


def test_build_measure_descriptors():
    m = build_measure({"family": "curie_weiss", "n": 3, "coupling": -1.0})
    assert m.space.alphabet == (-1, 1)
    m = build_measure({"family": "k_out_of_n", "n": 4, "k": 2})
    assert m.exact
    m = build_measure({"family": "symmetric_levels", "n": 4, "x": "3/2", "exact": True})
    assert m.weights[0] == 1
    m = build_measure(
        {"family": "potts", "n": 2, "q": 3, "couplings": [[0, 1, -1.0]]}
    )
    assert m.space.q == 3
    with pytest.raises(InputError):
        build_measure({"family": "nope", "n": 2})
    with pytest.raises(InputError):
        build_measure({"n": 2})
