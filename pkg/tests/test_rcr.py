"""Random-cluster bases: compatibility, validation, and hypothesis checks."""

import math
import random
from fractions import Fraction

import pytest

from bkverify.boxops import FullRule, UpperOnesRule
from bkverify.errors import InputError
from bkverify.folding import fold, folded_potential
from bkverify.measures import Measure, curie_weiss, gibbs, k_out_of_n, symmetric_levels
from bkverify.permsolver import matching_base, solve_xi
from bkverify.potentials import Potential, ising_potential, random_potential
from bkverify.rcr import (
    EtaConfig,
    RcrBase,
    check_cardinality_lemma,
    check_condition_i,
    check_condition_ii,
    compatible,
    eta_clusters,
    gibbs_base,
    trivial_base,
    validate_rcr,
)
from bkverify.space import Event, SpaceSpec, cylinder, enumerate_increasing


def test_compatibility_examples():
    space = SpaceSpec(3, (0, 1))
    free = EtaConfig(space, {})
    assert all(compatible(cfg, free) for cfg in space.configurations())
    eta = EtaConfig(space, {(0, 1): [(0, 1), (1, 0)]})
    assert compatible((0, 1, 0), eta)
    assert compatible((0, 1, 1), eta)
    assert not compatible((1, 1, 0), eta)


def test_eta_validation():
    space = SpaceSpec(2, (0, 1))
    with pytest.raises(InputError):
        EtaConfig(space, {(0,): []})
    with pytest.raises(InputError):
        EtaConfig(space, {(0,): [(0,), (1,)]})  # allows everything
    with pytest.raises(InputError):
        EtaConfig(space, {(0, 5): [(0, 1)]})


def test_eta_clusters():
    space = SpaceSpec(4, (0, 1))
    assert eta_clusters(EtaConfig(space, {})) == tuple(frozenset({i}) for i in range(4))
    chained = EtaConfig(space, {(0, 1): [(0, 1)], (1, 2): [(0, 1)]})
    assert frozenset({0, 1, 2}) in eta_clusters(chained)
    assert frozenset({3}) in eta_clusters(chained)
    wide = EtaConfig(space, {(0, 1, 2): [(0, 0, 1)]})
    assert frozenset({0, 1, 2}) in eta_clusters(wide)


def test_cluster_coarsening_when_adding_edges():
    space = SpaceSpec(5, (0, 1))
    rng = random.Random(3)
    for _ in range(30):
        sites = sorted(rng.sample(range(5), 2))
        base_active = {tuple(sites): [(0, 1)]}
        extra = sorted(rng.sample(range(5), 2))
        eta1 = EtaConfig(space, base_active)
        active2 = dict(base_active)
        active2[tuple(extra)] = active2.get(tuple(extra), [(0, 1)])
        eta2 = EtaConfig(space, active2)
        for cls in eta1.clusters():
            assert any(cls & big == cls for big in eta2.clusters())


def test_trivial_base_validates():
    rng = random.Random(5)
    space = SpaceSpec(3, (0, 1))
    m = Measure(space, [rng.uniform(0.1, 1.0) for _ in range(space.size)])
    val = validate_rcr(trivial_base(m), m)
    assert val.ok and val.max_rel_dev <= 1e-12
    exact = k_out_of_n(3, 1)
    assert validate_rcr(trivial_base(exact), exact).ok


def test_single_edge_base_weight_is_the_open_probability():
    j = 0.9
    base = gibbs_base(ising_potential(2, [(0, 1, j)], 0.0))
    assert len(base) == 2
    by_active = {len(eta.active): w for eta, w in base}
    p_active = by_active[1] / (by_active[0] + by_active[1])
    assert p_active == pytest.approx(1 - math.exp(-2 * j), rel=1e-12)
    active_eta = next(eta for eta, _ in base if eta.active)
    assert active_eta.allowed((0, 1)) == frozenset({(-1, -1), (1, 1)})
    m = gibbs(ising_potential(2, [(0, 1, j)], 0.0))
    assert validate_rcr(base, m).ok


def test_gibbs_base_constant_tables_collapse():
    space = SpaceSpec(2, (0, 1))
    pot = Potential(space, {(0, 1): (1.5, 1.5, 1.5, 1.5)})
    base = gibbs_base(pot)
    assert len(base) == 1
    assert base.entries[0][0].active == ()


def test_gibbs_base_validates_random_potentials():
    rng = random.Random(7)
    for n, q in [(2, 2), (3, 2), (4, 2), (2, 3), (3, 3), (4, 3)]:
        for _ in range(3):
            pot = random_potential(rng, n, q, max_edges=4, max_sites=3)
            base = gibbs_base(pot)
            assert all(w > 0 for _, w in base)
            val = validate_rcr(base, gibbs(pot), tol=1e-10)
            assert val.ok, (n, q, val)


def test_validate_rcr_detects_wrong_weight():
    m = gibbs(ising_potential(2, [(0, 1, 0.5)], 0.0))
    base = gibbs_base(ising_potential(2, [(0, 1, 0.5)], 0.0))
    eta0, w0 = base.entries[0]
    eta1, w1 = base.entries[1]
    broken = RcrBase(base.space, [(eta0, w0 * 1.01), (eta1, w1)])
    val = validate_rcr(broken, m)
    assert not val.ok and val.worst_index is not None


def test_condition_i_cases():
    space = SpaceSpec(2, (0, 1))
    good = RcrBase(space, [(EtaConfig(space, {(0, 1): [(0, 1), (1, 0)]}), 1.0)])
    assert check_condition_i(good).ok
    base = matching_base(4, (1.0, 0.5, 0.25))
    assert check_condition_i(base).ok
    bad = RcrBase(space, [(EtaConfig(space, {(0, 1): [(1, 1)]}), 1.0)])
    rep = check_condition_i(bad)
    assert not rep.ok and rep.witness == (0, (0, 1))
    # gibbs base of a folded potential is symmetric by construction
    pot = ising_potential(3, [(0, 1, 0.8), (1, 2, 0.6)], [0.3, -0.2, 0.1])
    for locked, alpha in [((), ()), ((2,), (1,)), ((0,), (-1,))]:
        fb = gibbs_base(folded_potential(pot, locked, alpha))
        assert check_condition_i(fb).ok


def test_condition_ii_vacuous_and_matching_pass():
    n = 3
    m = curie_weiss(n, -0.8, 0.0)
    space = m.space
    incr = enumerate_increasing(space)
    rule = UpperOnesRule()
    locked, alpha = (0,), (1,)
    x, n_unlocked = 1.0, 2
    f = fold(m, locked, alpha)
    from bkverify.folding import cw_fold_parameter

    x, n_unlocked = cw_fold_parameter(m, locked, alpha)
    base = matching_base(n_unlocked, solve_xi(n_unlocked, x=x).xi)
    empty = Event.empty(space)
    rep = check_condition_ii(base, rule, empty, incr[5], locked, alpha)
    assert rep.ok and rep.checked == 0
    for A in incr:
        for B in incr:
            rep = check_condition_ii(base, rule, A, B, locked, alpha)
            assert rep.ok and rep.per_eta_ok


def test_condition_ii_detects_crossing_edge():
    space = SpaceSpec(2, (0, 1))
    A = cylinder(space, (1, 1), (0,))
    B = cylinder(space, (1, 1), (1,))
    # an active edge that joins the two witness sites while allowing (1, 1)
    base = RcrBase(space, [(EtaConfig(space, {(0, 1): [(1, 1), (0, 0)]}), 1.0)])
    rep = check_condition_ii(base, FullRule(), A, B, (), (), keep_details=True)
    assert not rep.ok and not rep.per_eta_ok
    assert rep.details


def test_cardinality_lemma_examples():
    n = 4
    space = SpaceSpec(n, (0, 1))
    base = matching_base(n, (1.0, 0.4, 0.2))
    full = Event.full(space)
    empty = Event.empty(space)
    rule = UpperOnesRule()
    for eta, _ in base:
        lhs, rhs = check_cardinality_lemma(eta, full, full, (), (), FullRule())
        assert lhs == rhs == eta.compatible_bits().bit_count()
        lhs, rhs = check_cardinality_lemma(eta, empty, full, (), (), rule)
        assert (lhs, rhs) == (0, 0)


def test_cardinality_lemma_on_level_measures():
    rng = random.Random(11)
    rule = UpperOnesRule()
    for n in (3, 4):
        space = SpaceSpec(n, (0, 1))
        incr = enumerate_increasing(space)
        for x in (1.0, 1.5, 3.0):
            base = matching_base(n, solve_xi(n, x=x).xi)
            m = symmetric_levels(n, x=x)
            assert validate_rcr(base, m, tol=1e-9).ok
            for _ in range(40):
                A = incr[rng.randrange(len(incr))]
                B = incr[rng.randrange(len(incr))]
                for eta, _ in base:
                    lhs, rhs = check_cardinality_lemma(eta, A, B, (), (), rule)
                    assert lhs <= rhs


def test_matching_base_flip_closed_compatibility():
    base = matching_base(4, (1.0, 0.7, 0.3))
    space = base.space
    for eta, _ in base:
        bits = eta.compatible_bits()
        for idx in range(space.size):
            assert (bits >> idx) & 1 == (bits >> (space.size - 1 - idx)) & 1


def test_exact_validation_path():
    m = symmetric_levels(4, x=Fraction(2), exact=True)
    sol = solve_xi(4, x=Fraction(2), exact=True)
    base = matching_base(4, sol.xi)
    val = validate_rcr(base, m)
    assert val.ok and val.exact


def test_base_rejects_bad_entries():
    space = SpaceSpec(2, (0, 1))
    eta = EtaConfig(space, {(0, 1): [(0, 1), (1, 0)]})
    with pytest.raises(InputError):
        RcrBase(space, [(eta, -1.0)])
    with pytest.raises(InputError):
        RcrBase(space, [(eta, 1.0), (eta, 2.0)])
    with pytest.raises(InputError):
        RcrBase(space, [(eta, 0.0)])
    records = RcrBase(space, [(eta, 2.0)]).to_records()
    assert records[0]["active"][0]["sites"] == [0, 1]
