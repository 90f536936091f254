"""Signed path events, the punctured box, and the two arm checks."""

import random
from collections import deque

import pytest

from bkverify.connectivity import (
    corollary19_check,
    four_arm_check,
    path_event,
    punctured_box,
)
from bkverify.errors import InputError
from bkverify.measures import Measure, ising
from bkverify.space import Event, SpaceSpec, is_decreasing, is_increasing


def reachable(space, edges, config, sign_value, sources):
    """BFS oracle for the signed reachability set of one configuration."""
    adj = {v: set() for v in range(space.n)}
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    seen = set()
    queue = deque(v for v in sources if config[v] == sign_value)
    seen.update(queue)
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in seen and config[w] == sign_value:
                seen.add(w)
                queue.append(w)
    return seen


def naive_path_event(space, edges, sign, sources, targets):
    value = space.top if sign == "+" else space.bottom
    members = []
    for cfg in space.configurations():
        if reachable(space, edges, cfg, value, sources) & set(targets):
            members.append(cfg)
    return Event.from_members(space, members)


def test_path_event_single_vertex():
    space = SpaceSpec(3, (-1, 1))
    ev = path_event(space, [(0, 1)], "+", (2,), (2, 1))
    assert sorted(ev.members()) == sorted(
        cfg for cfg in space.configurations() if cfg[2] == 1
    )


def test_path_event_unique_path():
    space = SpaceSpec(3, (-1, 1))
    ev = path_event(space, [(0, 1), (1, 2)], "+", (0,), (2,))
    assert sorted(ev.members()) == [(1, 1, 1)]
    ev_minus = path_event(space, [(0, 1), (1, 2)], "-", (0,), (2,))
    assert sorted(ev_minus.members()) == [(-1, -1, -1)]


def test_path_event_matches_bfs_oracle():
    rng = random.Random(33)
    for _ in range(12):
        n = rng.randint(2, 5)
        space = SpaceSpec(n, (-1, 1))
        edges = [
            (i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.5
        ]
        sources = tuple(sorted(rng.sample(range(n), rng.randint(1, n))))
        targets = tuple(sorted(rng.sample(range(n), rng.randint(1, n))))
        for sign in "+-":
            assert path_event(space, edges, sign, sources, targets) == naive_path_event(
                space, edges, sign, sources, targets
            )


def test_path_event_monotonicity():
    rng = random.Random(35)
    for _ in range(8):
        n = rng.randint(2, 5)
        space = SpaceSpec(n, (-1, 1))
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.6]
        sources = (0,)
        targets = (n - 1,)
        assert is_increasing(path_event(space, edges, "+", sources, targets))
        assert is_decreasing(path_event(space, edges, "-", sources, targets))


def test_path_event_input_errors():
    space = SpaceSpec(2, (-1, 1))
    with pytest.raises(InputError):
        path_event(space, [(0, 1)], "+", (), (1,))
    with pytest.raises(InputError):
        path_event(space, [(0, 1)], "*", (0,), (1,))
    with pytest.raises(InputError):
        path_event(space, [(0, 0)], "+", (0,), (1,))


def test_punctured_box_geometry():
    coords, edges, boundary = punctured_box(1)
    assert len(coords) == 8
    assert len(edges) == 8
    assert sorted(coords[i] for i in boundary) == [(-1, 0), (0, -1), (0, 1), (1, 0)]
    coords2, edges2, boundary2 = punctured_box(2)
    assert len(coords2) == 24
    assert len(boundary2) == 8


def test_four_arm_small_couplings_pass():
    for j in (0.2, 0.5, 1.0):
        res = four_arm_check(1, j, 0.0)
        assert res.passed and res.sites == 8
        assert 0 <= res.lhs <= res.rhs <= 1


def test_four_arm_decoupled_equality():
    res = four_arm_check(1, 0.0, [0.1 * i - 0.3 for i in range(8)])
    assert abs(res.margin) < 1e-12


def test_four_arm_guards():
    with pytest.raises(InputError):
        four_arm_check(3, 0.5)
    with pytest.raises(InputError):
        four_arm_check(1, -0.5)


def naive_separated_connections(measure, edges, X, Y, U, W):
    space = measure.space
    lhs_w = a_w = b_w = 0.0
    for idx in range(space.size):
        cfg = space.decode(idx)
        weight = float(measure.weights_float()[idx])
        hit_a = {
            x: reachable(space, edges, cfg, space.top, (x,)) for x in X if cfg[x] == space.top
        }
        hit_b = {
            u: reachable(space, edges, cfg, space.top, (u,)) for u in U if cfg[u] == space.top
        }
        good_a = {x: r for x, r in hit_a.items() if r & set(Y)}
        good_b = {u: r for u, r in hit_b.items() if r & set(W)}
        if good_a:
            a_w += weight
        if good_b:
            b_w += weight
        if any(u not in r for x, r in good_a.items() for u in good_b):
            lhs_w += weight
    total = measure.total
    return lhs_w / total, (a_w / total) * (b_w / total)


def test_corollary19_path_graph_matches_oracle():
    edges = [(0, 1), (1, 2), (2, 3)]
    m = ising(4, [(i, j, 0.7) for i, j in edges], [0.2, -0.1, 0.3, 0.0])
    res = corollary19_check(m, edges, (0,), (1,), (2,), (3,))
    lhs, rhs = naive_separated_connections(m, edges, (0,), (1,), (2,), (3,))
    assert res.lhs == pytest.approx(lhs, abs=1e-12)
    assert res.rhs == pytest.approx(rhs, abs=1e-12)
    assert res.passed


def test_corollary19_random_graphs_match_oracle():
    rng = random.Random(39)
    for _ in range(6):
        n = rng.randint(3, 6)
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.5]
        couplings = [(i, j, rng.uniform(0.1, 1.5)) for i, j in edges]
        m = ising(n, couplings, [rng.uniform(-1, 1) for _ in range(n)])

        def subset():
            return tuple(sorted(rng.sample(range(n), rng.randint(1, 2))))

        X, Y, U, W = subset(), subset(), subset(), subset()
        res = corollary19_check(m, edges, X, Y, U, W)
        lhs, rhs = naive_separated_connections(m, edges, X, Y, U, W)
        assert res.lhs == pytest.approx(lhs, abs=1e-12)
        assert res.rhs == pytest.approx(rhs, abs=1e-12)
        assert res.passed


def test_corollary19_blocked_target_gives_zero():
    # site 3 pinned to minus: no plus connection into W can ever happen
    edges = [(0, 1), (1, 2)]
    base = ising(4, [(i, j, 0.5) for i, j in edges], 0.0)
    weights = base.weights_float().copy()
    for idx in range(base.space.size):
        if base.space.decode(idx)[3] == 1:
            weights[idx] = 0.0
    pinned = Measure(base.space, weights)
    res = corollary19_check(pinned, edges, (0,), (1,), (2,), (3,))
    assert res.lhs == 0.0 and res.passed
    with pytest.raises(InputError):
        corollary19_check(pinned, edges, (), (1,), (2,), (3,))
