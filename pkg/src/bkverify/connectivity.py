"""Signed-path connection events on coupling graphs, and two derived checks.

``path_event`` builds, as a bitset over all configurations, the event that
some path of constantly-signed vertices joins two site sets.  It works by
label propagation with one bitset per vertex: R_v collects the
configurations in which v is reachable from the source set inside the
sign-subgraph, and one OR/AND per edge per round pushes reachability one
step, so the whole event costs O(rounds * edges) wide integer operations
even at the 2^24 enumeration cap.

The four-arm check lives on the punctured box: the square grid of radius k
with the origin removed, diamond boundary |x|+|y| = k.  It compares the
probability of two plus arms and two minus arms occurring together against
the product of the four one-arm probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InputError
from .measures import DEFAULT_TOL, Measure, ising, leq_with_tol
from .space import Event, SpaceSpec, iter_bits


def path_event(space: SpaceSpec, edges, sign: str, sources, targets) -> Event:
    """Event that a path with every vertex at ``sign`` joins the two site sets.

    ``sign`` is "+" (top alphabet value) or "-" (bottom).  A vertex common to
    both sets needs only itself at the sign (the one-vertex path).  Empty
    site sets are an input error.
    """
    sources, targets = tuple(sources), tuple(targets)
    if not sources or not targets:
        raise InputError("path events need nonempty endpoint sets")
    for s in (*sources, *targets):
        if not 0 <= s < space.n:
            raise InputError(f"site {s} out of range")
    if sign == "+":
        value = space.top
    elif sign == "-":
        value = space.bottom
    else:
        raise InputError("sign must be '+' or '-'")
    signed = [space.value_mask(v, value) for v in range(space.n)]
    reach = [0] * space.n
    for v in sources:
        reach[v] = signed[v]
    norm_edges = []
    for i, j in edges:
        if not (0 <= i < space.n and 0 <= j < space.n) or i == j:
            raise InputError(f"bad edge ({i}, {j})")
        norm_edges.append((i, j))
    changed = True
    while changed:
        changed = False
        for i, j in norm_edges:
            grow_j = signed[j] & reach[i]
            if grow_j & ~reach[j]:
                reach[j] |= grow_j
                changed = True
            grow_i = signed[i] & reach[j]
            if grow_i & ~reach[i]:
                reach[i] |= grow_i
                changed = True
    bits = 0
    for v in targets:
        bits |= reach[v]
    return Event(space, bits)


# ---------------------------------------------------------------------------
# punctured box

def punctured_box(k: int):
    """(coords, edges, boundary): radius-k grid square minus the origin.

    Vertices are numbered in lexicographic coordinate order; edges join
    coordinates at L1 distance 1; the boundary is |x| + |y| = k.
    """
    if k < 1:
        raise InputError("need k >= 1")
    coords = [
        (x, y)
        for x in range(-k, k + 1)
        for y in range(-k, k + 1)
        if (x, y) != (0, 0)
    ]
    index = {c: i for i, c in enumerate(coords)}
    edges = []
    for (x, y), i in index.items():
        for dx, dy in ((1, 0), (0, 1)):
            nb = (x + dx, y + dy)
            if nb in index:
                edges.append((i, index[nb]))
    boundary = tuple(index[c] for c in coords if abs(c[0]) + abs(c[1]) == k)
    return tuple(coords), tuple(edges), boundary


@dataclass(frozen=True)
class ArmCheck:
    lhs: float
    rhs: float
    margin: float
    passed: bool
    arm_probs: tuple
    sites: int


def four_arm_check(k: int, coupling, fields=0.0, tol: float = DEFAULT_TOL) -> ArmCheck:
    """Joint four-arm probability against the product of one-arm probabilities.

    Arms run from (1,0) and (-1,0) to the boundary through plus vertices and
    from (0,1) and (0,-1) through minus vertices.  Exhaustive enumeration
    only: k <= 2 (24 sites); larger k is refused.
    """
    if k > 2:
        raise InputError("exhaustive four-arm check is capped at k = 2")
    coords, edges, boundary = punctured_box(k)
    index = {c: i for i, c in enumerate(coords)}
    n = len(coords)
    if isinstance(coupling, dict):
        couplings = [(i, j, float(coupling[(i, j)])) for i, j in edges]
    else:
        couplings = [(i, j, float(coupling)) for i, j in edges]
    if any(v < 0 for _, _, v in couplings):
        raise InputError("four-arm check needs nonnegative couplings")
    # zero couplings drop out of the connection graph as well
    edges = [(i, j) for i, j, v in couplings if v > 0] or []
    measure = ising(n, couplings, fields)
    space = measure.space
    arms = [
        path_event(space, edges, "+", (index[(1, 0)],), boundary),
        path_event(space, edges, "+", (index[(-1, 0)],), boundary),
        path_event(space, edges, "-", (index[(0, 1)],), boundary),
        path_event(space, edges, "-", (index[(0, -1)],), boundary),
    ]
    joint = arms[0] & arms[1] & arms[2] & arms[3]
    lhs = measure.prob(joint)
    probs = tuple(measure.prob(a) for a in arms)
    rhs = math.prod(probs)
    return ArmCheck(lhs, rhs, rhs - lhs, leq_with_tol(lhs, rhs, tol), probs, n)


# ---------------------------------------------------------------------------
# two separated plus-connections

@dataclass(frozen=True)
class SeparatedConnections:
    lhs: float
    rhs: float
    margin: float
    passed: bool


def corollary19_check(
    measure: Measure,
    edges,
    X,
    Y,
    U,
    W,
    tol: float = DEFAULT_TOL,
) -> SeparatedConnections:
    """P(some x in X reaches Y and some u in U reaches W through plus
    vertices, with x and u in different plus clusters) versus
    P(X reaches Y) * P(U reaches W).

    Computed by a per-configuration plus-component scan, so it is
    independent of the bitset propagation in :func:`path_event`.
    """
    space = measure.space
    space.require_binary("plus-cluster scan")
    for name, sites in (("X", X), ("Y", Y), ("U", U), ("W", W)):
        if not sites:
            raise InputError(f"site set {name} is empty")
        if any(not 0 <= s < space.n for s in sites):
            raise InputError(f"site set {name} leaves the site range")
    X, Y, U, W = map(tuple, (X, Y, U, W))
    top_rank = space.q - 1
    lhs_w = rhs_a_w = rhs_b_w = 0.0
    weights = measure.weights_float()
    for idx in range(space.size):
        plus = [space.digit(idx, v) == top_rank for v in range(space.n)]
        parent = list(range(space.n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for i, j in edges:
            if plus[i] and plus[j]:
                parent[find(i)] = find(j)
        comp_a = {find(x) for x in X if plus[x] and any(plus[y] and find(y) == find(x) for y in Y)}
        comp_b = {find(u) for u in U if plus[u] and any(plus[w] and find(w) == find(u) for w in W)}
        w = weights[idx]
        if comp_a:
            rhs_a_w += w
        if comp_b:
            rhs_b_w += w
        if comp_a and comp_b and (comp_a != comp_b or len(comp_a | comp_b) > 1):
            lhs_w += w
    total = measure.total
    lhs = float(lhs_w / total)
    rhs = float((rhs_a_w / total) * (rhs_b_w / total))
    return SeparatedConnections(lhs, rhs, rhs - lhs, bool(leq_with_tol(lhs, rhs, tol)))
