"""Disjoint occurrence, witness pairs, and restricted selection rules.

``box(A, B)`` is the set of configurations at which A and B occur with
disjoint witnessing site sets.  Because "K witnesses A at omega" (the
cylinder over K fits inside A) is upward-closed in K, membership reduces to
a scan over K with the complementary set witnessing B, and the full witness
structure is captured by the inclusion-minimal witness sets alone.

Selection rules carve subsets out of the witness-pair family; ``boxminus``
is the induced restricted operator.  Cluster-based rules demand that the
clusters grown from K and from L do not meet; since those clusters are
unions of the classes of a partition of the sites, membership reduces to a
scan over subsets of classes.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable, NamedTuple

from .errors import InputError
from .space import Event, SpaceSpec, SitePairing, cylinder_bits, flip_event, iter_bits


class WitnessPair(NamedTuple):
    K: frozenset
    L: frozenset


def _sites(mask: int) -> frozenset:
    return frozenset(iter_bits(mask))


@lru_cache(maxsize=None)
def _subsets_by_size(n: int) -> tuple:
    return tuple(sorted(range(1 << n), key=lambda m: (m.bit_count(), m)))


def minimal_cover_masks(event: Event, index: int) -> tuple:
    """Inclusion-minimal site masks K with ``[omega]_K`` inside the event."""
    space = event.space
    if not (event.bits >> index) & 1:
        return ()
    not_e = space.full_bits ^ event.bits
    found: list[int] = []
    for k_mask in _subsets_by_size(space.n):
        if any(m & k_mask == m for m in found):
            continue
        if cylinder_bits(space, index, k_mask) & not_e == 0:
            found.append(k_mask)
    return tuple(found)


def minimal_witnesses(A: Event, B: Event, omega) -> tuple[WitnessPair, ...]:
    """All disjoint pairs (K, L) of minimal witnesses of A and of B at omega.

    Nonempty iff some disjoint witness pair exists at all, by upward closure.
    Pairs are ordered by |K|+|L|, then by mask.
    """
    _same_space(A, B)
    idx = A.space.index(omega)
    pairs = [
        (k, l)
        for k in minimal_cover_masks(A, idx)
        for l in minimal_cover_masks(B, idx)
        if k & l == 0
    ]
    pairs.sort(key=lambda p: (p[0].bit_count() + p[1].bit_count(), p))
    return tuple(WitnessPair(_sites(k), _sites(l)) for k, l in pairs)


def _same_space(A: Event, B: Event) -> None:
    if A.space != B.space:
        raise InputError("events live on different spaces")


def _cylinders_for(space: SpaceSpec, index: int) -> list[int]:
    """Cylinder bitsets of omega over every site subset, indexed by site mask."""
    site_masks = [space.rank_mask(i, space.digit(index, i)) for i in range(space.n)]
    cyls = [0] * (1 << space.n)
    cyls[0] = space.full_bits
    for k_mask in range(1, 1 << space.n):
        low = k_mask & -k_mask
        cyls[k_mask] = cyls[k_mask ^ low] & site_masks[low.bit_length() - 1]
    return cyls


def box(A: Event, B: Event) -> Event:
    """Disjoint occurrence of A and B.  Commutative; contained in A & B."""
    _same_space(A, B)
    space = A.space
    full_sites = (1 << space.n) - 1
    not_a = space.full_bits ^ A.bits
    not_b = space.full_bits ^ B.bits
    out = 0
    for idx in iter_bits(A.bits & B.bits):
        cyls = _cylinders_for(space, idx)
        for k_mask in range(1 << space.n):
            if cyls[k_mask] & not_a == 0 and cyls[full_sites ^ k_mask] & not_b == 0:
                out |= 1 << idx
                break
    return Event(space, out)


class SelectionRule:
    """Base class: picks a subset of the disjoint witness pairs at each omega.

    ``pairs`` reports the admissible pairs among the minimal witness pairs
    (the admissibility predicates used here are closed under shrinking K or
    L, so the restricted operator built from minimal pairs alone agrees with
    the one built from all pairs).  ``holds`` answers "is the selected set
    nonempty" and may use a faster equivalent scan.
    """

    kind = "abstract"

    def admits(self, space: SpaceSpec, index: int, k_mask: int, l_mask: int) -> bool:
        raise NotImplementedError

    def pairs(self, A: Event, B: Event, omega) -> tuple[WitnessPair, ...]:
        _same_space(A, B)
        space = A.space
        idx = space.index(omega)
        out = []
        for pair in minimal_witnesses(A, B, idx):
            k_mask = _mask_of(pair.K)
            l_mask = _mask_of(pair.L)
            if self.admits(space, idx, k_mask, l_mask):
                out.append(pair)
        return tuple(out)

    def holds(self, A: Event, B: Event, index: int) -> bool:
        return bool(self.pairs(A, B, index))

    def boxminus(self, A: Event, B: Event) -> Event:
        _same_space(A, B)
        space = A.space
        out = 0
        for idx in iter_bits(A.bits & B.bits):
            if self.holds(A, B, idx):
                out |= 1 << idx
        return Event(space, out)


def _mask_of(sites: Iterable[int]) -> int:
    mask = 0
    for s in sites:
        mask |= 1 << s
    return mask


class FullRule(SelectionRule):
    """The unrestricted rule: every disjoint witness pair is admissible."""

    kind = "full"

    def admits(self, space, index, k_mask, l_mask):
        return True

    def holds(self, A, B, index):
        space = A.space
        full_sites = (1 << space.n) - 1
        not_a = space.full_bits ^ A.bits
        not_b = space.full_bits ^ B.bits
        cyls = _cylinders_for(space, index)
        return any(
            cyls[k] & not_a == 0 and cyls[full_sites ^ k] & not_b == 0
            for k in range(1 << space.n)
        )

    def boxminus(self, A, B):
        return box(A, B)


class UpperOnesRule(SelectionRule):
    """Admits pairs whose witness sites all carry the top alphabet value.

    For increasing events over a binary alphabet this selects the same
    configurations as the unrestricted operator: a minimal witness of an
    increasing event never pins a site at a non-top value.
    """

    kind = "upper_ones"

    def _top_mask(self, space: SpaceSpec, index: int) -> int:
        mask = 0
        for site in range(space.n):
            if space.digit(index, site) == space.q - 1:
                mask |= 1 << site
        return mask

    def admits(self, space, index, k_mask, l_mask):
        top = self._top_mask(space, index)
        return (k_mask | l_mask) & ~top == 0

    def holds(self, A, B, index):
        space = A.space
        not_a = space.full_bits ^ A.bits
        not_b = space.full_bits ^ B.bits
        top = self._top_mask(space, index)
        # K runs over subsets of the top-valued sites; the best L is the rest.
        k_mask = top
        while True:
            if (
                cylinder_bits(space, index, k_mask) & not_a == 0
                and cylinder_bits(space, index, top ^ k_mask) & not_b == 0
            ):
                return True
            if k_mask == 0:
                return False
            k_mask = (k_mask - 1) & top


class ClusterRule(SelectionRule):
    """Admits pairs whose grown clusters C(K) and C(L) are disjoint.

    Subclasses provide the partition of sites into clusters at each
    configuration; C(K) is the union of the classes meeting K.  Partitions
    are memoized per configuration index.
    """

    def __init__(self, space: SpaceSpec):
        self.space = space
        self._partitions: dict[int, tuple] = {}

    def partition(self, index: int) -> tuple:
        """Partition of sites as a tuple of site masks."""
        part = self._partitions.get(index)
        if part is None:
            part = self._compute_partition(index)
            self._partitions[index] = part
        return part

    def _compute_partition(self, index: int) -> tuple:
        raise NotImplementedError

    def cluster(self, omega, sites: Iterable[int]) -> frozenset:
        """C(K): every site sharing a class with K.  Monotone in K."""
        index = self.space.index(omega)
        k_mask = _mask_of(sites)
        out = 0
        for cls in self.partition(index):
            if cls & k_mask:
                out |= cls
        return _sites(out)

    def admits(self, space, index, k_mask, l_mask):
        if space != self.space:
            raise InputError("rule bound to a different space")
        return not any(cls & k_mask and cls & l_mask for cls in self.partition(index))

    def holds(self, A, B, index):
        # omega belongs iff the classes split into a group witnessing A and
        # the complementary group witnessing B (upward closure in each arm).
        space = self.space
        not_a = space.full_bits ^ A.bits
        not_b = space.full_bits ^ B.bits
        part = self.partition(index)
        cls_cyl = [cylinder_bits(space, index, cls) for cls in part]
        m = len(part)
        acc = [0] * (1 << m)
        acc[0] = space.full_bits
        for u in range(1, 1 << m):
            low = u & -u
            acc[u] = acc[u ^ low] & cls_cyl[low.bit_length() - 1]
        top = (1 << m) - 1
        return any(
            acc[u] & not_a == 0 and acc[top ^ u] & not_b == 0 for u in range(1 << m)
        )


def _union_find_partition(n: int, merges: Iterable[tuple]) -> tuple:
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for group in merges:
        it = iter(group)
        first = find(next(it))
        for other in it:
            parent[find(other)] = first
    classes: dict[int, int] = {}
    for site in range(n):
        root = find(site)
        classes[root] = classes.get(root, 0) | (1 << site)
    return tuple(sorted(classes.values()))


class PotentialClusterRule(ClusterRule):
    """Clusters grown along hyperedges that are efficient for the potential."""

    kind = "cluster_disjoint"

    def __init__(self, potential):
        super().__init__(potential.space)
        self.potential = potential

    def _compute_partition(self, index):
        pot = self.potential
        merges = [
            edge
            for edge in pot.edges()
            if len(edge) >= 2 and not pot.is_inefficient(edge, index)
        ]
        return _union_find_partition(self.space.n, merges)


class SpinClusterRule(ClusterRule):
    """Monochromatic-path clusters on the coupling graph (edges with J > 0)."""

    kind = "spin_cluster"

    def __init__(self, space: SpaceSpec, edges: Iterable[tuple]):
        super().__init__(space)
        self.edges = tuple(sorted(tuple(sorted(e)) for e in edges))

    def _compute_partition(self, index):
        space = self.space
        merges = [
            (i, j) for i, j in self.edges if space.digit(index, i) == space.digit(index, j)
        ]
        return _union_find_partition(space.n, merges)


class ChangingPathRule(ClusterRule):
    """Value-alternating-path clusters on the coupling graph (edges with J != 0)."""

    kind = "changing_path"

    def __init__(self, space: SpaceSpec, edges: Iterable[tuple]):
        super().__init__(space)
        self.edges = tuple(sorted(tuple(sorted(e)) for e in edges))

    def _compute_partition(self, index):
        space = self.space
        merges = [
            (i, j) for i, j in self.edges if space.digit(index, i) != space.digit(index, j)
        ]
        return _union_find_partition(space.n, merges)


def boxminus(A: Event, B: Event, rule: SelectionRule) -> Event:
    """Restricted disjoint occurrence under the given selection rule."""
    return rule.boxminus(A, B)


def reimer_gap(A: Event, B: Event) -> tuple[int, int]:
    """(|A box B|, |A intersect flip(B)|); the first never exceeds the second.

    The comparison is asserted: a violation can only mean a bug in the box
    computation, not a genuine counterexample.
    """
    _same_space(A, B)
    A.space.require_binary("reimer_gap")
    lhs = len(box(A, B))
    rhs = len(A & flip_event(B, SitePairing.binary(A.space)))
    assert lhs <= rhs, f"disjoint-occurrence count {lhs} exceeded flip bound {rhs}"
    return lhs, rhs
