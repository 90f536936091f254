"""Hyperedge potentials, the exchange-inefficiency predicate, and clusters.

A potential assigns to each hyperedge b (a nonempty site subset) a real
table over the local configurations S^b; absent edges are identically zero.
Tables are dense tuples in lexicographic order of the local configuration,
first edge site most significant, matching the on-disk format.

An edge with at least two sites is *inefficient* at omega when exchanging
any split of it between omega and any other local configuration never
lowers the summed value:

    table(w) + table(s)  <=  table(w on N, s off N) + table(s on N, w off N)

for every N inside b and every local s.  Efficient multi-site edges merge
their sites; the cluster C(K) is the union of the resulting classes that
meet K, so C(K) contains K and grows with K.  One-site edges are never
inefficient, which is what seeds every vertex into its own cluster.
"""

from __future__ import annotations

from .errors import InputError
from .space import SpaceSpec, iter_bits

#: Inefficiency is quantified over 2^|b| * q^|b| cases per edge; larger
#: hyperedges are refused at construction.
MAX_EDGE_SITES = 6


class Potential:
    """Sparse map from hyperedges to local value tables."""

    __slots__ = ("space", "terms", "_bad_memo")

    def __init__(self, space: SpaceSpec, terms: dict):
        norm: dict[tuple, tuple] = {}
        for sites, table in terms.items():
            edge = tuple(sorted(sites))
            if len(edge) == 0:
                raise InputError("hyperedges must be nonempty")
            if len(set(edge)) != len(edge):
                raise InputError(f"repeated site in hyperedge {sites!r}")
            if any(not 0 <= s < space.n for s in edge):
                raise InputError(f"hyperedge {sites!r} leaves the site range")
            if len(edge) > MAX_EDGE_SITES:
                raise InputError(f"hyperedge {sites!r} exceeds the {MAX_EDGE_SITES}-site cap")
            if edge in norm:
                raise InputError(f"duplicate hyperedge {sites!r}")
            table = tuple(float(v) for v in table)
            if len(table) != space.q ** len(edge):
                raise InputError(
                    f"table for {sites!r} needs {space.q ** len(edge)} entries, got {len(table)}"
                )
            norm[edge] = table
        self.space = space
        self.terms = dict(sorted(norm.items()))
        self._bad_memo: dict[tuple, bool] = {}

    def edges(self) -> tuple:
        return tuple(self.terms)

    def table(self, edge) -> tuple:
        return self.terms[tuple(sorted(edge))]

    def local_index(self, edge, values) -> int:
        idx = 0
        for v in values:
            idx = idx * self.space.q + self.space._require_rank(v)
        return idx

    def local_of(self, edge, config_or_index) -> int:
        """Local table index of the restriction of a full configuration."""
        full = self.space.index(config_or_index)
        idx = 0
        for site in edge:
            idx = idx * self.space.q + self.space.digit(full, site)
        return idx

    def value(self, edge, config_or_index) -> float:
        """Table value at the restriction; absent edges contribute zero."""
        edge = tuple(sorted(edge))
        table = self.terms.get(edge)
        if table is None:
            return 0.0
        return table[self.local_of(edge, config_or_index)]

    def energy(self, config_or_index) -> float:
        full = self.space.index(config_or_index)
        return sum(table[self.local_of(edge, full)] for edge, table in self.terms.items())

    # -- inefficiency ---------------------------------------------------------

    def is_inefficient(self, edge, config_or_index) -> bool:
        """Exchange predicate at omega; depends only on the restriction to the edge."""
        edge = tuple(sorted(edge))
        if any(not 0 <= s < self.space.n for s in edge):
            raise InputError(f"hyperedge {edge!r} leaves the site range")
        if len(edge) < 2:
            return False
        local = self.local_of(edge, config_or_index)
        key = (edge, local)
        cached = self._bad_memo.get(key)
        if cached is None:
            cached = self._eval_inefficient(edge, local)
            self._bad_memo[key] = cached
        return cached

    def _eval_inefficient(self, edge, local: int) -> bool:
        q = self.space.q
        m = len(edge)
        table = self.terms.get(edge)
        if table is None:
            return True  # identically-zero table: all exchanges are ties
        omega_digits = _local_digits(local, m, q)
        base = table[local]
        for sigma in range(q**m):
            sigma_digits = _local_digits(sigma, m, q)
            lhs = base + table[sigma]
            for n_mask in range(1 << m):
                mixed_a = mixed_b = 0
                for pos in range(m):
                    on_n = (n_mask >> (m - 1 - pos)) & 1
                    mixed_a = mixed_a * q + (omega_digits[pos] if on_n else sigma_digits[pos])
                    mixed_b = mixed_b * q + (sigma_digits[pos] if on_n else omega_digits[pos])
                if lhs > table[mixed_a] + table[mixed_b]:
                    return False
        return True

    # -- clusters -------------------------------------------------------------

    def efficient_partition(self, config_or_index) -> tuple:
        """Site partition from merging every efficient multi-site edge."""
        full = self.space.index(config_or_index)
        parent = list(range(self.space.n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for edge in self.terms:
            if len(edge) >= 2 and not self.is_inefficient(edge, full):
                root = find(edge[0])
                for other in edge[1:]:
                    parent[find(other)] = root
        classes: dict[int, int] = {}
        for site in range(self.space.n):
            r = find(site)
            classes[r] = classes.get(r, 0) | (1 << site)
        return tuple(sorted(classes.values()))


def _local_digits(local: int, m: int, q: int) -> tuple:
    digits = []
    for _ in range(m):
        local, r = divmod(local, q)
        digits.append(r)
    return tuple(reversed(digits))


def efficient_cluster(potential: Potential, omega, sites) -> frozenset:
    """C(K): all sites reachable from K along efficient edges; contains K."""
    k_mask = 0
    for s in sites:
        if not 0 <= s < potential.space.n:
            raise InputError(f"site {s} out of range")
        k_mask |= 1 << s
    if k_mask == 0:
        return frozenset()
    out = 0
    for cls in potential.efficient_partition(omega):
        if cls & k_mask:
            out |= cls
    return frozenset(iter_bits(out))


def is_inefficient(potential: Potential, edge, omega) -> bool:
    return potential.is_inefficient(edge, omega)


# ---------------------------------------------------------------------------
# canonical potentials

def ising_potential(n: int, couplings, fields=0.0) -> Potential:
    """Pair tables J_ij * s_i s_j plus one-site field tables h_i * s_i."""
    from .measures import SPIN_ALPHABET, _field_vector, _normalize_couplings

    space = SpaceSpec(n, SPIN_ALPHABET)
    terms: dict[tuple, tuple] = {}
    for i, j, v in _normalize_couplings(n, couplings):
        # local order: (-,-), (-,+), (+,-), (+,+)
        terms[(i, j)] = (v, -v, -v, v)
    for i, h in enumerate(_field_vector(n, fields)):
        if h != 0.0:
            terms[(i,)] = (-h, h)
    return Potential(space, terms)


def potts_potential(n: int, q: int, couplings) -> Potential:
    """Pair tables J_ij * [values equal] over a q-letter alphabet."""
    from .measures import _normalize_couplings

    if q < 2:
        raise InputError("need q >= 2")
    space = SpaceSpec(n, tuple(range(q)))
    terms: dict[tuple, tuple] = {}
    for i, j, v in _normalize_couplings(n, couplings):
        table = [v if a == b else 0.0 for a in range(q) for b in range(q)]
        terms[(i, j)] = tuple(table)
    return Potential(space, terms)


def canonical_potential(measure_family) -> Potential:
    """Potential whose Gibbs weights reproduce the given pairwise family."""
    from .measures import IsingFamily, PottsFamily

    if isinstance(measure_family, IsingFamily):
        n = len(measure_family.fields)
        return ising_potential(n, measure_family.couplings, measure_family.fields)
    if isinstance(measure_family, PottsFamily):
        n = 1 + max((max(i, j) for i, j, _ in measure_family.couplings), default=0)
        return potts_potential(n, measure_family.q, measure_family.couplings)
    raise InputError(f"no canonical potential for {measure_family!r}")


# ---------------------------------------------------------------------------
# specialized clusters

def _graph_partition(n: int, edges, keep) -> tuple:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in edges:
        if keep(i, j):
            parent[find(i)] = find(j)
    classes: dict[int, int] = {}
    for site in range(n):
        r = find(site)
        classes[r] = classes.get(r, 0) | (1 << site)
    return tuple(sorted(classes.values()))


def specialized_cluster(kind: str, space: SpaceSpec, edges, omega, sites) -> frozenset:
    """Spin clusters (monochromatic paths) or changing-path clusters.

    ``edges`` is the coupling graph: pairs with positive J for spin
    clusters, pairs with nonzero J for changing paths.
    """
    idx = space.index(omega)
    if kind == "ising_spin":
        part = _graph_partition(space.n, edges, lambda i, j: space.digit(idx, i) == space.digit(idx, j))
    elif kind == "potts_changing":
        part = _graph_partition(space.n, edges, lambda i, j: space.digit(idx, i) != space.digit(idx, j))
    else:
        raise InputError(f"unknown cluster kind {kind!r}")
    k_mask = 0
    for s in sites:
        k_mask |= 1 << s
    out = 0
    for cls in part:
        if cls & k_mask:
            out |= cls
    return frozenset(iter_bits(out))


def random_potential(rng, n: int, q: int, max_edges: int = 5, max_sites: int = 3, scale: float = 1.0) -> Potential:
    """Seeded random sparse potential for verification sweeps."""
    space = SpaceSpec(n, tuple(range(q)))
    sites = list(range(n))
    candidates = []
    for size in range(1, min(max_sites, n) + 1):
        candidates.extend(_combinations(sites, size))
    rng.shuffle(candidates)
    terms = {}
    for edge in candidates[: min(max_edges, len(candidates))]:
        terms[edge] = tuple(rng.gauss(0.0, scale) for _ in range(q ** len(edge)))
    if not terms:
        terms[(0,)] = tuple(rng.gauss(0.0, scale) for _ in range(q))
    return Potential(space, terms)


def _combinations(items, size):
    from itertools import combinations

    return [tuple(c) for c in combinations(items, size)]


def potential_from_config(desc: dict) -> Potential:
    """Build a potential from {"n":..., "alphabet":..., "terms":[{"sites":..., "table":...}]}."""
    space = SpaceSpec(desc["n"], tuple(desc.get("alphabet", (0, 1))))
    terms = {}
    for item in desc["terms"]:
        terms[tuple(item["sites"])] = tuple(item["table"])
    return Potential(space, terms)
