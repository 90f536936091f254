"""Generalized random-cluster representations and their hypothesis checks.

An eta-configuration assigns to some hyperedges b a proper nonempty subset
of the local configurations S^b; edges not stored are unconstrained.  A
configuration omega is compatible with eta when its restriction to every
stored (active) edge lies in the stored subset.  A base is a weighted finite
family of eta-configurations; it represents a measure mu when the total
weight compatible with omega is proportional to mu(omega) for every omega.

Overlapping active edges chain sites into eta-clusters.  The two hypothesis
checks used by the folded-pair argument are:

  * symmetry: every stored subset is closed under the two-letter swap;
  * separation: whenever the selection rule offers witness pairs at an
    embedded configuration, one pair keeps its unlocked K-sites and L-sites
    in different eta-clusters for every compatible support eta.

Both are checked over the explicit support; "almost every eta" means every
entry with positive weight, and zero-weight entries are dropped on
construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import exp

import numpy as np

from .boxops import SelectionRule
from .errors import InputError
from .folding import embedding_tables
from .measures import Measure
from .potentials import Potential
from .space import Event, SpaceSpec, iter_bits


class EtaConfig:
    """Per-hyperedge local-configuration constraints; stored edges are active."""

    __slots__ = ("space", "active", "_clusters", "_compat", "_hash")

    def __init__(self, space: SpaceSpec, active: dict):
        norm = []
        for sites, allowed in active.items():
            edge = tuple(sorted(sites))
            if not edge or len(set(edge)) != len(edge):
                raise InputError(f"bad hyperedge {sites!r}")
            if any(not 0 <= s < space.n for s in edge):
                raise InputError(f"hyperedge {sites!r} leaves the site range")
            allowed = frozenset(tuple(a) for a in allowed)
            if not allowed:
                raise InputError(f"active edge {sites!r} allows nothing")
            if len(allowed) >= space.q ** len(edge):
                raise InputError(f"edge {sites!r} allows every local configuration; drop it")
            for a in allowed:
                if len(a) != len(edge):
                    raise InputError(f"local configuration {a!r} has wrong arity for {sites!r}")
                for v in a:
                    space._require_rank(v)
            norm.append((edge, allowed))
        norm.sort()
        self.space = space
        self.active = tuple(norm)
        self._clusters = None
        self._compat = None
        self._hash = None

    def active_edges(self) -> tuple:
        return tuple(e for e, _ in self.active)

    def allowed(self, edge) -> frozenset:
        edge = tuple(sorted(edge))
        for e, a in self.active:
            if e == edge:
                return a
        return None

    def compatible(self, config_or_index) -> bool:
        idx = self.space.index(config_or_index)
        return bool((self.compatible_bits() >> idx) & 1)

    def compatible_bits(self) -> int:
        """Bitset of compatible configuration indices."""
        if self._compat is None:
            space = self.space
            bits = space.full_bits
            for edge, allowed in self.active:
                edge_bits = 0
                for values in allowed:
                    cyl = space.full_bits
                    for site, v in zip(edge, values):
                        cyl &= space.value_mask(site, v)
                    edge_bits |= cyl
                bits &= edge_bits
            self._compat = bits
        return self._compat

    def clusters(self) -> tuple:
        """Partition of all sites as site masks; chained active edges merge."""
        if self._clusters is None:
            parent = list(range(self.space.n))

            def find(a):
                while parent[a] != a:
                    parent[a] = parent[parent[a]]
                    a = parent[a]
                return a

            for edge, _ in self.active:
                root = find(edge[0])
                for other in edge[1:]:
                    parent[find(other)] = root
            classes: dict[int, int] = {}
            for site in range(self.space.n):
                r = find(site)
                classes[r] = classes.get(r, 0) | (1 << site)
            self._clusters = tuple(sorted(classes.values()))
        return self._clusters

    def flip_closed(self) -> bool:
        """True iff every stored subset is closed under the two-letter swap."""
        self.space.require_binary("flip closure")
        a0, a1 = self.space.alphabet
        swap = {a0: a1, a1: a0}
        for _, allowed in self.active:
            for values in allowed:
                if tuple(swap[v] for v in values) not in allowed:
                    return False
        return True

    def key(self):
        return (self.space.n, self.space.alphabet, self.active)

    def __eq__(self, other):
        return isinstance(other, EtaConfig) and self.key() == other.key()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.key())
        return self._hash

    def __repr__(self):
        body = ", ".join(f"{e}:{len(a)}" for e, a in self.active)
        return f"EtaConfig({body or 'inactive'})"


def compatible(omega, eta: EtaConfig) -> bool:
    return eta.compatible(omega)


def eta_clusters(eta: EtaConfig) -> tuple[frozenset, ...]:
    """The site partition as frozensets (singletons included)."""
    return tuple(frozenset(iter_bits(mask)) for mask in eta.clusters())


class RcrBase:
    """Finite support of eta-configurations with positive weights."""

    __slots__ = ("space", "entries", "matching_structure")

    def __init__(self, space: SpaceSpec, entries, matching_structure=False):
        seen = set()
        kept = []
        for eta, w in entries:
            if eta.space != space:
                raise InputError("support eta lives on a different space")
            if w < 0:
                raise InputError("base weights must be nonnegative")
            if w == 0:
                continue
            if eta in seen:
                raise InputError(f"duplicate support entry {eta!r}")
            seen.add(eta)
            kept.append((eta, w))
        if not kept:
            raise InputError("base has empty support")
        self.space = space
        self.entries = tuple(kept)
        self.matching_structure = matching_structure

    @property
    def total(self):
        return sum(w for _, w in self.entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def to_records(self) -> list[dict]:
        out = []
        for eta, w in self.entries:
            out.append(
                {
                    "active": [
                        {"sites": list(e), "allowed": sorted(list(v) for v in a)}
                        for e, a in eta.active
                    ],
                    "weight": float(w),
                }
            )
        return out


def trivial_base(measure: Measure) -> RcrBase:
    """One eta per configuration of positive weight, pinning every site."""
    space = measure.space
    if space.size < 2:
        raise InputError("trivial base needs at least two configurations")
    all_sites = tuple(range(space.n))
    entries = []
    for idx in range(space.size):
        w = measure.weights[idx]
        if w > 0:
            eta = EtaConfig(space, {all_sites: [space.decode(idx)]})
            entries.append((eta, w))
    return RcrBase(space, entries)


@dataclass(frozen=True)
class RcrValidation:
    ok: bool
    scale: float
    max_rel_dev: float
    worst_index: int | None
    exact: bool = False


def validate_rcr(base: RcrBase, measure: Measure, tol: float = 1e-9) -> RcrValidation:
    """Brute-force check that compatible-weight sums are proportional to mu.

    Sums every support entry into every compatible configuration; no use is
    made of any product structure the base may have, so this stays an
    independent oracle for bases built analytically.
    """
    if base.space != measure.space:
        raise InputError("base and measure live on different spaces")
    size = measure.space.size
    exact = measure.exact and all(isinstance(w, (int, Fraction)) for _, w in base.entries)
    acc = [Fraction(0)] * size if exact else np.zeros(size, dtype=np.float64)
    for eta, w in base.entries:
        w = w if exact else float(w)
        for idx in iter_bits(eta.compatible_bits()):
            acc[idx] += w
    mu = measure.weights
    anchor = next((i for i in range(size) if mu[i] > 0), None)
    if anchor is None:
        raise InputError("measure has no positive weight")
    if exact:
        ok = all(acc[i] * mu[anchor] == acc[anchor] * mu[i] for i in range(size))
        scale = float(acc[anchor] / mu[anchor])
        return RcrValidation(ok, scale, 0.0 if ok else float("nan"), None if ok else -1, exact=True)
    mu = measure.weights_float()
    scale = float(acc[anchor] / mu[anchor])
    diff = np.abs(acc - scale * mu)
    denom = max(float(np.max(np.abs(scale * mu))), 1e-300)
    rel = diff / denom
    worst = int(np.argmax(rel))
    return RcrValidation(float(rel[worst]) <= tol, scale, float(rel[worst]), worst)


# ---------------------------------------------------------------------------
# the monotone base of a Gibbs potential

GIBBS_SUPPORT_CAP = 1 << 17


def gibbs_base(potential: Potential, support_cap: int = GIBBS_SUPPORT_CAP) -> RcrBase:
    """Product-over-edges base whose compatible sums give the Gibbs weights.

    Per edge the options are the value-threshold upper sets of the table,
    weighted by (min exp inside) - (max exp outside); the full set is the
    inactive option.  Constant-table edges admit only their inactive option
    and are skipped (the constant factor is absorbed by normalization).
    All surviving weights are strictly positive.
    """
    space = potential.space
    factors = []
    support_size = 1
    for edge, table in potential.terms.items():
        values = sorted(set(table), reverse=True)
        if len(values) == 1:
            continue
        locals_by_value = {v: [] for v in values}
        for local, v in enumerate(table):
            locals_by_value[v].append(_local_tuple(space, edge, local))
        options = []
        members: list[tuple] = []
        for level, v in enumerate(values):
            members = members + locals_by_value[v]
            inside = exp(v)
            outside = exp(values[level + 1]) if level + 1 < len(values) else 0.0
            weight = inside - outside
            if level + 1 < len(values):
                options.append((edge, frozenset(members), weight))
            else:
                options.append((edge, None, weight))  # full set: inactive
        factors.append(options)
        support_size *= len(options)
        if support_size > support_cap:
            raise InputError(
                f"gibbs base support would exceed {support_cap} entries; "
                "reduce the potential or raise support_cap"
            )
    entries = []
    for combo in _product(factors):
        active = {}
        weight = 1.0
        for edge, members, w in combo:
            weight *= w
            if members is not None:
                active[edge] = members
        entries.append((EtaConfig(space, active), weight))
    return RcrBase(space, entries)


def _local_tuple(space: SpaceSpec, edge, local: int) -> tuple:
    values = []
    for _ in edge:
        local, r = divmod(local, space.q)
        values.append(space.alphabet[r])
    return tuple(reversed(values))


def _product(factors):
    if not factors:
        yield ()
        return
    head, *tail = factors
    for option in head:
        for rest in _product(tail):
            yield (option, *rest)


# ---------------------------------------------------------------------------
# hypothesis checks

@dataclass(frozen=True)
class SymmetryReport:
    ok: bool
    witness: tuple | None  # (entry position, edge) of the first violation


def check_condition_i(base: RcrBase) -> SymmetryReport:
    """Every stored subset of every support entry is swap-closed."""
    base.space.require_binary("symmetry check")
    a0, a1 = base.space.alphabet
    swap = {a0: a1, a1: a0}
    for pos, (eta, _) in enumerate(base.entries):
        for edge, allowed in eta.active:
            for values in allowed:
                if tuple(swap[v] for v in values) not in allowed:
                    return SymmetryReport(False, (pos, edge))
    return SymmetryReport(True, None)


@dataclass
class OmegaSeparation:
    folded_index: int
    candidates: int
    uniform_pair: tuple | None  # (K sites, L sites) valid for every compatible eta
    per_eta_ok: bool            # weaker: each compatible eta admits some pair


@dataclass
class SeparationReport:
    ok: bool                 # a uniform pair exists for every applicable omega
    per_eta_ok: bool         # the weaker per-eta variant
    checked: int             # folded configurations with a nonempty selection
    details: list = field(default_factory=list)


def check_condition_ii(
    base: RcrBase,
    rule: SelectionRule,
    A: Event,
    B: Event,
    locked,
    alpha,
    pairing=None,
    keep_details: bool = False,
) -> SeparationReport:
    """Separation of witness pairs from eta-clusters across a folding.

    For each reduced configuration whose embedding admits witness pairs,
    search the rule's (minimal) pairs, smallest total size first, for one
    whose unlocked K-sites and L-sites never share an eta-cluster over all
    compatible support entries.  The per-eta diagnostic allows the pair to
    vary with eta; it never upgrades a failed uniform search.
    """
    full_space = A.space
    if B.space != full_space:
        raise InputError("events live on different spaces")
    folded, unlocked, embed, _, _ = embedding_tables(full_space, locked, alpha, pairing)
    if folded != base.space:
        raise InputError("base does not live on the folded space of this locking")
    pos_of = {site: pos for pos, site in enumerate(unlocked)}
    compat = [(eta.compatible_bits(), eta.clusters()) for eta, _ in base.entries]
    report = SeparationReport(True, True, 0)
    for f_idx in range(folded.size):
        pairs = rule.pairs(A, B, embed[f_idx])
        if not pairs:
            continue
        report.checked += 1
        etas_here = [clusters for bits, clusters in compat if (bits >> f_idx) & 1]
        masks = []
        for K, L in pairs:
            k_mask = _folded_mask(K, pos_of)
            l_mask = _folded_mask(L, pos_of)
            masks.append((k_mask, l_mask))
        uniform = None
        for (K, L), (k_mask, l_mask) in zip(pairs, masks):
            if all(_separated(clusters, k_mask, l_mask) for clusters in etas_here):
                uniform = (K, L)
                break
        per_eta = all(
            any(_separated(clusters, km, lm) for km, lm in masks) for clusters in etas_here
        )
        if uniform is None:
            report.ok = False
        if not per_eta:
            report.per_eta_ok = False
        if keep_details or uniform is None:
            report.details.append(OmegaSeparation(f_idx, len(pairs), uniform, per_eta))
    return report


def _folded_mask(sites, pos_of) -> int:
    mask = 0
    for s in sites:
        p = pos_of.get(s)
        if p is not None:
            mask |= 1 << p
    return mask


def _separated(clusters, k_mask: int, l_mask: int) -> bool:
    if not k_mask or not l_mask:
        return True
    return not any(cls & k_mask and cls & l_mask for cls in clusters)


def check_cardinality_lemma(
    eta: EtaConfig,
    A: Event,
    B: Event,
    locked,
    alpha,
    rule: SelectionRule,
    pairing=None,
) -> tuple[int, int]:
    """Count compatible reduced configurations in the restricted event versus
    the split membership (embedding in A, swapped embedding in B).

    Under the symmetry and separation hypotheses the first count never
    exceeds the second; the caller is responsible for having checked them.
    """
    full_space = A.space
    if B.space != full_space:
        raise InputError("events live on different spaces")
    folded, _, embed, embed_bar, _ = embedding_tables(full_space, locked, alpha, pairing)
    if folded != eta.space:
        raise InputError("eta does not live on the folded space of this locking")
    lhs = rhs = 0
    a_bits, b_bits = A.bits, B.bits
    for f_idx in iter_bits(eta.compatible_bits()):
        u = embed[f_idx]
        if rule.holds(A, B, u):
            lhs += 1
        if (a_bits >> u) & 1 and (b_bits >> embed_bar[f_idx]) & 1:
            rhs += 1
    return lhs, rhs
