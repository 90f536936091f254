"""Measure families, lattice-condition checks, and pairwise inequality reports.

Weights are stored unnormalized.  Float mode uses numpy double precision and
every inequality check applies the relative tolerance policy

    pass  iff  lhs <= rhs + tol * max(1, |rhs|)

with ``tol = 1e-9`` by default.  Families whose weights are rational
(k-out-of-n, product, symmetric level weights with rational x) can be built
in exact mode, where weights are ``fractions.Fraction`` and comparisons are
exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import InputError
from .space import Event, SpaceSpec

DEFAULT_TOL = 1e-9


def leq_with_tol(lhs, rhs, tol: float) -> bool:
    return lhs <= rhs + tol * max(1.0, abs(rhs))


# ---------------------------------------------------------------------------
# family descriptors

@dataclass(frozen=True)
class ProductFamily:
    site_dists: tuple  # per-site tuple of probabilities over alphabet ranks


@dataclass(frozen=True)
class KOutOfN:
    k: int


@dataclass(frozen=True)
class CurieWeissFamily:
    coupling: float
    fields: tuple


@dataclass(frozen=True)
class CurieWeissCubicFamily:
    field: float
    pair: float
    triple: float


@dataclass(frozen=True)
class IsingFamily:
    couplings: tuple  # sparse ((i, j, value), ...) with i < j
    fields: tuple


@dataclass(frozen=True)
class PottsFamily:
    couplings: tuple
    q: int


@dataclass(frozen=True)
class GibbsFamily:
    potential: object


@dataclass(frozen=True)
class SymmetricLevelsFamily:
    levels: tuple  # p_0 .. p_{floor(n/2)}


@dataclass(frozen=True)
class FoldedFamily:
    base: object
    locked: tuple
    alpha: tuple


# ---------------------------------------------------------------------------

class Measure:
    """Nonnegative weight table over a configuration space."""

    __slots__ = ("space", "weights", "family", "exact", "_total", "_np")

    def __init__(self, space: SpaceSpec, weights, family=None, exact=False):
        if len(weights) != space.size:
            raise InputError(f"need {space.size} weights, got {len(weights)}")
        if exact:
            weights = [Fraction(w) for w in weights]
            if any(w < 0 for w in weights):
                raise InputError("weights must be nonnegative")
            total = sum(weights)
        else:
            weights = np.asarray(weights, dtype=np.float64)
            if not np.all(np.isfinite(weights)) or np.any(weights < 0):
                raise InputError("weights must be finite and nonnegative")
            total = float(weights.sum())
        if total <= 0:
            raise InputError("total weight must be positive")
        self.space = space
        self.weights = weights
        self.family = family
        self.exact = exact
        self._total = total
        self._np = None

    @property
    def total(self):
        return self._total

    def weight(self, config_or_index):
        return self.weights[self.space.index(config_or_index)]

    def event_weight(self, event: Event):
        if event.space != self.space:
            raise InputError("event lives on a different space")
        if self.exact:
            return sum(self.weights[i] for i in event.indices())
        if self.space.size >= 4096:
            return float(self.weights @ event_bool_array(event))
        return float(sum(self.weights[i] for i in event.indices()))

    def prob(self, event: Event):
        return self.event_weight(event) / self._total

    def prob_index(self, config_or_index):
        return self.weight(config_or_index) / self._total

    def weights_float(self) -> np.ndarray:
        if self._np is None:
            if self.exact:
                self._np = np.array([float(w) for w in self.weights], dtype=np.float64)
            else:
                self._np = self.weights
        return self._np

    def __repr__(self):
        tag = type(self.family).__name__ if self.family is not None else "raw"
        return f"Measure({tag}, n={self.space.n}, exact={self.exact})"


def event_bool_array(event: Event) -> np.ndarray:
    nbytes = (event.space.size + 7) // 8
    raw = event.bits.to_bytes(nbytes, "little")
    unpacked = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
    return unpacked[: event.space.size].astype(np.float64)


# ---------------------------------------------------------------------------
# constructors

SPIN_ALPHABET = (-1, +1)


@lru_cache(maxsize=32)
def _spin_columns(space: SpaceSpec) -> np.ndarray:
    """(n, size) array of +-1 digits for a binary space.

    Materializes n full columns, so it is reserved for the mean-field
    constructors; the pairwise constructor streams instead.
    """
    space.require_binary("spin columns")
    if space.size > 1 << 20:
        raise InputError("mean-field constructors are capped at 2^20 configurations")
    idx = np.arange(space.size, dtype=np.int64)
    cols = np.empty((space.n, space.size), dtype=np.float64)
    for site in range(space.n):
        cols[site] = (((idx >> (space.n - 1 - site)) & 1) * 2 - 1).astype(np.float64)
    return cols


def product_measure(space: SpaceSpec, p, exact=False) -> Measure:
    """Independent sites.  For binary spaces ``p[i]`` is the top-value probability;
    otherwise supply a per-site distribution over the alphabet."""
    if len(p) != space.n:
        raise InputError(f"need {space.n} site parameters, got {len(p)}")
    dists = []
    for site in range(space.n):
        pi = p[site]
        if isinstance(pi, (list, tuple)):
            if len(pi) != space.q:
                raise InputError(f"site {site} distribution has wrong length")
            dist = tuple(pi)
        else:
            space.require_binary("scalar product parameters")
            dist = (1 - pi, pi)
        if any(x < 0 for x in dist):
            raise InputError("probabilities must be nonnegative")
        if exact:
            dist = tuple(Fraction(x) for x in dist)
        dists.append(dist)
    weights = []
    for idx in range(space.size):
        w = Fraction(1) if exact else 1.0
        for site in range(space.n):
            w *= dists[site][space.digit(idx, site)]
        weights.append(w)
    return Measure(space, weights, ProductFamily(tuple(dists)), exact=exact)


def k_out_of_n(n: int, k: int, exact=True) -> Measure:
    """Equal weight on the configurations of {0,1}^n with exactly k ones."""
    if not 0 <= k <= n:
        raise InputError(f"need 0 <= k <= n, got k={k}, n={n}")
    space = SpaceSpec(n, (0, 1))
    weights = [1 if idx.bit_count() == k else 0 for idx in range(space.size)]
    return Measure(space, weights, KOutOfN(k), exact=exact)


def symmetric_levels(n: int, levels=None, x=None, exact=False) -> Measure:
    """Flip-symmetric permutation-invariant weights p_{|omega|} on {0,1}^n.

    With ``x`` given, uses the level weights p_k = x**(k*(n-k)); pass a
    Fraction (or int/str) together with ``exact=True`` for rational mode.
    """
    half = n // 2
    if x is not None:
        x = Fraction(x) if exact else float(x)
        levels = [x ** (k * (n - k)) for k in range(half + 1)]
    if levels is None or len(levels) != half + 1:
        raise InputError(f"need {half + 1} level weights")
    if any(l < 0 for l in levels):
        raise InputError("level weights must be nonnegative")
    space = SpaceSpec(n, (0, 1))
    weights = []
    for idx in range(space.size):
        k = idx.bit_count()
        weights.append(levels[min(k, n - k)])
    return Measure(space, weights, SymmetricLevelsFamily(tuple(levels)), exact=exact)


def curie_weiss(n: int, coupling: float, fields=0.0) -> Measure:
    """Mean-field spin measure: every pair interacts with the same strength."""
    fields = _field_vector(n, fields)
    space = SpaceSpec(n, SPIN_ALPHABET)
    cols = _spin_columns(space)
    s = cols.sum(axis=0)
    pair_sum = (s * s - n) / 2.0  # sum over unordered pairs of s_i s_j
    energy = coupling * pair_sum + fields @ cols
    weights = np.exp(energy - energy.max())
    return Measure(space, weights, CurieWeissFamily(coupling, tuple(fields)))


def curie_weiss_cubic(n: int, field: float, pair: float, triple: float) -> Measure:
    """Mean-field spins with uniform pair and three-body interactions.

    With ``triple == 0`` the weight table equals ``curie_weiss(n, pair,
    field)`` bit for bit (the energy accumulation is shared term by term).
    """
    space = SpaceSpec(n, SPIN_ALPHABET)
    cols = _spin_columns(space)
    s = cols.sum(axis=0)
    pair_sum = (s * s - n) / 2.0
    # elementary symmetric e3 for +-1 spins: power sums are p2 = n, p3 = s
    triple_sum = (s**3 - 3 * n * s + 2 * s) / 6.0
    energy = _field_vector(n, field) @ cols + pair * pair_sum + triple * triple_sum
    weights = np.exp(energy - energy.max())
    return Measure(space, weights, CurieWeissCubicFamily(field, pair, triple))


def _field_vector(n: int, fields) -> np.ndarray:
    if np.isscalar(fields):
        return np.full(n, float(fields))
    fields = np.asarray(fields, dtype=np.float64)
    if fields.shape != (n,):
        raise InputError(f"need {n} field values")
    return fields


def _normalize_couplings(n: int, couplings) -> tuple:
    """Sparse (i, j, value) triples, a {(i, j): value} dict, or a dense
    symmetric numpy matrix.  Lists of rows are always read as triples."""
    out: dict[tuple, float] = {}
    if isinstance(couplings, dict):
        items = [(i, j, v) for (i, j), v in couplings.items()]
    elif isinstance(couplings, np.ndarray):
        if couplings.shape != (n, n):
            raise InputError(f"coupling matrix must be {n}x{n}")
        mat = couplings.astype(np.float64)
        if not np.array_equal(mat, mat.T):
            raise InputError("coupling matrix must be symmetric")
        if np.any(np.diag(mat) != 0):
            raise InputError("coupling matrix must have zero diagonal")
        items = [(i, j, mat[i, j]) for i in range(n) for j in range(i + 1, n)]
    else:
        items = [tuple(t) for t in couplings]
    for i, j, v in items:
        i, j, v = int(i), int(j), float(v)
        if i == j:
            raise InputError("coupling diagonal must be zero")
        if not (0 <= i < n and 0 <= j < n):
            raise InputError(f"coupling site pair ({i}, {j}) out of range")
        key = (min(i, j), max(i, j))
        if key in out and out[key] != v:
            raise InputError(f"conflicting values for coupling {key}")
        out[key] = v
    return tuple((i, j, v) for (i, j), v in sorted(out.items()) if v != 0.0)


def ising(n: int, couplings, fields=0.0) -> Measure:
    """Pairwise +-1 spin measure with couplings J_ij and per-site fields.

    Streams one uint8 digit array per term so the 24-site enumeration cap
    stays within a few hundred MB.
    """
    triples = _normalize_couplings(n, couplings)
    fields = _field_vector(n, fields)
    space = SpaceSpec(n, SPIN_ALPHABET)
    idx = np.arange(space.size, dtype=np.int64)
    energy = np.zeros(space.size, dtype=np.float64)
    offset = 0.0
    for site, h in enumerate(fields):
        if h != 0.0:
            bit = ((idx >> (n - 1 - site)) & 1).astype(np.uint8)
            energy += (2.0 * h) * bit  # h * s = 2h*bit - h
            offset -= h
    for i, j, v in triples:
        agree = (((idx >> (n - 1 - i)) ^ (idx >> (n - 1 - j))) & 1).astype(np.uint8)
        energy -= (2.0 * v) * agree  # J * s_i s_j = J - 2J*[bits differ]
        offset += v
    energy += offset
    weights = np.exp(energy - energy.max())
    return Measure(space, weights, IsingFamily(triples, tuple(fields)))


def potts(n: int, q: int, couplings) -> Measure:
    """q-state measure rewarding/punishing equal neighbours per J_ij."""
    if q < 2:
        raise InputError("need q >= 2")
    triples = _normalize_couplings(n, couplings)
    space = SpaceSpec(n, tuple(range(q)))
    idx = np.arange(space.size, dtype=np.int64)
    digits = [(idx // q ** (n - 1 - site)) % q for site in range(n)]
    energy = np.zeros(space.size, dtype=np.float64)
    for i, j, v in triples:
        energy += v * (digits[i] == digits[j])
    weights = np.exp(energy - energy.max())
    return Measure(space, weights, PottsFamily(triples, q))


def gibbs(potential) -> Measure:
    """exp of the summed hyperedge potential, normalized."""
    space = potential.space
    energy = np.zeros(space.size, dtype=np.float64)
    idx = np.arange(space.size, dtype=np.int64)
    q = space.q
    for edge in potential.edges():
        table = np.asarray(potential.table(edge), dtype=np.float64)
        local = np.zeros(space.size, dtype=np.int64)
        for pos, site in enumerate(edge):
            local = local * q + (idx // q ** (space.n - 1 - site)) % q
        energy += table[local]
    weights = np.exp(energy - energy.max())
    return Measure(space, weights, GibbsFamily(potential))


def build_measure(desc: dict) -> Measure:
    """Construct a measure from a configuration-file descriptor."""
    if not isinstance(desc, dict) or "family" not in desc:
        raise InputError("measure descriptor needs a 'family' key")
    fam = desc["family"]
    n = desc.get("n")
    if fam == "product":
        space = SpaceSpec(n, tuple(desc.get("alphabet", (0, 1))))
        return product_measure(space, desc["p"], exact=desc.get("exact", False))
    if fam == "k_out_of_n":
        return k_out_of_n(n, desc["k"])
    if fam == "symmetric_levels":
        x = desc.get("x")
        if isinstance(x, str):
            x = Fraction(x)
        return symmetric_levels(n, desc.get("levels"), x, exact=desc.get("exact", False))
    if fam == "curie_weiss":
        return curie_weiss(n, desc["coupling"], desc.get("fields", 0.0))
    if fam == "curie_weiss_cubic":
        return curie_weiss_cubic(n, desc.get("field", 0.0), desc["pair"], desc["triple"])
    if fam == "ising":
        return ising(n, desc["couplings"], desc.get("fields", 0.0))
    if fam == "potts":
        return potts(n, desc["q"], desc["couplings"])
    if fam == "gibbs":
        from .potentials import potential_from_config

        return gibbs(potential_from_config(desc["potential"]))
    raise InputError(f"unknown measure family {fam!r}")


# ---------------------------------------------------------------------------
# checks

@dataclass(frozen=True)
class LatticeReport:
    ok: bool
    sign: str
    witness: tuple | None  # (index_a, index_b) violating pair
    worst_margin: float


def check_lattice_condition(measure: Measure, sign: str = "negative", tol: float = DEFAULT_TOL) -> LatticeReport:
    """Compare mu(a|b) mu(a&b) against mu(a) mu(b) over all index pairs.

    ``negative`` demands <=, ``positive`` demands >=.  Binary alphabets only:
    join and meet of configurations are the bitwise or/and of their indices.
    """
    space = measure.space
    space.require_binary("lattice condition")
    if sign not in ("negative", "positive"):
        raise InputError("sign must be 'negative' or 'positive'")
    w = measure.weights
    worst: float = math.inf
    witness = None
    for a in range(space.size):
        wa = w[a]
        for b in range(a, space.size):
            lhs = w[a | b] * w[a & b]
            rhs = wa * w[b]
            if sign == "positive":
                lhs, rhs = rhs, lhs
            ok = lhs <= rhs if measure.exact else leq_with_tol(float(lhs), float(rhs), tol)
            if not ok and witness is None:
                witness = (a, b)
            worst = min(worst, float(rhs - lhs))
    return LatticeReport(witness is None, sign, witness, worst)


@dataclass(frozen=True)
class BkReport:
    lhs: float
    rhs: float
    margin: float
    passed: bool
    tol: float
    exact: bool = False


def check_bk_pair(measure: Measure, A: Event, B: Event, rule=None, tol: float = DEFAULT_TOL) -> BkReport:
    """mu(A boxminus B) versus mu(A) mu(B), by full enumeration.

    The report is descriptive: it does not claim the inequality *should*
    hold, only whether it does for these inputs at this tolerance.
    """
    from .boxops import FullRule

    if A.space != measure.space or B.space != measure.space:
        raise InputError("events live on a different space than the measure")
    rule = rule or FullRule()
    restricted = rule.boxminus(A, B)
    if measure.exact:
        lhs = measure.prob(restricted)
        rhs = measure.prob(A) * measure.prob(B)
        return BkReport(float(lhs), float(rhs), float(rhs - lhs), lhs <= rhs, tol, exact=True)
    lhs = measure.prob(restricted)
    rhs = measure.prob(A) * measure.prob(B)
    return BkReport(lhs, rhs, rhs - lhs, leq_with_tol(lhs, rhs, tol), tol)


@dataclass(frozen=True)
class FkgReport:
    lhs: float
    rhs: float
    margin: float
    passed: bool
    flipped_lhs: float
    flipped_rhs: float
    flipped_passed: bool
    tol: float


def check_fkg_pair(measure: Measure, A: Event, B: Event, tol: float = DEFAULT_TOL) -> FkgReport:
    """Positive association for increasing A, B, plus the complement form.

    Checks mu(A & B) >= mu(A) mu(B) and, with the decreasing event ~B, the
    equivalent mu(A & ~B) <= mu(A) mu(~B).
    """
    from .space import is_increasing

    if A.space != measure.space or B.space != measure.space:
        raise InputError("events live on a different space than the measure")
    if not is_increasing(A) or not is_increasing(B):
        raise InputError("positive-association check needs increasing events")
    fam = measure.family
    if isinstance(fam, IsingFamily) and any(v < 0 for _, _, v in fam.couplings):
        raise InputError("positive-association check needs nonnegative couplings")
    if isinstance(fam, CurieWeissFamily) and fam.coupling < 0:
        raise InputError("positive-association check needs nonnegative couplings")
    pa, pb = measure.prob(A), measure.prob(B)
    lhs = measure.prob(A & B)
    rhs = pa * pb
    bc = ~B
    flipped_lhs = measure.prob(A & bc)
    flipped_rhs = pa * measure.prob(bc)
    return FkgReport(
        lhs,
        rhs,
        lhs - rhs,
        leq_with_tol(rhs, lhs, tol),
        flipped_lhs,
        flipped_rhs,
        leq_with_tol(flipped_lhs, flipped_rhs, tol),
        tol,
    )


def total_variation(m1: Measure, m2: Measure) -> float:
    if m1.space != m2.space:
        raise InputError("measures live on different spaces")
    p = m1.weights_float() / m1.total
    q = m2.weights_float() / m2.total
    return 0.5 * float(np.abs(p - q).sum())
