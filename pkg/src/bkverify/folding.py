"""Foldings: two-letter reductions of a measure over an unlocked site set.

Lock the sites in M to the values alpha and restrict every other site i to a
two-value pair.  The folded weight of a reduced configuration is

    result(omega)  proportional to  mu(alpha o omega) * mu(alpha o omega-bar)

where omega-bar swaps every unlocked site within its pair.  The folded space
is binary with digit 1 meaning the higher value of the pair, so the all-ones
reduced configuration embeds to "alpha on M, pair maximum elsewhere".  The
product is symmetric under the swap by construction, and a zero normalizer
(possible only when mu has zeros) is an error rather than a zero measure:
sweeps must surface which foldings are vacuous.
"""

from __future__ import annotations

import math
from itertools import combinations, product

from .errors import DegenerateFoldingError, InputError
from .measures import FoldedFamily, Measure
from .potentials import Potential
from .space import SitePairing, SpaceSpec


def _as_locked(space: SpaceSpec, locked) -> tuple:
    locked = tuple(sorted(locked))
    if len(set(locked)) != len(locked):
        raise InputError("locked sites repeat")
    if any(not 0 <= s < space.n for s in locked):
        raise InputError("locked site out of range")
    return locked


def _default_pairing(space: SpaceSpec, unlocked) -> SitePairing:
    space.require_binary("implicit folding pairing")
    return SitePairing.from_dict(space, {i: (space.bottom, space.top) for i in unlocked})


def embedding_tables(space: SpaceSpec, locked, alpha, pairing: SitePairing | None = None):
    """(folded_space, unlocked, embed, embed_bar): reduced-index lookup tables.

    ``embed[f]`` is the full-space index of "alpha on M, reduced digits on
    the unlocked sites"; ``embed_bar[f]`` embeds the swapped configuration.
    """
    locked = _as_locked(space, locked)
    alpha = tuple(alpha)
    if len(alpha) != len(locked):
        raise InputError(f"alpha needs {len(locked)} values")
    unlocked = tuple(s for s in range(space.n) if s not in locked)
    if pairing is None:
        pairing = _default_pairing(space, unlocked)
    if pairing.sites != unlocked:
        raise InputError("pairing must cover exactly the unlocked sites")
    folded = SpaceSpec(len(unlocked), (0, 1), max_bits=space.max_bits, allow_empty=True)
    base = [0] * space.n
    for site, value in zip(locked, alpha):
        base[site] = space._require_rank(value)
    pair_ranks = {
        site: (space._require_rank(lo), space._require_rank(hi))
        for site, (lo, hi) in pairing.pairs
    }
    embed, embed_bar = [], []
    for f in range(folded.size):
        digits = list(base)
        digits_bar = list(base)
        for pos, site in enumerate(unlocked):
            bit = (f >> (folded.n - 1 - pos)) & 1
            lo, hi = pair_ranks[site]
            digits[site] = hi if bit else lo
            digits_bar[site] = lo if bit else hi
        idx = idx_bar = 0
        for d, db in zip(digits, digits_bar):
            idx = idx * space.q + d
            idx_bar = idx_bar * space.q + db
        embed.append(idx)
        embed_bar.append(idx_bar)
    return folded, unlocked, tuple(embed), tuple(embed_bar), pairing


class Folding:
    """A folded measure together with its embedding back into the base space."""

    __slots__ = ("base", "locked", "alpha", "pairing", "unlocked", "space", "embed", "embed_bar", "result")

    def __init__(self, base: Measure, locked, alpha, pairing: SitePairing | None = None):
        space = base.space
        folded, unlocked, embed, embed_bar, pairing = embedding_tables(space, locked, alpha, pairing)
        locked = _as_locked(space, locked)
        weights = [base.weights[u] * base.weights[v] for u, v in zip(embed, embed_bar)]
        if not any(w > 0 for w in weights):
            raise DegenerateFoldingError(
                f"folding with locked={locked}, alpha={tuple(alpha)} has zero normalizer"
            )
        self.base = base
        self.locked = locked
        self.alpha = tuple(alpha)
        self.pairing = pairing
        self.unlocked = unlocked
        self.space = folded
        self.embed = embed
        self.embed_bar = embed_bar
        self.result = Measure(
            folded,
            weights,
            FoldedFamily(base.family, locked, self.alpha),
            exact=base.exact,
        )

    @property
    def trivial(self) -> bool:
        """Everything locked: the folded space has no sites."""
        return self.space.n == 0

    def folded_position(self, site: int) -> int:
        return self.unlocked.index(site)

    def __repr__(self):
        return f"Folding(locked={self.locked}, alpha={self.alpha}, n'={self.space.n})"


def fold(measure: Measure, locked, alpha, pairing: SitePairing | None = None) -> Folding:
    return Folding(measure, locked, alpha, pairing)


def _site_pairings(space: SpaceSpec, unlocked):
    """All pairings of the unlocked sites, up to swapping within a pair."""
    if space.q > 4:
        raise InputError("pairing sweeps are limited to alphabets of at most 4 values")
    per_site = list(combinations(space.alphabet, 2))
    for choice in product(per_site, repeat=len(unlocked)):
        yield SitePairing.from_dict(space, dict(zip(unlocked, choice)))


def all_foldings(measure: Measure, include_trivial=False, skip_degenerate=False):
    """Every (locked set, alpha, pairing) folding; binary pairings are forced.

    Degenerate foldings raise unless ``skip_degenerate``; callers that sweep
    measures with zero weights should collect them explicitly.
    """
    space = measure.space
    n = space.n
    for m_size in range(n + (1 if include_trivial else 0)):
        for locked in combinations(range(n), m_size):
            unlocked = tuple(s for s in range(n) if s not in locked)
            pairings = (
                [_default_pairing(space, unlocked)]
                if space.is_binary
                else _site_pairings(space, unlocked)
            )
            for alpha in product(space.alphabet, repeat=m_size):
                for pairing in pairings:
                    try:
                        yield Folding(measure, locked, alpha, pairing)
                    except DegenerateFoldingError:
                        if not skip_degenerate:
                            raise


def folded_potential(potential: Potential, locked, alpha, pairing: SitePairing | None = None) -> Potential:
    """Potential on the folded space whose Gibbs weights match the folding.

    Each base edge contributes, through its overlap c with the unlocked
    sites, the sum of its values at the embedded configuration and at the
    embedded swap; locked-only edges are constants and drop out.  Every
    resulting table is invariant under the swap of its local configuration.
    """
    space = potential.space
    folded, unlocked, _, _, pairing = embedding_tables(space, locked, alpha, pairing)
    locked = _as_locked(space, locked)
    alpha_by_site = dict(zip(locked, tuple(alpha)))
    pair_by_site = dict(pairing.pairs)
    pos_of = {site: pos for pos, site in enumerate(unlocked)}
    tables: dict[tuple, list] = {}
    for edge, _table in potential.terms.items():
        overlap = tuple(s for s in edge if s in pos_of)
        if not overlap:
            continue
        folded_edge = tuple(pos_of[s] for s in overlap)
        acc = tables.setdefault(folded_edge, [0.0] * (2 ** len(overlap)))
        m = len(overlap)
        for local in range(2**m):
            values = {}
            values_bar = {}
            for p, site in enumerate(overlap):
                bit = (local >> (m - 1 - p)) & 1
                lo, hi = pair_by_site[site]
                values[site] = hi if bit else lo
                values_bar[site] = lo if bit else hi
            def edge_values(mapping):
                return tuple(
                    alpha_by_site[s] if s in alpha_by_site else mapping[s] for s in edge
                )

            # one commutative sum per base edge keeps the swapped table entry
            # bit-identical
            acc[local] += (
                potential.terms[edge][potential.local_index(edge, edge_values(values))]
                + potential.terms[edge][potential.local_index(edge, edge_values(values_bar))]
            )
    return Potential(folded, {e: tuple(t) for e, t in tables.items()})


def cw_fold_parameter(measure: Measure, locked, alpha, tol: float = 1e-10) -> tuple[float, int]:
    """Fit result(omega) proportional to x**(k(n'-k)) and return (x, n').

    k counts the unlocked sites folded to their pair maximum.  x is solved
    from the level-0 and level-1 weights and then validated against every
    level; a relative residual above ``tol`` means the folding is not of
    this two-spin symmetric form and is an input error.
    """
    folding = fold(measure, locked, alpha)
    n_unlocked = folding.space.n
    weights = folding.result.weights_float()
    if n_unlocked <= 1:
        return 1.0, n_unlocked
    w0 = weights[0]
    if w0 <= 0:
        raise InputError("level-0 weight vanishes; no power-law fit possible")
    x = float((weights[1] / w0) ** (1.0 / (n_unlocked - 1)))
    for idx in range(folding.space.size):
        k = idx.bit_count()
        expected = w0 * x ** (k * (n_unlocked - k))
        if not math.isclose(weights[idx], expected, rel_tol=tol, abs_tol=0.0):
            raise InputError(
                f"folded weights are not a k(n-k) power law (index {idx}: "
                f"{weights[idx]} vs {expected})"
            )
    return x, n_unlocked
