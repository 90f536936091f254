"""Finite configuration spaces S^n with events stored as integer bitsets.

A configuration over the ordered alphabet ``(s_0 < s_1 < ... < s_{q-1})`` is
a tuple of ``n`` alphabet values, encoded as a mixed-radix integer with site
0 as the *most significant* digit: on ``{0,1}^2`` the configuration
``(1, 0)`` has index 2.  This layout is fixed so bitset serialisations are
reproducible across runs.

An event is a subset of the ``q^n`` configurations, stored as a Python
integer whose bit ``i`` is set iff the configuration with index ``i`` is a
member.  Python integers double as arbitrarily wide bitsets, so all set
algebra is plain integer arithmetic:

    union         A | B
    intersection  A & B
    complement    full_mask ^ A
    subset test   A & ~B == 0      (written  A & (full ^ B) == 0)

Exhaustive operations refuse to run past the enumeration cap (default
``2^24`` configurations) instead of sampling silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator

from .errors import EnumerationCapError, InputError, UnsupportedOperationError

#: Default cap on n * ceil(log2(q)); override per-space via ``max_bits``.
DEFAULT_MAX_BITS = 24


def iter_bits(bits: int) -> Iterator[int]:
    """Yield the indices of the set bits of ``bits``, lowest first."""
    while bits:
        low = bits & -bits
        yield low.bit_length() - 1
        bits ^= low


class SpaceSpec:
    """Product space ``alphabet^n`` with mixed-radix configuration indexing.

    ``n == 0`` (the empty product: one empty configuration) is permitted only
    with ``allow_empty=True``; it occurs as the everything-locked corner case
    of foldings and nowhere else.
    """

    __slots__ = ("n", "alphabet", "q", "size", "max_bits", "_rank", "_vmasks")

    def __init__(self, n, alphabet=(0, 1), max_bits=DEFAULT_MAX_BITS, allow_empty=False):
        alphabet = tuple(alphabet)
        if not isinstance(n, int) or n < (0 if allow_empty else 1):
            raise InputError(f"site count must be a positive integer, got {n!r}")
        if len(alphabet) < 2:
            raise InputError("alphabet needs at least two values")
        if len(set(alphabet)) != len(alphabet):
            raise InputError("alphabet values must be distinct")
        bits_needed = n * max(1, math.ceil(math.log2(len(alphabet))))
        if bits_needed > max_bits:
            raise EnumerationCapError(
                f"{n} sites over {len(alphabet)} values need {bits_needed} index bits; "
                f"cap is {max_bits} (raise max_bits to override)"
            )
        self.n = n
        self.alphabet = alphabet
        self.q = len(alphabet)
        self.size = self.q**n
        self.max_bits = max_bits
        self._rank = {v: i for i, v in enumerate(alphabet)}
        self._vmasks = {}

    # -- configuration indexing ------------------------------------------

    def encode(self, config) -> int:
        """Mixed-radix index of a configuration tuple."""
        config = tuple(config)
        if len(config) != self.n:
            raise InputError(f"configuration has {len(config)} sites, space has {self.n}")
        idx = 0
        try:
            for v in config:
                idx = idx * self.q + self._rank[v]
        except KeyError as exc:
            raise InputError(f"value {exc.args[0]!r} not in alphabet {self.alphabet}") from None
        return idx

    def decode(self, index: int) -> tuple:
        if not 0 <= index < self.size:
            raise InputError(f"configuration index {index} out of range [0, {self.size})")
        digits = []
        for _ in range(self.n):
            index, r = divmod(index, self.q)
            digits.append(self.alphabet[r])
        return tuple(reversed(digits))

    def digit(self, index: int, site: int) -> int:
        """Alphabet rank of ``site`` in the configuration with this index."""
        return (index // self.q ** (self.n - 1 - site)) % self.q

    def configurations(self) -> Iterator[tuple]:
        return (self.decode(i) for i in range(self.size))

    def index(self, config_or_index) -> int:
        return config_or_index if isinstance(config_or_index, int) else self.encode(config_or_index)

    # -- masks -------------------------------------------------------------

    @property
    def full_bits(self) -> int:
        return (1 << self.size) - 1

    def value_mask(self, site: int, value) -> int:
        """Bitset of all configurations whose ``site`` carries ``value``."""
        return self.rank_mask(site, self._require_rank(value))

    def rank_mask(self, site: int, rank: int) -> int:
        if not 0 <= site < self.n:
            raise InputError(f"site {site} out of range [0, {self.n})")
        key = (site, rank)
        mask = self._vmasks.get(key)
        if mask is None:
            # Digit `rank` occupies blocks of q^(n-1-site) consecutive indices,
            # repeating with period q^(n-site).  The pattern is grown by
            # doubling: big-int shifts are linear in the size where the
            # closed-form division would be quadratic.
            block = self.q ** (self.n - 1 - site)
            period = block * self.q
            mask = ((1 << block) - 1) << (rank * block)
            span = period
            while span < self.size:
                mask |= mask << span
                span *= 2
            mask &= (1 << self.size) - 1
            self._vmasks[key] = mask
        return mask

    def _require_rank(self, value) -> int:
        try:
            return self._rank[value]
        except KeyError:
            raise InputError(f"value {value!r} not in alphabet {self.alphabet}") from None

    # -- alphabet order ------------------------------------------------------

    @property
    def bottom(self):
        return self.alphabet[0]

    @property
    def top(self):
        return self.alphabet[-1]

    @property
    def is_binary(self) -> bool:
        return self.q == 2

    def require_binary(self, what: str) -> None:
        if not self.is_binary:
            raise UnsupportedOperationError(f"{what} requires a binary alphabet, got {self.alphabet}")

    # -- identity ------------------------------------------------------------

    def __eq__(self, other):
        return (
            isinstance(other, SpaceSpec)
            and self.n == other.n
            and self.alphabet == other.alphabet
        )

    def __hash__(self):
        return hash((self.n, self.alphabet))

    def __repr__(self):
        return f"SpaceSpec(n={self.n}, alphabet={self.alphabet})"


class Event:
    """A subset of a configuration space, stored as an integer bitset."""

    __slots__ = ("space", "bits")

    def __init__(self, space: SpaceSpec, bits: int):
        if not 0 <= bits <= space.full_bits:
            raise InputError("event bitset out of range for this space")
        self.space = space
        self.bits = bits

    # -- constructors --------------------------------------------------------

    @classmethod
    def empty(cls, space: SpaceSpec) -> "Event":
        return cls(space, 0)

    @classmethod
    def full(cls, space: SpaceSpec) -> "Event":
        return cls(space, space.full_bits)

    @classmethod
    def from_indices(cls, space: SpaceSpec, indices: Iterable[int]) -> "Event":
        bits = 0
        for i in indices:
            if not 0 <= i < space.size:
                raise InputError(f"configuration index {i} out of range")
            bits |= 1 << i
        return cls(space, bits)

    @classmethod
    def from_members(cls, space: SpaceSpec, configs: Iterable) -> "Event":
        return cls.from_indices(space, (space.encode(c) for c in configs))

    # -- set algebra -----------------------------------------------------------

    def _same_space(self, other: "Event") -> None:
        if self.space != other.space:
            raise InputError("events live on different spaces")

    def __and__(self, other):
        self._same_space(other)
        return Event(self.space, self.bits & other.bits)

    def __or__(self, other):
        self._same_space(other)
        return Event(self.space, self.bits | other.bits)

    def __xor__(self, other):
        self._same_space(other)
        return Event(self.space, self.bits ^ other.bits)

    def __sub__(self, other):
        self._same_space(other)
        return Event(self.space, self.bits & (self.space.full_bits ^ other.bits))

    def __invert__(self):
        return Event(self.space, self.space.full_bits ^ self.bits)

    def issubset(self, other: "Event") -> bool:
        self._same_space(other)
        return self.bits & (self.space.full_bits ^ other.bits) == 0

    __le__ = issubset

    def __eq__(self, other):
        return isinstance(other, Event) and self.space == other.space and self.bits == other.bits

    def __hash__(self):
        return hash((self.space, self.bits))

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __bool__(self) -> bool:
        return self.bits != 0

    def __contains__(self, config_or_index) -> bool:
        return (self.bits >> self.space.index(config_or_index)) & 1 == 1

    def indices(self) -> Iterator[int]:
        return iter_bits(self.bits)

    def members(self) -> Iterator[tuple]:
        return (self.space.decode(i) for i in self.indices())

    # -- serialization -----------------------------------------------------------

    def to_hex(self) -> str:
        width = (self.space.size + 3) // 4
        return format(self.bits, f"0{width}x")

    @classmethod
    def from_hex(cls, space: SpaceSpec, text: str) -> "Event":
        return cls(space, int(text, 16))

    def header(self) -> dict:
        return {"n": self.space.n, "alphabet": list(self.space.alphabet)}

    def __repr__(self):
        return f"Event(n={self.space.n}, |E|={len(self)}, bits=0x{self.to_hex()})"


def cylinder(space: SpaceSpec, omega, sites: Iterable[int]) -> Event:
    """The set of configurations agreeing with ``omega`` on ``sites``."""
    idx = space.index(omega)
    bits = space.full_bits
    for site in sites:
        if not isinstance(site, int) or not 0 <= site < space.n:
            raise InputError(f"site {site!r} out of range [0, {space.n})")
        bits &= space.rank_mask(site, space.digit(idx, site))
    return Event(space, bits)


def cylinder_bits(space: SpaceSpec, index: int, site_mask: int) -> int:
    """Fast-path cylinder: configuration by index, site set by bitmask."""
    bits = space.full_bits
    for site in iter_bits(site_mask):
        bits &= space.rank_mask(site, space.digit(index, site))
    return bits


@dataclass(frozen=True)
class SitePairing:
    """A two-value restriction per site: site ``i`` may only swap within its pair.

    Pairs are stored in alphabet order, so ``pair[1]`` is always the higher
    value.  For binary alphabets the pairing is forced and :meth:`binary`
    builds it for every site.
    """

    space: SpaceSpec
    pairs: tuple  # ((site, (lo, hi)), ...) sorted by site

    @classmethod
    def binary(cls, space: SpaceSpec, sites: Iterable[int] | None = None) -> "SitePairing":
        space.require_binary("implicit pairing")
        sites = range(space.n) if sites is None else sites
        return cls.from_dict(space, {i: (space.bottom, space.top) for i in sites})

    @classmethod
    def from_dict(cls, space: SpaceSpec, mapping: dict) -> "SitePairing":
        pairs = []
        for site in sorted(mapping):
            if not 0 <= site < space.n:
                raise InputError(f"pairing site {site} out of range")
            a, b = mapping[site]
            ra, rb = space._require_rank(a), space._require_rank(b)
            if ra == rb:
                raise InputError(f"pair at site {site} must contain two distinct values")
            lo, hi = (a, b) if ra < rb else (b, a)
            pairs.append((site, (lo, hi)))
        return cls(space, tuple(pairs))

    @property
    def sites(self) -> tuple:
        return tuple(s for s, _ in self.pairs)

    def as_dict(self) -> dict:
        return dict(self.pairs)

    def other(self, site: int, value):
        lo, hi = self.as_dict()[site]
        if value == lo:
            return hi
        if value == hi:
            return lo
        raise InputError(f"value {value!r} at site {site} is outside its pair ({lo}, {hi})")


def flip_config(config, pairing: SitePairing) -> tuple:
    """Swap each paired site's value within its pair; other sites unchanged."""
    values = list(config)
    for site, (lo, hi) in pairing.pairs:
        v = values[site]
        if v == lo:
            values[site] = hi
        elif v == hi:
            values[site] = lo
        else:
            raise InputError(f"value {v!r} at site {site} is outside its pair ({lo}, {hi})")
    return tuple(values)


def flip_event(event: Event, pairing: SitePairing) -> Event:
    """Image of an event under the sitewise pair swap.  Involution."""
    space = event.space
    if pairing.space != space:
        raise InputError("pairing is for a different space")
    if space.is_binary and len(pairing.pairs) == space.n:
        # Full binary flip complements every digit: index i maps to size-1-i,
        # which is a plain bitstring reversal.
        rev = format(event.bits, f"0{space.size}b")[::-1]
        return Event(space, int(rev, 2))
    bits = 0
    for i in event.indices():
        bits |= 1 << space.encode(flip_config(space.decode(i), pairing))
    return Event(space, bits)


def flip(x, pairing: SitePairing):
    """Pair swap for either a configuration tuple or an :class:`Event`."""
    if isinstance(x, Event):
        return flip_event(x, pairing)
    return flip_config(x, pairing)


def is_increasing(event: Event) -> bool:
    """True iff the event is closed under raising any site to a higher value."""
    space, bits = event.space, event.bits
    full = space.full_bits
    for site in range(space.n):
        block = space.q ** (space.n - 1 - site)
        for rank in range(space.q - 1):
            raised = (bits & space.rank_mask(site, rank)) << block
            if raised & (full ^ bits):
                return False
    return True


def is_decreasing(event: Event) -> bool:
    """True iff the complement is increasing."""
    return is_increasing(~event)


@lru_cache(maxsize=None)
def _monotone_masks(n: int) -> tuple:
    """All increasing-event bitsets over {0,1}^n, unsorted.

    An increasing event splits along site 0 into a pair (E0, E1) of
    increasing events over the remaining sites with E0 contained in E1; the
    low index block holds E0.  This builds the 168 events at n=4 directly
    instead of filtering all 2^16 subsets.
    """
    if n == 0:
        return (0, 1)
    prev = _monotone_masks(n - 1)
    shift = 1 << (n - 1)
    out = []
    for hi in prev:
        for lo in prev:
            if lo & ~hi == 0:
                out.append(lo | (hi << shift))
    return tuple(out)


def enumerate_increasing(space: SpaceSpec) -> list[Event]:
    """Every increasing event exactly once, ordered by cardinality then bitset."""
    space.require_binary("increasing-event enumeration")
    masks = sorted(_monotone_masks(space.n), key=lambda m: (m.bit_count(), m))
    return [Event(space, m) for m in masks]
