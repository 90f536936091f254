"""Level weights, the triangular coefficient system, and matching bases.

A flip-symmetric permutation-invariant measure on {0,1}^n is determined by
its level weights p_0 .. p_{floor(n/2)}.  Writing a(n, k, j) for the number
of ways to pair j of the ones of a level-k configuration injectively with
its zeros,

    a(n, k, j) = k! (n-k)! / (j! (k-j)! (n-k-j)!),

the system  p_k = sum_j a(n, k, j) xi_j  is lower triangular with positive
diagonal, so it has a unique solution by forward substitution.  When the
solution is nonnegative it weights a base supported on partial matchings:
disjoint site pairs, each forced to opposite values, a matching with j
pairs carrying weight xi_j.  With p_k = x**(k(n-k)) the solution is
nonnegative for every x >= 1; the exact mode settles that with rational
arithmetic instead of tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, permutations

from .errors import InputError
from .rcr import EtaConfig, RcrBase
from .space import SpaceSpec


def akj(n: int, k: int, j: int) -> int:
    """Matching count coefficient; 0 when j > k by convention."""
    if n < 1:
        raise InputError("need n >= 1")
    if not (0 <= k <= n // 2) or j < 0 or j > n // 2:
        raise InputError(f"indices out of range: n={n}, k={k}, j={j}")
    if j > k:
        return 0
    return math.factorial(k) * math.factorial(n - k) // (
        math.factorial(j) * math.factorial(k - j) * math.factorial(n - k - j)
    )


@dataclass(frozen=True)
class XiSolution:
    n: int
    p: tuple
    xi: tuple
    exact: bool

    @property
    def min_xi(self):
        return min(self.xi)

    def residual(self) -> float:
        """Worst absolute defect of p_k - sum_j a(n,k,j) xi_j."""
        worst = 0
        for k in range(len(self.p)):
            acc = sum(akj(self.n, k, j) * self.xi[j] for j in range(k + 1))
            worst = max(worst, abs(self.p[k] - acc))
        return float(worst)


def solve_xi(n: int, p=None, x=None, exact: bool = False) -> XiSolution:
    """Forward substitution for the level-weight system.

    Either pass the level weights ``p`` (length floor(n/2) + 1, p_0 > 0) or
    a ratio ``x``, which sets p_k = x**(k(n-k)).  In exact mode ``x`` (or the
    entries of ``p``) must be Fraction-convertible and the solution is exact.
    """
    if n < 1:
        raise InputError("need n >= 1")
    half = n // 2
    if (p is None) == (x is None):
        raise InputError("pass exactly one of p or x")
    if x is not None:
        x = Fraction(x) if exact else float(x)
        p = tuple(x ** (k * (n - k)) for k in range(half + 1))
    else:
        p = tuple(Fraction(v) for v in p) if exact else tuple(float(v) for v in p)
        if len(p) != half + 1:
            raise InputError(f"need {half + 1} level weights for n={n}")
    if any(v < 0 for v in p):
        raise InputError("level weights must be nonnegative")
    if p[0] == 0:
        raise InputError("p_0 must be positive (normalization is singular)")
    xi = []
    for k in range(half + 1):
        acc = sum(akj(n, k, j) * xi[j] for j in range(k))
        diag = akj(n, k, k)
        value = (p[k] - acc) / diag if not exact else Fraction(p[k] - acc, diag)
        xi.append(value)
    return XiSolution(n, p, tuple(xi), exact)


def enumerate_matchings(n: int):
    """All sets of pairwise disjoint site pairs, the empty set included."""

    def rec(sites: tuple):
        if not sites:
            yield ()
            return
        first, rest = sites[0], sites[1:]
        for matching in rec(rest):  # first stays single
            yield matching
        for i, partner in enumerate(rest):
            reduced = rest[:i] + rest[i + 1 :]
            for matching in rec(reduced):
                yield ((first, partner), *matching)

    return rec(tuple(range(n)))


def matching_base(n: int, xi) -> RcrBase:
    """Base over {0,1}^n supported on opposite-value matchings.

    A matching with j pairs gets weight xi_j; zero-weight sizes are dropped.
    Active pairs allow exactly (0,1) and (1,0), so compatibility with a
    configuration and with its sitewise complement coincide.
    """
    xi = tuple(xi)
    if len(xi) != n // 2 + 1:
        raise InputError(f"need {n // 2 + 1} weights for n={n}")
    if any(v < 0 for v in xi):
        raise InputError("matching weights must be nonnegative")
    if not any(v > 0 for v in xi):
        raise InputError("matching weights are all zero")
    space = SpaceSpec(n, (0, 1))
    entries = []
    for matching in enumerate_matchings(n):
        w = xi[len(matching)]
        if w == 0:
            continue
        active = {pair: [(0, 1), (1, 0)] for pair in matching}
        entries.append((EtaConfig(space, active), w))
    return RcrBase(space, entries, matching_structure=True)


def count_matchings(n: int, omega, j: int) -> int:
    """Number of support matchings with j pairs compatible with omega.

    Counts by explicit enumeration: choose j of the minority-value sites and
    pair them injectively with majority-value sites.  Configurations with
    more ones than zeros are counted through their complement, with which
    every matching is equally compatible.
    """
    omega = tuple(omega)
    if len(omega) != n or any(v not in (0, 1) for v in omega):
        raise InputError("omega must be a 0/1 tuple of length n")
    if j < 0:
        raise InputError("j must be nonnegative")
    ones = [i for i, v in enumerate(omega) if v == 1]
    zeros = [i for i, v in enumerate(omega) if v == 0]
    if len(ones) > len(zeros):
        ones, zeros = zeros, ones
    if j > len(ones):
        return 0
    count = 0
    for chosen in combinations(ones, j):
        for _assignment in permutations(zeros, j):
            count += 1
    return count
