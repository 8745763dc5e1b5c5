"""Access structures: threshold families and their optimal ratios.

A structure fixes N participants and an ordered family of sub-arrays
(t_k, m_k): m_k secrets that become readable to any coalition of at least
t_k participants.  Thresholds strictly decrease (t_1 > t_2 > ... >= 2), so a
larger coalition learns a longer suffix of the family.  Coalitions below a
secret's threshold must learn nothing about it — "weak" secrecy protects each
secret separately, "strong" secrecy protects the joint collection of all
still-hidden secrets.

This module is pure combinatorics/arithmetic: parsing and validation, the
sub-structure order, the closed-form optimal share-size and randomness
ratios (where known), and the plan used to build a share-size-optimal scheme
under weak secrecy.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb, lcm

from .simplex import LinearProgram, OPTIMAL

STRONG = "strong"
WEAK = "weak"
SECURITIES = (STRONG, WEAK)

SIGMA = "sigma"  # max share length / min secret length
SIGMA_AVG = "sigma_avg"  # avg share length / avg secret length
TAU = "tau"  # (total randomness - total secret length) / min secret length
TAU_AVG = "tau_avg"  # same numerator / avg secret length
MEASURES = (SIGMA, SIGMA_AVG, TAU, TAU_AVG)


@dataclass(frozen=True)
class SubArray:
    """m secrets sharing one reconstruction threshold t."""

    threshold: int
    count: int

    def __post_init__(self):
        if self.threshold < 2:
            raise ValueError("threshold out of range: must be >= 2")
        if self.count < 1:
            raise ValueError("sub-array needs at least one secret")


@dataclass(frozen=True)
class StructurePair:
    """N participants plus the ordered family of threshold sub-arrays."""

    n_parties: int
    arrays: tuple[SubArray, ...]

    def __post_init__(self):
        if self.n_parties < 2:
            raise ValueError("N too small: need at least 2 participants")
        if not self.arrays:
            raise ValueError("empty structure")
        object.__setattr__(self, "arrays", tuple(self.arrays))
        ts = [a.threshold for a in self.arrays]
        if any(a >= b for a, b in zip(ts[1:], ts)):
            raise ValueError("thresholds must strictly decrease across sub-arrays")
        if ts[0] > self.n_parties:
            raise ValueError("threshold out of range: exceeds participant count")

    # -- shorthand ---------------------------------------------------------
    @property
    def n(self) -> int:
        return self.n_parties

    @property
    def k_levels(self) -> int:
        return len(self.arrays)

    @property
    def n_secrets(self) -> int:
        return sum(a.count for a in self.arrays)

    def threshold(self, k: int) -> int:
        """Threshold of sub-array k (1-based)."""
        return self.arrays[k - 1].threshold

    def count(self, k: int) -> int:
        """Number of secrets in sub-array k (1-based)."""
        return self.arrays[k - 1].count

    def secret_slots(self) -> list[tuple[int, int]]:
        """All (k, j) pairs in canonical order S_{1,1} .. S_{K,m_K}."""
        return [
            (k, j)
            for k in range(1, self.k_levels + 1)
            for j in range(1, self.count(k) + 1)
        ]

    def __str__(self):
        return f"(N={self.n_parties}, T={format_thresholds(self)})"


def structure(n_parties: int, arrays) -> StructurePair:
    """Build a StructurePair from [(t, m), ...] pairs."""
    return StructurePair(n_parties, tuple(SubArray(t, m) for t, m in arrays))


def parse_thresholds(n_parties: int, text: str) -> StructurePair:
    """Parse the flat threshold encoding, e.g. "3,3,2" -> [(3,2),(2,1)].

    The text lists one threshold per secret, non-increasing; equal runs merge
    into one sub-array.
    """
    try:
        values = [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as e:
        raise ValueError(f"bad threshold list {text!r}") from e
    if not values:
        raise ValueError("empty structure")
    if any(b > a for a, b in zip(values, values[1:])):
        raise ValueError("thresholds must be non-increasing")
    arrays = [(t, len(list(run))) for t, run in itertools.groupby(values)]
    return structure(n_parties, arrays)


def format_thresholds(sp: StructurePair) -> str:
    """Inverse of parse_thresholds: "3,3,2" style flat list."""
    return ",".join(
        str(a.threshold) for a in sp.arrays for _ in range(a.count)
    )


def subset_of(small: StructurePair, big: StructurePair) -> bool:
    """True when `small` keeps the same participants and drops only secrets.

    Every sub-array of `small` must appear in `big` with the same threshold
    and at least as many secrets.
    """
    if small.n_parties != big.n_parties:
        return False
    by_threshold = {a.threshold: a.count for a in big.arrays}
    return all(
        a.threshold in by_threshold and a.count <= by_threshold[a.threshold]
        for a in small.arrays
    )


def randomness_break_index(sp: StructurePair) -> int:
    """Largest prefix of sub-arrays that still forces extra randomness.

    Equals one less than the first sub-array holding more secrets than its
    threshold, or K when no sub-array does.
    """
    for k in range(1, sp.k_levels + 1):
        if sp.count(k) > sp.threshold(k):
            return k - 1
    return sp.k_levels


# --------------------------------------------------------------------------
# ratio kinds and optimal values


@dataclass(frozen=True)
class RatioKind:
    measure: str
    security: str

    def __post_init__(self):
        if self.measure not in MEASURES:
            raise ValueError(f"unknown measure {self.measure!r}")
        if self.security not in SECURITIES:
            raise ValueError(f"unknown security level {self.security!r}")

    def __str__(self):
        return f"{self.measure}/{self.security}"


EXACT = "exact"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class OptimalValue:
    """Either an exactly known optimum, or best known two-sided bounds."""

    status: str
    value: Fraction | None
    lower: Fraction
    upper: Fraction | None

    @staticmethod
    def exact(v) -> "OptimalValue":
        v = Fraction(v)
        return OptimalValue(EXACT, v, v, v)

    @staticmethod
    def unknown(lower, upper) -> "OptimalValue":
        lower, upper = Fraction(lower), Fraction(upper)
        if upper < lower:
            raise ValueError("bracket is empty")
        return OptimalValue(UNKNOWN, None, lower, upper)


def _overfull(sp):
    return [k for k in range(1, sp.k_levels + 1) if sp.count(k) > sp.threshold(k)]


def _weak_sigma_lower(sp: StructurePair) -> Fraction:
    """Best closed-form lower bound for sigma under weak secrecy.

    Combines: one secret of each threshold packed into a single share; the
    per-sub-array packing argument; and, for each level k, the refinement
    that charges the secrets below level k against t_k shares.
    """
    kk = sp.k_levels
    best = Fraction(kk)
    best = max(best, sum(Fraction(sp.count(i), sp.threshold(i)) for i in range(1, kk + 1)))
    for k in range(1, kk + 1):
        tk = sp.threshold(k)
        extra = sum(sp.count(i) - sp.threshold(i) for i in range(k + 1, kk + 1))
        best = max(best, kk - 1 + Fraction(sp.count(k), tk) + Fraction(extra, tk))
    return best


def optimal_ratio(sp: StructurePair, kind: RatioKind) -> OptimalValue:
    """Optimal ratio of `kind` for the structure, exactly when known.

    All four strong-secrecy measures and the weak average measures have
    closed forms for every structure.  Weak sigma is exact unless at least
    two sub-arrays are overfull (more secrets than their threshold) while
    another is strictly underfull; in that open case a bracket is returned:
    the closed-form converse below, the best constructive combination above.
    """
    kk = sp.k_levels
    total = sp.n_secrets
    if kind.security == STRONG:
        if kind.measure in (SIGMA, SIGMA_AVG):
            return OptimalValue.exact(total)
        if kind.measure == TAU:
            return OptimalValue.exact(
                sum(a.count * (a.threshold - 1) for a in sp.arrays)
            )
        return OptimalValue.exact(total * (sp.threshold(kk) - 1))

    if kind.measure == SIGMA_AVG:
        widest = max(min(a.threshold, a.count) for a in sp.arrays)
        return OptimalValue.exact(Fraction(total, widest))
    if kind.measure == TAU_AVG:
        slack = min(
            Fraction(a.threshold - a.count, a.count) for a in sp.arrays
        )
        return OptimalValue.exact(total * max(slack, Fraction(0)))
    if kind.measure == TAU:
        b = randomness_break_index(sp)
        return OptimalValue.exact(
            sum(sp.threshold(i) - sp.count(i) for i in range(1, b + 1))
        )

    # weak sigma
    over = _overfull(sp)
    if not over:
        return OptimalValue.exact(kk)
    if all(a.count >= a.threshold for a in sp.arrays):
        return OptimalValue.exact(
            sum(Fraction(a.count, a.threshold) for a in sp.arrays)
        )
    if len(over) == 1:
        k = over[0]
        tk = sp.threshold(k)
        extra = sum(sp.count(i) - sp.threshold(i) for i in range(k + 1, kk + 1))
        return OptimalValue.exact(
            max(Fraction(kk), kk - 1 + Fraction(sp.count(k) + extra, tk))
        )
    value, _ = weak_sigma_plan(sp)
    return OptimalValue.unknown(_weak_sigma_lower(sp), value)


# --------------------------------------------------------------------------
# construction plan for weak-secrecy sigma
#
# Build material per sub-array comes in three interchangeable pattern blocks;
# a linear program picks nonnegative multiplicities that equalise all secret
# lengths while minimising the (common) share length:
#
#   window(i)     one t_i-row Vandermonde block covering all m_i <= t_i
#                 secrets of sub-array i: +1 to each of its secrets, +1 to
#                 every share.
#   ensemble(i)   for an overfull sub-array (m_i > t_i): one copy of the
#                 t_i-row block for *each* t_i-subset of its secrets;
#                 +C(m_i-1, t_i-1) to each secret, +C(m_i, t_i) per share.
#   bridge(k, i)  a two-sub-array block pairing overfull k with strictly
#                 underfull i > k: +(t_i - m_i) to each level-k secret,
#                 +(m_k - t_k) to each level-i secret, and the sum of the
#                 two to every share.
#
# Every resolved closed form above is met exactly by the LP optimum; for the
# open bracket the LP value is the best constructive upper bound this
# package knows.


@dataclass(frozen=True)
class PlanPart:
    kind: str  # "window" | "ensemble" | "bridge"
    level: int  # sub-array index (for bridge: the overfull side k)
    other: int | None  # bridge only: the underfull side i
    multiplicity: int


def weak_sigma_plan(sp: StructurePair) -> tuple[Fraction, list[PlanPart]]:
    """(achievable sigma, integer-multiplicity part list) for weak secrecy."""
    kk = sp.k_levels
    over = _overfull(sp)
    under = [
        i for i in range(1, kk + 1) if sp.count(i) < sp.threshold(i)
    ]
    patterns: list[tuple[str, int, int | None, dict[int, int], int]] = []
    for i in range(1, kk + 1):
        if i in over:
            sec = comb(sp.count(i) - 1, sp.threshold(i) - 1)
            patterns.append(("ensemble", i, None, {i: sec}, comb(sp.count(i), sp.threshold(i))))
        else:
            patterns.append(("window", i, None, {i: 1}, 1))
    for k in over:
        for i in under:
            if i > k:
                gain_k = sp.threshold(i) - sp.count(i)
                gain_i = sp.count(k) - sp.threshold(k)
                patterns.append(("bridge", k, i, {k: gain_k, i: gain_i}, gain_k + gain_i))

    lp = LinearProgram(len(patterns))
    lp.minimize([p[4] for p in patterns])
    for level in range(1, kk + 1):
        lp.add_eq({j: p[3].get(level, 0) for j, p in enumerate(patterns)}, 1)
    res = lp.solve()
    if res.status != OPTIMAL:  # pragma: no cover - the windows alone are feasible
        raise RuntimeError(f"construction plan LP came back {res.status}")

    scale = lcm(*(x.denominator for x in res.x))
    parts = [
        PlanPart(p[0], p[1], p[2], int(x * scale))
        for p, x in zip(patterns, res.x)
        if x > 0
    ]
    return res.value, parts
