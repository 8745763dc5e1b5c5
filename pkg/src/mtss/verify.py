"""Rank-based scheme verification, exact ratio measurement, and bound audits.

For a linear scheme the joint entropy of any set of variables equals the
joint column rank of their blocks (base-q units), so the secrecy and
decodability conditions, the four ratio measures, and every converse bound
audited here reduce to integer rank queries against one memoized profile.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, permutations, product
from math import prod

import numpy as np

from mtss import field
from mtss.schemes import LinearScheme, VariableId
from mtss.structure import SECURITIES, SIGMA, SIGMA_AVG, STRONG, TAU, TAU_AVG

DEFAULT_AUDIT_CAP = 10000


class RankProfile:
    """Memoized joint column ranks of a scheme's variable blocks.

    Doubles as the scheme's entropy vector: rank queries are monotone and
    submodular, with rk(empty) = 0.  The memo is guarded by a lock so audits
    may query one profile from several threads.
    """

    def __init__(self, scheme: LinearScheme):
        self.scheme = scheme
        order = scheme.variables()
        self._pos = {v: i for i, v in enumerate(order)}
        self._arrays = [scheme.block(v).a for v in order]
        self._memo: dict[int, int] = {0: 0}
        self._lock = threading.Lock()

    def rank(self, x) -> int:
        mask = 0
        for v in x:
            try:
                mask |= 1 << self._pos[v]
            except KeyError:
                raise KeyError(f"unknown variable {v}") from None
        return self._rank_mask(mask)

    def _rank_mask(self, mask: int) -> int:
        with self._lock:
            cached = self._memo.get(mask)
        if cached is not None:
            return cached
        picked = [
            a for i, a in enumerate(self._arrays) if mask >> i & 1 and a.shape[1]
        ]
        r = field.rank(np.hstack(picked), self.scheme.q) if picked else 0
        with self._lock:
            self._memo[mask] = r
        return r


def joint_rank(profile: RankProfile, x) -> int:
    """Joint rank (= joint entropy in base-q units) of the variables in x."""
    return profile.rank(x)


# --------------------------------------------------------------------------
# Condition checks


@dataclass(frozen=True)
class Witness:
    """A concrete failing instance of one verification condition."""

    condition: str
    shares: tuple[int, ...]
    secrets: tuple[VariableId, ...]
    got: int
    want: int

    def __str__(self):
        a = "{" + ", ".join(f"P[{i}]" for i in self.shares) + "}"
        s = "{" + ", ".join(str(v) for v in self.secrets) + "}"
        return (
            f"{self.condition} fails at shares {a}, secrets {s}: "
            f"rank {self.got}, expected {self.want}"
        )


@dataclass(frozen=True)
class ConditionResult:
    ok: bool
    checks: int
    witness: Witness | None = None


@dataclass(frozen=True)
class VerificationReport:
    security: str
    independence: ConditionResult
    decodable: ConditionResult
    secure: ConditionResult

    @property
    def passed(self) -> bool:
        return self.independence.ok and self.decodable.ok and self.secure.ok


def _party_sets(n, sizes):
    for size in sizes:
        yield from combinations(range(1, n + 1), size)


def check_conditions(
    scheme: LinearScheme, security: str, exhaustive: bool = False
) -> VerificationReport:
    """Check independence, decodability, and the chosen secrecy condition.

    Decodability is enumerated over every coalition of size >= t_k for every
    level k.  The secrecy condition is enumerated only over maximal
    unqualified coalitions (|A| = t_k - 1): for smaller A' subset of A, the
    leak I(S; P_A') is at most I(S; P_A) by submodularity of rank
    (rk(S|P_A') >= rk(S|P_A) while rk(S) is fixed), so zero leak at the
    maximal sets forces zero leak below.  `exhaustive=True` enumerates the
    smaller coalitions anyway.
    """
    if security not in SECURITIES:
        raise ValueError(f"unknown security level {security!r}")
    profile = RankProfile(scheme)
    sp = scheme.sp
    n = sp.n_parties
    shares = {i: VariableId.share(i) for i in range(1, n + 1)}

    secrets = scheme.secret_variables()
    want = sum(scheme.width(v) for v in secrets)
    got = profile.rank(secrets)
    independence = ConditionResult(
        got == want,
        1,
        None if got == want else Witness("independence", (), secrets, got, want),
    )

    def scan(condition, instances):
        checks = 0
        for sec_vars, a_set, extra in instances:
            checks += 1
            pa = [shares[i] for i in a_set]
            got = profile.rank(list(sec_vars) + pa)
            want = profile.rank(pa) + extra
            if got != want:
                w = Witness(condition, tuple(a_set), tuple(sec_vars), got, want)
                return ConditionResult(False, checks, w)
        return ConditionResult(True, checks, None)

    def decodable_instances():
        for k in range(1, sp.k_levels + 1):
            suffix = tuple(
                VariableId.secret(i, j)
                for i, j in sp.secret_slots()
                if i >= k
            )
            for a_set in _party_sets(n, range(sp.threshold(k), n + 1)):
                yield suffix, a_set, 0

    decodable = scan("decodable", decodable_instances())

    def secure_instances():
        if security == STRONG:
            for k in range(1, sp.k_levels + 1):
                prefix = tuple(
                    VariableId.secret(i, j)
                    for i, j in sp.secret_slots()
                    if i <= k
                )
                joint = profile.rank(prefix)
                top = sp.threshold(k) - 1
                sizes = range(top + 1) if exhaustive else [top]
                for a_set in _party_sets(n, sizes):
                    yield prefix, a_set, joint
        else:
            for i in range(1, sp.k_levels + 1):
                top = sp.threshold(i) - 1
                sizes = range(top + 1) if exhaustive else [top]
                for j in range(1, sp.count(i) + 1):
                    v = VariableId.secret(i, j)
                    for a_set in _party_sets(n, sizes):
                        yield (v,), a_set, scheme.width(v)

    secure = scan("secure", secure_instances())
    return VerificationReport(security, independence, decodable, secure)


def render_report(report: VerificationReport) -> str:
    lines = [f"security: {report.security}"]
    for name in ("independence", "decodable", "secure"):
        r = getattr(report, name)
        state = "pass" if r.ok else "FAIL"
        lines.append(f"{name}: {state} ({r.checks} checks)")
        if r.witness is not None:
            lines.append(f"  witness: {r.witness}")
    lines.append(f"overall: {'pass' if report.passed else 'FAIL'}")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# Ratios


def format_rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class RatioReport:
    sigma: Fraction | None
    sigma_avg: Fraction
    tau: Fraction | None
    tau_avg: Fraction
    secret_lengths: tuple[int, ...]
    share_lengths: tuple[int, ...]

    def value(self, measure: str) -> Fraction | None:
        table = {
            SIGMA: self.sigma,
            SIGMA_AVG: self.sigma_avg,
            TAU: self.tau,
            TAU_AVG: self.tau_avg,
        }
        try:
            return table[measure]
        except KeyError:
            raise ValueError(f"unknown measure {measure!r}") from None


def ratios(scheme: LinearScheme, strict: bool = True) -> RatioReport:
    """Exact share-size and randomness ratios of a scheme.

    With `strict` (the default) any width-0 secret is an error: a
    dummy-embedded scheme must be measured against the structure it was
    built for.  `strict=False` computes the two averaged measures anyway
    (dummies count as length 0 over all secret slots) and leaves the
    min-normalized ones as None; this is what lets the averaged optima,
    which are genuinely attained by dummy embeddings, be measured at all.
    """
    secret_lengths = tuple(scheme.width(v) for v in scheme.secret_variables())
    share_lengths = tuple(scheme.width(v) for v in scheme.share_variables())
    smallest = min(secret_lengths)
    total = sum(secret_lengths)
    if total == 0 or (strict and smallest == 0):
        raise ValueError("zero-length secret")
    profile = RankProfile(scheme)
    h_shares = profile.rank(scheme.share_variables())
    h_secrets = profile.rank(scheme.secret_variables())
    extra = h_shares - h_secrets
    n = scheme.sp.n_parties
    n_secrets = scheme.sp.n_secrets
    return RatioReport(
        sigma=Fraction(max(share_lengths), smallest) if smallest else None,
        sigma_avg=Fraction(sum(share_lengths) * n_secrets, n * total),
        tau=Fraction(extra, smallest) if smallest else None,
        tau_avg=Fraction(extra * n_secrets, total),
        secret_lengths=secret_lengths,
        share_lengths=share_lengths,
    )


# --------------------------------------------------------------------------
# Converse-bound audit


@dataclass(frozen=True)
class BoundCheck:
    """One evaluated instance of a converse bound: holds iff lhs <= rhs."""

    bound: str
    params: dict
    lhs: Fraction
    rhs: Fraction

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs

    @property
    def tight(self) -> bool:
        return self.lhs == self.rhs


def render_check(check: BoundCheck) -> str:
    parts = [check.bound]
    for key, val in check.params.items():
        parts.append(f"{key}={val}")
    parts.append(f"lhs={format_rational(check.lhs)}")
    parts.append(f"rhs={format_rational(check.rhs)}")
    parts.append("ok" if check.holds else "VIOLATED")
    if check.tight:
        parts.append("tight")
    return " ".join(parts)


def _share_tuples(n, size, full_sweep):
    if full_sweep:
        return permutations(range(1, n + 1), size)
    return combinations(range(1, n + 1), size)


def audit_bounds(
    scheme: LinearScheme,
    security: str,
    full_sweep: bool = False,
    cap: int = DEFAULT_AUDIT_CAP,
) -> list[BoundCheck]:
    """Evaluate every converse bound applicable at the given security level.

    Instantiations sweep the level choice k, one secret index per sub-array,
    and sorted share tuples; each bound family stops after `cap` instances
    (canonical, lexicographically-first instantiations always come first).
    `full_sweep=True` additionally enumerates permuted share tuples, which
    re-checks each bound under reordered parameters.

    A strong scheme is also weakly secure, so a strong audit includes every
    weak bound; two bound families are valid only under strong secrecy and
    are skipped from weak audits.
    """
    if security not in SECURITIES:
        raise ValueError(f"unknown security level {security!r}")
    if not check_conditions(scheme, security).passed:
        raise ValueError("precondition: scheme invalid")
    profile = RankProfile(scheme)
    sp = scheme.sp
    n = sp.n_parties
    kk = sp.k_levels
    w = {
        (i, j): scheme.width(VariableId.secret(i, j)) for i, j in sp.secret_slots()
    }
    hp = {i: scheme.width(VariableId.share(i)) for i in range(1, n + 1)}
    h_all_shares = profile.rank(scheme.share_variables())
    total_w = sum(w.values())

    def secret_size():
        for k in range(1, kk + 1):
            t = sp.threshold(k)
            if t >= n:
                continue
            for j in range(1, sp.count(k) + 1):
                for dset in _share_tuples(n, t + 1, full_sweep):
                    for a, b in combinations(dset, 2):
                        rest = [VariableId.share(i) for i in dset if i not in (a, b)]
                        pa = VariableId.share(a)
                        pb = VariableId.share(b)
                        rhs = (
                            profile.rank([pa] + rest)
                            + profile.rank([pb] + rest)
                            - profile.rank([pa, pb] + rest)
                            - profile.rank(rest)
                        )
                        yield {"k": k, "j": j, "shares": dset, "a": a, "b": b}, w[
                            k, j
                        ], rhs

    def share_sum():
        for i in range(1, n + 1):
            yield {"i": i}, total_w, hp[i]

    def dtb():
        for js in product(*(range(1, sp.count(k) + 1) for k in range(1, kk + 1))):
            lhs = sum(w[k, js[k - 1]] for k in range(1, kk + 1))
            for i in range(1, n + 1):
                yield {"j": js, "i": i}, lhs, hp[i]

    def tsdb():
        for k in range(1, kk + 1):
            t = sp.threshold(k)
            others = [i for i in range(1, kk + 1) if i != k]
            for picks in product(*(range(1, sp.count(i) + 1) for i in others)):
                ji = dict(zip(others, picks))
                lhs = (
                    t * sum(w[i, ji[i]] for i in range(1, k))
                    + sum(
                        w[i, j]
                        for i in range(k, kk + 1)
                        for j in range(1, sp.count(i) + 1)
                    )
                    + sum(
                        (t - sp.threshold(i)) * w[i, ji[i]]
                        for i in range(k + 1, kk + 1)
                    )
                )
                for dset in _share_tuples(n, t, full_sweep):
                    rhs = sum(hp[i] for i in dset)
                    yield {"k": k, "j": tuple(sorted(ji.items())), "shares": dset}, lhs, rhs

    def tpb():
        t_prod = prod(sp.threshold(k) for k in range(1, kk + 1))
        lhs = sum(
            (t_prod // sp.threshold(i))
            * sum(w[i, j] for j in range(1, sp.count(i) + 1))
            for i in range(1, kk + 1)
        )
        scale = t_prod // sp.threshold(1)
        for dset in _share_tuples(n, sp.threshold(1), full_sweep):
            yield {"shares": dset}, lhs, scale * sum(hp[i] for i in dset)

    def avg_share():
        a_max = max(min(sp.threshold(i), sp.count(i)) for i in range(1, kk + 1))
        yield {}, n * total_w, a_max * sum(hp.values())

    def strong_randomness():
        lhs = sum(sp.threshold(i) * wv for (i, _), wv in w.items())
        yield {}, lhs, h_all_shares

    def tvb():
        for js in product(*(range(1, sp.count(k) + 1) for k in range(1, kk + 1))):
            lhs = sum(sp.threshold(k) * w[k, js[k - 1]] for k in range(1, kk + 1))
            yield {"j": js}, lhs, h_all_shares

    def tsb():
        for k in range(1, kk + 1):
            below = list(range(1, k))
            for picks in product(*(range(1, sp.count(i) + 1) for i in below)):
                ji = dict(zip(below, picks))
                lhs = sum(sp.threshold(i) * w[i, ji[i]] for i in below) + sum(
                    w[i, j]
                    for i in range(k, kk + 1)
                    for j in range(1, sp.count(i) + 1)
                )
                yield {"k": k, "j": tuple(sorted(ji.items()))}, lhs, h_all_shares

    def extra_n3():
        if n != 3:
            return
        lvl3 = next(
            (
                i
                for i in range(1, kk + 1)
                if sp.threshold(i) == 3 and sp.count(i) >= 4
            ),
            None,
        )
        lvl2 = next(
            (
                i
                for i in range(1, kk + 1)
                if sp.threshold(i) == 2 and sp.count(i) >= 3
            ),
            None,
        )
        if lvl3 is None or lvl2 is None:
            return
        base = sum(w[lvl3, j] for j in range(1, 5)) + 2 * sum(
            w[lvl2, j] for j in range(1, 4)
        )
        all_three = sum(hp[i] for i in (1, 2, 3))
        for s in range(1, 5):
            for d in (1, 2, 3):
                yield {"s": s, "d": d}, w[lvl3, s] + base, all_three + hp[d]

    families = [
        # (id, generator, valid only under strong secrecy)
        ("secret-size", secret_size, False),
        ("share-sum", share_sum, True),
        ("dtb", dtb, False),
        ("tsdb", tsdb, False),
        ("tpb", tpb, False),
        ("avg-share", avg_share, False),
        ("strong-randomness", strong_randomness, True),
        ("tvb", tvb, False),
        ("tsb", tsb, False),
        ("extra-n3", extra_n3, False),
    ]
    out = []
    for name, gen, strong_only in families:
        if strong_only and security != STRONG:
            continue
        emitted = 0
        for params, lhs, rhs in gen():
            out.append(BoundCheck(name, params, Fraction(lhs), Fraction(rhs)))
            emitted += 1
            if emitted >= cap:
                break
    return out
