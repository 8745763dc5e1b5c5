"""Shannon-cone machinery for converse bounds.

Entropy vectors over the n = N + |T| scheme variables are indexed by subset
bitmasks (bit i = the i-th variable in canonical order: secrets level by
level, then shares).  The polyhedral outer bound is the elemental Shannon
cone intersected with the scheme-condition hyperplanes; exact-rational LPs
over that region produce lower bounds for the four ratio measures, and
feasibility LPs power the extension/truncation checks that relate a
structure to its sub-structures.

The ratio LPs are solved in symmetry-reduced coordinates: the constraint
set and every ratio objective are invariant under permuting shares and
permuting same-threshold secrets, so averaging an optimal point over that
group keeps it feasible and optimal — one variable per subset orbit
(per-level secret counts plus a share count) gives the same exact optimum
at a fraction of the size.  Truncation checks involve one distinguished
bound row that breaks the symmetry, so they run in full coordinates.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product

from mtss import simplex
from mtss.schemes import scheme_variables
from mtss.structure import SECURITIES, STRONG, WEAK, RatioKind, StructurePair, subset_of
from mtss.structure import SIGMA, SIGMA_AVG, TAU, TAU_AVG

CAP_LIMIT = 8


def variable_cap() -> int:
    """Current cap on cone variables (MTS_MAX_CONE_VARS, clamped to [2, 8])."""
    raw = os.environ.get("MTS_MAX_CONE_VARS")
    if raw is None:
        return CAP_LIMIT
    try:
        v = int(raw)
    except ValueError:
        raise ValueError("MTS_MAX_CONE_VARS must be an integer") from None
    return max(2, min(CAP_LIMIT, v))


def cone_variables(sp: StructurePair):
    """Canonical variable order shared with schemes: secrets, then shares."""
    return scheme_variables(sp)


def mask_of(sp: StructurePair, vs) -> int:
    pos = {v: i for i, v in enumerate(cone_variables(sp))}
    mask = 0
    for v in vs:
        mask |= 1 << pos[v]
    return mask


# --------------------------------------------------------------------------
# Rows and constraint systems


def _key_order(item):
    k = item[0]
    return (isinstance(k, str), k if isinstance(k, str) else int(k))


@dataclass(frozen=True)
class Row:
    """A sparse linear row over subset coordinates: coeffs . h (=|>=) rhs.

    Keys are subset bitmasks; LP-only rows may also use string keys naming
    auxiliary variables.
    """

    tag: str
    coeffs: tuple
    equality: bool
    rhs: Fraction = Fraction(0)

    @staticmethod
    def make(tag, coeffs: dict, equality: bool, rhs=0) -> "Row":
        kept = tuple(
            sorted(
                ((k, Fraction(c)) for k, c in coeffs.items() if c != 0),
                key=_key_order,
            )
        )
        return Row(tag, kept, equality, Fraction(rhs))

    def evaluate(self, vector) -> Fraction:
        return sum((c * vector[k] for k, c in self.coeffs), Fraction(0))

    def holds_at(self, vector) -> bool:
        v = self.evaluate(vector)
        return v == self.rhs if self.equality else v >= self.rhs


@dataclass(frozen=True)
class ConstraintSystem:
    n_vars: int
    rows: tuple[Row, ...]

    @property
    def equalities(self):
        return tuple(r for r in self.rows if r.equality)

    @property
    def inequalities(self):
        return tuple(r for r in self.rows if not r.equality)

    def __len__(self):
        return len(self.rows)

    def merged(self, other: "ConstraintSystem") -> "ConstraintSystem":
        if other.n_vars != self.n_vars:
            raise ValueError("mismatched variable counts")
        return ConstraintSystem(self.n_vars, self.rows + other.rows)

    def dump(self) -> str:
        lines = []
        for r in self.rows:
            terms = " ".join(f"{k}:{c}" for k, c in r.coeffs)
            sense = "=" if r.equality else ">="
            lines.append(f"{r.tag} {terms} {sense} {r.rhs}")
        return "\n".join(lines) + ("\n" if lines else "")


def satisfies(vector, system: ConstraintSystem) -> bool:
    """Whether an entropy vector meets every row of the system exactly."""
    return all(r.holds_at(vector) for r in system.rows)


# --------------------------------------------------------------------------
# Entropy vectors


@dataclass(frozen=True)
class EntropyVector:
    """A full rational point of the subset-entropy space (h of every
    nonempty subset; the empty set is implicitly 0)."""

    n_vars: int
    coords: dict
    sp: StructurePair | None = None

    def __post_init__(self):
        want = set(range(1, 1 << self.n_vars))
        if set(self.coords) != want:
            raise ValueError("coordinate count must be 2^n_vars - 1")
        object.__setattr__(
            self, "coords", {k: Fraction(v) for k, v in self.coords.items()}
        )

    def __getitem__(self, mask: int) -> Fraction:
        if mask == 0:
            return Fraction(0)
        return self.coords[mask]

    @staticmethod
    def from_profile(profile) -> "EntropyVector":
        scheme = profile.scheme
        order = scheme.variables()
        n = len(order)
        if n > variable_cap():
            raise ValueError("size cap exceeded")
        coords = {}
        for mask in range(1, 1 << n):
            vs = [order[i] for i in range(n) if mask >> i & 1]
            coords[mask] = Fraction(profile.rank(vs))
        return EntropyVector(n, coords, scheme.sp)

    def scale(self, c) -> "EntropyVector":
        c = Fraction(c)
        return EntropyVector(
            self.n_vars, {k: c * v for k, v in self.coords.items()}, self.sp
        )

    def __add__(self, other: "EntropyVector") -> "EntropyVector":
        if self.n_vars != other.n_vars or self.sp != other.sp:
            raise ValueError("mismatched entropy vectors")
        return EntropyVector(
            self.n_vars,
            {k: v + other.coords[k] for k, v in self.coords.items()},
            self.sp,
        )


# --------------------------------------------------------------------------
# Elemental inequalities and scheme-condition hyperplanes


def elemental_inequalities(n_vars: int) -> ConstraintSystem:
    """The reduced generating set of Shannon inequalities on n variables.

    One conditional-entropy row per variable and one conditional mutual
    information row per variable pair and conditioning subset:
    n + C(n,2) * 2^(n-2) rows in total.
    """
    if n_vars < 2:
        raise ValueError("need at least 2 variables")
    if n_vars > variable_cap():
        raise ValueError("n_vars over cap")
    omega = (1 << n_vars) - 1
    rows = []
    for i in range(n_vars):
        rows.append(
            Row.make("elemental", {omega: 1, omega ^ (1 << i): -1}, equality=False)
        )
    for i, j in combinations(range(n_vars), 2):
        bi, bj = 1 << i, 1 << j
        others = [b for b in range(n_vars) if b not in (i, j)]
        for r in range(len(others) + 1):
            for zbits in combinations(others, r):
                z = sum(1 << b for b in zbits)
                coeffs = {bi | z: Fraction(1), bj | z: Fraction(1)}
                coeffs[bi | bj | z] = coeffs.get(bi | bj | z, Fraction(0)) - 1
                if z:
                    coeffs[z] = coeffs.get(z, Fraction(0)) - 1
                rows.append(Row.make("elemental", coeffs, equality=False))
    return ConstraintSystem(n_vars, tuple(rows))


def _variable_masks(sp: StructurePair):
    """(secret mask by slot, share mask by index, share-set masks helper)."""
    order = cone_variables(sp)
    secret = {}
    share = {}
    for i, v in enumerate(order):
        if v.kind == "secret":
            secret[(v.level, v.index)] = 1 << i
        else:
            share[v.index] = 1 << i
    return secret, share


def system_constraints(sp: StructurePair, security: str) -> ConstraintSystem:
    """Equality hyperplanes a valid scheme's entropy vector must satisfy.

    C0: joint secret entropy splits into the sum (independence).
    C1: minimal qualified coalitions determine the decodable suffix.
    C2 (strong) / C3 (weak): maximal unqualified coalitions learn nothing.
    Larger qualified and smaller unqualified coalitions are implied within
    the Shannon cone by monotonicity/submodularity, so only the boundary
    sizes are generated; duplicate rows are dropped.
    """
    if security not in SECURITIES:
        raise ValueError(f"unknown security level {security!r}")
    n = sp.n_parties + sp.n_secrets
    if n > variable_cap():
        raise ValueError("size cap exceeded")
    secret, share = _variable_masks(sp)
    slots = sp.secret_slots()
    all_secrets = 0
    for m in secret.values():
        all_secrets |= m

    seen = {}

    def add(tag, coeffs):
        row = Row.make(tag, coeffs, equality=True)
        if row.coeffs and row.coeffs not in seen:
            seen[row.coeffs] = row

    c0 = {all_secrets: Fraction(1)}
    for m in secret.values():
        c0[m] = c0.get(m, Fraction(0)) - 1
    add("C0", c0)

    parties = range(1, sp.n_parties + 1)
    for k in range(1, sp.k_levels + 1):
        suffix = 0
        for (lvl, j), m in secret.items():
            if lvl >= k:
                suffix |= m
        for a_set in combinations(parties, sp.threshold(k)):
            pa = 0
            for i in a_set:
                pa |= share[i]
            add("C1", {suffix | pa: 1, pa: -1})

    if security == STRONG:
        for k in range(1, sp.k_levels + 1):
            prefix = 0
            for (lvl, j), m in secret.items():
                if lvl <= k:
                    prefix |= m
            for a_set in combinations(parties, sp.threshold(k) - 1):
                pa = 0
                for i in a_set:
                    pa |= share[i]
                add("C2", {prefix | pa: 1, pa: -1, prefix: -1})
    else:
        for lvl, j in slots:
            m = secret[(lvl, j)]
            for a_set in combinations(parties, sp.threshold(lvl) - 1):
                pa = 0
                for i in a_set:
                    pa |= share[i]
                add("C3", {m | pa: 1, pa: -1, m: -1})

    return ConstraintSystem(n, tuple(seen.values()))


# --------------------------------------------------------------------------
# Exact LP solving


@dataclass(frozen=True)
class LinearProgram:
    """Minimize a sparse objective over a constraint system.

    Objective and row keys are subset masks, plus optional named auxiliary
    variables (listed in `aux`).  All variables are nonnegative, which on
    the Shannon cone is implied rather than restrictive.
    """

    system: ConstraintSystem
    objective: dict
    aux: tuple[str, ...] = ()


def lp_solve(lp: LinearProgram):
    """Exact optimum and primal certificate, raising on infeasible/unbounded."""
    n_masks = (1 << lp.system.n_vars) - 1
    col = {name: n_masks + i for i, name in enumerate(lp.aux)}

    def column(key):
        if isinstance(key, str):
            if key not in col:
                raise ValueError(f"unknown auxiliary variable {key!r}")
            return col[key]
        if not 1 <= key <= n_masks:
            raise ValueError(f"subset mask {key} out of range")
        return key - 1

    prog = simplex.LinearProgram(n_masks + len(lp.aux))
    prog.minimize({column(k): c for k, c in lp.objective.items()})
    for row in lp.system.rows:
        coeffs = {column(k): c for k, c in row.coeffs}
        if row.equality:
            prog.add_eq(coeffs, row.rhs)
        else:
            prog.add_ge(coeffs, row.rhs)
    res = prog.solve()
    if res.status != simplex.OPTIMAL:
        raise ValueError(res.status)
    cert = {m: res.x[m - 1] for m in range(1, n_masks + 1)}
    for name, c in col.items():
        cert[name] = res.x[c]
    return res.value, cert


# --------------------------------------------------------------------------
# Ratio lower bounds (orbit-reduced)


def _orbit_index_builder(sp: StructurePair):
    """Map subset masks to orbit ids under share/same-level-secret symmetry."""
    order = cone_variables(sp)
    kk = sp.k_levels
    kind = []  # per bit: level number for secrets, 0 for shares
    for v in order:
        kind.append(v.level if v.kind == "secret" else 0)
    axes = [sp.count(k) + 1 for k in range(1, kk + 1)] + [sp.n_parties + 1]
    index = {}
    for i, combo in enumerate(product(*(range(a) for a in axes))):
        index[combo] = i

    def orbit_of(mask: int) -> int:
        counts = [0] * (kk + 1)
        b = 0
        while mask:
            if mask & 1:
                lvl = kind[b]
                counts[lvl - 1 if lvl else kk] += 1
            mask >>= 1
            b += 1
        return index[tuple(counts)]

    return orbit_of, index


def _project_rows(rows, orbit_of):
    seen = {}
    for row in rows:
        proj = {}
        for mask, c in row.coeffs:
            k = orbit_of(mask)
            proj[k] = proj.get(k, Fraction(0)) + c
        reduced = Row.make(row.tag, proj, row.equality, row.rhs)
        if reduced.coeffs:
            seen.setdefault((reduced.coeffs, reduced.equality, reduced.rhs), reduced)
    return list(seen.values())


def lower_bound_ratio(sp: StructurePair, kind: RatioKind) -> Fraction:
    """Exact LP lower bound for a ratio over the Shannon outer region.

    Normalizations: the min-normalized measures fix every per-secret
    entropy >= 1; the averaged measures fix the secret-entropy sum to the
    secret count.  The cone is scale-invariant, so both are without loss.
    """
    n = sp.n_parties + sp.n_secrets
    if n > variable_cap():
        raise ValueError("size cap exceeded")
    orbit_of, index = _orbit_index_builder(sp)
    base = list(elemental_inequalities(n).rows) + list(
        system_constraints(sp, kind.security).rows
    )
    rows = _project_rows(base, orbit_of)

    kk = sp.k_levels
    zeros = (0,) * kk

    def level_orbit(k):
        c = [0] * (kk + 1)
        c[k - 1] = 1
        return index[tuple(c)]

    one_share = index[zeros + (1,)]
    all_shares = index[zeros + (sp.n_parties,)]
    n_orbits = len(index)
    aux = n_orbits  # column for the max-share variable when needed

    prog = simplex.LinearProgram(n_orbits + (1 if kind.measure == SIGMA else 0))
    sum_secrets = {level_orbit(k): Fraction(sp.count(k)) for k in range(1, kk + 1)}

    if kind.measure == SIGMA:
        prog.minimize({aux: Fraction(1)})
        prog.add_ge({aux: Fraction(1), one_share: Fraction(-1)}, 0)
        for k in range(1, kk + 1):
            prog.add_ge({level_orbit(k): Fraction(1)}, 1)
    elif kind.measure == SIGMA_AVG:
        prog.minimize({one_share: Fraction(1)})
        prog.add_eq(sum_secrets, sp.n_secrets)
    elif kind.measure == TAU:
        obj = {all_shares: Fraction(1)}
        for k, c in sum_secrets.items():
            obj[k] = obj.get(k, Fraction(0)) - c
        prog.minimize(obj)
        for k in range(1, kk + 1):
            prog.add_ge({level_orbit(k): Fraction(1)}, 1)
    elif kind.measure == TAU_AVG:
        obj = {all_shares: Fraction(1)}
        for k, c in sum_secrets.items():
            obj[k] = obj.get(k, Fraction(0)) - c
        prog.minimize(obj)
        prog.add_eq(sum_secrets, sp.n_secrets)
    else:  # pragma: no cover - RatioKind validates measures
        raise ValueError(f"unknown measure {kind.measure!r}")

    for row in rows:
        coeffs = dict(row.coeffs)
        if row.equality:
            prog.add_eq(coeffs, row.rhs)
        else:
            prog.add_ge(coeffs, row.rhs)
    res = prog.solve()
    if res.status != simplex.OPTIMAL:  # pragma: no cover - region is nonempty
        raise RuntimeError(f"ratio LP came back {res.status}")
    return Fraction(res.value)


# --------------------------------------------------------------------------
# Extension and restriction (structure vs sub-structure)


def _slot_injection(small: StructurePair, big: StructurePair):
    """Map each small variable index to its big counterpart (threshold-matched
    levels, secrets by position, shares by index)."""
    small_order = cone_variables(small)
    big_order = cone_variables(big)
    big_pos = {v: i for i, v in enumerate(big_order)}
    level_of = {big.threshold(k): k for k in range(1, big.k_levels + 1)}
    mapping = []
    for v in small_order:
        if v.kind == "secret":
            target = v.__class__.secret(level_of[small.threshold(v.level)], v.index)
        else:
            target = v.__class__.share(v.index)
        mapping.append(big_pos[target])
    return mapping


def membership_system(sp: StructurePair, security: str) -> ConstraintSystem:
    """Shannon cone plus scheme conditions: the outer region for a structure."""
    n = sp.n_parties + sp.n_secrets
    return elemental_inequalities(n).merged(system_constraints(sp, security))


def extend_vector(
    x: EntropyVector, target: StructurePair, security: str = WEAK
) -> EntropyVector:
    """Lift a vector of a sub-structure to the full structure.

    Added secrets contribute nothing: the value at a subset is the value at
    the subset with added secrets removed.  The input must lie in the
    sub-structure's outer region; the output then lies in the target's.
    """
    small = x.sp
    if small is None:
        raise ValueError("vector carries no structure")
    if not subset_of(small, target):
        raise ValueError("subset relation fails")
    if target.n_parties + target.n_secrets > variable_cap():
        raise ValueError("size cap exceeded")
    if not satisfies(x, membership_system(small, security)):
        raise ValueError("x fails small-structure membership")
    mapping = _slot_injection(small, target)
    n_small = small.n_parties + small.n_secrets
    n_big = target.n_parties + target.n_secrets
    # bit of big -> bit of small (or None for an added secret)
    back = {mapping[i]: i for i in range(n_small)}
    coords = {}
    for big_mask in range(1, 1 << n_big):
        small_mask = 0
        m = big_mask
        b = 0
        while m:
            if m & 1 and b in back:
                small_mask |= 1 << back[b]
            m >>= 1
            b += 1
        coords[big_mask] = x[small_mask]
    return EntropyVector(n_big, coords, target)


def restrict_vector(x: EntropyVector, small: StructurePair) -> EntropyVector:
    """Project a vector onto a sub-structure's variables (inverse direction)."""
    if x.sp is None:
        raise ValueError("vector carries no structure")
    if not subset_of(small, x.sp):
        raise ValueError("subset relation fails")
    mapping = _slot_injection(small, x.sp)
    n_small = small.n_parties + small.n_secrets
    coords = {}
    for small_mask in range(1, 1 << n_small):
        big_mask = 0
        for i in range(n_small):
            if small_mask >> i & 1:
                big_mask |= 1 << mapping[i]
        coords[small_mask] = x[big_mask]
    return EntropyVector(n_small, coords, small)


# --------------------------------------------------------------------------
# Truncation check


@dataclass(frozen=True)
class ShareSecretBound:
    """A bound row alpha0*h_{P_all} + sum alpha_i h_{P_i} >= sum beta_j h_{S_j}."""

    alpha0: Fraction
    alpha: dict  # share index -> coefficient
    beta: dict  # secret slot (level, j) -> coefficient


def bound_row(sp: StructurePair, name: str, k: int = 1) -> ShareSecretBound:
    """Canonical instantiation (first secrets, first shares) of a named bound."""
    kk = sp.k_levels
    if not 1 <= k <= kk:
        raise ValueError("level out of range")
    t = {i: sp.threshold(i) for i in range(1, kk + 1)}
    if name == "dtb":
        return ShareSecretBound(
            Fraction(0), {1: Fraction(1)}, {(i, 1): Fraction(1) for i in range(1, kk + 1)}
        )
    if name == "tsdb":
        beta = {}
        for i in range(1, k):
            beta[(i, 1)] = Fraction(t[k])
        for i in range(k, kk + 1):
            for j in range(1, sp.count(i) + 1):
                beta[(i, j)] = Fraction(1)
        for i in range(k + 1, kk + 1):
            beta[(i, 1)] += t[k] - t[i]
        alpha = {i: Fraction(1) for i in range(1, t[k] + 1)}
        return ShareSecretBound(Fraction(0), alpha, beta)
    if name == "tvb":
        return ShareSecretBound(
            Fraction(1), {}, {(i, 1): Fraction(t[i]) for i in range(1, kk + 1)}
        )
    if name == "tsb":
        beta = {(i, 1): Fraction(t[i]) for i in range(1, k)}
        for i in range(k, kk + 1):
            for j in range(1, sp.count(i) + 1):
                beta[(i, j)] = Fraction(1)
        return ShareSecretBound(Fraction(1), {}, beta)
    raise ValueError(f"unknown bound {name!r}")


def _min_gap(bound: ShareSecretBound, sp: StructurePair, security: str) -> Fraction:
    """min(lhs - rhs) of the bound over the outer region, on the section
    h_Omega = 1 (scale-invariant, so the sign decides validity).

    Solved through the LP dual: one variable per elemental/condition row,
    one constraint per subset coordinate.  The primal has far more rows
    than columns, so the dual's small basis makes the exact simplex cheap;
    strong duality (the section is nonempty and the objective bounded)
    gives the same optimum.
    """
    secret, share = _variable_masks(sp)
    n = sp.n_parties + sp.n_secrets
    omega = (1 << n) - 1
    obj = {}

    def bump(mask, c):
        obj[mask] = obj.get(mask, Fraction(0)) + c

    if bound.alpha0:
        all_shares = 0
        for m in share.values():
            all_shares |= m
        bump(all_shares, bound.alpha0)
    for i, c in bound.alpha.items():
        bump(share[i], c)
    for slot, c in bound.beta.items():
        if slot not in secret:
            raise ValueError(f"bound references missing secret {slot}")
        bump(secret[slot], -c)

    # Primal: min obj.x over x >= 0, elemental rows A x >= 0, condition
    # rows E x = 0, and x_Omega = 1.  Dual: max z  subject to
    # sum_r y_r A_r + sum_s w_s E_s + z e_Omega <= obj, y >= 0, w/z free.
    ineqs = elemental_inequalities(n).rows
    eqs = system_constraints(sp, security).rows
    n_y = len(ineqs)
    n_w = len(eqs)
    # columns: y | w+ | w- | z+ | z-
    cols = n_y + 2 * n_w + 2
    prog = simplex.LinearProgram(cols)
    prog.minimize({cols - 2: Fraction(-1), cols - 1: Fraction(1)})
    by_mask = {m: {} for m in range(1, omega + 1)}
    for r_idx, row in enumerate(ineqs):
        for m, c in row.coeffs:
            by_mask[m][r_idx] = c
    for s_idx, row in enumerate(eqs):
        for m, c in row.coeffs:
            by_mask[m][n_y + 2 * s_idx] = c
            by_mask[m][n_y + 2 * s_idx + 1] = -c
    by_mask[omega][cols - 2] = Fraction(1)
    by_mask[omega][cols - 1] = Fraction(-1)
    for m in range(1, omega + 1):
        prog.add_le(by_mask[m], obj.get(m, Fraction(0)))
    res = prog.solve()
    if res.status != simplex.OPTIMAL:  # pragma: no cover - section nonempty
        raise RuntimeError(f"feasibility LP came back {res.status}")
    return -res.value


def check_truncation(
    bound: ShareSecretBound,
    small: StructurePair,
    big: StructurePair,
    security: str = WEAK,
) -> bool:
    """Whether dropping the removed secrets' terms keeps the bound valid.

    The bound must have nonnegative secret coefficients and be verified
    valid over the big structure's outer region first; the return value
    reports validity of the truncated row over the small structure's.
    """
    if any(c < 0 for c in bound.beta.values()):
        raise ValueError("negative secret coefficient")
    if not subset_of(small, big):
        raise ValueError("subset relation fails")
    if _min_gap(bound, big, security) < 0:
        raise ValueError("bound fails big-structure feasibility")
    level_of = {big.threshold(i): i for i in range(1, big.k_levels + 1)}
    keep = {}
    for i in range(1, small.k_levels + 1):
        keep[level_of[small.threshold(i)]] = (i, small.count(i))
    beta = {}
    for (lvl, j), c in bound.beta.items():
        if lvl in keep and j <= keep[lvl][1]:
            beta[(keep[lvl][0], j)] = c
    trunc = ShareSecretBound(bound.alpha0, dict(bound.alpha), beta)
    return _min_gap(trunc, small, security) >= 0
