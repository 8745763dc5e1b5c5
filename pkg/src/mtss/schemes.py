"""Generator-matrix constructions for linear multiple-threshold schemes.

A scheme is a column-blocked matrix over F_q: one block per secret and one
per share.  Joint entropies of the induced uniform row-space distribution are
joint column ranks (in base-q units), so everything downstream — verification,
ratios, bound audits, the dealer — is plain linear algebra.

Builders here come in two flavours.  The Vandermonde-window family
(`build_single_threshold`, `build_weak_block`) is correct at any admissible
field order because every t columns of a distinct-element Vandermonde matrix
are independent.  The stitched families (`build_B`, `build_A`) interleave two
Vandermonde matrices and an identity block; their correctness needs the field
to be "large enough", which we settle constructively: start at the stated
lower bound and advance through primes until the weak-security verifier
passes (capped search).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np

from mtss import field
from mtss.field import MatrixFq
from mtss.structure import (
    SIGMA,
    SIGMA_AVG,
    STRONG,
    TAU_AVG,
    WEAK,
    RatioKind,
    StructurePair,
    format_thresholds,
    parse_thresholds,
    structure,
    subset_of,
    weak_sigma_plan,
)

SEARCH_CAP = 50

_MAGIC = "mtss-scheme 1"


class FieldSearchError(RuntimeError):
    """No admissible prime found within the search cap."""


@dataclass(frozen=True, order=True)
class VariableId:
    """A secret slot S[k][j] or a share slot P[i] (all indices 1-based)."""

    kind: str  # "secret" | "share"
    level: int  # sub-array index for secrets, 0 for shares
    index: int

    def __post_init__(self):
        if self.kind not in ("secret", "share"):
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.kind == "share" and self.level != 0:
            raise ValueError("share variables carry no level")
        if self.index < 1 or (self.kind == "secret" and self.level < 1):
            raise ValueError("variable indices are 1-based")

    @staticmethod
    def secret(level: int, index: int) -> "VariableId":
        return VariableId("secret", level, index)

    @staticmethod
    def share(index: int) -> "VariableId":
        return VariableId("share", 0, index)

    def __str__(self):
        if self.kind == "secret":
            return f"S[{self.level},{self.index}]"
        return f"P[{self.index}]"


def scheme_variables(sp: StructurePair) -> tuple[VariableId, ...]:
    """Canonical variable order: S[1,1] .. S[K,m_K], then P[1] .. P[N]."""
    secrets = [VariableId.secret(k, j) for k, j in sp.secret_slots()]
    shares = [VariableId.share(i) for i in range(1, sp.n_parties + 1)]
    return tuple(secrets + shares)


@dataclass(frozen=True, eq=False)
class LinearScheme:
    """An immutable column-blocked generator matrix for a structure.

    Invariants enforced at construction: every block lives over the same
    prime q with the same row count, blocks appear exactly once per variable
    in canonical order, and every nonempty block has full column rank (so a
    variable's entropy equals its width).  Width-0 secret blocks are legal
    and encode dummy secrets added by `embed`.

    `recipe` retains the generation parameters so `unify_field` can rebuild
    the scheme over a different prime; schemes read back from text lose it.
    `min_order` is the smallest field order the construction is known to
    work at (for searched families, the prime the search certified).
    """

    sp: StructurePair
    q: int
    n_rows: int
    blocks: tuple[tuple[VariableId, MatrixFq], ...]
    recipe: tuple | None = None
    min_order: int = 0

    def __post_init__(self):
        if not field.is_prime(self.q):
            raise ValueError(f"modulus {self.q} is not prime")
        object.__setattr__(self, "blocks", tuple((v, b) for v, b in self.blocks))
        expected = scheme_variables(self.sp)
        got = tuple(v for v, _ in self.blocks)
        if got != expected:
            raise ValueError("blocks must cover every variable in canonical order")
        for v, b in self.blocks:
            if b.q != self.q:
                raise ValueError(f"block {v} uses modulus {b.q}, scheme uses {self.q}")
            if b.n_rows != self.n_rows:
                raise ValueError(f"block {v} has {b.n_rows} rows, scheme has {self.n_rows}")
            if b.n_cols and b.rank() != b.n_cols:
                raise ValueError(f"block {v} has linearly dependent columns")
        if self.min_order == 0:
            object.__setattr__(self, "min_order", self.q)

    @cached_property
    def _by_var(self) -> dict[VariableId, MatrixFq]:
        return dict(self.blocks)

    def variables(self) -> tuple[VariableId, ...]:
        return tuple(v for v, _ in self.blocks)

    def secret_variables(self) -> tuple[VariableId, ...]:
        return tuple(v for v, _ in self.blocks if v.kind == "secret")

    def share_variables(self) -> tuple[VariableId, ...]:
        return tuple(v for v, _ in self.blocks if v.kind == "share")

    def block(self, v: VariableId) -> MatrixFq:
        try:
            return self._by_var[v]
        except KeyError:
            raise KeyError(f"unknown variable {v}") from None

    def width(self, v: VariableId) -> int:
        return self.block(v).n_cols

    def columns(self, vs) -> MatrixFq:
        """Horizontal stack of the blocks of `vs`, in canonical order."""
        wanted = set(vs)
        unknown = wanted - set(self._by_var)
        if unknown:
            raise KeyError(f"unknown variable {sorted(unknown)[0]}")
        picked = [b.a for v, b in self.blocks if v in wanted]
        if not picked:
            return field.zeros(self.n_rows, 0, self.q)
        return MatrixFq(self.q, np.hstack(picked))

    # -- serialization -----------------------------------------------------
    def to_text(self) -> str:
        lines = [
            _MAGIC,
            f"q {self.q}",
            f"rows {self.n_rows}",
            f"structure {self.sp.n_parties} {format_thresholds(self.sp)}",
        ]
        for v, b in self.blocks:
            cols = [",".join(str(int(x)) for x in b.a[:, c]) for c in range(b.n_cols)]
            if v.kind == "secret":
                head = f"S {v.level} {v.index}"
            else:
                head = f"P {v.index}"
            lines.append(" ".join([head] + cols))
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str) -> "LinearScheme":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != _MAGIC:
            raise ValueError("not a scheme file")
        fields = {}
        for ln in lines[1:4]:
            key, _, rest = ln.partition(" ")
            fields[key] = rest
        try:
            q = int(fields["q"])
            n_rows = int(fields["rows"])
            n_str, t_str = fields["structure"].split()
            sp = parse_thresholds(int(n_str), t_str)
        except (KeyError, ValueError) as e:
            raise ValueError(f"malformed scheme header: {e}") from e
        blocks = []
        for ln in lines[4:]:
            parts = ln.split()
            if parts[0] == "S":
                v = VariableId.secret(int(parts[1]), int(parts[2]))
                cols = parts[3:]
            elif parts[0] == "P":
                v = VariableId.share(int(parts[1]))
                cols = parts[2:]
            else:
                raise ValueError(f"bad variable line: {ln!r}")
            if cols:
                a = np.array([[int(x) for x in col.split(",")] for col in cols]).T
                if a.shape[0] != n_rows:
                    raise ValueError(f"column length mismatch on {v}")
                blocks.append((v, MatrixFq(q, a)))
            else:
                blocks.append((v, field.zeros(n_rows, 0, q)))
        return LinearScheme(sp=sp, q=q, n_rows=n_rows, blocks=tuple(blocks))

    @cached_property
    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()


# --------------------------------------------------------------------------
# Vandermonde windows


def vandermonde(t: int, elements, q: int) -> MatrixFq:
    """t x len(elements) matrix with entry (r, c) = elements[c]**r mod q."""
    if t < 1:
        raise ValueError("need at least one row")
    els = [int(e) for e in elements]
    if len(set(els)) != len(els):
        raise ValueError("duplicate elements")
    if any(e < 0 or e >= q for e in els):
        raise ValueError("element out of field range")
    base = np.asarray(els, dtype=np.int64)
    rows = np.empty((t, len(els)), dtype=np.int64)
    rows[0] = 1 % q
    for r in range(1, t):
        rows[r] = rows[r - 1] * base % q
    return MatrixFq(q, rows)


def _window_scheme(sp, q, t, n_secret_cols, recipe, min_order):
    """Scheme from V(t, [n_secret_cols + N]): first columns are secrets."""
    n = sp.n_parties
    v = vandermonde(t, range(1, n_secret_cols + n + 1), q)
    blocks = []
    for k, j in sp.secret_slots():
        col = (j - 1) if k == 1 and j <= n_secret_cols else None
        if col is not None:
            blocks.append((VariableId.secret(k, j), v.take_columns([col])))
        else:
            blocks.append((VariableId.secret(k, j), field.zeros(t, 0, q)))
    for i in range(1, n + 1):
        blocks.append((VariableId.share(i), v.take_columns([n_secret_cols + i - 1])))
    return LinearScheme(
        sp=sp, q=q, n_rows=t, blocks=tuple(blocks), recipe=recipe, min_order=min_order
    )


def build_single_threshold(t: int, n_parties: int, q: int | None = None) -> LinearScheme:
    """Classic one-secret threshold scheme from V(t, [N+1]).

    The secret is the all-ones column (element 1), the N shares are the
    columns of elements 2..N+1; any t of the N+1 columns are independent,
    which gives decodability at t shares and perfect secrecy below.
    """
    if not 2 <= t <= n_parties:
        raise ValueError("threshold must satisfy 2 <= t <= N")
    min_order = n_parties + 2
    q = _pick_prime(q, min_order)
    sp = structure(n_parties, [(t, 1)])
    return _window_scheme(sp, q, t, 1, ("single", t, n_parties), min_order)


def build_weak_block(n_parties: int, t: int, m: int, q: int | None = None) -> LinearScheme:
    """Single-threshold-value scheme for m secrets from V(t, [min(t,m)+N]).

    The first n = min(t, m) columns are width-1 secrets, the next N columns
    are the shares; when m > t the remaining secrets get width-0 blocks
    (only t secrets can be packed into one window of t rows).
    """
    if not 2 <= t <= n_parties:
        raise ValueError("threshold must satisfy 2 <= t <= N")
    if m < 1:
        raise ValueError("need at least one secret")
    n = min(t, m)
    min_order = n + n_parties + 1
    q = _pick_prime(q, min_order)
    sp = structure(n_parties, [(t, m)])
    return _window_scheme(sp, q, t, n, ("weak-block", n_parties, t, m), min_order)


def _pick_prime(q: int | None, min_order: int) -> int:
    if q is None:
        return field.next_prime_at_least(min_order)
    if not field.is_prime(q):
        raise ValueError(f"{q} is not prime")
    if q < min_order:
        raise ValueError(f"field order {q} below the admissible minimum {min_order}")
    return q


# --------------------------------------------------------------------------
# Stitched two-level and flattened one-level constructions


def _pad_below(a: np.ndarray, n_rows: int) -> np.ndarray:
    out = np.zeros((n_rows, a.shape[1]), dtype=np.int64)
    out[: a.shape[0]] = a
    return out


def _assemble_b(n_parties, t1, m1, t2, m2, q) -> LinearScheme:
    n_rows = m1 * t2 - t1 * m2
    w1 = t2 - m2  # width of each top-level secret
    w2 = m1 - t1  # width of each second-level secret
    big = vandermonde(n_rows, range(1, (m1 + n_parties) * w1 + 1), q).a
    small = vandermonde(w2 * t2, range(1, n_parties * w2 + 1), q).a
    blocks = []
    for j in range(1, m1 + 1):
        blocks.append(
            (VariableId.secret(1, j), MatrixFq(q, big[:, (j - 1) * w1 : j * w1]))
        )
    for j in range(1, m2 + 1):
        ident = np.zeros((n_rows, w2), dtype=np.int64)
        for c in range(w2):
            ident[(j - 1) * w2 + c, c] = 1
        blocks.append((VariableId.secret(2, j), MatrixFq(q, ident)))
    for i in range(1, n_parties + 1):
        g = m1 + i - 1
        left = big[:, g * w1 : (g + 1) * w1]
        tail = _pad_below(small[:, (i - 1) * w2 : i * w2], n_rows)
        blocks.append((VariableId.share(i), MatrixFq(q, np.hstack([left, tail]))))
    sp = structure(n_parties, [(t1, m1), (t2, m2)])
    return LinearScheme(
        sp=sp,
        q=q,
        n_rows=n_rows,
        blocks=tuple(blocks),
        recipe=("B", n_parties, t1, m1, t2, m2),
        min_order=q,
    )


def build_B(n_parties: int, t1m1, t2m2, q: int | None = None) -> LinearScheme:
    """Two-level scheme stitching an overfull level onto an underfull one.

    Requires m1 > t1 > t2 > m2.  Top-level secrets take width-(t2-m2) column
    groups of one tall Vandermonde matrix, second-level secrets are identity
    columns sitting over zeros, and each share combines a Vandermonde group
    with a padded column group of a second, short Vandermonde matrix.  The
    field order is settled by verified search (see module docstring).
    """
    t1, m1 = t1m1
    t2, m2 = t2m2
    if not (m1 > t1 > t2 > m2 >= 1):
        raise ValueError("need m1 > t1 > t2 > m2 >= 1")
    if t1 > n_parties:
        raise ValueError("threshold exceeds participant count")
    start = max((m1 + n_parties) * (t2 - m2), n_parties * (m1 - t1)) + 1
    return _searched_build(
        lambda p: _assemble_b(n_parties, t1, m1, t2, m2, p), start, q
    )


def _assemble_a(n_parties, t1, m1, a, q) -> LinearScheme:
    n_rows = a * m1
    w2 = m1 - t1
    wide = n_parties - t1 + a  # number of shares that get an appended part
    big = vandermonde(n_rows, range(1, a * (m1 + n_parties) + 1), q).a
    small = vandermonde(a * w2, range(1, wide * w2 + 1), q).a
    blocks = []
    for j in range(1, m1 + 1):
        blocks.append((VariableId.secret(1, j), MatrixFq(q, big[:, (j - 1) * a : j * a])))
    for i in range(1, n_parties + 1):
        g = m1 + i - 1
        left = big[:, g * a : (g + 1) * a]
        if i <= t1 - a:
            blocks.append((VariableId.share(i), MatrixFq(q, left)))
        else:
            gg = i - (t1 - a) - 1
            tail = _pad_below(small[:, gg * w2 : (gg + 1) * w2], n_rows)
            blocks.append((VariableId.share(i), MatrixFq(q, np.hstack([left, tail]))))
    sp = structure(n_parties, [(t1, m1)])
    return LinearScheme(
        sp=sp,
        q=q,
        n_rows=n_rows,
        blocks=tuple(blocks),
        recipe=("A", n_parties, t1, m1, a),
        min_order=q,
    )


def build_A(n_parties: int, t1m1, a: int, q: int | None = None) -> LinearScheme:
    """One-level scheme for m1 > t1 secrets with unequal share sizes.

    All m1 secrets get width a; the first t1-a shares have width a, the rest
    width m1-t1+a (a Vandermonde group plus a padded group of a second
    Vandermonde matrix).  With a=1 it spends no randomness beyond the
    secrets themselves, which is what makes it useful in randomness-optimal
    combinations.  Field order settled by verified search.
    """
    t1, m1 = t1m1
    if m1 <= t1:
        raise ValueError("need more secrets than the threshold (m1 > t1)")
    if not 1 <= a <= t1 - 1:
        raise ValueError("a out of range: need 1 <= a <= t1-1")
    if t1 > n_parties:
        raise ValueError("threshold exceeds participant count")
    start = max(a * (m1 + n_parties), (n_parties - t1 + a) * (m1 - t1)) + 1
    return _searched_build(lambda p: _assemble_a(n_parties, t1, m1, a, p), start, q)


def _searched_build(assemble, start: int, q: int | None) -> LinearScheme:
    """Run `assemble` at the given prime, or search upward from `start`.

    Each candidate is accepted only if the weak-security verifier passes;
    the construction families used here are proven to work once the field
    is large enough, so the search terminates in practice well within the
    cap.
    """
    from mtss import verify  # deferred; verify imports this module's types

    if q is not None:
        if not field.is_prime(q):
            raise ValueError(f"{q} is not prime")
        if q < start:
            raise ValueError(f"field order {q} below the admissible minimum {start}")
        scheme = assemble(q)
        if not verify.check_conditions(scheme, WEAK).passed:
            raise FieldSearchError(f"construction fails verification at q={q}")
        return scheme
    p = field.next_prime_at_least(start)
    tried = []
    for _ in range(SEARCH_CAP):
        scheme = assemble(p)
        if verify.check_conditions(scheme, WEAK).passed:
            return scheme
        tried.append(p)
        p = field.next_prime_at_least(p + 1)
    raise FieldSearchError(f"no admissible prime within {SEARCH_CAP} tries: {tried}")


# --------------------------------------------------------------------------
# Composition


def embed(scheme: LinearScheme, target: StructurePair, *, place=None) -> LinearScheme:
    """Re-label a scheme onto a larger structure, adding width-0 secrets.

    Secrets not covered by the source keep dummy (width-0) blocks; every
    rank condition of the target is inherited because a threshold level of
    the target either contains no real secrets (trivially secure/decodable)
    or reduces to a level the source already certifies at an equal or
    higher threshold.

    By default sub-arrays are matched by threshold and secrets keep their
    index; pass `place` ({(k, j) -> (k', j')}) to route source secrets onto
    specific target slots with equal thresholds.
    """
    if target.n_parties != scheme.sp.n_parties:
        raise ValueError("subset relation fails: participant counts differ")
    if place is None:
        if not subset_of(scheme.sp, target):
            raise ValueError("subset relation fails")
        level_of = {target.threshold(k): k for k in range(1, target.k_levels + 1)}
        place = {
            (k, j): (level_of[scheme.sp.threshold(k)], j)
            for k, j in scheme.sp.secret_slots()
        }
    else:
        place = dict(place)
        src_slots = set(map(tuple, scheme.sp.secret_slots()))
        dst_slots = set(map(tuple, target.secret_slots()))
        if set(place) != src_slots:
            raise ValueError("placement must cover every source secret exactly once")
        if len(set(place.values())) != len(place):
            raise ValueError("placement collides on a target slot")
        for (k, j), (kk, jj) in place.items():
            if (kk, jj) not in dst_slots:
                raise ValueError(f"target slot ({kk},{jj}) does not exist")
            if target.threshold(kk) != scheme.sp.threshold(k):
                raise ValueError("placement must preserve thresholds")
    inverse = {v: k for k, v in place.items()}
    blocks = []
    for kk, jj in target.secret_slots():
        src = inverse.get((kk, jj))
        if src is None:
            b = field.zeros(scheme.n_rows, 0, scheme.q)
        else:
            b = scheme.block(VariableId.secret(*src))
        blocks.append((VariableId.secret(kk, jj), b))
    for i in range(1, target.n_parties + 1):
        blocks.append((VariableId.share(i), scheme.block(VariableId.share(i))))
    recipe = None
    if scheme.recipe is not None:
        recipe = (
            "embed",
            scheme.recipe,
            _encode_sp(target),
            tuple(sorted(place.items())),
        )
    return LinearScheme(
        sp=target,
        q=scheme.q,
        n_rows=scheme.n_rows,
        blocks=tuple(blocks),
        recipe=recipe,
        min_order=scheme.min_order,
    )


def combine(parts) -> LinearScheme:
    """Independent combination: per-variable diagonal stacking of blocks.

    Row bands of different parts are disjoint, so every joint rank of the
    result is the sum of the parts' joint ranks — which is exactly why the
    combination inherits each rank condition its parts satisfy.
    """
    parts = list(parts)
    if not parts:
        raise ValueError("need at least one part")
    first = parts[0]
    if any(p.sp != first.sp for p in parts):
        raise ValueError("mismatched structure")
    if any(p.q != first.q for p in parts):
        raise ValueError("mismatched field")
    if len(parts) == 1:
        return first
    n_rows = sum(p.n_rows for p in parts)
    offsets = np.cumsum([0] + [p.n_rows for p in parts])
    blocks = []
    for v in scheme_variables(first.sp):
        width = sum(p.width(v) for p in parts)
        out = np.zeros((n_rows, width), dtype=np.int64)
        c = 0
        for p, r in zip(parts, offsets):
            b = p.block(v)
            out[r : r + p.n_rows, c : c + b.n_cols] = b.a
            c += b.n_cols
        blocks.append((v, MatrixFq(first.q, out)))
    recipes = [p.recipe for p in parts]
    recipe = ("combine", tuple(recipes)) if all(r is not None for r in recipes) else None
    return LinearScheme(
        sp=first.sp,
        q=first.q,
        n_rows=n_rows,
        blocks=tuple(blocks),
        recipe=recipe,
        min_order=max(p.min_order for p in parts),
    )


def _encode_sp(sp: StructurePair) -> tuple:
    return (sp.n_parties, tuple((a.threshold, a.count) for a in sp.arrays))


def _decode_sp(enc) -> StructurePair:
    return structure(enc[0], list(enc[1]))


def _rebuild(recipe, q: int) -> LinearScheme:
    name = recipe[0]
    if name == "single":
        return build_single_threshold(recipe[1], recipe[2], q=q)
    if name == "weak-block":
        return build_weak_block(recipe[1], recipe[2], recipe[3], q=q)
    if name == "B":
        return build_B(recipe[1], (recipe[2], recipe[3]), (recipe[4], recipe[5]), q=q)
    if name == "A":
        return build_A(recipe[1], (recipe[2], recipe[3]), recipe[4], q=q)
    if name == "embed":
        return embed(_rebuild(recipe[1], q), _decode_sp(recipe[2]), place=dict(recipe[3]))
    if name == "combine":
        return combine([_rebuild(r, q) for r in recipe[1]])
    raise ValueError(f"unknown recipe {name!r}")


def recipe_guarantee(recipe) -> str:
    """Security level a recipe's construction certifies (strong or weak)."""
    name = recipe[0]
    if name == "single":
        return STRONG
    if name == "embed":
        return recipe_guarantee(recipe[1])
    if name == "combine":
        levels = {recipe_guarantee(r) for r in recipe[1]}
        return STRONG if levels == {STRONG} else WEAK
    return WEAK


def unify_field(parts) -> list[LinearScheme]:
    """Rebuild all parts over one common prime and re-verify each.

    The candidate order starts at the largest minimum admissible order of
    any part; searched families may still reject a candidate (they verify
    at exact q), so the candidate advances through primes under a cap.
    """
    from mtss import verify

    parts = list(parts)
    if not parts:
        raise ValueError("need at least one part")
    if any(p.recipe is None for p in parts):
        raise ValueError("parts are not rebuildable (no retained parameters)")
    p = field.next_prime_at_least(max(part.min_order for part in parts))
    for _ in range(SEARCH_CAP):
        try:
            rebuilt = [_rebuild(part.recipe, p) for part in parts]
        except FieldSearchError:
            rebuilt = None
        if rebuilt is not None and all(
            verify.check_conditions(s, recipe_guarantee(s.recipe)).passed
            for s in rebuilt
        ):
            return rebuilt
        p = field.next_prime_at_least(p + 1)
    raise FieldSearchError(f"no common prime within {SEARCH_CAP} tries")


# --------------------------------------------------------------------------
# Ratio-optimal recipes


def build_optimal(sp: StructurePair, kind: RatioKind) -> LinearScheme:
    """A scheme meeting the closed-form optimum of `kind` where resolved.

    For the one unresolved regime (weak sigma with several overfull
    sub-arrays and at least one underfull), the result is the best-known
    combination; its sigma equals the bracketing upper bound.
    """
    if kind.security == STRONG:
        parts = _strong_parts(sp, kind)
    else:
        parts = _weak_parts(sp, kind)
    parts = unify_field(parts)
    return combine(parts)


def _strong_parts(sp, kind):
    n = sp.n_parties
    if kind.measure == TAU_AVG:
        kk = sp.k_levels
        t_last = sp.threshold(kk)
        return [
            embed(build_single_threshold(t_last, n), sp, place={(1, 1): (kk, 1)})
        ]
    return [
        embed(build_single_threshold(sp.threshold(k), n), sp, place={(1, 1): (k, j)})
        for k, j in sp.secret_slots()
    ]


def _weak_parts(sp, kind):
    n = sp.n_parties
    if kind.measure == SIGMA:
        return _sigma_plan_parts(sp)
    if kind.measure == SIGMA_AVG:
        best = max(range(1, sp.k_levels + 1), key=lambda i: min(sp.threshold(i), sp.count(i)))
        return [embed(build_weak_block(n, sp.threshold(best), sp.count(best)), sp)]
    if kind.measure == TAU_AVG:
        packed = [i for i in range(1, sp.k_levels + 1) if sp.count(i) >= sp.threshold(i)]
        if packed:
            return [_zero_randomness_part(sp, packed[0])]
        best = min(
            range(1, sp.k_levels + 1),
            key=lambda i: (sp.threshold(i) - sp.count(i)) / sp.count(i),
        )
        return [embed(build_weak_block(n, sp.threshold(best), sp.count(best)), sp)]
    # TAU: windows above the break, then zero-extra-randomness parts below.
    first_over = next(
        (i for i in range(1, sp.k_levels + 1) if sp.count(i) > sp.threshold(i)), None
    )
    if first_over is None:
        return [
            embed(build_weak_block(n, sp.threshold(i), sp.count(i)), sp)
            for i in range(1, sp.k_levels + 1)
        ]
    parts = [
        embed(build_weak_block(n, sp.threshold(i), sp.count(i)), sp)
        for i in range(1, first_over)
    ]
    parts.append(_zero_randomness_part(sp, first_over))
    for i in range(first_over + 1, sp.k_levels + 1):
        t_i, m_i = sp.threshold(i), sp.count(i)
        if m_i < t_i:
            tk, mk = sp.threshold(first_over), sp.count(first_over)
            parts.append(embed(build_B(n, (tk, mk), (t_i, m_i)), sp))
        else:
            parts.append(_zero_randomness_part(sp, i))
    return parts


def _zero_randomness_part(sp, i):
    """A part covering sub-array i whose shares carry no extra randomness."""
    n = sp.n_parties
    t_i, m_i = sp.threshold(i), sp.count(i)
    if m_i > t_i:
        return embed(build_A(n, (t_i, m_i), 1), sp)
    return embed(build_weak_block(n, t_i, m_i), sp)


def _sigma_plan_parts(sp):
    n = sp.n_parties
    _, plan = weak_sigma_plan(sp)
    parts = []
    for part in plan:
        if part.kind == "window":
            t_i, m_i = sp.threshold(part.level), sp.count(part.level)
            base = [embed(build_weak_block(n, t_i, m_i), sp)]
        elif part.kind == "ensemble":
            t_i, m_i = sp.threshold(part.level), sp.count(part.level)
            base = []
            for chosen in combinations(range(1, m_i + 1), t_i):
                place = {
                    (1, r): (part.level, j) for r, j in enumerate(chosen, start=1)
                }
                base.append(embed(build_weak_block(n, t_i, t_i), sp, place=place))
        else:  # bridge
            tk, mk = sp.threshold(part.level), sp.count(part.level)
            ti, mi = sp.threshold(part.other), sp.count(part.other)
            base = [embed(build_B(n, (tk, mk), (ti, mi)), sp)]
        parts.extend(base * part.multiplicity)
    return parts
