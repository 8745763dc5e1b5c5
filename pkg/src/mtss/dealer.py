"""Operational side of a scheme: deal shares, reconstruct, and census.

Dealing samples a codeword uniformly from the affine set of row vectors
consistent with the requested secret values: a particular solution plus a
seeded uniform combination of the kernel basis.  Reconstruction solves for
any codeword matching a qualified coalition's shares and reads the suffix
secrets off it.  The census brute-forces the full codeword space of a tiny
scheme to compare statistical secrecy with the algebraic rank verdicts.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from mtss import field
from mtss.schemes import LinearScheme, VariableId

_MASK64 = (1 << 64) - 1
_BUNDLE_MAGIC = "mtss-bundle 1"
CENSUS_CAP = 10_000_000


def _splitmix64(seed: int):
    """The splitmix64 word stream; deterministic for a given seed."""
    x = seed & _MASK64
    while True:
        x = (x + 0x9E3779B97F4A7C15) & _MASK64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield (z ^ (z >> 31)) & _MASK64


def _field_elements(seed: int, q: int, count: int) -> list[int]:
    """count elements of F_q, rejection-free: multiply-and-shift on 64-bit
    words maps the stream uniformly onto 0..q-1."""
    out = []
    stream = _splitmix64(seed)
    for _ in range(count):
        out.append((next(stream) * q) >> 64)
    return out


def _check_vector(vals, width, q, what):
    vals = tuple(int(v) for v in vals)
    if len(vals) != width:
        raise ValueError(f"{what} length {len(vals)} does not match width {width}")
    for v in vals:
        if not 0 <= v < q:
            raise ValueError(f"{what} element out of field range")
    return vals


@dataclass(frozen=True)
class SecretAssignment:
    """Per-secret value vectors; zero-width secrets carry empty tuples."""

    values: dict  # VariableId -> tuple of field elements

    def __post_init__(self):
        fixed = {}
        for v, vec in self.values.items():
            if not (isinstance(v, VariableId) and v.kind == "secret"):
                raise ValueError(f"not a secret variable: {v}")
            fixed[v] = tuple(int(e) for e in vec)
        object.__setattr__(self, "values", fixed)

    def __getitem__(self, v: VariableId):
        return self.values[v]

    def __contains__(self, v):
        return v in self.values

    def __len__(self):
        return len(self.values)

    def items(self):
        return self.values.items()

    @staticmethod
    def for_scheme(scheme: LinearScheme, vectors) -> "SecretAssignment":
        """Build a complete assignment from vectors in canonical secret order."""
        svars = scheme.secret_variables()
        vectors = list(vectors)
        if len(vectors) != len(svars):
            raise ValueError(
                f"need {len(svars)} secret vectors, got {len(vectors)}"
            )
        out = {}
        for v, vec in zip(svars, vectors):
            out[v] = _check_vector(vec, scheme.width(v), scheme.q, str(v))
        return SecretAssignment(out)


@dataclass(frozen=True)
class ShareBundle:
    """Share vectors plus the fingerprint of the scheme that produced them."""

    fingerprint: str
    shares: dict  # VariableId -> tuple of field elements

    def __post_init__(self):
        fixed = {}
        for v, vec in self.shares.items():
            if not (isinstance(v, VariableId) and v.kind == "share"):
                raise ValueError(f"not a share variable: {v}")
            fixed[v] = tuple(int(e) for e in vec)
        object.__setattr__(self, "shares", fixed)

    def __getitem__(self, v: VariableId):
        return self.shares[v]

    def restrict(self, indices) -> "ShareBundle":
        """Keep only the shares of the given participant indices."""
        keep = set(indices)
        return ShareBundle(
            self.fingerprint,
            {v: vec for v, vec in self.shares.items() if v.index in keep},
        )

    def to_text(self) -> str:
        lines = [_BUNDLE_MAGIC, f"fingerprint {self.fingerprint}"]
        for v in sorted(self.shares):
            vec = self.shares[v]
            body = ",".join(str(e) for e in vec) if vec else "-"
            lines.append(f"P {v.index} {body}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str) -> "ShareBundle":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != _BUNDLE_MAGIC:
            raise ValueError("not a bundle file")
        if len(lines) < 2 or not lines[1].startswith("fingerprint "):
            raise ValueError("malformed bundle header")
        fingerprint = lines[1].split(" ", 1)[1].strip()
        shares = {}
        for ln in lines[2:]:
            parts = ln.split()
            if len(parts) != 3 or parts[0] != "P":
                raise ValueError(f"bad share line: {ln!r}")
            idx = int(parts[1])
            vec = () if parts[2] == "-" else tuple(
                int(e) for e in parts[2].split(",")
            )
            shares[VariableId.share(idx)] = vec
        return ShareBundle(fingerprint, shares)


def deal(scheme: LinearScheme, secrets: SecretAssignment, seed: int = 0) -> ShareBundle:
    """Sample a codeword with the given secret values and emit all shares."""
    svars = scheme.secret_variables()
    if set(secrets.values) != set(svars):
        raise ValueError("assignment must cover every secret exactly once")
    b = []
    for v in svars:
        b.extend(_check_vector(secrets[v], scheme.width(v), scheme.q, str(v)))
    vs = scheme.columns(svars)
    try:
        particular, basis = field.solve_affine(vs.a.T, b, scheme.q)
    except ValueError:  # pragma: no cover - blocked by full column rank
        raise AssertionError("no codeword") from None
    c = particular
    if len(basis):
        coeffs = np.array(
            _field_elements(seed, scheme.q, len(basis)), dtype=np.int64
        )
        c = (c + coeffs @ basis) % scheme.q
    shares = {}
    for v in scheme.share_variables():
        shares[v] = tuple(int(e) for e in (c @ scheme.block(v).a) % scheme.q)
    return ShareBundle(scheme.fingerprint, shares)


def reconstruct(scheme: LinearScheme, shares: ShareBundle, k: int = 1) -> SecretAssignment:
    """Recover the secrets of sub-arrays k..K from a qualified share set.

    Any codeword consistent with the provided shares determines those
    secrets, because the decodable condition puts their columns in the
    span of the coalition's columns.
    """
    if shares.fingerprint != scheme.fingerprint:
        raise ValueError("bundle fingerprint does not match scheme")
    if not 1 <= k <= scheme.sp.k_levels:
        raise ValueError("sub-array index out of range")
    avars = sorted(shares.shares)
    for v in avars:
        _check_vector(shares[v], scheme.width(v), scheme.q, str(v))
    if len(avars) < scheme.sp.threshold(k):
        raise ValueError("unqualified set")
    vals = []
    for v in avars:
        vals.extend(shares[v])
    va = scheme.columns(avars)
    try:
        x, _ = field.solve_affine(va.a.T, vals, scheme.q)
    except ValueError:
        raise ValueError("inconsistent shares") from None
    out = {}
    for v in scheme.secret_variables():
        if v.level >= k:
            out[v] = tuple(int(e) for e in (x @ scheme.block(v).a) % scheme.q)
    return SecretAssignment(out)


@dataclass(frozen=True)
class CensusTable:
    """Exhaustive joint counts of (coalition share values, target values)."""

    q: int
    target_width: int
    counts: dict  # a-values tuple -> {target-values tuple: count}

    def conditional(self, a_vals) -> dict:
        row = self.counts[tuple(a_vals)]
        total = sum(row.values())
        return {s: Fraction(c, total) for s, c in row.items()}

    @property
    def uniform(self) -> bool:
        """True when every conditional distribution of the target is flat
        over all q^width values."""
        want = self.q**self.target_width
        for row in self.counts.values():
            if len(row) != want or len(set(row.values())) != 1:
                return False
        return True


def leakage_census(scheme: LinearScheme, a_shares, target) -> CensusTable:
    """Enumerate every codeword and tabulate the target secrets against a
    coalition's share values.  target may be one secret variable or an
    iterable of them (joint census)."""
    targets = [target] if isinstance(target, VariableId) else list(target)
    a_list = sorted(a_shares)
    for v in a_list:
        if not (isinstance(v, VariableId) and v.kind == "share"):
            raise ValueError(f"not a share variable: {v}")
    for v in targets:
        if not (isinstance(v, VariableId) and v.kind == "secret"):
            raise ValueError(f"not a secret variable: {v}")
    n, q = scheme.n_rows, scheme.q
    if q**n > CENSUS_CAP:
        raise ValueError("scheme too large for census")
    va = scheme.columns(a_list).a
    vs = scheme.columns(targets).a
    wa, ws = va.shape[1], vs.shape[1]
    pow_a = q ** np.arange(wa - 1, -1, -1, dtype=np.int64) if wa else None
    pow_s = q ** np.arange(ws - 1, -1, -1, dtype=np.int64) if ws else None
    merged: dict[int, int] = {}
    total = q**n
    chunk = 1 << 16
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = np.empty((len(idx), n), dtype=np.int64)
        tmp = idx.copy()
        for r in range(n):
            digits[:, r] = tmp % q
            tmp //= q
        a_code = (digits @ va % q) @ pow_a if wa else np.zeros(len(idx), np.int64)
        s_code = (digits @ vs % q) @ pow_s if ws else np.zeros(len(idx), np.int64)
        combined = a_code * (q**ws) + s_code
        uniq, cnt = np.unique(combined, return_counts=True)
        for u, c in zip(uniq.tolist(), cnt.tolist()):
            merged[u] = merged.get(u, 0) + c

    def decode(code, width):
        out = []
        for _ in range(width):
            out.append(code % q)
            code //= q
        return tuple(reversed(out))

    counts: dict = {}
    base = q**ws
    for code, c in merged.items():
        a_vals = decode(code // base, wa)
        s_vals = decode(code % base, ws)
        counts.setdefault(a_vals, {})[s_vals] = c
    return CensusTable(q, ws, counts)
