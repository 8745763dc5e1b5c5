"""Exact linear programming over the rationals.

A small two-phase simplex with Bland's anti-cycling rule.  All pivoting is
done on integer-scaled rows (each tableau row keeps an implicit positive
rational scale, which affects neither feasibility, nor sign tests, nor ratio
comparisons), so the hot loop works on Python ints instead of Fractions; the
reported optimum and certificate are reconstructed exactly as Fractions.

Problems are stated as:  minimize c . x  subject to  rows (=, >=, <=), x >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_MAX_PIVOTS = 200_000


@dataclass(frozen=True)
class SimplexResult:
    status: str
    value: Fraction | None
    x: tuple[Fraction, ...] | None


def _integerize(coeffs, rhs):
    """Scale a rational row by a positive integer so every entry is an int."""
    den = lcm(*(Fraction(v).denominator for v in list(coeffs) + [rhs])) if coeffs or rhs else 1
    out = [int(Fraction(v) * den) for v in coeffs]
    return out, int(Fraction(rhs) * den)


class LinearProgram:
    """Incrementally assembled LP; columns are indexed 0..n_vars-1."""

    def __init__(self, n_vars: int):
        if n_vars <= 0:
            raise ValueError("need at least one variable")
        self.n_vars = n_vars
        self._rows: list[tuple[list[int], int, str]] = []
        self._objective: list[Fraction] | None = None

    def _dense(self, coeffs) -> list[Fraction]:
        row = [Fraction(0)] * self.n_vars
        if isinstance(coeffs, dict):
            for j, v in coeffs.items():
                row[j] = Fraction(v)
        else:
            if len(coeffs) != self.n_vars:
                raise ValueError("coefficient vector has wrong length")
            for j, v in enumerate(coeffs):
                row[j] = Fraction(v)
        return row

    def minimize(self, coeffs) -> None:
        self._objective = self._dense(coeffs)

    def add_eq(self, coeffs, rhs=0) -> None:
        row, b = _integerize(self._dense(coeffs), Fraction(rhs))
        self._rows.append((row, b, "eq"))

    def add_ge(self, coeffs, rhs=0) -> None:
        row, b = _integerize(self._dense(coeffs), Fraction(rhs))
        self._rows.append((row, b, "ge"))

    def add_le(self, coeffs, rhs=0) -> None:
        row, b = _integerize(self._dense(coeffs), Fraction(rhs))
        self._rows.append(([-v for v in row], -b, "ge"))

    def solve(self) -> SimplexResult:
        if self._objective is None:
            raise ValueError("objective not set")
        return _solve(self.n_vars, self._rows, self._objective)


def _reduce_row(row: list[int]) -> None:
    g = 0
    for v in row:
        g = gcd(g, v)
        if g == 1:
            return
    if g > 1:
        for j, v in enumerate(row):
            row[j] = v // g


def _pivot(tableau, basis, obj, pr, pc):
    """Integer pivot keeping all row scales positive."""
    prow = tableau[pr]
    p = prow[pc]
    assert p > 0
    for i, row in enumerate(tableau):
        if i == pr or row[pc] == 0:
            continue
        f = row[pc]
        for j, v in enumerate(prow):
            row[j] = row[j] * p - f * v
        _reduce_row(row)
    if obj is not None and obj[pc] != 0:
        f = obj[pc]
        for j, v in enumerate(prow):
            obj[j] = obj[j] * p - f * v
        _reduce_row(obj)
    _reduce_row(prow)
    basis[pr] = pc


def _run_simplex(tableau, basis, obj, allowed, n_total):
    """Bland's rule inner loop; returns OPTIMAL or UNBOUNDED."""
    for _ in range(_MAX_PIVOTS):
        pc = -1
        for j in range(n_total):
            if allowed[j] and obj[j] < 0:
                pc = j
                break
        if pc < 0:
            return OPTIMAL
        pr = -1
        for i, row in enumerate(tableau):
            a = row[pc]
            if a <= 0:
                continue
            if pr < 0:
                pr = i
                continue
            # compare row i ratio against current best (cross-multiplied)
            better = row[-1] * tableau[pr][pc] - tableau[pr][-1] * a
            if better < 0 or (better == 0 and basis[i] < basis[pr]):
                pr = i
        if pr < 0:
            return UNBOUNDED
        _pivot(tableau, basis, obj, pr, pc)
    raise RuntimeError("simplex failed to terminate")  # pragma: no cover


def _solve(n_vars, rows, objective) -> SimplexResult:
    n_slack = sum(1 for _, _, kind in rows if kind == "ge")
    n_art = len(rows)
    n_total = n_vars + n_slack + n_art
    tableau: list[list[int]] = []
    basis: list[int] = []
    slack_at = n_vars
    art_at = n_vars + n_slack
    for coeffs, b, kind in rows:
        row = coeffs + [0] * (n_slack + n_art) + [b]
        if kind == "ge":
            row[slack_at] = -1
            slack_at += 1
        if row[-1] < 0:
            for j in range(len(row)):
                row[j] = -row[j]
        row[art_at] = 1
        tableau.append(row)
        basis.append(art_at)
        art_at += 1

    # ---- phase 1: drive the artificial variables to zero
    obj1 = [0] * n_total + [0]
    for j in range(n_vars + n_slack, n_total):
        obj1[j] = 1
    for i, row in enumerate(tableau):  # canonicalize over the artificial basis
        for j in range(len(obj1)):
            obj1[j] -= row[j]
    allowed = [True] * n_total
    status = _run_simplex(tableau, basis, obj1, allowed, n_total)
    assert status == OPTIMAL  # phase-1 objective is bounded below by 0
    infeas = Fraction(0)
    for i, row in enumerate(tableau):
        if basis[i] >= n_vars + n_slack:
            infeas += Fraction(row[-1], row[basis[i]])
    if infeas > 0:
        return SimplexResult(INFEASIBLE, None, None)

    # Pivot leftover (zero-valued) artificials out of the basis when possible.
    for i in range(len(tableau)):
        if basis[i] >= n_vars + n_slack:
            pc = next(
                (j for j in range(n_vars + n_slack) if tableau[i][j] != 0), None
            )
            if pc is not None:
                if tableau[i][pc] < 0:
                    tableau[i] = [-v for v in tableau[i]]
                _pivot(tableau, basis, None, i, pc)

    # ---- phase 2: original objective, artificial columns barred
    for j in range(n_vars + n_slack, n_total):
        allowed[j] = False
    obj2_frac = list(objective) + [Fraction(0)] * (n_slack + n_art + 1)
    den = lcm(*(f.denominator for f in obj2_frac))
    obj2 = [int(f * den) for f in obj2_frac]
    for i, row in enumerate(tableau):
        if basis[i] < n_vars + n_slack and obj2[basis[i]] != 0:
            piv = row[basis[i]]
            f = obj2[basis[i]]
            # keep integer scaling: obj2 * piv - f * row  (piv > 0)
            for j in range(len(obj2)):
                obj2[j] = obj2[j] * piv - f * row[j]
            _reduce_row(obj2)
    status = _run_simplex(tableau, basis, obj2, allowed, n_total)
    if status == UNBOUNDED:
        return SimplexResult(UNBOUNDED, None, None)

    x = [Fraction(0)] * n_vars
    for i, row in enumerate(tableau):
        if basis[i] < n_vars:
            x[basis[i]] = Fraction(row[-1], row[basis[i]])
    value = sum((c * v for c, v in zip(objective, x)), Fraction(0))
    return SimplexResult(OPTIMAL, value, tuple(x))
