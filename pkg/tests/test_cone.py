from fractions import Fraction as F

import pytest

from mtss import cone
from mtss.cone import (
    ConstraintSystem,
    EntropyVector,
    LinearProgram,
    Row,
    ShareSecretBound,
    bound_row,
    check_truncation,
    cone_variables,
    elemental_inequalities,
    extend_vector,
    lower_bound_ratio,
    lp_solve,
    mask_of,
    membership_system,
    restrict_vector,
    satisfies,
    system_constraints,
)
from mtss.schemes import build_optimal, build_single_threshold, build_weak_block
from mtss.structure import (
    EXACT,
    SIGMA,
    SIGMA_AVG,
    STRONG,
    TAU,
    TAU_AVG,
    WEAK,
    RatioKind,
    optimal_ratio,
    structure,
)
from mtss.verify import RankProfile, check_conditions, ratios


def _tag_counts(cs):
    out = {}
    for r in cs.rows:
        out[r.tag] = out.get(r.tag, 0) + 1
    return out


# ------------------------------------------------------------------ elemental

@pytest.mark.parametrize("n,count", [(2, 3), (3, 9), (4, 28), (5, 85), (7, 679)])
def test_elemental_count(n, count):
    cs = elemental_inequalities(n)
    assert len(cs) == count
    assert all(r.tag == "elemental" and not r.equality and r.rhs == 0 for r in cs.rows)


def test_elemental_distinct_rows():
    cs = elemental_inequalities(5)
    assert len({r.coeffs for r in cs.rows}) == len(cs)


def test_elemental_bounds():
    with pytest.raises(ValueError, match="at least 2"):
        elemental_inequalities(1)
    with pytest.raises(ValueError, match="over cap"):
        elemental_inequalities(9)


def test_cap_env_override(monkeypatch):
    monkeypatch.setenv("MTS_MAX_CONE_VARS", "4")
    elemental_inequalities(4)
    with pytest.raises(ValueError, match="over cap"):
        elemental_inequalities(5)
    monkeypatch.setenv("MTS_MAX_CONE_VARS", "99")
    assert cone.variable_cap() == 8
    monkeypatch.setenv("MTS_MAX_CONE_VARS", "banana")
    with pytest.raises(ValueError, match="integer"):
        cone.variable_cap()


def test_rank_profiles_satisfy_elemental():
    """Joint ranks are polymatroidal, so every elemental row holds on a lift."""
    schemes = [
        build_weak_block(3, 2, 2),
        build_optimal(structure(4, [(3, 1), (2, 1)]), RatioKind(SIGMA, STRONG)),
    ]
    for sch in schemes:
        x = EntropyVector.from_profile(RankProfile(sch))
        assert satisfies(x, elemental_inequalities(x.n_vars))


# ---------------------------------------------------------- system rows

def test_system_rows_weak_322():
    sp = structure(3, [(2, 2)])
    cs = system_constraints(sp, WEAK)
    assert _tag_counts(cs) == {"C0": 1, "C1": 3, "C3": 6}
    assert all(r.equality and r.rhs == 0 for r in cs.rows)


def test_system_rows_strong_vs_weak():
    sp = structure(3, [(3, 1), (2, 1)])
    strong = system_constraints(sp, STRONG)
    weak = system_constraints(sp, WEAK)
    c1s = {r.coeffs for r in strong.rows if r.tag == "C1"}
    c1w = {r.coeffs for r in weak.rows if r.tag == "C1"}
    assert c1s == c1w
    assert _tag_counts(strong) == {"C0": 1, "C1": 4, "C2": 6}
    assert _tag_counts(weak) == {"C0": 1, "C1": 4, "C3": 6}
    assert {r.coeffs for r in strong.rows if r.tag == "C2"} != {
        r.coeffs for r in weak.rows if r.tag == "C3"
    }


def test_system_rows_single_secret_drops_trivial_c0():
    cs = system_constraints(structure(2, [(2, 1)]), WEAK)
    assert _tag_counts(cs) == {"C1": 1, "C3": 2}


def test_system_rows_deduplicated():
    for sp in [structure(3, [(3, 2), (2, 2)]), structure(4, [(2, 3)])]:
        for sec in (STRONG, WEAK):
            cs = system_constraints(sp, sec)
            assert len({r.coeffs for r in cs.rows}) == len(cs)


def test_system_rows_validation():
    with pytest.raises(ValueError, match="unknown security"):
        system_constraints(structure(2, [(2, 1)]), "loose")
    with pytest.raises(ValueError, match="size cap"):
        system_constraints(structure(6, [(2, 3)]), WEAK)


def test_verified_profiles_satisfy_system_rows():
    cases = [
        (build_weak_block(3, 2, 3), WEAK),
        (build_weak_block(4, 3, 2), WEAK),
        (build_optimal(structure(4, [(3, 1), (2, 1)]), RatioKind(SIGMA, STRONG)), STRONG),
    ]
    for sch, sec in cases:
        assert check_conditions(sch, sec).passed
        x = EntropyVector.from_profile(RankProfile(sch))
        assert satisfies(x, system_constraints(sch.sp, sec))


# ------------------------------------------------------------------ lp_solve

def test_lp_solve_toy_minimum():
    cs = ConstraintSystem(2, (Row.make("norm", {1: 1}, False, 1),))
    value, cert = lp_solve(LinearProgram(cs, {1: F(1)}))
    assert value == 1 and cert[1] == 1 and cert[2] == 0 and cert[3] == 0


def test_lp_solve_infeasible_and_unbounded():
    cs = ConstraintSystem(
        2,
        (
            Row.make("a", {1: 1}, False, 1),
            Row.make("b", {1: -1}, False, 0),
        ),
    )
    with pytest.raises(ValueError, match="infeasible"):
        lp_solve(LinearProgram(cs, {1: F(1)}))
    with pytest.raises(ValueError, match="unbounded"):
        lp_solve(LinearProgram(ConstraintSystem(2, ()), {1: F(-1)}))


def test_lp_solve_key_validation():
    cs = ConstraintSystem(2, ())
    with pytest.raises(ValueError, match="auxiliary"):
        lp_solve(LinearProgram(cs, {"z": F(1)}))
    with pytest.raises(ValueError, match="out of range"):
        lp_solve(LinearProgram(cs, {9: F(1)}))


def _sigma_program(sp, security):
    """Full-coordinate sigma LP: min z with z over shares, secrets >= 1."""
    n = sp.n_parties + sp.n_secrets
    order = cone_variables(sp)
    rows = list(membership_system(sp, security).rows)
    for v in order:
        m = mask_of(sp, [v])
        if v.kind == "share":
            rows.append(Row.make("link", {"z": F(1), m: F(-1)}, False, 0))
        else:
            rows.append(Row.make("norm", {m: F(1)}, False, 1))
    return LinearProgram(ConstraintSystem(n, tuple(rows)), {"z": F(1)}, aux=("z",))


def test_lp_solve_sigma_example_and_certificate():
    sp = structure(2, [(2, 1)])
    lp = _sigma_program(sp, WEAK)
    value, cert = lp_solve(lp)
    assert value == 1
    for row in lp.system.rows:
        assert row.holds_at(cert)


# ------------------------------------------------------- lower_bound_ratio

def test_lower_bound_frozen_examples():
    assert lower_bound_ratio(structure(3, [(2, 3)]), RatioKind(SIGMA, WEAK)) == F(3, 2)
    assert lower_bound_ratio(structure(3, [(2, 2)]), RatioKind(SIGMA_AVG, WEAK)) == 1
    assert lower_bound_ratio(structure(3, [(2, 1)]), RatioKind(TAU, STRONG)) == 1


SAMPLE_CELLS = [
    structure(2, [(2, 3)]),
    structure(3, [(3, 2)]),
    structure(3, [(2, 4)]),
    structure(3, [(3, 2), (2, 1)]),
    structure(4, [(4, 1), (2, 2)]),
    structure(4, [(3, 2), (2, 1)]),
    structure(4, [(4, 1), (3, 1), (2, 1)]),
]


@pytest.mark.parametrize("sp", SAMPLE_CELLS, ids=lambda sp: str(sp))
def test_lower_bound_matches_closed_forms(sp):
    for sec in (STRONG, WEAK):
        for meas in (SIGMA, SIGMA_AVG, TAU, TAU_AVG):
            kind = RatioKind(meas, sec)
            opt = optimal_ratio(sp, kind)
            if opt.status == EXACT:
                assert lower_bound_ratio(sp, kind) == opt.value, kind


def test_lower_bound_never_exceeds_achieved_ratio():
    for sp in [structure(3, [(2, 3)]), structure(3, [(3, 1), (2, 1)])]:
        for sec in (STRONG, WEAK):
            for meas in (SIGMA, SIGMA_AVG):
                kind = RatioKind(meas, sec)
                sch = build_optimal(sp, kind)
                achieved = ratios(sch, strict=False).value(meas)
                if achieved is not None:
                    assert lower_bound_ratio(sp, kind) <= achieved


def test_lower_bound_agrees_with_full_lp():
    """Orbit reduction and minimal-coalition rows change nothing: the
    symmetric full-coordinate LP gives the same optimum."""
    sp = structure(3, [(2, 2)])
    full, _ = lp_solve(_sigma_program(sp, WEAK))
    assert full == lower_bound_ratio(sp, RatioKind(SIGMA, WEAK))


def test_dropped_coalition_rows_change_nothing():
    """Adding the implied non-minimal qualified rows leaves optima alone."""
    sp = structure(3, [(2, 1)])
    kind = RatioKind(TAU, STRONG)
    n = sp.n_parties + sp.n_secrets
    order = cone_variables(sp)
    secret = mask_of(sp, [order[0]])
    shares = [mask_of(sp, [v]) for v in order if v.kind == "share"]
    all_shares = mask_of(sp, [v for v in order if v.kind == "share"])
    rows = list(membership_system(sp, STRONG).rows)
    rows.append(Row.make("norm", {secret: F(1)}, False, 1))
    base = LinearProgram(
        ConstraintSystem(n, tuple(rows)), {all_shares: F(1), secret: F(-1)}
    )
    value, _ = lp_solve(base)
    # now append the size-3 qualified coalition explicitly
    extra = rows + [
        Row.make("C1", {secret | all_shares: F(1), all_shares: F(-1)}, True, 0)
    ]
    value2, _ = lp_solve(
        LinearProgram(
            ConstraintSystem(n, tuple(extra)), {all_shares: F(1), secret: F(-1)}
        )
    )
    assert value == value2 == lower_bound_ratio(sp, kind) == 1


def test_lower_bound_cap():
    with pytest.raises(ValueError, match="size cap"):
        lower_bound_ratio(structure(6, [(2, 4)]), RatioKind(SIGMA, WEAK))


# ------------------------------------------------------------ entropy vectors

def test_entropy_vector_validation():
    with pytest.raises(ValueError, match="coordinate count"):
        EntropyVector(2, {1: F(1)})
    x = EntropyVector(2, {1: 1, 2: 1, 3: 2})
    assert x[0] == 0 and x[3] == 2 and isinstance(x[1], F)


def test_entropy_vector_arithmetic():
    sp = structure(2, [(2, 1)])
    sch = build_single_threshold(2, 2)
    x = EntropyVector.from_profile(RankProfile(sch))
    y = x.scale(F(1, 2)) + x.scale(F(1, 2))
    assert y.coords == x.coords and y.sp == sp
    with pytest.raises(ValueError, match="mismatched"):
        x + EntropyVector(2, {1: 0, 2: 0, 3: 0})


def test_from_profile_respects_cap(monkeypatch):
    monkeypatch.setenv("MTS_MAX_CONE_VARS", "4")
    sch = build_weak_block(3, 2, 2)  # five variables
    with pytest.raises(ValueError, match="size cap"):
        EntropyVector.from_profile(RankProfile(sch))


# ------------------------------------------------------- extension/restriction

def test_extend_vector_membership_and_identity():
    sch = build_weak_block(3, 2, 2)
    x = EntropyVector.from_profile(RankProfile(sch))
    big = structure(3, [(2, 4)])
    X = extend_vector(x, big)
    assert X.sp == big
    assert satisfies(X, membership_system(big, WEAK))
    assert restrict_vector(X, sch.sp).coords == x.coords
    # added secrets contribute nothing anywhere
    added = mask_of(big, [v for v in cone_variables(big) if v.kind == "secret"][2:])
    omega = (1 << X.n_vars) - 1
    assert X[omega] == X[omega & ~added]


def test_extend_vector_strong_and_two_levels():
    sch = build_optimal(structure(3, [(3, 1), (2, 1)]), RatioKind(SIGMA, STRONG))
    x = EntropyVector.from_profile(RankProfile(sch))
    big = structure(3, [(3, 2), (2, 1)])
    X = extend_vector(x, big, STRONG)
    assert satisfies(X, membership_system(big, STRONG))
    assert restrict_vector(X, sch.sp).coords == x.coords


def test_extend_vector_is_linear_on_members():
    sch = build_weak_block(3, 2, 2)
    x = EntropyVector.from_profile(RankProfile(sch))
    y = x.scale(F(2, 3))  # the cone is closed under scaling
    big = structure(3, [(2, 3)])
    lhs = extend_vector(x.scale(F(1, 3)) + y.scale(F(1, 2)), big)
    rhs = extend_vector(x, big).scale(F(1, 3)) + extend_vector(y, big).scale(F(1, 2))
    assert lhs.coords == rhs.coords


def test_extend_vector_zero_point():
    sp = structure(2, [(2, 1)])
    zero = EntropyVector(3, {m: F(0) for m in range(1, 8)}, sp)
    X = extend_vector(zero, structure(2, [(2, 2)]))
    assert all(v == 0 for v in X.coords.values())


def test_extend_vector_errors():
    sch = build_weak_block(3, 2, 2)
    x = EntropyVector.from_profile(RankProfile(sch))
    with pytest.raises(ValueError, match="no structure"):
        extend_vector(EntropyVector(x.n_vars, dict(x.coords)), structure(3, [(2, 4)]))
    with pytest.raises(ValueError, match="subset relation"):
        extend_vector(x, structure(3, [(2, 1)]))
    with pytest.raises(ValueError, match="size cap"):
        extend_vector(x, structure(3, [(2, 6)]))
    bent = dict(x.coords)
    bent[1] += 7
    with pytest.raises(ValueError, match="small-structure membership"):
        extend_vector(EntropyVector(x.n_vars, bent, sch.sp), structure(3, [(2, 4)]))


# ----------------------------------------------------------------- truncation

def test_bound_row_coefficients():
    sp = structure(3, [(3, 2), (2, 1)])
    dtb = bound_row(sp, "dtb")
    assert (dtb.alpha0, dtb.alpha) == (0, {1: 1})
    assert dtb.beta == {(1, 1): 1, (2, 1): 1}
    tsdb = bound_row(sp, "tsdb", k=1)
    assert tsdb.alpha == {1: 1, 2: 1, 3: 1}
    assert tsdb.beta == {(1, 1): 1, (1, 2): 1, (2, 1): 2}
    tsdb2 = bound_row(sp, "tsdb", k=2)
    assert tsdb2.alpha == {1: 1, 2: 1}
    assert tsdb2.beta == {(1, 1): 2, (2, 1): 1}
    tvb = bound_row(sp, "tvb")
    assert tvb.alpha0 == 1 and tvb.alpha == {} and tvb.beta == {(1, 1): 3, (2, 1): 2}
    tsb = bound_row(sp, "tsb", k=2)
    assert tsb.alpha0 == 1 and tsb.beta == {(1, 1): 3, (2, 1): 1}
    with pytest.raises(ValueError, match="unknown bound"):
        bound_row(sp, "mystery")
    with pytest.raises(ValueError, match="level out of range"):
        bound_row(sp, "tsdb", k=3)


def test_truncation_examples():
    big = structure(3, [(3, 2), (2, 2)])
    small = structure(3, [(3, 1), (2, 1)])
    assert check_truncation(bound_row(big, "dtb"), small, big)
    big2 = structure(3, [(3, 2), (2, 1)])
    small2 = structure(3, [(3, 2)])
    assert check_truncation(bound_row(big2, "tsdb", k=1), small2, big2)


def test_truncation_all_families():
    big = structure(3, [(3, 1), (2, 2)])
    small = structure(3, [(3, 1), (2, 1)])
    for name in ("dtb", "tsdb", "tvb", "tsb"):
        assert check_truncation(bound_row(big, name), small, big), name


def test_truncation_preconditions():
    big = structure(3, [(3, 2), (2, 1)])
    small = structure(3, [(3, 2)])
    row = bound_row(big, "tsdb", k=1)
    negated = ShareSecretBound(F(0), {1: F(-1)}, dict(row.beta))
    with pytest.raises(ValueError, match="big-structure feasibility"):
        check_truncation(negated, small, big)
    negative = ShareSecretBound(F(0), dict(row.alpha), {(1, 1): F(-1)})
    with pytest.raises(ValueError, match="negative secret coefficient"):
        check_truncation(negative, small, big)
    with pytest.raises(ValueError, match="subset relation"):
        check_truncation(row, structure(3, [(2, 2)]), big)


# ----------------------------------------------------------------------- dump

def test_dump_format():
    cs = system_constraints(structure(2, [(2, 1)]), WEAK)
    text = cs.dump()
    lines = text.strip().split("\n")
    assert len(lines) == 3
    assert lines[0].startswith("C1 ") and lines[0].endswith("= 0")
    for line in lines:
        tag, *terms, sense, rhs = line.split()
        assert tag in ("C1", "C3") and sense in ("=", ">=") and rhs == "0"
        for t in terms:
            mask, coeff = t.split(":")
            assert 1 <= int(mask) <= 7
            F(coeff)  # parses as a rational
