"""Command-line front end for building, checking, and using schemes.

Every subcommand is deterministic for fixed flags and seed.  Exit codes:
0 success, 1 a verified failure (witness printed), 2 usage errors such as
unreadable files or malformed flags.  `--format records` switches to
line-oriented machine-readable output; rationals always print as num/den.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from mtss import cone
from mtss.dealer import SecretAssignment, ShareBundle, deal, leakage_census, reconstruct
from mtss.schemes import LinearScheme, VariableId, build_optimal
from mtss.structure import (
    EXACT,
    MEASURES,
    SECURITIES,
    WEAK,
    RatioKind,
    format_thresholds,
    optimal_ratio,
    parse_thresholds,
)
from mtss.verify import (
    audit_bounds,
    check_conditions,
    format_rational,
    ratios,
    render_check,
    render_report,
)

PASS, FAIL, USAGE = 0, 1, 2

_MEASURE_FLAGS = {
    "sigma": "sigma",
    "sigma-avg": "sigma_avg",
    "tau": "tau",
    "tau-avg": "tau_avg",
}


class _Usage(Exception):
    """A user-input problem that should exit with status 2."""


def _structure_from_args(args):
    try:
        return parse_thresholds(args.n, args.t)
    except ValueError as e:
        raise _Usage(str(e)) from None


def _kind_from_args(args) -> RatioKind:
    return RatioKind(_MEASURE_FLAGS[args.ratio], args.security)


def _load_scheme(path: str) -> LinearScheme:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise _Usage(f"cannot read scheme file {path}: {e.strerror}") from None
    try:
        return LinearScheme.from_text(text)
    except ValueError as e:
        raise _Usage(f"bad scheme file {path}: {e}") from None


def _load_bundle(path: str) -> ShareBundle:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise _Usage(f"cannot read bundle file {path}: {e.strerror}") from None
    try:
        return ShareBundle.from_text(text)
    except ValueError as e:
        raise _Usage(f"bad bundle file {path}: {e}") from None


def _write_out(args, text: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _parse_slot(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise _Usage(f"bad secret slot {text!r}: expected k,j")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise _Usage(f"bad secret slot {text!r}: expected k,j") from None


# ----------------------------------------------------------------- commands


def _cmd_structure(args) -> int:
    sp = _structure_from_args(args)
    if args.format == "records":
        print(f"structure {sp.n_parties} {format_thresholds(sp)}")
    else:
        arrays = ", ".join(f"(t={a.threshold}, m={a.count})" for a in sp.arrays)
        print(f"structure: N={sp.n_parties}, sub-arrays {arrays}")
        print(f"variables: {sp.n_secrets} secrets + {sp.n_parties} shares")
    for security in SECURITIES:
        for measure in MEASURES:
            opt = optimal_ratio(sp, RatioKind(measure, security))
            if args.format == "records":
                if opt.status == EXACT:
                    print(f"ratio {measure} {security} exact {format_rational(opt.value)}")
                else:
                    print(
                        f"ratio {measure} {security} unknown "
                        f"{format_rational(opt.lower)} {format_rational(opt.upper)}"
                    )
            else:
                if opt.status == EXACT:
                    print(f"{measure}/{security}: {format_rational(opt.value)}")
                else:
                    print(
                        f"{measure}/{security}: unknown in "
                        f"[{format_rational(opt.lower)}, {format_rational(opt.upper)}]"
                    )
    return PASS


def _cmd_build(args) -> int:
    sp = _structure_from_args(args)
    scheme = build_optimal(sp, _kind_from_args(args))
    _write_out(args, scheme.to_text())
    if args.out:
        print(f"wrote {args.out} (q={scheme.q}, rows={scheme.n_rows})")
    return PASS


def _cmd_verify(args) -> int:
    scheme = _load_scheme(args.scheme)
    report = check_conditions(scheme, args.security, exhaustive=args.exhaustive)
    print(render_report(report))
    return PASS if report.passed else FAIL


def _cmd_ratios(args) -> int:
    scheme = _load_scheme(args.scheme)
    rep = ratios(scheme, strict=False)
    for measure in MEASURES:
        value = rep.value(measure)
        shown = "undefined" if value is None else format_rational(value)
        if args.format == "records":
            print(f"ratio {measure} {shown}")
        else:
            print(f"{measure}: {shown}")
    return PASS


def _cmd_audit(args) -> int:
    scheme = _load_scheme(args.scheme)
    try:
        checks = audit_bounds(
            scheme, args.security, full_sweep=args.full_sweep, cap=args.cap
        )
    except ValueError as e:
        raise _Usage(str(e)) from None
    violations = [c for c in checks if not c.holds]
    if args.format == "records":
        for c in checks:
            print(render_check(c))
    else:
        print(f"audited {len(checks)} bound checks ({args.security})")
        for c in violations:
            print(render_check(c))
    if violations:
        print(f"violations: {len(violations)}")
        return FAIL
    if args.format != "records":
        print("all bounds hold")
    return PASS


def _cmd_lp(args) -> int:
    sp = _structure_from_args(args)
    kind = _kind_from_args(args)
    try:
        if args.dump:
            system = cone.membership_system(sp, kind.security)
            sys.stdout.write(system.dump())
        value = cone.lower_bound_ratio(sp, kind)
    except ValueError as e:
        raise _Usage(str(e)) from None
    print(f"value {format_rational(value)}")
    return PASS


def _cmd_deal(args) -> int:
    scheme = _load_scheme(args.scheme)
    chunks = args.secrets.split(";") if args.secrets else []
    vectors = []
    for chunk in chunks:
        chunk = chunk.strip()
        if chunk in ("", "-"):
            vectors.append([])
        else:
            try:
                vectors.append([int(v) for v in chunk.split(",")])
            except ValueError:
                raise _Usage(f"bad secret vector {chunk!r}") from None
    try:
        assignment = SecretAssignment.for_scheme(scheme, vectors)
        bundle = deal(scheme, assignment, seed=args.seed)
    except ValueError as e:
        raise _Usage(str(e)) from None
    _write_out(args, bundle.to_text())
    if args.out:
        print(f"wrote {args.out}")
    return PASS


def _cmd_reconstruct(args) -> int:
    scheme = _load_scheme(args.scheme)
    bundle = _load_bundle(args.bundle)
    try:
        recovered = reconstruct(scheme, bundle, k=args.k)
    except ValueError as e:
        if "out of range" in str(e):
            raise _Usage(str(e)) from None
        print(f"reconstruction failed: {e}")
        return FAIL
    for v in sorted(recovered.values):
        vec = recovered[v]
        body = ",".join(str(e) for e in vec) if vec else "-"
        if args.format == "records":
            print(f"S {v.level} {v.index} {body}")
        else:
            print(f"{v} = {body}")
    return PASS


def _cmd_census(args) -> int:
    scheme = _load_scheme(args.scheme)
    try:
        indices = [int(v) for v in args.shares.split(",")] if args.shares else []
    except ValueError:
        raise _Usage(f"bad share list {args.shares!r}") from None
    coalition = [VariableId.share(i) for i in indices]
    targets = [
        VariableId.secret(*_parse_slot(s)) for s in args.target.split(";") if s
    ]
    if not targets:
        raise _Usage("census needs at least one target secret")
    try:
        table = leakage_census(scheme, coalition, targets)
    except (ValueError, KeyError) as e:
        raise _Usage(str(e)) from None
    print(f"uniform {'yes' if table.uniform else 'no'}")
    if args.format == "records":
        for a_vals in sorted(table.counts):
            row = table.counts[a_vals]
            a_body = ",".join(str(v) for v in a_vals) if a_vals else "-"
            for s_vals in sorted(row):
                s_body = ",".join(str(v) for v in s_vals) if s_vals else "-"
                print(f"count {a_body} {s_body} {row[s_vals]}")
    else:
        rows = sum(len(r) for r in table.counts.values())
        print(f"{len(table.counts)} coalition values, {rows} table rows")
    return PASS


# ------------------------------------------------------------------- parser


def _add_format(p):
    p.add_argument(
        "--format", choices=("text", "records"), default="text",
        help="output mode (records = line-oriented machine-readable)",
    )


def _add_structure_flags(p):
    p.add_argument("--n", type=int, required=True, help="number of participants")
    p.add_argument(
        "--t", required=True,
        help="per-secret thresholds, non-increasing, e.g. 3,3,2",
    )


def _add_ratio_flags(p):
    p.add_argument("--ratio", choices=sorted(_MEASURE_FLAGS), required=True)
    p.add_argument("--security", choices=SECURITIES, required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtss",
        description="multi-threshold secret-sharing toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("structure", help="validate a structure and print its table")
    _add_structure_flags(p)
    _add_format(p)
    p.set_defaults(fn=_cmd_structure)

    p = sub.add_parser("build", help="build an optimal scheme and write it out")
    _add_structure_flags(p)
    _add_ratio_flags(p)
    p.add_argument("--out", help="scheme file path (default: stdout)")
    _add_format(p)
    p.set_defaults(fn=_cmd_build)

    p = sub.add_parser("verify", help="check scheme conditions")
    p.add_argument("scheme")
    p.add_argument("--security", choices=SECURITIES, default=WEAK)
    p.add_argument("--exhaustive", action="store_true",
                   help="also scan non-maximal coalitions")
    _add_format(p)
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("ratios", help="print the four ratio measures")
    p.add_argument("scheme")
    _add_format(p)
    p.set_defaults(fn=_cmd_ratios)

    p = sub.add_parser("audit", help="run every applicable bound check")
    p.add_argument("scheme")
    p.add_argument("--security", choices=SECURITIES, default=WEAK)
    p.add_argument("--full-sweep", action="store_true",
                   help="sweep share permutations, not just sorted picks")
    p.add_argument("--cap", type=int, default=10000,
                   help="max checks per bound family")
    _add_format(p)
    p.set_defaults(fn=_cmd_audit)

    p = sub.add_parser("lp", help="exact LP lower bound for a ratio")
    _add_structure_flags(p)
    _add_ratio_flags(p)
    p.add_argument("--dump", action="store_true",
                   help="print the constraint system first")
    _add_format(p)
    p.set_defaults(fn=_cmd_lp)

    p = sub.add_parser("deal", help="deal shares for chosen secret values")
    p.add_argument("scheme")
    p.add_argument("--secrets", required=True,
                   help="per-secret vectors in canonical order, e.g. '3' or '1,2;0;-'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="bundle file path (default: stdout)")
    _add_format(p)
    p.set_defaults(fn=_cmd_deal)

    p = sub.add_parser("reconstruct", help="recover suffix secrets from shares")
    p.add_argument("scheme")
    p.add_argument("bundle")
    p.add_argument("--k", type=int, default=1, help="sub-array index")
    _add_format(p)
    p.set_defaults(fn=_cmd_reconstruct)

    p = sub.add_parser("census", help="brute-force leakage table of a tiny scheme")
    p.add_argument("scheme")
    p.add_argument("--shares", default="", help="coalition indices, e.g. 1,2")
    p.add_argument("--target", required=True,
                   help="target secret slots k,j joined by ';', e.g. '1,1;1,2'")
    _add_format(p)
    p.set_defaults(fn=_cmd_census)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return USAGE if e.code else PASS
    try:
        return args.fn(args)
    except _Usage as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    raise SystemExit(main())
