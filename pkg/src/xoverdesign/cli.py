"""Command line interface: ``xoverdesign <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import io as dio
from .constructions import build_reduced_design
from .evaluation import compare_period_models, evaluate, is_completely_symmetric
from .model import DesignError, phi_matrix, sequence_key
from .optimizer import CertificationError, OptimizationError, single_class_efficiency, solve
from .symmetry import (
    automorphism_group,
    canonicalize,
    check_strong_balance,
    coefficients,
    enumerate_classes,
    symmetric_design_from_class,
    MAX_AUTOMORPHISM_T,
)

EXIT_OK, EXIT_USAGE, EXIT_CERT, EXIT_UNSUPPORTED = 0, 2, 3, 4
MAX_T = 30


class UsageError(Exception):
    pass


def parse_t_range(text: str) -> list[int]:
    """"2..16", "2,5,7" or "7"."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        values = list(range(int(lo), int(hi) + 1))
    else:
        values = [int(x) for x in text.split(",") if x.strip()]
    if not values:
        raise UsageError(f"empty t range {text!r}")
    return values


def parse_labels(text: str) -> tuple[int, ...]:
    text = text.strip().strip("[]")
    if "," in text or " " in text:
        return tuple(int(x) for x in text.replace(",", " ").split())
    return tuple(int(c) for c in text)


def fmt_rounded(x: float) -> str:
    """Two decimals; 0⁺ / 1⁻ for values within 0.005 of 0 or 1 but not equal."""
    if abs(x) < 1e-9:
        return "0"
    if abs(x - 1) < 1e-9:
        return "1"
    if 0 < x < 0.005:
        return "0⁺"
    if 0.995 <= x < 1:
        return "1⁻"
    return f"{x:.2f}"


def _check_kt(k: int, t: int, t_max: int = MAX_T) -> None:
    if k < 2:
        raise UsageError(f"k must be at least 2 (got {k})")
    if not 2 <= t <= t_max:
        raise UsageError(f"t must lie in 2..{t_max} (got {t})")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _solve(k: int, t: int, args) -> "object":
    return solve(k, t, active_rtol=args.tol_active, rational=getattr(args, "rational", False))


def cmd_optimize(args) -> int:
    _check_kt(args.k, args.t)
    sol = _solve(args.k, args.t, args)
    if args.format == "json":
        _emit(dio.solution_to_json(sol), args.output)
        return EXIT_OK
    lines = [f"k = {sol.k}, t = {sol.t}"]
    exact = sol.exact if sol.exact is not None and sol.exact.verified else None
    for cls, p in sol.active:
        shown = str(exact.proportions[cls]) if exact else f"{p:.6f}"
        lines.append(f"Prop. [ {' '.join(map(str, cls))} ]  {shown}")
    lines.append(f"h*  {exact.h_star if exact else f'{sol.h_star:.10f}'}")
    if sol.degeneracy:
        lines.append(f"(proportions not unique: solution set of dimension {sol.degeneracy})")
    c = sol.certificate
    lines.append(
        f"certificate: passed={c.passed} kkt={c.kkt_residual:.1e} dual_gap={c.dual_gap:.1e} "
        f"dominance={c.max_inactive_gap:.1e}"
    )
    if getattr(args, "rational", False):
        lines.append(f"exact verification: {bool(exact)}")
    _emit("\n".join(lines), args.output)
    return EXIT_OK


def table_rows(k: int, ts: list[int], rational: bool = False, tol_active: float = 1e-7):
    """Solve for every t; returns (solutions, sorted union of active classes)."""
    sols = [solve(k, t, active_rtol=tol_active, rational=rational) for t in ts]
    classes: list = []
    for s in sols:
        for c, _ in s.active:
            if c not in classes:
                classes.append(c)
    return sols, sorted(classes)


def cmd_table(args) -> int:
    ts = parse_t_range(args.t)
    _check_kt(args.k, min(ts))
    _check_kt(args.k, max(ts))
    sols, classes = table_rows(args.k, ts, args.rational, args.tol_active)
    if args.format == "json":
        _emit(json.dumps([dio.solution_to_dict(s) for s in sols], indent=2, default=_json_default), args.output)
        return EXIT_OK

    def cell_prop(s, c):
        ex = s.exact if s.exact is not None and s.exact.verified else None
        if ex is not None:
            return str(ex.proportions.get(c, Fraction(0)))
        return fmt_rounded(s.proportion(c))

    def cell_h(s):
        ex = s.exact if s.exact is not None and s.exact.verified else None
        return str(ex.h_star) if ex is not None else f"{s.h_star:.2f}"

    head = ["t"] + [str(t) for t in ts]
    body = []
    for c in classes:
        body.append([f"Prop. [ {' '.join(map(str, c))} ]"] + [cell_prop(s, c) for s in sols])
    body.append(["h*"] + [cell_h(s) for s in sols])
    for c in classes:
        row = [f"Eff. [ {' '.join(map(str, c))} ]"]
        for s, t in zip(sols, ts):
            if len(set(c)) > t:
                row.append("--")
            else:
                row.append(fmt_rounded(single_class_efficiency(coefficients(c, t), s.h_star)))
        body.append(row)
    _emit(_render([head] + body), args.output)
    return EXIT_OK


def _render(rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for j, r in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) if i == 0 else cell.rjust(w) for i, (cell, w) in enumerate(zip(r, widths))))
        if j == 0:
            lines.append("-" * len(lines[0]))
    return "\n".join(lines)


def cmd_classes(args) -> int:
    _check_kt(args.k, args.t, t_max=10**6)
    classes = enumerate_classes(args.k, args.t)
    if args.format == "json":
        _emit(json.dumps({"k": args.k, "t": args.t, "count": len(classes),
                          "classes": [sequence_key(c, args.t) for c in classes]}, indent=2), args.output)
    else:
        _emit("\n".join(sequence_key(c, args.t) for c in classes) + f"\n# {len(classes)} classes", args.output)
    return EXIT_OK


def _load(args):
    return dio.load_design(args.design, t=args.t, transpose=args.transpose)


def cmd_evaluate(args) -> int:
    d = _load(args)
    _check_kt(d.k, d.t)
    if args.optimum:
        opt = dio.solution_from_json(Path(args.optimum).read_text())
    else:
        opt = solve(d.k, d.t, active_rtol=args.tol_active)
    rep = evaluate(d, opt, periods=args.periods_model)
    if args.format == "json":
        _emit(json.dumps(rep.to_dict(), indent=2, default=_json_default), args.output)
    else:
        rows = [
            ["", f"t = {d.t}"],
            ["A-efficiency", f"{rep.a_eff:.3f}"],
            ["D-efficiency", f"{rep.d_eff:.3f}"],
            ["E-efficiency", f"{rep.e_eff:.3f}"],
            ["trace efficiency", f"{rep.trace_eff:.3f}"],
            ["completely symmetric", str(rep.completely_symmetric)],
            ["estimable", str(rep.estimable)],
        ]
        _emit(_render(rows), args.output)
    return EXIT_OK


def cmd_construct(args) -> int:
    pattern = canonicalize(parse_labels(args.pattern))
    seed = parse_labels(args.seed_triplet) if args.seed_triplet else None
    d, start = build_reduced_design(args.t, pattern, args.method, seed)
    text = dio.write_design_csv(d)
    _emit(text, args.output)
    if args.output:
        meta = {
            "method": args.method,
            "t": args.t,
            "k": d.k,
            "n": d.n,
            "pattern": sequence_key(pattern, args.t),
            "seed": list(seed or (1, 2, 3)) if args.method == "gf" else None,
            **start.info,
        }
        Path(str(args.output) + ".json").write_text(json.dumps(meta, indent=2))
    return EXIT_OK


def cmd_generate(args) -> int:
    cls = parse_labels(args.cls)
    d = symmetric_design_from_class(cls, args.t)
    _emit(dio.write_design_csv(d), args.output)
    return EXIT_OK


def cmd_check(args) -> int:
    d = _load(args)
    sb = check_strong_balance(d)
    C = phi_matrix(d)
    cmp = compare_period_models(d)
    report = {
        "n": d.n,
        "k": d.k,
        "t": d.t,
        "strongly_balanced": bool(sb),
        "strong_balance": vars(sb),
        "completely_symmetric": is_completely_symmetric(C),
        "completely_symmetric_periods": is_completely_symmetric(phi_matrix(d, periods=True)),
        "trace": cmp.trace_plain,
        "trace_periods": cmp.trace_periods,
        "period_models_equal": cmp.equal,
    }
    code = EXIT_OK
    if d.t <= MAX_AUTOMORPHISM_T:
        g = automorphism_group(d)
        report["automorphism_order"] = g.order
        report["transitive"] = g.transitive
        report["doubly_transitive"] = g.doubly_transitive
        report["generators"] = [list(x) for x in g.generators]
    else:
        report["automorphism"] = f"unsupported for t > {MAX_AUTOMORPHISM_T}"
        code = EXIT_UNSUPPORTED
    if args.format == "json":
        _emit(json.dumps(report, indent=2, default=_json_default), args.output)
    else:
        _emit("\n".join(f"{key}: {val}" for key, val in report.items()), args.output)
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xoverdesign", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt=("table", "json")):
        sp.add_argument("--format", choices=fmt, default=fmt[0])
        sp.add_argument("-o", "--output", help="write to this file instead of stdout")

    sp = sub.add_parser("optimize", help="optimal proportions for one (k, t)")
    sp.add_argument("-k", type=int, required=True)
    sp.add_argument("-t", type=int, required=True)
    sp.add_argument("--rational", action="store_true", help="verify an exact rational solution")
    sp.add_argument("--tol-active", type=float, default=1e-7)
    common(sp)
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("table", help="optimal proportions and efficiencies over a range of t")
    sp.add_argument("-k", type=int, required=True)
    sp.add_argument("-t", required=True, help='e.g. "2..16" or "2,5,10"')
    sp.add_argument("--rational", action="store_true")
    sp.add_argument("--tol-active", type=float, default=1e-7)
    common(sp)
    sp.set_defaults(func=cmd_table)

    sp = sub.add_parser("classes", help="list equivalence classes of sequences")
    sp.add_argument("-k", type=int, required=True)
    sp.add_argument("-t", type=int, required=True)
    common(sp, ("text", "json"))
    sp.set_defaults(func=cmd_classes)

    for name, func, helptext in [
        ("evaluate", cmd_evaluate, "efficiencies of a design given as CSV"),
        ("check", cmd_check, "balance, automorphism and symmetry report for a design"),
    ]:
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("design", help="CSV file, one row per subject")
        sp.add_argument("-t", type=int, default=None, help="number of treatments (default: max label)")
        sp.add_argument("--transpose", action="store_true", help="file has one row per period")
        if name == "evaluate":
            sp.add_argument("--periods-model", action="store_true")
            sp.add_argument("--optimum", help="solution JSON from `optimize --format json`")
            sp.add_argument("--tol-active", type=float, default=1e-7)
        common(sp)
        sp.set_defaults(func=func)

    sp = sub.add_parser("construct", help="t(t-1)-subject design from triplets")
    sp.add_argument("-t", type=int, required=True)
    sp.add_argument("--pattern", required=True, help="three-block class, e.g. 1122333")
    sp.add_argument("--method", choices=("oa", "gf"), default="oa")
    sp.add_argument("--seed-triplet", help="gf seed, e.g. 1,2,3")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("generate", help="symmetric design generated by one class")
    sp.add_argument("cls", metavar="class", help="e.g. 1122")
    sp.add_argument("-t", type=int, required=True)
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_generate)
    return p


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, Fraction):
        return str(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CertificationError as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_CERT
    except OptimizationError as exc:
        print(f"optimisation failed: {exc}", file=sys.stderr)
        return EXIT_CERT
    except DesignError as exc:
        msg = str(exc)
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_UNSUPPORTED if "limited to" in msg or "not a supported" in msg else EXIT_USAGE
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
