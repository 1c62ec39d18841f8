#!/usr/bin/env python3
"""Optimal proportions, h* and single-class efficiencies for k = 3..7.

Usage: python scripts/reproduce_tables.py [--k 3 5 6 7] [--json out.json]
"""

from __future__ import annotations

import argparse
import json
import time

from xoverdesign.cli import fmt_rounded
from xoverdesign.io import solution_to_dict
from xoverdesign.optimizer import single_class_efficiency, solve
from xoverdesign.symmetry import coefficients

T_VALUES = {
    3: list(range(2, 17)),
    4: list(range(2, 31)),
    5: [2, 3, 4, 5, 6, 7, 8, 9, 10, 15, 20, 30],
    6: [2, 3, 4, 5, 6, 7, 8, 9, 10, 15, 20, 30],
    7: list(range(3, 31)),
}


def table(k: int) -> list[dict]:
    rows = []
    for t in T_VALUES[k]:
        start = time.perf_counter()
        sol = solve(k, t, rational=k <= 5)
        d = solution_to_dict(sol)
        d["seconds"] = time.perf_counter() - start
        d["efficiency"] = {
            "".join(map(str, c)): single_class_efficiency(coefficients(c, t), sol.h_star) for c, _ in sol.active
        }
        rows.append(d)
        ex = sol.exact if sol.exact is not None and sol.exact.verified else None
        props = ", ".join(
            f"[{''.join(map(str, c))}] {ex.proportions[c] if ex else fmt_rounded(p)}" for c, p in sol.active
        )
        h = ex.h_star if ex else f"{sol.h_star:.4f}"
        note = f"  (degenerate, dim {sol.degeneracy})" if sol.degeneracy else ""
        print(f"k={k} t={t:>2}  h*={h}  {props}{note}")
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, nargs="+", default=[3, 4, 5, 6, 7])
    ap.add_argument("--json", help="write all solutions to this file")
    args = ap.parse_args()
    out = {k: table(k) for k in args.k}
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(out, fh, indent=2, default=str)


if __name__ == "__main__":
    main()
