#!/usr/bin/env python3
"""A-, D-, E-efficiencies of the t(t-1)-subject designs for k = 6 and 7,
plus strong balance, complete symmetry and automorphism group order.

Usage: python scripts/reduced_designs.py [--t-max 10] [--gf]
"""

from __future__ import annotations

import argparse

from xoverdesign.constructions import GF_ORDERS, build_reduced_design
from xoverdesign.evaluation import evaluate
from xoverdesign.optimizer import solve
from xoverdesign.symmetry import MAX_AUTOMORPHISM_T, automorphism_group, check_strong_balance

PATTERNS = {6: (1, 1, 2, 2, 3, 3), 7: (1, 1, 2, 2, 3, 3, 3)}


def report(t: int, k: int, method: str) -> str:
    d, _ = build_reduced_design(t, PATTERNS[k], method)
    rep = evaluate(d, solve(k, t))
    group = automorphism_group(d).order if t <= MAX_AUTOMORPHISM_T else "-"
    return (
        f"{method:>2} k={k} t={t:>2} n={d.n:>3}  A={rep.a_eff:.4f} D={rep.d_eff:.4f} E={rep.e_eff:.4f}  "
        f"balanced={bool(check_strong_balance(d))} c.s.={rep.completely_symmetric} |G_d|={group}"
    )


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t-max", type=int, default=10)
    ap.add_argument("--gf", action="store_true", help="also run the finite-field method")
    args = ap.parse_args()
    for k in (6, 7):
        for t in range(4, args.t_max + 1):
            print(report(t, k, "oa"))
    if args.gf:
        for k in (6, 7):
            for t in (q for q in GF_ORDERS if q <= args.t_max):
                print(report(t, k, "gf"))


if __name__ == "__main__":
    main()
