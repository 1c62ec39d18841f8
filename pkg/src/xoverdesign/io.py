"""Readers and writers for designs and solutions."""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from .model import ApproximateDesign, DesignError, ExactDesign, parse_sequence_key, sequence_key
from .optimizer import Certificate, ExactSolution, MaximinSolution


def read_design_csv(text: str, t: int | None = None, transpose: bool = False) -> ExactDesign:
    """Rows are subjects and columns periods (or the reverse with ``transpose``).

    A header row starting with "p1" is skipped.  ``t`` defaults to the
    largest label present.
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if rows and rows[0][0].strip().lower().startswith("p"):
        rows = rows[1:]
    try:
        arr = np.array([[int(c) for c in r] for r in rows], dtype=np.int64)
    except ValueError as exc:
        raise DesignError(f"design file must contain integers: {exc}") from None
    if arr.ndim != 2:
        raise DesignError("rows of the design file differ in length")
    if transpose:
        arr = arr.T
    return ExactDesign(arr, t if t is not None else int(arr.max()))


def write_design_csv(d: ExactDesign, header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow([f"p{j + 1}" for j in range(d.k)])
    w.writerows(d.rows.tolist())
    return buf.getvalue()


def load_design(path: str | Path, t: int | None = None, transpose: bool = False) -> ExactDesign:
    return read_design_csv(Path(path).read_text(), t, transpose)


def _num(x):
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else str(x)
    return x


def _parse_num(x):
    if isinstance(x, str):
        return Fraction(x)
    return x


def approximate_to_json(d: ApproximateDesign) -> str:
    obj = {
        "k": d.k,
        "t": d.t,
        "proportions": {sequence_key(s, d.t): _num(p) for s, p in d.items()},
    }
    if d.n != 1:
        obj["n"] = d.n
    return json.dumps(obj, indent=2)


def approximate_from_json(text: str) -> ApproximateDesign:
    obj = json.loads(text)
    k, t = int(obj["k"]), int(obj["t"])
    props = {parse_sequence_key(key, t): _parse_num(v) for key, v in obj["proportions"].items()}
    return ApproximateDesign(props, k, t, obj.get("n", 1))


def solution_to_dict(sol: MaximinSolution) -> dict:
    exact = sol.exact if sol.exact is not None and sol.exact.verified else None
    active = []
    for cls, p in sol.active:
        entry = {"class": sequence_key(cls, sol.t), "proportion": p}
        if exact is not None:
            entry["proportion_exact"] = str(exact.proportions[cls])
        active.append(entry)
    out = {
        "k": sol.k,
        "t": sol.t,
        "gamma_star": [float(x) for x in sol.gamma_star],
        "h_star": sol.h_star,
        "active": active,
        "degeneracy": sol.degeneracy,
        "certificate": None if sol.certificate is None else vars(sol.certificate),
        "settings": sol.settings,
    }
    if sol.exact is not None:
        out["exact"] = {
            "verified": sol.exact.verified,
            "gamma_star": [str(g) for g in sol.exact.gamma],
            "h_star": str(sol.exact.h_star),
            "proportions": {sequence_key(c, sol.t): str(p) for c, p in sol.exact.proportions.items()},
        }
    return out


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def solution_to_json(sol: MaximinSolution) -> str:
    return json.dumps(solution_to_dict(sol), indent=2, default=_json_default)


def solution_from_json(text: str) -> MaximinSolution:
    obj = json.loads(text)
    t = obj["t"]
    active = [(parse_sequence_key(a["class"], t), float(a["proportion"])) for a in obj["active"]]
    cert = Certificate(**obj["certificate"]) if obj.get("certificate") else None
    exact = None
    if obj.get("exact"):
        e = obj["exact"]
        exact = ExactSolution(
            gamma=tuple(Fraction(g) for g in e["gamma_star"]),
            h_star=Fraction(e["h_star"]),
            proportions={parse_sequence_key(c, t): Fraction(p) for c, p in e["proportions"].items()},
            verified=bool(e["verified"]),
        )
    return MaximinSolution(
        k=obj["k"],
        t=t,
        gamma_star=np.array(obj["gamma_star"], dtype=float),
        h_star=float(obj["h_star"]),
        active=active,
        degeneracy=obj.get("degeneracy", 0),
        certificate=cert,
        exact=exact,
        settings=obj.get("settings", {}),
    )
