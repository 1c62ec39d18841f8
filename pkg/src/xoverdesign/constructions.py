"""Designs with t(t-1) subjects built from triplets of distinct treatments.

Each triplet is expanded into a k-period sequence following a three-block
pattern such as [1, 1, 2, 2, 3, 3, 3].  Two sources of triplets are
available: cyclic ones modulo t (with a patch for even t) and the affine
orbit of a seed triplet over GF(t).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .galois import element_to_label, galois_field, label_to_element, prime_power
from .model import DesignError, ExactDesign, Sequence_
from .symmetry import block_count, canonicalize

Triplet = tuple[int, int, int]

GF_ORDERS = (4, 5, 7, 8, 9, 11, 13, 16, 17, 19, 23, 25, 27, 29, 31, 32)


@dataclass(frozen=True)
class StartingDesign:
    triplets: tuple[Triplet, ...]
    t: int
    method: str
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for tr in self.triplets:
            if len(set(tr)) != 3 or not all(1 <= x <= self.t for x in tr):
                raise DesignError(f"invalid triplet {tr} for t = {self.t}")

    def __len__(self):
        return len(self.triplets)

    def as_array(self) -> np.ndarray:
        return np.array(self.triplets, dtype=np.int64)


def is_orthogonal_array(triplets: Sequence[Sequence[int]], t: int) -> bool:
    """Every ordered pair of distinct treatments occurs exactly once in every
    ordered pair of distinct positions."""
    arr = np.asarray(triplets)
    if arr.shape != (t * (t - 1), 3):
        return False
    for j1, j2 in itertools.permutations(range(3), 2):
        counts = np.zeros((t + 1, t + 1), dtype=np.int64)
        np.add.at(counts, (arr[:, j1], arr[:, j2]), 1)
        off = counts[1:, 1:][~np.eye(t, dtype=bool)]
        if not np.all(off == 1) or np.trace(counts[1:, 1:]) != 0:
            return False
    return True


def _cyclic(t: int) -> list[Triplet]:
    return [(u % t + 1, (u + v) % t + 1, (u + 2 * v) % t + 1) for u in range(t) for v in range(1, t)]


def oa_triplets_odd(t: int) -> StartingDesign:
    """Triplets [u, u+v, u+2v] mod t, shifted to labels 1..t."""
    if t < 3 or t % 2 == 0:
        raise DesignError(f"the cyclic construction needs odd t >= 3 (got {t}); use the even patch")
    return StartingDesign(tuple(sorted(_cyclic(t))), t, "oa")


def oa_triplets_even(t: int) -> StartingDesign:
    """Cyclic triplets for t-1 with each [u, u+1, u+2] split into three
    triplets that bring in treatment t."""
    if t < 4 or t % 2:
        raise DesignError(f"the even patch needs even t >= 4 (got {t})")
    out: list[Triplet] = []
    m = t - 1
    for a, b, c in _cyclic(m):
        if b == a % m + 1 and c == b % m + 1:
            out += [(t, b, c), (a, t, c), (a, b, t)]
        else:
            out.append((a, b, c))
    return StartingDesign(tuple(sorted(out)), t, "oa")


def oa_triplets(t: int) -> StartingDesign:
    return oa_triplets_odd(t) if t % 2 else oa_triplets_even(t)


def gf_triplets(t: int, seed: Sequence[int] = (1, 2, 3)) -> StartingDesign:
    """All triplets [a x + b, a y + b, a z + b], a != 0, over GF(t).

    Label u stands for the element with integer code u - 1, so the default
    seed (1, 2, 3) is {0, 1, 2}, a line of the prime subfield when p = 3.
    """
    if t not in GF_ORDERS:
        raise DesignError(f"t = {t} is not a supported prime power (choose from {GF_ORDERS})")
    seed = tuple(int(x) for x in seed)
    if len(seed) != 3 or len(set(seed)) != 3 or not all(1 <= x <= t for x in seed):
        raise DesignError(f"seed must be three distinct labels in 1..{t}, got {seed}")
    F = galois_field(t)
    xs = [label_to_element(x, t) for x in seed]
    out = set()
    for a in range(1, t):
        for b in range(t):
            tr = tuple(element_to_label(int(F.add[F.mul[a, x], b]), t) for x in xs)
            out.add(tr)
    p, n = prime_power(t)
    info = {
        "field": f"GF({p}^{n})" if n > 1 else f"GF({p})",
        "polynomial": F.polynomial_str() if n > 1 else None,
        "label_map": {str(label): label_to_element(label, t) for label in range(1, t + 1)},
        "seed": list(seed),
    }
    return StartingDesign(tuple(sorted(out)), t, "gf", info)


def expand_triplet(tr: Sequence[int], pattern: Sequence[int]) -> Sequence_:
    """Replace block label i of the pattern by the i-th entry of the triplet."""
    pattern = tuple(pattern)
    if canonicalize(pattern) != pattern:
        pattern = canonicalize(pattern)
    if block_count(pattern) != 3:
        raise DesignError(f"pattern {pattern} must use exactly 3 labels")
    return tuple(int(tr[x - 1]) for x in pattern)


def build_reduced_design(
    t: int, pattern: Sequence[int], method: str = "oa", seed: Sequence[int] | None = None
) -> tuple[ExactDesign, StartingDesign]:
    """t(t-1)-subject design whose rows all lie in the class of ``pattern``."""
    if method == "oa":
        start = oa_triplets(t)
    elif method == "gf":
        start = gf_triplets(t, seed if seed is not None else (1, 2, 3))
    else:
        raise DesignError(f"unknown method {method!r}")
    rows = [expand_triplet(tr, pattern) for tr in start.triplets]
    return ExactDesign(np.array(rows), t), start
