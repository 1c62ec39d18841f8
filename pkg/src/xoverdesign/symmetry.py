"""Label-permutation symmetry: equivalence classes of sequences, the seven
orbit matrices, per-class quadratics, symmetrisation and automorphisms."""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .model import (
    ApproximateDesign,
    Design,
    DesignError,
    ExactDesign,
    Sequence_,
    check_sequence,
    info_xi_sequence,
    pair_index,
    pinv_psd,
)

N_ORBITS = 7
N_GAMMA = 5  # free coordinates gamma_2..gamma_6
MAX_AUTOMORPHISM_T = 8


def canonicalize(s: Sequence[int]) -> Sequence_:
    """Restricted-growth form: relabel in order of first appearance."""
    relabel: dict[int, int] = {}
    out = []
    for x in s:
        if x not in relabel:
            relabel[x] = len(relabel) + 1
        out.append(relabel[x])
    return tuple(out)


def block_count(cls: Sequence[int]) -> int:
    return len(set(cls))


def is_canonical(s: Sequence[int]) -> bool:
    return tuple(s) == canonicalize(s)


def enumerate_classes(k: int, t: int) -> list[Sequence_]:
    """All restricted-growth strings of length k using at most t labels,
    in lexicographic order."""
    if k < 2 or t < 2:
        raise DesignError("need k >= 2 and t >= 2")
    out: list[Sequence_] = []

    def grow(prefix: list[int], top: int) -> None:
        if len(prefix) == k:
            out.append(tuple(prefix))
            return
        for x in range(1, min(top + 1, t) + 1):
            prefix.append(x)
            grow(prefix, max(top, x))
            prefix.pop()

    grow([1], 1)
    return out


def stirling2(n: int, m: int) -> int:
    if n == m:
        return 1
    if m == 0 or m > n:
        return 0
    return m * stirling2(n - 1, m) + stirling2(n - 1, m - 1)


def class_count(k: int, t: int) -> int:
    return sum(stirling2(k, m) for m in range(1, min(k, t) + 1))


def orbit_of(u: int, v: int, w: int) -> int:
    """Orbit number (1..7) of the triple (u, v, w), v = 0 meaning no predecessor."""
    if v == 0:
        return 5 if w == u else 6
    if u == v:
        return 1 if w == u else 7
    if w == u:
        return 2
    if w == v:
        return 3
    return 4


def orbit_basis(t: int) -> list[np.ndarray]:
    """[L_(1), ..., L_(7)], each of shape t(t+1) x t."""
    if t < 2:
        raise DesignError("t must be at least 2")
    L = [np.zeros((t * (t + 1), t)) for _ in range(N_ORBITS)]
    for u in range(1, t + 1):
        for v in range(0, t + 1):
            row = pair_index(u, v, t)
            for w in range(1, t + 1):
                L[orbit_of(u, v, w) - 1][row, w - 1] = 1.0
    return L


def gamma_vector(gamma) -> np.ndarray:
    """(1, gamma_2, ..., gamma_6) as a length-6 array."""
    g = np.asarray(gamma, dtype=float)
    if g.shape != (N_GAMMA,):
        raise ValueError(f"gamma must have {N_GAMMA} entries")
    return np.concatenate([[1.0], g])


def gamma_matrix(gamma, t: int) -> np.ndarray:
    """L_gamma = L_(1) + sum_q gamma_q L_(q), q = 2..6."""
    basis = orbit_basis(t)
    g = gamma_vector(gamma)
    return sum(g[q] * basis[q] for q in range(6))


@dataclass(frozen=True)
class CoefficientTable:
    """c_{pq} for one class; stored exactly as num / k with integer num."""

    cls: Sequence_
    t: int
    num: np.ndarray  # 6x6 int64

    @property
    def k(self) -> int:
        return len(self.cls)

    @functools.cached_property
    def c(self) -> np.ndarray:
        return self.num / self.k

    @property
    def quad(self) -> np.ndarray:
        return self.c[1:, 1:]

    @property
    def lin(self) -> np.ndarray:
        return self.c[1:, 0]

    @property
    def const(self) -> float:
        return float(self.c[0, 0])

    def exact(self) -> list[list[Fraction]]:
        return [[Fraction(int(x), self.k) for x in row] for row in self.num]

    def value(self, gamma) -> float:
        g = gamma_vector(gamma)
        return float(g @ self.c @ g)

    def gradient(self, gamma) -> np.ndarray:
        g = gamma_vector(gamma)
        return 2.0 * (self.c[1:, :] @ g)

    def value_exact(self, gamma: Sequence[Fraction]) -> Fraction:
        g = [Fraction(1)] + [Fraction(x) for x in gamma]
        tot = sum(int(self.num[p, q]) * g[p] * g[q] for p in range(6) for q in range(6))
        return Fraction(tot) / self.k

    def gradient_exact(self, gamma: Sequence[Fraction]) -> list[Fraction]:
        g = [Fraction(1)] + [Fraction(x) for x in gamma]
        return [
            2 * sum(int(self.num[p, q]) * g[q] for q in range(6)) / Fraction(self.k)
            for p in range(1, 6)
        ]

    def minimize(self) -> tuple[np.ndarray, float]:
        """Unconstrained minimum of h over gamma."""
        gamma = -pinv_psd(self.quad) @ self.lin
        return gamma, max(self.value(gamma), 0.0)


def _reduced_columns(cls: Sequence[int], t: int):
    """Yield (multiplicity, orbit numbers per period) for the k x t matrices
    X_s L_(q); columns for labels absent from the sequence are identical."""
    labels = sorted(set(cls))
    for w in labels:
        prev = 0
        col = []
        for u in cls:
            col.append(orbit_of(u, prev, w))
            prev = u
        yield 1, col
    spare = t - len(labels)
    if spare > 0:
        w = 0  # stands for any label not in the sequence
        prev = 0
        col = []
        for u in cls:
            col.append(orbit_of(u, prev, w))
            prev = u
        yield spare, col


@functools.lru_cache(maxsize=None)
def _coefficient_num(cls: Sequence_, t: int) -> np.ndarray:
    k = len(cls)
    G = np.zeros((6, 6), dtype=np.int64)
    S = np.zeros((6, 6), dtype=np.int64)
    for mult, col in _reduced_columns(cls, t):
        M = np.zeros((k, 6), dtype=np.int64)
        for j, q in enumerate(col):
            if q <= 6:
                M[j, q - 1] = 1
        colsum = M.sum(axis=0)
        G += mult * (M.T @ M)
        S += mult * np.outer(colsum, colsum)
    num = k * G - S
    num.setflags(write=False)
    return num


def coefficients(cls: Sequence[int], t: int) -> CoefficientTable:
    """Coefficient table of the class of ``cls`` (any representative)."""
    canon = canonicalize(cls)
    if block_count(canon) > t:
        raise DesignError(f"class {canon} needs more than {t} treatments")
    if len(canon) < 2:
        raise DesignError("sequences need at least 2 periods")
    return CoefficientTable(canon, t, _coefficient_num(canon, t))


def coefficients_dense(s: Sequence[int], t: int, exact: bool = True) -> np.ndarray:
    """Reference definition tr(L_(p)' C_s[xi] L_(q)) for p, q = 1..6."""
    C = info_xi_sequence(s, t, exact=exact)
    basis = orbit_basis(t)[:6]
    if exact:
        basis = [B.astype(np.int64).astype(object) for B in basis]
    out = np.empty((6, 6), dtype=object if exact else float)
    for p in range(6):
        left = basis[p].T @ C
        for q in range(6):
            out[p, q] = np.trace(left @ basis[q])
    return out


def all_coefficients(k: int, t: int, classes: Sequence[Sequence_] | None = None):
    if classes is None:
        classes = enumerate_classes(k, t)
    return [coefficients(c, t) for c in classes]


def h_value(tbl: CoefficientTable, gamma) -> float:
    return tbl.value(gamma)


def h_gradient(tbl: CoefficientTable, gamma) -> np.ndarray:
    return tbl.gradient(gamma)


def class_images(cls: Sequence[int], t: int) -> list[Sequence_]:
    """All distinct relabellings of the class into labels 1..t, sorted."""
    canon = canonicalize(cls)
    m = block_count(canon)
    if m > t:
        raise DesignError(f"class {canon} has {m} blocks but t = {t}")
    images = [tuple(img[x - 1] for x in canon) for img in itertools.permutations(range(1, t + 1), m)]
    return sorted(images)


def symmetric_design_from_class(cls: Sequence[int], t: int) -> ExactDesign:
    """One subject per distinct relabelling of the class."""
    return ExactDesign(np.array(class_images(cls, t)), t)


def symmetric_design(class_props: dict[Sequence_, float | Fraction], k: int, t: int, n: float = 1) -> ApproximateDesign:
    """Approximate symmetric design spreading each class mass over its images."""
    props: dict[Sequence_, float | Fraction] = {}
    for cls, p in class_props.items():
        if p == 0:
            continue
        images = class_images(cls, t)
        share = p / len(images) if not isinstance(p, (int, Fraction)) else Fraction(p) / len(images)
        for s in images:
            props[s] = props.get(s, 0) + share
    return ApproximateDesign(props, k, t, n)


def symmetrize(d: Design) -> ApproximateDesign:
    """Orbit average of the proportions over all label permutations."""
    if isinstance(d, ExactDesign):
        d = d.to_approximate()
    mass: dict[Sequence_, float | Fraction] = {}
    for s, p in d.items():
        c = canonicalize(s)
        mass[c] = mass.get(c, 0) + p
    return symmetric_design(mass, d.k, d.t, d.n)


def class_proportions(d: Design) -> dict[Sequence_, float | Fraction]:
    if isinstance(d, ExactDesign):
        d = d.to_approximate()
    mass: dict[Sequence_, float | Fraction] = {}
    for s, p in d.items():
        c = canonicalize(s)
        mass[c] = mass.get(c, 0) + p
    return dict(sorted(mass.items()))


def is_symmetric(d: Design, tol: float = 1e-12) -> bool:
    if isinstance(d, ExactDesign):
        d = d.to_approximate()
    sym = symmetrize(d)
    keys = set(sym.proportions) | set(d.proportions)
    return all(abs(sym.proportions.get(s, 0) - d.proportions.get(s, 0)) <= tol for s in keys)


@dataclass(frozen=True)
class AutomorphismReport:
    order: int
    transitive: bool
    doubly_transitive: bool
    generators: list[tuple[int, ...]]
    elements: np.ndarray  # (order, t) array of perm images


def _row_codes(rows: np.ndarray, base: int) -> np.ndarray:
    k = rows.shape[-1]
    weights = base ** np.arange(k - 1, -1, -1, dtype=np.int64)
    return rows @ weights


def automorphism_group(d: ExactDesign, chunk: int = 4096) -> AutomorphismReport:
    """Label permutations that map the multiset of subject rows to itself."""
    t = d.t
    if t > MAX_AUTOMORPHISM_T:
        raise DesignError(
            f"automorphism search is limited to t <= {MAX_AUTOMORPHISM_T} (got t = {t})"
        )
    base = t + 1
    target = np.sort(_row_codes(d.rows, base))
    perms = np.array(list(itertools.permutations(range(1, t + 1))), dtype=np.int64)
    lookup = np.concatenate([np.zeros((len(perms), 1), dtype=np.int64), perms], axis=1)
    keep = []
    for start in range(0, len(perms), chunk):
        lk = lookup[start : start + chunk]
        mapped = lk[:, d.rows]  # (P, n, k)
        codes = np.sort(_row_codes(mapped, base), axis=1)
        keep.append(np.all(codes == target, axis=1))
    group = perms[np.concatenate(keep)]

    images_of_1 = set(group[:, 0].tolist())
    transitive = len(images_of_1) == t
    pairs = set(map(tuple, group[:, :2].tolist()))
    doubly = transitive and len(pairs) == t * (t - 1)
    return AutomorphismReport(
        order=len(group),
        transitive=transitive,
        doubly_transitive=doubly,
        generators=_generators(group),
        elements=group,
    )


def _compose(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    # (a o b)(u) = a(b(u))
    return tuple(a[x - 1] for x in b)


def _closure(gens: list[tuple[int, ...]], t: int) -> set[tuple[int, ...]]:
    ident = tuple(range(1, t + 1))
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for g in frontier:
            for h in gens:
                x = _compose(h, g)
                if x not in seen:
                    seen.add(x)
                    nxt.append(x)
        frontier = nxt
    return seen


def _generators(group: np.ndarray) -> list[tuple[int, ...]]:
    """A small generating set, picked greedily in lexicographic order."""
    elems = [tuple(int(x) for x in g) for g in group]
    if not elems:
        return []
    t = len(elems[0])
    gens: list[tuple[int, ...]] = []
    span = {tuple(range(1, t + 1))}
    for g in elems:
        if len(span) == len(elems):
            break
        if g not in span:
            gens.append(g)
            span = _closure(gens, t)
    return gens


@dataclass(frozen=True)
class StrongBalanceReport:
    first_period: bool
    self_preceded: bool
    other_preceded: bool

    def __bool__(self) -> bool:
        return self.first_period and self.self_preceded and self.other_preceded


def _all_equal(values, tol) -> bool:
    values = list(values)
    if not values:
        return True
    if tol == 0:
        return all(v == values[0] for v in values)
    return max(values) - min(values) <= tol


def check_strong_balance(d: Design, tol: float = 1e-12) -> StrongBalanceReport:
    """Per-period balance conditions on first-period use, self-precedence and
    distinct-pair precedence."""
    if isinstance(d, ExactDesign):
        weighted = [(s, 1) for s in d.sequences()]
        tol = 0
    else:
        weighted = list(d.items())
        if d.is_exact:
            tol = 0
    k, t = d.k, d.t
    zero = 0 if tol == 0 else 0.0
    N = [[[zero] * (t + 1) for _ in range(t + 1)] for _ in range(k)]
    for s, w in weighted:
        prev = 0
        for j, u in enumerate(s):
            N[j][u][prev] += w
            prev = u
    first = _all_equal((N[0][u][0] for u in range(1, t + 1)), tol)
    self_ok = all(_all_equal((N[j][u][u] for u in range(1, t + 1)), tol) for j in range(1, k))
    other_ok = all(
        _all_equal((N[j][u][v] for u in range(1, t + 1) for v in range(1, t + 1) if u != v), tol)
        for j in range(1, k)
    )
    return StrongBalanceReport(first, self_ok, other_ok)


def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    """P_sigma with P[u, v] = 1 iff sigma(u) = v (1-based perm images)."""
    t = len(perm)
    P = np.zeros((t, t))
    for u, v in enumerate(perm):
        P[u, v - 1] = 1.0
    return P


def pair_permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    """P_sigma tensor P_sigma*, acting on the (u, v) coordinates of xi."""
    star = [0] + list(perm)
    P_star = np.zeros((len(star), len(star)))
    for v, img in enumerate(star):
        P_star[v, img] = 1.0
    return np.kron(permutation_matrix(perm), P_star)


def relabel_sequence(s: Sequence[int], perm: Sequence[int]) -> Sequence_:
    return tuple(perm[x - 1] for x in s)


def orbit_sizes(t: int) -> list[int]:
    return [int(B.sum()) for B in orbit_basis(t)]


def n_images(cls: Sequence[int], t: int) -> int:
    m = block_count(canonicalize(cls))
    return math.perm(t, m)


__all__ = [
    "AutomorphismReport",
    "CoefficientTable",
    "StrongBalanceReport",
    "all_coefficients",
    "automorphism_group",
    "canonicalize",
    "check_sequence",
    "check_strong_balance",
    "class_count",
    "class_images",
    "class_proportions",
    "coefficients",
    "coefficients_dense",
    "enumerate_classes",
    "gamma_matrix",
    "h_gradient",
    "h_value",
    "orbit_basis",
    "orbit_of",
    "symmetric_design",
    "symmetric_design_from_class",
    "symmetrize",
]
