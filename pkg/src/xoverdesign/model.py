"""Designs, design matrices and information matrices.

Coordinates of the interaction vector xi are the pairs (u, v) with
u in 1..t (current treatment) and v in 0..t (preceding treatment, 0 for the
first period), sorted lexicographically.  Total effects are the t
coordinates (u, u).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

Sequence_ = tuple[int, ...]

PINV_RTOL = 1e-10


class DesignError(ValueError):
    pass


def check_sequence(s: Sequence[int], t: int) -> Sequence_:
    s = tuple(int(x) for x in s)
    if len(s) < 2:
        raise DesignError(f"sequence {s} needs at least 2 periods")
    if t < 1:
        raise DesignError(f"t must be positive, got {t}")
    for x in s:
        if not 1 <= x <= t:
            raise DesignError(f"label {x} out of range 1..{t}")
    return s


def pair_index(u: int, v: int, t: int) -> int:
    """Position of xi_{uv} in the lexicographic ordering."""
    return (u - 1) * (t + 1) + v


def total_effect_indices(t: int) -> np.ndarray:
    return np.array([pair_index(u, u, t) for u in range(1, t + 1)])


def selector_matrix(t: int) -> np.ndarray:
    """The 0/1 matrix K with phi = K' xi."""
    K = np.zeros((t * (t + 1), t))
    K[total_effect_indices(t), np.arange(t)] = 1.0
    return K


@dataclass(frozen=True)
class ExactDesign:
    """n subjects by k periods; entries are labels in 1..t."""

    rows: np.ndarray
    t: int

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise DesignError("design must be a non-empty 2-d array")
        if rows.shape[1] < 2:
            raise DesignError("design needs at least 2 periods")
        if rows.min() < 1 or rows.max() > self.t:
            raise DesignError(f"labels must lie in 1..{self.t}")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def k(self) -> int:
        return self.rows.shape[1]

    def sequences(self) -> list[Sequence_]:
        return [tuple(int(x) for x in r) for r in self.rows]

    def relabel(self, perm: Sequence[int]) -> "ExactDesign":
        """Apply sigma given as perm[u-1] = sigma(u)."""
        lookup = np.concatenate([[0], np.asarray(perm, dtype=np.int64)])
        return ExactDesign(lookup[self.rows], self.t)

    def to_approximate(self) -> "ApproximateDesign":
        counts: dict[Sequence_, int] = {}
        for s in self.sequences():
            counts[s] = counts.get(s, 0) + 1
        props = {s: Fraction(c, self.n) for s, c in counts.items()}
        return ApproximateDesign(props, self.k, self.t, n=self.n)

    def __eq__(self, other):
        if not isinstance(other, ExactDesign):
            return NotImplemented
        return self.t == other.t and np.array_equal(self.rows, other.rows)

    def __hash__(self):
        return hash((self.t, self.rows.tobytes(), self.rows.shape))


@dataclass(frozen=True)
class ApproximateDesign:
    """Proportions on sequences.  ``n`` is a nominal subject count used to scale
    information matrices (1 gives per-subject values)."""

    proportions: Mapping[Sequence_, float | Fraction]
    k: int
    t: int
    n: float = 1
    _sorted: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        props = {}
        for s, p in self.proportions.items():
            s = check_sequence(s, self.t)
            if len(s) != self.k:
                raise DesignError(f"sequence {s} does not have {self.k} periods")
            if p < 0:
                raise DesignError(f"negative proportion for {s}")
            if p != 0:
                props[s] = props.get(s, 0) + p
        total = sum(props.values())
        exact = all(isinstance(p, (int, Fraction)) for p in props.values())
        if exact and total != 1:
            raise DesignError(f"proportions sum to {total}, not 1")
        if not exact and abs(float(total) - 1.0) > 1e-12:
            raise DesignError(f"proportions sum to {float(total)!r}, not 1")
        object.__setattr__(self, "proportions", props)
        object.__setattr__(self, "_sorted", tuple(sorted(props.items())))

    def items(self):
        """(sequence, proportion) pairs in canonical (lexicographic) order."""
        return self._sorted

    @property
    def is_exact(self) -> bool:
        return all(isinstance(p, (int, Fraction)) for _, p in self._sorted)

    def relabel(self, perm: Sequence[int]) -> "ApproximateDesign":
        props = {tuple(perm[x - 1] for x in s): p for s, p in self._sorted}
        return ApproximateDesign(props, self.k, self.t, self.n)


Design = ExactDesign | ApproximateDesign


def _weighted_sequences(d: Design):
    """Yield (sequence, weight) so that C_d = sum weight * C_s."""
    if isinstance(d, ExactDesign):
        counts: dict[Sequence_, int] = {}
        for s in d.sequences():
            counts[s] = counts.get(s, 0) + 1
        return d.k, d.t, sorted(counts.items())
    n = d.n
    return d.k, d.t, [(s, n * p) for s, p in d.items()]


def design_matrix(s: Sequence[int], t: int) -> np.ndarray:
    """k x t(t+1) incidence matrix: row j marks (s_j, s_{j-1}), s_0 = 0."""
    s = check_sequence(s, t)
    X = np.zeros((len(s), t * (t + 1)))
    prev = 0
    for j, u in enumerate(s):
        X[j, pair_index(u, prev, t)] = 1.0
        prev = u
    return X


def centering_matrix(k: int, exact: bool = False) -> np.ndarray:
    if k < 1:
        raise DesignError("k must be at least 1")
    if exact:
        Q = np.empty((k, k), dtype=object)
        for i in range(k):
            for j in range(k):
                Q[i, j] = Fraction(int(i == j)) - Fraction(1, k)
        return Q
    return np.eye(k) - np.full((k, k), 1.0 / k)


def info_xi_sequence(s: Sequence[int], t: int, exact: bool = False) -> np.ndarray:
    """C_s[xi] = X_s' Q_k X_s."""
    X = design_matrix(s, t)
    k = X.shape[0]
    if not exact:
        colsum = X.sum(axis=0)
        return X.T @ X - np.outer(colsum, colsum) / k
    Xi = X.astype(np.int64)
    counts = Xi.T @ Xi
    colsum = Xi.sum(axis=0)
    outer = np.outer(colsum, colsum)
    C = np.empty(counts.shape, dtype=object)
    for idx in np.ndindex(C.shape):
        C[idx] = Fraction(int(counts[idx])) - Fraction(int(outer[idx]), k)
    return C


def info_xi_design(d: Design, exact: bool = False) -> np.ndarray:
    """C_d[xi] = sum over sequences of (count or n * proportion) C_s[xi]."""
    k, t, weighted = _weighted_sequences(d)
    dim = t * (t + 1)
    if exact:
        C = np.full((dim, dim), Fraction(0), dtype=object)
        for s, w in weighted:
            C = C + Fraction(w) * info_xi_sequence(s, t, exact=True)
        return C
    C = np.zeros((dim, dim))
    for s, w in weighted:
        C += float(w) * info_xi_sequence(s, t)
    return C


def pinv_psd(A: np.ndarray, rtol: float = PINV_RTOL) -> np.ndarray:
    """Spectral pseudoinverse of a symmetric psd matrix.

    Eigenvalues below rtol * max(largest eigenvalue, 1) count as zero.
    """
    if A.size == 0:
        return A.copy()
    w, V = np.linalg.eigh((A + A.T) / 2)
    cutoff = rtol * max(w.max(initial=0.0), 1.0)
    keep = w > cutoff
    return (V[:, keep] / w[keep]) @ V[:, keep].T


def _check_psd(C: np.ndarray, what: str, tol: float = 1e-8) -> None:
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise DesignError(f"{what} must be square")
    scale = max(1.0, float(np.abs(C).max(initial=0.0)))
    if np.abs(C - C.T).max(initial=0.0) > tol * scale:
        raise DesignError(f"{what} is not symmetric")
    if C.shape[0] and np.linalg.eigvalsh((C + C.T) / 2).min() < -tol * scale:
        raise DesignError(f"{what} is not positive semidefinite")


def schur_onto(C: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Generalized Schur complement of C onto the coordinates ``keep``.

    Equals the Loewner minimum of L'CL over L with identity rows at ``keep``.
    """
    mask = np.zeros(C.shape[0], dtype=bool)
    mask[keep] = True
    rest = np.flatnonzero(~mask)
    C_dd = C[np.ix_(keep, keep)]
    C_dr = C[np.ix_(keep, rest)]
    C_rr = C[np.ix_(rest, rest)]
    S = C_dd - C_dr @ pinv_psd(C_rr) @ C_dr.T
    return (S + S.T) / 2


def info_phi(C_xi: np.ndarray) -> np.ndarray:
    """Information matrix for the total effects from C_d[xi]."""
    C_xi = np.asarray(C_xi, dtype=float)
    dim = C_xi.shape[0]
    t = int(round((-1 + np.sqrt(1 + 4 * dim)) / 2))
    if t * (t + 1) != dim:
        raise DesignError(f"dimension {dim} is not of the form t(t+1)")
    _check_psd(C_xi, "C[xi]")
    return schur_onto(C_xi, total_effect_indices(t))


def info_theta_design(d: Design) -> np.ndarray:
    """Information matrix for (xi, period effects), dimension t(t+1)+k."""
    k, t, weighted = _weighted_sequences(d)
    dim = t * (t + 1)
    M = np.zeros((dim + k, dim + k))
    Q = centering_matrix(k)
    for s, w in weighted:
        X = design_matrix(s, t)
        QX = Q @ X
        w = float(w)
        M[:dim, :dim] += w * (X.T @ QX)
        M[:dim, dim:] += w * QX.T
        M[dim:, :dim] += w * QX
        M[dim:, dim:] += w * Q
    return M


def info_phi_periods(M: np.ndarray, t: int) -> np.ndarray:
    """Total-effect information under the model with period effects."""
    M = np.asarray(M, dtype=float)
    if M.shape[0] < t * (t + 1):
        raise DesignError("matrix too small for t")
    _check_psd(M, "C[theta]")
    return schur_onto(M, total_effect_indices(t))


def phi_matrix(d: Design, periods: bool = False) -> np.ndarray:
    """Convenience: C_d[phi] (or its period-model analogue) of a design."""
    if periods:
        return info_phi_periods(info_theta_design(d), d.t)
    return info_phi(info_xi_design(d))


def sequence_key(s: Iterable[int], t: int) -> str:
    """Canonical text form: digits for t <= 9, comma separated otherwise."""
    s = tuple(s)
    if t <= 9:
        return "".join(str(x) for x in s)
    return ",".join(str(x) for x in s)


def parse_sequence_key(key: str, t: int) -> Sequence_:
    key = key.strip()
    if "," in key or t > 9:
        return tuple(int(x) for x in key.split(","))
    return tuple(int(c) for c in key)
