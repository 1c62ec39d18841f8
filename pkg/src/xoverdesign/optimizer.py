"""Maximin search for optimal class proportions.

Step 1 minimises h*(gamma) = max_l h_l(gamma) with a cutting-plane loop over
full quadratic pieces; each restricted problem is warm-started by SLSQP on
the epigraph form and polished by Newton's method on the KKT system of the
current active set.  Steps 2-4 read off the active classes, solve for the
proportions and certify the result by convex duality.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import minimize, nnls

from .model import Sequence_, pinv_psd
from .symmetry import N_GAMMA, CoefficientTable, all_coefficients, enumerate_classes

log = logging.getLogger(__name__)

ACTIVE_RTOL = 1e-7
KKT_TOL = 1e-8
DUAL_TOL = 1e-9
DOMINANCE_RTOL = 1e-9
MAX_ITER = 10_000
DENOMINATOR_CAP = 10**6


class OptimizationError(RuntimeError):
    pass


class CertificationError(RuntimeError):
    def __init__(self, check: str, detail: str):
        super().__init__(f"certificate check '{check}' failed: {detail}")
        self.check = check


@dataclass
class Certificate:
    max_inactive_gap: float  # max_l (h_l(gamma*) - h*) / h*, over all classes
    kkt_residual: float
    min_proportion: float
    dual_value: float
    dual_gap: float
    proportion_sum: float
    passed: bool = True
    failed_check: str | None = None


@dataclass
class ExactSolution:
    gamma: tuple[Fraction, ...]
    h_star: Fraction
    proportions: dict[Sequence_, Fraction]
    verified: bool


@dataclass
class MaximinSolution:
    k: int
    t: int
    gamma_star: np.ndarray
    h_star: float
    active: list[tuple[Sequence_, float]]
    degeneracy: int = 0
    certificate: Certificate | None = None
    exact: ExactSolution | None = None
    settings: dict = field(default_factory=dict)

    @property
    def proportions(self) -> dict[Sequence_, float]:
        return dict(self.active)

    def proportion(self, cls: Sequence[int]) -> float:
        return self.proportions.get(tuple(cls), 0.0)


class _Stack:
    """All coefficient tables stacked for vectorised evaluation."""

    def __init__(self, tables: Sequence[CoefficientTable]):
        if not tables:
            raise OptimizationError("no coefficient tables given")
        ts = {tb.t for tb in tables}
        if len(ts) != 1:
            raise OptimizationError("tables mix different t")
        self.tables = list(tables)
        self.C = np.stack([tb.c for tb in tables])  # (N, 6, 6)

    def __len__(self):
        return len(self.tables)

    def values(self, gamma, idx=None) -> np.ndarray:
        g = np.concatenate([[1.0], gamma])
        C = self.C if idx is None else self.C[idx]
        return np.einsum("i,nij,j->n", g, C, g)

    def gradients(self, gamma, idx=None) -> np.ndarray:
        g = np.concatenate([[1.0], gamma])
        C = self.C if idx is None else self.C[idx]
        return 2.0 * np.einsum("nij,j->ni", C[:, 1:, :], g)


def hstar_value(tables: Sequence[CoefficientTable], gamma) -> float:
    return float(_Stack(tables).values(np.asarray(gamma, dtype=float)).max())


def _slsqp(stack: _Stack, idx: np.ndarray, gamma0: np.ndarray) -> tuple[np.ndarray, float]:
    z0 = float(stack.values(gamma0, idx).max())
    x0 = np.concatenate([gamma0, [z0]])

    def cons(x):
        return x[-1] - stack.values(x[:-1], idx)

    def cons_jac(x):
        J = np.empty((len(idx), N_GAMMA + 1))
        J[:, :-1] = -stack.gradients(x[:-1], idx)
        J[:, -1] = 1.0
        return J

    res = minimize(
        lambda x: x[-1],
        x0,
        jac=lambda x: np.eye(N_GAMMA + 1)[-1],
        constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
        method="SLSQP",
        options={"maxiter": 500, "ftol": 1e-14},
    )
    gamma = res.x[:-1]
    return gamma, float(stack.values(gamma, idx).max())


def _proportions_nnls(G: np.ndarray) -> tuple[np.ndarray, float]:
    """Nonnegative pi with sum 1 and sum pi_l grad_l close to 0.

    G has one gradient per row."""
    m = G.shape[0]
    A = np.vstack([G.T, np.ones((1, m))])
    b = np.zeros(A.shape[0])
    b[-1] = 1.0
    pi, resid = nnls(A, b, maxiter=50 * max(m, 10))
    return pi, float(resid)


def _newton_kkt(stack: _Stack, idx: np.ndarray, gamma: np.ndarray, iters: int = 50):
    """Newton on: h_l(gamma) = z (l in idx), sum pi_l grad_l = 0, sum pi = 1.

    Returns (gamma, z, pi, residual); classes whose multiplier turns negative
    are dropped from idx along the way."""
    idx = np.array(idx)
    vals = stack.values(gamma, idx)
    z = float(vals.max())
    pi, _ = _proportions_nnls(stack.gradients(gamma, idx))
    resid = np.inf
    for _ in range(iters):
        m = len(idx)
        vals = stack.values(gamma, idx)
        grads = stack.gradients(gamma, idx)
        F = np.concatenate([vals - z, grads.T @ pi, [pi.sum() - 1.0]])
        resid = float(np.abs(F).max())
        if resid < 1e-14 * max(1.0, abs(z)):
            break
        n = N_GAMMA + 1 + m
        J = np.zeros((m + N_GAMMA + 1, n))
        J[:m, :N_GAMMA] = grads
        J[:m, N_GAMMA] = -1.0
        hess = 2.0 * np.einsum("n,nij->ij", pi, stack.C[idx][:, 1:, 1:])
        J[m : m + N_GAMMA, :N_GAMMA] = hess
        J[m : m + N_GAMMA, N_GAMMA + 1 :] = grads.T
        J[-1, N_GAMMA + 1 :] = 1.0
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        gamma = gamma + step[:N_GAMMA]
        z = z + step[N_GAMMA]
        pi = pi + step[N_GAMMA + 1 :]
        if pi.min() < -1e-10:
            keep = pi > 1e-12
            if not keep.any():
                break
            idx, pi = idx[keep], pi[keep]
            pi = pi / pi.sum()
    return gamma, z, pi, idx, resid


def minimize_hstar(
    tables: Sequence[CoefficientTable],
    active_rtol: float = ACTIVE_RTOL,
    seed: int = 0,
) -> tuple[np.ndarray, float]:
    """Step 1: a minimiser of max_l h_l(gamma) and the minimum value."""
    gamma, z, *_ = _minimize(_Stack(tables), active_rtol, seed)
    return gamma, z


def _minimize(stack: _Stack, active_rtol: float, seed: int):
    starts = [np.zeros(N_GAMMA)]
    rng = np.random.default_rng(seed)
    starts += [rng.uniform(-2.0, 2.0, N_GAMMA) for _ in range(8)]
    best = None
    for gamma0 in starts:
        try:
            out = _cutting_plane(stack, gamma0, active_rtol)
        except OptimizationError as exc:
            log.debug("start %s failed: %s", gamma0, exc)
            continue
        if best is None or out[1] < best[1] - 1e-13:
            best = out
        if out[4] < 1e-10:
            break
    if best is None:
        raise OptimizationError("no start converged")
    return best


def _cutting_plane(stack: _Stack, gamma: np.ndarray, active_rtol: float):
    all_vals = stack.values(gamma)
    order = np.argsort(-all_vals, kind="stable")
    work = set(order[: min(len(stack), 2 * N_GAMMA + 2)].tolist())
    for it in range(MAX_ITER):
        idx = np.array(sorted(work))
        gamma, z = _slsqp(stack, idx, gamma)
        vals = stack.values(gamma, idx)
        act = idx[vals >= z - max(abs(z), 1.0) * 1e-6]
        gamma, z, pi, act, resid = _newton_kkt(stack, act, gamma)
        all_vals = stack.values(gamma)
        z = float(all_vals.max())
        kkt = _kkt_residual(stack, gamma, z, active_rtol)
        violators = np.flatnonzero(all_vals > z * (1 + 1e-12) + 1e-14)
        fresh = [i for i in np.argsort(-all_vals, kind="stable")[:8] if i not in work]
        if kkt < 1e-10 and not len(set(violators.tolist()) - set(act.tolist())):
            return gamma, z, act, pi, kkt
        if not fresh:
            if kkt < KKT_TOL:
                return gamma, z, act, pi, kkt
            raise OptimizationError(f"stalled with KKT residual {kkt:.2e}")
        work.update(int(i) for i in fresh)
    raise OptimizationError("iteration cap reached")


def _kkt_residual(stack: _Stack, gamma, z, active_rtol) -> float:
    vals = stack.values(gamma)
    act = np.flatnonzero(vals >= z * (1 - active_rtol))
    pi, resid = _proportions_nnls(stack.gradients(gamma, act))
    return resid


def active_classes(
    tables: Sequence[CoefficientTable], gamma_star, h_star: float, tol: float = ACTIVE_RTOL
) -> list[Sequence_]:
    """Step 2: classes whose quadratic attains h* at gamma*."""
    vals = _Stack(tables).values(np.asarray(gamma_star, dtype=float))
    out = [tb.cls for tb, v in zip(tables, vals) if v >= h_star * (1 - tol)]
    if not out:
        raise OptimizationError("empty active set")
    return out


def solve_proportions(
    active: Sequence[CoefficientTable], gamma_star, tol: float = KKT_TOL
) -> tuple[dict[Sequence_, float], int]:
    """Step 3: nonnegative pi summing to one with sum pi_l grad h_l = 0.

    Returns the proportions and the dimension of the solution set.  When that
    dimension is positive the minimum-norm solution is returned."""
    gamma_star = np.asarray(gamma_star, dtype=float)
    G = np.array([tb.gradient(gamma_star) for tb in active])
    pi, resid = _proportions_nnls(G)
    if resid > tol:
        raise OptimizationError(
            f"no nonnegative proportions (residual {resid:.2e}); active set is probably wrong"
        )
    A = np.vstack([G.T, np.ones((1, len(active)))])
    rank = np.linalg.matrix_rank(A, tol=1e-9)
    dim = int(len(active) - rank)
    if dim > 0:
        pi = _min_norm_nonneg(A, pi)
    pi = np.clip(pi, 0.0, None)
    pi = pi / pi.sum()
    return {tb.cls: float(p) for tb, p in zip(active, pi)}, dim


def _min_norm_nonneg(A: np.ndarray, pi0: np.ndarray) -> np.ndarray:
    b = np.zeros(A.shape[0])
    b[-1] = 1.0
    res = minimize(
        lambda x: x @ x,
        pi0,
        jac=lambda x: 2 * x,
        bounds=[(0.0, None)] * len(pi0),
        constraints=[{"type": "eq", "fun": lambda x: A @ x - b, "jac": lambda x: A}],
        method="SLSQP",
        options={"ftol": 1e-15, "maxiter": 500},
    )
    if res.success and np.abs(A @ res.x - b).max() < KKT_TOL:
        return res.x
    return pi0


def weighted_minimum(tables: Sequence[CoefficientTable], props: Sequence[float]) -> tuple[np.ndarray, float]:
    """min over gamma of sum_l pi_l h_l(gamma)."""
    c = sum(p * tb.c for tb, p in zip(tables, props))
    gamma = -pinv_psd(c[1:, 1:]) @ c[1:, 0]
    g = np.concatenate([[1.0], gamma])
    return gamma, float(g @ c @ g)


def certify(sol: MaximinSolution, tables: Sequence[CoefficientTable], raise_on_fail: bool = True) -> Certificate:
    """Step 4 check: dominance, stationarity, nonnegativity and dual value."""
    stack = _Stack(tables)
    gamma = np.asarray(sol.gamma_star, dtype=float)
    h = sol.h_star
    vals = stack.values(gamma)
    gap = float((vals.max() - h) / max(abs(h), 1e-300))
    by_cls = {tb.cls: tb for tb in tables}
    used = [(by_cls[c], p) for c, p in sol.active if c in by_cls]
    grads = np.array([tb.gradient(gamma) for tb, _ in used]) if used else np.zeros((0, N_GAMMA))
    pis = np.array([p for _, p in used])
    kkt = float(np.abs(pis @ grads).max()) if used else np.inf
    min_p = float(min((p for _, p in sol.active), default=-np.inf))
    psum = float(sum(p for _, p in sol.active))
    if used:
        _, dual = weighted_minimum([tb for tb, _ in used], pis)
    else:
        dual = 0.0
    cert = Certificate(
        max_inactive_gap=gap,
        kkt_residual=kkt,
        min_proportion=min_p,
        dual_value=dual,
        dual_gap=abs(dual - h),
        proportion_sum=psum,
    )
    checks = [
        ("dominance", gap <= DOMINANCE_RTOL, f"max h_l exceeds h* by {gap:.3e} (relative)"),
        ("stationarity", kkt <= KKT_TOL, f"residual {kkt:.3e}"),
        ("nonnegativity", min_p >= 0.0, f"min proportion {min_p:.3e}"),
        ("normalisation", abs(psum - 1.0) <= 1e-10, f"proportions sum to {psum!r}"),
        ("dual_value", abs(dual - h) <= DUAL_TOL * max(1.0, abs(h)), f"dual {dual!r} vs h* {h!r}"),
    ]
    for name, ok, detail in checks:
        if not ok:
            cert.passed = False
            cert.failed_check = name
            if raise_on_fail:
                raise CertificationError(name, detail)
            break
    return cert


def solve(
    k: int,
    t: int,
    classes: Sequence[Sequence_] | None = None,
    active_rtol: float = ACTIVE_RTOL,
    rational: bool = False,
    certify_result: bool = True,
) -> MaximinSolution:
    """Run the four steps for k periods and t treatments."""
    if classes is None:
        classes = enumerate_classes(k, t)
    tables = all_coefficients(k, t, classes)
    stack = _Stack(tables)
    gamma, z, act, pi, kkt = _minimize(stack, active_rtol, seed=0)
    h_star = float(stack.values(gamma).max())
    tol = active_rtol
    while True:
        names = set(active_classes(tables, gamma, h_star, tol))
        act_tables = [tb for tb in tables if tb.cls in names]
        try:
            props, dim = solve_proportions(act_tables, gamma)
            break
        except OptimizationError:
            if tol > 1e-3:
                raise
            tol *= 10
    active = [(c, p) for c, p in props.items() if p > 0]
    sol = MaximinSolution(
        k=k,
        t=t,
        gamma_star=gamma,
        h_star=h_star,
        active=active,
        degeneracy=dim,
        settings={"active_rtol": active_rtol, "rational": rational, "n_classes": len(tables)},
    )
    if certify_result:
        sol.certificate = certify(sol, tables)
    if rational:
        sol.exact = rationalize(sol, tables)
    return sol


def single_class_efficiency(tbl: CoefficientTable, h_star: float) -> float:
    """Trace efficiency of the symmetric design generated by one class."""
    return tbl.minimize()[1] / h_star


# -- exact rational verification --------------------------------------------


def _solve_exact(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    """One solution of A x = b by Gauss-Jordan elimination; free variables 0."""
    rows, cols = len(A), len(A[0])
    M = [list(A[i]) + [b[i]] for i in range(rows)]
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = 1 / M[r][c]
        M[r] = [x * inv for x in M[r]]
        for i in range(rows):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [x - f * y for x, y in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    if any(all(x == 0 for x in M[i][:cols]) and M[i][cols] != 0 for i in range(rows)):
        return None
    x = [Fraction(0)] * cols
    for i, c in enumerate(pivots):
        x[c] = M[i][cols]
    return x


def _exact_check(tables, props: dict[Sequence_, Fraction], gamma: list[Fraction]):
    by_cls = {tb.cls: tb for tb in tables}
    act = [by_cls[c] for c in props]
    hvals = [tb.value_exact(gamma) for tb in act]
    if len(set(hvals)) != 1:
        return None
    h = hvals[0]
    stat = [sum(props[tb.cls] * tb.gradient_exact(gamma)[p] for tb in act) for p in range(N_GAMMA)]
    if any(x != 0 for x in stat):
        return None
    if sum(props.values()) != 1 or any(p <= 0 for p in props.values()):
        return None
    if any(tb.value_exact(gamma) > h for tb in tables):
        return None
    return h


def rationalize(
    sol: MaximinSolution, tables: Sequence[CoefficientTable], cap: int = DENOMINATOR_CAP
) -> ExactSolution:
    """Round to small-denominator rationals and verify exactly."""
    props = {c: Fraction(p).limit_denominator(cap) for c, p in sol.active}
    total = sum(props.values())
    gamma_num = [Fraction(float(x)).limit_denominator(cap) for x in sol.gamma_star]
    fallback = ExactSolution(tuple(gamma_num), Fraction(sol.h_star).limit_denominator(cap), props, False)
    if total != 1 or any(p <= 0 for p in props.values()):
        return fallback
    by_cls = {tb.cls: tb for tb in tables}
    candidates = [gamma_num]
    A = [[Fraction(0)] * N_GAMMA for _ in range(N_GAMMA)]
    b = [Fraction(0)] * N_GAMMA
    for c, p in props.items():
        ex = by_cls[c].exact()
        for i in range(N_GAMMA):
            b[i] -= p * ex[i + 1][0]
            for j in range(N_GAMMA):
                A[i][j] += p * ex[i + 1][j + 1]
    g = _solve_exact(A, b)
    if g is not None:
        candidates.append(g)
    for gamma in candidates:
        h = _exact_check(tables, props, gamma)
        if h is not None and abs(float(h) - sol.h_star) <= 1e-8 * max(1.0, sol.h_star):
            return ExactSolution(tuple(gamma), h, props, True)
    return fallback
