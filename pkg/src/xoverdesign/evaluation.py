"""Efficiency of designs relative to the optimal approximate design."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .model import DesignError, ExactDesign, phi_matrix
from .optimizer import MaximinSolution

ESTIMABLE_RTOL = 1e-9


@dataclass
class EfficiencyReport:
    trace_eff: float
    a_eff: float
    d_eff: float
    e_eff: float
    completely_symmetric: bool
    estimable: bool
    contrast_eigenvalues: list[float]
    trace: float
    periods_model: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def contrast_basis(t: int) -> np.ndarray:
    """Fixed orthonormal basis (t x (t-1)) of the complement of the ones vector."""
    H = np.zeros((t, t - 1))
    for j in range(1, t):
        H[:j, j - 1] = 1.0
        H[j, j - 1] = -j
        H[:, j - 1] /= np.sqrt(j * (j + 1))
    return H


def contrast_eigenvalues(C: np.ndarray) -> np.ndarray:
    H = contrast_basis(C.shape[0])
    return np.linalg.eigvalsh(H.T @ C @ H)


def is_completely_symmetric(C: np.ndarray, tol: float | None = None) -> bool:
    """True if C = a I + b J up to ``tol`` (default 1e-9 times the max-abs entry)."""
    C = np.asarray(C, dtype=float)
    t = C.shape[0]
    if tol is None:
        tol = 1e-9 * max(float(np.abs(C).max(initial=0.0)), 1e-300)
    diag = np.diag(C)
    off = C[~np.eye(t, dtype=bool)]
    if np.abs(diag - diag.mean()).max() > tol:
        return False
    return bool(off.size == 0 or np.abs(off - off.mean()).max() <= tol)


def evaluate(d: ExactDesign, optimum: MaximinSolution, periods: bool = False) -> EfficiencyReport:
    """A-, D-, E- and trace efficiencies against the completely symmetric
    optimum n h* / (t - 1) Q_t."""
    if (d.k, d.t) != (optimum.k, optimum.t):
        raise DesignError(
            f"design has (k, t) = ({d.k}, {d.t}) but the optimum is for ({optimum.k}, {optimum.t})"
        )
    t = d.t
    C = phi_matrix(d, periods=periods)
    lam = contrast_eigenvalues(C)
    ref = d.n * optimum.h_star / (t - 1)
    estimable = bool(lam.min() > ESTIMABLE_RTOL * ref)
    trace_eff = float(lam.sum() / ((t - 1) * ref))
    if estimable:
        a = float((t - 1) / np.sum(1.0 / lam) / ref)
        dd = float(np.exp(np.mean(np.log(lam))) / ref)
        e = float(lam.min() / ref)
    else:
        a = dd = e = trace_eff = 0.0
    return EfficiencyReport(
        trace_eff=trace_eff,
        a_eff=a,
        d_eff=dd,
        e_eff=e,
        completely_symmetric=is_completely_symmetric(C),
        estimable=estimable,
        contrast_eigenvalues=[float(x) for x in lam],
        trace=float(np.trace(C)),
        periods_model=periods,
    )


@dataclass
class PeriodComparison:
    trace_plain: float
    trace_periods: float
    equal: bool
    max_abs_diff: float


def compare_period_models(d: ExactDesign, rtol: float = 1e-8) -> PeriodComparison:
    C = phi_matrix(d)
    Cp = phi_matrix(d, periods=True)
    diff = float(np.abs(C - Cp).max())
    scale = max(float(np.abs(C).max()), 1.0)
    return PeriodComparison(float(np.trace(C)), float(np.trace(Cp)), bool(diff <= rtol * scale), diff)
