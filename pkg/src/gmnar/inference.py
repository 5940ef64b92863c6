"""Standard errors, confidence intervals, and Wald p-values for the fitted
coefficients.

The estimator is asymptotically normal with covariance sigma^2 times the
inverse of the scaled expected Gram matrix; the rate scalings cancel in the
finite-sample plug-in, leaving cov(theta_hat) = sigma2_hat * M_hat^{-1} with
M_hat assembled at the fitted memberships.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .estimate import FitResult, assemble_normal_equations
from .model import MatrixSeries, NetworkPair

__all__ = ["InferenceResult", "covariance", "confidence_intervals", "infer"]


@dataclass
class InferenceResult:
    theta_hat: np.ndarray
    se: np.ndarray
    cov: np.ndarray
    sigma2_hat: float
    names: list
    level: float = 0.95
    ci_lower: np.ndarray = None
    ci_upper: np.ndarray = None
    balance_ratio: float = 1.0

    def p_values(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(self.se > 0, self.theta_hat / self.se, np.inf)
        return 2.0 * norm.sf(np.abs(z))

    def to_report(self) -> dict:
        pvals = self.p_values()
        return {
            "sigma2_hat": self.sigma2_hat,
            "level": self.level,
            "balance_ratio": self.balance_ratio,
            "parameters": [
                {"name": n, "estimate": float(est), "se": float(se),
                 "ci_lower": float(lo), "ci_upper": float(hi),
                 "p_value": float(p)}
                for n, est, se, lo, hi, p in zip(
                    self.names, self.theta_hat, self.se,
                    self.ci_lower, self.ci_upper, pvals)
            ],
        }


def parameter_names(G: int, H: int, p1: int, p2: int) -> list:
    """Names in the canonical flat layout."""
    names = []
    for g in range(1, G + 1):
        names.append(f"lambda_{g}")
        names.extend(f"zeta_{g},{k}" for k in range(1, p1 + 1))
    for h in range(1, H + 1):
        names.append(f"gamma_{h}")
        names.extend(f"delta_{h},{k}" for k in range(1, p2 + 1))
    for h in range(1, H + 1):
        for g in range(1, G + 1):
            names.append(f"alpha_{g},{h}")
    return names


def covariance(fit: FitResult, data: MatrixSeries, nets: NetworkPair
               ) -> np.ndarray:
    """Plug-in covariance sigma2_hat * M_hat^{-1}; pseudo-inverse with a
    warning when M_hat is singular."""
    ne = assemble_normal_equations(data, nets, fit.assign)
    M = ne.M
    try:
        Minv = np.linalg.inv(M)
        if not np.all(np.isfinite(Minv)):
            raise np.linalg.LinAlgError
        # reject wildly ill-conditioned solves
        if np.linalg.cond(M) > 1e12:
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        warnings.warn("singular Gram matrix; using pseudo-inverse for SEs")
        Minv = np.linalg.pinv(M, rcond=1e-12)
    cov = fit.sigma2_hat * Minv
    return 0.5 * (cov + cov.T)


def confidence_intervals(inf: InferenceResult, level: float
                         ) -> InferenceResult:
    """Normal-quantile intervals theta_hat -+ z_{(1+level)/2} * se."""
    if not (0.0 < level < 1.0):
        raise ValueError("level must be in (0, 1)")
    z = norm.ppf(0.5 * (1.0 + level))
    inf.level = level
    inf.ci_lower = inf.theta_hat - z * inf.se
    inf.ci_upper = inf.theta_hat + z * inf.se
    return inf


def infer(fit: FitResult, data: MatrixSeries, nets: NetworkPair,
          level: float = 0.95) -> InferenceResult:
    cov = covariance(fit, data, nets)
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    p = fit.params
    sizes = np.concatenate([fit.assign.row_sizes(), fit.assign.col_sizes()])
    sizes = sizes[sizes > 0]
    balance = float(sizes.max() / sizes.min()) if sizes.size else float("nan")
    inf = InferenceResult(
        theta_hat=p.flatten(), se=se, cov=cov, sigma2_hat=fit.sigma2_hat,
        names=parameter_names(p.G, p.H, p.p1, p.p2),
        balance_ratio=balance)
    return confidence_intervals(inf, level)
