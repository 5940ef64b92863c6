"""Evaluation statistics for simulation benchmarks: pseudo-distance,
mis-clustering rates, group- and node-wise RMSEs, coverage and selection
proportions."""

from __future__ import annotations

from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .model import GroupAssignment, ParameterSet

__all__ = [
    "pseudo_distance",
    "misclustering_permutation",
    "best_permutation",
    "misclustering_majority",
    "align_params",
    "rmse_groupwise",
    "rmse_nodewise_values",
    "coverage_probability",
    "selection_rate",
]


def pseudo_distance(est: tuple[ParameterSet, GroupAssignment],
                    truth: tuple[ParameterSet, GroupAssignment]) -> float:
    """Average squared distance between the node-expanded coefficient
    tensors: (1 / N1 N2) sum_ij ||Theta_hat_ij - Theta_ij||^2."""
    ep, ea = est
    tp, ta = truth
    if (ea.N1, ea.N2) != (ta.N1, ta.N2):
        raise ValueError("mismatched panel dimensions")
    if (ep.p1, ep.p2) != (tp.p1, tp.p2):
        raise ValueError("mismatched covariate dimensions")
    diff = ep.node_expanded(ea) - tp.node_expanded(ta)
    return float(np.sum(diff * diff) / (ea.N1 * ea.N2))


def _confusion(est: np.ndarray, true: np.ndarray, k_est: int, k_true: int
               ) -> np.ndarray:
    c = np.zeros((k_est, k_true), dtype=np.int64)
    np.add.at(c, (est - 1, true - 1), 1)
    return c


def best_permutation(est: np.ndarray, true: np.ndarray, k: int) -> np.ndarray:
    """Permutation pi (0-based array: pi[est_label-1] = true_label-1)
    maximizing label agreement; exhaustive for k <= 8, Hungarian beyond."""
    est = np.asarray(est)
    true = np.asarray(true)
    if est.shape != true.shape:
        raise ValueError("label vectors must have equal length")
    if (est.min() < 1 or est.max() > k or true.min() < 1 or true.max() > k):
        raise ValueError("label out of range")
    conf = _confusion(est, true, k, k)
    if k <= 8:
        best, best_hits = None, -1
        for perm in permutations(range(k)):
            hits = sum(conf[i, perm[i]] for i in range(k))
            if hits > best_hits:
                best, best_hits = perm, hits
        return np.array(best)
    _, cols = linear_sum_assignment(-conf)
    return cols


def misclustering_permutation(est: np.ndarray, true: np.ndarray, k: int
                              ) -> float:
    """Fraction of mismatched labels under the best group permutation."""
    perm = best_permutation(est, true, k)
    mapped = perm[np.asarray(est) - 1] + 1
    return float(np.mean(mapped != np.asarray(true)))


def misclustering_majority(est: np.ndarray, true: np.ndarray,
                           k_est: int, k_true: int) -> float:
    """Majority-map mis-clustering rate: each estimated group maps to the
    true label of its majority (ties to the smallest true label), then count
    mismatches."""
    est = np.asarray(est)
    true = np.asarray(true)
    conf = _confusion(est, true, k_est, k_true)
    chi = np.argmax(conf, axis=1) + 1  # argmax ties -> smallest index
    mapped = chi[est - 1]
    return float(np.mean(mapped != true))


def align_params(est: ParameterSet, assign: GroupAssignment,
                 true_assign: GroupAssignment
                 ) -> tuple[ParameterSet, GroupAssignment]:
    """Relabel the estimated groups by the mis-clustering-optimal row and
    column permutations so that group g lines up with true group g."""
    rperm = best_permutation(assign.g, true_assign.g, assign.G)
    cperm = best_permutation(assign.h, true_assign.h, assign.H)
    rinv = np.argsort(rperm)
    cinv = np.argsort(cperm)
    params = ParameterSet(
        lam=est.lam[rinv], gamma=est.gamma[cinv],
        alpha=est.alpha[np.ix_(rinv, cinv)],
        zeta=est.zeta[:, rinv], delta=est.delta[:, cinv])
    new_assign = GroupAssignment(
        G=assign.G, H=assign.H,
        g=rperm[assign.g - 1] + 1, h=cperm[assign.h - 1] + 1)
    return params, new_assign


def rmse_groupwise(errors: list[np.ndarray]) -> float:
    """sqrt of the mean (over replicates) of the squared error-vector norms;
    callers align groups with `align_params` before differencing."""
    sq = [float(np.sum(np.asarray(e) ** 2)) for e in errors]
    return float(np.sqrt(np.mean(sq)))


def rmse_nodewise_values(est_values: np.ndarray, true_values: np.ndarray
                         ) -> float:
    """Node-expanded RMSE for one replicate: sqrt of the per-node mean
    squared difference of fitted node-level coefficient vectors (rows are
    nodes).  Alignment-free by construction."""
    est_values = np.atleast_2d(np.asarray(est_values, dtype=float).T).T
    true_values = np.atleast_2d(np.asarray(true_values, dtype=float).T).T
    if est_values.shape != true_values.shape:
        raise ValueError("mismatched shapes")
    n = est_values.shape[0]
    return float(np.sqrt(np.sum((est_values - true_values) ** 2) / n))


def coverage_probability(ci_lower: np.ndarray, ci_upper: np.ndarray,
                         truth: float) -> float:
    """Fraction of replicates whose interval contains the truth."""
    lo = np.asarray(ci_lower, dtype=float)
    hi = np.asarray(ci_upper, dtype=float)
    if lo.shape != hi.shape:
        raise ValueError("bound arrays must match")
    return float(np.mean((lo <= truth) & (truth <= hi)))


def selection_rate(chosen: list[int], candidate: int) -> float:
    """Empirical frequency with which `candidate` was selected."""
    chosen = np.asarray(chosen)
    return float(np.mean(chosen == candidate))
