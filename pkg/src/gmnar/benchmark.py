"""Seeded Monte Carlo replication harness.

Each replicate simulates a panel, fits the model, and (optionally) runs
group-number selection and inference.  Per-replicate seeds derive from the
master seed through SeedSequence hashing, and aggregation is ordered by
replicate index, so results are identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .estimate import FitOptions, fit
from .inference import infer
from .metrics import (align_params, best_permutation, misclustering_majority,
                      misclustering_permutation, pseudo_distance)
from .model import GroupAssignment, ParameterSet
from .select import select_group_numbers
from .simulate import SimConfig, simulate_gmnar

__all__ = ["BenchmarkConfig", "ReplicateOutcome", "run_benchmark",
           "aggregate", "replicate_seed"]


@dataclass(frozen=True)
class BenchmarkConfig:
    scenario: int
    N1: int
    N2: int
    T: int
    reps: int
    seed: int = 0
    network_kind: str = "sbm"
    fit_G: int | None = None     # defaults to the true group count
    fit_H: int | None = None
    n_init: int = 3
    do_select: bool = False
    select_gmin: int = 1
    select_gmax: int = 5
    select_hmin: int = 1
    select_hmax: int = 5
    select_diagonal: bool = False
    select_n_init: int = 2
    noise_sd: float = 1.0
    burn_in: int = 100


@dataclass
class ReplicateOutcome:
    rep: int
    ok: bool
    error: str = ""
    # aligned estimate blocks (lam, gamma, zeta, delta, alpha), flattened
    block_errors: dict = field(default_factory=dict)
    nodewise_sq: dict = field(default_factory=dict)
    coverage: dict = field(default_factory=dict)
    eta1: float = np.nan
    eta2: float = np.nan
    xi1: float = np.nan
    xi2: float = np.nan
    pseudo_dist: float = np.nan
    sigma2_hat: float = np.nan
    converged: bool = False
    q_value: float = np.nan
    chosen_G: int = -1
    chosen_H: int = -1


def replicate_seed(master_seed: int, rep: int) -> int:
    return int(np.random.SeedSequence([master_seed, rep])
               .generate_state(1, np.uint64)[0])


_BLOCKS = ("lam", "gamma", "zeta", "delta", "alpha")


def _block_arrays(p: ParameterSet) -> dict:
    return {"lam": p.lam, "gamma": p.gamma, "zeta": p.zeta,
            "delta": p.delta, "alpha": p.alpha}


def _nodewise_sq(p: ParameterSet, a: GroupAssignment,
                 tp: ParameterSet, ta: GroupAssignment) -> dict:
    """Per-block mean squared node-level coefficient error (no alignment)."""
    gi, hj = a.g - 1, a.h - 1
    tgi, thj = ta.g - 1, ta.h - 1
    out = {}
    out["lam"] = float(np.mean((p.lam[gi] - tp.lam[tgi]) ** 2))
    out["gamma"] = float(np.mean((p.gamma[hj] - tp.gamma[thj]) ** 2))
    out["zeta"] = float(np.mean(
        np.sum((p.zeta.T[gi] - tp.zeta.T[tgi]) ** 2, axis=1)))
    out["delta"] = float(np.mean(
        np.sum((p.delta.T[hj] - tp.delta.T[thj]) ** 2, axis=1)))
    out["alpha"] = float(np.mean(
        (p.alpha[np.ix_(gi, hj)] - tp.alpha[np.ix_(tgi, thj)]) ** 2))
    return out


def _block_se_cov(inf_res, G, H, p1, p2, rinv, cinv):
    """CI bounds rearranged into the alignment used for the truth blocks."""
    dr, dc = 1 + p1, 1 + p2
    idx = []
    for t in range(G):
        s = rinv[t] * dr
        idx.extend(range(s, s + dr))
    off = G * dr
    for t in range(H):
        s = off + cinv[t] * dc
        idx.extend(range(s, s + dc))
    off_a = off + H * dc
    for t2 in range(H):
        for t1 in range(G):
            idx.append(off_a + cinv[t2] * G + rinv[t1])
    idx = np.array(idx)
    return inf_res.ci_lower[idx], inf_res.ci_upper[idx]


def run_replicate(cfg: BenchmarkConfig, rep: int) -> ReplicateOutcome:
    out = ReplicateOutcome(rep=rep, ok=False)
    try:
        seed = replicate_seed(cfg.seed, rep)
        sim = SimConfig(N1=cfg.N1, N2=cfg.N2, T=cfg.T, scenario=cfg.scenario,
                        network_kind=cfg.network_kind, noise_sd=cfg.noise_sd,
                        burn_in=cfg.burn_in, seed=seed)
        data, nets, true_assign, true_params = simulate_gmnar(sim)
        G0, H0 = true_assign.G, true_assign.H
        G = cfg.fit_G or G0
        H = cfg.fit_H or H0
        opts = FitOptions(n_init=cfg.n_init, seed=seed)
        res = fit(data, nets, G, H, opts)
        out.sigma2_hat = res.sigma2_hat
        out.converged = res.converged
        out.q_value = res.q_value
        out.xi1 = misclustering_majority(res.assign.g, true_assign.g, G, G0)
        out.xi2 = misclustering_majority(res.assign.h, true_assign.h, H, H0)
        out.nodewise_sq = _nodewise_sq(res.params, res.assign,
                                       true_params, true_assign)
        if G == G0 and H == H0:
            out.eta1 = misclustering_permutation(res.assign.g, true_assign.g, G)
            out.eta2 = misclustering_permutation(res.assign.h, true_assign.h, H)
            aligned, aligned_assign = align_params(res.params, res.assign,
                                                  true_assign)
            out.pseudo_dist = pseudo_distance(
                (aligned, aligned_assign), (true_params, true_assign))
            est_blocks = _block_arrays(aligned)
            true_blocks = _block_arrays(true_params)
            out.block_errors = {
                k: (est_blocks[k] - true_blocks[k]).ravel().tolist()
                for k in _BLOCKS}
            inf_res = infer(res, data, nets, level=0.95)
            rperm = best_permutation(res.assign.g, true_assign.g, G)
            cperm = best_permutation(res.assign.h, true_assign.h, H)
            lo, hi = _block_se_cov(inf_res, G, H, res.params.p1,
                                   res.params.p2,
                                   np.argsort(rperm), np.argsort(cperm))
            truth_flat = true_params.flatten()
            covered = ((lo <= truth_flat) & (truth_flat <= hi))
            out.coverage = _split_coverage(covered, G, H,
                                           res.params.p1, res.params.p2)
        if cfg.do_select:
            sel = select_group_numbers(
                data, nets, Gmax=cfg.select_gmax, Hmax=cfg.select_hmax,
                Gmin=cfg.select_gmin, Hmin=cfg.select_hmin,
                diagonal=cfg.select_diagonal,
                opts=FitOptions(n_init=cfg.select_n_init, seed=seed))
            out.chosen_G, out.chosen_H = sel.chosen
        out.ok = True
    except Exception as exc:  # partial failures recorded, run continues
        out.error = f"{type(exc).__name__}: {exc}"
    return out


def _split_coverage(covered: np.ndarray, G, H, p1, p2) -> dict:
    dr, dc = 1 + p1, 1 + p2
    row = covered[: G * dr].reshape(G, dr)
    col = covered[G * dr: G * dr + H * dc].reshape(H, dc)
    alpha = covered[G * dr + H * dc:]
    return {
        "lam": row[:, 0].tolist(),
        "zeta": row[:, 1:].ravel().tolist(),
        "gamma": col[:, 0].tolist(),
        "delta": col[:, 1:].ravel().tolist(),
        "alpha": alpha.tolist(),
    }


def run_benchmark(cfg: BenchmarkConfig, threads: int = 1
                  ) -> list[ReplicateOutcome]:
    reps = range(cfg.reps)
    if threads <= 1:
        return [run_replicate(cfg, r) for r in reps]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run_replicate, [cfg] * cfg.reps, reps))


def aggregate(cfg: BenchmarkConfig, outcomes: list[ReplicateOutcome]) -> dict:
    """Collapse replicate outcomes into the benchmark summary metrics."""
    ok = [o for o in outcomes if o.ok]
    agg: dict = {
        "scenario": cfg.scenario, "network": cfg.network_kind,
        "N1": cfg.N1, "N2": cfg.N2, "T": cfg.T,
        "reps": cfg.reps, "reps_ok": len(ok), "seed": cfg.seed,
        "failures": [
            {"rep": o.rep, "error": o.error} for o in outcomes if not o.ok],
    }
    if not ok:
        return agg
    if all(o.block_errors for o in ok):
        for k in _BLOCKS:
            sq = [np.sum(np.square(o.block_errors[k])) for o in ok]
            agg[f"rmse_{k}"] = float(np.sqrt(np.mean(sq)))
        for k in _BLOCKS:
            cov = np.concatenate([np.asarray(o.coverage[k], dtype=float)
                                  for o in ok])
            agg[f"cp_{k}"] = float(np.mean(cov)) if cov.size else float("nan")
        agg["eta1"] = float(np.mean([o.eta1 for o in ok]))
        agg["eta2"] = float(np.mean([o.eta2 for o in ok]))
        agg["pseudo_dist"] = float(np.mean([o.pseudo_dist for o in ok]))
    for k in _BLOCKS:
        agg[f"rmse_{k}_all"] = float(
            np.sqrt(np.mean([o.nodewise_sq[k] for o in ok])))
    agg["xi1"] = float(np.mean([o.xi1 for o in ok]))
    agg["xi2"] = float(np.mean([o.xi2 for o in ok]))
    agg["sigma2_mean"] = float(np.mean([o.sigma2_hat for o in ok]))
    agg["converged_rate"] = float(np.mean([o.converged for o in ok]))
    if cfg.do_select:
        chosen_G = [o.chosen_G for o in ok]
        chosen_H = [o.chosen_H for o in ok]
        agg["selection"] = {
            "rho_G": {str(v): float(np.mean(np.asarray(chosen_G) == v))
                      for v in sorted(set(chosen_G))},
            "rho_H": {str(v): float(np.mean(np.asarray(chosen_H) == v))
                      for v in sorted(set(chosen_H))},
        }
    return agg


def format_table_row(agg: dict) -> str:
    """Human-readable row: RMSE x100 with CP in parentheses per block."""
    cells = []
    for k in _BLOCKS:
        if f"rmse_{k}" in agg:
            cells.append(f"{100 * agg[f'rmse_{k}']:.1f} ({agg[f'cp_{k}']:.3f})")
        else:
            cells.append("-")
    eta1 = agg.get("eta1", float("nan"))
    eta2 = agg.get("eta2", float("nan"))
    return (f"scenario={agg['scenario']} net={agg['network']} "
            f"N1={agg['N1']} N2={agg['N2']} T={agg['T']} | "
            + " | ".join(cells)
            + f" | eta1={eta1:.4f} eta2={eta2:.4f}")
