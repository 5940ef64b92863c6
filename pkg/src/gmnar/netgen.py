"""Benchmark network generators: stochastic block model and power-law
in-degree, plus adjacency normalization and edge-list CSV I/O.

Reproducibility: every generator derives one RNG stream per node from a
`numpy.random.SeedSequence` rooted at the user's seed (child 0 holds global
draws such as block labels, child i+1 drives node i).  Output is therefore
bit-identical for a given (spec, seed) regardless of evaluation order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .model import col_normalize, row_normalize

__all__ = [
    "NetworkSpec",
    "gen_sbm",
    "gen_powerlaw",
    "normalize",
    "generate_network",
    "write_edge_list",
    "read_edge_list",
]


@dataclass(frozen=True)
class NetworkSpec:
    kind: str  # "sbm" or "powerlaw"
    N: int
    K: int = 5  # SBM block count
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("sbm", "powerlaw"):
            raise ValueError(f"unknown network kind {self.kind!r}")
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if self.kind == "sbm" and self.K < 1:
            raise ValueError("K must be >= 1")


def _node_streams(seed, n):
    children = np.random.SeedSequence(seed).spawn(n + 1)
    return (np.random.default_rng(children[0]),
            [np.random.default_rng(c) for c in children[1:]])


def gen_sbm(N: int, K: int, seed) -> np.ndarray:
    """Directed stochastic block model: uniform random block labels, edge
    probability min(20/N, 1) within a block and min(2/N, 1) across blocks."""
    if N < 2:
        raise ValueError("N must be >= 2")
    if K < 1:
        raise ValueError("K must be >= 1")
    root, streams = _node_streams(seed, N)
    blocks = root.integers(0, K, size=N)
    p_in = min(20.0 / N, 1.0)
    p_out = min(2.0 / N, 1.0)
    A = np.zeros((N, N))
    for i in range(N):
        p = np.where(blocks == blocks[i], p_in, p_out)
        A[i] = streams[i].random(N) < p
    np.fill_diagonal(A, 0.0)
    return A


def gen_powerlaw(N: int, seed) -> np.ndarray:
    """Power-law in-degree network: draw d~_i with P(k) proportional to
    k^(-2.5) on 1..floor((N-1)/4), set d_i = min(4 d~_i, N-1), then pick d_i
    distinct followers j != i so that column i has in-degree d_i."""
    if N < 5:
        raise ValueError("N must be >= 5")
    k_max = max(1, (N - 1) // 4)
    k = np.arange(1, k_max + 1)
    pmf = k ** -2.5
    pmf /= pmf.sum()
    _, streams = _node_streams(seed, N)
    A = np.zeros((N, N))
    for i in range(N):
        rng = streams[i]
        d = min(4 * int(rng.choice(k, p=pmf)), N - 1)
        others = np.delete(np.arange(N), i)
        followers = rng.choice(others, size=d, replace=False)
        A[followers, i] = 1.0
    return A


def powerlaw_degree_mean(N: int) -> float:
    """Expected value of the truncated base draw d~ (before the x4 scaling)."""
    k_max = max(1, (N - 1) // 4)
    k = np.arange(1, k_max + 1)
    pmf = k ** -2.5
    return float((k * pmf).sum() / pmf.sum())


def normalize(A: np.ndarray, mode: str) -> np.ndarray:
    """Row- or column-normalize a binary zero-diagonal adjacency matrix."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if np.any(np.diag(A) != 0):
        raise ValueError("A must have a zero diagonal")
    if not np.all((A == 0) | (A == 1)):
        raise ValueError("A must be binary")
    if mode == "row":
        return row_normalize(A)
    if mode == "column":
        return col_normalize(A)
    raise ValueError(f"unknown mode {mode!r}")


def generate_network(spec: NetworkSpec) -> np.ndarray:
    if spec.kind == "sbm":
        return gen_sbm(spec.N, spec.K, spec.seed)
    return gen_powerlaw(spec.N, spec.seed)


def write_edge_list(path, A: np.ndarray) -> None:
    """Write a directed edge list CSV with header `src,dst` (0-based ids)."""
    src, dst = np.nonzero(A)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["src", "dst"])
        for s, d in zip(src, dst):
            w.writerow([int(s), int(d)])


def read_edge_list(path, n: int) -> np.ndarray:
    A = np.zeros((n, n))
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        if header != ["src", "dst"]:
            raise ValueError(f"bad edge list header {header!r}")
        for row in r:
            s, d = int(row[0]), int(row[1])
            if not (0 <= s < n and 0 <= d < n):
                raise ValueError(f"edge ({s},{d}) out of range for n={n}")
            A[s, d] = 1.0
    return A
