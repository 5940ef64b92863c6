"""Shared fixtures and brute-force helpers for the test suite.

The helpers here are deliberately naive (explicit loops over nodes, times and
candidate labels) so they can serve as independent oracles for the vectorized
implementations in :mod:`gmnar`.
"""

import numpy as np
import pytest

from gmnar.model import (GroupAssignment, MatrixSeries, NetworkPair,
                         ParameterSet)


def random_instance(rng, N1=5, N2=4, T=3, G=2, H=2, p1=2, p2=1):
    """A random, fully generic problem instance (data not from the model)."""
    Y = rng.standard_normal((T + 1, N1, N2))
    X = rng.standard_normal((T, N1, p1))
    Z = rng.standard_normal((T, N2, p2))
    data = MatrixSeries(Y=Y, X=X, Z=Z)
    A1 = (rng.random((N1, N1)) < 0.4).astype(float)
    A2 = (rng.random((N2, N2)) < 0.4).astype(float)
    np.fill_diagonal(A1, 0.0)
    np.fill_diagonal(A2, 0.0)
    nets = NetworkPair(A1=A1, A2=A2)
    g = np.concatenate([np.arange(1, G + 1), rng.integers(1, G + 1, N1 - G)])
    h = np.concatenate([np.arange(1, H + 1), rng.integers(1, H + 1, N2 - H)])
    assign = GroupAssignment(G=G, H=H, g=g, h=h)
    params = ParameterSet(
        lam=0.3 * rng.standard_normal(G),
        gamma=0.3 * rng.standard_normal(H),
        alpha=0.3 * rng.standard_normal((G, H)),
        zeta=rng.standard_normal((p1, G)),
        delta=rng.standard_normal((p2, H)),
    )
    return data, nets, assign, params


def naive_regressor(data, nets, i, j, t):
    """Entry-by-entry evaluation of the regressor sums."""
    Yprev = data.Y[t - 1]
    rownet = sum(nets.W1[i, k] * Yprev[k, j] for k in range(data.N1))
    colnet = sum(Yprev[i, k] * nets.W2[k, j] for k in range(data.N2))
    return np.concatenate([[rownet], data.X[t - 1, i],
                           [colnet], data.Z[t - 1, j], [Yprev[i, j]]])


def naive_mean_entry(params, assign, data, nets, i, j, t):
    """Element-wise evaluation of the one-step conditional mean."""
    gi = assign.g[i] - 1
    hj = assign.h[j] - 1
    x = naive_regressor(data, nets, i, j, t)
    theta = np.concatenate([
        [params.lam[gi]], params.zeta[:, gi],
        [params.gamma[hj]], params.delta[:, hj],
        [params.alpha[gi, hj]],
    ])
    return float(x @ theta)


def naive_objective(params, assign, data, nets):
    q = 0.0
    for t in range(1, data.T + 1):
        for i in range(data.N1):
            for j in range(data.N2):
                r = data.Y[t, i, j] - naive_mean_entry(
                    params, assign, data, nets, i, j, t)
                q += r * r
    return q


def stacked_design(data, nets, assign):
    """Fully stacked (N1*N2*T) x q design matrix and response in the
    canonical flat layout, built cell by cell with explicit index maps."""
    G, H, p1, p2 = assign.G, assign.H, data.p1, data.p2
    dr, dc = 1 + p1, 1 + p2
    q = G * dr + H * dc + G * H
    off_c = G * dr
    off_a = off_c + H * dc
    rows, ys = [], []
    for t in range(1, data.T + 1):
        for i in range(data.N1):
            for j in range(data.N2):
                gi = assign.g[i] - 1
                hj = assign.h[j] - 1
                x = naive_regressor(data, nets, i, j, t)
                row = np.zeros(q)
                row[gi * dr: (gi + 1) * dr] = x[: dr]
                row[off_c + hj * dc: off_c + (hj + 1) * dc] = x[dr: dr + dc]
                row[off_a + hj * G + gi] = x[-1]
                rows.append(row)
                ys.append(data.Y[t, i, j])
    return np.array(rows), np.array(ys)


@pytest.fixture(scope="session")
def small_instance():
    rng = np.random.default_rng(42)
    return random_instance(rng)
