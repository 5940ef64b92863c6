"""Core model types and forward evaluation for the group matrix network
autoregression (GMNAR).

The observed panel is a matrix time series Y_t (N1 x N2).  Each entry follows

    Y_ijt = lambda_{g_i} * (row-network average of Y_{t-1} in column j)
          + gamma_{h_j}  * (column-network average of Y_{t-1} in row i)
          + alpha_{g_i h_j} * Y_{ij(t-1)}
          + x_it' zeta_{g_i} + z_jt' delta_{h_j} + noise,

with latent row groups g_i in [G] and column groups h_j in [H].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MatrixSeries",
    "NetworkPair",
    "GroupAssignment",
    "ParameterSet",
    "build_regressor",
    "one_step_mean",
    "objective_q",
    "check_stationarity",
]


def _frozen_array(x, dtype=float):
    a = np.array(x, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MatrixSeries:
    """Observed panel: Y over t = 0..T plus covariate panels X, Z over t = 1..T.

    Y[t] is the N1 x N2 state at time t; slice t of X/Z (stored with index
    t-1) enters the regression of Y_t on Y_{t-1}.
    """

    Y: np.ndarray  # (T+1, N1, N2)
    X: np.ndarray  # (T, N1, p1)
    Z: np.ndarray  # (T, N2, p2)

    def __post_init__(self):
        Y = _frozen_array(self.Y)
        if Y.ndim != 3 or Y.shape[0] < 2:
            raise ValueError("Y must be (T+1, N1, N2) with T >= 1")
        T = Y.shape[0] - 1
        N1, N2 = Y.shape[1], Y.shape[2]
        X = self.X if self.X is not None else np.zeros((T, N1, 0))
        Z = self.Z if self.Z is not None else np.zeros((T, N2, 0))
        X = _frozen_array(X)
        Z = _frozen_array(Z)
        if X.shape[:2] != (T, N1):
            raise ValueError(f"X must be (T={T}, N1={N1}, p1), got {X.shape}")
        if Z.shape[:2] != (T, N2):
            raise ValueError(f"Z must be (T={T}, N2={N2}, p2), got {Z.shape}")
        for name, a in (("Y", Y), ("X", X), ("Z", Z)):
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} contains non-finite entries")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Z", Z)

    @property
    def T(self) -> int:
        return self.Y.shape[0] - 1

    @property
    def N1(self) -> int:
        return self.Y.shape[1]

    @property
    def N2(self) -> int:
        return self.Y.shape[2]

    @property
    def p1(self) -> int:
        return self.X.shape[2]

    @property
    def p2(self) -> int:
        return self.Z.shape[2]


@dataclass(frozen=True)
class NetworkPair:
    """Adjacency matrices A1 (rows), A2 (columns) with their normalizations.

    W1 is row-normalized (each row of A1 divided by its row sum) and W2 is
    column-normalized; zero-degree rows/columns stay all-zero.
    """

    A1: np.ndarray
    A2: np.ndarray
    W1: np.ndarray = field(default=None)
    W2: np.ndarray = field(default=None)

    def __post_init__(self):
        A1 = _frozen_array(self.A1)
        A2 = _frozen_array(self.A2)
        for name, A in (("A1", A1), ("A2", A2)):
            if A.ndim != 2 or A.shape[0] != A.shape[1]:
                raise ValueError(f"{name} must be square")
            if np.any(np.diag(A) != 0):
                raise ValueError(f"{name} must have a zero diagonal")
            if not np.all((A == 0) | (A == 1)):
                raise ValueError(f"{name} must be binary")
        W1 = self.W1 if self.W1 is not None else row_normalize(A1)
        W2 = self.W2 if self.W2 is not None else col_normalize(A2)
        W1 = _frozen_array(W1)
        W2 = _frozen_array(W2)
        if W1.shape != A1.shape or W2.shape != A2.shape:
            raise ValueError("W dimensions must match A")
        object.__setattr__(self, "A1", A1)
        object.__setattr__(self, "A2", A2)
        object.__setattr__(self, "W1", W1)
        object.__setattr__(self, "W2", W2)

    @property
    def N1(self) -> int:
        return self.A1.shape[0]

    @property
    def N2(self) -> int:
        return self.A2.shape[0]


def row_normalize(A: np.ndarray) -> np.ndarray:
    """Divide each row by its sum; zero rows stay zero."""
    s = A.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        W = np.where(s > 0, A / s, 0.0)
    return W


def col_normalize(A: np.ndarray) -> np.ndarray:
    """Divide each column by its sum; zero columns stay zero."""
    s = A.sum(axis=0, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        W = np.where(s > 0, A / s, 0.0)
    return W


@dataclass(frozen=True)
class GroupAssignment:
    """Row labels g (values 1..G) and column labels h (values 1..H)."""

    G: int
    H: int
    g: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        g = _frozen_array(self.g, dtype=np.int64)
        h = _frozen_array(self.h, dtype=np.int64)
        if self.G < 1 or self.H < 1:
            raise ValueError("G and H must be >= 1")
        if g.ndim != 1 or h.ndim != 1:
            raise ValueError("labels must be 1-d")
        if g.size and (g.min() < 1 or g.max() > self.G):
            raise ValueError("row label out of range")
        if h.size and (h.min() < 1 or h.max() > self.H):
            raise ValueError("column label out of range")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "h", h)

    @property
    def N1(self) -> int:
        return self.g.size

    @property
    def N2(self) -> int:
        return self.h.size

    def row_groups(self) -> list[np.ndarray]:
        """R_g = {i : g_i = g} for g = 1..G (0-based node indices)."""
        return [np.flatnonzero(self.g == g) for g in range(1, self.G + 1)]

    def col_groups(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.h == h) for h in range(1, self.H + 1)]

    def row_sizes(self) -> np.ndarray:
        return np.bincount(self.g - 1, minlength=self.G)

    def col_sizes(self) -> np.ndarray:
        return np.bincount(self.h - 1, minlength=self.H)


@dataclass(frozen=True)
class ParameterSet:
    """Group-wise coefficients.

    Canonical flat layout:
        theta = (theta_1^r, ..., theta_G^r, theta_1^c, ..., theta_H^c, vec(alpha))
    with theta_g^r = (lambda_g, zeta_g), theta_h^c = (gamma_h, delta_h) and
    vec(alpha) column-major, i.e. entry (g, h) sits at index (h-1)*G + g - 1.
    """

    lam: np.ndarray    # (G,)
    gamma: np.ndarray  # (H,)
    alpha: np.ndarray  # (G, H)
    zeta: np.ndarray   # (p1, G)
    delta: np.ndarray  # (p2, H)

    def __post_init__(self):
        lam = _frozen_array(np.atleast_1d(self.lam))
        gamma = _frozen_array(np.atleast_1d(self.gamma))
        alpha = _frozen_array(np.atleast_2d(self.alpha))
        G, H = lam.size, gamma.size
        zeta = self.zeta if self.zeta is not None else np.zeros((0, G))
        delta = self.delta if self.delta is not None else np.zeros((0, H))
        zeta = _frozen_array(np.atleast_2d(zeta))
        delta = _frozen_array(np.atleast_2d(delta))
        if alpha.shape != (G, H):
            raise ValueError(f"alpha must be ({G}, {H}), got {alpha.shape}")
        if zeta.shape[1] != G:
            raise ValueError("zeta must have one column per row group")
        if delta.shape[1] != H:
            raise ValueError("delta must have one column per column group")
        for name, a in (("lam", lam), ("gamma", gamma), ("alpha", alpha),
                        ("zeta", zeta), ("delta", delta)):
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} contains non-finite entries")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "zeta", zeta)
        object.__setattr__(self, "delta", delta)

    @property
    def G(self) -> int:
        return self.lam.size

    @property
    def H(self) -> int:
        return self.gamma.size

    @property
    def p1(self) -> int:
        return self.zeta.shape[0]

    @property
    def p2(self) -> int:
        return self.delta.shape[0]

    @property
    def q(self) -> int:
        return self.G * (1 + self.p1) + self.H * (1 + self.p2) + self.G * self.H

    def flatten(self) -> np.ndarray:
        """Canonical flat vector of length q."""
        row = np.vstack([self.lam, self.zeta]).ravel(order="F")
        col = np.vstack([self.gamma, self.delta]).ravel(order="F")
        return np.concatenate([row, col, self.alpha.ravel(order="F")])

    @classmethod
    def unflatten(cls, theta: np.ndarray, G: int, H: int, p1: int, p2: int) -> "ParameterSet":
        theta = np.asarray(theta, dtype=float)
        q = G * (1 + p1) + H * (1 + p2) + G * H
        if theta.shape != (q,):
            raise ValueError(f"theta must have length {q}, got {theta.shape}")
        row = theta[: G * (1 + p1)].reshape(G, 1 + p1).T
        col = theta[G * (1 + p1): G * (1 + p1) + H * (1 + p2)].reshape(H, 1 + p2).T
        alpha = theta[G * (1 + p1) + H * (1 + p2):].reshape(G, H, order="F")
        return cls(lam=row[0], gamma=col[0], alpha=alpha,
                   zeta=row[1:], delta=col[1:])

    def recenter_intercepts(self) -> "ParameterSet":
        """Enforce sum_g zeta_{g,1} = 0 by shifting the mean row intercept
        onto the column intercepts.  Fitted values are unchanged because the
        intercept columns of X and Z are both identically one."""
        if self.p1 == 0 or self.p2 == 0:
            raise ValueError("intercept recentering needs p1 >= 1 and p2 >= 1")
        c = self.zeta[0].mean()
        zeta = self.zeta.copy()
        delta = self.delta.copy()
        zeta[0] -= c
        delta[0] += c
        return ParameterSet(self.lam, self.gamma, self.alpha, zeta, delta)

    def node_expanded(self, assign: GroupAssignment) -> np.ndarray:
        """Per-cell coefficient tensor Theta of shape (N1, N2, p1+p2+3):
        Theta[i, j] = (lambda_{g_i}, zeta_{g_i}, gamma_{h_j}, delta_{h_j},
        alpha_{g_i h_j})."""
        gi = assign.g - 1
        hj = assign.h - 1
        N1, N2 = gi.size, hj.size
        out = np.empty((N1, N2, self.p1 + self.p2 + 3))
        row = np.concatenate([self.lam[gi, None], self.zeta.T[gi]], axis=1)
        col = np.concatenate([self.gamma[hj, None], self.delta.T[hj]], axis=1)
        out[:, :, : 1 + self.p1] = row[:, None, :]
        out[:, :, 1 + self.p1: 2 + self.p1 + self.p2] = col[None, :, :]
        out[:, :, -1] = self.alpha[np.ix_(gi, hj)]
        return out


def build_regressor(data: MatrixSeries, nets: NetworkPair, i: int, j: int,
                    t: int) -> np.ndarray:
    """Regressor vector for cell (i, j) at transition t (1-based t in 1..T).

    Ordering: (row-network term, x_it, column-network term, z_jt, lag),
    matching the per-cell coefficient ordering (lambda, zeta, gamma, delta,
    alpha)."""
    if not (1 <= t <= data.T):
        raise IndexError(f"t must be in 1..{data.T}")
    if not (0 <= i < data.N1 and 0 <= j < data.N2):
        raise IndexError("node index out of range")
    Yprev = data.Y[t - 1]
    rownet = nets.W1[i] @ Yprev[:, j]
    colnet = Yprev[i] @ nets.W2[:, j]
    return np.concatenate([
        [rownet], data.X[t - 1, i], [colnet], data.Z[t - 1, j], [Yprev[i, j]],
    ])


def one_step_mean(params: ParameterSet, assign: GroupAssignment,
                  data: MatrixSeries, nets: NetworkPair, t: int) -> np.ndarray:
    """Conditional mean E[Y_t | past] in matrix form:
    L W1 Y_{t-1} + Y_{t-1} W2 G + A o Y_{t-1} + beta_X 1' + 1 beta_Z'."""
    if not (1 <= t <= data.T):
        raise IndexError(f"t must be in 1..{data.T}")
    _check_dims(params, assign, data, nets)
    gi = assign.g - 1
    hj = assign.h - 1
    Yprev = data.Y[t - 1]
    lam_i = params.lam[gi]
    gam_j = params.gamma[hj]
    A = params.alpha[np.ix_(gi, hj)]
    mean = (lam_i[:, None] * (nets.W1 @ Yprev)
            + (Yprev @ nets.W2) * gam_j[None, :]
            + A * Yprev)
    if data.p1:
        mean += (data.X[t - 1] * params.zeta.T[gi]).sum(axis=1)[:, None]
    if data.p2:
        mean += (data.Z[t - 1] * params.delta.T[hj]).sum(axis=1)[None, :]
    return mean


def objective_q(params: ParameterSet, assign: GroupAssignment,
                data: MatrixSeries, nets: NetworkPair) -> float:
    """Least-squares objective: sum of squared one-step-ahead residuals over
    all cells and transitions."""
    q = 0.0
    for t in range(1, data.T + 1):
        resid = data.Y[t] - one_step_mean(params, assign, data, nets, t)
        q += float(np.sum(resid * resid))
    return q


def check_stationarity(params: ParameterSet) -> tuple[bool, float]:
    """Stationarity margin kappa = max_{g,h} |lambda_g + gamma_h + alpha_gh|;
    the process is stationary when kappa < 1."""
    s = params.lam[:, None] + params.gamma[None, :] + params.alpha
    kappa = float(np.max(np.abs(s)))
    return kappa < 1.0, kappa


def _check_dims(params: ParameterSet, assign: GroupAssignment,
                data: MatrixSeries, nets: NetworkPair) -> None:
    if assign.N1 != data.N1 or assign.N2 != data.N2:
        raise ValueError("assignment dimensions do not match data")
    if nets.N1 != data.N1 or nets.N2 != data.N2:
        raise ValueError("network dimensions do not match data")
    if params.G < assign.G or params.H < assign.H:
        raise ValueError("parameter group counts smaller than assignment's")
    if params.p1 != data.p1 or params.p2 != data.p2:
        raise ValueError("covariate dimensions do not match data")
