"""Alternating least-squares estimator with group reassignment.

Given memberships, the least-squares coefficients solve the block normal
equations M theta = b, where M is the Gram matrix of the stacked grouped
design.  Given coefficients, each row (column) node is reassigned to the
group minimizing its own sum of squared residuals.  The two steps alternate
until labels and parameters stabilize.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .model import GroupAssignment, MatrixSeries, NetworkPair, ParameterSet

__all__ = [
    "NormalEquations",
    "FitOptions",
    "FitResult",
    "PanelDesign",
    "assemble_design_blocks",
    "assemble_normal_equations",
    "solve_theta",
    "update_row_memberships",
    "update_col_memberships",
    "init_memberships",
    "fit",
]


class PanelDesign:
    """Label-independent per-transition arrays shared across fits.

    RN[t-1] = W1 Y_{t-1} (row-network term), CN[t-1] = Y_{t-1} W2
    (column-network term), LAG[t-1] = Y_{t-1}, YT[t-1] = Y_t.
    """

    def __init__(self, data: MatrixSeries, nets: NetworkPair):
        if nets.N1 != data.N1 or nets.N2 != data.N2:
            raise ValueError("network dimensions do not match data")
        self.data = data
        self.nets = nets
        Y = data.Y
        self.YT = Y[1:]
        self.LAG = Y[:-1]
        self.RN = np.matmul(nets.W1, Y[:-1])
        self.CN = np.matmul(Y[:-1], nets.W2)
        self.X = data.X
        self.Z = data.Z
        self.T, self.N1, self.N2 = self.YT.shape
        self.p1 = data.p1
        self.p2 = data.p2
        self.total_sq = float(np.sum(self.YT ** 2))


@dataclass(frozen=True)
class NormalEquations:
    """Block Gram system M theta = b in the canonical layout
    [theta_1^r..theta_G^r | theta_1^c..theta_H^c | vec(alpha)]."""

    M: np.ndarray
    b: np.ndarray
    G: int
    H: int
    p1: int
    p2: int
    empty_groups: bool = False

    @property
    def q(self) -> int:
        return self.M.shape[0]


@dataclass(frozen=True)
class FitOptions:
    max_iter: int = 100
    param_tol: float = 1e-8
    n_init: int = 5
    enforce_intercept_constraint: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.n_init < 1:
            raise ValueError("n_init must be >= 1")


@dataclass
class FitResult:
    params: ParameterSet
    assign: GroupAssignment
    q_value: float
    q_trace: list = field(default_factory=list)
    sigma2_hat: float = 0.0
    iterations: int = 0
    converged: bool = False
    degenerate: bool = False
    effective_G: int = 0
    effective_H: int = 0


def _index_sets(assign: GroupAssignment):
    return assign.row_groups(), assign.col_groups()


def _cell_blocks(pd: PanelDesign, rows: np.ndarray, cols: np.ndarray):
    """Stacked blocks for one (g, h) cell, all T transitions at once.

    Row order is (t, j, i) with i fastest, matching the column-major
    vectorization of the N_1g x N_2h submatrices within each t.
    Returns (Xb, Zb, ylag, y) with shapes (n, p1+1), (n, p2+1), (n,), (n,)
    where n = T * N_1g * N_2h.
    """
    a, b = rows.size, cols.size
    T = pd.T
    sub = np.ix_(range(T), rows, cols)
    xnet = pd.RN[sub].transpose(0, 2, 1).reshape(T, a * b)
    znet = pd.CN[sub].transpose(0, 2, 1).reshape(T, a * b)
    ylag = pd.LAG[sub].transpose(0, 2, 1).reshape(-1)
    y = pd.YT[sub].transpose(0, 2, 1).reshape(-1)
    Xb = np.empty((T * a * b, 1 + pd.p1))
    Xb[:, 0] = xnet.reshape(-1)
    if pd.p1:
        # 1_{N2h} (x) X_t^{(Rg,.)}: each x_i repeats for every j in the cell.
        Xb[:, 1:] = np.broadcast_to(pd.X[:, rows, :][:, None, :, :],
                                    (T, b, a, pd.p1)).reshape(-1, pd.p1)
    Zb = np.empty((T * a * b, 1 + pd.p2))
    Zb[:, 0] = znet.reshape(-1)
    if pd.p2:
        # Z_t^{(Ch,.)} (x) 1_{N1g}: each z_j repeats for every i in the cell.
        Zb[:, 1:] = np.broadcast_to(pd.Z[:, cols, :][:, :, None, :],
                                    (T, b, a, pd.p2)).reshape(-1, pd.p2)
    return Xb, Zb, ylag, y


def assemble_design_blocks(data: MatrixSeries, nets: NetworkPair,
                           assign: GroupAssignment, g: int, h: int, t: int):
    """Design blocks (X_ght, Z_ght, Y_ght, Y_gh(t-1)) for one cell and one
    transition t in 1..T; g, h are 1-based group labels."""
    if not (1 <= t <= data.T):
        raise IndexError(f"t must be in 1..{data.T}")
    rows = np.flatnonzero(assign.g == g)
    cols = np.flatnonzero(assign.h == h)
    if rows.size == 0 or cols.size == 0:
        raise ValueError(f"empty group (g={g}, h={h})")
    Yprev = data.Y[t - 1]
    Yt = data.Y[t]
    a, b = rows.size, cols.size
    xnet = (nets.W1[rows] @ Yprev[:, cols]).reshape(a, b)
    znet = (Yprev[rows] @ nets.W2[:, cols]).reshape(a, b)
    Xb = np.empty((a * b, 1 + data.p1))
    Xb[:, 0] = xnet.ravel(order="F")
    if data.p1:
        Xb[:, 1:] = np.tile(data.X[t - 1, rows, :], (b, 1))
    Zb = np.empty((a * b, 1 + data.p2))
    Zb[:, 0] = znet.ravel(order="F")
    if data.p2:
        Zb[:, 1:] = np.repeat(data.Z[t - 1, cols, :], a, axis=0)
    y = Yt[np.ix_(rows, cols)].ravel(order="F")
    ylag = Yprev[np.ix_(rows, cols)].ravel(order="F")
    return Xb, Zb, y, ylag


def _assemble(pd: PanelDesign, assign: GroupAssignment) -> NormalEquations:
    G, H, p1, p2 = assign.G, assign.H, pd.p1, pd.p2
    dr, dc = 1 + p1, 1 + p2
    q = G * dr + H * dc + G * H
    M = np.zeros((q, q))
    b = np.zeros(q)
    off_c = G * dr
    off_a = off_c + H * dc
    row_sets, col_sets = _index_sets(assign)
    empty = False
    for gi, rows in enumerate(row_sets):
        for hi, cols in enumerate(col_sets):
            if rows.size == 0 or cols.size == 0:
                empty = True
                continue
            Xb, Zb, ylag, y = _cell_blocks(pd, rows, cols)
            ia = off_a + hi * G + gi  # vec(alpha) index I_gh = (h-1)G + g
            sr = slice(gi * dr, (gi + 1) * dr)
            sc = slice(off_c + hi * dc, off_c + (hi + 1) * dc)
            C = np.concatenate([Xb, Zb, ylag[:, None], y[:, None]], axis=1)
            Gm = C.T @ C
            M[sr, sr] += Gm[:dr, :dr]
            M[sc, sc] += Gm[dr:dr + dc, dr:dr + dc]
            M[sr, sc] = Gm[:dr, dr:dr + dc]
            M[sc, sr] = Gm[dr:dr + dc, :dr].copy()
            M[sr, ia] = Gm[:dr, dr + dc]
            M[ia, sr] = Gm[dr + dc, :dr]
            M[sc, ia] = Gm[dr:dr + dc, dr + dc]
            M[ia, sc] = Gm[dr + dc, dr:dr + dc]
            M[ia, ia] = Gm[dr + dc, dr + dc]
            b[sr] += Gm[:dr, -1]
            b[sc] += Gm[dr:dr + dc, -1]
            b[ia] = Gm[dr + dc, -1]
    return NormalEquations(M=M, b=b, G=G, H=H, p1=p1, p2=p2,
                           empty_groups=empty)


def assemble_normal_equations(data: MatrixSeries, nets: NetworkPair,
                              assign: GroupAssignment) -> NormalEquations:
    return _assemble(PanelDesign(data, nets), assign)


def solve_theta(ne: NormalEquations,
                enforce_intercept_constraint: bool = False
                ) -> tuple[ParameterSet, bool]:
    """Solve M theta = b by Cholesky; on rank deficiency fall back to the
    minimum-norm solution.  Returns (params, degenerate_flag)."""
    if not (np.all(np.isfinite(ne.M)) and np.all(np.isfinite(ne.b))):
        raise ValueError("normal equations contain non-finite entries")
    degenerate = ne.empty_groups
    theta = None
    if not degenerate:
        # Guard against near-singular M: Cholesky succeeds on some barely
        # indefinite matrices, so check conditioning first.
        dmax = np.abs(np.diag(ne.M)).max() if ne.q else 0.0
        if dmax > 0:
            try:
                c = cho_factor(ne.M, lower=True, check_finite=False)
                if np.min(np.abs(np.diag(c[0]))) ** 2 < 1e-12 * dmax:
                    raise LinAlgError("rank deficient")
                theta = cho_solve(c, ne.b, check_finite=False)
            except LinAlgError:
                theta = None
        if theta is None:
            degenerate = True
    if theta is None:
        theta, *_ = np.linalg.lstsq(ne.M, ne.b, rcond=1e-12)
    params = ParameterSet.unflatten(theta, ne.G, ne.H, ne.p1, ne.p2)
    if enforce_intercept_constraint:
        params = params.recenter_intercepts()
    return params, degenerate


def _col_part(pd: PanelDesign, params: ParameterSet, hlab: np.ndarray):
    """gamma_{h_j} CN + z_jt' delta_{h_j}, shape (T, N1, N2)."""
    part = pd.CN * params.gamma[hlab - 1][None, None, :]
    if pd.p2:
        part = part + np.einsum("tjk,jk->tj", pd.Z,
                                params.delta.T[hlab - 1])[:, None, :]
    return part


def _row_part(pd: PanelDesign, params: ParameterSet, glab: np.ndarray):
    """lambda_{g_i} RN + x_it' zeta_{g_i}, shape (T, N1, N2)."""
    part = pd.RN * params.lam[glab - 1][None, :, None]
    if pd.p1:
        part = part + np.einsum("tik,ik->ti", pd.X,
                                params.zeta.T[glab - 1])[:, :, None]
    return part


def _row_sse(pd: PanelDesign, params: ParameterSet, hlab: np.ndarray
             ) -> np.ndarray:
    """SSE of each row node under each candidate row group; shape (N1, G)."""
    base = pd.YT - _col_part(pd, params, hlab)
    G = params.G
    sse = np.empty((pd.N1, G))
    for g in range(G):
        res = base - params.lam[g] * pd.RN
        res = res - pd.LAG * params.alpha[g, hlab - 1][None, None, :]
        if pd.p1:
            res = res - (pd.X @ params.zeta[:, g])[:, :, None]
        sse[:, g] = np.einsum("tij,tij->i", res, res)
    return sse


def _col_sse(pd: PanelDesign, params: ParameterSet, glab: np.ndarray
             ) -> np.ndarray:
    """SSE of each column node under each candidate column group; (N2, H)."""
    base = pd.YT - _row_part(pd, params, glab)
    H = params.H
    sse = np.empty((pd.N2, H))
    for h in range(H):
        res = base - params.gamma[h] * pd.CN
        res = res - pd.LAG * params.alpha[glab - 1, h][None, :, None]
        if pd.p2:
            res = res - (pd.Z @ params.delta[:, h])[:, None, :]
        sse[:, h] = np.einsum("tij,tij->j", res, res)
    return sse


def update_row_memberships(params: ParameterSet, assign: GroupAssignment,
                           data: MatrixSeries, nets: NetworkPair
                           ) -> np.ndarray:
    """Reassign every row node to its SSE-minimizing group (ties to the
    smallest index), holding column labels fixed."""
    pd = PanelDesign(data, nets)
    sse = _row_sse(pd, params, assign.h)
    return np.argmin(sse, axis=1) + 1


def update_col_memberships(params: ParameterSet, assign: GroupAssignment,
                           data: MatrixSeries, nets: NetworkPair
                           ) -> np.ndarray:
    pd = PanelDesign(data, nets)
    sse = _col_sse(pd, params, assign.g)
    return np.argmin(sse, axis=1) + 1


def _per_node_features(pd: PanelDesign, axis: str) -> np.ndarray:
    """Per-node least-squares coefficients used for initialization.

    Row node i: regress Y_ijt on (row-network term, x_it, lag) pooled over
    (j, t).  Column node j: regress on (column-network term, z_jt, lag)
    pooled over (i, t).  Falls back to zeros for rank-deficient nodes.
    """
    if axis == "row":
        n, p = pd.N1, pd.p1
        def design(i):
            cols = [pd.RN[:, i, :].reshape(-1, 1)]
            if p:
                cols.append(np.repeat(pd.X[:, i, :], pd.N2, axis=0))
            cols.append(pd.LAG[:, i, :].reshape(-1, 1))
            return np.concatenate(cols, axis=1), pd.YT[:, i, :].reshape(-1)
    else:
        n, p = pd.N2, pd.p2
        def design(j):
            cols = [pd.CN[:, :, j].reshape(-1, 1)]
            if p:
                cols.append(np.repeat(pd.Z[:, j, :], pd.N1, axis=0))
            cols.append(pd.LAG[:, :, j].reshape(-1, 1))
            return np.concatenate(cols, axis=1), pd.YT[:, :, j].reshape(-1)
    feats = np.zeros((n, p + 2))
    for i in range(n):
        A, y = design(i)
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        feats[i] = coef
    return feats


def _kmeans_labels(feats: np.ndarray, k: int, seed: int, n_init: int
                   ) -> np.ndarray:
    from sklearn.cluster import KMeans

    if k == 1:
        return np.ones(feats.shape[0], dtype=np.int64)
    km = KMeans(n_clusters=k, n_init=n_init, random_state=seed & 0x7FFFFFFF)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        labels = km.fit_predict(feats) + 1
    return _repair_empty(labels, k, feats)


def _repair_empty(labels: np.ndarray, k: int, feats: np.ndarray) -> np.ndarray:
    """Fill empty clusters by splitting the largest one (farthest members)."""
    labels = labels.copy()
    for grp in range(1, k + 1):
        if np.any(labels == grp):
            continue
        sizes = np.bincount(labels, minlength=k + 1)
        big = int(np.argmax(sizes[1:]) + 1)
        members = np.flatnonzero(labels == big)
        center = feats[members].mean(axis=0)
        dist = np.linalg.norm(feats[members] - center, axis=1)
        move = members[np.argsort(dist)[-(members.size // 2 or 1):]]
        labels[move] = grp
    return labels


def init_memberships(data: MatrixSeries, nets: NetworkPair, G: int, H: int,
                     seed: int = 0, n_init: int = 10) -> GroupAssignment:
    """Initial labels: k-means on per-node regression coefficients; random
    labels when T is too small for the per-node regressions."""
    if G > data.N1 or H > data.N2:
        raise ValueError("more groups than nodes")
    pd = PanelDesign(data, nets)
    rng = np.random.default_rng(seed)
    if data.N2 * data.T < data.p1 + 2 or data.N1 * data.T < data.p2 + 2:
        g = _random_nonempty_labels(rng, data.N1, G)
        h = _random_nonempty_labels(rng, data.N2, H)
        return GroupAssignment(G=G, H=H, g=g, h=h)
    g = _kmeans_labels(_per_node_features(pd, "row"), G, seed, n_init)
    h = _kmeans_labels(_per_node_features(pd, "col"), H, seed + 1, n_init)
    return GroupAssignment(G=G, H=H, g=g, h=h)


def _random_nonempty_labels(rng, n, k) -> np.ndarray:
    labels = rng.integers(1, k + 1, size=n)
    # guarantee all k groups appear
    labels[rng.choice(n, size=k, replace=False)] = np.arange(1, k + 1)
    return labels


def _reseed_empty_groups(labels: np.ndarray, k: int, node_sse: np.ndarray
                         ) -> tuple[np.ndarray, bool]:
    """Give each empty group the unassigned-worst-fit node."""
    touched = False
    labels = labels.copy()
    taken: set[int] = set()
    for grp in range(1, k + 1):
        if np.any(labels == grp):
            continue
        order = np.argsort(-node_sse)
        for node in order:
            node = int(node)
            if node not in taken and np.sum(labels == labels[node]) > 1:
                labels[node] = grp
                taken.add(node)
                touched = True
                break
    return labels, touched


def _fit_once(pd: PanelDesign, g0: np.ndarray, h0: np.ndarray, G: int, H: int,
              opts: FitOptions) -> FitResult:
    g, h = g0.copy(), h0.copy()
    q_trace: list[float] = []
    theta_prev = None
    seen: set[tuple] = set()
    converged = False
    degenerate = False
    iterations = 0
    params = None
    for it in range(opts.max_iter):
        iterations = it + 1
        assign = GroupAssignment(G=G, H=H, g=g, h=h)
        ne = _assemble(pd, assign)
        params, deg = solve_theta(ne, opts.enforce_intercept_constraint)
        degenerate = degenerate or deg
        theta = params.flatten()
        # Q at the solved parameters: theta'M theta - 2 b'theta + sum y^2.
        q_solve = float(theta @ ne.M @ theta - 2 * ne.b @ theta + pd.total_sq)
        q_solve = max(q_solve, 0.0)
        q_trace.append(q_solve)

        row_sse = _row_sse(pd, params, h)
        g_new = np.argmin(row_sse, axis=1).astype(np.int64) + 1
        q_rows = float(row_sse[np.arange(pd.N1), g_new - 1].sum())
        g_new, reseeded_r = _reseed_empty_groups(
            g_new, G, row_sse[np.arange(pd.N1), g_new - 1])
        if reseeded_r:
            q_rows = _q_at(pd, params, g_new, h)
        q_trace.append(q_rows)

        col_sse = _col_sse(pd, params, g_new)
        h_new = np.argmin(col_sse, axis=1).astype(np.int64) + 1
        q_cols = float(col_sse[np.arange(pd.N2), h_new - 1].sum())
        h_new, reseeded_c = _reseed_empty_groups(
            h_new, H, col_sse[np.arange(pd.N2), h_new - 1])
        if reseeded_c:
            q_cols = _q_at(pd, params, g_new, h_new)
        q_trace.append(q_cols)

        labels_stable = np.array_equal(g_new, g) and np.array_equal(h_new, h)
        params_stable = (theta_prev is not None
                         and np.max(np.abs(theta - theta_prev)) < opts.param_tol)
        g, h = g_new, h_new
        theta_prev = theta
        if labels_stable and params_stable:
            converged = True
            break
        key = (g.tobytes(), h.tobytes())
        if key in seen and not labels_stable:
            break  # label cycle: keep the current state
        seen.add(key)

    assign = GroupAssignment(G=G, H=H, g=g, h=h)
    ne = _assemble(pd, assign)
    params, deg = solve_theta(ne, opts.enforce_intercept_constraint)
    degenerate = degenerate or deg
    theta = params.flatten()
    q_final = max(float(theta @ ne.M @ theta - 2 * ne.b @ theta
                        + pd.total_sq), 0.0)
    q_trace.append(q_final)
    dof = pd.N1 * pd.N2 * pd.T - ne.q
    sigma2 = max(q_final / dof, 0.0) if dof > 0 else float("nan")
    return FitResult(
        params=params, assign=assign, q_value=q_final, q_trace=q_trace,
        sigma2_hat=sigma2, iterations=iterations, converged=converged,
        degenerate=degenerate,
        effective_G=int(np.unique(assign.g).size),
        effective_H=int(np.unique(assign.h).size),
    )


def _q_at(pd: PanelDesign, params: ParameterSet, g: np.ndarray, h: np.ndarray
          ) -> float:
    res = pd.YT - _row_part(pd, params, g) - _col_part(pd, params, h)
    gi = g - 1
    hj = h - 1
    res = res - pd.LAG * params.alpha[np.ix_(gi, hj)][None, :, :]
    return float(np.sum(res * res))


def fit(data: MatrixSeries, nets: NetworkPair, G: int, H: int,
        opts: FitOptions = FitOptions(),
        initial_labels: list | None = None) -> FitResult:
    """Full alternating estimation with restarts.

    Restart 0 initializes by per-node-regression k-means; remaining restarts
    use random labels on derived seeds.  `initial_labels` may supply extra
    (g, h) warm starts (used by the group-number selection grid).  The fit
    with the smallest final objective wins.
    """
    if G > data.N1 or H > data.N2:
        raise ValueError("more groups than nodes")
    if G < 1 or H < 1:
        raise ValueError("G and H must be >= 1")
    pd = PanelDesign(data, nets)
    starts: list[tuple[np.ndarray, np.ndarray]] = []
    base = init_memberships(data, nets, G, H, seed=opts.seed)
    starts.append((base.g, base.h))
    rng = np.random.default_rng(np.random.SeedSequence(opts.seed).spawn(1)[0])
    for _ in range(opts.n_init - 1):
        starts.append((_random_nonempty_labels(rng, data.N1, G),
                       _random_nonempty_labels(rng, data.N2, H)))
    for g0, h0 in initial_labels or []:
        starts.append((np.asarray(g0, dtype=np.int64),
                       np.asarray(h0, dtype=np.int64)))
    best = None
    for g0, h0 in starts:
        res = _fit_once(pd, g0, h0, G, H, opts)
        if best is None or res.q_value < best.q_value:
            best = res
    return best
