"""Adaptive weighted fuzzy c-means over node QoS feature vectors.

Feature space: (delay, free buffer, error rate, residual energy), each column
scaled to [0,1] against a fixed physical range when one is known, min-max
otherwise. Three clusters, one per packet class; the Table-style initial
weight rows anchor which cluster means what (emergency watches delay and
buffer, error-sensitive watches the error rate, normal watches energy).

Each iteration runs distance -> membership -> center -> weight updates. The
membership rule is the classic Bezdek update for squared distances, which is
what keeps fixed-weight sweeps non-increasing in the objective; the adaptive
weight step carries no such guarantee, so convergence is judged on membership
drift with an iteration cap, and the objective is only recorded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Initial per-cluster feature weights (rows: emergency, error-sensitive,
# normal; columns: delay, buffer, error rate, energy).
INITIAL_WEIGHTS = np.array([
    [0.5, 0.5, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
])

# Columns where a lower mean is more favorable (delay, error rate); the other
# two are direct-importance.
INVERSE_FEATURES = (0, 2)

WEIGHT_RATE_MIN = 0.05
WEIGHT_RATE_MAX = 0.30


@dataclass
class ClusterModel:
    centers: np.ndarray        # 3 x 4
    weights: np.ndarray        # 3 x 4
    memberships: np.ndarray    # N x 3
    fuzziness: float
    objective_trace: list
    iterations: int


def normalize_features(raw: np.ndarray,
                       missing: np.ndarray | None = None,
                       spans: list | None = None) -> np.ndarray:
    """Normalize each column to [0,1].

    With spans, column j is scaled against its fixed physical range
    (lo, hi); a None entry falls back to the column min-max. Fixed ranges
    matter when the population is homogeneous: per-snapshot min-max blows
    measurement noise up to full scale and the clustering then partitions
    noise, while against a physical range near-equal nodes stay near-equal.

    missing marks entries with no sample yet; they land on the column midpoint
    0.5 and are excluded from any min/max. A flat column (max == min) also
    collapses to 0.5 for every node.
    """
    X = np.asarray(raw, dtype=float).copy()
    n, d = X.shape
    if missing is None:
        missing = np.zeros((n, d), dtype=bool)
    out = np.empty_like(X)
    for j in range(d):
        col = X[:, j]
        known = ~missing[:, j]
        if not known.any():
            out[:, j] = 0.5
            continue
        span = spans[j] if spans is not None else None
        if span is None:
            lo, hi = col[known].min(), col[known].max()
        else:
            lo, hi = span
        if hi == lo:
            out[:, j] = 0.5
        else:
            out[:, j] = (col - lo) / (hi - lo)
        out[missing[:, j], j] = 0.5
    return np.clip(out, 0.0, 1.0)


def weighted_distance(x, v, w) -> float:
    """D = sum_j w_j (x_j - v_j)^2."""
    diff = np.asarray(x, dtype=float) - np.asarray(v, dtype=float)
    return float(np.dot(np.asarray(w, dtype=float), diff * diff))


def _distance_matrix(X, centers, weights):
    diff = X[:, None, :] - centers[None, :, :]
    return np.einsum("kj,ikj->ik", weights, diff * diff)


def update_memberships(X, centers, weights, m) -> np.ndarray:
    """Membership rows from weighted squared distances; rows sum to 1.

    Zero-distance nodes split membership equally among their zero-distance
    clusters and give 0 to the rest.
    """
    if m <= 1.0:
        raise ValueError("fuzziness m must be > 1")
    D = _distance_matrix(np.asarray(X, float), np.asarray(centers, float),
                         np.asarray(weights, float))
    n, K = D.shape
    U = np.zeros((n, K))
    zero_rows = (D == 0.0).any(axis=1)
    expo = 1.0 / (m - 1.0)
    if (~zero_rows).any():
        Dn = D[~zero_rows]
        inv = Dn ** -expo
        U[~zero_rows] = inv / inv.sum(axis=1, keepdims=True)
    for i in np.nonzero(zero_rows)[0]:
        zs = D[i] == 0.0
        U[i, zs] = 1.0 / zs.sum()
    return U


def update_centers(X, U, m, previous=None) -> np.ndarray:
    """Weighted means v_kj = sum u^m x / sum u^m; a cluster nobody belongs to
    keeps its previous center."""
    X = np.asarray(X, float)
    um = np.asarray(U, float) ** m
    den = um.sum(axis=0)
    centers = np.zeros((um.shape[1], X.shape[1]))
    for k in range(um.shape[1]):
        if den[k] == 0.0:
            if previous is None:
                raise ValueError("degenerate cluster with no previous center")
            centers[k] = previous[k]
        else:
            centers[k] = (um[:, k] @ X) / den[k]
    return centers


def update_feature_weights(X, U, w_current, w_init, m,
                           inverse_features=INVERSE_FEATURES,
                           rate_min=WEIGHT_RATE_MIN, rate_max=WEIGHT_RATE_MAX) -> np.ndarray:
    """Importance-driven weight refresh, blended against the current weights.

    Weighted cluster means feed a per-cluster min-max importance score,
    inverted for the columns where low is good; the blend rate per entry grows
    with the initial weight so anchor features move faster toward the dynamic
    weights. Output rows are normalized to the simplex.
    """
    X = np.asarray(X, float)
    U = np.asarray(U, float)
    w_current = np.asarray(w_current, float)
    w_init = np.asarray(w_init, float)
    K, d = w_current.shape

    um = U ** m
    den = um.sum(axis=0)
    out = np.empty_like(w_current)
    for k in range(K):
        if den[k] == 0.0:
            xbar = np.full(d, 0.5)
        else:
            xbar = (um[:, k] @ X) / den[k]
        lo, hi = xbar.min(), xbar.max()
        if hi == lo:
            mu = np.ones(d)
        else:
            mu = (xbar - lo) / (hi - lo)
            mu[list(inverse_features)] = 1.0 - mu[list(inverse_features)]
        wdyn = mu / mu.sum()
        rate = rate_min + (rate_max - rate_min) * w_init[k]
        mixed = rate * w_current[k] + (1.0 - rate) * wdyn
        out[k] = mixed / mixed.sum()
    return out


def objective(X, U, centers, weights, m) -> float:
    """J = sum_i sum_k u_ik^m D_ik."""
    D = _distance_matrix(np.asarray(X, float), np.asarray(centers, float),
                         np.asarray(weights, float))
    return float((np.asarray(U, float) ** m * D).sum())


def run_wfcm(X, cfg, rng, adapt_weights=True, w_init=None) -> ClusterModel:
    """Full clustering loop on a normalized feature matrix.

    rng is a random.Random; the only randomness is the choice of 3 distinct
    rows as initial centers. adapt_weights=False holds the weights at their
    initial rows, which is the plain fixed-weight FCM the descent property
    applies to.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < 3:
        raise ValueError("need at least 3 rows to cluster")
    m = cfg.fuzziness
    if w_init is None:
        w_init = INITIAL_WEIGHTS
    w_init = np.asarray(w_init, dtype=float)
    weights = w_init.copy()

    idx = rng.sample(range(n), 3)
    centers = X[idx].copy()

    U = None
    trace = []
    iterations = 0
    for iterations in range(1, cfg.max_iter + 1):
        U_new = update_memberships(X, centers, weights, m)
        drift = np.abs(U_new - U).max() if U is not None else np.inf
        U = U_new
        centers = update_centers(X, U, m, previous=centers)
        if adapt_weights:
            weights = update_feature_weights(
                X, U, weights, w_init, m,
                rate_min=cfg.weight_rate_min, rate_max=cfg.weight_rate_max)
        trace.append(objective(X, U, centers, weights, m))
        if drift < cfg.tol:
            break
    return ClusterModel(centers=centers, weights=weights, memberships=U,
                        fuzziness=m, objective_trace=trace, iterations=iterations)
