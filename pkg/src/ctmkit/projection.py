"""2-D projections of document representations.

``pca_2d`` is the deterministic baseline: mean-centered projection onto the
top-2 covariance eigenvectors with a fixed sign convention. ``neighbor_embed_2d``
is a simplified UMAP-style layout: an exact k-NN graph is converted to fuzzy
edge weights through a per-point bandwidth search, symmetrized by probabilistic
union, and optimized by seeded stochastic gradient descent on the fuzzy
cross-entropy with negative sampling. Exact neighbor search is affordable at
the corpus sizes this toolkit targets, and PCA initialization plus an inline
counter-based RNG make the layout reproducible for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.optimize import curve_fit

N_NEGATIVES = 5
INIT_SCALE = 10.0
# SGD inputs are snapped to this grid so that ulp-level noise (e.g. from
# translating the input data) cannot flip stochastic branches downstream;
# the layout is chaotic, so invariance requires bit-identical inputs.
QUANTUM = 2.0 ** -14


@dataclass
class Projection2D:
    coords: np.ndarray  # n x 2, row order equals corpus order
    method: str  # "pca" or "neighbor-embed"
    params: dict = field(default_factory=dict)
    seed: int = 0


def pca_2d(X) -> Projection2D:
    """Project onto the top-2 eigenvectors of the covariance matrix.

    Sign convention: each component's largest-magnitude loading is positive.
    Raises on rank-0 input (all rows identical).
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    if n < 3:
        raise ValueError(f"pca_2d needs n >= 3, got {n}")
    if d < 2:
        raise ValueError(f"pca_2d needs d >= 2, got {d}")
    Xc = X - X.mean(axis=0)
    if not Xc.any():
        raise ValueError("pca_2d: all rows identical (rank-0 input)")
    cov = (Xc.T @ Xc) / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:2]
    components = eigvecs[:, order]
    for j in range(2):
        lead = np.argmax(np.abs(components[:, j]))
        if components[lead, j] < 0:
            components[:, j] = -components[:, j]
    coords = Xc @ components
    return Projection2D(
        coords=coords,
        method="pca",
        params={"eigenvalues": [float(eigvals[i]) for i in order],
                "total_variance": float(eigvals.sum())},
    )


def _pairwise_distances(X: np.ndarray) -> np.ndarray:
    sq = (X ** 2).sum(axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2 * X @ X.T, 0.0)
    np.fill_diagonal(d2, 0.0)
    return np.sqrt(d2)


def _exact_knn(X: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices and distances of each point's k nearest neighbors, self excluded."""
    dist = _pairwise_distances(X)
    n = X.shape[0]
    idx = np.empty((n, k), dtype=np.int64)
    nd = np.empty((n, k), dtype=np.float64)
    for i in range(n):
        order = np.argsort(dist[i], kind="stable")
        order = order[order != i][:k]
        idx[i] = order
        nd[i] = dist[i, order]
    return idx, nd


def _smooth_bandwidths(nbr_dists: np.ndarray, n_neighbors: int,
                       n_iter: int = 64, tol: float = 1e-5) -> tuple[np.ndarray, np.ndarray]:
    """Per-point (rho, sigma): rho is the nearest-neighbor distance and sigma
    solves sum_j exp(-max(0, d_ij - rho) / sigma) = log2(n_neighbors)."""
    n = nbr_dists.shape[0]
    target = np.log2(n_neighbors)
    rho = nbr_dists[:, 0].copy()
    sigma = np.ones(n)
    for i in range(n):
        shifted = np.maximum(nbr_dists[i] - rho[i], 0.0)
        lo, hi, mid = 0.0, np.inf, 1.0
        for _ in range(n_iter):
            val = np.exp(-shifted / mid).sum()
            if abs(val - target) < tol:
                break
            if val > target:
                hi = mid
                mid = (lo + hi) / 2.0
            else:
                lo = mid
                mid = mid * 2.0 if hi == np.inf else (lo + hi) / 2.0
        sigma[i] = max(mid, 1e-12)
    return rho, sigma


def fuzzy_graph(X: np.ndarray, n_neighbors: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Symmetrized fuzzy edge list (heads, tails, weights) over the exact k-NN
    graph, using the probabilistic union w = w1 + w2 - w1*w2."""
    n = X.shape[0]
    idx, nd = _exact_knn(X, n_neighbors)
    rho, sigma = _smooth_bandwidths(nd, n_neighbors)
    w = np.zeros((n, n))
    for i in range(n):
        w[i, idx[i]] = np.exp(-np.maximum(nd[i] - rho[i], 0.0) / sigma[i])
    sym = w + w.T - w * w.T
    heads, tails = np.nonzero(sym)
    return heads.astype(np.int64), tails.astype(np.int64), sym[heads, tails]


def _fit_kernel_params(min_dist: float, spread: float = 1.0) -> tuple[float, float]:
    """Least-squares fit of 1/(1 + a x^(2b)) to the offset exponential decay
    that is 1 inside min_dist and exp(-(x - min_dist)/spread) beyond it."""

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2.0 * b))

    xv = np.linspace(0, spread * 3, 300)
    yv = np.ones_like(xv)
    tail = xv >= min_dist
    yv[tail] = np.exp(-(xv[tail] - min_dist) / spread)
    (a, b), _ = curve_fit(curve, xv, yv)
    return float(a), float(b)


@njit(cache=True)
def _sgd_layout(coords, heads, tails, weights, a, b, epochs, seed):
    n = coords.shape[0]
    n_edges = heads.shape[0]
    state = np.uint64(2 * seed + 1)
    for epoch in range(epochs):
        alpha = 1.0 - epoch / epochs
        for e in range(n_edges):
            state ^= state >> np.uint64(12)
            state ^= state << np.uint64(25)
            state ^= state >> np.uint64(27)
            u = np.float64((state * np.uint64(0x2545F4914F6CDD1D)) >> np.uint64(11)) / 9007199254740992.0
            if u >= weights[e]:
                continue
            h = heads[e]
            t = tails[e]
            dx = coords[h, 0] - coords[t, 0]
            dy = coords[h, 1] - coords[t, 1]
            d2 = dx * dx + dy * dy
            if d2 > 0.0:
                coeff = (-2.0 * a * b * d2 ** (b - 1.0)) / (1.0 + a * d2 ** b)
                gx = min(max(coeff * dx, -4.0), 4.0)
                gy = min(max(coeff * dy, -4.0), 4.0)
                coords[h, 0] += alpha * gx
                coords[h, 1] += alpha * gy
                coords[t, 0] -= alpha * gx
                coords[t, 1] -= alpha * gy
            for _ in range(N_NEGATIVES):
                state ^= state >> np.uint64(12)
                state ^= state << np.uint64(25)
                state ^= state >> np.uint64(27)
                r = np.float64((state * np.uint64(0x2545F4914F6CDD1D)) >> np.uint64(11)) / 9007199254740992.0
                other = int(r * n)
                if other == n:
                    other = n - 1
                if other == h:
                    continue
                dx = coords[h, 0] - coords[other, 0]
                dy = coords[h, 1] - coords[other, 1]
                d2 = dx * dx + dy * dy
                if d2 > 0.0:
                    coeff = (2.0 * b) / ((0.001 + d2) * (1.0 + a * d2 ** b))
                    gx = min(max(coeff * dx, -4.0), 4.0)
                    gy = min(max(coeff * dy, -4.0), 4.0)
                else:
                    gx = 4.0
                    gy = 4.0
                coords[h, 0] += alpha * gx
                coords[h, 1] += alpha * gy
    return coords


def neighbor_embed_2d(X, n_neighbors: int = 15, min_dist: float = 0.1,
                      epochs: int = 200, seed: int = 0) -> Projection2D:
    """UMAP-style 2-D layout of X; deterministic for a fixed seed."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n_neighbors < 2:
        raise ValueError(f"n_neighbors must be >= 2, got {n_neighbors}")
    if n <= n_neighbors:
        raise ValueError(f"need n > n_neighbors, got n={n}, n_neighbors={n_neighbors}")
    X = X - X.mean(axis=0)  # keeps the distance arithmetic translation-stable
    heads, tails, weights = fuzzy_graph(X, n_neighbors)
    weights = np.round(weights / QUANTUM) * QUANTUM
    a, b = _fit_kernel_params(min_dist)

    init = pca_2d(X).coords
    scale = np.abs(init).max()
    coords = (init / scale * INIT_SCALE) if scale > 0 else init.copy()
    coords = np.round(coords / QUANTUM) * QUANTUM
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    coords = _sgd_layout(coords, heads, tails, weights, a, b, int(epochs),
                         int(seed) & 0x7FFFFFFFFFFFFFFF)
    return Projection2D(
        coords=coords,
        method="neighbor-embed",
        params={"n_neighbors": n_neighbors, "min_dist": min_dist,
                "epochs": int(epochs), "kernel_a": a, "kernel_b": b},
        seed=seed,
    )


def knn_recall(X, coords, k: int) -> float:
    """Mean fraction of each point's k nearest input-space neighbors that are
    also among its k nearest layout neighbors (exact search both sides)."""
    X = np.asarray(X, dtype=np.float64)
    coords = np.asarray(coords, dtype=np.float64)
    n = X.shape[0]
    if n <= k:
        raise ValueError(f"need n > k, got n={n}, k={k}")
    idx_hi, _ = _exact_knn(X, k)
    idx_lo, _ = _exact_knn(coords, k)
    overlap = 0
    for i in range(n):
        overlap += len(set(idx_hi[i]) & set(idx_lo[i]))
    return overlap / (n * k)
