"""K-means with k-means++ restarts, silhouette validation, and the three-way
representation comparison (TF-IDF rows / embedding rows / fused latent rows).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .embeddings import EmbeddingMatrix
from .tfidf import TermMatrix
from .util import write_csv


@dataclass
class ClusterResult:
    labels: np.ndarray  # per-document cluster id in [0, k)
    centroids: np.ndarray  # k x dim
    inertia: float
    n_iterations: int
    seed: int

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])


@dataclass
class MethodComparison:
    rows: list[tuple[str, float, int, int]]  # (method, silhouette, k, n_docs)

    def silhouette_of(self, method: str) -> float:
        for name, score, _, _ in self.rows:
            if name == method:
                return score
        raise KeyError(method)


def _assign(X: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # argmin breaks ties toward the lower cluster id
    d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return labels, d2


def _plusplus_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]), dtype=np.float64)
    centroids[0] = X[rng.integers(n)]
    closest = ((X - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = closest.sum()
        if total <= 0:
            # all remaining mass at existing centroids; pick uniformly
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=closest / total)
        centroids[j] = X[idx]
        closest = np.minimum(closest, ((X - centroids[j]) ** 2).sum(axis=1))
    return centroids


def _lloyd(X: np.ndarray, k: int, max_iters: int, tol: float,
           rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, float, int]:
    n = X.shape[0]
    centroids = _plusplus_init(X, k, rng)
    prev_inertia = np.inf
    n_iter = 0
    for n_iter in range(1, max_iters + 1):
        labels, d2 = _assign(X, centroids)
        assigned = d2[np.arange(n), labels]

        # repair empty clusters with the point farthest from its centroid
        for cluster in range(k):
            if not (labels == cluster).any():
                far = int(np.argmax(assigned))
                labels[far] = cluster
                assigned[far] = 0.0

        inertia = float(assigned.sum())
        assert inertia <= prev_inertia * (1 + 1e-12) + 1e-12, \
            f"Lloyd inertia increased: {prev_inertia} -> {inertia}"
        prev_inertia = inertia

        new_centroids = centroids.copy()
        for cluster in range(k):
            members = X[labels == cluster]
            if len(members):
                new_centroids[cluster] = members.mean(axis=0)
        shift = np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max()
        centroids = new_centroids
        if shift < tol:
            break

    labels, d2 = _assign(X, centroids)
    inertia = float(d2[np.arange(n), labels].sum())
    return labels, centroids, inertia, n_iter


def kmeans(X, k: int = 8, restarts: int = 16, max_iters: int = 300,
           tol: float = 1e-6, seed: int = 0) -> ClusterResult:
    """Best-of-restarts k-means. Each restart is k-means++ seeded from an
    independent child stream of ``seed``; the result with the lowest inertia
    (first such restart on ties) wins. Deterministic for fixed inputs."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise ValueError("kmeans: non-finite values in input")
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need n >= k >= 1, got n={n}, k={k}")

    children = np.random.SeedSequence(seed).spawn(restarts)
    best = None
    for r in range(restarts):
        rng = np.random.default_rng(children[r])
        labels, centroids, inertia, n_iter = _lloyd(X, k, max_iters, tol, rng)
        if best is None or inertia < best[2]:
            best = (labels, centroids, inertia, n_iter)
    labels, centroids, inertia, n_iter = best
    return ClusterResult(labels=labels, centroids=centroids, inertia=inertia,
                         n_iterations=n_iter, seed=seed)


def silhouette(X, labels) -> float:
    """Mean silhouette s(i) = (b - a) / max(a, b) under Euclidean distance.

    a(i) is the mean distance to the point's own cluster (excluding itself);
    b(i) the smallest mean distance to any other cluster. Singleton clusters
    contribute 0. Requires n >= 3 and at least two distinct labels."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    n = X.shape[0]
    if n < 3:
        raise ValueError(f"silhouette needs n >= 3, got {n}")
    uniq = np.unique(labels)
    if uniq.size < 2:
        raise ValueError("silhouette needs at least 2 distinct labels")

    dist = np.sqrt(np.maximum(
        (X ** 2).sum(axis=1)[:, None] + (X ** 2).sum(axis=1)[None, :] - 2 * X @ X.T,
        0.0,
    ))
    np.fill_diagonal(dist, 0.0)
    masks = {c: labels == c for c in uniq}
    sizes = {c: int(masks[c].sum()) for c in uniq}

    scores = np.zeros(n)
    for i in range(n):
        own = labels[i]
        if sizes[own] == 1:
            scores[i] = 0.0
            continue
        a = dist[i, masks[own]].sum() / (sizes[own] - 1)
        b = min(dist[i, masks[c]].mean() for c in uniq if c != own)
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0 else (b - a) / denom
    return float(scores.mean())


def compare_methods(tfidf: TermMatrix, emb: EmbeddingMatrix, latent: np.ndarray,
                    k: int, seed: int, restarts: int = 16) -> MethodComparison:
    """Cluster each representation with the same k/seed policy and score each
    in its own space. Rows: tfidf, embedding, fused_latent."""
    reps = [
        ("tfidf", tfidf.toarray()),
        ("embedding", np.asarray(emb.vectors, dtype=np.float64)),
        ("fused_latent", np.asarray(latent, dtype=np.float64)),
    ]
    n = reps[0][1].shape[0]
    for name, X in reps:
        if X.shape[0] != n:
            raise ValueError(f"representation '{name}' has {X.shape[0]} rows, expected {n}")
    rows = []
    for name, X in reps:
        result = kmeans(X, k=k, restarts=restarts, seed=seed)
        rows.append((name, silhouette(X, result.labels), k, n))
    return MethodComparison(rows=rows)


def silhouette_sweep(X, ks, restarts: int = 16, seed: int = 0) -> list[tuple[int, float]]:
    """Silhouette score per candidate k; the choice of k stays with the user."""
    X = np.asarray(X, dtype=np.float64)
    out = []
    for k in ks:
        result = kmeans(X, k=k, restarts=restarts, seed=seed)
        out.append((int(k), silhouette(X, result.labels)))
    return out


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Chance-corrected pairwise agreement between two hard clusterings."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape:
        raise ValueError("label arrays must have identical shape")
    n = a.size
    _, a_idx = np.unique(a, return_inverse=True)
    _, b_idx = np.unique(b, return_inverse=True)
    table = np.zeros((a_idx.max() + 1, b_idx.max() + 1), dtype=np.int64)
    for i, j in zip(a_idx, b_idx):
        table[i, j] += 1
    sum_cells = sum(comb(int(x), 2) for x in table.ravel())
    sum_rows = sum(comb(int(x), 2) for x in table.sum(axis=1))
    sum_cols = sum(comb(int(x), 2) for x in table.sum(axis=0))
    total = comb(n, 2)
    expected = sum_rows * sum_cols / total if total else 0.0
    max_index = (sum_rows + sum_cols) / 2.0
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))


def save_cluster_result(result: ClusterResult, ids: list[str], out_dir) -> None:
    """labels.csv (id,label) and centroids.csv under out_dir."""
    from pathlib import Path

    out_dir = Path(out_dir)
    write_csv(out_dir / "labels.csv", ["id", "label"],
              [(doc_id, int(label)) for doc_id, label in zip(ids, result.labels)])
    dim = result.centroids.shape[1]
    write_csv(out_dir / "centroids.csv",
              ["cluster"] + [f"c{j}" for j in range(dim)],
              [[i] + [float(x) for x in row] for i, row in enumerate(result.centroids)])


def save_comparison(mc: MethodComparison, path) -> None:
    write_csv(path, ["method", "silhouette", "k", "n_docs"],
              [(m, float(s), k, n) for m, s, k, n in mc.rows])
