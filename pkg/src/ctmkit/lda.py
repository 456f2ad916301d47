"""Latent Dirichlet Allocation via collapsed Gibbs sampling.

The sampler integrates out the document-topic and topic-term distributions
and resamples per-token topic labels from the count-based full conditional

    p(z_i = k | rest) ~ (n_dk + alpha) * (n_kv + beta) / (n_k + V*beta)

Point estimates are posterior means averaged over post-burn-in sweeps taken
at a fixed thinning interval:

    theta_dk = (n_dk + alpha) / (len_d + K*alpha)
    phi_kv   = (n_kv + beta)  / (n_k  + V*beta)

The whole chain is driven by an inline xorshift64* generator, so a given
(counts, config) pair reproduces bit-identical estimates.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .tfidf import TermMatrix
from .util import fmt_float

logger = logging.getLogger(__name__)

LL_EVERY = 50  # sweeps between log-likelihood checkpoints


@dataclass
class LdaConfig:
    n_topics: int = 8
    alpha: float | None = None  # None -> 50 / n_topics
    beta: float = 0.01
    n_iterations: int = 1000
    burn_in: int = 500
    thin: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.n_topics < 1:
            raise ValueError(f"n_topics must be >= 1, got {self.n_topics}")
        if self.alpha is None:
            self.alpha = 50.0 / self.n_topics
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError(f"alpha and beta must be positive, got {self.alpha}, {self.beta}")
        if not 0 <= self.burn_in < self.n_iterations:
            raise ValueError(
                f"burn_in must lie in [0, n_iterations), got {self.burn_in} vs {self.n_iterations}"
            )
        if self.thin < 1:
            raise ValueError(f"thin must be >= 1, got {self.thin}")


@dataclass
class LdaModel:
    theta: np.ndarray  # n_docs x K, rows on the simplex
    phi: np.ndarray  # K x V, rows on the simplex
    assignments: tuple[np.ndarray, np.ndarray, np.ndarray]  # (doc_of, term_of, z)
    config: LdaConfig
    terms: list[str] = field(default_factory=list)
    log_likelihood: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_docs(self) -> int:
        return self.theta.shape[0]

    @property
    def n_topics(self) -> int:
        return self.theta.shape[1]


@njit(cache=True)
def _gibbs(doc_of, term_of, n_docs, n_terms, n_topics, alpha, beta,
           n_iter, burn_in, thin, seed, check_counts):
    n_tokens = doc_of.shape[0]
    K = n_topics
    V = n_terms
    z = np.zeros(n_tokens, dtype=np.int64)
    n_dk = np.zeros((n_docs, K), dtype=np.int64)
    n_kv = np.zeros((K, V), dtype=np.int64)
    n_k = np.zeros(K, dtype=np.int64)
    doc_len = np.zeros(n_docs, dtype=np.int64)
    theta_acc = np.zeros((n_docs, K), dtype=np.float64)
    phi_acc = np.zeros((K, V), dtype=np.float64)
    n_ll = n_iter // LL_EVERY
    ll = np.zeros(n_ll, dtype=np.float64)
    cumulative = np.zeros(K, dtype=np.float64)

    # xorshift64* state; any nonzero seed works
    state = np.uint64(2 * seed + 1)

    for i in range(n_tokens):
        state ^= state >> np.uint64(12)
        state ^= state << np.uint64(25)
        state ^= state >> np.uint64(27)
        u = np.float64((state * np.uint64(0x2545F4914F6CDD1D)) >> np.uint64(11)) / 9007199254740992.0
        k = int(u * K)
        if k == K:
            k = K - 1
        z[i] = k
        n_dk[doc_of[i], k] += 1
        n_kv[k, term_of[i]] += 1
        n_k[k] += 1
        doc_len[doc_of[i]] += 1

    n_samples = 0
    ll_idx = 0
    for sweep in range(1, n_iter + 1):
        for i in range(n_tokens):
            d = doc_of[i]
            v = term_of[i]
            k = z[i]
            n_dk[d, k] -= 1
            n_kv[k, v] -= 1
            n_k[k] -= 1
            total = 0.0
            for kk in range(K):
                total += (n_dk[d, kk] + alpha) * (n_kv[kk, v] + beta) / (n_k[kk] + V * beta)
                cumulative[kk] = total
            state ^= state >> np.uint64(12)
            state ^= state << np.uint64(25)
            state ^= state >> np.uint64(27)
            u = np.float64((state * np.uint64(0x2545F4914F6CDD1D)) >> np.uint64(11)) / 9007199254740992.0
            r = u * total
            k = 0
            while cumulative[k] < r and k < K - 1:
                k += 1
            z[i] = k
            n_dk[d, k] += 1
            n_kv[k, v] += 1
            n_k[k] += 1

        if check_counts:
            for d in range(n_docs):
                s = 0
                for kk in range(K):
                    s += n_dk[d, kk]
                assert s == doc_len[d]
            for kk in range(K):
                s = 0
                for v in range(V):
                    s += n_kv[kk, v]
                assert s == n_k[kk]

        if sweep > burn_in and (sweep - burn_in) % thin == 0:
            for d in range(n_docs):
                denom = doc_len[d] + K * alpha
                for kk in range(K):
                    theta_acc[d, kk] += (n_dk[d, kk] + alpha) / denom
            for kk in range(K):
                denom = n_k[kk] + V * beta
                for v in range(V):
                    phi_acc[kk, v] += (n_kv[kk, v] + beta) / denom
            n_samples += 1

        if sweep % LL_EVERY == 0 and ll_idx < n_ll:
            total_ll = 0.0
            for i in range(n_tokens):
                d = doc_of[i]
                v = term_of[i]
                p = 0.0
                for kk in range(K):
                    p += ((n_dk[d, kk] + alpha) / (doc_len[d] + K * alpha)) * \
                        ((n_kv[kk, v] + beta) / (n_k[kk] + V * beta))
                total_ll += np.log(p)
            ll[ll_idx] = total_ll
            ll_idx += 1

    if n_samples == 0:
        for d in range(n_docs):
            denom = doc_len[d] + K * alpha
            for kk in range(K):
                theta_acc[d, kk] += (n_dk[d, kk] + alpha) / denom
        for kk in range(K):
            denom = n_k[kk] + V * beta
            for v in range(V):
                phi_acc[kk, v] += (n_kv[kk, v] + beta) / denom
        n_samples = 1

    return z, n_dk, n_kv, theta_acc / n_samples, phi_acc / n_samples, ll


def _expand_tokens(counts: TermMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Flatten a counts matrix into parallel (doc, term) token arrays in
    deterministic row-major / column order."""
    coo = counts.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    reps = coo.data[order].astype(np.int64)
    doc_of = np.repeat(coo.row[order].astype(np.int64), reps)
    term_of = np.repeat(coo.col[order].astype(np.int64), reps)
    return doc_of, term_of


def fit_lda(counts: TermMatrix, config: LdaConfig, check_counts: bool = False) -> LdaModel:
    """Run collapsed Gibbs sampling on a counts matrix.

    ``check_counts`` verifies the count bookkeeping identities after every
    sweep (slow; meant for tests). Deterministic for a fixed config.
    """
    if counts.kind != "counts":
        raise ValueError(f"fit_lda expects a counts matrix, got kind={counts.kind!r}")
    if counts.n_terms == 0:
        raise ValueError("fit_lda: empty vocabulary")
    doc_of, term_of = _expand_tokens(counts)
    if doc_of.size == 0:
        raise ValueError("fit_lda: no tokens to sample")
    if config.n_topics > doc_of.size:
        logger.warning(
            "n_topics=%d exceeds total token count %d; topics will be sparse",
            config.n_topics, doc_of.size,
        )
    z, n_dk, n_kv, theta, phi, ll = _gibbs(
        doc_of, term_of,
        counts.n_docs, counts.n_terms, config.n_topics,
        float(config.alpha), float(config.beta),
        config.n_iterations, config.burn_in, config.thin,
        int(config.seed) & 0x7FFFFFFFFFFFFFFF, check_counts,
    )
    return LdaModel(
        theta=theta,
        phi=phi,
        assignments=(doc_of, term_of, z),
        config=config,
        terms=list(counts.vocabulary.terms),
        log_likelihood=ll,
    )


def doc_topic_matrix(model: LdaModel) -> np.ndarray:
    """Per-document topic probabilities, row-aligned with the corpus."""
    return model.theta.copy()


def lda_top_terms(model: LdaModel, k: int) -> list[list[str]]:
    """Top-k terms per topic by descending probability, ties lexicographic."""
    V = model.phi.shape[1]
    if not 1 <= k <= V:
        raise ValueError(f"k must lie in [1, {V}], got {k}")
    out = []
    for t in range(model.n_topics):
        row = model.phi[t]
        ranked = sorted(range(V), key=lambda v: (-row[v], model.terms[v]))
        out.append([model.terms[v] for v in ranked[:k]])
    return out


def export_lda(model: LdaModel, out_dir, ids: list[str] | None = None) -> list[Path]:
    """Write theta.csv, phi.csv, config.json into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    K = model.n_topics
    theta_path = out_dir / "theta.csv"
    header = "doc_id," + ",".join(f"topic_{t}" for t in range(K))
    lines = [header]
    for i in range(model.n_docs):
        doc_id = ids[i] if ids is not None else str(i)
        lines.append(doc_id + "," + ",".join(fmt_float(x) for x in model.theta[i]))
    theta_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    phi_path = out_dir / "phi.csv"
    lines = ["topic," + ",".join(model.terms)]
    for t in range(K):
        lines.append(str(t) + "," + ",".join(fmt_float(x) for x in model.phi[t]))
    phi_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    cfg_path = out_dir / "config.json"
    cfg = {
        "n_topics": model.config.n_topics,
        "alpha": model.config.alpha,
        "beta": model.config.beta,
        "n_iterations": model.config.n_iterations,
        "burn_in": model.config.burn_in,
        "thin": model.config.thin,
        "seed": model.config.seed,
    }
    cfg_path.write_text(json.dumps(cfg, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return [theta_path, phi_path, cfg_path]
