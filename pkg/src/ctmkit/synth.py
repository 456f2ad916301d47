"""Planted-topic corpus generator used as the recovery-test oracle."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus, Document


@dataclass
class PlantedSpec:
    n_topics: int = 8
    n_docs: int = 200
    doc_length: int = 60
    vocab_per_topic: int = 40
    overlap_fraction: float = 0.2
    year_range: tuple[int, int] = (2004, 2021)
    mixing_concentration: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n_topics < 2:
            raise ValueError(f"n_topics must be >= 2, got {self.n_topics}")
        if not 0 <= self.overlap_fraction < 1:
            raise ValueError(f"overlap_fraction must lie in [0, 1), got {self.overlap_fraction}")
        if self.mixing_concentration <= 0:
            raise ValueError("mixing_concentration must be positive")
        if self.year_range[0] > self.year_range[1]:
            raise ValueError(f"bad year_range {self.year_range}")


def _alpha_id(i: int) -> str:
    # base-26 word, 3 letters, purely alphabetic so cleaning keeps it intact
    letters = []
    for _ in range(3):
        letters.append(chr(ord("a") + i % 26))
        i //= 26
    return "".join(reversed(letters))


def planted_vocabulary(spec: PlantedSpec) -> tuple[list[str], list[np.ndarray]]:
    """Deterministic term universe: a shared pool of round(overlap *
    vocab_per_topic) terms plus disjoint per-topic blocks. Returns the full
    term list and, per topic, the term-column ids of its vocabulary."""
    n_shared = round(spec.overlap_fraction * spec.vocab_per_topic)
    n_unique = spec.vocab_per_topic - n_shared
    if n_unique < 1:
        raise ValueError(
            f"vocabulary exhausted: overlap {spec.overlap_fraction} leaves "
            f"{n_unique} unique terms per topic (vocab_per_topic={spec.vocab_per_topic})"
        )
    terms: list[str] = [f"common{_alpha_id(j)}" for j in range(n_shared)]
    topic_term_ids: list[np.ndarray] = []
    for t in range(spec.n_topics):
        own = [f"vocab{_alpha_id(t)}{_alpha_id(j)}" for j in range(n_unique)]
        start = len(terms)
        terms.extend(own)
        topic_term_ids.append(np.concatenate([
            np.arange(n_shared, dtype=np.int64),
            np.arange(start, start + n_unique, dtype=np.int64),
        ]))
    return terms, topic_term_ids


def generate_planted(spec: PlantedSpec) -> tuple[Corpus, np.ndarray, np.ndarray, np.ndarray]:
    """Build (corpus, true_labels, true_theta, true_phi).

    Document mixtures are Dirichlet with the given concentration; the argmax
    topic is the true label; each token draws a topic from the mixture and a
    term from that topic's distribution, and the tokens are joined with spaces
    into a synthetic abstract.
    """
    k = spec.n_topics
    terms, topic_term_ids = planted_vocabulary(spec)

    rng = np.random.default_rng(spec.seed)
    V = len(terms)
    true_phi = np.zeros((k, V))
    for t in range(k):
        true_phi[t, topic_term_ids[t]] = rng.dirichlet(np.ones(spec.vocab_per_topic))
    # per-topic cumulative mass over its own vocabulary, for exact-support draws
    topic_cum = [true_phi[t, topic_term_ids[t]].cumsum() for t in range(k)]

    true_theta = rng.dirichlet(
        np.full(k, spec.mixing_concentration), size=spec.n_docs
    )
    true_labels = true_theta.argmax(axis=1)
    years = rng.integers(spec.year_range[0], spec.year_range[1] + 1, size=spec.n_docs)

    documents = []
    for i in range(spec.n_docs):
        z = rng.choice(k, size=spec.doc_length, p=true_theta[i])
        u = rng.random(spec.doc_length)
        tokens = []
        for zi, ui in zip(z, u):
            j = min(int(np.searchsorted(topic_cum[zi], ui, side="right")),
                    spec.vocab_per_topic - 1)
            tokens.append(terms[topic_term_ids[zi][j]])
        documents.append(Document(
            id=f"doc{i:04d}",
            title=f"synthetic document {i}",
            abstract=" ".join(tokens),
            year=int(years[i]),
        ))
    corpus = Corpus(documents=documents, source_note=f"planted(seed={spec.seed})")
    return corpus, true_labels, true_theta, true_phi


def save_truth(path, true_labels, true_theta, true_phi, terms: list[str] | None = None) -> None:
    payload = {
        "labels": [int(x) for x in true_labels],
        "theta": [[float(x) for x in row] for row in true_theta],
        "phi": [[float(x) for x in row] for row in true_phi],
    }
    if terms is not None:
        payload["terms"] = list(terms)
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")
