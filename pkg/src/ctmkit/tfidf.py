"""Sparse document-term counts and smoothed, L2-normalized TF-IDF.

Weighting follows idf(t) = ln((1+N)/(1+df(t))) + 1 with raw counts as tf.
Document-frequency proportion thresholds are applied before weighting; the
optional median cut then drops every term whose maximum pre-normalization
weight falls strictly below the median of all nonzero weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.io import mmread, mmwrite

from .preprocess import CleanDoc


@dataclass
class Vocabulary:
    terms: list[str]
    index: dict[str, int]
    doc_freq: np.ndarray  # documents containing each term, aligned with terms

    @classmethod
    def from_terms(cls, terms: list[str], doc_freq: np.ndarray) -> "Vocabulary":
        return cls(terms=list(terms), index={t: i for i, t in enumerate(terms)},
                   doc_freq=np.asarray(doc_freq, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.terms)


@dataclass
class TermMatrix:
    matrix: sp.csr_matrix
    vocabulary: Vocabulary
    kind: str  # "counts" or "tfidf"
    prenorm: sp.csr_matrix | None = None  # tfidf weights before row normalization

    @property
    def n_docs(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_terms(self) -> int:
        return self.matrix.shape[1]

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def count_matrix(docs: list[CleanDoc]) -> TermMatrix:
    """Document-term occurrence counts over exactly the terms that occur.

    Vocabulary columns are sorted lexicographically for reproducibility.
    Raises ValueError when every document is empty.
    """
    if not any(d.terms for d in docs):
        raise ValueError("count_matrix: all documents are empty")
    terms = sorted({t for d in docs for t in d.terms})
    index = {t: i for i, t in enumerate(terms)}
    rows, cols, vals = [], [], []
    doc_freq = np.zeros(len(terms), dtype=np.int64)
    for r, d in enumerate(docs):
        counts: dict[int, int] = {}
        for t in d.terms:
            c = index[t]
            counts[c] = counts.get(c, 0) + 1
        for c in sorted(counts):
            rows.append(r)
            cols.append(c)
            vals.append(counts[c])
            doc_freq[c] += 1
    matrix = sp.csr_matrix(
        (np.asarray(vals, dtype=np.float64), (rows, cols)),
        shape=(len(docs), len(terms)),
    )
    return TermMatrix(matrix=matrix, vocabulary=Vocabulary.from_terms(terms, doc_freq),
                      kind="counts")


def _keep_columns(tm: TermMatrix, keep: np.ndarray) -> tuple[sp.csr_matrix, Vocabulary]:
    cols = np.flatnonzero(keep)
    matrix = tm.matrix[:, cols].tocsr()
    matrix.eliminate_zeros()
    terms = [tm.vocabulary.terms[c] for c in cols]
    vocab = Vocabulary.from_terms(terms, tm.vocabulary.doc_freq[cols])
    return matrix, vocab


def filter_by_df(counts: TermMatrix, max_df: float = 0.8, min_df: float = 0.11) -> TermMatrix:
    """Drop terms whose document-frequency proportion exceeds max_df or falls
    below min_df. Raises ValueError when nothing survives."""
    if counts.kind != "counts":
        raise ValueError(f"filter_by_df expects a counts matrix, got kind={counts.kind!r}")
    if not 0 <= min_df < max_df <= 1:
        raise ValueError(f"require 0 <= min_df < max_df <= 1, got min_df={min_df}, max_df={max_df}")
    frac = counts.vocabulary.doc_freq / counts.n_docs
    keep = (frac >= min_df) & (frac <= max_df)
    if not keep.any():
        raise ValueError("filter_by_df: all terms filtered out")
    matrix, vocab = _keep_columns(counts, keep)
    return TermMatrix(matrix=matrix, vocabulary=vocab, kind="counts")


def _l2_normalize_rows(matrix: sp.csr_matrix) -> sp.csr_matrix:
    out = matrix.copy().astype(np.float64)
    norms = np.sqrt(np.asarray(out.multiply(out).sum(axis=1)).ravel())
    with np.errstate(divide="ignore"):
        scale = np.where(norms > 0, 1.0 / norms, 0.0)
    return (sp.diags(scale) @ out).tocsr()


def fit_tfidf(
    counts: TermMatrix,
    max_df: float = 0.8,
    min_df: float = 0.11,
    median_cut: bool = True,
) -> TermMatrix:
    """Counts -> TF-IDF: df thresholds, idf weighting, optional median cut,
    then L2 row normalization. Pre-normalization weights stay attached so the
    median rule can be re-applied or audited later."""
    filtered = filter_by_df(counts, max_df=max_df, min_df=min_df)
    n = filtered.n_docs
    idf = np.log((1.0 + n) / (1.0 + filtered.vocabulary.doc_freq)) + 1.0
    prenorm = (filtered.matrix @ sp.diags(idf)).tocsr()
    prenorm.eliminate_zeros()
    tm = TermMatrix(
        matrix=_l2_normalize_rows(prenorm),
        vocabulary=filtered.vocabulary,
        kind="tfidf",
        prenorm=prenorm,
    )
    if median_cut:
        tm = median_filter(tm)
    return tm


def median_filter(tfidf: TermMatrix) -> TermMatrix:
    """Drop terms whose maximum pre-normalization weight is strictly below the
    median of all nonzero pre-normalization weights; re-normalize rows."""
    if tfidf.kind != "tfidf":
        raise ValueError(f"median_filter expects a tfidf matrix, got kind={tfidf.kind!r}")
    if tfidf.prenorm is None:
        raise ValueError("median_filter: pre-normalization weights missing")
    values = tfidf.prenorm.data
    if values.size == 0:
        return tfidf
    median = float(np.median(values))
    col_max = np.asarray(tfidf.prenorm.max(axis=0).todense()).ravel()
    keep = col_max >= median
    if keep.all():
        return tfidf
    if not keep.any():
        raise ValueError("median_filter: all terms filtered out")
    prenorm, vocab = _keep_columns(
        TermMatrix(matrix=tfidf.prenorm, vocabulary=tfidf.vocabulary, kind="tfidf"), keep
    )
    return TermMatrix(
        matrix=_l2_normalize_rows(prenorm),
        vocabulary=vocab,
        kind="tfidf",
        prenorm=prenorm,
    )


def save_term_matrix(tm: TermMatrix, mtx_path, vocab_path) -> None:
    """Matrix Market coordinate export plus one term per line (line = column)."""
    mmwrite(str(mtx_path), tm.matrix.tocoo())
    Path(vocab_path).write_text(
        "".join(f"{t}\n" for t in tm.vocabulary.terms), encoding="utf-8"
    )


def load_term_matrix(mtx_path, vocab_path, kind: str) -> TermMatrix:
    # Round-trips the export; pre-normalization weights are not persisted.
    matrix = sp.csr_matrix(mmread(str(mtx_path)))
    terms = Path(vocab_path).read_text(encoding="utf-8").splitlines()
    doc_freq = np.asarray((matrix > 0).sum(axis=0)).ravel().astype(np.int64)
    return TermMatrix(matrix=matrix, vocabulary=Vocabulary.from_terms(terms, doc_freq), kind=kind)
