"""Descriptive outputs: per-topic shares, ranked terms, evolution over time,
and the byte-stable report export."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clustering import ClusterResult, MethodComparison, save_comparison
from .preprocess import CleanDoc
from .util import dump_json, sha256_file, write_csv

logger = logging.getLogger(__name__)

REPORT_FILES = [
    "topics.json",
    "shares.csv",
    "evolution.csv",
    "wordcloud.json",
    "comparison.csv",
    "coords.csv",
    "manifest.json",
]


def topic_shares(labels, k: int) -> dict[int, float]:
    """Percentage of documents per topic; empty topics report 0.0."""
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise ValueError(f"labels must lie in [0, {k})")
    n = labels.size
    return {t: 100.0 * float((labels == t).sum()) / n for t in range(k)}


def topic_top_terms(
    docs: list[CleanDoc],
    labels,
    k_terms: int = 30,
    weighting: str = "distinctive",
) -> list[list[tuple[str, float]]]:
    """Ranked (term, weight) lists per topic.

    The default "distinctive" weighting scores a term by
    tf_topic * ln(1 + k / topics_containing(term)), which keeps topic lists
    from all showing the same corpus-common words; "frequency" ranks by raw
    within-topic counts. Ties break lexicographically. Empty topics yield
    empty lists (logged).
    """
    labels = np.asarray(labels)
    if len(docs) != labels.size:
        raise ValueError(f"{len(docs)} docs vs {labels.size} labels")
    if weighting not in ("distinctive", "frequency"):
        raise ValueError(f"unknown weighting '{weighting}'")
    k = int(labels.max()) + 1 if labels.size else 0

    topic_tf: list[dict[str, int]] = [dict() for _ in range(k)]
    for doc, label in zip(docs, labels):
        tf = topic_tf[label]
        for term in doc.terms:
            tf[term] = tf.get(term, 0) + 1
    df_topics: dict[str, int] = {}
    for tf in topic_tf:
        for term in tf:
            df_topics[term] = df_topics.get(term, 0) + 1

    out = []
    for t in range(k):
        tf = topic_tf[t]
        if not tf:
            logger.warning("topic %d has no documents or terms; empty term list", t)
            out.append([])
            continue
        if weighting == "distinctive":
            scored = [(term, count * np.log(1.0 + k / df_topics[term]))
                      for term, count in tf.items()]
        else:
            scored = [(term, float(count)) for term, count in tf.items()]
        scored.sort(key=lambda item: (-item[1], item[0]))
        out.append([(term, float(w)) for term, w in scored[:k_terms]])
    return out


@dataclass
class EvolutionTable:
    years: list[int]  # contiguous from min to max
    counts: np.ndarray  # n_years x k
    ratios: np.ndarray  # n_years x k; each topic's column sums to 1 when non-empty


def topic_evolution(labels, years, k: int | None = None) -> EvolutionTable:
    """Counts and within-topic ratios per (year, topic); missing years get
    zero rows so the year axis is contiguous."""
    labels = np.asarray(labels)
    years = np.asarray(years)
    if labels.shape != years.shape:
        raise ValueError("labels and years must align")
    if k is None:
        k = int(labels.max()) + 1
    y0, y1 = int(years.min()), int(years.max())
    span = list(range(y0, y1 + 1))
    counts = np.zeros((len(span), k), dtype=np.int64)
    for label, year in zip(labels, years):
        counts[year - y0, label] += 1
    totals = counts.sum(axis=0)
    ratios = np.zeros_like(counts, dtype=np.float64)
    nonzero = totals > 0
    ratios[:, nonzero] = counts[:, nonzero] / totals[nonzero]
    return EvolutionTable(years=span, counts=counts, ratios=ratios)


@dataclass
class TopicReport:
    k: int
    ids: list[str]
    labels: np.ndarray
    shares: dict[int, float]
    top_terms: list[list[tuple[str, float]]]
    evolution: EvolutionTable
    comparison: MethodComparison
    coords: np.ndarray  # n x 2
    margins: np.ndarray  # distance gap to the second-closest centroid
    config_snapshot: dict = field(default_factory=dict)


def assignment_margins(X, result: ClusterResult) -> np.ndarray:
    """Per-document (second-closest - closest) centroid distance; a proxy for
    how decisively a hard label was assigned."""
    X = np.asarray(X, dtype=np.float64)
    d2 = ((X[:, None, :] - result.centroids[None, :, :]) ** 2).sum(axis=2)
    d = np.sqrt(np.maximum(d2, 0.0))
    if d.shape[1] < 2:
        return np.zeros(X.shape[0])
    part = np.sort(d, axis=1)
    return part[:, 1] - part[:, 0]


def build_report(
    docs: list[CleanDoc],
    years,
    result: ClusterResult,
    comparison: MethodComparison,
    coords: np.ndarray,
    latent: np.ndarray,
    k_terms: int = 30,
    weighting: str = "distinctive",
    config_snapshot: dict | None = None,
) -> TopicReport:
    ids = [d.id for d in docs]
    k = result.k
    return TopicReport(
        k=k,
        ids=ids,
        labels=result.labels,
        shares=topic_shares(result.labels, k),
        top_terms=topic_top_terms(docs, result.labels, k_terms, weighting),
        evolution=topic_evolution(result.labels, years, k),
        comparison=comparison,
        coords=np.asarray(coords, dtype=np.float64),
        margins=assignment_margins(latent, result),
        config_snapshot=config_snapshot or {},
    )


def export_report(report: TopicReport, out_dir) -> dict[str, str]:
    """Write the seven report files; returns {filename: sha256}.

    All output is byte-stable, so re-exporting an identical report reproduces
    identical hashes.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    topics_payload = []
    for t in range(report.k):
        doc_ids = [doc_id for doc_id, label in zip(report.ids, report.labels) if label == t]
        topics_payload.append({
            "topic": t,
            "share_percent": report.shares[t],
            "n_docs": len(doc_ids),
            "top_terms": [{"term": term, "weight": w} for term, w in report.top_terms[t]],
            "doc_ids": doc_ids,
        })
    dump_json(
        {
            "k": report.k,
            "topics": topics_payload,
            "docs": [
                {"id": doc_id, "label": int(label), "margin": float(margin)}
                for doc_id, label, margin in zip(report.ids, report.labels, report.margins)
            ],
            "config": report.config_snapshot,
        },
        out_dir / "topics.json",
    )

    write_csv(out_dir / "shares.csv", ["topic", "share_percent"],
              [(t, report.shares[t]) for t in range(report.k)])

    rows = []
    for yi, year in enumerate(report.evolution.years):
        for t in range(report.k):
            rows.append((year, t, int(report.evolution.counts[yi, t]),
                         float(report.evolution.ratios[yi, t])))
    write_csv(out_dir / "evolution.csv", ["year", "topic", "count", "ratio"], rows)

    dump_json(
        [[{"term": term, "weight": w} for term, w in terms] for terms in report.top_terms],
        out_dir / "wordcloud.json",
    )

    save_comparison(report.comparison, out_dir / "comparison.csv")

    write_csv(out_dir / "coords.csv", ["id", "x", "y", "cluster_label"],
              [(doc_id, float(x), float(y), int(label))
               for doc_id, (x, y), label in zip(report.ids, report.coords, report.labels)])

    hashes = {
        name: sha256_file(out_dir / name)
        for name in REPORT_FILES if name != "manifest.json"
    }
    dump_json({"files": hashes}, out_dir / "manifest.json")
    return hashes
