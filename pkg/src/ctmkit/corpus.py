"""Corpus loading, validation, and summary statistics.

A corpus is an ordered list of documents (id, title, abstract, year); the
order fixes the row order of every matrix built downstream.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

YEAR_MIN, YEAR_MAX = 1900, 2100


class CorpusError(ValueError):
    """Raised on malformed corpus files or invariant violations."""


@dataclass(frozen=True)
class Document:
    id: str
    title: str
    abstract: str
    year: int


@dataclass
class Corpus:
    documents: list[Document]
    source_note: str = ""

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    @property
    def ids(self) -> list[str]:
        return [d.id for d in self.documents]

    @property
    def years(self) -> list[int]:
        return [d.year for d in self.documents]


@dataclass
class CorpusStats:
    n_docs: int
    year_min: int
    year_max: int
    docs_per_year: dict[int, int] = field(default_factory=dict)
    mean_abstract_tokens: float = 0.0


def _validate_record(rec: dict, line_no: int, seen_ids: set) -> Document:
    for key in ("id", "abstract", "year"):
        if key not in rec or rec[key] in (None, ""):
            raise CorpusError(f"line {line_no}: missing required field '{key}'")
    doc_id = str(rec["id"])
    if doc_id in seen_ids:
        raise CorpusError(f"line {line_no}: duplicate id '{doc_id}'")
    abstract = str(rec["abstract"])
    if not abstract.strip():
        raise CorpusError(f"line {line_no}: abstract empty for id '{doc_id}'")
    try:
        year = int(rec["year"])
    except (TypeError, ValueError):
        raise CorpusError(f"line {line_no}: year not an integer for id '{doc_id}'")
    if not YEAR_MIN <= year <= YEAR_MAX:
        raise CorpusError(
            f"line {line_no}: year {year} outside [{YEAR_MIN}, {YEAR_MAX}] for id '{doc_id}'"
        )
    title = str(rec.get("title") or "")
    return Document(id=doc_id, title=title, abstract=abstract, year=year)


def load_corpus(path, fmt: str | None = None) -> Corpus:
    """Load a corpus from JSONL (canonical) or headered CSV, preserving row order.

    ``fmt`` is "jsonl" or "csv"; inferred from the file suffix when omitted.
    Raises CorpusError with the offending line number on parse or invariant
    failures (missing field, duplicate id, bad year, empty corpus).
    """
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"corpus file not found: {path}")
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if fmt not in ("jsonl", "csv"):
        raise CorpusError(f"unknown corpus format '{fmt}'")

    docs: list[Document] = []
    seen: set[str] = set()
    if fmt == "jsonl":
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"line {line_no}: invalid JSON ({exc.msg})")
                if not isinstance(rec, dict):
                    raise CorpusError(f"line {line_no}: expected a JSON object")
                doc = _validate_record(rec, line_no, seen)
                seen.add(doc.id)
                docs.append(doc)
    else:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            required = {"id", "title", "abstract", "year"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise CorpusError(
                    f"line 1: CSV header must contain {sorted(required)}, "
                    f"got {reader.fieldnames}"
                )
            for line_no, rec in enumerate(reader, start=2):
                doc = _validate_record(rec, line_no, seen)
                seen.add(doc.id)
                docs.append(doc)

    if not docs:
        raise CorpusError(f"empty corpus: {path}")
    return Corpus(documents=docs, source_note=str(path))


def save_corpus(corpus: Corpus, path, fmt: str | None = None) -> None:
    """Serialize a corpus; load(save(c)) reproduces c document-for-document."""
    path = Path(path)
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if fmt == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for d in corpus:
                rec = {"id": d.id, "title": d.title, "abstract": d.abstract, "year": d.year}
                fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "title", "abstract", "year"])
            for d in corpus:
                writer.writerow([d.id, d.title, d.abstract, d.year])
    else:
        raise CorpusError(f"unknown corpus format '{fmt}'")


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Year extrema, per-year counts, and mean whitespace-token abstract length."""
    if len(corpus) == 0:
        raise CorpusError("corpus_stats: empty corpus")
    per_year: dict[int, int] = {}
    token_total = 0
    for d in corpus:
        per_year[d.year] = per_year.get(d.year, 0) + 1
        token_total += len(d.abstract.split())
    years = sorted(per_year)
    return CorpusStats(
        n_docs=len(corpus),
        year_min=years[0],
        year_max=years[-1],
        docs_per_year={y: per_year[y] for y in years},
        mean_abstract_tokens=token_total / len(corpus),
    )
