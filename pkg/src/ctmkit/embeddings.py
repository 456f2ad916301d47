"""Document embedding vectors: binary/JSONL file loading plus a deterministic
hash embedder used as a test double for external sentence encoders.

Binary layout ("CTME", little-endian):
    magic 4s = b"CTME" | version u16 = 1 | count u32 | dim u32
    then per record: id_len u16, id UTF-8 bytes, dim float32 values
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .preprocess import CleanConfig, clean_text, default_stoplist
from .util import term_rng

logger = logging.getLogger(__name__)

MAGIC = b"CTME"
VERSION = 1


class EmbeddingFormatError(ValueError):
    """Raised on malformed embedding files or corpus misalignment."""


@dataclass
class EmbeddingMatrix:
    ids: list[str]
    vectors: np.ndarray  # n_docs x dim
    provider_tag: str = ""

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    @property
    def n_docs(self) -> int:
        return int(self.vectors.shape[0])


def save_embeddings(em: EmbeddingMatrix, path, fmt: str = "ctme") -> None:
    path = Path(path)
    if fmt == "ctme":
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<HII", VERSION, em.n_docs, em.dim))
            for i, doc_id in enumerate(em.ids):
                id_bytes = doc_id.encode("utf-8")
                fh.write(struct.pack("<H", len(id_bytes)))
                fh.write(id_bytes)
                fh.write(em.vectors[i].astype("<f4").tobytes())
    elif fmt == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for i, doc_id in enumerate(em.ids):
                rec = {"id": doc_id, "vector": [float(x) for x in em.vectors[i]]}
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    else:
        raise EmbeddingFormatError(f"unknown embedding format '{fmt}'")


def _read_ctme(path: Path) -> tuple[list[str], np.ndarray]:
    data = path.read_bytes()
    if len(data) < 14 or data[:4] != MAGIC:
        raise EmbeddingFormatError(f"{path}: bad magic; not a CTME embedding file")
    version, count, dim = struct.unpack_from("<HII", data, 4)
    if version != VERSION:
        raise EmbeddingFormatError(f"{path}: unsupported version {version}")
    if dim < 1:
        raise EmbeddingFormatError(f"{path}: dim must be >= 1, got {dim}")
    ids = []
    vectors = np.empty((count, dim), dtype=np.float64)
    offset = 14
    for i in range(count):
        if offset + 2 > len(data):
            raise EmbeddingFormatError(f"{path}: truncated record {i}")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len + 4 * dim > len(data):
            raise EmbeddingFormatError(
                f"{path}: record {i} shorter than header dim {dim} promises"
            )
        ids.append(data[offset:offset + id_len].decode("utf-8"))
        offset += id_len
        vectors[i] = np.frombuffer(data, dtype="<f4", count=dim, offset=offset)
        offset += 4 * dim
    if offset != len(data):
        raise EmbeddingFormatError(f"{path}: {len(data) - offset} trailing bytes")
    return ids, vectors


def _read_jsonl(path: Path) -> tuple[list[str], np.ndarray]:
    ids = []
    rows = []
    dim = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise EmbeddingFormatError(f"{path}:{line_no}: invalid JSON ({exc.msg})")
            if "id" not in rec or "vector" not in rec:
                raise EmbeddingFormatError(f"{path}:{line_no}: need 'id' and 'vector'")
            vec = rec["vector"]
            if dim is None:
                dim = len(vec)
                if dim < 1:
                    raise EmbeddingFormatError(f"{path}:{line_no}: empty vector")
            elif len(vec) != dim:
                raise EmbeddingFormatError(
                    f"{path}:{line_no}: dim mismatch, expected {dim} got {len(vec)}"
                )
            ids.append(str(rec["id"]))
            rows.append(vec)
    if not ids:
        raise EmbeddingFormatError(f"{path}: no embedding records")
    return ids, np.asarray(rows, dtype=np.float64)


def load_embeddings(path, corpus: Corpus) -> EmbeddingMatrix:
    """Load an embedding file and align its rows to corpus order.

    Errors on bad magic/version, per-record dim mismatch, any corpus id
    missing from the file, any file id unknown to the corpus, or non-finite
    values.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        sniff = fh.read(4)
    if sniff == MAGIC:
        ids, vectors = _read_ctme(path)
    else:
        ids, vectors = _read_jsonl(path)

    by_id = {doc_id: i for i, doc_id in enumerate(ids)}
    if len(by_id) != len(ids):
        raise EmbeddingFormatError(f"{path}: duplicate ids in embedding file")
    corpus_ids = corpus.ids
    unknown = [i for i in ids if i not in set(corpus_ids)]
    if unknown:
        raise EmbeddingFormatError(f"{path}: unknown id '{unknown[0]}' not in corpus")
    missing = [i for i in corpus_ids if i not in by_id]
    if missing:
        raise EmbeddingFormatError(f"{path}: missing embedding for corpus id '{missing[0]}'")
    order = [by_id[i] for i in corpus_ids]
    aligned = vectors[order]
    if not np.isfinite(aligned).all():
        raise EmbeddingFormatError(f"{path}: non-finite values in embedding file")
    return EmbeddingMatrix(ids=list(corpus_ids), vectors=aligned,
                           provider_tag=f"file:{path.name}")


def hash_embed(corpus: Corpus, dim: int, seed: int) -> EmbeddingMatrix:
    """Deterministic bag-of-terms embedding: the L2-normalized sum, over the
    abstract's cleaned non-stopword unigrams, of unit Gaussian term vectors
    keyed by (term, seed). Documents with no usable terms get zero vectors."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    config = CleanConfig(stoplist=default_stoplist(), exclusion_list=set())
    cache: dict[str, np.ndarray] = {}
    vectors = np.zeros((len(corpus), dim), dtype=np.float64)
    for row, doc in enumerate(corpus):
        tokens = [t for t in clean_text(doc.abstract, config) if t not in config.stoplist]
        if not tokens:
            logger.warning("hash_embed: document '%s' has no usable terms; zero vector", doc.id)
            continue
        acc = np.zeros(dim)
        for t in tokens:
            vec = cache.get(t)
            if vec is None:
                vec = term_rng(t, seed).standard_normal(dim)
                vec /= np.linalg.norm(vec)
                cache[t] = vec
            acc += vec
        norm = np.linalg.norm(acc)
        if norm > 0:
            acc /= norm
        vectors[row] = acc
    return EmbeddingMatrix(ids=corpus.ids, vectors=vectors,
                           provider_tag=f"hash-v1(dim={dim},seed={seed})")
