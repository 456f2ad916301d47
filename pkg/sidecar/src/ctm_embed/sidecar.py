"""Encode corpus abstracts with a pretrained transformer and write the CTME
binary embedding file.

The input contract is corpus.jsonl (one object per line with id, title,
abstract, year); the output contract is the CTME format: magic b"CTME",
version u16=1, count u32, dim u32 (little-endian), then per record id_len u16,
UTF-8 id bytes, and dim little-endian float32 values. Only the abstract is
embedded. Output is written atomically (temp file + rename).
"""

from __future__ import annotations

import json
import logging
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

MAGIC = b"CTME"
VERSION = 1


class SidecarError(RuntimeError):
    """Model loading or corpus/output handling failed."""


@dataclass
class SidecarConfig:
    corpus: str
    model: str = "sentence-transformers/all-MiniLM-L6-v2"
    pooling: str = "mean"  # or "cls"
    batch_size: int = 16
    out: str = "embeddings.ctme"

    def __post_init__(self):
        if self.pooling not in ("mean", "cls"):
            raise ValueError(f"pooling must be 'mean' or 'cls', got '{self.pooling}'")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


def read_corpus_jsonl(path) -> list[tuple[str, str]]:
    """(id, abstract) pairs in file order; validates the documented schema."""
    path = Path(path)
    if not path.exists():
        raise SidecarError(f"corpus file not found: {path}")
    records = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SidecarError(f"{path}:{line_no}: invalid JSON ({exc.msg})")
            if "id" not in rec or "abstract" not in rec:
                raise SidecarError(f"{path}:{line_no}: need 'id' and 'abstract'")
            doc_id = str(rec["id"])
            if doc_id in seen:
                raise SidecarError(f"{path}:{line_no}: duplicate id '{doc_id}'")
            seen.add(doc_id)
            records.append((doc_id, str(rec["abstract"])))
    if not records:
        raise SidecarError(f"empty corpus: {path}")
    return records


def _load_model(model_id: str):
    try:
        from transformers import AutoModel, AutoTokenizer
    except ImportError as exc:  # pragma: no cover - environment guard
        raise SidecarError(f"transformers is not installed: {exc}")
    try:
        tokenizer = AutoTokenizer.from_pretrained(model_id)
        model = AutoModel.from_pretrained(model_id)
    except Exception as exc:
        raise SidecarError(f"failed to load model '{model_id}': {exc}")
    model.eval()
    return tokenizer, model


def _pool(last_hidden, attention_mask, pooling: str):
    import torch

    if pooling == "cls":
        return last_hidden[:, 0, :]
    mask = attention_mask.unsqueeze(-1).to(last_hidden.dtype)
    summed = (last_hidden * mask).sum(dim=1)
    counts = mask.sum(dim=1).clamp(min=1.0)
    return summed / counts


def write_ctme(path, ids: list[str], vectors: np.ndarray) -> None:
    """Atomic CTME write: temp file in the target directory, then rename."""
    path = Path(path)
    if not path.parent.exists():
        raise SidecarError(f"output directory does not exist: {path.parent}")
    vectors = np.ascontiguousarray(vectors, dtype="<f4")
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=".ctme.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<HII", VERSION, len(ids), vectors.shape[1]))
            for i, doc_id in enumerate(ids):
                id_bytes = doc_id.encode("utf-8")
                fh.write(struct.pack("<H", len(id_bytes)))
                fh.write(id_bytes)
                fh.write(vectors[i].tobytes())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def embed_corpus(config: SidecarConfig) -> Path:
    """Encode every abstract in corpus order and write the CTME file.

    Abstracts longer than the model's sequence limit are truncated (logged
    per document). Returns the output path.
    """
    import torch

    records = read_corpus_jsonl(config.corpus)
    tokenizer, model = _load_model(config.model)
    limits = [512]
    tok_max = getattr(tokenizer, "model_max_length", None)
    if tok_max and tok_max < 1_000_000:  # unset tokenizers carry a huge sentinel
        limits.append(int(tok_max))
    pos_max = getattr(model.config, "max_position_embeddings", None)
    if pos_max:
        limits.append(int(pos_max))
    max_length = min(limits)

    ids = [doc_id for doc_id, _ in records]
    rows = []
    with torch.no_grad():
        for start in range(0, len(records), config.batch_size):
            batch = records[start:start + config.batch_size]
            texts = [abstract for _, abstract in batch]
            untruncated = tokenizer(texts, truncation=False)["input_ids"]
            for (doc_id, _), token_ids in zip(batch, untruncated):
                if len(token_ids) > max_length:
                    logger.warning("abstract '%s' truncated: %d tokens > limit %d",
                                   doc_id, len(token_ids), max_length)
            encoded = tokenizer(texts, padding=True, truncation=True,
                                max_length=max_length, return_tensors="pt")
            output = model(**encoded)
            pooled = _pool(output.last_hidden_state, encoded["attention_mask"],
                           config.pooling)
            rows.append(pooled.cpu().numpy())

    vectors = np.vstack(rows)
    provider_tag = f"{config.model}|pooling={config.pooling}"
    logger.info("encoded %d documents, dim %d (%s)",
                len(ids), vectors.shape[1], provider_tag)
    write_ctme(config.out, ids, vectors)
    meta = {
        "provider_tag": provider_tag,
        "model": config.model,
        "pooling": config.pooling,
        "dim": int(vectors.shape[1]),
        "count": len(ids),
    }
    Path(str(config.out) + ".meta.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return Path(config.out)
