"""Shared helpers: stable hashing, deterministic serialization, seed derivation."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def stable_hash64(text: str) -> int:
    """64-bit hash of a string that is stable across processes and platforms."""
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_seed(seed: int, name: str) -> int:
    """Derive a per-stage seed: top-level seed XOR a stable hash of the stage name."""
    return (int(seed) ^ stable_hash64(name)) & MASK64


def term_rng(term: str, seed: int) -> np.random.Generator:
    """Generator keyed by (term, seed); stable across runs (PCG64, sha-derived key)."""
    key = stable_hash64(f"{seed}:{term}")
    return np.random.default_rng(key)


def dump_json(obj, path) -> None:
    """Write JSON with sorted keys and no trailing whitespace; byte-stable."""
    text = json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def fmt_float(x: float) -> str:
    """Shortest round-trip decimal form; stable for manifest hashing."""
    return repr(float(x))


def write_csv(path, header, rows) -> None:
    """Plain CSV writer with deterministic float formatting and '\\n' line ends."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, float):
                cells.append(fmt_float(cell))
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
