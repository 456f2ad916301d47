import struct

import numpy as np
import pytest

from ctmkit.corpus import Corpus, Document
from ctmkit.embeddings import (
    EmbeddingFormatError,
    EmbeddingMatrix,
    hash_embed,
    load_embeddings,
    save_embeddings,
)


def corpus_of(abstracts, ids=None):
    ids = ids or [f"d{i}" for i in range(len(abstracts))]
    return Corpus(documents=[
        Document(id=i, title="", abstract=a, year=2010)
        for i, a in zip(ids, abstracts)
    ])


class TestFileRoundTrip:
    def test_write_then_load_identical(self, tmp_path):
        corpus = corpus_of(["alpha beta", "gamma delta"])
        vectors = np.array([[1.0, -2.0, 0.5], [0.25, 4.0, -1.0]], dtype=np.float32)
        em = EmbeddingMatrix(ids=["d0", "d1"], vectors=vectors.astype(np.float64))
        path = tmp_path / "e.ctme"
        save_embeddings(em, path)
        back = load_embeddings(path, corpus)
        assert back.ids == ["d0", "d1"]
        assert np.array_equal(back.vectors, vectors.astype(np.float64))

    def test_binary_byte_identity(self, tmp_path):
        corpus = corpus_of(["a b", "c d", "e f"])
        rng = np.random.default_rng(0)
        em = EmbeddingMatrix(ids=corpus.ids,
                             vectors=rng.standard_normal((3, 8)).astype(np.float32).astype(np.float64))
        first = tmp_path / "one.ctme"
        save_embeddings(em, first)
        loaded = load_embeddings(first, corpus)
        second = tmp_path / "two.ctme"
        save_embeddings(loaded, second)
        assert first.read_bytes() == second.read_bytes()

    def test_jsonl_roundtrip(self, tmp_path):
        corpus = corpus_of(["a", "b"])
        em = EmbeddingMatrix(ids=["d0", "d1"], vectors=np.array([[1.5, 2.5], [3.5, 4.5]]))
        path = tmp_path / "e.jsonl"
        save_embeddings(em, path, fmt="jsonl")
        back = load_embeddings(path, corpus)
        assert np.array_equal(back.vectors, em.vectors)


class TestValidation:
    def test_jsonl_dim_mismatch(self, tmp_path):
        path = tmp_path / "e.jsonl"
        path.write_text(
            '{"id": "d0", "vector": [1.0, 2.0, 3.0, 4.0]}\n'
            '{"id": "d1", "vector": [1.0, 2.0, 3.0]}\n'
        )
        with pytest.raises(EmbeddingFormatError, match="dim mismatch"):
            load_embeddings(path, corpus_of(["a", "b"]))

    def test_binary_truncated_record(self, tmp_path):
        path = tmp_path / "e.ctme"
        # header promises dim 4 but the one record carries 3 floats
        payload = b"CTME" + struct.pack("<HII", 1, 1, 4)
        payload += struct.pack("<H", 2) + b"d0" + struct.pack("<3f", 1, 2, 3)
        path.write_bytes(payload)
        with pytest.raises(EmbeddingFormatError, match="record"):
            load_embeddings(path, corpus_of(["a"]))

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "e.bin"
        path.write_bytes(b"XXXX" + b"\x00" * 32)
        with pytest.raises(EmbeddingFormatError):
            load_embeddings(path, corpus_of(["a"]))

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "e.ctme"
        path.write_bytes(b"CTME" + struct.pack("<HII", 9, 0, 4))
        with pytest.raises(EmbeddingFormatError, match="version"):
            load_embeddings(path, corpus_of(["a"]))

    def test_missing_corpus_id_named(self, tmp_path):
        em = EmbeddingMatrix(ids=["d0"], vectors=np.ones((1, 2)))
        path = tmp_path / "e.ctme"
        save_embeddings(em, path)
        with pytest.raises(EmbeddingFormatError, match="'z'"):
            load_embeddings(path, corpus_of(["a", "b"], ids=["d0", "z"]))

    def test_unknown_extra_id(self, tmp_path):
        em = EmbeddingMatrix(ids=["d0", "ghost"], vectors=np.ones((2, 2)))
        path = tmp_path / "e.ctme"
        save_embeddings(em, path)
        with pytest.raises(EmbeddingFormatError, match="'ghost'"):
            load_embeddings(path, corpus_of(["a"], ids=["d0"]))

    def test_reorders_to_corpus_order(self, tmp_path):
        em = EmbeddingMatrix(ids=["d1", "d0"], vectors=np.array([[1.0, 1.0], [2.0, 2.0]]))
        path = tmp_path / "e.ctme"
        save_embeddings(em, path)
        back = load_embeddings(path, corpus_of(["a", "b"], ids=["d0", "d1"]))
        assert np.array_equal(back.vectors[0], [2.0, 2.0])

    def test_non_finite_rejected(self, tmp_path):
        path = tmp_path / "e.jsonl"
        path.write_text('{"id": "d0", "vector": [1.0, Infinity]}\n')
        with pytest.raises(EmbeddingFormatError, match="finite"):
            load_embeddings(path, corpus_of(["a"]))


class TestHashEmbed:
    def test_deterministic(self):
        corpus = corpus_of(["solar panel grid", "wind turbine power"])
        a = hash_embed(corpus, dim=32, seed=5)
        b = hash_embed(corpus, dim=32, seed=5)
        assert np.array_equal(a.vectors, b.vectors)

    def test_unit_norm_rows(self):
        corpus = corpus_of(["solar panel grid"])
        em = hash_embed(corpus, dim=64, seed=1)
        assert np.linalg.norm(em.vectors[0]) == pytest.approx(1.0, abs=1e-9)

    def test_empty_document_zero_vector(self, caplog):
        corpus = corpus_of(["the and of", "solar panel"])
        with caplog.at_level("WARNING"):
            em = hash_embed(corpus, dim=16, seed=2)
        assert np.array_equal(em.vectors[0], np.zeros(16))
        assert any("d0" in r.message for r in caplog.records)

    def test_disjoint_docs_nearly_orthogonal(self):
        # Monte Carlo over seeds: 256 dims keeps unrelated docs decorrelated
        corpus = corpus_of(["alpha beta gamma delta", "epsilon zeta eta theta"])
        hits = 0
        for seed in range(100):
            em = hash_embed(corpus, dim=256, seed=seed)
            cos = float(em.vectors[0] @ em.vectors[1])
            if abs(cos) < 0.5:
                hits += 1
        assert hits >= 99

    def test_shared_terms_raise_similarity(self):
        # A shares 3 of 4 terms with B but only 1 with C (equal lengths)
        docs = [
            "red green blue yellow",
            "red green blue purple",
            "red orange violet pink",
        ]
        corpus = corpus_of(docs)
        wins = 0
        trials = 40
        for seed in range(trials):
            em = hash_embed(corpus, dim=128, seed=seed)
            ab = em.vectors[0] @ em.vectors[1]
            ac = em.vectors[0] @ em.vectors[2]
            if ab > ac:
                wins += 1
        assert wins >= 0.95 * trials

    def test_dim_validated(self):
        with pytest.raises(ValueError):
            hash_embed(corpus_of(["a"]), dim=0, seed=0)

    def test_provider_tag_recorded(self):
        em = hash_embed(corpus_of(["solar"]), dim=8, seed=3)
        assert "hash" in em.provider_tag
