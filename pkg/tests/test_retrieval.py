import random

import numpy as np
import pytest
from scipy import sparse

from petm.errors import DimensionMismatch, EmptyIndex
from petm.records import TripleRecord
from petm.retrieval import (
    HASH_DIM,
    LexicalEmbeddingProvider,
    RetrievalIndex,
    ScoredRecord,
    build_index,
    char_ngram_vector,
    embed,
    is_degenerate,
    load_index,
    save_index,
    top_k,
)


def make_pool(texts):
    return [
        TripleRecord(id=f"p{i:03d}", source=text, hypothesis="h .", reference="r")
        for i, text in enumerate(texts)
    ]


class TestCharNgramVector:
    def test_unit_norm(self):
        vec = char_ngram_vector("environment variable")
        assert vec.shape == (1, HASH_DIM)
        assert np.linalg.norm(vec.data) == pytest.approx(1.0)

    def test_deterministic(self):
        a = char_ngram_vector("Der Server antwortet nicht")
        b = char_ngram_vector("Der Server antwortet nicht")
        assert (a != b).nnz == 0

    def test_empty_is_degenerate_zero(self):
        vec = char_ngram_vector("")
        assert vec.nnz == 0
        assert is_degenerate(vec)
        assert not is_degenerate(char_ngram_vector("abcd"))

    def test_similarity_ordering(self):
        a = char_ngram_vector("environment variable")
        b = char_ngram_vector("environment variables")
        c = char_ngram_vector("session cookie")
        close = (a @ b.T)[0, 0]
        far = (a @ c.T)[0, 0]
        assert close > far


class TestEmbed:
    def test_one_row_per_text(self):
        provider = LexicalEmbeddingProvider()
        matrix = embed(["abc", "def", "ghi"], provider)
        assert matrix.shape == (3, HASH_DIM)

    def test_no_texts_rejected(self):
        with pytest.raises(ValueError):
            embed([], LexicalEmbeddingProvider())

    def test_inconsistent_provider_output(self):
        class Ragged:
            fingerprint = "ragged"

            def embed(self, texts):
                return sparse.csr_matrix((len(texts) + 1, HASH_DIM))

        with pytest.raises(DimensionMismatch):
            embed(["a"], Ragged())


class TestTopK:
    def test_self_match_scores_one(self):
        pool = make_pool(["the server restarts", "a session cookie", "the file loads"])
        index = build_index(pool)
        results = top_k(index, "a session cookie", k=1)
        assert results[0].record_id == "p001"
        assert results[0].score == pytest.approx(1.0, abs=1e-6)

    def test_pool_exhaustion_returns_all(self):
        pool = make_pool(["one text", "two texts", "three texts"])
        index = build_index(pool)
        assert len(top_k(index, "one text", k=5)) == 3

    def test_query_record_excluded(self):
        pool = make_pool(["alpha beta", "gamma delta"])
        index = build_index(pool)
        results = top_k(index, "alpha beta", k=5, exclude_id="p000")
        assert [r.record_id for r in results] == ["p001"]

    def test_empty_index(self):
        index = RetrievalIndex([], sparse.csr_matrix((0, HASH_DIM)), "x",
                               LexicalEmbeddingProvider())
        with pytest.raises(EmptyIndex):
            top_k(index, "anything", k=1)

    def test_matches_brute_force_ordering(self):
        rng = random.Random(19)
        vocab = ["server", "session", "cookie", "datei", "timeout", "browser",
                 "passwort", "netzwerk", "konsole", "modul"]
        texts = [
            " ".join(rng.sample(vocab, rng.randint(2, 5))) for _ in range(50)
        ]
        pool = make_pool(texts)
        index = build_index(pool)
        for _ in range(40):
            query = " ".join(rng.sample(vocab, rng.randint(1, 4)))
            results = top_k(index, query, k=5)
            qvec = index.provider.embed([query])
            scores = np.asarray((index.matrix @ qvec.T).todense()).ravel()
            expected = sorted(
                (ScoredRecord(rid, float(s)) for rid, s in zip(index.ids, scores)),
                key=lambda r: (-r.score, r.record_id),
            )[:5]
            assert [r.record_id for r in results] == [r.record_id for r in expected]

    def test_rebuild_is_idempotent(self):
        pool = make_pool(["ein Satz", "noch ein Satz", "ganz anders"])
        first = build_index(pool)
        second = build_index(pool)
        assert first.fingerprint == second.fingerprint
        query = "ein Satz mehr"
        assert [
            (r.record_id, pytest.approx(r.score)) for r in top_k(first, query, k=3)
        ] == [(r.record_id, r.score) for r in top_k(second, query, k=3)]


class TestSidecar:
    def test_save_load_round_trip(self, tmp_path):
        pool = make_pool(["ein Satz", "noch ein Satz", "ganz anders"])
        index = build_index(pool)
        path = tmp_path / "index.npz"
        save_index(index, path)
        loaded = load_index(path, index.provider)
        assert loaded.ids == index.ids
        assert (loaded.matrix != index.matrix).nnz == 0

    def test_fingerprint_guard(self, tmp_path):
        pool = make_pool(["ein Satz", "noch ein Satz"])
        index = build_index(pool)
        path = tmp_path / "index.npz"
        save_index(index, path)
        other = LexicalEmbeddingProvider()  # unfitted: different fingerprint
        with pytest.raises(ValueError, match="fingerprint"):
            load_index(path, other)
