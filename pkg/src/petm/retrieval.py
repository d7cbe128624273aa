"""Source-side similarity retrieval of in-context examples.

The pool is embedded once into an immutable index; queries run exact
brute-force cosine search over it (pools here are hundreds of records,
not millions). The built-in provider hashes character 3-5-grams of the
lowercased text into 2^18 buckets with sublinear tf weighting and an
optional idf table fitted on the pool, L2-normalized, so retrieval works
offline. A remote JSON-over-HTTP embeddings endpoint can be swapped in;
the index records a provider fingerprint and refuses to mix providers.
"""

from __future__ import annotations

import hashlib
import json
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np
from scipy import sparse

from .errors import DimensionMismatch, EmptyIndex, ProviderUnavailable
from .records import TripleRecord

HASH_BITS = 18
HASH_DIM = 1 << HASH_BITS
NGRAM_MIN = 3
NGRAM_MAX = 5

DEFAULT_K = 5


def _ngram_buckets(text: str) -> dict[int, int]:
    """Bucket counts of character 3-5-grams of the lowercased text."""
    text = text.lower()
    counts: dict[int, int] = {}
    for n in range(NGRAM_MIN, NGRAM_MAX + 1):
        for i in range(len(text) - n + 1):
            bucket = zlib.crc32(text[i : i + n].encode("utf-8")) & (HASH_DIM - 1)
            counts[bucket] = counts.get(bucket, 0) + 1
    return counts


def char_ngram_vector(text: str, idf: np.ndarray | None = None) -> sparse.csr_matrix:
    """One L2-normalized sparse row; empty text gives the degenerate zero row."""
    counts = _ngram_buckets(text)
    if not counts:
        return sparse.csr_matrix((1, HASH_DIM), dtype=np.float64)
    cols = np.fromiter(counts.keys(), dtype=np.int64)
    tf = np.fromiter(counts.values(), dtype=np.float64)
    weights = 1.0 + np.log(tf)
    if idf is not None:
        weights = weights * idf[cols]
    norm = np.linalg.norm(weights)
    if norm > 0:
        weights = weights / norm
    rows = np.zeros_like(cols)
    return sparse.csr_matrix((weights, (rows, cols)), shape=(1, HASH_DIM))


def is_degenerate(vector: sparse.csr_matrix) -> bool:
    return vector.nnz == 0


class EmbeddingProvider(Protocol):
    @property
    def fingerprint(self) -> str: ...

    def embed(self, texts: Sequence[str]) -> sparse.csr_matrix: ...


class LexicalEmbeddingProvider:
    """Built-in offline provider over hashed character n-grams.

    ``fit_idf`` learns smoothed inverse document frequencies from a corpus
    (normally the retrieval pool); unfitted providers weight by tf alone.
    """

    def __init__(self):
        self._idf: np.ndarray | None = None
        self._idf_digest = "none"

    def fit_idf(self, texts: Sequence[str]) -> "LexicalEmbeddingProvider":
        df = np.zeros(HASH_DIM, dtype=np.float64)
        for text in texts:
            for bucket in _ngram_buckets(text):
                df[bucket] += 1.0
        n_docs = len(texts)
        self._idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
        digest = hashlib.sha256(df.tobytes()).hexdigest()[:8]
        self._idf_digest = f"{n_docs}:{digest}"
        return self

    @property
    def fingerprint(self) -> str:
        return f"lexical:c{NGRAM_MIN}-{NGRAM_MAX}:h{HASH_BITS}:idf={self._idf_digest}"

    def embed(self, texts: Sequence[str]) -> sparse.csr_matrix:
        rows = [char_ngram_vector(text, self._idf) for text in texts]
        return sparse.vstack(rows, format="csr") if rows else sparse.csr_matrix((0, HASH_DIM))


class HttpEmbeddingProvider:
    """JSON-over-HTTP embeddings endpoint: {model, input: [...]} in,
    {data: [{embedding: [...]}]} out. Vectors are L2-normalized locally."""

    def __init__(self, url: str, model: str, timeout: float = 30.0, api_key: str | None = None):
        self.url = url
        self.model = model
        self.timeout = timeout
        self.api_key = api_key

    @property
    def fingerprint(self) -> str:
        return f"http:{self.url}:{self.model}"

    def embed(self, texts: Sequence[str]) -> sparse.csr_matrix:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = requests.post(
                self.url,
                json={"model": self.model, "input": list(texts)},
                headers=headers,
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise ProviderUnavailable(f"embeddings endpoint unreachable: {exc}") from exc
        if response.status_code != 200:
            retry_after = response.headers.get("Retry-After")
            raise ProviderUnavailable(
                f"embeddings endpoint returned {response.status_code}",
                retry_after=float(retry_after) if retry_after else None,
            )
        data = response.json().get("data", [])
        if len(data) != len(texts):
            raise DimensionMismatch(
                f"endpoint returned {len(data)} vectors for {len(texts)} texts"
            )
        vectors = [np.asarray(entry["embedding"], dtype=np.float64) for entry in data]
        widths = {v.shape[0] for v in vectors}
        if len(widths) > 1:
            raise DimensionMismatch(f"inconsistent vector widths: {sorted(widths)}")
        matrix = np.vstack(vectors)
        norms = np.linalg.norm(matrix, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        return sparse.csr_matrix(matrix / norms)


def embed(texts: Sequence[str], provider: EmbeddingProvider) -> sparse.csr_matrix:
    """Embed texts; one L2-normalized row per text."""
    if not texts:
        raise ValueError("no texts to embed")
    matrix = provider.embed(texts)
    if matrix.shape[0] != len(texts):
        raise DimensionMismatch(
            f"provider returned {matrix.shape[0]} rows for {len(texts)} texts"
        )
    return matrix


@dataclass(frozen=True)
class ScoredRecord:
    record_id: str
    score: float


class RetrievalIndex:
    """Immutable matrix of pool source embeddings plus their record ids."""

    def __init__(self, ids: list[str], matrix: sparse.csr_matrix, fingerprint: str,
                 provider: EmbeddingProvider | None = None):
        self.ids = ids
        self.matrix = matrix
        self.fingerprint = fingerprint
        self.provider = provider

    def __len__(self) -> int:
        return len(self.ids)


def build_index(
    records: Iterable[TripleRecord],
    provider: EmbeddingProvider | None = None,
    fit_idf: bool = True,
) -> RetrievalIndex:
    """Embed pool record sources into a queryable index."""
    records = list(records)
    sources = [rec.source for rec in records]
    if provider is None:
        provider = LexicalEmbeddingProvider()
        if fit_idf and sources:
            provider.fit_idf(sources)
    matrix = embed(sources, provider) if sources else sparse.csr_matrix((0, HASH_DIM))
    return RetrievalIndex(
        ids=[rec.id for rec in records],
        matrix=matrix,
        fingerprint=provider.fingerprint,
        provider=provider,
    )


def top_k(
    index: RetrievalIndex,
    query_text: str,
    k: int = DEFAULT_K,
    exclude_id: str | None = None,
) -> list[ScoredRecord]:
    """Exact search: min(k, pool) results by descending cosine, ties broken
    by ascending record id. A pool entry matching ``exclude_id`` is skipped."""
    if len(index) == 0:
        raise EmptyIndex("retrieval index has no entries")
    if k < 1:
        raise ValueError("k must be >= 1")
    if index.provider is None:
        raise ProviderUnavailable("index has no query provider attached")
    query = embed([query_text], index.provider)
    scores = np.asarray((index.matrix @ query.T).todense()).ravel()
    scored = [
        ScoredRecord(record_id, float(score))
        for record_id, score in zip(index.ids, scores)
        if record_id != exclude_id
    ]
    scored.sort(key=lambda s: (-s.score, s.record_id))
    return scored[:k]


def save_index(index: RetrievalIndex, path: str | Path) -> Path:
    """Sidecar cache of the embedded pool, keyed by provider fingerprint."""
    target = Path(path)
    matrix = index.matrix.tocsr()
    np.savez_compressed(
        target,
        data=matrix.data,
        indices=matrix.indices,
        indptr=matrix.indptr,
        shape=np.asarray(matrix.shape),
        ids=json.dumps(index.ids),
        fingerprint=index.fingerprint,
    )
    return target


def load_index(path: str | Path, provider: EmbeddingProvider) -> RetrievalIndex:
    with np.load(path, allow_pickle=False) as bundle:
        fingerprint = str(bundle["fingerprint"])
        if fingerprint != provider.fingerprint:
            raise ValueError(
                "index fingerprint mismatch: "
                f"cached {fingerprint!r} vs provider {provider.fingerprint!r}"
            )
        matrix = sparse.csr_matrix(
            (bundle["data"], bundle["indices"], bundle["indptr"]),
            shape=tuple(bundle["shape"]),
        )
        ids = json.loads(str(bundle["ids"]))
    return RetrievalIndex(ids=ids, matrix=matrix, fingerprint=fingerprint, provider=provider)
