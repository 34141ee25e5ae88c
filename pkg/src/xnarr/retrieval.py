"""Retrieval-grounded argumentation over a certified local corpus.

Documents are chunked with a deterministic sliding window, embedded,
L2-normalized and searched with an exact cosine scan. The default
embedder is a hashed bag-of-words (stable across processes), so the
whole stage is reproducible in CI; an HTTP embedder can be swapped in
for production corpora.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import httpx
import numpy as np

from .errors import ProviderError
from .explanations import ExplanationArtifact

DEFAULT_CHUNK_SIZE = 256
DEFAULT_OVERLAP = 32
DEFAULT_TOP_K = 4
DEFAULT_QUERY_ATTRIBUTIONS = 3

CORPUS_SUFFIXES = (".txt", ".md")


class EmptyCorpusError(ValueError):
    pass


class Embedder(Protocol):
    dimension: int

    def embed(self, text: str) -> list[float]: ...


class HashedBowEmbedder:
    """Deterministic bag-of-words embedding: each lowercased whitespace
    token lands in ``sha1(token) % dimension``; counts are L2-normalized."""

    def __init__(self, dimension: int = 256):
        self.dimension = dimension

    def embed(self, text: str) -> list[float]:
        counts = [0.0] * self.dimension
        for token in text.lower().split():
            digest = hashlib.sha1(token.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:8], "big") % self.dimension
            counts[bucket] += 1.0
        norm = math.sqrt(sum(c * c for c in counts))
        if norm == 0.0:
            return counts
        return [c / norm for c in counts]


class OllamaEmbedder:
    """Embedding endpoint of an Ollama-compatible server."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        dimension: int = 0,
        timeout: float = 60.0,
        client: httpx.Client | None = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.dimension = dimension
        self._client = client or httpx.Client(timeout=timeout)

    def embed(self, text: str) -> list[float]:
        try:
            response = self._client.post(
                f"{self.endpoint}/api/embeddings",
                json={"model": self.model, "prompt": text},
            )
            response.raise_for_status()
            vector = [float(v) for v in response.json()["embedding"]]
        except (httpx.HTTPError, KeyError, ValueError) as exc:
            raise ProviderError(f"embedding request failed: {exc}") from exc
        if not self.dimension:
            self.dimension = len(vector)
        norm = math.sqrt(sum(v * v for v in vector))
        if norm == 0.0:
            return vector
        return [v / norm for v in vector]


@dataclass(frozen=True)
class CorpusChunk:
    doc_id: str
    chunk_index: int
    text: str
    source_citation: str
    vector: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "vector", tuple(float(v) for v in self.vector))


@dataclass(frozen=True)
class RetrievalResult:
    chunk: CorpusChunk
    score: float


def chunk_tokens(tokens: Sequence[str], chunk_size: int, overlap: int) -> list[list[str]]:
    """Sliding windows of ``chunk_size`` tokens advancing by
    ``chunk_size - overlap``; the final window absorbs the tail."""
    if chunk_size <= overlap or overlap < 0:
        raise ValueError("require chunk_size > overlap >= 0")
    if not tokens:
        return []
    stride = chunk_size - overlap
    windows = []
    start = 0
    while True:
        end = start + chunk_size
        windows.append(list(tokens[start:min(end, len(tokens))]))
        if end >= len(tokens):
            break
        start += stride
    return windows


class CorpusIndex:
    """Immutable exact-search index over embedded corpus chunks."""

    def __init__(self, chunks: Sequence[CorpusChunk], embedder: Embedder):
        self.chunks = list(chunks)
        self.embedder = embedder
        self._matrix = np.array([c.vector for c in self.chunks], dtype=float)

    def __len__(self) -> int:
        return len(self.chunks)

    @classmethod
    def from_documents(
        cls,
        documents: Iterable[tuple[str, str, str]],
        embedder: Embedder | None = None,
        chunk_size: int = DEFAULT_CHUNK_SIZE,
        overlap: int = DEFAULT_OVERLAP,
    ) -> "CorpusIndex":
        """Build from (doc_id, text, source_citation) triples."""
        embedder = embedder or HashedBowEmbedder()
        chunks: list[CorpusChunk] = []
        for doc_id, text, citation in documents:
            windows = chunk_tokens(text.split(), chunk_size, overlap)
            for i, window in enumerate(windows):
                chunk_text = " ".join(window)
                chunks.append(
                    CorpusChunk(
                        doc_id=doc_id,
                        chunk_index=i,
                        text=chunk_text,
                        source_citation=citation,
                        vector=tuple(embedder.embed(chunk_text)),
                    )
                )
        if not chunks:
            raise EmptyCorpusError("empty corpus")
        return cls(chunks, embedder)

    def search(self, query: str, k: int = DEFAULT_TOP_K) -> list[RetrievalResult]:
        """Top-k chunks by cosine similarity, descending; ties break on
        (doc_id, chunk_index) ascending. Returns fewer when the corpus
        is smaller than k."""
        if k <= 0:
            raise ValueError("k must be positive")
        if not self.chunks:
            return []
        query_vector = np.array(self.embedder.embed(query), dtype=float)
        scores = self._matrix @ query_vector
        order = sorted(
            range(len(self.chunks)),
            key=lambda i: (-scores[i], self.chunks[i].doc_id, self.chunks[i].chunk_index),
        )
        return [
            RetrievalResult(chunk=self.chunks[i], score=float(scores[i]))
            for i in order[:k]
        ]

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            for chunk in self.chunks:
                handle.write(
                    json.dumps(
                        {
                            "doc_id": chunk.doc_id,
                            "chunk_index": chunk.chunk_index,
                            "text": chunk.text,
                            "source_citation": chunk.source_citation,
                            "vector": list(chunk.vector),
                        }
                    )
                )
                handle.write("\n")

    @classmethod
    def load(cls, path: str | Path, embedder: Embedder | None = None) -> "CorpusIndex":
        embedder = embedder or HashedBowEmbedder()
        chunks = []
        with open(path, "r", encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                chunks.append(
                    CorpusChunk(
                        doc_id=record["doc_id"],
                        chunk_index=record["chunk_index"],
                        text=record["text"],
                        source_citation=record["source_citation"],
                        vector=tuple(record["vector"]),
                    )
                )
        if not chunks:
            raise EmptyCorpusError("empty corpus")
        return cls(chunks, embedder)


def ingest_corpus(
    directory: str | Path,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    overlap: int = DEFAULT_OVERLAP,
    embedder: Embedder | None = None,
) -> CorpusIndex:
    """Index every .txt/.md file under ``directory`` (sorted by name).

    A sidecar ``<stem>.meta.json`` may carry ``source_citation``;
    otherwise the file name is used.
    """
    directory = Path(directory)
    documents = []
    for path in sorted(directory.iterdir()) if directory.is_dir() else []:
        if path.suffix.lower() not in CORPUS_SUFFIXES:
            continue
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ValueError(f"unreadable corpus file {path}: {exc}") from exc
        citation = path.name
        meta_path = path.with_suffix(".meta.json")
        if meta_path.exists():
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            citation = meta.get("source_citation", citation)
        if text.split():
            documents.append((path.name, text, citation))
    if not documents:
        raise EmptyCorpusError("empty corpus")
    return CorpusIndex.from_documents(
        documents, embedder=embedder, chunk_size=chunk_size, overlap=overlap
    )


def _direction(value: float) -> str:
    return "increases risk" if value >= 0 else "decreases risk"


def formulate_queries(
    artifact: ExplanationArtifact,
    narrative: str | None = None,
    top_attributions: int = DEFAULT_QUERY_ATTRIBUTIONS,
) -> list[str]:
    """One query per top-|impact| attribution and one per counterfactual
    change: "<feature> <direction of impact> <prediction label>"."""
    label = artifact.prediction.label
    ranked = sorted(
        artifact.attributions, key=lambda a: (-abs(a.impact), a.feature)
    )
    queries = [
        f"{a.feature} {_direction(a.impact)} {label}"
        for a in ranked[:top_attributions]
    ]
    queries.extend(
        f"{c.feature} {_direction(c.probability_shift)} {label}"
        for c in artifact.counterfactual
    )
    return queries
