"""Exact dense retrieval over float32 embeddings.

Similarity is the raw dot product (embeddings are whatever the producer made
them; nothing here renormalizes). Search is a brute-force matmul, which at
corpus scale here beats approximate indexes on both simplicity and recall.

Embedding file format (magic ``PFEMB1``, little-endian): magic, uint32 dim,
uint32 count, count*dim float32 row-major vector block, then a UTF-8 JSON
array of the count item ids in row order.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lexical import tokenize
from .types import ScoredList

MAGIC = b"PFEMB1"


@dataclass(eq=False)
class EmbeddingMatrix:
    """Id-addressable float32 vectors, one row per item."""

    ids: list[str]
    vectors: np.ndarray

    def __post_init__(self) -> None:
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if self.vectors.ndim != 2:
            raise ValueError("vectors must be a 2-d array")
        if self.vectors.shape[1] < 1:
            raise ValueError("embedding dim must be >= 1")
        if len(self.ids) != self.vectors.shape[0]:
            raise ValueError(
                f"{len(self.ids)} ids for {self.vectors.shape[0]} vectors"
            )
        seen = set()
        for item_id in self.ids:
            if not item_id or item_id in seen:
                raise ValueError(f"empty or duplicate embedding id: {item_id!r}")
            seen.add(item_id)
        finite_rows = np.isfinite(self.vectors).all(axis=1)
        if not finite_rows.all():
            bad = int(np.flatnonzero(~finite_rows)[0])
            raise ValueError(f"non-finite embedding for id {self.ids[bad]!r}")
        self._row_of = {item_id: i for i, item_id in enumerate(self.ids)}
        # rank of each row's id in ascending-id order, for tie-breaking
        order = sorted(range(len(self.ids)), key=self.ids.__getitem__)
        self._id_rank = np.zeros(len(self.ids), dtype=np.int64)
        for rank, row in enumerate(order):
            self._id_rank[row] = rank

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.ids)

    def vector_of(self, item_id: str) -> np.ndarray:
        try:
            return self.vectors[self._row_of[item_id]]
        except KeyError:
            raise ValueError(f"no embedding for id: {item_id!r}") from None

    def has(self, item_id: str) -> bool:
        return item_id in self._row_of


def reference_embed(text: str, dim: int = 256, seed: int = 13) -> np.ndarray:
    """Deterministic signed feature hashing, L2-normalized.

    Each token hashes to a bucket and, independently, to a sign; the
    accumulated vector is normalized (empty/no-token text gives the zero
    vector). Stable across processes and platforms, unlike builtin hash().
    """
    if dim < 8:
        raise ValueError(f"dim must be >= 8, got {dim}")
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")
    salt = struct.pack("<Q", seed & 0xFFFFFFFFFFFFFFFF)
    acc = np.zeros(dim, dtype=np.float64)
    for token in tokenize(text):
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=16,
                                 salt=salt).digest()
        bucket = int.from_bytes(digest[:8], "little") % dim
        sign = 1.0 if digest[8] & 1 else -1.0
        acc[bucket] += sign
    norm = float(np.linalg.norm(acc))
    if norm > 0.0:
        acc /= norm
    return acc.astype(np.float32)


class HashingEmbedder:
    """Embedder built on reference_embed, with optional input truncation."""

    def __init__(self, dim: int = 256, seed: int = 13,
                 max_tokens: int | None = None):
        if max_tokens is not None and max_tokens < 1:
            raise ValueError(f"max_tokens must be >= 1, got {max_tokens}")
        self.dim = dim
        self.seed = seed
        self.max_tokens = max_tokens
        reference_embed("", dim, seed)  # validate dim/seed eagerly

    def embed(self, text: str) -> np.ndarray:
        if self.max_tokens is not None:
            text = " ".join(tokenize(text)[: self.max_tokens])
        return reference_embed(text, self.dim, self.seed)


def embed_items(items: list[tuple[str, str]], embedder) -> EmbeddingMatrix:
    """Embed (item_id, text) pairs into a matrix, rows in input order."""
    if not items:
        raise ValueError("no items to embed")
    vectors = np.zeros((len(items), embedder.dim), dtype=np.float32)
    for row, (_, text) in enumerate(items):
        vectors[row] = embedder.embed(text)
    return EmbeddingMatrix([item_id for item_id, _ in items], vectors)


def dense_topn(matrix: EmbeddingMatrix, query_vector: np.ndarray, n: int,
               query_id: str = "") -> ScoredList:
    """Top-n rows by dot product; score ties rank by ascending item id.

    Unlike lexical retrieval there is no positivity cut: the n best rows are
    returned even when every product is negative.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    query = np.asarray(query_vector, dtype=np.float32)
    if query.shape != (matrix.dim,):
        raise ValueError(
            f"query vector shape {query.shape} does not match dim {matrix.dim}"
        )
    scores = (matrix.vectors @ query).astype(np.float64)
    order = np.lexsort((matrix._id_rank, -scores))[:n]
    entries = [(matrix.ids[row], float(scores[row])) for row in order]
    return ScoredList(query_id, entries)


def save_embeddings(matrix: EmbeddingMatrix, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", matrix.dim, len(matrix)))
        fh.write(np.ascontiguousarray(matrix.vectors, dtype="<f4").tobytes())
        fh.write(json.dumps(matrix.ids, ensure_ascii=False).encode("utf-8"))


def load_embeddings(path: str | Path) -> EmbeddingMatrix:
    data = Path(path).read_bytes()
    if data[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: not an embedding file (bad magic)")
    header_end = len(MAGIC) + 8
    if len(data) < header_end:
        raise ValueError(f"{path}: truncated header")
    dim, count = struct.unpack("<II", data[len(MAGIC): header_end])
    if dim < 1:
        raise ValueError(f"{path}: bad dim {dim}")
    block_end = header_end + 4 * dim * count
    if len(data) < block_end:
        raise ValueError(f"{path}: truncated vector block")
    vectors = np.frombuffer(data[header_end:block_end], dtype="<f4")
    vectors = vectors.reshape(count, dim).copy()
    try:
        ids = json.loads(data[block_end:].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: bad id table: {exc}") from exc
    if not isinstance(ids, list) or not all(isinstance(i, str) for i in ids):
        raise ValueError(f"{path}: id table must be a JSON array of strings")
    if len(ids) != count:
        raise ValueError(f"{path}: {len(ids)} ids for {count} vectors")
    return EmbeddingMatrix(ids, vectors)
