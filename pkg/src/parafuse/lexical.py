"""From-scratch BM25 retrieval over an inverted index.

Scores follow the Lucene shape: idf(t) = ln(1 + (N - df + 0.5)/(df + 0.5)),
and a term in item d contributes idf * tf*(k1+1)/(tf + k1*(1 - b + b*|d|/avg)),
multiplied by the term's occurrence count in the query (no query-side
saturation). Defaults k1=1.2, b=0.75.

Index file format (magic ``PFIX1``, little-endian):

* magic, 5 bytes
* granularity, 1 byte: 0=document, 1=paragraph
* k1 then b, float64
* item count, uint32; per item (ascending id order): varint id byte length,
  UTF-8 id, varint token length
* term count, uint32; per term (ascending term order): varint term byte
  length, UTF-8 term, varint document frequency, then df postings as
  (varint ordinal gap, varint tf) with the first gap the ordinal itself

Varints are unsigned LEB128. Building, saving and loading are deterministic,
so equal corpora produce byte-identical files.
"""

from __future__ import annotations

import io
import math
import struct
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .types import ScoredList

MAGIC = b"PFIX1"
GRANULARITIES = ("document", "paragraph")

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercased unicode word tokens; punctuation and underscores split."""
    return _TOKEN_RE.findall(text.lower())


def truncate_tokens(text: str, limit: int) -> str:
    """The text of the first ``limit`` tokens, space-joined."""
    if limit < 1:
        raise ValueError(f"token limit must be >= 1, got {limit}")
    return " ".join(tokenize(text)[:limit])


@dataclass(eq=False)
class Bm25Index:
    """Immutable inverted index at document or paragraph granularity.

    Item ordinals are assigned in ascending item-id order, which is what
    makes stable score sorts realize the ascending-id tie rule for free.
    """

    granularity: str
    k1: float
    b: float
    item_ids: list[str]
    item_lengths: np.ndarray
    postings: dict[str, tuple[np.ndarray, np.ndarray]]
    avg_length: float = field(init=False)

    def __post_init__(self) -> None:
        if self.granularity not in GRANULARITIES:
            raise ValueError(f"unknown granularity: {self.granularity!r}")
        if not (math.isfinite(self.k1) and self.k1 >= 0):
            raise ValueError(f"k1 must be >= 0, got {self.k1}")
        if not (0.0 <= self.b <= 1.0):
            raise ValueError(f"b must be in [0, 1], got {self.b}")
        if not self.item_ids:
            raise ValueError("index has no items")
        if sorted(self.item_ids) != self.item_ids:
            raise ValueError("item ids must be in ascending order")
        self.avg_length = float(self.item_lengths.mean())
        if self.avg_length <= 0:
            raise ValueError("index has no tokens")
        # k1*(1 - b + b*len/avg), hoisted out of the scoring loop
        self._norm = self.k1 * (
            1.0 - self.b + self.b * (self.item_lengths / self.avg_length)
        )
        self._ordinal_of = {item: i for i, item in enumerate(self.item_ids)}

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    def ordinal_of(self, item_id: str) -> int:
        try:
            return self._ordinal_of[item_id]
        except KeyError:
            raise ValueError(f"unknown item id: {item_id!r}") from None

    def idf(self, term: str) -> float:
        posting = self.postings.get(term)
        if posting is None:
            return 0.0
        df = len(posting[0])
        return math.log(1.0 + (self.n_items - df + 0.5) / (df + 0.5))


def build_index(
    items: list[tuple[str, str]],
    granularity: str = "document",
    k1: float = 1.2,
    b: float = 0.75,
) -> Bm25Index:
    """Index (item_id, text) pairs. Duplicate ids or an all-empty corpus error."""
    ids = [item_id for item_id, _ in items]
    dupes = sorted(i for i, c in Counter(ids).items() if c > 1)
    if dupes:
        raise ValueError(f"duplicate item ids: {dupes[:10]}")

    ordered = sorted(items, key=lambda kv: kv[0])
    item_ids = [item_id for item_id, _ in ordered]
    lengths = np.zeros(len(ordered), dtype=np.int64)
    raw_postings: dict[str, list[tuple[int, int]]] = {}
    for ordinal, (_, text) in enumerate(ordered):
        tokens = tokenize(text)
        lengths[ordinal] = len(tokens)
        for term, tf in Counter(tokens).items():
            raw_postings.setdefault(term, []).append((ordinal, tf))

    postings = {
        term: (
            np.array([o for o, _ in plist], dtype=np.int32),
            np.array([tf for _, tf in plist], dtype=np.float64),
        )
        for term, plist in raw_postings.items()
    }
    return Bm25Index(granularity, k1, b, item_ids, lengths, postings)


def _query_weights(index: Bm25Index, query_tokens: list[str]):
    """(term, weight) pairs in first-occurrence order; weight = qtf * idf."""
    out = []
    for term, qtf in Counter(query_tokens).items():
        posting = index.postings.get(term)
        if posting is None:
            continue
        out.append((term, qtf * index.idf(term), posting))
    return out


def bm25_score(index: Bm25Index, query_tokens: list[str], item_id: str) -> float:
    """Score one item against a tokenized query.

    Matches score_all() bitwise: same per-term operation order, same
    accumulation order.
    """
    ordinal = index.ordinal_of(item_id)
    norm_o = float(index._norm[ordinal])
    k1_plus_1 = index.k1 + 1.0
    score = 0.0
    for _, weight, (ordinals, tfs) in _query_weights(index, query_tokens):
        pos = int(np.searchsorted(ordinals, ordinal))
        if pos < len(ordinals) and ordinals[pos] == ordinal:
            tf = float(tfs[pos])
            score += weight * (tf * k1_plus_1 / (tf + norm_o))
    return score


def score_all(index: Bm25Index, query: str | list[str]) -> np.ndarray:
    """Scores for every item, indexed by ordinal (float64)."""
    tokens = tokenize(query) if isinstance(query, str) else list(query)
    scores = np.zeros(index.n_items, dtype=np.float64)
    k1_plus_1 = index.k1 + 1.0
    for _, weight, (ordinals, tfs) in _query_weights(index, tokens):
        _kernels.accumulate_term(scores, ordinals, tfs, weight, k1_plus_1,
                                 index._norm)
    return scores


def query_topn(index: Bm25Index, query: str | list[str], n: int,
               query_id: str = "") -> ScoredList:
    """Top-n positive-scoring items; ties rank by ascending item id."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    scores = score_all(index, query)
    hits = np.flatnonzero(scores > 0.0)
    if hits.size == 0:
        return ScoredList(query_id, [])
    # hits are in ascending-ordinal (= ascending-id) order; a stable sort on
    # descending score therefore breaks ties by ascending id
    order = hits[np.argsort(-scores[hits], kind="stable")][:n]
    entries = [(index.item_ids[o], float(scores[o])) for o in order]
    return ScoredList(query_id, entries)


def _write_uvarint(buf: bytearray, value: int) -> None:
    if value < 0:
        raise ValueError("varint values are unsigned")
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            buf.append(byte | 0x80)
        else:
            buf.append(byte)
            return


def _read_uvarint(fh: io.BufferedReader | io.BytesIO) -> int:
    shift = 0
    value = 0
    while True:
        raw = fh.read(1)
        if not raw:
            raise ValueError("truncated varint")
        byte = raw[0]
        value |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return value
        shift += 7
        if shift > 63:
            raise ValueError("varint too long")


def save_index(index: Bm25Index, path: str | Path) -> None:
    buf = bytearray()
    buf += MAGIC
    buf.append(GRANULARITIES.index(index.granularity))
    buf += struct.pack("<dd", index.k1, index.b)

    buf += struct.pack("<I", index.n_items)
    for ordinal, item_id in enumerate(index.item_ids):
        encoded = item_id.encode("utf-8")
        _write_uvarint(buf, len(encoded))
        buf += encoded
        _write_uvarint(buf, int(index.item_lengths[ordinal]))

    terms = sorted(index.postings)
    buf += struct.pack("<I", len(terms))
    for term in terms:
        encoded = term.encode("utf-8")
        _write_uvarint(buf, len(encoded))
        buf += encoded
        ordinals, tfs = index.postings[term]
        _write_uvarint(buf, len(ordinals))
        prev = 0
        for i in range(len(ordinals)):
            ordinal = int(ordinals[i])
            _write_uvarint(buf, ordinal - prev)
            _write_uvarint(buf, int(tfs[i]))
            prev = ordinal
    Path(path).write_bytes(bytes(buf))


def load_index(path: str | Path) -> Bm25Index:
    data = Path(path).read_bytes()
    fh = io.BytesIO(data)
    if fh.read(len(MAGIC)) != MAGIC:
        raise ValueError(f"{path}: not an index file (bad magic)")
    gran_byte = fh.read(1)
    if len(gran_byte) != 1 or gran_byte[0] >= len(GRANULARITIES):
        raise ValueError(f"{path}: bad granularity byte")
    granularity = GRANULARITIES[gran_byte[0]]
    header = fh.read(16)
    if len(header) != 16:
        raise ValueError(f"{path}: truncated header")
    k1, b = struct.unpack("<dd", header)

    raw_count = fh.read(4)
    if len(raw_count) != 4:
        raise ValueError(f"{path}: truncated item count")
    n_items = struct.unpack("<I", raw_count)[0]
    item_ids = []
    lengths = np.zeros(n_items, dtype=np.int64)
    for ordinal in range(n_items):
        id_len = _read_uvarint(fh)
        encoded = fh.read(id_len)
        if len(encoded) != id_len:
            raise ValueError(f"{path}: truncated item table")
        item_ids.append(encoded.decode("utf-8"))
        lengths[ordinal] = _read_uvarint(fh)

    raw_count = fh.read(4)
    if len(raw_count) != 4:
        raise ValueError(f"{path}: truncated term count")
    n_terms = struct.unpack("<I", raw_count)[0]
    postings: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for _ in range(n_terms):
        term_len = _read_uvarint(fh)
        encoded = fh.read(term_len)
        if len(encoded) != term_len:
            raise ValueError(f"{path}: truncated term table")
        term = encoded.decode("utf-8")
        df = _read_uvarint(fh)
        ordinals = np.zeros(df, dtype=np.int32)
        tfs = np.zeros(df, dtype=np.float64)
        prev = 0
        for i in range(df):
            prev += _read_uvarint(fh)
            ordinals[i] = prev
            tfs[i] = _read_uvarint(fh)
        if df and prev >= n_items:
            raise ValueError(f"{path}: posting ordinal out of range for {term!r}")
        postings[term] = (ordinals, tfs)
    if fh.read(1):
        raise ValueError(f"{path}: trailing bytes after postings")
    return Bm25Index(granularity, k1, b, item_ids, lengths, postings)
