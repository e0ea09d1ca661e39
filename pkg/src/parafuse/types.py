"""Shared ranking currency.

Every retrieval, aggregation and fusion stage hands results around as a
``ScoredList``: one query, descending scores, deterministic tie order.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field


@dataclass
class ScoredList:
    """A ranked result list for one query.

    Entries are ``(item_id, score)`` pairs kept sorted by descending score,
    ties broken by ascending item id, so the ordering is reproducible across
    runs and platforms. Item ids are unique and scores finite; violations
    raise ``ValueError`` at construction.
    """

    query_id: str
    entries: list[tuple[str, float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        counts = Counter(item_id for item_id, _ in self.entries)
        dupes = sorted(i for i, c in counts.items() if c > 1)
        if dupes:
            raise ValueError(f"duplicate item ids in scored list: {dupes}")
        for item_id, score in self.entries:
            if not isinstance(item_id, str) or not item_id:
                raise ValueError(f"bad item id: {item_id!r}")
            if not math.isfinite(score):
                raise ValueError(f"non-finite score for {item_id!r}: {score!r}")
        self.entries = sorted(self.entries, key=lambda e: (-e[1], e[0]))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def ids(self) -> list[str]:
        return [item_id for item_id, _ in self.entries]

    def top(self, n: int) -> "ScoredList":
        """First ``n`` entries as a new list (fewer when shorter)."""
        if n < 0:
            raise ValueError(f"n must be >= 0, got {n}")
        return ScoredList(self.query_id, list(self.entries[:n]))

    def score_of(self, item_id: str) -> float | None:
        for candidate, score in self.entries:
            if candidate == item_id:
                return score
        return None

    def to_dict(self) -> dict[str, float]:
        return {item_id: score for item_id, score in self.entries}

    def without(self, item_id: str) -> "ScoredList":
        """Copy with ``item_id`` removed (no-op when absent)."""
        kept = [e for e in self.entries if e[0] != item_id]
        return ScoredList(self.query_id, kept)
