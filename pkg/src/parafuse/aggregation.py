"""Paragraph-to-case rank aggregation.

A query case is asked paragraph by paragraph; each query paragraph returns a
ranked list of corpus paragraphs. Aggregation lifts those lists to a single
ranking over parent cases. The default scheme is positional: in a
depth-N list the item at 1-based position p contributes N - p + 1 to its
parent case, summed over all lists and occurrences, so a case surfacing
near the top of many paragraph queries beats one strong isolated hit.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import case_id_of
from .types import ScoredList

STRATEGIES = ("positional", "scoresum", "interleave")


@dataclass
class ParagraphRunSet:
    """Per-query-paragraph rankings for one query case.

    ``per_paragraph`` pairs each query-paragraph index with its ranked list
    of corpus-paragraph ids; indices must be distinct and contiguous from 0
    but may arrive in any order (aggregation is order-invariant). ``depth``
    is the retrieval depth N every list was cut to.
    """

    query_id: str
    per_paragraph: list[tuple[int, ScoredList]]
    depth: int

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        indices = sorted(i for i, _ in self.per_paragraph)
        if indices != list(range(len(indices))):
            raise ValueError(
                f"query {self.query_id}: paragraph indices must be "
                f"contiguous from 0, got {indices}"
            )
        for i, slist in self.per_paragraph:
            if len(slist) > self.depth:
                raise ValueError(
                    f"query {self.query_id} paragraph {i}: list of length "
                    f"{len(slist)} exceeds depth {self.depth}"
                )


def positional_scores(slist: ScoredList, depth: int) -> list[tuple[str, int]]:
    """(parent_case_id, depth - position) for each entry, top first."""
    if len(slist) > depth:
        raise ValueError(f"list of length {len(slist)} exceeds depth {depth}")
    return [
        (case_id_of(item_id), depth - position)
        for position, (item_id, _) in enumerate(slist.entries)
    ]


def aggregate_positional(runs: ParagraphRunSet) -> ScoredList:
    """Sum positional contributions per parent case; self-case dropped."""
    totals: dict[str, int] = {}
    for _, slist in runs.per_paragraph:
        for case_id, value in positional_scores(slist, runs.depth):
            totals[case_id] = totals.get(case_id, 0) + value
    totals.pop(runs.query_id, None)
    return ScoredList(runs.query_id,
                      [(cid, float(v)) for cid, v in totals.items()])


def aggregate_scoresum(runs: ParagraphRunSet) -> ScoredList:
    """Sum raw retrieval scores per parent case; self-case dropped."""
    totals: dict[str, float] = {}
    for _, slist in runs.per_paragraph:
        for item_id, score in slist.entries:
            case_id = case_id_of(item_id)
            totals[case_id] = totals.get(case_id, 0.0) + score
    totals.pop(runs.query_id, None)
    return ScoredList(runs.query_id, list(totals.items()))


def aggregate_interleave(runs: ParagraphRunSet) -> ScoredList:
    """Round-robin the lists, best unseen case first.

    Lists take turns in paragraph-index order; each turn contributes its
    highest-ranked case not yet selected. Scores are synthetic descending
    integers (count .. 1) because round-robin has no natural score; only
    the order is meaningful.
    """
    ordered = sorted(runs.per_paragraph, key=lambda pair: pair[0])
    queues = [[case_id_of(item_id) for item_id, _ in slist.entries]
              for _, slist in ordered]
    cursors = [0] * len(queues)
    selected: list[str] = []
    seen = {runs.query_id}
    remaining = True
    while remaining:
        remaining = False
        for qi, queue in enumerate(queues):
            cursor = cursors[qi]
            while cursor < len(queue) and queue[cursor] in seen:
                cursor += 1
            cursors[qi] = cursor
            if cursor < len(queue):
                case_id = queue[cursor]
                selected.append(case_id)
                seen.add(case_id)
                cursors[qi] = cursor + 1
                remaining = True
    entries = [(cid, float(len(selected) - i)) for i, cid in enumerate(selected)]
    return ScoredList(runs.query_id, entries)


def aggregate(runs: ParagraphRunSet, strategy: str = "positional") -> ScoredList:
    if strategy == "positional":
        return aggregate_positional(runs)
    if strategy == "scoresum":
        return aggregate_scoresum(runs)
    if strategy == "interleave":
        return aggregate_interleave(runs)
    raise ValueError(f"unknown aggregation strategy: {strategy!r}")
