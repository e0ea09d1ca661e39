"""Reader for the normalized corpus interchange format.

One JSON object per line, each with exactly the keys ``case_id``, ``intro``,
``summary``, ``paragraphs``. The intro and summary are strings or null, the
paragraphs a list of strings. This module parses the format on its own so
the adapter scripts stay decoupled from the retrieval engine; agreement of
the two implementations is pinned by the conformance tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

EXPECTED_KEYS = {"case_id", "intro", "summary", "paragraphs"}


@dataclass
class CaseRecord:
    case_id: str
    intro: str | None
    summary: str | None
    paragraphs: list[str]

    def segments(self) -> list[tuple[str, str]]:
        """(segment_id, text) pairs in file order.

        Segment ids follow the case#kind#index convention the run files use,
        so embeddings exported here line up with the retrieval indexes.
        """
        out: list[tuple[str, str]] = []
        if self.intro is not None:
            out.append((f"{self.case_id}#intro#0", self.intro))
        if self.summary is not None:
            out.append((f"{self.case_id}#summary#0", self.summary))
        for i, text in enumerate(self.paragraphs):
            out.append((f"{self.case_id}#paragraph#{i}", text))
        return out

    def document_text(self) -> str:
        return " ".join(text for _, text in self.segments())


def read_corpus(path) -> list[CaseRecord]:
    """Parse a corpus file, rejecting malformed lines with their location."""
    records: list[CaseRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError:
                raise ValueError(f"{path}:{lineno}: not valid JSON") from None
            if not isinstance(payload, dict) or set(payload) != EXPECTED_KEYS:
                raise ValueError(
                    f"{path}:{lineno}: expected exactly the keys {sorted(EXPECTED_KEYS)}"
                )
            case_id = payload["case_id"]
            if not isinstance(case_id, str) or not case_id:
                raise ValueError(f"{path}:{lineno}: case_id must be a non-empty string")
            if case_id in seen:
                raise ValueError(f"{path}:{lineno}: duplicate case {case_id!r}")
            for key in ("intro", "summary"):
                if payload[key] is not None and not isinstance(payload[key], str):
                    raise ValueError(f"{path}:{lineno}: {key} must be a string or null")
            paragraphs = payload["paragraphs"]
            if not isinstance(paragraphs, list) or any(
                not isinstance(p, str) for p in paragraphs
            ):
                raise ValueError(f"{path}:{lineno}: paragraphs must be a list of strings")
            seen.add(case_id)
            records.append(CaseRecord(case_id, payload["intro"], payload["summary"], list(paragraphs)))
    return records
