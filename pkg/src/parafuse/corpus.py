"""Case ingestion and normalization.

Raw cases arrive as one UTF-8 text file per case. This module segments them
into intro / summary / numbered paragraphs, strips French passages, removes
boilerplate headnotes shared across hundreds of cases, and materializes the
normalized corpus plus train/validation query splits.

Normalized interchange format: JSON Lines, one object per case with keys
``case_id``, ``intro`` (string or null), ``summary`` (string or null) and
``paragraphs`` (array of strings). Whitespace inside every segment is
collapsed to single spaces.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path

SEGMENT_KINDS = ("intro", "summary", "paragraph")

# A paragraph marker is "[n]" or "n." at line start. Numbering must run 1, 2,
# 3, ... without gaps; a non-sequential number is body text, not a marker.
MARKER_RE = re.compile(r"^\s*(?:\[(\d+)\]|(\d+)\.(?:\s|$))\s*")

# Lines (case-insensitive, ignoring surrounding whitespace) that open the
# summary block sitting between the intro and the first numbered paragraph.
SUMMARY_HEADINGS = ("summary:", "sommaire:", "présumé:")

_WORD_RE = re.compile(r"[^\W\d_]+", re.UNICODE)

# Compact stop lists for the language call on bilingual decisions. Hit rates
# against these decide per segment; see is_french().
FRENCH_STOPWORDS = frozenset(
    """le la les de des du un une et est que qui dans pour par sur au aux ce
    cette ces il elle nous vous ils elles ne pas plus avec son sa ses sont
    était à où mais donc comme aussi leur leurs tout tous toute
    toutes même fait sans sous entre vers chez lors ainsi cela celui
    celle selon être avait ont cour juge droit loi""".split()
)
ENGLISH_STOPWORDS = frozenset(
    """the of and to in that is was for it with as his her on be at by this
    had not are but from or have an they which one you were all she when
    there no been their has would will what if we can so than then these
    those may shall must upon into such other some any each only court judge
    law act case""".split()
)


@dataclass(frozen=True)
class ParagraphRef:
    """Pointer to one segment of one case.

    The string form is ``case_id#kind#index``; case ids may themselves
    contain ``#`` so parsing splits from the right.
    """

    case_id: str
    segment_kind: str
    index: int

    def __post_init__(self) -> None:
        if self.segment_kind not in SEGMENT_KINDS:
            raise ValueError(f"unknown segment kind: {self.segment_kind!r}")
        if self.index < 0:
            raise ValueError(f"negative segment index: {self.index}")
        if not self.case_id:
            raise ValueError("empty case id")

    def to_id(self) -> str:
        return f"{self.case_id}#{self.segment_kind}#{self.index}"

    @classmethod
    def from_id(cls, ref_id: str) -> "ParagraphRef":
        parts = ref_id.rsplit("#", 2)
        if len(parts) != 3:
            raise ValueError(f"malformed segment id: {ref_id!r}")
        case_id, kind, index_text = parts
        if not index_text.isdigit():
            raise ValueError(f"malformed segment id: {ref_id!r}")
        return cls(case_id, kind, int(index_text))


def case_id_of(ref_id: str) -> str:
    """Parent case id of a segment id produced by ParagraphRef.to_id()."""
    parts = ref_id.rsplit("#", 2)
    if len(parts) != 3 or parts[1] not in SEGMENT_KINDS or not parts[2].isdigit():
        raise ValueError(f"malformed segment id: {ref_id!r}")
    return parts[0]


@dataclass
class Case:
    """One decision, segmented.

    ``raw_length_words`` is the whitespace word count of the text the case
    was built from; it survives normalization but not a JSONL round trip,
    where it is recomputed from the kept segments.
    """

    case_id: str
    intro: str | None
    summary: str | None
    paragraphs: list[str]
    raw_length_words: int = 0

    def __post_init__(self) -> None:
        if not self.case_id:
            raise ValueError("empty case id")
        for text in self.segment_texts():
            if not text or text != normalize_ws(text):
                raise ValueError(
                    f"case {self.case_id}: segments must be non-empty and "
                    f"whitespace-normalized"
                )

    def segment_texts(self) -> list[str]:
        out = []
        if self.intro is not None:
            out.append(self.intro)
        if self.summary is not None:
            out.append(self.summary)
        out.extend(self.paragraphs)
        return out

    def segments(self) -> list[tuple[ParagraphRef, str]]:
        """All segments with their refs, in document order."""
        out: list[tuple[ParagraphRef, str]] = []
        if self.intro is not None:
            out.append((ParagraphRef(self.case_id, "intro", 0), self.intro))
        if self.summary is not None:
            out.append((ParagraphRef(self.case_id, "summary", 0), self.summary))
        for i, text in enumerate(self.paragraphs):
            out.append((ParagraphRef(self.case_id, "paragraph", i), text))
        return out

    def document_text(self) -> str:
        return " ".join(text for _, text in self.segments())

    def is_empty(self) -> bool:
        return self.intro is None and self.summary is None and not self.paragraphs


@dataclass
class DatasetSplit:
    """Labeled query ids split into train / validation, plus their qrels."""

    train_query_ids: list[str]
    validation_query_ids: list[str]
    qrels: dict[str, set[str]]

    def __post_init__(self) -> None:
        overlap = set(self.train_query_ids) & set(self.validation_query_ids)
        if overlap:
            raise ValueError(f"queries in both splits: {sorted(overlap)}")
        listed = set(self.train_query_ids) | set(self.validation_query_ids)
        if listed != set(self.qrels):
            raise ValueError("split query ids do not match qrels keys")


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


def _marker_number(line: str):
    m = MARKER_RE.match(line)
    if not m:
        return None, line
    number = int(m.group(1) or m.group(2))
    return number, line[m.end():]


def segment_case(raw_text: str, case_id: str = "case") -> Case:
    """Split one raw case text into intro, summary and numbered paragraphs.

    Lines before the first marker form the intro, except a block opened by a
    summary heading line, which becomes the summary. When no marker and no
    summary heading is found, the whole body is a single paragraph. Raises
    ``ValueError`` on effectively empty input.
    """
    if not normalize_ws(raw_text):
        raise ValueError(f"case {case_id}: empty text")

    intro_lines: list[str] = []
    summary_lines: list[str] = []
    paragraphs: list[list[str]] = []
    state = "intro"
    expected = 1

    for line in raw_text.splitlines():
        number, rest = _marker_number(line)
        if number == expected:
            paragraphs.append([rest])
            state = "body"
            expected += 1
            continue
        if state == "body":
            paragraphs[-1].append(line)
        elif state == "summary":
            summary_lines.append(line)
        elif line.strip().lower() in SUMMARY_HEADINGS:
            state = "summary"
        else:
            intro_lines.append(line)

    intro = normalize_ws(" ".join(intro_lines)) or None
    summary = normalize_ws(" ".join(summary_lines)) or None
    paras = [normalize_ws(" ".join(lines)) for lines in paragraphs]
    paras = [p for p in paras if p]

    if not paras and summary is None:
        # unstructured case: keep the whole body as one paragraph
        return Case(case_id, None, None, [normalize_ws(raw_text)],
                    raw_length_words=len(raw_text.split()))
    return Case(case_id, intro, summary, paras,
                raw_length_words=len(raw_text.split()))


def is_french(text: str, margin: float = 0.2) -> bool:
    """Stop-word hit-rate language call.

    French wins only when its stop-word rate beats the English rate by more
    than ``margin``, so mixed passages stay put.
    """
    words = _WORD_RE.findall(text.lower())
    if not words:
        return False
    fr = sum(1 for w in words if w in FRENCH_STOPWORDS) / len(words)
    en = sum(1 for w in words if w in ENGLISH_STOPWORDS) / len(words)
    return fr > en + margin


def strip_french(case: Case, margin: float = 0.2) -> Case:
    """Drop French segments from a case.

    A fully French case degrades to an empty case (no segments); callers
    flag those rather than erroring, so labeled candidates never vanish
    from the corpus.
    """
    intro = case.intro if case.intro is not None and not is_french(case.intro, margin) else None
    summary = case.summary if case.summary is not None and not is_french(case.summary, margin) else None
    paragraphs = [p for p in case.paragraphs if not is_french(p, margin)]
    if intro == case.intro and summary == case.summary and len(paragraphs) == len(case.paragraphs):
        return case
    return replace(case, intro=intro, summary=summary, paragraphs=paragraphs)


def dedup_boilerplate(corpus: list[Case], threshold: int = 100) -> list[Case]:
    """Remove intro/summary texts repeated across more than ``threshold`` cases.

    Texts are compared lowercased (segments are already whitespace-normalized).
    The comparison is strict equality: near-duplicates stay. Returns new Case
    objects; paragraphs are never touched.
    """
    if threshold < 2:
        raise ValueError(f"dedup threshold must be >= 2, got {threshold}")
    counts: Counter[str] = Counter()
    for case in corpus:
        for text in (case.intro, case.summary):
            if text is not None:
                counts[text.lower()] += 1

    out = []
    for case in corpus:
        intro, summary = case.intro, case.summary
        if intro is not None and counts[intro.lower()] > threshold:
            intro = None
        if summary is not None and counts[summary.lower()] > threshold:
            summary = None
        if intro is not case.intro or summary is not case.summary:
            case = replace(case, intro=intro, summary=summary)
        out.append(case)
    return out


def corpus_stats(corpus: list[Case]) -> dict:
    """Per-kind segment counts and average word lengths, plus corpus size."""
    counts = {kind: 0 for kind in SEGMENT_KINDS}
    words = {kind: 0 for kind in SEGMENT_KINDS}
    empty_cases = 0
    for case in corpus:
        if case.is_empty():
            empty_cases += 1
        for ref, text in case.segments():
            counts[ref.segment_kind] += 1
            words[ref.segment_kind] += len(text.split())
    avg = {
        kind: (words[kind] / counts[kind] if counts[kind] else 0.0)
        for kind in SEGMENT_KINDS
    }
    return {
        "cases": len(corpus),
        "empty_cases": empty_cases,
        "segment_counts": counts,
        "avg_words": avg,
    }


def index_items(corpus: list[Case], granularity: str) -> list[tuple[str, str]]:
    """(item_id, text) pairs for indexing.

    ``document`` yields one item per non-empty case under its case id;
    ``paragraph`` yields one item per segment under its ParagraphRef id.
    """
    if granularity == "document":
        return [(c.case_id, c.document_text()) for c in corpus if not c.is_empty()]
    if granularity == "paragraph":
        out = []
        for case in corpus:
            for ref, text in case.segments():
                out.append((ref.to_id(), text))
        return out
    raise ValueError(f"unknown granularity: {granularity!r}")


def load_task1_corpus(
    root_path: str | Path,
    labels_path: str | Path,
    validation_count: int = 100,
) -> tuple[list[Case], DatasetSplit]:
    """Read a case-retrieval dataset from a directory of ``<case_id>.txt``.

    The label file is a JSON object mapping query case id to the list of its
    relevant case ids. Every id mentioned there must exist as a file; the
    validation split is the last ``validation_count`` labeled queries in
    label-file order (all of them when fewer are labeled).
    """
    root = Path(root_path)
    if validation_count < 0:
        raise ValueError(f"validation_count must be >= 0, got {validation_count}")
    with open(labels_path, encoding="utf-8") as fh:
        labels = json.load(fh)
    if not isinstance(labels, dict) or not labels:
        raise ValueError(f"{labels_path}: expected a non-empty id->ids object")

    files = sorted(root.glob("*.txt"))
    if not files:
        raise ValueError(f"{root}: no .txt case files found")
    corpus = []
    for path in files:
        try:
            raw = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise ValueError(f"unreadable case file {path}: {exc}") from exc
        corpus.append(segment_case(raw, case_id=path.stem))

    known = {c.case_id for c in corpus}
    qrels: dict[str, set[str]] = {}
    for qid, noticed in labels.items():
        if qid not in known:
            raise ValueError(f"labeled query {qid!r} has no case file")
        if not isinstance(noticed, list) or not noticed:
            raise ValueError(f"query {qid!r}: labels must be a non-empty list")
        missing = sorted(set(noticed) - known)
        if missing:
            raise ValueError(f"query {qid!r} cites unknown cases: {missing}")
        qrels[qid] = set(noticed)

    qids = list(labels)
    n_val = min(validation_count, len(qids))
    split = DatasetSplit(
        train_query_ids=qids[: len(qids) - n_val],
        validation_query_ids=qids[len(qids) - n_val:],
        qrels=qrels,
    )
    return corpus, split


def load_task2_corpus(root_path: str | Path) -> list:
    """Read an entailment dataset laid out as one folder per query.

    Each ``<root>/<query_id>/`` holds ``query.txt``, a ``candidates/``
    directory of ``<candidate_id>.txt`` files, and ``labels.json`` with the
    JSON list of entailed candidate ids (may be empty for unlabeled data).
    Queries come back sorted by id.
    """
    from .entailment import EntailmentQuery

    root = Path(root_path)
    query_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not query_dirs:
        raise ValueError(f"{root}: no query folders found")
    queries = []
    for qdir in query_dirs:
        query_file = qdir / "query.txt"
        labels_file = qdir / "labels.json"
        cand_dir = qdir / "candidates"
        if not query_file.is_file():
            raise ValueError(f"{qdir}: missing query.txt")
        if not labels_file.is_file():
            raise ValueError(f"{qdir}: missing labels.json")
        with open(labels_file, encoding="utf-8") as fh:
            labels = json.load(fh)
        if not isinstance(labels, list):
            raise ValueError(f"{labels_file}: expected a JSON list of ids")
        candidates = [
            (path.stem, normalize_ws(path.read_text(encoding="utf-8")))
            for path in sorted(cand_dir.glob("*.txt"))
        ]
        queries.append(
            EntailmentQuery(
                query_id=qdir.name,
                query_text=normalize_ws(query_file.read_text(encoding="utf-8")),
                candidates=candidates,
                relevant_ids=set(labels),
            )
        )
    return queries


def write_corpus_jsonl(corpus: list[Case], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for case in corpus:
            record = {
                "case_id": case.case_id,
                "intro": case.intro,
                "summary": case.summary,
                "paragraphs": case.paragraphs,
            }
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def read_corpus_jsonl(path: str | Path) -> list[Case]:
    corpus = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: bad JSON: {exc}") from exc
            try:
                case = Case(
                    case_id=record["case_id"],
                    intro=record["intro"],
                    summary=record["summary"],
                    paragraphs=list(record["paragraphs"]),
                )
            except (KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed case record") from exc
            case.raw_length_words = sum(len(t.split()) for t in case.segment_texts())
            if case.case_id in seen:
                raise ValueError(f"{path}:{lineno}: duplicate case id {case.case_id!r}")
            seen.add(case.case_id)
            corpus.append(case)
    return corpus


def write_ingest_report(rows: list[dict], path: str | Path) -> None:
    """TSV report, one row per case: id, paragraph count, words, flags.

    ``flags`` is a ``|``-joined subset of {all_french, empty,
    boilerplate_removed}, empty string when clean. Rows are sorted by case id.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("case_id\tn_paragraphs\twords\tflags\n")
        for row in sorted(rows, key=lambda r: r["case_id"]):
            flags = "|".join(row.get("flags", []))
            fh.write(f"{row['case_id']}\t{row['n_paragraphs']}\t{row['words']}\t{flags}\n")
