"""Artifact writers.

Every output lands atomically (tmp file, then rename) and gets a manifest
sibling at ``<name>.manifest.json`` recording the model, its revision, the
generation parameters, and sha256 hashes of every input file, so a batch can
be traced back to exactly what produced it.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

EMBEDDING_MAGIC = b"PFEMB1"


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def render_embeddings(ids: list[str], vectors: np.ndarray) -> bytes:
    """Serialize the embedding container: magic, dim, count, rows, id list."""
    matrix = np.ascontiguousarray(vectors, dtype="<f4")
    if matrix.ndim != 2 or matrix.shape[0] != len(ids):
        raise ValueError("need exactly one vector row per id")
    if matrix.shape[1] < 1:
        raise ValueError("embedding dim must be >= 1")
    if not np.isfinite(matrix).all():
        raise ValueError("embeddings must be finite")
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate ids in embedding export")
    blob = bytearray()
    blob += EMBEDDING_MAGIC
    blob += struct.pack("<II", matrix.shape[1], matrix.shape[0])
    blob += matrix.tobytes()
    blob += json.dumps(list(ids), ensure_ascii=False).encode("utf-8")
    return bytes(blob)


@dataclass
class SummaryRecord:
    case_id: str
    summary_text: str
    max_length_ratio: float = 0.10
    error: str = ""  # empty means the summary was generated cleanly


def render_summaries(records: list[SummaryRecord]) -> str:
    lines = []
    for r in records:
        lines.append(
            json.dumps(
                {
                    "case_id": r.case_id,
                    "summary_text": r.summary_text,
                    "max_length_ratio": r.max_length_ratio,
                    "error": r.error,
                },
                ensure_ascii=False,
                sort_keys=True,
            )
        )
    return "\n".join(lines) + "\n"


_SUMMARY_KEYS = {"case_id", "summary_text", "max_length_ratio", "error"}


def read_summaries(path) -> dict[str, SummaryRecord]:
    """Load a summary file keyed by case id."""
    records: dict[str, SummaryRecord] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError:
                raise ValueError(f"{path}:{lineno}: not valid JSON") from None
            if not isinstance(payload, dict) or set(payload) != _SUMMARY_KEYS:
                raise ValueError(
                    f"{path}:{lineno}: expected exactly the keys {sorted(_SUMMARY_KEYS)}"
                )
            case_id = payload["case_id"]
            if case_id in records:
                raise ValueError(f"{path}:{lineno}: duplicate case {case_id!r}")
            records[case_id] = SummaryRecord(
                case_id,
                payload["summary_text"],
                float(payload["max_length_ratio"]),
                payload["error"],
            )
    if not records:
        raise ValueError(f"{path}: no summary records")
    return records


def render_pair_scores(rows: list[tuple[str, str, float]]) -> str:
    """Three-column TSV, one scored pair per line, scores in [0, 1]."""
    lines = []
    seen: set[tuple[str, str]] = set()
    for query_id, case_id, score in rows:
        for name, value in (("query_id", query_id), ("case_id", case_id)):
            if "\t" in value or "\n" in value:
                raise ValueError(f"{name} {value!r} would corrupt the TSV")
        if not math.isfinite(score) or not 0.0 <= score <= 1.0:
            raise ValueError(
                f"pair ({query_id}, {case_id}) has score {score!r} outside [0, 1]"
            )
        if (query_id, case_id) in seen:
            raise ValueError(f"duplicate pair ({query_id}, {case_id})")
        seen.add((query_id, case_id))
        lines.append(f"{query_id}\t{case_id}\t{score:.6f}")
    return "\n".join(lines) + "\n"


@dataclass
class AdapterManifest:
    model: str
    revision: str
    max_sequence_length: int | None
    parameters: dict
    input_hashes: dict[str, str]
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        payload = {
            "model": self.model,
            "revision": self.revision,
            "max_sequence_length": self.max_sequence_length,
            "parameters": self.parameters,
            "input_hashes": self.input_hashes,
            "warnings": self.warnings,
        }
        return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def manifest_path_for(out_path) -> Path:
    out_path = Path(out_path)
    return out_path.with_name(out_path.name + ".manifest.json")


def write_manifest(manifest: AdapterManifest, out_path) -> Path:
    path = manifest_path_for(out_path)
    atomic_write_text(path, manifest.to_json())
    return path


def read_manifest(out_path) -> dict:
    with open(manifest_path_for(out_path), encoding="utf-8") as fh:
        return json.load(fh)
