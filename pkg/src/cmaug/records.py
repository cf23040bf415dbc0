"""Labeled sentence records and the canonical on-disk dataset format (JSONL)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

CLASSES = ("positive", "negative", "neutral")

PROVENANCE_NATURAL = "natural"
PROVENANCE_LLM = "synthetic-llm"
PROVENANCE_MT = "synthetic-mt"
PROVENANCES = (PROVENANCE_NATURAL, PROVENANCE_LLM, PROVENANCE_MT)


class MalformedRow(ValueError):
    """A dataset row that cannot be parsed; carries the 1-based line number."""

    def __init__(self, path: str | Path, line_no: int, reason: str):
        self.path = str(path)
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"{path}:{line_no}: {reason}")


@dataclass(frozen=True)
class SentenceRecord:
    id: str
    text: str
    label: str
    lang_pair: str = "other"
    provenance: str = PROVENANCE_NATURAL
    meta: dict[str, str] = field(default_factory=dict)

    def with_(self, **kwargs) -> "SentenceRecord":
        return replace(self, **kwargs)

    def to_json(self) -> str:
        return json.dumps(
            {
                "id": self.id,
                "text": self.text,
                "label": self.label,
                "lang_pair": self.lang_pair,
                "provenance": self.provenance,
                "meta": self.meta,
            },
            ensure_ascii=False,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, line: str) -> "SentenceRecord":
        obj = json.loads(line)
        return cls(
            id=str(obj["id"]),
            text=str(obj["text"]),
            label=str(obj["label"]),
            lang_pair=str(obj.get("lang_pair", "other")),
            provenance=str(obj.get("provenance", PROVENANCE_NATURAL)),
            meta={str(k): str(v) for k, v in obj.get("meta", {}).items()},
        )


def normalize_label(raw: str) -> str:
    return raw.strip().lower()


def write_records(records: Iterable[SentenceRecord], path: str | Path) -> int:
    """Write records in the canonical JSONL format. Returns the record count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", encoding="utf-8") as f:
        for rec in records:
            f.write(rec.to_json())
            f.write("\n")
            n += 1
    return n


def read_records(path: str | Path) -> list[SentenceRecord]:
    return list(iter_records(path))


def iter_records(path: str | Path) -> Iterator[SentenceRecord]:
    path = Path(path)
    with path.open("r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield SentenceRecord.from_json(line)
            except (json.JSONDecodeError, KeyError) as exc:
                raise MalformedRow(path, line_no, f"bad canonical record: {exc}") from exc
