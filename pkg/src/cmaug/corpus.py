"""Corpus ingestion, cleaning, label filtering, resplitting, and summary stats."""

from __future__ import annotations

import logging
import random
import re
import statistics
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .records import MalformedRow, SentenceRecord, normalize_label

log = logging.getLogger(__name__)

_URL_RE = re.compile(r"(?:https?://|www\.)\S+")

# Codepoint ranges treated as emoji / pictographs.
_EMOJI_RANGES = (
    (0x1F000, 0x1FAFF),
    (0x2600, 0x27BF),
    (0x2B00, 0x2BFF),
    (0x1F1E6, 0x1F1FF),
)
# Joiners and presentation selectors dropped outright.
_EMOJI_MODIFIERS = {0x200D, 0xFE0E, 0xFE0F, 0x20E3}


class InsufficientData(ValueError):
    pass


class EmptyCorpus(ValueError):
    pass


@dataclass(frozen=True)
class PreprocessOptions:
    drop_hashtag_tokens: bool = False
    emoji_table: dict[str, str] | None = None


@dataclass
class DatasetSplit:
    train: list[SentenceRecord]
    val: list[SentenceRecord]
    test: list[SentenceRecord]
    split_seed: int


@dataclass
class CorpusStats:
    count: int
    mean_len: float
    std_len: float
    class_counts: dict[str, int] = field(default_factory=dict)

    def render(self) -> str:
        lines = [
            f"count     {self.count}",
            f"mean_len  {self.mean_len:.2f}",
            f"std_len   {self.std_len:.2f}",
        ]
        for cls in sorted(self.class_counts):
            lines.append(f"  {cls:<9} {self.class_counts[cls]}")
        return "\n".join(lines)


def _is_emoji(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _EMOJI_RANGES)


def _emoji_description(ch: str, table: dict[str, str] | None) -> str:
    if table is not None and ch in table:
        return table[ch]
    name = unicodedata.name(ch, "")
    return name.lower()


def _replace_emoji(text: str, table: dict[str, str] | None) -> str:
    out: list[str] = []
    for ch in text:
        cp = ord(ch)
        if cp in _EMOJI_MODIFIERS:
            continue
        if _is_emoji(ch):
            desc = _emoji_description(ch, table)
            if desc:
                out.append(f" {desc} ")
            continue
        out.append(ch)
    return "".join(out)


def preprocess(
    record: SentenceRecord, options: PreprocessOptions = PreprocessOptions()
) -> SentenceRecord | None:
    """Clean one record. Returns None when the text is empty after cleaning.

    Removes URLs, strips leading #/@ marker characters (or whole tokens with
    drop_hashtag_tokens), replaces each emoji with its lowercase description,
    and collapses whitespace. Idempotent.
    """
    text = _URL_RE.sub(" ", record.text)
    text = _replace_emoji(text, options.emoji_table)
    tokens = []
    for tok in text.split():
        if tok[0] in "#@":
            if options.drop_hashtag_tokens:
                continue
            tok = tok.lstrip("#@")
            if not tok:
                continue
        tokens.append(tok)
    cleaned = " ".join(tokens)
    if not cleaned:
        return None
    return record.with_(text=cleaned)


def preprocess_corpus(
    records: list[SentenceRecord], options: PreprocessOptions = PreprocessOptions()
) -> tuple[list[SentenceRecord], int]:
    """Preprocess every record; returns (kept, dropped_count)."""
    kept = []
    dropped = 0
    for rec in records:
        out = preprocess(rec, options)
        if out is None:
            dropped += 1
        else:
            kept.append(out)
    return kept, dropped


def load_dataset(
    path: str | Path,
    format: str = "canonical-jsonl",
    skip_bad_rows: bool = False,
) -> list[SentenceRecord]:
    """Load a dataset file.

    canonical-jsonl: the toolkit's own format. delimited-text: tab-separated
    ``text<TAB>label[<TAB>id]``; raw labels are preserved in meta and
    normalized (lowercase, trim) into the label field; missing ids are
    synthesized as ``<filename>:<line>``.
    """
    path = Path(path)
    if format == "canonical-jsonl":
        from .records import iter_records

        records = []
        with_skip_errors = 0
        for rec in _iter_tolerant(iter_records(path), skip_bad_rows):
            if rec is None:
                with_skip_errors += 1
                continue
            records.append(rec)
        if not records:
            log.warning("empty dataset: %s", path)
        return records
    if format != "delimited-text":
        raise ValueError(f"unknown dataset format: {format}")

    records = []
    seen_ids: set[str] = set()
    with path.open("r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                err = MalformedRow(path, line_no, "expected text<TAB>label[<TAB>id]")
                if skip_bad_rows:
                    log.warning("skipping bad row: %s", err)
                    continue
                raise err
            text, raw_label = parts[0], parts[1]
            rec_id = parts[2] if len(parts) > 2 and parts[2] else f"{path.name}:{line_no}"
            if rec_id in seen_ids:
                err = MalformedRow(path, line_no, f"duplicate id {rec_id!r}")
                if skip_bad_rows:
                    log.warning("skipping bad row: %s", err)
                    continue
                raise err
            seen_ids.add(rec_id)
            records.append(
                SentenceRecord(
                    id=rec_id,
                    text=text,
                    label=normalize_label(raw_label),
                    meta={"raw_label": raw_label, "source_line": str(line_no)},
                )
            )
    if not records:
        log.warning("empty dataset: %s", path)
    return records


def _iter_tolerant(it, skip_bad_rows: bool):
    it = iter(it)
    while True:
        try:
            yield next(it)
        except StopIteration:
            return
        except MalformedRow as err:
            if not skip_bad_rows:
                raise
            log.warning("skipping bad row: %s", err)
            yield None


def filter_labels(
    records: list[SentenceRecord], allowed: set[str]
) -> tuple[list[SentenceRecord], Counter]:
    """Keep records whose raw label is in `allowed`; report removals per raw label.

    The raw label is meta['raw_label'] when present, otherwise the normalized
    label field.
    """
    if not allowed:
        raise ValueError("allowed label set must be non-empty")
    kept = []
    removed: Counter = Counter()
    for rec in records:
        raw = rec.meta.get("raw_label", rec.label)
        if normalize_label(raw) in {normalize_label(a) for a in allowed}:
            kept.append(rec)
        else:
            removed[raw] += 1
    if not kept and records:
        log.warning("all %d records removed by label filter", len(records))
    return kept, removed


def resplit(
    records: list[SentenceRecord], sizes: tuple[int, int, int], seed: int
) -> DatasetSplit:
    """Deterministic seeded shuffle then contiguous train/val/test assignment."""
    n_train, n_val, n_test = sizes
    total = n_train + n_val + n_test
    if total > len(records):
        raise InsufficientData(
            f"requested {total} records but corpus has {len(records)}"
        )
    shuffled = list(records)
    random.Random(seed).shuffle(shuffled)
    return DatasetSplit(
        train=shuffled[:n_train],
        val=shuffled[n_train : n_train + n_val],
        test=shuffled[n_train + n_val : total],
        split_seed=seed,
    )


def stats(records: list[SentenceRecord]) -> CorpusStats:
    """Sentence-length stats (whitespace tokens, population std) and class counts."""
    if not records:
        raise EmptyCorpus("cannot summarize an empty corpus")
    lengths = [len(rec.text.split()) for rec in records]
    return CorpusStats(
        count=len(records),
        mean_len=statistics.fmean(lengths),
        std_len=statistics.pstdev(lengths),
        class_counts=dict(Counter(rec.label for rec in records)),
    )
