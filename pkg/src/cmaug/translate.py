"""Random-translation augmentation: code-mix a monolingual corpus via MT."""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import httpx

from .corpus import EmptyCorpus
from .records import PROVENANCE_MT, SentenceRecord

log = logging.getLogger(__name__)


class TranslationError(RuntimeError):
    pass


class Translator(Protocol):
    def translate(self, text: str, src: str, dst: str) -> str: ...


class WordMapTranslator:
    """Mock translator backed by a word-map file ({source word: translation})."""

    def __init__(self, mapping: dict[str, str]):
        self.mapping = mapping

    @classmethod
    def from_file(cls, path: str | Path) -> "WordMapTranslator":
        with Path(path).open("r", encoding="utf-8") as f:
            return cls(json.load(f))

    def translate(self, text: str, src: str, dst: str) -> str:
        return " ".join(self.mapping.get(tok, tok) for tok in text.split())


class HttpTranslator:
    """Single-endpoint text-in/text-out MT client."""

    def __init__(self, url: str, timeout: float = 30.0):
        self.url = url
        self.timeout = timeout

    def translate(self, text: str, src: str, dst: str) -> str:
        try:
            resp = httpx.post(
                self.url,
                json={"text": text, "src": src, "dst": dst},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            return resp.json()["text"]
        except (httpx.HTTPError, KeyError, ValueError) as exc:
            raise TranslationError(str(exc)) from exc


@dataclass(frozen=True)
class SpanPlan:
    sentence_id: str
    spans: tuple[tuple[int, int], ...]  # half-open (start_token, end_token)
    ratio: float
    seed: int


def plan_spans(
    sentence_id: str,
    n_tokens: int,
    ratio: float,
    seed: int,
    max_spans: int = 3,
    per_token: bool = False,
) -> SpanPlan:
    """Choose non-overlapping token spans covering ~ratio of the sentence.

    Default: 1..max_spans contiguous spans; per_token selects individual
    tokens instead. Translated-token total is within one token of
    ratio * n_tokens.
    """
    if not 0 <= ratio <= 1:
        raise ValueError("ratio must be in [0, 1]")
    rng = random.Random(seed)
    target = round(ratio * n_tokens)
    if target <= 0 or n_tokens == 0:
        return SpanPlan(sentence_id, (), ratio, seed)
    if target >= n_tokens:
        return SpanPlan(sentence_id, ((0, n_tokens),), ratio, seed)
    if per_token:
        picks = sorted(rng.sample(range(n_tokens), target))
        spans = tuple((i, i + 1) for i in picks)
        return SpanPlan(sentence_id, spans, ratio, seed)
    k = rng.randint(1, min(max_spans, target))
    # random composition of target into k positive parts
    cuts = sorted(rng.sample(range(1, target), k - 1)) if k > 1 else []
    parts = [b - a for a, b in zip([0] + cuts, cuts + [target])]
    # distribute the leftover tokens into the k+1 gaps around the spans
    slack = n_tokens - target
    gap_cuts = sorted(rng.choices(range(slack + 1), k=k)) if slack else [0] * k
    spans = []
    pos = 0
    prev_gap = 0
    for part, gap_cut in zip(parts, gap_cuts):
        pos += gap_cut - prev_gap
        prev_gap = gap_cut
        spans.append((pos, pos + part))
        pos += part
    return SpanPlan(sentence_id, tuple(spans), ratio, seed)


def random_translate(
    record: SentenceRecord,
    ratio: float,
    seed: int,
    mt: Translator,
    src: str = "en",
    dst: str = "es",
    per_token: bool = False,
) -> SentenceRecord:
    """Translate randomly planned spans of one sentence; label preserved."""
    tokens = record.text.split()
    plan = plan_spans(record.id, len(tokens), ratio, seed, per_token=per_token)
    out = list(tokens)
    for start, end in plan.spans:
        translated = mt.translate(" ".join(tokens[start:end]), src, dst)
        out[start:end] = [translated]
    meta = dict(record.meta)
    meta.update({"source_id": record.id, "mt_ratio": f"{ratio:.4f}", "mt_seed": str(seed)})
    return record.with_(
        id=f"{record.id}#mt",
        text=" ".join(out),
        provenance=PROVENANCE_MT,
        meta=meta,
    )


def convert_corpus(
    monolingual: Sequence[SentenceRecord],
    seed: int,
    mt: Translator,
    ratio_range: tuple[float, float] = (0.2, 0.8),
    src: str = "en",
    dst: str = "es",
    per_token: bool = False,
) -> tuple[list[SentenceRecord], int]:
    """Convert a labeled monolingual corpus into synthetic-mt records.

    Per-sentence translated fraction is drawn uniformly from ratio_range.
    Returns (converted records in input order, skip count); records whose
    translation fails are skipped and counted.
    """
    if not monolingual:
        raise EmptyCorpus("cannot convert an empty corpus")
    rng = random.Random(seed)
    out: list[SentenceRecord] = []
    skipped = 0
    for index, rec in enumerate(monolingual):
        ratio = rng.uniform(*ratio_range)
        try:
            out.append(
                random_translate(
                    rec, ratio, seed + index + 1, mt, src=src, dst=dst,
                    per_token=per_token,
                )
            )
        except TranslationError as exc:
            skipped += 1
            log.warning("skipping %s: %s", rec.id, exc)
    return out, skipped
