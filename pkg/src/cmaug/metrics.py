"""Evaluation: classification reports, percent change, kappa, CM pattern stats."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping, Sequence

from .records import CLASSES, SentenceRecord

INVALID = "invalid"


class DegenerateAgreement(ValueError):
    pass


@dataclass
class ConfusionMatrix:
    classes: tuple[str, ...]
    counts: list[list[int]]  # rows = true class, cols = predicted

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)


@dataclass
class EvalReport:
    per_class: dict[str, dict[str, float]]
    weighted_f1: float
    accuracy: float
    invalid_predictions: int = 0

    def to_dict(self) -> dict:
        return {
            "per_class": self.per_class,
            "weighted_f1": self.weighted_f1,
            "accuracy": self.accuracy,
            "invalid_predictions": self.invalid_predictions,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        obj = json.loads(text)
        return cls(
            per_class=obj["per_class"],
            weighted_f1=obj["weighted_f1"],
            accuracy=obj["accuracy"],
            invalid_predictions=obj.get("invalid_predictions", 0),
        )

    def render(self) -> str:
        lines = [f"{'class':<10} {'prec':>7} {'recall':>7} {'f1':>7} {'support':>8}"]
        for cls, row in sorted(self.per_class.items()):
            lines.append(
                f"{cls:<10} {row['precision']:>7.3f} {row['recall']:>7.3f} "
                f"{row['f1']:>7.3f} {int(row['support']):>8d}"
            )
        lines.append(f"{'weighted_f1':<10} {self.weighted_f1:.4f}")
        lines.append(f"{'accuracy':<10} {self.accuracy:.4f}")
        if self.invalid_predictions:
            lines.append(f"invalid predictions: {self.invalid_predictions}")
        return "\n".join(lines)


def confusion_matrix(
    y_true: Sequence[str], y_pred: Sequence[str], classes: Sequence[str] = CLASSES
) -> ConfusionMatrix:
    index = {c: i for i, c in enumerate(classes)}
    counts = [[0] * len(classes) for _ in classes]
    for t, p in zip(y_true, y_pred):
        if p in index:
            counts[index[t]][index[p]] += 1
    return ConfusionMatrix(classes=tuple(classes), counts=counts)


def classification_report(
    y_true: Sequence[str], y_pred: Sequence[str], classes: Sequence[str] = CLASSES
) -> EvalReport:
    """Per-class precision/recall/F1, support-weighted F1, and accuracy.

    Predictions outside `classes` (e.g. unparseable zero-shot replies) count
    as incorrect and are tallied in invalid_predictions. Weighted F1 averages
    over classes with nonzero support only.
    """
    if len(y_true) != len(y_pred):
        raise ValueError(f"length mismatch: {len(y_true)} vs {len(y_pred)}")
    if not y_true:
        raise ValueError("empty inputs")
    class_set = set(classes)
    unknown_true = {t for t in y_true if t not in class_set}
    if unknown_true:
        raise ValueError(f"true labels outside the class set: {sorted(unknown_true)}")
    n = len(y_true)
    invalid = sum(1 for p in y_pred if p not in class_set)
    per_class: dict[str, dict[str, float]] = {}
    weighted_f1 = 0.0
    correct = sum(1 for t, p in zip(y_true, y_pred) if t == p)
    for cls in classes:
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == cls and p == cls)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != cls and p == cls)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == cls and p != cls)
        support = tp + fn
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[cls] = {
            "precision": precision,
            "recall": recall,
            "f1": f1,
            "support": float(support),
        }
        if support:
            weighted_f1 += support / n * f1
    return EvalReport(
        per_class=per_class,
        weighted_f1=weighted_f1,
        accuracy=correct / n,
        invalid_predictions=invalid,
    )


def percent_change(baseline_f1: float, augmented_f1: float) -> float:
    """Signed relative change in percent, rounded to two decimals (half away
    from zero)."""
    if baseline_f1 == 0:
        raise ZeroDivisionError("baseline F1 must be > 0")
    raw = 100.0 * (augmented_f1 - baseline_f1) / baseline_f1
    return float(Decimal(repr(raw)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def cohens_kappa(ann_a: Sequence[str], ann_b: Sequence[str]) -> float:
    """Chance-corrected agreement (p_o - p_e) / (1 - p_e)."""
    if len(ann_a) != len(ann_b):
        raise ValueError("annotation lists must have equal length")
    if not ann_a:
        raise ValueError("annotation lists must be non-empty")
    n = len(ann_a)
    p_o = sum(1 for a, b in zip(ann_a, ann_b) if a == b) / n
    counts_a = Counter(ann_a)
    counts_b = Counter(ann_b)
    p_e = sum(counts_a[c] * counts_b.get(c, 0) for c in counts_a) / n**2
    if p_e >= 1.0:
        raise DegenerateAgreement(
            "both annotators are constant on the same label; kappa is undefined"
        )
    return (p_o - p_e) / (1 - p_e)


@dataclass
class CMPatternStats:
    switch_points_per_sentence: float
    lang_token_ratio: dict[str, float]
    dominant_language: str
    sentences: int = 0
    total_switch_points: int = 0

    def render(self) -> str:
        ratios = "  ".join(f"{k}: {v:.3f}" for k, v in sorted(self.lang_token_ratio.items()))
        return (
            f"sentences              {self.sentences}\n"
            f"switch points/sentence {self.switch_points_per_sentence:.3f}\n"
            f"language token ratios  {ratios}\n"
            f"dominant language      {self.dominant_language}"
        )


def cm_stats(
    records: Sequence[SentenceRecord], lexicons: Mapping[str, set[str]]
) -> CMPatternStats:
    """Code-mixing pattern stats from per-language lexicon tagging.

    Tokens are lowercased for lookup; tokens found in more than one lexicon
    are tagged unknown and excluded from switch counting. A switch point is a
    pair of adjacent known tokens with different language tags. Ratios are
    over all tokens, so they sum to <= 1 with the remainder unknown.
    """
    if not lexicons or any(not words for words in lexicons.values()):
        raise ValueError("every language needs a non-empty lexicon")
    langs = sorted(lexicons)
    switch_points = 0
    lang_counts: Counter = Counter()
    total_tokens = 0
    for rec in records:
        prev_tag: str | None = None
        for tok in rec.text.lower().split():
            total_tokens += 1
            hits = [lang for lang in langs if tok in lexicons[lang]]
            if len(hits) == 1:
                tag = hits[0]
                lang_counts[tag] += 1
                if prev_tag is not None and prev_tag != tag:
                    switch_points += 1
                prev_tag = tag
            else:
                # unknown or tied token: breaks adjacency for switch counting
                prev_tag = None
    n = len(records)
    ratios = {
        lang: (lang_counts[lang] / total_tokens if total_tokens else 0.0)
        for lang in langs
    }
    dominant = max(langs, key=lambda lang: (ratios[lang], lang)) if langs else ""
    return CMPatternStats(
        switch_points_per_sentence=switch_points / n if n else 0.0,
        lang_token_ratio=ratios,
        dominant_language=dominant,
        sentences=n,
        total_switch_points=switch_points,
    )
