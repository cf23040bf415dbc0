"""Blinded human-evaluation sessions: build, judge, persist, aggregate."""

from __future__ import annotations

import json
import random
import secrets
import threading
import time
from dataclasses import asdict, dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

from .metrics import DegenerateAgreement, cohens_kappa
from .records import CLASSES, SentenceRecord

NATURALNESS = ("natural", "strange", "unnatural")
LABEL_AGREE = ("agree", "disagree")
ORIGIN_GUESS = ("human", "machine")


class InsufficientPool(ValueError):
    pass


class ValidationError(ValueError):
    pass


class NotFound(KeyError):
    pass


class EmptySession(ValueError):
    pass


@dataclass(frozen=True)
class AnnotationItem:
    item_id: str
    text: str
    label: str
    provenance: str  # server-side only; never serialized to annotators
    position: int

    def public_view(self) -> dict:
        """Annotator-facing payload; provenance deliberately absent."""
        return {
            "item_id": self.item_id,
            "text": self.text,
            "label": self.label,
            "position": self.position,
        }


@dataclass(frozen=True)
class Judgment:
    item_id: str
    annotator_id: str
    naturalness: str
    label_agree: str
    origin_guess: str
    correction: str | None = None
    comment: str | None = None
    timestamp: float = 0.0

    def validate(self) -> None:
        if self.naturalness not in NATURALNESS:
            raise ValidationError(f"naturalness must be one of {NATURALNESS}")
        if self.label_agree not in LABEL_AGREE:
            raise ValidationError(f"label_agree must be one of {LABEL_AGREE}")
        if self.origin_guess not in ORIGIN_GUESS:
            raise ValidationError(f"origin_guess must be one of {ORIGIN_GUESS}")
        if self.label_agree == "disagree":
            if self.correction not in CLASSES:
                raise ValidationError(
                    "correction_required: a corrected label in "
                    f"{CLASSES} is required when you disagree"
                )
        elif self.correction is not None:
            raise ValidationError("correction only allowed with disagree")


@dataclass
class Session:
    session_id: str
    items: list[AnnotationItem]
    annotators: list[str]
    seed: int
    admin_token: str = field(default_factory=lambda: secrets.token_hex(16))
    annotator_tokens: dict[str, str] = field(default_factory=dict)
    # (annotator_id, item_id) -> latest judgment; audit_log keeps every submission
    judgments: dict[tuple[str, str], Judgment] = field(default_factory=dict)
    audit_log: list[dict] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        for annotator in self.annotators:
            self.annotator_tokens.setdefault(annotator, secrets.token_hex(8))

    def item(self, item_id: str) -> AnnotationItem:
        for item in self.items:
            if item.item_id == item_id:
                return item
        raise NotFound(item_id)

    def submit(self, annotator_id: str, judgment: Judgment) -> Judgment:
        """Validate and persist one judgment; resubmission overwrites with an
        audit entry."""
        if annotator_id not in self.annotators:
            raise NotFound(f"unknown annotator {annotator_id!r}")
        self.item(judgment.item_id)  # raises NotFound for unknown items
        judgment.validate()
        stamped = Judgment(**{**asdict(judgment), "timestamp": time.time(),
                              "annotator_id": annotator_id})
        with self._lock:
            key = (annotator_id, judgment.item_id)
            overwrite = key in self.judgments
            self.judgments[key] = stamped
            self.audit_log.append({**asdict(stamped), "overwrite": overwrite})
        return stamped

    def next_item(self, annotator_id: str) -> AnnotationItem | None:
        if annotator_id not in self.annotators:
            raise NotFound(f"unknown annotator {annotator_id!r}")
        done = {iid for (aid, iid) in self.judgments if aid == annotator_id}
        for item in self.items:
            if item.item_id not in done:
                return item
        return None

    def progress(self, annotator_id: str) -> dict:
        done = sum(1 for (aid, _) in self.judgments if aid == annotator_id)
        return {"done": done, "total": len(self.items)}


def build_session(
    natural_pool: Sequence[SentenceRecord],
    synthetic_pool: Sequence[SentenceRecord],
    n_each: int,
    seed: int,
    annotators: Sequence[str],
    session_id: str | None = None,
) -> Session:
    """Sample n_each from each pool, interleave, and scramble with one seed.

    All listed annotators see the identical item order.
    """
    if len(natural_pool) < n_each:
        raise InsufficientPool(f"natural pool has {len(natural_pool)} < {n_each}")
    if len(synthetic_pool) < n_each:
        raise InsufficientPool(f"synthetic pool has {len(synthetic_pool)} < {n_each}")
    rng = random.Random(seed)
    chosen = rng.sample(list(natural_pool), n_each) + rng.sample(
        list(synthetic_pool), n_each
    )
    rng.shuffle(chosen)
    items = [
        AnnotationItem(
            item_id=f"item-{i:04d}",
            text=rec.text,
            label=rec.label,
            provenance=rec.provenance,
            position=i,
        )
        for i, rec in enumerate(chosen)
    ]
    return Session(
        session_id=session_id or f"session-{seed}",
        items=items,
        annotators=list(annotators),
        seed=seed,
    )


@dataclass
class AggregateReport:
    per_provenance: dict[str, dict[str, float]]
    pairwise_kappa: dict[str, dict[str, float | None]]
    counts: dict[str, int]
    judgments: int

    def to_dict(self) -> dict:
        return asdict(self)

    def render(self) -> str:
        lines = [f"{'group':<16} {'natural%':>9} {'label agree%':>13} {'human%':>8} {'n':>6}"]
        for prov, row in sorted(self.per_provenance.items()):
            lines.append(
                f"{prov:<16} {row['percent_natural']:>9.1f} "
                f"{row['percent_label_agree']:>13.1f} "
                f"{row['percent_guessed_human']:>8.1f} {self.counts[prov]:>6d}"
            )
        for pair, kappas in sorted(self.pairwise_kappa.items()):
            rendered = "  ".join(
                f"{crit}: " + (f"{v:.3f}" if v is not None else "n/a")
                for crit, v in kappas.items()
            )
            lines.append(f"kappa[{pair}]  {rendered}")
        return "\n".join(lines)


def aggregate(session: Session) -> AggregateReport:
    """Per-provenance percentages and per-annotator-pair kappa.

    Naturalness uses the omnibus grouping: only the first option counts as
    natural; strange and unnatural merge into one bucket.
    """
    if not session.judgments:
        raise EmptySession("no judgments submitted yet")
    provenance_of = {item.item_id: item.provenance for item in session.items}
    groups: dict[str, list[Judgment]] = {}
    for judgment in session.judgments.values():
        groups.setdefault(provenance_of[judgment.item_id], []).append(judgment)
    per_provenance = {}
    counts = {}
    for prov, judgments in groups.items():
        n = len(judgments)
        per_provenance[prov] = {
            "percent_natural": 100.0
            * sum(1 for j in judgments if j.naturalness == "natural") / n,
            "percent_label_agree": 100.0
            * sum(1 for j in judgments if j.label_agree == "agree") / n,
            "percent_guessed_human": 100.0
            * sum(1 for j in judgments if j.origin_guess == "human") / n,
        }
        counts[prov] = n

    pairwise: dict[str, dict[str, float | None]] = {}
    criteria = {
        # omnibus grouping applies to the agreement computation too
        "naturalness": lambda j: "natural" if j.naturalness == "natural" else "unnatural",
        "label_agree": lambda j: j.label_agree,
        "origin_guess": lambda j: j.origin_guess,
    }
    for a, b in combinations(session.annotators, 2):
        shared = [
            item.item_id
            for item in session.items
            if (a, item.item_id) in session.judgments
            and (b, item.item_id) in session.judgments
        ]
        if not shared:
            continue
        kappas: dict[str, float | None] = {}
        for name, view in criteria.items():
            ann_a = [view(session.judgments[(a, iid)]) for iid in shared]
            ann_b = [view(session.judgments[(b, iid)]) for iid in shared]
            try:
                kappas[name] = cohens_kappa(ann_a, ann_b)
            except DegenerateAgreement:
                kappas[name] = None
        pairwise[f"{a}|{b}"] = kappas
    return AggregateReport(
        per_provenance=per_provenance,
        pairwise_kappa=pairwise,
        counts=counts,
        judgments=len(session.judgments),
    )


# --- persistence: session snapshot + append-only judgment log -------------

def save_session(session: Session, directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    snapshot = {
        "session_id": session.session_id,
        "seed": session.seed,
        "annotators": session.annotators,
        "admin_token": session.admin_token,
        "annotator_tokens": session.annotator_tokens,
        "items": [asdict(item) for item in session.items],
    }
    (directory / "session.json").write_text(
        json.dumps(snapshot, indent=2, sort_keys=True, ensure_ascii=False),
        encoding="utf-8",
    )
    with (directory / "judgments.log").open("w", encoding="utf-8") as f:
        for entry in session.audit_log:
            f.write(json.dumps(entry, sort_keys=True, ensure_ascii=False) + "\n")
    return directory


def load_session(directory: str | Path) -> Session:
    directory = Path(directory)
    snapshot = json.loads((directory / "session.json").read_text(encoding="utf-8"))
    session = Session(
        session_id=snapshot["session_id"],
        items=[AnnotationItem(**item) for item in snapshot["items"]],
        annotators=snapshot["annotators"],
        seed=snapshot["seed"],
        admin_token=snapshot["admin_token"],
        annotator_tokens=snapshot["annotator_tokens"],
    )
    log_path = directory / "judgments.log"
    if log_path.exists():
        with log_path.open("r", encoding="utf-8") as f:
            for line in f:
                if not line.strip():
                    continue
                entry = json.loads(line)
                fields = {k: v for k, v in entry.items() if k != "overwrite"}
                judgment = Judgment(**fields)
                session.judgments[(judgment.annotator_id, judgment.item_id)] = judgment
                session.audit_log.append(entry)
    return session


def export_judgments(session: Session) -> Iterable[str]:
    """Line-delimited export of the latest judgment per (annotator, item)."""
    for judgment in sorted(
        session.judgments.values(), key=lambda j: (j.annotator_id, j.item_id)
    ):
        yield json.dumps(asdict(judgment), sort_keys=True, ensure_ascii=False)
