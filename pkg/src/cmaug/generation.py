"""Few-shot prompt construction and the batched LLM generation loop."""

from __future__ import annotations

import logging
import random
import re
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .endpoint import ChatEndpoint, EndpointError, GenerationConfig, estimate_tokens
from .records import CLASSES, PROVENANCE_LLM, SentenceRecord

log = logging.getLogger(__name__)

DELIMITER = "|||"

DEFAULT_INSTRUCTION = (
    "You write code-mixed social media sentences blending two languages in one "
    "sentence, each labeled with its sentiment (positive, negative, or neutral). "
    "Write informal, realistic sentences of varied length and topic, switching "
    "languages naturally within each sentence. Produce roughly equal numbers of "
    "each sentiment. Output exactly {batch_size} lines, one sentence per line, "
    "each formatted as: <sentence> ||| <label>. Output nothing else."
)

ZERO_SHOT_INSTRUCTION = (
    "Classify the sentiment of the following code-mixed sentence as positive, "
    "negative, or neutral. Reply with the label only.\n\nSentence: {text}"
)


class InsufficientDemonstrations(ValueError):
    def __init__(self, cls: str, have: int, need: int):
        self.cls = cls
        super().__init__(f"class {cls!r} has {have} records, need {need}")


class GenerationAborted(RuntimeError):
    def __init__(self, message: str, partial: list[SentenceRecord]):
        self.partial = partial
        super().__init__(message)


class DegenerateOutput(RuntimeError):
    pass


@dataclass(frozen=True)
class PromptSpec:
    instruction: str = DEFAULT_INSTRUCTION
    shots: int = 15
    batch_size: int = 50
    lang_pair: str = "es-en"
    demo_format: str = "pipe"

    def __post_init__(self):
        if self.shots < 0:
            raise ValueError("shots must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class GenerationJob:
    target_size: int
    seed: int = 0
    produced: int = 0
    requests_sent: int = 0
    rejected_lines: int = 0
    token_usage: tuple[int, int] = (0, 0)
    invalid_predictions: int = 0
    reject_window: deque = field(default_factory=lambda: deque(maxlen=10), repr=False)
    reject_ceiling: float = 0.5


def sample_demonstrations(
    train: Sequence[SentenceRecord], m: int, seed: int
) -> list[SentenceRecord]:
    """Sample m demonstrations with per-class counts differing by at most 1.

    The m % k remainder is assigned round-robin over a seeded shuffle of the
    class order; sampling is without replacement within one call.
    """
    rng = random.Random(seed)
    classes = list(CLASSES)
    rng.shuffle(classes)
    base, rem = divmod(m, len(classes))
    counts = {cls: base + (1 if i < rem else 0) for i, cls in enumerate(classes)}
    by_class: dict[str, list[SentenceRecord]] = {cls: [] for cls in classes}
    for rec in train:
        if rec.label in by_class:
            by_class[rec.label].append(rec)
    demos: list[SentenceRecord] = []
    for cls in classes:
        need = counts[cls]
        pool = by_class[cls]
        if len(pool) < need:
            raise InsufficientDemonstrations(cls, len(pool), need)
        demos.extend(rng.sample(pool, need))
    rng.shuffle(demos)
    return demos


def render_demo(record: SentenceRecord) -> str:
    return f"{record.text} {DELIMITER} {record.label}"


def build_prompt(
    spec: PromptSpec,
    demos: Sequence[SentenceRecord],
    token_counter: Callable[[str], float] = estimate_tokens,
) -> tuple[str, float]:
    """Render the generation prompt and estimate its token count.

    The instruction (which carries the output directive) comes first, then one
    demonstration per line as ``<text> ||| <label>``. The estimate sums the
    counter over the instruction and each demonstration line; the default
    counter is a whitespace-word estimate.
    """
    instruction = spec.instruction.format(batch_size=spec.batch_size)
    lines = [instruction]
    estimate = float(token_counter(instruction))
    for demo in demos:
        line = render_demo(demo)
        lines.append(line)
        estimate += token_counter(line)
    return "\n".join(lines), estimate


_LINE_RE = re.compile(r"^\s*(?:\d+[.)]\s*|-\s+)?(.*?)\s*\|\|\|\s*(.+?)\s*$")


def parse_generation(
    response_text: str, classes: Sequence[str] = CLASSES
) -> tuple[list[tuple[str, str]], list[str]]:
    """Split a model reply into accepted (text, label) pairs and rejected lines.

    Accepts ``<text> ||| <label>`` with nonempty text and a known label
    (case-insensitive); tolerates a leading ``N.`` or ``-`` enumeration.
    """
    lowered = {c.lower() for c in classes}
    accepted: list[tuple[str, str]] = []
    rejected: list[str] = []
    for line in response_text.splitlines():
        if not line.strip():
            continue
        m = _LINE_RE.match(line)
        if m:
            text, label = m.group(1), m.group(2).strip().lower()
            if text and label in lowered:
                accepted.append((text, label))
                continue
        rejected.append(line)
    return accepted, rejected


def run_generation(
    job: GenerationJob,
    spec: PromptSpec,
    config: GenerationConfig,
    train: Sequence[SentenceRecord],
    endpoint: ChatEndpoint,
) -> list[SentenceRecord]:
    """Drive the batched generation loop until the target size is reached.

    Demonstrations are resampled each request with seed = job.seed +
    request index, so runs replay bit-identically against a deterministic
    endpoint. Requests go out in waves of up to config.parallelism and are
    assembled strictly in request-index order. Overshoot past the target is
    truncated in arrival order.
    """
    produced: list[SentenceRecord] = []

    def one_request(index: int):
        demos = sample_demonstrations(train, spec.shots, job.seed + index)
        prompt, estimate = build_prompt(spec, demos)
        messages = [{"role": "user", "content": prompt}]
        exchange = endpoint.complete(messages, config)
        return estimate, exchange

    with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
        while job.produced < job.target_size:
            remaining = job.target_size - job.produced
            wave = min(
                config.parallelism, max(1, -(-remaining // spec.batch_size))
            )
            indices = [job.requests_sent + i for i in range(wave)]
            futures = [pool.submit(one_request, i) for i in indices]
            for index, future in zip(indices, futures):
                try:
                    estimate, exchange = future.result()
                except EndpointError as exc:
                    job.requests_sent = index + 1
                    raise GenerationAborted(
                        f"request {index} failed: {exc}", produced
                    ) from exc
                job.requests_sent = index + 1
                accepted, rejected = parse_generation(exchange.response_text)
                job.rejected_lines += len(rejected)
                total_lines = len(accepted) + len(rejected)
                job.reject_window.append(
                    len(rejected) / total_lines if total_lines else 1.0
                )
                in_est, out_reported = int(round(estimate)), exchange.usage[1]
                job.token_usage = (
                    job.token_usage[0] + in_est,
                    job.token_usage[1] + out_reported,
                )
                if (
                    len(job.reject_window) == job.reject_window.maxlen
                    and sum(job.reject_window) / len(job.reject_window)
                    > job.reject_ceiling
                ):
                    raise DegenerateOutput(
                        f"reject rate above {job.reject_ceiling:.0%} over the last "
                        f"{job.reject_window.maxlen} requests"
                    )
                for text, label in accepted:
                    if job.produced >= job.target_size:
                        break
                    produced.append(
                        SentenceRecord(
                            id=f"llm:{job.seed}:{len(produced)}",
                            text=text,
                            label=label,
                            lang_pair=spec.lang_pair,
                            provenance=PROVENANCE_LLM,
                            meta={"request_index": str(index)},
                        )
                    )
                    job.produced += 1
    return produced


def match_label(reply: str, classes: Sequence[str] = CLASSES) -> str | None:
    """Label-substring rule for zero-shot replies: unique match required."""
    lowered = reply.lower()
    hits = [c for c in classes if c.lower() in lowered]
    return hits[0] if len(hits) == 1 else None


def zero_shot_predict(
    records: Sequence[SentenceRecord],
    config: GenerationConfig,
    endpoint: ChatEndpoint,
) -> list[str]:
    """One predicted label per record; unparseable replies become 'invalid'."""
    if not records:
        raise ValueError("records must be non-empty")
    predictions: list[str] = []
    invalid = 0
    for rec in records:
        prompt = ZERO_SHOT_INSTRUCTION.format(text=rec.text)
        try:
            exchange = endpoint.complete(
                [{"role": "user", "content": prompt}], config
            )
        except EndpointError as exc:
            raise GenerationAborted(
                f"zero-shot prediction aborted at record {len(predictions)}: {exc}",
                [],
            ) from exc
        label = match_label(exchange.response_text)
        if label is None:
            invalid += 1
            predictions.append("invalid")
        else:
            predictions.append(label)
    if invalid:
        log.info("%d unparseable replies recorded as invalid", invalid)
    return predictions
