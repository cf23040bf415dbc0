"""Gradual fine-tuning plans, per-stage training sets, and the trainer protocol."""

from __future__ import annotations

import hashlib
import json
import logging
import random
import subprocess
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

from .records import SentenceRecord, write_records

log = logging.getLogger(__name__)

DEFAULT_SYNTH_SIZES = [50_000, 25_000, 15_000, 5_000, 0]
DEFAULT_STAGE_LRS = [1e-6, 2e-6, 2e-6, 4e-6, 2e-6]


class ConfigError(ValueError):
    pass


class InsufficientSynthetic(ValueError):
    pass


class StageFailed(RuntimeError):
    def __init__(self, index: int, message: str, partial: list[dict]):
        self.index = index
        self.partial = partial
        super().__init__(f"stage {index} failed: {message}")


@dataclass(frozen=True)
class BaseHparams:
    max_seq_len: int = 40
    batch_size: int = 32
    weight_decay: float = 0.01
    base_lr: float = 5e-5
    epsilon: float = 1e-8


@dataclass(frozen=True)
class TrainingStage:
    index: int
    natural_size: int
    synthetic_size: int
    epochs: int
    learning_rate: float

    def __post_init__(self):
        if self.natural_size < 0 or self.synthetic_size < 0:
            raise ConfigError("stage sizes must be >= 0")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning rate must be > 0")


@dataclass
class TrainingPlan:
    stages: list[TrainingStage]
    base_hparams: BaseHparams = field(default_factory=BaseHparams)
    natural_seed: int = 0
    synthetic_seed: int = 0
    model_id: str = "xlm-t"

    def validate(self) -> None:
        if not self.stages:
            raise ConfigError("plan has no stages")
        naturals = {s.natural_size for s in self.stages}
        if len(naturals) != 1:
            raise ConfigError("natural_size must be constant across stages")
        synth = [s.synthetic_size for s in self.stages]
        if any(b > a for a, b in zip(synth, synth[1:])):
            raise ConfigError("synthetic_size must be non-increasing across stages")

    def to_dict(self) -> dict:
        return {
            "stages": [asdict(s) for s in self.stages],
            "base_hparams": asdict(self.base_hparams),
            "natural_seed": self.natural_seed,
            "synthetic_seed": self.synthetic_seed,
            "model_id": self.model_id,
        }


def gradual_plan(
    natural_n: int,
    synthetic_pool: int,
    synth_sizes: Sequence[int] = tuple(DEFAULT_SYNTH_SIZES),
    lrs: Sequence[float] = tuple(DEFAULT_STAGE_LRS),
    epochs: int = 3,
    clamp: bool = False,
    natural_seed: int = 0,
    synthetic_seed: int = 0,
    model_id: str = "xlm-t",
) -> TrainingPlan:
    """Build a staged plan: constant natural data, shrinking synthetic data."""
    if len(synth_sizes) != len(lrs):
        raise ConfigError(
            f"synth_sizes ({len(synth_sizes)}) and lrs ({len(lrs)}) differ in length"
        )
    sizes = list(synth_sizes)
    if synthetic_pool < max(sizes, default=0):
        if not clamp:
            raise InsufficientSynthetic(
                f"synthetic pool {synthetic_pool} < largest stage {max(sizes)}"
            )
        log.warning("clamping stage sizes to synthetic pool of %d", synthetic_pool)
        sizes = [min(s, synthetic_pool) for s in sizes]
    plan = TrainingPlan(
        stages=[
            TrainingStage(
                index=i,
                natural_size=natural_n,
                synthetic_size=size,
                epochs=epochs,
                learning_rate=lr,
            )
            for i, (size, lr) in enumerate(zip(sizes, lrs))
        ],
        natural_seed=natural_seed,
        synthetic_seed=synthetic_seed,
        model_id=model_id,
    )
    plan.validate()
    return plan


def one_stage_plan(
    natural_n: int,
    synthetic_size: int,
    lr: float = 5e-5,
    epochs: int = 3,
    **kwargs,
) -> TrainingPlan:
    """Single-stage plan at the base learning rate (the Malayalam regime)."""
    return gradual_plan(
        natural_n, synthetic_size, synth_sizes=[synthetic_size], lrs=[lr],
        epochs=epochs, **kwargs,
    )


def _natural_subset(
    plan: TrainingPlan, natural: Sequence[SentenceRecord]
) -> list[SentenceRecord]:
    n = plan.stages[0].natural_size
    if n > len(natural):
        raise ConfigError(f"natural pool {len(natural)} < requested {n}")
    pool = list(natural)
    random.Random(plan.natural_seed).shuffle(pool)
    return pool[:n]


def _synthetic_order(
    plan: TrainingPlan, synthetic: Sequence[SentenceRecord]
) -> list[SentenceRecord]:
    pool = list(synthetic)
    random.Random(plan.synthetic_seed).shuffle(pool)
    return pool


def materialize_stage(
    plan: TrainingPlan,
    stage_index: int,
    natural: Sequence[SentenceRecord],
    synthetic: Sequence[SentenceRecord],
    out_path: str | Path,
) -> Path:
    """Write one stage's training set.

    The natural subset is identical across stages; synthetic subsets are
    prefixes of one seeded shuffle, so later (smaller) stages are nested
    inside earlier ones. The combined set is shuffled with seed =
    natural_seed + stage index before writing.
    """
    plan.validate()
    if not 0 <= stage_index < len(plan.stages):
        raise ConfigError(f"stage index {stage_index} out of range")
    stage = plan.stages[stage_index]
    if stage.synthetic_size > len(synthetic):
        raise InsufficientSynthetic(
            f"synthetic pool {len(synthetic)} < stage size {stage.synthetic_size}"
        )
    combined = _natural_subset(plan, natural) + _synthetic_order(plan, synthetic)[
        : stage.synthetic_size
    ]
    random.Random(plan.natural_seed + stage.index).shuffle(combined)
    out_path = Path(out_path)
    write_records(combined, out_path)
    return out_path


class Trainer(Protocol):
    def run_stage(self, manifest_path: Path) -> dict: ...

    @property
    def trainer_id(self) -> str: ...


@dataclass
class TrainerResult:
    per_stage: list[dict]
    final: dict
    wall_time: float
    trainer_id: str


def stable_hash64(payload: str) -> int:
    return int.from_bytes(hashlib.sha256(payload.encode("utf-8")).digest()[:8], "big")


def file_fingerprint(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class MockTrainer:
    """In-process trainer implementing the file protocol contract.

    The reported score is a pure function of the canonical serialization of
    (plan stage hparams, dataset fingerprints): a stable 64-bit hash mapped
    into [0.3, 0.9].
    """

    trainer_id = "mock"

    def run_stage(self, manifest_path: Path) -> dict:
        manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
        train_path = Path(manifest["train_path"])
        if not train_path.exists():
            raise StageFailed(manifest["stage"]["index"], f"missing {train_path}", [])
        fingerprints = {"train": file_fingerprint(train_path)}
        val_path = manifest.get("val_path")
        if val_path and Path(val_path).exists():
            fingerprints["val"] = file_fingerprint(val_path)
        payload = json.dumps(
            {"stage": manifest["stage"], "hparams": manifest["hparams"],
             "fingerprints": fingerprints},
            sort_keys=True,
        )
        score = 0.3 + 0.6 * (stable_hash64(payload) / 2**64)
        result = {
            "val_weighted_f1": score,
            "train_loss": 1.0 - score / 2,
            "checkpoint_out": manifest["checkpoint_out"],
        }
        Path(manifest["checkpoint_out"]).write_text(
            json.dumps({"trainer": "mock", "payload_hash": stable_hash64(payload)}),
            encoding="utf-8",
        )
        Path(manifest["result_path"]).write_text(
            json.dumps(result, sort_keys=True), encoding="utf-8"
        )
        return result


class CommandTrainer:
    """Invokes an external trainer command with the stage manifest path.

    Contract: the command reads the manifest, trains, writes the result file
    named in the manifest, and exits 0; nonzero exit means failure.
    """

    def __init__(self, command: list[str]):
        self.command = command
        self.trainer_id = " ".join(command)

    def run_stage(self, manifest_path: Path) -> dict:
        proc = subprocess.run(
            [*self.command, str(manifest_path)], capture_output=True, text=True
        )
        manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
        index = manifest["stage"]["index"]
        if proc.returncode != 0:
            raise StageFailed(index, proc.stderr.strip() or "nonzero exit", [])
        result_path = Path(manifest["result_path"])
        if not result_path.exists():
            raise StageFailed(index, "trainer wrote no result file", [])
        try:
            result = json.loads(result_path.read_text(encoding="utf-8"))
            float(result["val_weighted_f1"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise StageFailed(index, f"malformed result file: {exc}", [])
        return result


def run_plan(
    plan: TrainingPlan,
    trainer: Trainer,
    natural: Sequence[SentenceRecord],
    synthetic: Sequence[SentenceRecord],
    val_path: str | Path,
    work_dir: str | Path,
) -> TrainerResult:
    """Execute all stages in order through the file-based trainer protocol.

    Each stage receives its materialized training file, stage hparams, and
    the previous stage's checkpoint. Per-stage results are persisted as they
    complete, so a failure leaves earlier results on disk.
    """
    import time

    plan.validate()
    work_dir = Path(work_dir)
    work_dir.mkdir(parents=True, exist_ok=True)
    start = time.monotonic()
    per_stage: list[dict] = []
    checkpoint_in: str | None = None
    for stage in plan.stages:
        stage_dir = work_dir / f"stage_{stage.index}"
        stage_dir.mkdir(parents=True, exist_ok=True)
        train_path = materialize_stage(
            plan, stage.index, natural, synthetic, stage_dir / "train.jsonl"
        )
        manifest = {
            "stage": asdict(stage),
            "hparams": {
                **asdict(plan.base_hparams),
                "learning_rate": stage.learning_rate,
                "epochs": stage.epochs,
            },
            "model_id": plan.model_id,
            "seed": plan.natural_seed,
            "train_path": str(train_path),
            "val_path": str(val_path),
            "checkpoint_in": checkpoint_in,
            "checkpoint_out": str(stage_dir / "checkpoint.bin"),
            "result_path": str(stage_dir / "result.json"),
        }
        manifest_path = stage_dir / "manifest.json"
        manifest_path.write_text(
            json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
        )
        try:
            result = trainer.run_stage(manifest_path)
        except StageFailed as exc:
            raise StageFailed(stage.index, str(exc), per_stage) from exc
        per_stage.append(result)
        (work_dir / "per_stage.json").write_text(
            json.dumps(per_stage, indent=2, sort_keys=True), encoding="utf-8"
        )
        checkpoint_in = manifest["checkpoint_out"]
    return TrainerResult(
        per_stage=per_stage,
        final=per_stage[-1],
        wall_time=time.monotonic() - start,
        trainer_id=trainer.trainer_id,
    )
