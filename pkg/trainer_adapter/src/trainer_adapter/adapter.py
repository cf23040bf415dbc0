"""Trainer-protocol implementation: read a stage manifest, fine-tune, emit results.

Protocol contract: argv[1] is a JSON manifest with hparams, data paths, and
checkpoint paths; on success the result file named in the manifest is
written and the process exits 0; any failure exits nonzero with a diagnostic
on stderr.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import torch
from torch import nn

from .model import TinyEncoderClassifier, build_vocab, encode

CLASSES = ("positive", "negative", "neutral")


class ManifestError(ValueError):
    pass


def load_manifest(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest not found: {path}")
    manifest = json.loads(path.read_text(encoding="utf-8"))
    for key in ("hparams", "train_path", "val_path", "result_path", "checkpoint_out"):
        if key not in manifest:
            raise ManifestError(f"manifest missing key {key!r}")
    for key in ("train_path", "val_path"):
        if not Path(manifest[key]).exists():
            raise ManifestError(f"{key} does not exist: {manifest[key]}")
    hp = manifest["hparams"]
    if hp.get("epochs", 0) < 1 or hp.get("learning_rate", 0) <= 0:
        raise ManifestError("hparams out of range: need epochs >= 1, lr > 0")
    return manifest


def read_dataset(path: str | Path) -> tuple[list[str], list[int]]:
    texts, labels = [], []
    with Path(path).open("r", encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            obj = json.loads(line)
            if obj["label"] not in CLASSES:
                raise ManifestError(f"unknown label {obj['label']!r} in {path}")
            texts.append(obj["text"])
            labels.append(CLASSES.index(obj["label"]))
    if not texts:
        raise ManifestError(f"empty dataset: {path}")
    return texts, labels


def weighted_f1(y_true: list[int], y_pred: list[int]) -> float:
    n = len(y_true)
    total = 0.0
    for cls in range(len(CLASSES)):
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == cls and p == cls)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != cls and p == cls)
        support = sum(1 for t in y_true if t == cls)
        if not support:
            continue
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / support
        f1 = (2 * precision * recall / (precision + recall)
              if precision + recall else 0.0)
        total += support / n * f1
    return total


def _batches(n: int, batch_size: int):
    for start in range(0, n, batch_size):
        yield start, min(start + batch_size, n)


def execute_stage(manifest_path: str | Path) -> dict:
    manifest = load_manifest(manifest_path)
    hp = manifest["hparams"]
    seed = int(manifest.get("seed", 0))
    max_len = int(hp.get("max_seq_len", 40))
    batch_size = int(hp.get("batch_size", 32))
    epochs = int(hp["epochs"])

    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True)

    train_texts, train_labels = read_dataset(manifest["train_path"])
    val_texts, val_labels = read_dataset(manifest["val_path"])

    checkpoint_in = manifest.get("checkpoint_in")
    if checkpoint_in and Path(checkpoint_in).exists():
        state = torch.load(checkpoint_in, weights_only=False)
        vocab = state["vocab"]
        model = TinyEncoderClassifier(len(vocab), len(CLASSES), max_len=max_len)
        model.load_state_dict(state["model"])
    else:
        vocab = build_vocab(train_texts)
        model = TinyEncoderClassifier(len(vocab), len(CLASSES), max_len=max_len)

    optimizer = torch.optim.AdamW(
        model.parameters(),
        lr=float(hp["learning_rate"]),
        weight_decay=float(hp.get("weight_decay", 0.01)),
        eps=float(hp.get("epsilon", 1e-8)),
    )
    loss_fn = nn.CrossEntropyLoss()

    x_train = torch.tensor([encode(t, vocab, max_len) for t in train_texts])
    y_train = torch.tensor(train_labels)
    steps = 0
    last_loss = 0.0
    model.train()
    generator = torch.Generator().manual_seed(seed)
    for _ in range(epochs):
        order = torch.randperm(len(train_texts), generator=generator)
        for start, end in _batches(len(train_texts), batch_size):
            idx = order[start:end]
            optimizer.zero_grad()
            loss = loss_fn(model(x_train[idx]), y_train[idx])
            loss.backward()
            optimizer.step()
            steps += 1
            last_loss = loss.item()

    model.eval()
    x_val = torch.tensor([encode(t, vocab, max_len) for t in val_texts])
    with torch.no_grad():
        preds = []
        for start, end in _batches(len(val_texts), batch_size):
            preds.extend(model(x_val[start:end]).argmax(dim=1).tolist())
    score = weighted_f1(val_labels, preds)

    torch.save({"vocab": vocab, "model": model.state_dict()},
               manifest["checkpoint_out"])
    expected_steps = math.ceil(len(train_texts) / batch_size) * epochs
    result = {
        "val_weighted_f1": score,
        "train_loss": last_loss,
        "steps": steps,
        "expected_steps": expected_steps,
        "checkpoint_out": manifest["checkpoint_out"],
        "trainer": "trainer-adapter",
    }
    Path(manifest["result_path"]).write_text(
        json.dumps(result, indent=2, sort_keys=True), encoding="utf-8"
    )
    return result


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: cmaug-trainer <manifest.json>", file=sys.stderr)
        return 2
    try:
        result = execute_stage(argv[0])
    except ManifestError as exc:
        print(f"manifest error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # protocol: any failure is a nonzero exit
        print(f"stage failed: {exc}", file=sys.stderr)
        return 1
    print(f"val_weighted_f1 {result['val_weighted_f1']:.4f} "
          f"({result['steps']} steps)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
