import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from trainer_adapter.adapter import (
    CLASSES,
    ManifestError,
    execute_stage,
    load_manifest,
    weighted_f1,
)

SRC = Path(__file__).resolve().parents[1] / "src"


def write_dataset(path: Path, n: int, offset: int = 0):
    templates = {
        "positive": "me encanta this great {i} so good lovely",
        "negative": "que horrible this bad {i} awful terrible no",
        "neutral": "the {i} esta on the table hoy normal",
    }
    with path.open("w", encoding="utf-8") as f:
        for i in range(n):
            label = CLASSES[i % 3]
            f.write(json.dumps({
                "id": f"d{offset + i}",
                "text": templates[label].format(i=offset + i),
                "label": label,
            }) + "\n")
    return path


def make_manifest(tmp_path, n_train=200, epochs=1, lr=5e-4, seed=0,
                  checkpoint_in=None, name="stage"):
    train = write_dataset(tmp_path / f"{name}_train.jsonl", n_train)
    val = write_dataset(tmp_path / f"{name}_val.jsonl", 60, offset=1000)
    manifest = {
        "stage": {"index": 0},
        "hparams": {
            "max_seq_len": 40, "batch_size": 32, "weight_decay": 0.01,
            "epsilon": 1e-8, "learning_rate": lr, "epochs": epochs,
        },
        "model_id": "local-tiny",
        "seed": seed,
        "train_path": str(train),
        "val_path": str(val),
        "checkpoint_in": checkpoint_in,
        "checkpoint_out": str(tmp_path / f"{name}_ckpt.bin"),
        "result_path": str(tmp_path / f"{name}_result.json"),
    }
    path = tmp_path / f"{name}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2))
    return path, manifest


class TestValidation:
    def test_missing_train_file_named_in_error(self, tmp_path):
        path, manifest = make_manifest(tmp_path)
        missing = str(tmp_path / "nope.jsonl")
        manifest["train_path"] = missing
        path.write_text(json.dumps(manifest))
        with pytest.raises(ManifestError, match="nope.jsonl"):
            load_manifest(path)

    def test_bad_hparams_rejected(self, tmp_path):
        path, manifest = make_manifest(tmp_path)
        manifest["hparams"]["epochs"] = 0
        path.write_text(json.dumps(manifest))
        with pytest.raises(ManifestError):
            load_manifest(path)

    def test_missing_key_rejected(self, tmp_path):
        path, manifest = make_manifest(tmp_path)
        del manifest["result_path"]
        path.write_text(json.dumps(manifest))
        with pytest.raises(ManifestError):
            load_manifest(path)


class TestWeightedF1:
    def test_perfect(self):
        assert weighted_f1([0, 1, 2], [0, 1, 2]) == 1.0

    def test_hand_case(self):
        assert weighted_f1([0, 0, 1, 2], [0, 1, 1, 2]) == pytest.approx(0.75)


class TestExecuteStage:
    def test_schema_valid_result(self, tmp_path):
        path, manifest = make_manifest(tmp_path)
        result = execute_stage(path)
        on_disk = json.loads(Path(manifest["result_path"]).read_text())
        assert on_disk == result
        assert 0.0 <= result["val_weighted_f1"] <= 1.0
        assert Path(manifest["checkpoint_out"]).exists()

    def test_honors_epochs_exactly(self, tmp_path):
        path, _ = make_manifest(tmp_path, n_train=100, epochs=3)
        result = execute_stage(path)
        assert result["steps"] == math.ceil(100 / 32) * 3
        assert result["steps"] == result["expected_steps"]

    def test_fixed_seed_reproducibility(self, tmp_path):
        path_a, _ = make_manifest(tmp_path, seed=7, name="a")
        path_b, _ = make_manifest(tmp_path, seed=7, name="b")
        f1_a = execute_stage(path_a)["val_weighted_f1"]
        f1_b = execute_stage(path_b)["val_weighted_f1"]
        assert abs(f1_a - f1_b) <= 0.02

    def test_two_stage_gradual_chain(self, tmp_path):
        # stage 0 trains from scratch; stage 1 resumes from its checkpoint
        path0, manifest0 = make_manifest(tmp_path, epochs=1, name="s0")
        result0 = execute_stage(path0)
        path1, manifest1 = make_manifest(
            tmp_path, epochs=1, name="s1",
            checkpoint_in=manifest0["checkpoint_out"],
        )
        result1 = execute_stage(path1)
        assert Path(manifest1["checkpoint_out"]).exists()
        assert 0.0 <= result1["val_weighted_f1"] <= 1.0
        assert result0["checkpoint_out"] != result1["checkpoint_out"]


class TestProcessContract:
    def run_cli(self, *args):
        return subprocess.run(
            [sys.executable, "-m", "trainer_adapter.adapter", *args],
            capture_output=True, text=True,
            env={"PYTHONPATH": str(SRC), "PATH": "/usr/bin:/bin:/usr/local/bin"},
        )

    def test_success_exit_zero(self, tmp_path):
        path, manifest = make_manifest(tmp_path, n_train=60)
        proc = self.run_cli(str(path))
        assert proc.returncode == 0, proc.stderr
        assert Path(manifest["result_path"]).exists()

    def test_missing_manifest_nonzero(self, tmp_path):
        proc = self.run_cli(str(tmp_path / "absent.json"))
        assert proc.returncode != 0
        assert "absent.json" in proc.stderr

    def test_missing_train_file_nonzero_names_path(self, tmp_path):
        path, manifest = make_manifest(tmp_path)
        manifest["train_path"] = str(tmp_path / "gone.jsonl")
        path.write_text(json.dumps(manifest))
        proc = self.run_cli(str(path))
        assert proc.returncode != 0
        assert "gone.jsonl" in proc.stderr
