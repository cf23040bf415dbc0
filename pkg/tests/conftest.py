import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from cmaug.records import CLASSES, SentenceRecord

FIXTURE_PATH = Path(__file__).resolve().parents[1] / "data" / "fixture_300.jsonl"


@pytest.fixture
def fixture_path() -> Path:
    return FIXTURE_PATH


@pytest.fixture
def train_pool() -> list[SentenceRecord]:
    """Balanced 60-record training pool."""
    return [
        SentenceRecord(
            id=f"t{i}",
            text=f"sample sentence numero {i} con some words mixed in",
            label=CLASSES[i % 3],
        )
        for i in range(60)
    ]
