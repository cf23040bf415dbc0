"""Regenerate the bundled 300-record code-mixed fixture (data/fixture_300.jsonl).

The fixture is deterministic; rerunning this script reproduces the committed
file byte for byte.
"""

from __future__ import annotations

import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from cmaug.records import CLASSES, SentenceRecord, write_records

OPENERS = {
    "positive": ["me encanta", "que bueno", "loved", "this is amazing", "so happy con"],
    "negative": ["no aguanto", "que lata", "hated", "this is terrible", "so tired de"],
    "neutral": ["voy a ver", "just checked", "manana tengo", "they posted", "heard about"],
}
SUBJECTS = ["the new movie", "ese partido", "my playlist", "la clase de math",
            "this cafe", "el concierto", "our group chat", "la final"]
TAILS = ["tbh", "no lie", "jaja", "for real", "otra vez", "this week", "right now", ""]
EXTRAS = ["#finals", "@amiga", "https://t.co/abc123", "😂", "🎉", ""]


def main() -> None:
    rng = random.Random(20240)
    records = []
    for i in range(300):
        label = CLASSES[i % 3]
        parts = [
            rng.choice(OPENERS[label]),
            rng.choice(SUBJECTS),
            rng.choice(TAILS),
            rng.choice(EXTRAS),
        ]
        text = " ".join(p for p in parts if p)
        records.append(
            SentenceRecord(
                id=f"fx-{i:03d}",
                text=text,
                label=label,
                lang_pair="es-en",
                provenance="natural",
                meta={"raw_label": label.capitalize()},
            )
        )
    out = Path(__file__).resolve().parents[1] / "data" / "fixture_300.jsonl"
    write_records(records, out)
    print(f"wrote {len(records)} records to {out}")


if __name__ == "__main__":
    main()
