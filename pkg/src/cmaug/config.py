"""Run configuration (YAML + flag overrides) and the per-run output manifest."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import platform
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml


class ConfigValidationError(ValueError):
    pass


def _from_dict(cls, data: dict, path: str):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigValidationError(
            f"unknown config key(s) at {path or 'top level'}: {sorted(unknown)}"
        )
    kwargs = {}
    for f in fields(cls):
        if f.name not in data:
            continue
        value = data[f.name]
        if dataclasses.is_dataclass(f.type) or (
            isinstance(f.type, str) and f.type in _SECTION_TYPES
        ):
            section_cls = _SECTION_TYPES[f.type] if isinstance(f.type, str) else f.type
            if not isinstance(value, dict):
                raise ConfigValidationError(f"{path}.{f.name} must be a mapping")
            value = _from_dict(section_cls, value, f"{path}.{f.name}".lstrip("."))
        kwargs[f.name] = value
    return cls(**kwargs)


@dataclass
class EndpointSettings:
    url: str = "https://api.openai.com/v1/chat/completions"
    api_key_env: str = "CMAUG_API_KEY"
    mock: bool = False
    mock_malformed_rate: float = 0.0


@dataclass
class GenerationSettings:
    model_id: str = "gpt-4-1106-preview"
    shots: int = 15
    batch_size: int = 50
    temperature: float = 0.6
    target: int = 50_000
    lang_pair: str = "es-en"
    parallelism: int = 4
    max_retries: int = 5


@dataclass
class PlanSettings:
    synth_sizes: list[int] = field(default_factory=lambda: [50_000, 25_000, 15_000, 5_000, 0])
    lrs: list[float] = field(default_factory=lambda: [1e-6, 2e-6, 2e-6, 4e-6, 2e-6])
    epochs: int = 3
    natural_n: int = 12_194
    clamp: bool = False
    model_id: str = "xlm-t"


@dataclass
class HumanevalSettings:
    n_each: int = 50
    annotators: list[str] = field(default_factory=lambda: ["annotator-1", "annotator-2"])
    host: str = "127.0.0.1"
    port: int = 8040


@dataclass
class CostSettings:
    per_hit: int = 10
    annotated_per_hit: int = 8
    price_per_hit: float = 1.00
    price_in_per_m: float = 10.00
    price_out_per_m: float = 30.00


@dataclass
class RunConfig:
    output_dir: str = "runs"
    seed: int = 0
    endpoint: EndpointSettings = field(default_factory=EndpointSettings)
    generation: GenerationSettings = field(default_factory=GenerationSettings)
    plan: PlanSettings = field(default_factory=PlanSettings)
    humaneval: HumanevalSettings = field(default_factory=HumanevalSettings)
    cost: CostSettings = field(default_factory=CostSettings)

    @classmethod
    def load(cls, path: str | Path | None) -> "RunConfig":
        if path is None:
            return cls()
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        if not isinstance(data, dict):
            raise ConfigValidationError("config file must contain a mapping")
        return _from_dict(cls, data, "")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        ).hexdigest()[:16]


_SECTION_TYPES = {
    "EndpointSettings": EndpointSettings,
    "GenerationSettings": GenerationSettings,
    "PlanSettings": PlanSettings,
    "HumanevalSettings": HumanevalSettings,
    "CostSettings": CostSettings,
}


def write_manifest(out_dir: str | Path, command: str, config: RunConfig,
                   extra: dict | None = None) -> Path:
    """Record everything needed to re-run a command bit-identically under mocks."""
    from . import __version__

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "version": __version__,
        "python": platform.python_version(),
    }
    if extra:
        manifest.update(extra)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    return path
