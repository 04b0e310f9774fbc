"""Run configuration: every tunable setting in one place, loadable from JSON."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .errors import DataError
from .features import FeatureSettings
from .flow import FlowSettings
from .inference import BPSettings
from .tracker import TrackerSettings
from .training import TrainSettings

SECTIONS = {"flow": FlowSettings, "bp": BPSettings, "features": FeatureSettings, "train": TrainSettings}


@dataclass(frozen=True)
class RunConfig:
    flow: FlowSettings = FlowSettings()
    bp: BPSettings = BPSettings()
    features: FeatureSettings = FeatureSettings()
    train: TrainSettings = TrainSettings()
    paths: dict[str, str] = field(default_factory=dict)
    seed: int = 0

    @property
    def tracker(self) -> TrackerSettings:
        return TrackerSettings(self.flow, self.features, self.bp)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        """Build from nested dicts; unknown sections or keys are errors."""
        if not isinstance(data, dict):
            raise DataError("configuration must be a JSON object")
        unknown = set(data) - set(SECTIONS) - {"paths", "seed"}
        if unknown:
            raise DataError(f"unknown configuration section(s): {', '.join(sorted(unknown))}")
        cfg = cls()
        for name, kind in SECTIONS.items():
            if name in data:
                cfg = replace(cfg, **{name: _section(kind, name, data[name])})
        if "paths" in data:
            paths = data["paths"]
            if not isinstance(paths, dict) or not all(isinstance(v, str) for v in paths.values()):
                raise DataError("'paths' must map names to strings")
            cfg = replace(cfg, paths=dict(paths))
        if "seed" in data:
            if not isinstance(data["seed"], int) or isinstance(data["seed"], bool):
                raise DataError("'seed' must be an integer")
            cfg = replace(cfg, seed=data["seed"])
        return cfg

    def override(self, section: str, **values) -> "RunConfig":
        """Replace the non-``None`` entries of one section (used for CLI flags)."""
        values = {k: v for k, v in values.items() if v is not None}
        if not values:
            return self
        return replace(self, **{section: _build(SECTIONS[section], section,
                                                {**asdict(getattr(self, section)), **values})})


def _build(kind, name, values):
    try:
        return kind(**values)
    except (TypeError, ValueError) as exc:
        raise DataError(f"invalid '{name}' settings: {exc}") from exc


def _section(kind, name, values):
    if not isinstance(values, dict):
        raise DataError(f"section '{name}' must be an object")
    allowed = {f.name for f in fields(kind)}
    extra = set(values) - allowed
    if extra:
        raise DataError(f"unknown key(s) in '{name}': {', '.join(sorted(extra))}")
    return _build(kind, name, {**asdict(kind()), **values})


def load_config(path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from exc
    return RunConfig.from_dict(data)
