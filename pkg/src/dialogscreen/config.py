"""Pipeline configuration loaded from YAML.

Relative paths resolve against the configuration file's directory. The API
key for the HTTP backend is never read from here, only the name of the
environment variable holding it.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Optional

import yaml

from .errors import DataError
from .ingestion import parse_ratio

SCORING_BACKENDS = ("lexicon", "http")
EXPLAIN_BACKENDS = ("lexicon-stub", "http")


def default_grid(family: str) -> Path:
    return Path(str(resources.files("dialogscreen.data").joinpath("grids", f"{family}.yaml")))


@dataclass
class PipelineConfig:
    output: Path
    corpus: Optional[Path] = None
    labels: Optional[Path] = None
    cache: Optional[Path] = None
    backend: str = "lexicon"
    endpoint: Optional[str] = None
    model: str = "gpt-4o-mini"
    api_key_env: str = "OPENAI_API_KEY"
    explain_backend: str = "lexicon-stub"
    scenario: int = 1
    decimate: Optional[str] = None
    min_human: int = 6
    window: int = 30
    coldstart_fraction: float = 0.10
    test_fraction: float = 0.20
    folds: int = 10
    seed: int = 0
    grids: dict = field(default_factory=dict)
    parallelism: int = 4
    dashboards: bool = True

    def __post_init__(self):
        for name in ("corpus", "labels", "output", "cache"):
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, Path(value))
        if self.cache is None:
            self.cache = self.output / "cache"
        self.scenario = int(self.scenario)
        if self.scenario not in (1, 2):
            raise DataError(f"scenario must be 1 or 2, got {self.scenario}")
        if self.decimate is not None:
            parse_ratio(str(self.decimate))
        if self.backend not in SCORING_BACKENDS:
            raise DataError(f"unknown scoring backend {self.backend!r}")
        if self.explain_backend not in EXPLAIN_BACKENDS:
            raise DataError(f"unknown explanation backend {self.explain_backend!r}")
        if "http" in (self.backend, self.explain_backend) and not self.endpoint:
            raise DataError("the http backend needs an endpoint")
        if self.window < 1 or self.folds < 2 or self.parallelism < 1:
            raise DataError("window >= 1, folds >= 2 and parallelism >= 1 are required")
        unknown = set(self.grids) - {"nb", "dt", "rf"}
        if unknown:
            raise DataError(f"grids for unknown model families: {sorted(unknown)}")
        self.grids = {f: Path(self.grids[f]) if self.grids.get(f) else default_grid(f) for f in ("nb", "dt", "rf")}

    @property
    def decimation(self) -> Optional[tuple]:
        """``(keep, of)`` to apply after filtering; scenario 2 defaults to 2/3."""
        if self.decimate is not None:
            return parse_ratio(str(self.decimate))
        return (2, 3) if self.scenario == 2 else None

    def check_paths(self) -> None:
        for name in ("corpus", "labels", *(f"grid:{f}" for f in self.grids)):
            path = self.grids[name[5:]] if name.startswith("grid:") else getattr(self, name)
            if path is None:
                raise DataError(f"no {name} file configured")
            if not path.is_file():
                raise DataError(f"{name} file not found: {path}")

    def fingerprint(self) -> dict:
        """Settings that determine the run's artifacts. Output and cache
        locations are excluded, inputs are identified by content hash."""
        data = {
            f.name: getattr(self, f.name)
            for f in fields(self)
            if f.name not in ("corpus", "labels", "output", "cache", "grids", "parallelism")
        }
        data["inputs"] = {"corpus": _sha256(self.corpus), "labels": _sha256(self.labels)}
        data["grids"] = {f: yaml.safe_load(p.read_text(encoding="utf-8")) for f, p in self.grids.items()}
        return data

    def config_hash(self) -> str:
        canonical = json.dumps(self.fingerprint(), sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def to_dict(self) -> dict:
        data = asdict(self)
        for k in ("corpus", "labels", "output", "cache"):
            data[k] = str(data[k])
        data["grids"] = {f: str(p) for f, p in self.grids.items()}
        return data

    def with_overrides(self, **changes) -> "PipelineConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        if "output" in changes and "cache" not in changes:
            changes["cache"] = Path(changes["output"]) / "cache"
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update(changes)
        return PipelineConfig(**data)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise DataError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise DataError(f"config {path} must be a mapping")
    if "api_key" in data:
        raise DataError("API keys are read from the environment; set api_key_env instead")
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(data) - known
    if unknown:
        raise DataError(f"unknown config keys: {sorted(unknown)}")
    if "output" not in data:
        raise DataError("config is missing 'output'")
    base = path.parent
    for key in ("corpus", "labels", "output", "cache"):
        if data.get(key) is not None:
            data[key] = base / data[key]
    data["grids"] = {f: base / p for f, p in (data.get("grids") or {}).items()}
    return PipelineConfig(**data)
