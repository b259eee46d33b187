"""Run configuration shared by the pipelines and the CLI."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from .errors import ConfigError

__all__ = ["RunConfig", "load_config"]


@dataclass
class RunConfig:
    """Settings for SAFE evaluation and Shapley runs.

    ``features=None`` means every column that is not a target.
    ``whiten_on`` selects whether the multivariate whitening is fitted on the
    training fold (``"train"``) or once on all rows (``"full"``).
    """

    targets: list[str] = field(default_factory=list)
    features: list[str] | None = None
    models: list[str] = field(default_factory=lambda: ["ols", "mlp"])
    p: float = 1.0
    folds: int = 5
    seed: int = 0
    perturb_scale: float = 0.5
    scheme: str = "zca-cor"
    multivariate: bool = False
    whiten_on: str = "train"
    shapley_m: int = 50
    hidden: int | None = None
    max_iter: int = 1000
    learning_rate: float = 0.01
    output_dir: str | None = None

    def validate(self, columns: list[str] | None = None) -> None:
        if not self.targets:
            raise ConfigError("at least one target column is required")
        if self.folds < 2:
            raise ConfigError(f"folds must be at least 2, got {self.folds}")
        if not self.p > 0:
            raise ConfigError(f"p must be positive, got {self.p}")
        if self.shapley_m < 1:
            raise ConfigError(f"shapley_m must be at least 1, got {self.shapley_m}")
        if not self.perturb_scale > 0:
            raise ConfigError("perturb_scale must be positive")
        if self.scheme not in ("zca-cor", "cholesky"):
            raise ConfigError(f"unknown whitening scheme {self.scheme!r}")
        if self.whiten_on not in ("train", "full"):
            raise ConfigError("whiten_on must be 'train' or 'full'")
        for m in self.models:
            if m not in ("ols", "mlp"):
                raise ConfigError(f"unknown model kind {m!r}")
        if self.multivariate and len(self.targets) < 1:
            raise ConfigError("multivariate runs need target columns")
        if columns is not None:
            missing = [c for c in [*self.targets, *(self.features or [])] if c not in columns]
            if missing:
                raise ConfigError(f"configured columns not in the dataset: {missing}")
            overlap = set(self.targets) & set(self.features or [])
            if overlap:
                raise ConfigError(f"columns used as both target and feature: {sorted(overlap)}")

    def feature_list(self, columns: list[str]) -> list[str]:
        if self.features is not None:
            return list(self.features)
        return [c for c in columns if c not in self.targets]

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        return cls(**d)

    def updated(self, **overrides: Any) -> "RunConfig":
        d = self.to_dict()
        d.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig.from_dict(d)


def load_config(path: str | Path) -> RunConfig:
    """Read a JSON configuration file whose keys mirror :class:`RunConfig`."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return RunConfig.from_dict(data)
