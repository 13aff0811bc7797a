"""Pipeline configuration and its YAML round trip."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from typing import Any, Optional

import yaml

from .dsp import FrequencyBand
from .errors import ConfigError
from .estimator import EstimatorConfig
from .tracker import KcfParams


@dataclass
class PipelineConfig:
    fps: Optional[float] = None  # overrides the sequence header when set
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    kcf: KcfParams = field(default_factory=KcfParams)
    segment_seed: int = 0
    strict_borders: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "fps": self.fps,
            "estimator": self.estimator.to_dict(),
            "kcf": asdict(self.kcf),
            "segment_seed": self.segment_seed,
            "strict_borders": self.strict_borders,
        }

    @classmethod
    def from_dict(cls, d: Optional[dict]) -> "PipelineConfig":
        d = dict(d or {})
        try:
            est = dict(d.pop("estimator", None) or {})
            est.pop("filter_family", None)
            est.pop("window_function", None)
            for key in ("hr_band", "rr_band"):
                if key in est:
                    lo, hi = est[key]
                    est[key] = FrequencyBand(float(lo), float(hi))
            known = {f.name for f in fields(EstimatorConfig)}
            unknown = set(est) - known
            if unknown:
                raise ConfigError(f"unknown estimator keys: {sorted(unknown)}")
            kcf = KcfParams(**(d.pop("kcf", None) or {}))
            cfg = cls(estimator=EstimatorConfig(**est), kcf=kcf, **d)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid configuration: {exc}") from exc
        if cfg.fps is not None and cfg.fps <= 0:
            raise ConfigError("fps override must be positive")
        return cfg

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        with open(path) as fh:
            try:
                data = yaml.safe_load(fh)
            except yaml.YAMLError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        if data is not None and not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a mapping at top level")
        return cls.from_dict(data)

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=True)
