"""Clinical thresholds and pipeline knobs."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ValidationError

CONFIG_ENV = "SPINECURVE_CONFIG"


@dataclass(frozen=True)
class Config:
    gamma_threshold_deg: float = 10.0
    severity_bounds: tuple[float, float] = (20.0, 40.0)
    extremum_window: int = 2
    lumbar_relaxed_window: int = 1
    eps_deg: float = 5.0
    svd_tol: float = 1e-8
    output_format: str = "json"
    svg_emit: bool = False
    # absolute slack on threshold comparisons so that a value meant to be
    # exactly 10.0 but computed as 9.999999999999998 still clears the bar
    compare_atol: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "severity_bounds", tuple(float(b) for b in self.severity_bounds))
        lo, hi = self.severity_bounds
        if self.gamma_threshold_deg <= 0:
            raise ValidationError("gamma_threshold_deg must be positive")
        if not 0 < lo < hi:
            raise ValidationError(f"severity_bounds must satisfy 0 < low < high, got {self.severity_bounds}")
        if self.extremum_window < 1 or self.lumbar_relaxed_window < 1:
            raise ValidationError("extremum windows must be >= 1")
        if self.eps_deg < 0:
            raise ValidationError("eps_deg must be >= 0")
        if not 0 < self.svd_tol < 1:
            raise ValidationError("svd_tol must lie in (0, 1)")
        if self.output_format not in ("json", "csv"):
            raise ValidationError(f"output_format must be json or csv, got {self.output_format!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["severity_bounds"] = list(self.severity_bounds)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Config":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**d)

    def updated(self, **overrides) -> "Config":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


def load_config(path: str | Path | None = None) -> Config:
    """Read a JSON (or YAML) config file; falls back to ``$SPINECURVE_CONFIG``, then defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV) or None
    if path is None:
        return Config()
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() in (".yaml", ".yml"):
        import yaml

        doc = yaml.safe_load(text) or {}
    else:
        doc = json.loads(text)
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: config must be a mapping")
    return Config.from_dict(doc)
