"""Measure configuration shared by evaluation, reports, and the CLI.

The two logarithm bases are deliberately independent knobs: set sizes are
measured in bits (base 2) while divergences and entropies default to nats.
Whatever is configured is echoed verbatim into every report so results are
reproducible from the report alone.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Literal

from .errors import SchemaError

Divergence = Literal["kl", "js"]
LogBase = Literal["2", "e"]

KL_EPSILON_DEFAULT = 1e-12


@dataclass(frozen=True)
class MeasureConfig:
    divergence: Divergence = "kl"
    entropy_log_base: LogBase = "e"
    ns_log_base: LogBase = "2"
    kl_epsilon: float = KL_EPSILON_DEFAULT
    vertex_mode: Literal["exact", "approx"] = "approx"

    def validate(self) -> "MeasureConfig":
        if self.divergence not in ("kl", "js"):
            raise SchemaError(f"unknown divergence {self.divergence!r}")
        if self.entropy_log_base not in ("2", "e"):
            raise SchemaError(f"unknown entropy log base {self.entropy_log_base!r}")
        if self.ns_log_base not in ("2", "e"):
            raise SchemaError(f"unknown non-specificity log base {self.ns_log_base!r}")
        if not (self.kl_epsilon > 0.0):
            raise SchemaError("kl_epsilon must be positive")
        if self.vertex_mode not in ("exact", "approx"):
            raise SchemaError(f"unknown vertex mode {self.vertex_mode!r}")
        return self

    def as_dict(self) -> dict[str, Any]:
        return {
            "divergence": self.divergence,
            "entropy_log_base": self.entropy_log_base,
            "ns_log_base": self.ns_log_base,
            "kl_epsilon": self.kl_epsilon,
            "vertex_mode": self.vertex_mode,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MeasureConfig":
        cfg = cls()
        known = cfg.as_dict().keys()
        for key in data:
            if key not in known:
                raise SchemaError(f"unknown config key {key!r}")
        return replace(cfg, **data).validate()
