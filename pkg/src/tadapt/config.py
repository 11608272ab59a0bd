"""Metric configuration shared by every kernel, report and CLI invocation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from typing import Any, Mapping

SH_MODES = ("contiguous", "literal-max")
TAS_MODES = ("ratio", "per-term")


class ConfigError(ValueError):
    """A MetricConfig field is out of its admissible range."""


@dataclass(frozen=True)
class MetricConfig:
    """Tunables for TTR, Stability/Drift Horizons and TAS.

    Attributes
    ----------
    delta : float
        Stability tolerance; a row stays stable while ``g(t, t+h) >= delta``.
    epsilon : float
        Per-step slack subtracted from each absolute deviation in the drift
        statistic.
    lambda_ : float
        Drift threshold; the Drift Horizon is the first ``h`` with ``S_h > lambda_``.
    max_horizon : int
        Largest offset ``H`` inspected by SH and DH. Untriggered DH is reported
        as ``H + 1``.
    tas_window : int
        Number of future steps ``n`` averaged by TAS.
    sh_mode : {"contiguous", "literal-max"}
        ``contiguous`` ends the horizon at the first defined cell below
        ``delta``; ``literal-max`` takes the largest qualifying offset.
    clip_ttr : bool
        Clip transfer ratios and TAS to at most 1.
    tas_mode : {"ratio", "per-term"}
        ``ratio`` divides the averaged OOD accuracy by the averaged oracle
        accuracy; ``per-term`` averages the per-offset transfer ratios.
    """

    delta: float = 0.6
    epsilon: float = 0.02
    lambda_: float = 0.15
    max_horizon: int = 6
    tas_window: int = 6
    sh_mode: str = "contiguous"
    clip_ttr: bool = True
    tas_mode: str = "ratio"

    def __post_init__(self) -> None:
        if not 0.0 <= self.delta <= 1.0:
            raise ConfigError(f"delta must lie in [0,1], got {self.delta!r}")
        if not self.epsilon >= 0.0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon!r}")
        if not self.lambda_ > 0.0:
            raise ConfigError(f"lambda must be > 0, got {self.lambda_!r}")
        for name in ("max_horizon", "tas_window"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {value!r}")
        if self.sh_mode not in SH_MODES:
            raise ConfigError(f"sh_mode must be one of {SH_MODES}, got {self.sh_mode!r}")
        if self.tas_mode not in TAS_MODES:
            raise ConfigError(f"tas_mode must be one of {TAS_MODES}, got {self.tas_mode!r}")
        if not isinstance(self.clip_ttr, bool):
            raise ConfigError(f"clip_ttr must be a boolean, got {self.clip_ttr!r}")

    def to_dict(self) -> dict[str, Any]:
        return {_public(k): v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> MetricConfig:
        known = {_public(f.name): f.name for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        kwargs = {known[k]: v for k, v in data.items()}
        for name in ("delta", "epsilon", "lambda_"):
            if name in kwargs:
                value = kwargs[name]
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ConfigError(f"{_public(name)} must be a number, got {value!r}")
                kwargs[name] = float(value)
        return cls(**kwargs)

    @classmethod
    def from_json(cls, text: str | bytes) -> MetricConfig:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config JSON must be an object")
        return cls.from_dict(data)


def _public(name: str) -> str:
    return name.rstrip("_")


def config_fields() -> list[tuple[str, Any]]:
    """``(public_name, default)`` for every MetricConfig field, in declaration order."""
    return [(_public(f.name), f.default) for f in fields(MetricConfig)]
