"""Per-model metric report: per-train-time records plus aggregates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Any, Mapping, Sequence

from .config import MetricConfig

_AGGREGATE_TOL = 1e-9


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


@dataclass(frozen=True)
class TrainTimeRecord:
    """Metrics for one train time ``t``.

    ``tas``/``ood_avg``/``id_avg`` are ``None`` when the record was loaded
    from bare horizon vectors that carry no TAS information.
    """

    label: str
    index: int
    sh: int
    sh_truncated: bool
    dh: int
    dh_truncated: bool
    tas: float | None = None
    ood_avg: float | None = None
    id_avg: float | None = None
    id_acc: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> TrainTimeRecord:
        return cls(**{f.name: data[f.name] for f in fields(cls) if f.name in data})


@dataclass(frozen=True)
class MetricReport:
    """Metric suite for one model under one :class:`MetricConfig`.

    Horizon and TAS aggregates are derived from ``records`` on construction.
    When a caller passes them explicitly (e.g. when loading a saved report)
    they must agree with the recomputed values.

    Means over DH include the ``H + 1`` sentinel for untriggered rows;
    ``sh_includes_truncated``/``dh_includes_truncated`` flag such means.
    """

    model_name: str
    config: MetricConfig
    records: tuple[TrainTimeRecord, ...]
    skipped: tuple[tuple[str, str], ...] = ()
    id_avg: float | None = None
    ood_avg: float | None = None
    ood_min: float | None = None
    sh_mean: float | None = None
    dh_mean: float | None = None
    tas_mean: float | None = None
    tas_min: float | None = None
    sh_includes_truncated: bool = field(default=False)
    dh_includes_truncated: bool = field(default=False)

    def __post_init__(self) -> None:
        records = tuple(self.records)
        object.__setattr__(self, "records", records)
        object.__setattr__(self, "skipped", tuple((str(a), str(b)) for a, b in self.skipped))
        if not records:
            raise ValueError(f"report for {self.model_name!r} has no records")
        H = self.config.max_horizon
        for r in records:
            if not 0 <= r.sh <= H:
                raise ValueError(f"record {r.label}: SH {r.sh} outside [0, {H}]")
            if not 1 <= r.dh <= H + 1:
                raise ValueError(f"record {r.label}: DH {r.dh} outside [1, {H + 1}]")
            if (r.dh == H + 1) != r.dh_truncated:
                raise ValueError(f"record {r.label}: DH {r.dh} inconsistent with truncated={r.dh_truncated}")
            if self.config.clip_ttr and r.tas is not None and not 0.0 <= r.tas <= 1.0:
                raise ValueError(f"record {r.label}: clipped TAS {r.tas} outside [0,1]")

        derived: dict[str, Any] = {
            "sh_mean": _mean([r.sh for r in records]),
            "dh_mean": _mean([r.dh for r in records]),
            "sh_includes_truncated": any(r.sh_truncated for r in records),
            "dh_includes_truncated": any(r.dh_truncated for r in records),
        }
        tas = [r.tas for r in records]
        if all(v is not None for v in tas):
            derived["tas_mean"] = _mean(tas)
            derived["tas_min"] = min(tas)
        else:
            derived["tas_mean"] = derived["tas_min"] = None

        for name, expected in derived.items():
            given = getattr(self, name)
            if isinstance(expected, bool):
                object.__setattr__(self, name, expected)
                continue
            if given is not None and (expected is None or abs(given - expected) > _AGGREGATE_TOL):
                raise ValueError(
                    f"aggregate {name}={given!r} disagrees with per-t records ({expected!r})"
                )
            object.__setattr__(self, name, expected)

    @property
    def labels(self) -> list[str]:
        return [r.label for r in self.records]

    def to_dict(self) -> dict[str, Any]:
        return {
            "model_name": self.model_name,
            "config": self.config.to_dict(),
            "aggregates": {
                "id_avg": self.id_avg,
                "ood_avg": self.ood_avg,
                "ood_min": self.ood_min,
                "tas_mean": self.tas_mean,
                "tas_min": self.tas_min,
                "sh_mean": self.sh_mean,
                "dh_mean": self.dh_mean,
                "sh_includes_truncated": self.sh_includes_truncated,
                "dh_includes_truncated": self.dh_includes_truncated,
            },
            "records": [r.to_dict() for r in self.records],
            "skipped": [{"label": label, "reason": reason} for label, reason in self.skipped],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> MetricReport:
        agg = dict(data.get("aggregates", {}))
        return cls(
            model_name=data["model_name"],
            config=MetricConfig.from_dict(data["config"]),
            records=tuple(TrainTimeRecord.from_dict(r) for r in data["records"]),
            skipped=tuple((s["label"], s["reason"]) for s in data.get("skipped", [])),
            id_avg=agg.get("id_avg"),
            ood_avg=agg.get("ood_avg"),
            ood_min=agg.get("ood_min"),
            sh_mean=agg.get("sh_mean"),
            dh_mean=agg.get("dh_mean"),
            tas_mean=agg.get("tas_mean"),
            tas_min=agg.get("tas_min"),
        )
