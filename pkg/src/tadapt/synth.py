"""Synthetic accuracy matrices with controlled difficulty and adaptation lag.

Construction (noise-free)::

    A(t, t)       = clip(base_acc * (1 - difficulty_rate) ** t, 0, 1)
    A(t, t + h)   = A(t + h, t + h) * max(floor_g, (1 - lag_rate) ** |h|)

so the transfer ratio of every present cell is the lag target
``max(floor_g, (1 - lag_rate) ** |h|)`` and the diagonal alone carries the
intrinsic difficulty. The recovered ratio
``A(t, tau) / A(tau, tau)`` matches the target to within one ulp; binary64
division cannot always return the target exactly.

Noise: when ``noise_amp > 0`` a ``numpy.random.default_rng(seed)`` generator
(PCG64 seeded through SeedSequence) draws one
``uniform(-noise_amp, noise_amp, size=(periods, periods))`` array; cell
``(t, tau)`` receives ``noise[t, tau]`` regardless of the presence pattern,
and the result is clipped to [0, 1]. Scenarios with ``noise_amp == 0`` draw
nothing.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, replace
from functools import lru_cache
from typing import Any, Mapping

import numpy as np
from scipy.optimize import brentq

from .config import MetricConfig
from .kernels import evaluate_model
from .matrix import AccuracyMatrix
from .report import mean_id_ood_gap
from .result import MetricReport

_BANDED = re.compile(r"^banded\((\d+)\)$")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    periods: int = 10
    base_acc: float = 0.9
    difficulty_rate: float = 0.0
    lag_rate: float = 0.0
    floor_g: float = 0.3
    noise_amp: float = 0.0
    seed: int = 0
    presence: str = "upper-triangle"
    model_name: str = "synthetic"

    def __post_init__(self) -> None:
        if isinstance(self.periods, bool) or not isinstance(self.periods, int) or self.periods < 2:
            raise ScenarioError(f"periods must be an integer >= 2, got {self.periods!r}")
        if not 0.0 < self.base_acc <= 1.0:
            raise ScenarioError(f"base_acc must lie in (0,1], got {self.base_acc!r}")
        for name in ("difficulty_rate", "lag_rate", "floor_g"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ScenarioError(f"{name} must lie in [0,1], got {value!r}")
        if not self.noise_amp >= 0.0:
            raise ScenarioError(f"noise_amp must be >= 0, got {self.noise_amp!r}")
        self.band  # validates presence

    @property
    def band(self) -> int | None:
        """Maximum forward offset kept, ``None`` for ``full``."""
        if self.presence == "full":
            return None
        if self.presence == "upper-triangle":
            return self.periods - 1
        match = _BANDED.match(self.presence)
        if match is None:
            raise ScenarioError(
                f"presence must be 'full', 'upper-triangle' or 'banded(k)', got {self.presence!r}"
            )
        return int(match.group(1))

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ScenarioSpec:
        names = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - names)
        if unknown:
            raise ScenarioError(f"unknown scenario key(s): {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str | bytes) -> ScenarioSpec:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ScenarioError("scenario JSON must be an object")
        return cls.from_dict(data)


def lag_target(spec: ScenarioSpec, h) -> np.ndarray:
    return np.maximum(spec.floor_g, (1.0 - spec.lag_rate) ** np.abs(h))


def generate(spec: ScenarioSpec) -> AccuracyMatrix:
    """Build the accuracy matrix described by ``spec`` (deterministic per seed)."""
    P = spec.periods
    t = np.arange(P)
    diag = np.clip(spec.base_acc * (1.0 - spec.difficulty_rate) ** t, 0.0, 1.0)
    offset = t[None, :] - t[:, None]
    A = diag[None, :] * lag_target(spec, offset)
    if spec.noise_amp > 0.0:
        rng = np.random.default_rng(spec.seed)
        A = np.clip(A + rng.uniform(-spec.noise_amp, spec.noise_amp, size=(P, P)), 0.0, 1.0)
    band = spec.band
    if band is not None:
        A[(offset < 0) | (offset > band)] = np.nan
    labels = [str(i) for i in range(P)]
    return AccuracyMatrix(labels, A, spec.model_name)


# -- canonical suite ---------------------------------------------------------


@dataclass(frozen=True)
class Signature:
    """Expected qualitative behaviour of a scenario's metrics.

    ``tas`` is ``"one"`` (TAS == 1 for every t) or ``"below-one"`` (every
    TAS < 1); ``id_trend`` is ``"flat"`` or ``"decaying"``. Horizon flags of
    ``None`` are not checked.
    """

    tas: str
    id_trend: str
    sh_all_truncated: bool | None = None
    dh_all_truncated: bool | None = None
    note: str = ""


@dataclass(frozen=True)
class Scenario:
    name: str
    spec: ScenarioSpec
    signature: Signature


def check_signature(report: MetricReport, signature: Signature) -> list[tuple[str, bool, str]]:
    """Return ``(check, passed, detail)`` for every expectation in ``signature``."""
    tas = [r.tas for r in report.records]
    ids = [r.id_acc for r in report.records]
    checks: list[tuple[str, bool, str]] = []
    if signature.tas == "one":
        checks.append(("tas == 1 for all t", all(v == 1.0 for v in tas), f"min TAS {min(tas):.6f}"))
    else:
        checks.append(("tas < 1 for all t", all(v < 1.0 for v in tas), f"max TAS {max(tas):.6f}"))
    if signature.id_trend == "flat":
        checks.append(("ID flat", max(ids) == min(ids), f"ID range [{min(ids):.4f}, {max(ids):.4f}]"))
    else:
        ok = all(b < a for a, b in zip(ids, ids[1:]))
        checks.append(("ID strictly decaying", ok, f"ID {ids[0]:.4f} -> {ids[-1]:.4f}"))
    if signature.sh_all_truncated is not None:
        ok = all(r.sh_truncated for r in report.records) == signature.sh_all_truncated
        checks.append((f"SH all truncated is {signature.sh_all_truncated}", ok, f"SH mean {report.sh_mean:.2f}"))
    if signature.dh_all_truncated is not None:
        ok = all(r.dh_truncated for r in report.records) == signature.dh_all_truncated
        checks.append((f"DH all truncated is {signature.dh_all_truncated}", ok, f"DH mean {report.dh_mean:.2f}"))
    return checks


def match_lag_rate(
    target: ScenarioSpec, lag_template: ScenarioSpec, cfg: MetricConfig | None = None
) -> float:
    """Lag rate giving ``lag_template`` the same mean ID-OOD gap as ``target``."""
    cfg = cfg or MetricConfig()
    goal = mean_id_ood_gap(evaluate_model(generate(target), cfg))

    def excess(rate: float) -> float:
        spec = replace(lag_template, lag_rate=rate)
        return mean_id_ood_gap(evaluate_model(generate(spec), cfg)) - goal

    return float(brentq(excess, 0.0, 1.0 - lag_template.floor_g, xtol=1e-15, rtol=4 * np.finfo(float).eps))


@lru_cache(maxsize=None)
def _suite() -> tuple[Scenario, ...]:
    pure_difficulty = ScenarioSpec(periods=10, base_acc=0.95, difficulty_rate=0.15, model_name="pure-difficulty")
    lag_template = ScenarioSpec(periods=10, base_acc=0.8, model_name="matched-lag")
    matched = replace(lag_template, lag_rate=match_lag_rate(pure_difficulty, lag_template))
    return (
        Scenario(
            "stationary",
            ScenarioSpec(periods=10, base_acc=0.9, model_name="stationary"),
            Signature("one", "flat", sh_all_truncated=True, dh_all_truncated=True, note="no change anywhere"),
        ),
        Scenario(
            "pure-difficulty",
            pure_difficulty,
            Signature("one", "decaying", note="ID and OOD fall together; the gap is intrinsic difficulty"),
        ),
        Scenario(
            "pure-lag",
            ScenarioSpec(periods=10, base_acc=0.9, lag_rate=0.1, model_name="pure-lag"),
            Signature("below-one", "flat", note="flat oracle; the gap is adaptation lag"),
        ),
        Scenario(
            "mixed",
            ScenarioSpec(periods=10, base_acc=0.9, difficulty_rate=0.03, lag_rate=0.08, model_name="mixed"),
            Signature("below-one", "decaying", note="TAS between pure-lag and 1"),
        ),
        Scenario(
            "matched-lag",
            matched,
            Signature("below-one", "flat", note="same mean ID-OOD gap as pure-difficulty, lower TAS"),
        ),
    )


def scenario_suite() -> dict[str, Scenario]:
    """Canonical scenarios keyed by name, each with its expected signature.

    ``pure-difficulty`` and ``matched-lag`` share the same mean ID-OOD gap
    under the default :class:`MetricConfig`; only TAS tells them apart.
    """
    return {s.name: s for s in _suite()}
