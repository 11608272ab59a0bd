"""Temporal transfer ratio, stability/drift horizons and adaptation score.

All kernels are pure functions of an immutable :class:`AccuracyMatrix` (or
the :class:`TtrMatrix` derived from it). Internally each metric is computed
for a batch of train times at once, looping over the offset ``h`` and
vectorising over rows; the single-row public functions call the same batch
code so both paths produce bit-identical results.

Absent cells are never imputed: SH skips them, the drift statistic carries
the previous value forward, and TAS drops the offset from its average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import MetricConfig
from .matrix import AccuracyMatrix, TimeAxis
from .result import MetricReport, TrainTimeRecord


class PreconditionError(ValueError):
    """A metric is undefined for the requested train time."""


class NotEvaluableError(PreconditionError):
    """No train time of a matrix satisfies the metric preconditions."""


@dataclass(frozen=True, eq=False)
class TtrMatrix:
    """Clipped (or raw) transfer ratios ``g(t, tau) = A(t, tau) / A(tau, tau)``.

    ``values`` is ``NaN`` wherever ``g`` is undefined: either the accuracy
    cell is absent or the oracle ``A(tau, tau)`` is absent or zero.
    ``oracle_defined[tau]`` tells the two cases apart.
    """

    axis: TimeAxis
    values: np.ndarray
    present: np.ndarray
    oracle_defined: np.ndarray
    model_name: str = "model"

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.values)

    @property
    def undefined_oracle(self) -> np.ndarray:
        """Cells whose accuracy is present but whose oracle is absent or zero."""
        return self.present & ~self.oracle_defined[None, :]

    def get(self, t: int, tau: int) -> float | None:
        value = self.values[self.axis.check_index(t), self.axis.check_index(tau)]
        return None if math.isnan(value) else float(value)


@dataclass(frozen=True)
class HorizonResult:
    """SH or DH per train index, with sentinel/truncation flags."""

    per_train_time: dict[int, int]
    truncated: dict[int, bool]

    @property
    def mean(self) -> float:
        if not self.per_train_time:
            return math.nan
        return math.fsum(self.per_train_time.values()) / len(self.per_train_time)


@dataclass(frozen=True)
class TasResult:
    """``(ood_avg, id_avg, tas)`` per train index."""

    per_train_time: dict[int, tuple[float, float, float]]

    @property
    def mean_tas(self) -> float:
        scores = [v[2] for v in self.per_train_time.values()]
        return math.fsum(scores) / len(scores) if scores else math.nan

    @property
    def min_tas(self) -> float:
        return min((v[2] for v in self.per_train_time.values()), default=math.nan)


# -- TTR ---------------------------------------------------------------------


def compute_ttr(m: AccuracyMatrix, cfg: MetricConfig | None = None) -> TtrMatrix:
    cfg = cfg or MetricConfig()
    A = m.values
    diag = m.diagonal
    oracle_ok = ~np.isnan(diag) & (diag > 0.0)
    present = m.present
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratio = A / diag[None, :]
    g = np.where(present & oracle_ok[None, :], ratio, np.nan)
    if cfg.clip_ttr:
        g = np.minimum(g, 1.0)
    g.flags.writeable = False
    present.flags.writeable = False
    oracle_ok.flags.writeable = False
    return TtrMatrix(m.axis, g, present, oracle_ok, m.model_name)


# -- batch internals ---------------------------------------------------------


def _window(values: np.ndarray, rows: np.ndarray, start: int, stop: int) -> np.ndarray:
    """``values[t, t+h]`` for each row and ``h`` in ``[start, stop]``; NaN past the axis."""
    n = values.shape[0]
    offsets = np.arange(start, stop + 1)
    cols = rows[:, None] + offsets[None, :]
    inside = cols < n
    out = np.full(cols.shape, np.nan)
    rr = np.broadcast_to(rows[:, None], cols.shape)
    out[inside] = values[rr[inside], cols[inside]]
    return out


def _oracle_window(diag: np.ndarray, rows: np.ndarray, start: int, stop: int) -> np.ndarray:
    n = diag.shape[0]
    cols = rows[:, None] + np.arange(start, stop + 1)[None, :]
    out = np.full(cols.shape, np.nan)
    inside = cols < n
    out[inside] = diag[cols[inside]]
    return out


def _sh_batch(g: np.ndarray, rows: np.ndarray, cfg: MetricConfig) -> tuple[np.ndarray, np.ndarray]:
    G = _window(g, rows, 0, cfg.max_horizon)
    defined = ~np.isnan(G)
    idx = np.arange(G.shape[1])
    last_defined = np.where(defined, idx, -1).max(axis=1)
    if cfg.sh_mode == "contiguous":
        below = defined & (G < cfg.delta)
        first_below = np.where(below.any(axis=1), below.argmax(axis=1), G.shape[1])
        ok = defined & (idx[None, :] < first_below[:, None])
    else:
        ok = defined & (G >= cfg.delta)
    value = np.where(ok, idx, -1).max(axis=1)
    return value, value == last_defined


def _drift_batch(A: np.ndarray, rows: np.ndarray, cfg: MetricConfig) -> np.ndarray:
    """``S_1..S_H`` per row; NaN where ``t + h`` lies past the axis."""
    H = cfg.max_horizon
    base = A[rows, rows]
    W = _window(A, rows, 1, H)
    n = A.shape[0]
    S = np.zeros(len(rows))
    out = np.empty((len(rows), H))
    for j in range(H):
        x = W[:, j]
        step = np.maximum(0.0, S + (np.abs(x - base) - cfg.epsilon))
        S = np.where(np.isnan(x), S, step)
        out[:, j] = S
    out[rows[:, None] + np.arange(1, H + 1)[None, :] >= n] = np.nan
    return out


def _dh_from_stat(S: np.ndarray, cfg: MetricConfig) -> tuple[np.ndarray, np.ndarray]:
    over = S > cfg.lambda_
    hit = over.any(axis=1)
    value = np.where(hit, over.argmax(axis=1) + 1, cfg.max_horizon + 1)
    return value, ~hit


def _tas_batch(A: np.ndarray, rows: np.ndarray, cfg: MetricConfig):
    """Return ``(ood_avg, id_avg, tas, count)`` arrays; NaN where undefined."""
    n_win = cfg.tas_window
    O = _window(A, rows, 1, n_win)
    I = _oracle_window(np.diagonal(A), rows, 1, n_win)
    paired = ~np.isnan(O) & ~np.isnan(I)
    if cfg.tas_mode == "per-term":
        paired &= I > 0.0
    count = paired.sum(axis=1)
    ood_sum = np.zeros(len(rows))
    id_sum = np.zeros(len(rows))
    term_sum = np.zeros(len(rows))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for k in range(n_win):
            use = paired[:, k]
            ood_sum = np.where(use, ood_sum + O[:, k], ood_sum)
            id_sum = np.where(use, id_sum + I[:, k], id_sum)
            if cfg.tas_mode == "per-term":
                r = O[:, k] / I[:, k]
                if cfg.clip_ttr:
                    r = np.minimum(r, 1.0)
                term_sum = np.where(use, term_sum + r, term_sum)
        ood_avg = np.where(count > 0, ood_sum / count, np.nan)
        id_avg = np.where(count > 0, id_sum / count, np.nan)
        if cfg.tas_mode == "ratio":
            tas = np.where(id_avg > 0.0, ood_avg / id_avg, np.nan)
            if cfg.clip_ttr:
                tas = np.minimum(tas, 1.0)
        else:
            tas = np.where((count > 0) & (id_avg > 0.0), term_sum / count, np.nan)
    return ood_avg, id_avg, tas, count


def _row(m_size: int, t: int) -> np.ndarray:
    if not 0 <= t < m_size:
        raise IndexError(f"time index {t} out of range for axis of size {m_size}")
    return np.array([t])


# -- single-row public kernels -----------------------------------------------


def stability_horizon(ttr: TtrMatrix, t: int, cfg: MetricConfig | None = None) -> tuple[int, bool]:
    """Stability Horizon of train time ``t`` as ``(steps, truncated)``.

    ``truncated`` is set when the horizon reaches the last defined offset in
    ``[0, H]``, i.e. the data ran out before the row was seen to fall below
    ``delta``.
    """
    cfg = cfg or MetricConfig()
    rows = _row(ttr.values.shape[0], t)
    if math.isnan(ttr.values[t, t]):
        raise PreconditionError(f"train time {ttr.axis.labels[t]!r}: oracle A(t,t) missing or zero")
    value, truncated = _sh_batch(ttr.values, rows, cfg)
    return int(value[0]), bool(truncated[0])


def drift_statistic(m: AccuracyMatrix, t: int, cfg: MetricConfig | None = None) -> list[float]:
    """Cumulative drift statistic ``[S_1, ..., S_h]`` for the offsets inside the axis.

    ``S_h = max(0, S_{h-1} + |A(t,t+h) - A(t,t)| - epsilon)`` with ``S_0 = 0``;
    an absent ``A(t,t+h)`` leaves ``S_h = S_{h-1}``.
    """
    cfg = cfg or MetricConfig()
    rows = _row(m.size, t)
    if math.isnan(m.values[t, t]):
        raise PreconditionError(f"train time {m.labels[t]!r}: A(t,t) is absent")
    S = _drift_batch(m.values, rows, cfg)[0]
    return [float(s) for s in S[~np.isnan(S)]]


def drift_horizon(m: AccuracyMatrix, t: int, cfg: MetricConfig | None = None) -> tuple[int, bool]:
    """First ``h`` in ``[1, H]`` with ``S_h > lambda``; ``(H + 1, True)`` if none."""
    cfg = cfg or MetricConfig()
    rows = _row(m.size, t)
    if math.isnan(m.values[t, t]):
        raise PreconditionError(f"train time {m.labels[t]!r}: A(t,t) is absent")
    value, truncated = _dh_from_stat(_drift_batch(m.values, rows, cfg), cfg)
    return int(value[0]), bool(truncated[0])


def temporal_adaptation_score(
    m: AccuracyMatrix, t: int, cfg: MetricConfig | None = None
) -> tuple[float, float, float]:
    """``(ood_avg, id_avg, tas)`` for train time ``t``.

    Both averages run over the offsets ``k`` in ``[1, n]`` where ``A(t,t+k)``
    and ``A(t+k,t+k)`` are both present, so numerator and denominator always
    cover the same periods.
    """
    cfg = cfg or MetricConfig()
    rows = _row(m.size, t)
    ood, ident, tas, count = _tas_batch(m.values, rows, cfg)
    if count[0] == 0:
        raise PreconditionError(
            f"train time {m.labels[t]!r}: no offset in [1, {cfg.tas_window}] has both A(t,t+k) and A(t+k,t+k)"
        )
    if not ident[0] > 0.0:
        raise PreconditionError(f"train time {m.labels[t]!r}: average oracle accuracy is zero")
    return float(ood[0]), float(ident[0]), float(tas[0])


# -- whole-matrix kernels ----------------------------------------------------


def _all_rows(size: int, rows: Sequence[int] | None) -> np.ndarray:
    return np.arange(size) if rows is None else np.asarray(rows, dtype=np.intp)


def stability_horizons(ttr: TtrMatrix, cfg: MetricConfig | None = None, rows=None) -> HorizonResult:
    """SH for every train time whose ``g(t,t)`` is defined."""
    cfg = cfg or MetricConfig()
    rows = _all_rows(ttr.values.shape[0], rows)
    rows = rows[~np.isnan(ttr.values[rows, rows])]
    value, truncated = _sh_batch(ttr.values, rows, cfg)
    return HorizonResult(
        {int(t): int(v) for t, v in zip(rows, value)},
        {int(t): bool(f) for t, f in zip(rows, truncated)},
    )


def drift_horizons(m: AccuracyMatrix, cfg: MetricConfig | None = None, rows=None) -> HorizonResult:
    """DH for every train time with ``A(t,t)`` present."""
    cfg = cfg or MetricConfig()
    rows = _all_rows(m.size, rows)
    rows = rows[~np.isnan(m.values[rows, rows])]
    value, truncated = _dh_from_stat(_drift_batch(m.values, rows, cfg), cfg)
    return HorizonResult(
        {int(t): int(v) for t, v in zip(rows, value)},
        {int(t): bool(f) for t, f in zip(rows, truncated)},
    )


def adaptation_scores(m: AccuracyMatrix, cfg: MetricConfig | None = None, rows=None) -> TasResult:
    """TAS for every train time meeting its preconditions."""
    cfg = cfg or MetricConfig()
    rows = _all_rows(m.size, rows)
    ood, ident, tas, count = _tas_batch(m.values, rows, cfg)
    ok = (count > 0) & (ident > 0.0)
    return TasResult(
        {int(t): (float(o), float(i), float(s)) for t, o, i, s, k in zip(rows, ood, ident, tas, ok) if k}
    )


def evaluate_model(m: AccuracyMatrix, cfg: MetricConfig | None = None) -> MetricReport:
    """Run SH, DH and TAS on every train time and assemble a :class:`MetricReport`.

    A train time enters the report only if all three metrics are defined for
    it; every other train time is listed in ``skipped`` with the reason.

    Raises
    ------
    NotEvaluableError
        If no train time is evaluable.
    """
    cfg = cfg or MetricConfig()
    A = m.values
    n = m.size
    rows = np.arange(n)
    ttr = compute_ttr(m, cfg)

    diag = m.diagonal
    diag_present = ~np.isnan(diag)
    oracle_ok = diag_present & (diag > 0.0)
    ood, ident, tas, count = _tas_batch(A, rows, cfg)
    tas_ok = (count > 0) & (ident > 0.0)

    skipped: list[tuple[str, str]] = []
    good = []
    for t in range(n):
        label = m.labels[t]
        if not diag_present[t]:
            skipped.append((label, "A(t,t) absent"))
        elif not oracle_ok[t]:
            skipped.append((label, "A(t,t) is zero, so g(t,t) is undefined"))
        elif count[t] == 0:
            skipped.append((label, f"no paired future cell within tas_window={cfg.tas_window}"))
        elif not tas_ok[t]:
            skipped.append((label, "average oracle accuracy over the TAS window is zero"))
        else:
            good.append(t)
    if not good:
        raise NotEvaluableError(f"{m.model_name}: no train time is evaluable")

    good_rows = np.array(good)
    sh, sh_trunc = _sh_batch(ttr.values, good_rows, cfg)
    dh, dh_trunc = _dh_from_stat(_drift_batch(A, good_rows, cfg), cfg)

    records = [
        TrainTimeRecord(
            label=m.labels[t],
            index=int(t),
            sh=int(sh[i]),
            sh_truncated=bool(sh_trunc[i]),
            dh=int(dh[i]),
            dh_truncated=bool(dh_trunc[i]),
            tas=float(tas[t]),
            ood_avg=float(ood[t]),
            id_avg=float(ident[t]),
            id_acc=float(diag[t]),
        )
        for i, t in enumerate(good)
    ]

    id_cells = diag[diag_present]
    forward = np.triu(m.present, k=1)
    ood_cells = A[forward]
    return MetricReport(
        model_name=m.model_name,
        config=cfg,
        records=tuple(records),
        skipped=tuple(skipped),
        id_avg=math.fsum(id_cells.tolist()) / id_cells.size if id_cells.size else None,
        ood_avg=math.fsum(ood_cells.tolist()) / ood_cells.size if ood_cells.size else None,
        ood_min=float(ood_cells.min()) if ood_cells.size else None,
    )
