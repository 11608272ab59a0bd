"""Comparison tables and plot-ready documents built from metric reports.

Everything here is pure formatting: identical inputs give byte-identical
output. Percentages and horizons are rendered with one decimal.

Heatmap JSON schema::

    {"kind": "ttr" | "accuracy", "model_name": str, "labels": [str],
     "center": float | null,
     "rows": [[{"value": float | null, "tag": str}, ...], ...]}

``tag`` is ``"non-evaluated"`` for absent cells, ``"undefined-oracle"`` for a
present accuracy whose oracle ``A(tau, tau)`` is absent or zero, and otherwise
``"below"``/``"at-center"``/``"above"`` relative to ``center`` (exact
comparison), or ``"value"`` when no center is given.

Timeline JSON schema::

    {"model_name": str, "labels": [str], "id": [float], "ood": [float],
     "tas": [float]}
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Any, Sequence

from .kernels import TtrMatrix
from .matrix import CSV_CORNER, AccuracyMatrix
from .result import MetricReport

COLUMNS = ("ID", "OOD", "OOD-min", "TAS-avg", "TAS-min", "SH-avg", "DH-avg")
DEFAULT_COLUMNS = ("ID", "OOD", "TAS-avg", "TAS-min", "SH-avg", "DH-avg")
_PERCENT = {"ID": "id_avg", "OOD": "ood_avg", "OOD-min": "ood_min", "TAS-avg": "tas_mean", "TAS-min": "tas_min"}
_HORIZON = {"SH-avg": ("sh_mean", "sh_includes_truncated"), "DH-avg": ("dh_mean", "dh_includes_truncated")}
TRUNCATION_NOTE = "* mean includes truncated horizons (DH untriggered rows count as H+1)"


class ReportError(ValueError):
    pass


def to_json(doc: Any) -> str:
    return json.dumps(doc, indent=2) + "\n"


def format_percent(value: float | None) -> str:
    return "n/a" if value is None else f"{100.0 * value:.1f}%"


def format_horizon(value: float | None, unit: str = "steps") -> str:
    return "n/a" if value is None else f"{value:.1f} {unit}"


def mean_id_ood_gap(report: MetricReport) -> float:
    """Mean over train times of ``A(t,t) - mean_k A(t,t+k)`` (TAS window offsets)."""
    gaps = [r.id_acc - r.ood_avg for r in report.records]
    return math.fsum(gaps) / len(gaps)


@dataclass(frozen=True)
class ComparisonTable:
    columns: tuple[str, ...]
    unit: str
    config: dict[str, Any]
    rows: tuple[dict[str, Any], ...]

    @property
    def has_truncation(self) -> bool:
        return any(any(row["truncated"].values()) for row in self.rows)

    def to_dict(self) -> dict[str, Any]:
        return {
            "columns": list(self.columns),
            "unit": self.unit,
            "config": self.config,
            "rows": list(self.rows),
            "truncation_note": TRUNCATION_NOTE if self.has_truncation else None,
        }

    def to_json(self) -> str:
        return to_json(self.to_dict())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["Model", *self.columns])
        for row in self.rows:
            writer.writerow([row["model"], *(row["cells"][c] for c in self.columns)])
        return buf.getvalue()

    def to_text(self) -> str:
        header = ["Model", *self.columns]
        body = []
        for row in self.rows:
            cells = [row["model"]]
            for c in self.columns:
                mark = "*" if row["truncated"].get(c) else ""
                cells.append(row["cells"][c] + mark)
            body.append(cells)
        widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]

        def line(cells: Sequence[str]) -> str:
            first = cells[0].ljust(widths[0])
            rest = (c.rjust(w) for c, w in zip(cells[1:], widths[1:]))
            return " | ".join([first, *rest]).rstrip()

        out = [line(header), "-+-".join("-" * w for w in widths)]
        out.extend(line(r) for r in body)
        if self.has_truncation:
            out.append("")
            out.append(TRUNCATION_NOTE)
        return "\n".join(out) + "\n"


def comparison_table(
    reports: Sequence[MetricReport],
    columns: Sequence[str] = DEFAULT_COLUMNS,
    unit: str = "steps",
) -> ComparisonTable:
    """One row per report, in input order.

    Raises
    ------
    ReportError
        If ``reports`` is empty, a column is unknown, or the reports were
        computed under different configurations.
    """
    reports = list(reports)
    if not reports:
        raise ReportError("empty report set")
    unknown = [c for c in columns if c not in COLUMNS]
    if unknown:
        raise ReportError(f"unknown column(s) {unknown}; choose from {list(COLUMNS)}")
    cfg = reports[0].config
    for r in reports[1:]:
        if r.config != cfg:
            raise ReportError(
                f"mixed configs: {reports[0].model_name!r} uses {cfg.to_dict()}, "
                f"{r.model_name!r} uses {r.config.to_dict()}"
            )
    rows = []
    for r in reports:
        cells: dict[str, str] = {}
        values: dict[str, float | None] = {}
        truncated: dict[str, bool] = {}
        for c in columns:
            if c in _PERCENT:
                v = getattr(r, _PERCENT[c])
                cells[c] = format_percent(v)
            else:
                attr, flag = _HORIZON[c]
                v = getattr(r, attr)
                cells[c] = format_horizon(v, unit)
                truncated[c] = bool(getattr(r, flag))
            values[c] = v
        rows.append({"model": r.model_name, "cells": cells, "values": values, "truncated": truncated})
    return ComparisonTable(tuple(columns), unit, cfg.to_dict(), tuple(rows))


# -- heatmap -----------------------------------------------------------------


def _tag(value: float, center: float | None) -> str:
    if center is None:
        return "value"
    if value < center:
        return "below"
    if value > center:
        return "above"
    return "at-center"


def heatmap_data(m, center: float | None = None) -> dict[str, Any]:
    """Grid document for an :class:`AccuracyMatrix` or a TTR matrix.

    No rasterisation happens here; an external plotter can centre a
    diverging colormap on ``center`` (the stability tolerance for TTR grids).
    """
    if isinstance(m, TtrMatrix):
        kind = "ttr"
        undefined = m.undefined_oracle
    elif isinstance(m, AccuracyMatrix):
        kind = "accuracy"
        undefined = None
    else:
        raise TypeError(f"expected AccuracyMatrix or TtrMatrix, got {type(m).__name__}")
    values = m.values.tolist()
    rows = []
    for t, row in enumerate(values):
        out = []
        for tau, v in enumerate(row):
            if math.isnan(v):
                tag = "undefined-oracle" if undefined is not None and undefined[t, tau] else "non-evaluated"
                out.append({"value": None, "tag": tag})
            else:
                out.append({"value": v, "tag": _tag(v, center)})
        rows.append(out)
    return {
        "kind": kind,
        "model_name": m.model_name,
        "labels": list(m.axis.labels),
        "center": center,
        "rows": rows,
    }


def heatmap_csv(doc: dict[str, Any]) -> str:
    """Heatmap values in the matrix CSV layout; undefined cells are empty."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([CSV_CORNER, *doc["labels"]])
    for label, row in zip(doc["labels"], doc["rows"]):
        writer.writerow([label, *("" if c["value"] is None else repr(c["value"]) for c in row)])
    return buf.getvalue()


# -- timeline ----------------------------------------------------------------


def timeline_series(report: MetricReport, m: AccuracyMatrix) -> dict[str, Any]:
    """Per-train-time ID accuracy, forward OOD average and TAS, aligned on the axis."""
    if report.model_name != m.model_name:
        raise ReportError(f"report is for {report.model_name!r} but matrix is {m.model_name!r}")
    diag = m.diagonal
    for r in report.records:
        if not (0 <= r.index < m.size and m.labels[r.index] == r.label):
            raise ReportError(f"report record {r.label!r} does not exist on the matrix axis")
        if r.id_acc is not None and r.id_acc != diag[r.index]:
            raise ReportError(f"report record {r.label!r}: A(t,t) differs from the matrix")
        if r.tas is None:
            raise ReportError(f"report record {r.label!r} carries no TAS")
    return {
        "model_name": report.model_name,
        "labels": [r.label for r in report.records],
        "id": [float(diag[r.index]) for r in report.records],
        "ood": [r.ood_avg for r in report.records],
        "tas": [r.tas for r in report.records],
    }


def timeline_csv(doc: dict[str, Any]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["time", "id", "ood", "tas"])
    for row in zip(doc["labels"], doc["id"], doc["ood"], doc["tas"]):
        writer.writerow([row[0], *(repr(v) for v in row[1:])])
    return buf.getvalue()
