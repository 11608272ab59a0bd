"""Temporal accuracy matrices: data model, validation and file formats.

A matrix holds ``A(t, tau)``, the accuracy of a model trained on period ``t``
and evaluated on period ``tau``. Cells may be absent (the pair was never
evaluated), which is distinct from an accuracy of 0.

Two on-disk formats are supported.

CSV::

    train\\eval,2002,2003,2004
    2002,0.325,0.27,
    2003,,0.31,0.29

The header lists the axis labels in order; each following row starts with a
train label and holds one field per axis label. Empty fields are absent
cells. Rows without any present cell may be omitted.

JSON::

    {"model_name": "FT", "labels": ["2002", "2003"],
     "cells": [{"train": "2002", "eval": "2002", "acc": 0.325}, ...]}

Values are written with Python's shortest round-tripping ``repr`` so that
``parse_matrix(serialize_matrix(m, f), f) == m`` holds exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np

CSV_CORNER = "train\\eval"
FORMATS = ("csv", "json")


class MatrixFormatError(ValueError):
    """A matrix document or constructor argument violates a format rule."""


@dataclass(frozen=True)
class TimeAxis:
    """Ordered, unique time-period labels. Offsets are taken on indices."""

    labels: tuple[str, ...]
    _index: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        labels = tuple(str(label) for label in self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise MatrixFormatError("time axis needs at least one label")
        index: dict[str, int] = {}
        for i, label in enumerate(labels):
            if not label:
                raise MatrixFormatError(f"empty time label at position {i}")
            if label in index:
                raise MatrixFormatError(
                    f"duplicate time label {label!r} at positions {index[label]} and {i}"
                )
            index[label] = i
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self) -> Iterator[str]:
        return iter(self.labels)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise MatrixFormatError(f"unknown time label {label!r}") from None

    def check_index(self, i: int) -> int:
        if not 0 <= i < len(self.labels):
            raise IndexError(f"time index {i} out of range for axis of size {len(self.labels)}")
        return i


def _check_value(value: float, where: str) -> float:
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        raise MatrixFormatError(f"{where}: value outside [0,1]: {value!r}")
    return value


class AccuracyMatrix:
    """Partial grid of accuracies over a shared train/eval time axis.

    Cells are stored densely in a read-only ``float64`` array with ``NaN``
    marking absent cells. Instances are immutable.

    Parameters
    ----------
    axis : TimeAxis or sequence of str
        The time labels, in order.
    values : array_like, shape (n, n)
        Accuracies in [0, 1]; ``NaN`` marks a non-evaluated pair.
    model_name : str
        Identifier used in reports.
    """

    __slots__ = ("axis", "values", "model_name")

    def __init__(self, axis: TimeAxis | Iterable[str], values, model_name: str = "model") -> None:
        if not isinstance(axis, TimeAxis):
            axis = TimeAxis(tuple(axis))
        # + 0.0 folds -0.0 into 0.0 so equality and hashing agree
        arr = np.array(values, dtype=np.float64, copy=True) + 0.0
        n = len(axis)
        if arr.shape != (n, n):
            raise MatrixFormatError(f"cell array has shape {arr.shape}, expected {(n, n)}")
        present = ~np.isnan(arr)
        bad = present & ~((arr >= 0.0) & (arr <= 1.0))
        if bad.any():
            t, tau = map(int, np.argwhere(bad)[0])
            raise MatrixFormatError(
                f"cell ({axis.labels[t]}, {axis.labels[tau]}): value outside [0,1]: {arr[t, tau]!r}"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "model_name", str(model_name))

    def __setattr__(self, name, value):
        raise AttributeError("AccuracyMatrix is immutable")

    @classmethod
    def from_cells(
        cls,
        labels: Iterable[str],
        cells: Mapping[tuple[int, int], float],
        model_name: str = "model",
    ) -> AccuracyMatrix:
        """Build from a sparse ``{(train_index, eval_index): accuracy}`` mapping."""
        axis = TimeAxis(tuple(labels))
        n = len(axis)
        arr = np.full((n, n), np.nan)
        for (t, tau), value in cells.items():
            if not (0 <= t < n and 0 <= tau < n):
                raise MatrixFormatError(f"cell index ({t}, {tau}) out of range for axis of size {n}")
            arr[t, tau] = _check_value(float(value), f"cell ({t}, {tau})")
        return cls(axis, arr, model_name)

    @property
    def size(self) -> int:
        return len(self.axis)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.axis.labels

    @property
    def present(self) -> np.ndarray:
        return ~np.isnan(self.values)

    @property
    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.values)

    def get(self, t: int, tau: int) -> float | None:
        """Accuracy at ``(t, tau)`` or ``None`` when the pair was not evaluated."""
        value = self.values[self.axis.check_index(t), self.axis.check_index(tau)]
        return None if math.isnan(value) else float(value)

    @property
    def cells(self) -> dict[tuple[int, int], float]:
        """Present cells as a ``{(t, tau): accuracy}`` dict in row-major order."""
        return {(int(t), int(tau)): float(self.values[t, tau]) for t, tau in np.argwhere(self.present)}

    def with_values(self, values, model_name: str | None = None) -> AccuracyMatrix:
        return AccuracyMatrix(self.axis, values, self.model_name if model_name is None else model_name)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AccuracyMatrix):
            return NotImplemented
        return (
            self.model_name == other.model_name
            and self.axis == other.axis
            and np.array_equal(self.values, other.values, equal_nan=True)
        )

    def __hash__(self) -> int:
        return hash((self.model_name, self.axis.labels, self.values.tobytes()))

    def __repr__(self) -> str:
        n_present = int(self.present.sum())
        return f"AccuracyMatrix(model_name={self.model_name!r}, size={self.size}, present={n_present})"


def eval_row(m: AccuracyMatrix, t: int) -> list[tuple[int, float]]:
    """Present cells ``(h, A(t, t+h))`` for ``h >= 0`` in increasing ``h``."""
    m.axis.check_index(t)
    row = m.values[t, t:]
    return [(int(h), float(row[h])) for h in np.flatnonzero(~np.isnan(row))]


# -- parsing -----------------------------------------------------------------


def _parse_number(text: str, where: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise MatrixFormatError(f"{where}: value not parseable as a number: {text!r}") from None
    return _check_value(value, where)


def _parse_csv(text: str, model_name: str) -> AccuracyMatrix:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or not rows[0]:
        raise MatrixFormatError("malformed header: document is empty")
    header = rows[0]
    if header[0].strip() != CSV_CORNER:
        raise MatrixFormatError(f"malformed header: first cell must be {CSV_CORNER!r}, got {header[0]!r}")
    labels = header[1:]
    if not labels:
        raise MatrixFormatError("malformed header: no time labels")
    try:
        axis = TimeAxis(tuple(labels))
    except MatrixFormatError as exc:
        raise MatrixFormatError(f"malformed header: {exc}") from None
    n = len(axis)
    arr = np.full((n, n), np.nan)
    seen_rows: dict[str, int] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not f.strip() for f in row):
            continue
        if len(row) != n + 1:
            raise MatrixFormatError(f"row {lineno}: expected {n + 1} fields, got {len(row)}")
        label = row[0]
        if label not in axis._index:
            raise MatrixFormatError(f"row {lineno}: unknown train label {label!r}")
        if label in seen_rows:
            raise MatrixFormatError(
                f"row {lineno}: duplicate cell: train label {label!r} already given on row {seen_rows[label]}"
            )
        seen_rows[label] = lineno
        t = axis.index(label)
        for tau, text_value in enumerate(row[1:]):
            text_value = text_value.strip()
            if text_value:
                where = f"row {lineno}, column {labels[tau]!r}"
                arr[t, tau] = _parse_number(text_value, where)
    return AccuracyMatrix(axis, arr, model_name)


def _parse_json(text: str, model_name: str | None) -> AccuracyMatrix:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MatrixFormatError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MatrixFormatError("malformed header: top-level JSON value must be an object")
    for key in ("labels", "cells"):
        if key not in doc:
            raise MatrixFormatError(f"malformed header: missing key {key!r}")
    labels = doc["labels"]
    if not isinstance(labels, list) or not labels or not all(isinstance(x, str) for x in labels):
        raise MatrixFormatError("malformed header: 'labels' must be a non-empty array of strings")
    name = doc.get("model_name", model_name if model_name is not None else "model")
    if not isinstance(name, str):
        raise MatrixFormatError("malformed header: 'model_name' must be a string")
    try:
        axis = TimeAxis(tuple(labels))
    except MatrixFormatError as exc:
        raise MatrixFormatError(f"malformed header: {exc}") from None
    n = len(axis)
    arr = np.full((n, n), np.nan)
    if not isinstance(doc["cells"], list):
        raise MatrixFormatError("malformed header: 'cells' must be an array")
    for i, cell in enumerate(doc["cells"]):
        where = f"cells[{i}]"
        if not isinstance(cell, dict) or not {"train", "eval", "acc"} <= cell.keys():
            raise MatrixFormatError(f"{where}: expected object with 'train', 'eval', 'acc'")
        try:
            t, tau = axis.index(cell["train"]), axis.index(cell["eval"])
        except MatrixFormatError as exc:
            raise MatrixFormatError(f"{where}: {exc}") from None
        acc = cell["acc"]
        if isinstance(acc, bool) or not isinstance(acc, (int, float)):
            raise MatrixFormatError(f"{where}: value not parseable as a number: {acc!r}")
        if not math.isnan(arr[t, tau]):
            raise MatrixFormatError(f"{where}: duplicate cell ({cell['train']}, {cell['eval']})")
        arr[t, tau] = _check_value(float(acc), where)
    return AccuracyMatrix(axis, arr, name)


def parse_matrix(source: bytes | str, format: str, model_name: str | None = None) -> AccuracyMatrix:
    """Parse a CSV or JSON matrix document.

    ``model_name`` names CSV matrices (the CSV format carries no name); for
    JSON it is only a fallback when the document omits ``model_name``.

    Raises
    ------
    MatrixFormatError
        On any format violation; the message names the offending row/cell.
    """
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise MatrixFormatError(f"document is not UTF-8: {exc}") from None
    if format == "csv":
        return _parse_csv(source, model_name if model_name is not None else "model")
    if format == "json":
        return _parse_json(source, model_name)
    raise ValueError(f"unknown matrix format {format!r}; expected one of {FORMATS}")


# -- serialization -----------------------------------------------------------


def _fmt(value: float) -> str:
    return repr(float(value))


def serialize_matrix(m: AccuracyMatrix, format: str) -> bytes:
    """Write ``m`` as CSV or JSON; rows with no present cell are left out of CSV."""
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([CSV_CORNER, *m.labels])
        present = m.present
        for t, label in enumerate(m.labels):
            if not present[t].any():
                continue
            row = m.values[t]
            writer.writerow([label, *("" if math.isnan(v) else _fmt(v) for v in row.tolist())])
        return buf.getvalue().encode("utf-8")
    if format == "json":
        labels = m.labels
        cells = [
            {"train": labels[t], "eval": labels[tau], "acc": acc}
            for (t, tau), acc in m.cells.items()
        ]
        doc = {"model_name": m.model_name, "labels": list(labels), "cells": cells}
        return (json.dumps(doc, indent=1) + "\n").encode("utf-8")
    raise ValueError(f"unknown matrix format {format!r}; expected one of {FORMATS}")


def detect_format(path: str) -> str:
    lower = str(path).lower()
    if lower.endswith(".json"):
        return "json"
    if lower.endswith(".csv"):
        return "csv"
    raise MatrixFormatError(f"{path}: cannot infer format from extension; use .csv or .json")
