"""Command-line front end.

Exit status: 0 on success, 1 when ``suite`` signature checks fail, 2 for
unparseable input or invalid configuration, 3 when a metric precondition
fails (e.g. no evaluable train time).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import fields
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .config import SH_MODES, TAS_MODES, ConfigError, MetricConfig
from .kernels import PreconditionError, compute_ttr, evaluate_model
from .matrix import AccuracyMatrix, MatrixFormatError, detect_format, parse_matrix, serialize_matrix
from .report import (
    COLUMNS,
    DEFAULT_COLUMNS,
    ReportError,
    comparison_table,
    format_horizon,
    format_percent,
    heatmap_csv,
    heatmap_data,
    mean_id_ood_gap,
    timeline_csv,
    timeline_series,
    to_json,
)
from .result import MetricReport
from .synth import ScenarioError, ScenarioSpec, check_signature, generate, scenario_suite

EXIT_OK, EXIT_CHECKS_FAILED, EXIT_INPUT, EXIT_PRECONDITION = 0, 1, 2, 3

_DEFAULTS = MetricConfig()

# (flag, field, type, help); every MetricConfig field must appear here
_CONFIG_FLAGS: list[tuple[str, str, Any, str]] = [
    ("--delta", "delta", float, "stability tolerance on the transfer ratio"),
    ("--epsilon", "epsilon", float, "per-step slack of the drift statistic"),
    ("--lambda", "lambda_", float, "drift threshold (strict S_h > lambda)"),
    ("--max-horizon", "max_horizon", int, "largest offset H inspected by SH/DH"),
    ("--tas-window", "tas_window", int, "future steps n averaged by TAS"),
    ("--sh-mode", "sh_mode", str, "stability horizon mode"),
    ("--clip-ttr", "clip_ttr", bool, "clip transfer ratios and TAS to 1"),
    ("--tas-mode", "tas_mode", str, "TAS aggregation: ratio of averages or mean of per-offset ratios"),
]
_CHOICES = {"sh_mode": SH_MODES, "tas_mode": TAS_MODES}


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT) -> None:
        super().__init__(message)
        self.code = code


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("metric configuration (flags override --config)")
    group.add_argument("--config", metavar="FILE", help="JSON file with MetricConfig fields")
    for flag, name, typ, text in _CONFIG_FLAGS:
        default = getattr(_DEFAULTS, name)
        shown = str(default).lower() if isinstance(default, bool) else default
        help_text = f"{text} (field: {name.rstrip('_')}, default: {shown})"
        if typ is bool:
            group.add_argument(flag, dest=name, action=argparse.BooleanOptionalAction, default=None, help=help_text)
        else:
            group.add_argument(
                flag,
                dest=name,
                type=typ,
                default=None,
                choices=_CHOICES.get(name),
                metavar=None if name in _CHOICES else name.rstrip("_").upper(),
                help=help_text,
            )


def _config_from_args(args: argparse.Namespace) -> MetricConfig:
    data: dict[str, Any] = {}
    if args.config:
        data = MetricConfig.from_json(_read(args.config)).to_dict()
    for _, name, _, _ in _CONFIG_FLAGS:
        value = getattr(args, name)
        if value is not None:
            data[name.rstrip("_")] = value
    return MetricConfig.from_dict(data)


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror or exc}") from None


def _load_matrix(path: str, model_name: str | None = None) -> AccuracyMatrix:
    try:
        m = parse_matrix(_read(path), detect_format(path), model_name=Path(path).stem)
    except MatrixFormatError as exc:
        raise CliError(f"{path}: {exc}") from None
    if model_name is not None:
        m = m.with_values(m.values, model_name=model_name)
    return m


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- subcommands -------------------------------------------------------------


def _report_text(report: MetricReport, unit: str) -> str:
    lines = [f"model: {report.model_name}"]
    cfg = report.config.to_dict()
    lines.append("config: " + ", ".join(f"{k}={v}" for k, v in cfg.items()))
    lines.append("")
    header = ("time", "SH", "DH", "OOD avg", "ID avg", "TAS")
    rows = []
    for r in report.records:
        rows.append((
            r.label,
            f"{r.sh}{'*' if r.sh_truncated else ''}",
            f"{r.dh}{'*' if r.dh_truncated else ''}",
            format_percent(r.ood_avg),
            format_percent(r.id_avg),
            format_percent(r.tas),
        ))
    widths = [max(len(x[i]) for x in [header, *rows]) for i in range(len(header))]
    for row in [header, *rows]:
        lines.append("  ".join(c.rjust(w) for c, w in zip(row, widths)).rstrip())
    lines.append("")
    lines.append(f"ID avg   {format_percent(report.id_avg)}")
    lines.append(f"OOD avg  {format_percent(report.ood_avg)}")
    lines.append(f"OOD min  {format_percent(report.ood_min)}")
    lines.append(f"TAS avg  {format_percent(report.tas_mean)}")
    lines.append(f"TAS min  {format_percent(report.tas_min)}")
    lines.append(f"SH avg   {format_horizon(report.sh_mean, unit)}{'*' if report.sh_includes_truncated else ''}")
    lines.append(f"DH avg   {format_horizon(report.dh_mean, unit)}{'*' if report.dh_includes_truncated else ''}")
    if report.sh_includes_truncated or report.dh_includes_truncated:
        lines.append("* truncated: threshold not crossed within the observable window")
    for label, reason in report.skipped:
        lines.append(f"skipped {label}: {reason}")
    return "\n".join(lines) + "\n"


def _report_csv(report: MetricReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    names = [f.name for f in fields(report.records[0])]
    writer.writerow(names)
    for r in report.records:
        writer.writerow([getattr(r, n) for n in names])
    return buf.getvalue()


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    m = _load_matrix(args.matrix, args.model_name)
    report = evaluate_model(m, cfg)
    if args.format == "json":
        text = to_json(report.to_dict())
    elif args.format == "csv":
        text = _report_csv(report)
    else:
        text = _report_text(report, args.unit)
    _emit(text, args.output)
    if args.timeline:
        doc = timeline_series(report, m)
        out = timeline_csv(doc) if args.timeline.lower().endswith(".csv") else to_json(doc)
        Path(args.timeline).write_text(out, encoding="utf-8")
    return EXIT_OK


def _load_report_or_matrix(path: str, cfg: MetricConfig) -> MetricReport:
    if detect_format(path) == "json":
        raw = _read(path)
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise CliError(f"{path}: malformed JSON: {exc}") from None
        if isinstance(doc, dict) and "records" in doc:
            try:
                return MetricReport.from_dict(doc)
            except (KeyError, TypeError, ValueError) as exc:
                raise CliError(f"{path}: invalid report: {exc}") from None
    return evaluate_model(_load_matrix(path), cfg)


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    columns = [c.strip() for c in args.columns.split(",")] if args.columns else list(DEFAULT_COLUMNS)
    reports = [_load_report_or_matrix(p, cfg) for p in args.inputs]
    table = comparison_table(reports, columns, unit=args.unit)
    if args.format == "json":
        text = table.to_json()
    elif args.format == "csv":
        text = table.to_csv()
    else:
        text = table.to_text()
    _emit(text, args.output)
    return EXIT_OK


def cmd_ttr(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    m = _load_matrix(args.matrix, args.model_name)
    center = cfg.delta if args.center is None else args.center
    doc = heatmap_data(compute_ttr(m, cfg), center=center)
    _emit(heatmap_csv(doc) if args.format == "csv" else to_json(doc), args.output)
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    spec = ScenarioSpec.from_json(_read(args.spec))
    m = generate(spec)
    fmt = args.matrix_format or (detect_format(args.output) if args.output else "json")
    _emit(serialize_matrix(m, fmt).decode("utf-8"), args.output)
    return EXIT_OK


def cmd_suite(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    suite = scenario_suite()
    results = []
    reports = {}
    for name, scenario in suite.items():
        report = evaluate_model(generate(scenario.spec), cfg)
        reports[name] = report
        for check, ok, detail in check_signature(report, scenario.signature):
            results.append({"scenario": name, "check": check, "passed": ok, "detail": detail})
    diff_gap = abs(mean_id_ood_gap(reports["pure-difficulty"]) - mean_id_ood_gap(reports["matched-lag"]))
    results.append({
        "scenario": "pure-difficulty vs matched-lag",
        "check": "equal mean ID-OOD gap",
        "passed": diff_gap <= 1e-9,
        "detail": f"|gap difference| {diff_gap:.2e}",
    })
    tas_drop = reports["pure-difficulty"].tas_mean - reports["matched-lag"].tas_mean
    results.append({
        "scenario": "pure-difficulty vs matched-lag",
        "check": "TAS lower by >= 0.2",
        "passed": tas_drop >= 0.2,
        "detail": f"TAS difference {tas_drop:.4f}",
    })
    if args.format == "json":
        text = to_json({"config": cfg.to_dict(), "checks": results})
    else:
        text = "".join(
            f"{'PASS' if r['passed'] else 'FAIL'}  {r['scenario']}: {r['check']} ({r['detail']})\n" for r in results
        )
    _emit(text, args.output)
    return EXIT_OK if all(r["passed"] for r in results) else EXIT_CHECKS_FAILED


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tadapt",
        description="Temporal adaptation metrics (TTR, SH, DH, TAS) for accuracy matrices.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="metric report for one accuracy matrix")
    p.add_argument("matrix", help="matrix file (.csv or .json)")
    p.add_argument("--model-name", help="model name (default: file stem for CSV)")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.add_argument("--unit", default="steps", help="horizon unit label (default: steps)")
    p.add_argument("--timeline", metavar="PATH", help="also write the ID/OOD/TAS series (.json or .csv)")
    p.add_argument("-o", "--output", help="output file (default: stdout)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="comparison table across models")
    p.add_argument("inputs", nargs="+", help="matrix files or saved report JSON files")
    p.add_argument("--columns", help=f"comma-separated subset of {','.join(COLUMNS)}")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.add_argument("--unit", default="steps", help="horizon unit label (default: steps)")
    p.add_argument("-o", "--output", help="output file (default: stdout)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("ttr", help="transfer-ratio heatmap data")
    p.add_argument("matrix", help="matrix file (.csv or .json)")
    p.add_argument("--model-name", help="model name (default: file stem for CSV)")
    p.add_argument("--center", type=float, help="colormap center (default: delta)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("-o", "--output", help="output file (default: stdout)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_ttr)

    p = sub.add_parser("synth", help="generate a matrix from a scenario JSON file")
    p.add_argument("spec", help="ScenarioSpec JSON file")
    p.add_argument("--matrix-format", choices=("csv", "json"), help="default: from output extension, else json")
    p.add_argument("-o", "--output", help="output file (default: stdout)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("suite", help="run the canonical scenario suite and check signatures")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("-o", "--output", help="output file (default: stdout)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"tadapt: error: {exc}", file=sys.stderr)
        return exc.code
    except (MatrixFormatError, ConfigError, ScenarioError, ReportError) as exc:
        print(f"tadapt: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PreconditionError as exc:
        print(f"tadapt: error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except OSError as exc:
        print(f"tadapt: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
