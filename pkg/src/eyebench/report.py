"""Render metric and rating tables as markdown plus full-precision CSV.

Display cells round half-away-from-zero at two decimals; the CSV keeps six
decimals so numbers can be consumed downstream without display loss.
"""

import io
import csv
from decimal import Decimal, ROUND_HALF_UP

from .humaneval import AggregateReport, DIMENSIONS
from .stats import BootstrapSummary, ComparisonResult, Marker

FOOTNOTE = "* p<0.05, † p<0.0001 (after Bonferroni correction)"

EMPTY_CELL = "—"


class MissingCell(KeyError):
    pass


def fmt2(x: float) -> str:
    """Two decimals, ties away from zero (so 0.005 -> 0.01, not 0.00)."""
    return str(Decimal(repr(float(x))).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def fmt6(x: float) -> str:
    return f"{float(x):.6f}"


def metric_cell(summary: BootstrapSummary, marker: Marker = Marker.NONE) -> str:
    """"0.20 ± 0.03 (0.15, 0.25)" plus a significance marker suffix."""
    text = (f"{fmt2(summary.mean)} ± {fmt2(summary.sd)} "
            f"({fmt2(summary.ci_low)}, {fmt2(summary.ci_high)})")
    return text + marker.value


def _markdown_table(header: list[str], rows: list[list[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |",
             "| " + " | ".join("---" for _ in header) + " |"]
    for row in rows:
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines)


def render_metric_table(summaries, comparisons, task_rows, model_columns,
                        reference_model: str, groups=None, task_labels=None):
    """Rows are tasks, columns are models (reference first), cells are
    bootstrap summaries with significance markers versus the reference.

    summaries: {(task, model): BootstrapSummary}
    comparisons: {(task, model): ComparisonResult} for non-reference models
    groups: optional [(group_label, [task, ...]), ...] for section header rows
    Returns (markdown, csv_text).
    """
    columns = [reference_model] + [m for m in model_columns if m != reference_model]
    labels = task_labels or {}

    def cell(task, model):
        try:
            summary = summaries[(task, model)]
        except KeyError:
            raise MissingCell(f"no summary for task={task!r} model={model!r}") from None
        marker = Marker.NONE
        if model != reference_model:
            comparison = comparisons.get((task, model))
            if comparison is not None:
                marker = comparison.marker
        return summary, marker

    grouped = groups if groups is not None else [(None, list(task_rows))]
    md_rows = []
    for group_label, tasks in grouped:
        if group_label:
            md_rows.append([f"**{group_label}**"] + ["" for _ in columns])
        for task in tasks:
            row = [labels.get(task, str(task))]
            for model in columns:
                summary, marker = cell(task, model)
                row.append(metric_cell(summary, marker))
            md_rows.append(row)
    markdown = _markdown_table(["Task"] + columns, md_rows) + "\n\n" + FOOTNOTE + "\n"

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["task", "model", "mean", "sd", "ci_low", "ci_high",
                     "p_raw", "p_adjusted", "marker"])
    for _, tasks in grouped:
        for task in tasks:
            for model in columns:
                summary, marker = cell(task, model)
                comparison = comparisons.get((task, model))
                writer.writerow([
                    task, model,
                    fmt6(summary.mean), fmt6(summary.sd),
                    fmt6(summary.ci_low), fmt6(summary.ci_high),
                    fmt6(comparison.p_raw) if comparison else "",
                    fmt6(comparison.p_adjusted) if comparison else "",
                    marker.value,
                ])
    return markdown, buf.getvalue()


def render_rating_table(sections, model_columns=None):
    """Human-rating table: one section per task group, rows are the three
    dimensions, cells are two-decimal means ("—" when a cell has no ratings).

    sections: AggregateReport or [(group_label, AggregateReport), ...]
    Returns (markdown, csv_text).
    """
    if isinstance(sections, AggregateReport):
        sections = [("Ratings", sections)]
    sections = list(sections)
    if not sections:
        raise ValueError("no rating sections to render")
    models = list(model_columns) if model_columns else list(sections[0][1].models)

    md_rows = []
    missing_flagged = False
    incomplete = False
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["group", "dimension", "model", "mean", "complete"])
    for label, rep in sections:
        if not rep.complete:
            incomplete = True
        md_rows.append([f"**{label}**"] + ["" for _ in models])
        for dim in DIMENSIONS:
            row = [dim.capitalize()]
            for model in models:
                value = rep.means.get((model, dim))
                if value is None:
                    row.append(EMPTY_CELL)
                    missing_flagged = True
                    writer.writerow([label, dim, model, "", rep.complete])
                else:
                    row.append(fmt2(value))
                    writer.writerow([label, dim, model, fmt6(value), rep.complete])
            md_rows.append(row)
    markdown = _markdown_table([""] + models, md_rows)
    notes = []
    if missing_flagged:
        notes.append(f"{EMPTY_CELL} = no ratings recorded for this cell")
    if incomplete:
        notes.append("warning: at least one section is incomplete")
    if notes:
        markdown += "\n\n" + "\n".join(notes)
    return markdown + "\n", buf.getvalue()
