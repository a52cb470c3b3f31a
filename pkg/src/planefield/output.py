"""Artifact writers: provenance header, CSV tables, JSON reports and the terminal summary table."""

import csv
import io
import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import numpy.typing as npt
import typer

from planefield.__version__ import __version__
from planefield.schemas import (
    ComparisonReport,
    FloatArray,
    GridSpec,
    PointSet,
    ResidualGrid,
    RunConfig,
)

Cell = str | int | float | bool | None


@dataclass(frozen=True)
class Table:
    """Column names and rows of a CSV artifact."""

    columns: tuple[str, ...]
    rows: list[tuple[Cell, ...]] = field(default_factory=list)


def format_cell(value: object) -> str:
    """17 significant digits for reals, `str` otherwise."""
    if isinstance(value, bool) or value is None:
        return "" if value is None else str(value).lower()
    if isinstance(value, float | np.floating):
        return f"{float(value):.17g}"
    return str(value)


####################################################################################################
# Provenance
####################################################################################################


def _flatten(prefix: str, value: object) -> Iterable[tuple[str, str]]:
    if isinstance(value, Mapping):
        for key, item in value.items():  # pyright: ignore[reportUnknownVariableType]
            yield from _flatten(f"{prefix}{key}.", item)
    elif isinstance(value, list | tuple):
        items = (format_cell(item) for item in value)  # pyright: ignore[reportUnknownVariableType]
        yield prefix.rstrip("."), ",".join(items)
    else:
        yield prefix.rstrip("."), format_cell(value)


def provenance(config: RunConfig) -> dict[str, str]:
    """Library version and the fully resolved configuration as flat key / value pairs."""
    echo = dict(_flatten("", config.model_dump(mode="json")))
    return {"planefield": __version__} | dict(sorted(echo.items()))


def provenance_header(config: RunConfig) -> str:
    """`# planefield <version>` followed by one `# key=value` line per configuration entry."""
    lines = [f"# planefield {__version__}"]
    lines.extend(
        f"# {key}={value}" for key, value in provenance(config).items() if key != "planefield"
    )
    return "\n".join(lines) + "\n"


####################################################################################################
# Tables
####################################################################################################


def points_table(points: PointSet, marks: FloatArray | None = None) -> Table:
    """One row per point, with its mark when given."""
    if marks is None:
        return Table(("x1", "x2"), [(float(x1), float(x2)) for x1, x2 in points.points])
    rows = [
        (float(x1), float(x2), float(m))
        for (x1, x2), m in zip(points.points, marks, strict=True)
    ]
    return Table(("x1", "x2", "mark"), rows)


def grid_table(grid: GridSpec, values: npt.NDArray[np.generic]) -> Table:
    """One row per grid node."""
    t1, t2 = grid.mesh()
    rows = [
        (float(a), float(b), v.item())
        for a, b, v in zip(t1.reshape(-1), t2.reshape(-1), values.reshape(-1), strict=True)
    ]
    return Table(("t1", "t2", "value"), rows)


def samples_table(values: npt.NDArray[np.generic]) -> Table:
    """One row per replication."""
    return Table(("index", "value"), [(i, v.item()) for i, v in enumerate(values)])


def residual_table(residuals: Sequence[ResidualGrid]) -> Table:
    """One row per residual node and state."""
    rows: list[tuple[Cell, ...]] = []
    for residual in residuals:
        for state, values in zip(residual.states, residual.values, strict=True):
            for i, a in enumerate(residual.axis1):
                rows.extend(
                    (residual.name, state, float(a), float(b), float(values[i, j]))
                    for j, b in enumerate(residual.axis2)
                )
    return Table(("system", "n", "axis1", "axis2", "residual"), rows)


REPORT_FIELDS = ("check", "variant", "statistic_name", "value", "threshold", "n_samples", "passed")


def report_rows(reports: Sequence[ComparisonReport]) -> list[dict[str, Cell]]:
    """Reports flattened for tables, `check` and `variant` taken from the details."""
    rows: list[dict[str, Cell]] = []
    for report in reports:
        row: dict[str, Cell] = {
            "check": str(report.details.get("check", "")),
            "variant": str(report.details.get("variant") or ""),
        }
        row |= report.model_dump(include=set(REPORT_FIELDS[2:]))
        rows.append(row)
    return rows


def reports_table(reports: Sequence[ComparisonReport]) -> Table:
    """One row per report."""
    rows = [tuple(row[name] for name in REPORT_FIELDS) for row in report_rows(reports)]
    return Table(REPORT_FIELDS, rows)


####################################################################################################
# Writers
####################################################################################################


def render_csv(config: RunConfig, table: Table) -> str:
    """Provenance header then the table, ',' separated with LF line endings."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    writer.writerows([format_cell(cell) for cell in row] for row in table.rows)
    return provenance_header(config) + buffer.getvalue()


def render_json(
    config: RunConfig, reports: Sequence[ComparisonReport], table: Table | None = None
) -> str:
    """{"provenance", "reports"} and the table when given, keys sorted."""
    document: dict[str, object] = {
        "provenance": provenance(config),
        "reports": [report.model_dump(mode="json") for report in reports],
    }
    if table is not None:
        document["table"] = {"columns": list(table.columns), "rows": table.rows}
    return json.dumps(document, sort_keys=True, indent=2) + "\n"


def write_artifact(
    config: RunConfig, reports: Sequence[ComparisonReport], table: Table | None = None
) -> None:
    """Write the run artifact to `config.output_path` ("-" is stdout).

    CSV artifacts hold `table`, or the reports when there is no table.
    """
    if config.format == "json":
        text = render_json(config, reports, table)
    else:
        text = render_csv(config, table if table is not None else reports_table(reports))
    if config.output_path == "-":
        typer.echo(text, nl=False)
    else:
        path = Path(config.output_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="\n")


####################################################################################################
# Table formatter
####################################################################################################


def _format_val(val: object) -> str:
    if isinstance(val, float):
        return f"{val:.6g}"
    return str(val)


def _format_row(row: Sequence[str], widths: Sequence[int]) -> str:
    cells: list[str] = []
    for cell, width in zip(row, widths, strict=False):
        cells.append(cell.rjust(width))
    return " │ ".join(cells) + "\n"


def format_table(rows: Sequence[Mapping[str, object]], fields: Sequence[str]) -> str:
    """Format a sequence of mappings as a table.

    Args:
        rows: The rows to format.
        fields: The keys to include in the table.
    """
    data = [tuple(_format_val(row.get(col)) for col in fields) for row in rows]
    max_lens = [len(header) for header in fields]
    for row in data:
        for i, cell in enumerate(row):
            max_lens[i] = max(max_lens[i], len(cell))

    lines: list[str] = [_format_row(fields, max_lens)]
    lines.append("─┼─".join("─" * w for w in max_lens) + "\n")
    lines.extend(_format_row(row, max_lens) for row in data)
    return "".join(lines)
