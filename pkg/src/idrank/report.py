"""Table and plot-data emitters for run results and ablation grids.

Output is plain text with a total ordering everywhere, so identical inputs
reproduce identical bytes. Timestamps and tool versions never enter a table
body; provenance lives in a sidecar JSON.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import __version__
from .engine import AblationGrid, RunResult
from .errors import ConfigError, ValidationError

MISSING = "-"


@dataclass(frozen=True)
class Column:
    """One table column: a header plus, for run-result rows, a value source."""

    header: str
    metric: str | None = None
    encoder: str | None = None


@dataclass(frozen=True)
class TableSchema:
    columns: tuple[Column, ...]
    row_key: str = "dataset"
    row_header: str = "Dataset"
    scale: str = "fraction"
    decimals: int = 3

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        if self.row_key not in ("dataset", "method"):
            raise ConfigError(f"unknown row key '{self.row_key}'")
        if self.scale not in ("fraction", "percent"):
            raise ConfigError(f"unknown scale '{self.scale}'")
        if self.decimals < 0:
            raise ConfigError("decimals must be >= 0")

    @classmethod
    def from_header(cls, headers: Sequence[str], **kwargs) -> "TableSchema":
        """Schema for re-emitting parsed text rows: first header is the row key."""
        return cls(
            columns=tuple(Column(header=h) for h in headers[1:]),
            row_header=headers[0],
            **kwargs,
        )


_METRIC_GETTERS = {
    "map": lambda r: r.map_primary,
    "map-per-query": lambda r: r.map_per_query,
    "map-per-subject": lambda r: r.map_per_subject,
    "pairwise": lambda r: r.pairwise_score,
    "adherence": lambda r: r.text_adherence,
    "top1": lambda r: r.top1_accuracy,
}


def format_value(value, scale: str = "fraction", decimals: int = 3) -> str:
    """Render one cell: fractions at fixed decimals, percent at one decimal.

    Strings pass through verbatim (so `-` survives a parse/re-emit round
    trip); None and NaN render as the missing marker.
    """
    if value is None:
        return MISSING
    if isinstance(value, str):
        return value
    value = float(value)
    if value != value:
        return MISSING
    if scale == "percent":
        return f"{value * 100.0:.1f}"
    return f"{value:.{decimals}f}"


def _rows_from_results(
    rows: Sequence[RunResult | Mapping], schema: TableSchema
) -> list[list[str]]:
    mapping_count = sum(isinstance(r, Mapping) for r in rows)
    if mapping_count not in (0, len(rows)):
        raise ConfigError("mixed mapping and run-result rows")
    if mapping_count and rows:
        out = []
        for row in rows:
            extra = set(row) - {schema.row_header} - {c.header for c in schema.columns}
            if extra:
                raise ConfigError(f"row keys {sorted(extra)} missing from schema columns")
            cells = [str(row.get(schema.row_header, MISSING))]
            cells += [
                format_value(row.get(c.header), schema.scale, schema.decimals)
                for c in schema.columns
            ]
            out.append(cells)
        return out

    groups: dict[str, list[RunResult]] = {}
    order: list[str] = []
    for result in rows:
        key = getattr(result, schema.row_key)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(result)
    out = []
    for key in order:
        cells = [key]
        for col in schema.columns:
            if col.metric is None:
                raise ConfigError(f"column '{col.header}' declares no metric for run results")
            getter = _METRIC_GETTERS.get(col.metric)
            if getter is None:
                raise ConfigError(f"column '{col.header}': unknown metric '{col.metric}'")
            candidates = [
                r for r in groups[key] if col.encoder is None or r.encoder == col.encoder
            ]
            value = getter(candidates[0]) if candidates else None
            cells.append(format_value(value, schema.scale, schema.decimals))
        out.append(cells)
    return out


def emit_csv(rows: Sequence[RunResult | Mapping], schema: TableSchema) -> str:
    """RFC-4180 CSV (CRLF line ends); missing cells rendered as `-`."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow([schema.row_header] + [c.header for c in schema.columns])
    for cells in _rows_from_results(rows, schema):
        writer.writerow(cells)
    return buf.getvalue()


def emit_markdown(rows: Sequence[RunResult | Mapping], schema: TableSchema) -> str:
    headers = [schema.row_header] + [c.header for c in schema.columns]
    lines = [
        "| " + " | ".join(headers) + " |",
        "| " + " | ".join("---" for _ in headers) + " |",
    ]
    for cells in _rows_from_results(rows, schema):
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def emit_json(results: Sequence[RunResult]) -> str:
    return json.dumps([r.to_dict() for r in results], indent=2, sort_keys=True) + "\n"


PLOTDATA_METRICS = ("map", "pairwise")


def emit_plotdata(grid: AblationGrid) -> str:
    """Long-form CSV of an ablation grid: one row per (value, seed, metric)."""
    if not grid.cells:
        raise ValidationError("empty grid")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["axis", "value", "seed", "metric", "score"])
    for value in grid.values:
        for seed in grid.seeds:
            cell = grid.cells[(value, seed)]
            scores = {"map": cell.map_primary, "pairwise": cell.pairwise_score}
            for metric in PLOTDATA_METRICS:
                writer.writerow([grid.axis, value, seed, metric, repr(scores[metric])])
    return buf.getvalue()


@dataclass(frozen=True)
class TableData:
    headers: tuple[str, ...]
    rows: tuple[Mapping[str, str], ...] = field(default=())


def parse_table(text: str) -> TableData:
    """Parse an emitted CSV back into string rows (round-trips byte-exactly)."""
    reader = csv.reader(io.StringIO(text))
    try:
        headers = next(reader)
    except StopIteration:
        raise ValidationError("empty table") from None
    rows = []
    for line_no, row in enumerate(reader, start=2):
        if len(row) != len(headers):
            raise ValidationError(f"line {line_no}: expected {len(headers)} cells, got {len(row)}")
        rows.append(dict(zip(headers, row)))
    return TableData(headers=tuple(headers), rows=tuple(rows))


def build_sidecar(config_fingerprint: str, seed: int, **extra) -> dict:
    """Provenance record written next to every table: fingerprint, seed, version."""
    payload = {
        "tool": "idrank",
        "version": __version__,
        "config_fingerprint": config_fingerprint,
        "seed": seed,
    }
    payload.update(sorted(extra.items()))
    return payload


def sidecar_json(config_fingerprint: str, seed: int, **extra) -> str:
    return json.dumps(
        build_sidecar(config_fingerprint, seed, **extra), indent=2, sort_keys=True
    ) + "\n"
