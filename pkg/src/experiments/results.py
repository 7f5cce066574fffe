import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

logger = logging.getLogger(__name__)

COLUMNS = (
    "experiment",
    "row_kind",
    "config_id",
    "mode",
    "seed",
    "n_particles",
    "batch_size",
    "kappa",
    "tau",
    "horizon",
    "confinement_a",
    "scenario",
    "e1",
    "e1_stderr",
    "e2",
    "w1",
    "slope",
    "spearman",
    "ratio",
    "dx_final",
    "dv_final",
    "verdict",
    "kernel_eval_count",
    "wall_clock",
)

_FLOAT_FORMAT = "%.17g"


@dataclass
class ResultTable:
    """Per-run rows followed by summary rows, all on the COLUMNS schema.

    Missing values are None and serialize as empty CSV fields / JSON null.
    """

    experiment: str
    rows: list[dict[str, Any]] = field(default_factory=list)
    summaries: list[dict[str, Any]] = field(default_factory=list)
    traces: dict[str, np.ndarray] = field(default_factory=dict)

    def add_row(self, **values) -> None:
        self.rows.append(self._normalize("run", values))

    def add_summary(self, **values) -> None:
        self.summaries.append(self._normalize("summary", values))

    def _normalize(self, row_kind: str, values: dict[str, Any]) -> dict[str, Any]:
        unknown = set(values) - set(COLUMNS)
        if unknown:
            raise KeyError(f"Unknown result column(s): {', '.join(sorted(unknown))}")
        row = dict.fromkeys(COLUMNS)
        row.update(values)
        row["experiment"] = self.experiment
        row["row_kind"] = row_kind
        return row

    def all_rows(self) -> list[dict[str, Any]]:
        return self.rows + self.summaries

    def summary(self, **match) -> dict[str, Any]:
        """The unique summary row whose fields equal `match`."""
        found = [r for r in self.summaries if all(r.get(k) == v for k, v in match.items())]
        if len(found) != 1:
            raise LookupError(f"{len(found)} summary rows match {match}")
        return found[0]

    def __len__(self) -> int:
        return len(self.rows) + len(self.summaries)


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        return _FLOAT_FORMAT % value
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def _json_value(value: Any) -> Any:
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _rows_for_output(table: ResultTable, include_timing: bool) -> list[dict[str, Any]]:
    rows = table.all_rows()
    if include_timing:
        return rows
    return [{**row, "wall_clock": None} for row in rows]


def render_csv(table: ResultTable, include_timing: bool = True) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in _rows_for_output(table, include_timing):
        writer.writerow([_cell(row[column]) for column in COLUMNS])
    return buffer.getvalue()


def render_json(table: ResultTable, include_timing: bool = True) -> str:
    rows = [
        {column: _json_value(row[column]) for column in COLUMNS}
        for row in _rows_for_output(table, include_timing)
    ]
    return json.dumps(rows, indent=2) + "\n"


def emit(table: ResultTable, path: str | Path, emit_format: str = "csv",
         include_timing: bool = True) -> Path:
    """Write the table as CSV (header + rows) or as a JSON array of row objects."""
    path = Path(path)
    if emit_format == "csv":
        text = render_csv(table, include_timing)
    elif emit_format == "json":
        text = render_json(table, include_timing)
    else:
        raise ValueError(f"Unknown emit format '{emit_format}'")

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        if table.traces:
            np.savez(traces_path(path), **table.traces)
    except OSError as e:
        logger.error("Failed to write results to %s", path, exc_info=True)
        raise OSError(e.errno, f"Cannot write results to {path}: {e.strerror}") from e

    logger.info("Wrote %d row(s) to %s (%s)", len(table), path, emit_format)
    return path


def traces_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}_traces.npz")


def _parse_cell(value: str) -> Any:
    if value == "":
        return None
    if value in ("true", "false"):
        return value == "true"
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            continue
    return value


def read_table(path: str | Path) -> list[dict[str, Any]]:
    """Load rows written by `emit`, CSV or JSON by extension."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        return json.loads(text)
    reader = csv.DictReader(io.StringIO(text))
    return [{key: _parse_cell(value) for key, value in row.items()} for row in reader]
