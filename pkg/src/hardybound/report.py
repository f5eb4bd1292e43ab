"""Result records, JSON/CSV emission and witness files.

Outputs depend only on the run configuration: wall time goes to a separate
``*.timing.json`` sidecar so the JSON and CSV files are byte-identical across
reruns.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from .errors import ContractError, OutputError
from .nonlocal_core import Grid, GridFunction

__all__ = [
    "BRACKET_COLUMNS",
    "GEOMETRY_COLUMNS",
    "ResultRecord",
    "emit_results",
    "bracket_rows",
    "geometry_rows",
    "versions",
    "write_witness",
    "read_witness",
]

BRACKET_COLUMNS = ("level", "n", "h", "lambda_lo", "lambda_hi", "gap", "residual")
GEOMETRY_COLUMNS = ("inradius", "volume", "integral", "bound_inradius", "bound_volume")


def versions() -> dict:
    from . import __version__

    return {"hardybound": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


@dataclass
class ResultRecord:
    """``result`` holds the mode-specific payload, ``checks`` diagnostics that
    are not part of it, and ``rows`` the plot table.  ``witness`` (not
    serialized) is the grid function written next to the record, if any."""

    mode: str
    config: dict
    result: dict
    columns: tuple[str, ...] = BRACKET_COLUMNS
    rows: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    versions: dict = field(default_factory=versions)
    wall_time: float | None = field(default=None, compare=False)
    witness: GridFunction | None = field(default=None, compare=False, repr=False)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "config": self.config,
            "result": self.result,
            "columns": list(self.columns),
            "rows": [list(r) for r in self.rows],
            "checks": self.checks,
            "versions": self.versions,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ResultRecord":
        return cls(d["mode"], d["config"], d["result"], tuple(d["columns"]),
                   [list(r) for r in d["rows"]], d["checks"], d["versions"])

    @classmethod
    def from_json(cls, text: str) -> "ResultRecord":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_cell(v) for v in row])
        return buf.getvalue()


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def bracket_rows(brackets) -> list:
    rows = []
    for level, b in enumerate(brackets):
        rows.append([level, b.n, b.h, b.lambda_lo, b.lambda_hi, b.gap,
                     b.certificate.supersolution_residual])
    return rows


def geometry_rows(report) -> list:
    return [[report.inradius, report.volume, report.integral_d_neg_alpha,
             report.bound_inradius, report.bound_volume]]


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_results(record: ResultRecord, path) -> dict:
    """Write ``<path>.json`` and ``<path>.csv`` (plus the timing sidecar when
    the wall time is known); returns the paths written."""
    stem = Path(path)
    if stem.suffix in (".json", ".csv"):
        stem = stem.with_suffix("")
    out = {"json": stem.with_name(stem.name + ".json"), "csv": stem.with_name(stem.name + ".csv")}
    _write(out["json"], record.to_json())
    _write(out["csv"], record.to_csv())
    if record.wall_time is not None:
        out["timing"] = stem.with_name(stem.name + ".timing.json")
        _write(out["timing"], json.dumps({"wall_time_s": record.wall_time}) + "\n")
    return out


def write_witness(u: GridFunction, path) -> Path:
    """CSV with one row per node: coordinates, then the value."""
    path = Path(path)
    g = u.grid
    names = ["x", "y"][: g.params.N]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names + ["value"])
    for x, v in zip(g.nodes, u.values):
        writer.writerow([repr(float(c)) for c in x] + [repr(float(v))])
    _write(path, buf.getvalue())
    return path


def read_witness(path, grid: Grid, atol: float = 1e-12) -> GridFunction:
    """Load a witness CSV onto ``grid``; rows must match the grid nodes."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    rows = list(csv.reader(io.StringIO(text)))
    N = grid.params.N
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ContractError(f"{path}: non-numeric entry ({exc})") from exc
    if data.ndim != 2 or data.shape != (len(grid), N + 1):
        raise ContractError(
            f"{path}: expected {len(grid)} rows of {N + 1} columns for this grid, got {data.shape}"
        )
    scale = max(1.0, float(np.max(np.abs(grid.nodes))))
    if not np.allclose(data[:, :N], grid.nodes, rtol=0, atol=atol * scale):
        raise ContractError(f"{path}: node coordinates do not match the grid (check n and the domain)")
    if not np.all(np.isfinite(data[:, N])):
        raise ContractError(f"{path}: witness values must be finite")
    return grid.function(data[:, N])
