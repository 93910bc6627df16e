"""Reading and writing time series as CSV.

The first column is ``time`` in seconds; every other column is a named
channel.  Steps must be uniform.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .exceptions import ParseError
from .simulate import TimeSeries, Trajectory

__all__ = ["ingest_timeseries", "read_timeseries_text", "write_trajectory", "format_trajectory"]

# relative tolerance on step uniformity
STEP_RTOL = 1e-9


def ingest_timeseries(path, default_dt: float = 600.0) -> TimeSeries:
    """Read a CSV time series.

    Parameters
    ----------
    path : path-like
    default_dt : float
        Step used when the file holds a single row.

    Raises
    ------
    ParseError
        On a missing ``time`` column, duplicate channel names, non-numeric
        cells or non-uniform steps, with line and column of the fault.
    """
    path = Path(path)
    try:
        text = path.read_text("utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read input file: {exc}", path) from exc
    return read_timeseries_text(text, str(path), default_dt)


def read_timeseries_text(text: str, path=None, default_dt: float = 600.0) -> TimeSeries:
    rows = [
        (lineno, row)
        for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1)
        if row and not (len(row) == 1 and not row[0].strip()) and not row[0].lstrip().startswith("#")
    ]
    if not rows:
        raise ParseError("input file is empty", path, 1, 1)
    header_line, header = rows[0]
    header = [h.strip() for h in header]
    if header[0] != "time":
        raise ParseError(f"first column must be 'time', got {header[0]!r}", path, header_line, 1)
    seen = {}
    for j, name in enumerate(header):
        if not name:
            raise ParseError("empty column name", path, header_line, j + 1)
        if name in seen:
            raise ParseError(
                f"duplicate channel {name!r} (also column {seen[name] + 1})", path, header_line, j + 1
            )
        seen[name] = j

    data = np.empty((len(rows) - 1, len(header)))
    for i, (lineno, row) in enumerate(rows[1:]):
        if len(row) != len(header):
            raise ParseError(
                f"expected {len(header)} cells, got {len(row)}", path, lineno, min(len(row), len(header)) + 1
            )
        for j, cell in enumerate(row):
            try:
                data[i, j] = float(cell)
            except ValueError:
                raise ParseError(
                    f"non-numeric value {cell.strip()!r} in column {header[j]!r}", path, lineno, j + 1
                ) from None
            if not np.isfinite(data[i, j]):
                raise ParseError(f"non-finite value in column {header[j]!r}", path, lineno, j + 1)

    if len(data) == 0:
        raise ParseError("input file has a header but no data rows", path, header_line, 1)
    t = data[:, 0]
    if len(t) == 1:
        dt = float(default_dt)
    else:
        steps = np.diff(t)
        dt = float(steps[0])
        if not dt > 0:
            raise ParseError("time must increase", path, rows[2][0], 1)
        bad = np.flatnonzero(np.abs(steps - dt) > STEP_RTOL * max(abs(dt), 1.0) + 1e-9 * abs(t[1:]))
        if bad.size:
            k = int(bad[0])
            raise ParseError(
                f"non-uniform time step: {steps[k]:g} s after {dt:g} s", path, rows[k + 2][0], 1
            )
    return TimeSeries(dt, {name: data[:, j] for j, name in enumerate(header[1:], start=1)}, float(t[0]))


def format_trajectory(traj: Trajectory, include_states: bool = False) -> str:
    """CSV text with a ``time`` column, deterministic to the byte.

    Values are written in the shortest form that reads back to the same
    double, so a written trajectory compares exactly with itself.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    labels = list(traj.output_labels)
    cols = [traj.outputs]
    if include_states and traj.states is not None:
        labels += list(traj.state_labels)
        cols.append(traj.states)
    writer.writerow(["time"] + labels)
    values = np.column_stack([traj.times] + cols) if len(traj.times) else np.zeros((0, len(labels) + 1))
    for row in values:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def write_trajectory(path, traj: Trajectory, include_states: bool = False) -> None:
    Path(path).write_text(format_trajectory(traj, include_states), "utf-8")
