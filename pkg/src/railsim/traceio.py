"""CSV serialization of simulation traces and measured recordings.

Simulated traces carry the full column set; measured recordings need only
time_s, u_pu and i_pu.  Floats are written with repr precision so a parsed
file reproduces the original values exactly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .simulator import TraceSet

TRACE_COLUMNS = ("time_s", "u_pu", "i_pu", "p_pu", "q_pu", "e_pu", "delta_rad", "limiting")


class TraceFormatError(ValueError):
    """A trace file does not match the expected schema."""


@dataclass(frozen=True)
class MeasuredTrace:
    """Externally recorded RMS series: time, voltage and current magnitude."""

    time: np.ndarray
    u_mag: np.ndarray
    i_mag: np.ndarray


def write_trace(trace: TraceSet, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(dump_trace(trace))


def dump_trace(trace: TraceSet) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(TRACE_COLUMNS)
    for i in range(len(trace.time)):
        writer.writerow(
            [
                repr(float(trace.time[i])),
                repr(float(trace.u_mag[i])),
                repr(float(trace.i_mag[i])),
                repr(float(trace.p_g[i])),
                repr(float(trace.q_g[i])),
                repr(float(trace.e_mag[i])),
                repr(float(trace.delta[i])),
                int(trace.limiting[i]),
            ]
        )
    return buf.getvalue()


def parse_trace(text: str) -> TraceSet:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise TraceFormatError("empty trace file") from None
    if tuple(header) != TRACE_COLUMNS:
        raise TraceFormatError(
            f"expected columns {TRACE_COLUMNS}, got {tuple(header)}"
        )
    rows = [row for row in reader if row]
    if not rows:
        raise TraceFormatError("trace file has no data rows")
    try:
        data = [[float(v) for v in row] for row in rows]
    except ValueError as exc:
        raise TraceFormatError(f"non-numeric trace entry: {exc}") from exc
    cols = list(zip(*data))
    return TraceSet(
        time=np.array(cols[0]),
        u_mag=np.array(cols[1]),
        i_mag=np.array(cols[2]),
        p_g=np.array(cols[3]),
        q_g=np.array(cols[4]),
        e_mag=np.array(cols[5]),
        delta=np.array(cols[6]),
        limiting=np.array(cols[7]) != 0,
    )


def read_trace(path: str) -> TraceSet:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_trace(fh.read())


def read_measured(path: str) -> MeasuredTrace:
    """Read a measured RMS recording: header plus time_s, u_pu, i_pu columns."""
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise TraceFormatError(f"{path}: empty file") from None
        try:
            it = header.index("time_s")
            iu = header.index("u_pu")
            ii = header.index("i_pu")
        except ValueError:
            raise TraceFormatError(
                f"{path}: header must contain time_s, u_pu, i_pu (got {header})"
            ) from None
        rows = [row for row in reader if row]
    if not rows:
        raise TraceFormatError(f"{path}: no data rows")
    try:
        time = np.array([float(r[it]) for r in rows])
        u = np.array([float(r[iu]) for r in rows])
        i = np.array([float(r[ii]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise TraceFormatError(f"{path}: bad data row: {exc}") from exc
    if np.any(np.diff(time) <= 0):
        raise TraceFormatError(f"{path}: time column must be strictly increasing")
    return MeasuredTrace(time=time, u_mag=u, i_mag=i)
