"""CSV writers for capacitance sweeps and simulation traces."""

from __future__ import annotations

import math
from typing import Iterable, TextIO

import numpy as np

from fringe_mems import capmodel
from fringe_mems.simulator import TRACE_COLUMNS, SimTrace

CAP_COLUMNS = ("gap_m", "C_ideal_F", "C_palmer_F", "C_sub_F", "C_ser_F")


def fmt(value: float) -> str:
    """Nine significant digits; infinities and NaN as ``inf``/``nan``."""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "nan"
    return f"{value:.9g}"


def cap_sweep_rows(geom: capmodel.DeviceGeometry, gaps: Iterable[float], c_ref: float | None = None):
    real = capmodel.default_real_model(geom)
    if c_ref is None:
        c_ref = real(geom.initial_gap)
    for gap in gaps:
        gap = float(gap)
        yield (
            gap,
            capmodel.ideal_capacitance(geom, gap),
            real(gap),
            capmodel.substitute_capacitance(geom, gap, c_ref),
            capmodel.serial_capacitance(geom, gap, real, c_ref),
        )


def write_cap_sweep(fh: TextIO, rows) -> None:
    fh.write(",".join(CAP_COLUMNS) + "\n")
    for row in rows:
        fh.write(",".join(fmt(v) for v in row) + "\n")


def write_trace(fh: TextIO, trace: SimTrace) -> None:
    fh.write(",".join(TRACE_COLUMNS) + "\n")
    cols = np.column_stack([getattr(trace, name) for name in TRACE_COLUMNS])
    for row in cols:
        fh.write(",".join(fmt(float(v)) for v in row) + "\n")
    fh.write(f"# status={trace.status}\n")


def read_trace(fh: TextIO) -> tuple[dict[str, np.ndarray], str]:
    """Parse a trace CSV back into columns and its terminal status."""
    header = fh.readline().strip().split(",")
    rows, status = [], None
    for line in fh:
        line = line.strip()
        if line.startswith("# status="):
            status = line.split("=", 1)[1]
        elif line:
            rows.append([float(v) for v in line.split(",")])
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return {name: data[:, i] for i, name in enumerate(header)}, status
