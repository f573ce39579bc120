"""CSV persistence of simulation traces.

One row per sample with columns ``t``, then ``x_i, v_i, a_i, u_i, gap_i, w_i,
k3_i`` for every follower, then ``psi, x0, v0, a0``.  Numbers are written as
the shortest scientific representation that round-trips to the same double.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Union

import numpy as np

from .simulator import RunStats, SimulationTrace

PER_VEHICLE = ("x", "v", "a", "u", "gap", "w", "k3")
TRAILING = ("psi", "x0", "v0", "a0")


def header(n: int) -> list[str]:
    cols = ["t"]
    for i in range(1, n + 1):
        cols += [f"{name}_{i}" for name in PER_VEHICLE]
    return cols + list(TRAILING)


def _fmt(x: float) -> str:
    return np.format_float_scientific(x, unique=True)


def trace_matrix(trace: SimulationTrace) -> np.ndarray:
    """Trace as an ``(samples, 1 + 7N + 4)`` array in column order."""
    per = np.stack([getattr(trace, name) for name in PER_VEHICLE], axis=2)  # (S, N, 7)
    S = len(trace.t)
    return np.column_stack([trace.t, per.reshape(S, -1), trace.psi, trace.leader])


def write_trace_csv(trace: SimulationTrace, path: Union[str, Path]) -> Path:
    path = Path(path)
    data = trace_matrix(trace)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header(trace.n))
        for row in data:
            writer.writerow([_fmt(x) for x in row])
    return path


def read_trace_csv(path: Union[str, Path]) -> SimulationTrace:
    """Read a trace written by :func:`write_trace_csv` (``xi``, ``e`` and stats are not stored)."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    cols = rows[0]
    ncol = len(cols)
    n, rem = divmod(ncol - 1 - len(TRAILING), len(PER_VEHICLE))
    if rem or n < 1 or cols != header(n):
        raise ValueError(f"{path}: unexpected CSV header")
    data = np.array(rows[1:], dtype=float).reshape(-1, ncol)
    S = data.shape[0]
    per = data[:, 1 : 1 + 7 * n].reshape(S, n, len(PER_VEHICLE))
    fields = {name: per[:, :, k].copy() for k, name in enumerate(PER_VEHICLE)}
    return SimulationTrace(
        t=data[:, 0].copy(),
        psi=data[:, -4].copy(),
        leader=data[:, -3:].copy(),
        stats=RunStats(),
        **fields,
    )
