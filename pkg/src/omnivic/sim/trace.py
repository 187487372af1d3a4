"""Per-step episode traces as CSV, one row per step."""

from __future__ import annotations

import csv

import numpy as np

from omnivic.bank import Phase

COLUMNS = ("t", "phase", "Kx", "Ky", "Kz", "Dx", "Dy", "Dz", "Fx", "Fy", "Fz", "Tx", "Ty", "Tz",
           "vx", "vy", "vz", "wx", "wy", "wz", "y", "z")


def trace_rows(result):
    for i in range(result.steps_used):
        yield [i * result.dt, result.phases[i].value, *result.k[i], *result.d[i],
               *result.wrench[i], *result.twist[i], result.position[i, 1], result.position[i, 2]]


def write_trace(result, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for row in trace_rows(result):
            # repr keeps every float bit, so reading back is lossless
            w.writerow([repr(float(row[0])), row[1], *(repr(float(x)) for x in row[2:])])


def read_trace(path) -> dict:
    """Column name -> numpy array (``phase`` -> list of Phase)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise ValueError(f"unexpected trace header: {header}")
        rows = list(reader)
    out = {}
    for j, name in enumerate(COLUMNS):
        col = [r[j] for r in rows]
        out[name] = [Phase(v) for v in col] if name == "phase" else np.array([float(v) for v in col])
    return out
