"""Readers and writers for the plain-text formats used by the CLI.

Floats are written with ``repr`` so that a value round-trips exactly and a
re-run produces byte-identical files.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .geometry import Direction
from .measures import MASS_TOL, DyadicMeasure1, DyadicMeasure2

POINT_HEADER = ("x", "y")
DIRECTION_HEADER = ("theta",)
REPORT_HEADER = ("quantity", "value", "witness")
ENTROPY_HEADER = ("theta", "n", "H", "Hn")
TUBE_HEADER = ("theta", "level", "j")
AUDIT_HEADER = ("delta", "t", "alpha", "tubes", "measured", "bound", "ratio")
INTERVAL_HEADER = ("lo", "hi")
BALL_TREE_HEADER = ("depth", "cx", "cy", "r", "parent_id", "id")


def fmt(v) -> str:
    """Deterministic text form: ints and strings as-is, floats via ``repr``."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path, header) -> list:
    path = Path(path)
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        got = next(r, None)
        if got is None or tuple(h.strip() for h in got) != tuple(header):
            raise ValueError(f"{path}: expected header {','.join(header)}, got {got}")
        return [row for row in r if row]


def read_points(path) -> np.ndarray:
    rows = read_csv(path, POINT_HEADER)
    return np.array([[float(x), float(y)] for x, y in rows], dtype=np.float64).reshape(-1, 2)


def write_points(path, X) -> None:
    write_csv(path, POINT_HEADER, np.asarray(X, dtype=np.float64).tolist())


def read_directions(path) -> list:
    return [Direction(float(r[0])) for r in read_csv(path, DIRECTION_HEADER)]


def write_directions(path, directions) -> None:
    write_csv(path, DIRECTION_HEADER, [(e.theta,) for e in directions])


def write_report(path, rows) -> None:
    write_csv(path, REPORT_HEADER, rows)


def write_measure(path, mu) -> None:
    """``level n`` followed by ``i j mass`` (2D) or ``j mass`` (1D) lines."""
    with open(path, "w") as fh:
        fh.write(f"level {mu.level}\n")
        if isinstance(mu, DyadicMeasure2):
            for (i, j), m in zip(mu.cells.tolist(), mu.masses.tolist()):
                fh.write(f"{i} {j} {m!r}\n")
        else:
            for j, m in zip(mu.intervals.tolist(), mu.masses.tolist()):
                fh.write(f"{j} {m!r}\n")


def read_measure(path):
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    if not lines or len(lines[0]) != 2 or lines[0][0] != "level":
        raise ValueError(f"{path}: first line must be 'level n'")
    level = int(lines[0][1])
    body = lines[1:]
    if not body:
        raise ValueError(f"{path}: no cells")
    widths = {len(r) for r in body}
    if len(widths) != 1 or widths.pop() not in (2, 3):
        raise ValueError(f"{path}: mixed or malformed cell lines")
    masses = [float(r[-1]) for r in body]
    if abs(math.fsum(masses) - 1.0) > MASS_TOL:
        raise ValueError(f"{path}: masses sum to {math.fsum(masses)!r}, not 1")
    if len(body[0]) == 3:
        return DyadicMeasure2(level, [[int(r[0]), int(r[1])] for r in body], masses)
    return DyadicMeasure1(level, [int(r[0]) for r in body], masses)


def entropy_rows(directions, values) -> list:
    return [(e.theta, v.n, v.H, v.normalized) for e, v in zip(directions, values)]


def tube_rows(family) -> list:
    return [(e.theta, family.level, int(j)) for e, js in zip(family.directions, family.offsets) for j in js]


def audit_rows(audits) -> list:
    return [(a.delta, a.t, a.alpha, a.tubes, a.measured, a.bound_value, a.ratio) for a in audits]


def interval_rows(intervals) -> list:
    lo, hi = intervals.as_float() if hasattr(intervals, "as_float") else intervals
    return list(zip(np.asarray(lo).tolist(), np.asarray(hi).tolist()))
