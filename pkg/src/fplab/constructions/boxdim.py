"""Box counting for point samples and interval lists."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .._validation import check_scales
from ..geometry import SNAP_TOL
from ..intervals import merge_intervals
from ..measures import unique_rows
from .arithmetic import ScaledIntervals


@dataclass
class BoxDimension:
    scales: np.ndarray
    counts: np.ndarray
    slope: float
    intercept: float


def _grid_floor(v: np.ndarray, delta: float) -> np.ndarray:
    scaled = v / delta
    near = np.rint(scaled)
    return np.where(np.abs(scaled - near) <= SNAP_TOL * np.maximum(1.0, np.abs(near)),
                    near, np.floor(scaled)).astype(np.int64)


def point_box_count(X: np.ndarray, delta: float) -> int:
    """Number of grid squares of side ``delta`` that contain a point of ``X``."""
    if len(X) == 0:
        return 0
    return len(unique_rows(_grid_floor(np.asarray(X, dtype=np.float64), delta))[0])


def interval_box_count(intervals, delta) -> int:
    """Number of grid cells ``[k δ, (k+1) δ)`` meeting the union of half-open intervals.

    ``ScaledIntervals`` with a ``Fraction`` scale is counted exactly.
    """
    if isinstance(intervals, ScaledIntervals) and isinstance(delta, Fraction):
        unit_num = intervals.denom * delta.numerator
        lo = (intervals.lo * delta.denominator) // unit_num
        hi = -((-intervals.hi * delta.denominator) // unit_num) - 1
    else:
        if isinstance(intervals, ScaledIntervals):
            lo_f, hi_f = intervals.as_float()
        else:
            lo_f, hi_f = (np.asarray(x, dtype=np.float64) for x in intervals)
        d = float(delta)
        lo = _grid_floor(lo_f, d)
        hi = -_grid_floor(-hi_f, d) - 1
    hi = np.maximum(hi, lo)
    a, b = merge_intervals(lo, hi)
    return int((b - a + 1).sum())


def box_dimension_estimate(E, scales) -> BoxDimension:
    """Box counts ``N(E, δ)`` and the least-squares slope of ``log N`` on ``log(1/δ)``.

    ``E`` is an ``(N, 2)`` point array / ``PointSet``, or an interval list.
    """
    raw = list(scales) if not isinstance(scales, np.ndarray) else scales.tolist()
    sc = check_scales([float(s) for s in raw])
    if hasattr(E, "points"):
        E = E.points
    if isinstance(E, np.ndarray) and E.ndim == 2 and E.shape[1] == 2:
        counts = np.array([point_box_count(E, s) for s in sc])
    else:
        counts = np.array([interval_box_count(E, s) for s in raw])
    slope, intercept = np.polyfit(np.log2(1.0 / sc), np.log2(counts), 1)
    return BoxDimension(sc, counts, float(slope), float(intercept))
