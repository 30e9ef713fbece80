"""Closed-interval lists: merging, Minkowski sums and covering numbers.

Lists are pairs of equal-length arrays ``(lo, hi)``.  Integer arrays are
handled exactly, which the arithmetic Cantor code relies on.
"""
from __future__ import annotations

import math

import numpy as np


def merge_intervals(lo, hi, *, tol: float = 0.0):
    """Union of closed intervals as sorted disjoint components.

    Intervals that touch (gap ``<= tol``) are merged.
    """
    lo = np.asarray(lo)
    hi = np.asarray(hi)
    if len(lo) == 0:
        return lo.copy(), hi.copy()
    order = np.lexsort((hi, lo))
    lo, hi = lo[order], hi[order]
    reach = np.maximum.accumulate(hi)
    # a new component starts where lo exceeds everything seen so far
    starts = np.empty(len(lo), dtype=bool)
    starts[0] = True
    starts[1:] = lo[1:] > reach[:-1] + tol
    first = np.flatnonzero(starts)
    last = np.append(first[1:] - 1, len(lo) - 1)
    return lo[first], reach[last]


def minkowski_sum(a, b, *, scale_a=1, scale_b=1, tol: float = 0.0):
    """Merged ``scale_a * A + scale_b * B`` for interval lists ``A``, ``B``."""
    alo, ahi = (np.asarray(x) for x in a)
    blo, bhi = (np.asarray(x) for x in b)
    lo = (scale_a * alo)[:, None] + (scale_b * blo)[None, :]
    hi = (scale_a * ahi)[:, None] + (scale_b * bhi)[None, :]
    return merge_intervals(lo.ravel(), hi.ravel(), tol=tol)


def cover_count(lo, hi, width, *, rtol: float = 1e-9) -> int:
    """Minimal number of closed intervals of length ``width`` covering the union.

    Greedy left-to-right placement is optimal in one dimension.  For float
    input, ``rtol`` absorbs rounding when a component length is an exact
    multiple of ``width``.
    """
    lo, hi = merge_intervals(lo, hi)
    exact = np.issubdtype(np.asarray(lo).dtype, np.integer) and isinstance(width, (int, np.integer))
    count = 0
    covered = None
    for a, b in zip(lo.tolist(), hi.tolist()):
        if covered is not None and b <= covered:
            continue
        start = a if covered is None or a > covered else covered
        length = b - start
        if exact:
            k = max(1, -(-length // width)) if covered is None or a > covered else -(-length // width)
        else:
            k = math.ceil(length / width - rtol) if length > 0 else 0
            if covered is None or a > covered:
                k = max(1, k)
        count += k
        covered = start + k * width
    return count
