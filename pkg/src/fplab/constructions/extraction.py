"""Regular ball trees inside a sampled AD-regular set.

Given a ``(r_min, t)``-set ``E`` and ``0 < t0 < t``, every tree node
``B(x, r)`` gets exactly ``b = ceil(δ^{-t0})`` children ``B(x_i, δ r)``
whose centers are taken from a maximal ``3 δ r``-separated subset of
``E ∩ B(x, r/2)``.  Such children are pairwise disjoint and lie inside the
parent, and the natural measure ``b^{-depth}`` per leaf is ``t0``-regular up
to constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ..geometry import dyadic_floor
from ..measures import DyadicMeasure2
from ..regularity import PointSet, _greedy_net_indices, delta_s_set_check, set_diameter

_RTOL = 1e-9


@dataclass
class BallTree:
    root: tuple
    r0: float
    branching: int
    ratio: float
    centers: list          # per depth, (K_d, 2) arrays
    parents: list          # per depth, parent index into the previous depth (-1 at the root)
    truncated: str = ""
    scan: list = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.centers) - 1

    def radius(self, d: int) -> float:
        return self.r0 * self.ratio**d

    def leaf_centers(self) -> np.ndarray:
        return self.centers[-1]

    def rows(self):
        """``(depth, cx, cy, r, parent_id, id)`` with ids unique across depths."""
        out, base, prev_base = [], 0, 0
        for d, (C, par) in enumerate(zip(self.centers, self.parents)):
            r = self.radius(d)
            for k, (cx, cy) in enumerate(C):
                pid = -1 if d == 0 else prev_base + int(par[k])
                out.append((d, float(cx), float(cy), r, pid, base + k))
            prev_base, base = base, base + len(C)
        return out

    def check(self) -> dict:
        """Re-verify exact branching, disjointness within each depth and containment."""
        branching = disjoint = contained = True
        for d in range(1, len(self.centers)):
            par = self.parents[d]
            counts = np.bincount(par, minlength=len(self.centers[d - 1]))
            branching &= bool(np.all(counts == self.branching))
            r, R = self.radius(d), self.radius(d - 1)
            C = self.centers[d]
            if len(C) > 1:
                dist, _ = cKDTree(C).query(C, k=2)
                disjoint &= bool(dist[:, 1].min() >= 2 * r * (1 - _RTOL))
            gap = np.hypot(*(C - self.centers[d - 1][par]).T)
            contained &= bool(np.all(gap + r <= R * (1 + _RTOL)))
        return {"branching": branching, "disjoint": disjoint, "contained": contained}

    def leaf_measure(self, max_level: int = 30) -> DyadicMeasure2:
        """``η``: mass ``b^{-depth}`` on the dyadic cell of each leaf center."""
        leaves = self.leaf_centers()
        r = self.radius(self.depth)
        n = min(max_level, max(1, math.ceil(math.log2(1.0 / r))))
        cells = dyadic_floor(leaves, n)
        return DyadicMeasure2(n, cells, np.full(len(leaves), 1.0 / len(leaves)))


def _ceil_inverse_power(delta: float, t0: float) -> int:
    v = delta**-t0
    r = round(v)
    return int(r) if abs(v - r) <= 1e-9 * v else math.ceil(v)


def _children(X, tree, x, r, delta):
    idx = tree.query_ball_point(x, 0.5 * r * (1 + _RTOL))
    if not idx:
        return np.empty(0, dtype=np.int64)
    idx = np.asarray(sorted(idx), dtype=np.int64)
    net = _greedy_net_indices(X[idx], 3 * delta * r)
    # greedy order is lexicographic; keep that order for the child list
    return idx[net]


def _grow(X, tree, centers, r, delta, b):
    """Children for every node at one depth, or the first failing node's count."""
    kids, parents = [], []
    for k, x in enumerate(centers):
        c = _children(X, tree, x, r, delta)
        if len(c) < b:
            return None, None, (k, len(c))
        kids.append(X[c[:b]])
        parents.append(np.full(b, k))
    return np.concatenate(kids), np.concatenate(parents), None


def extract_regular_subset(E: PointSet, t: float, t0: float, *, certify: bool = True,
                           cert_constant: float = 64.0, max_depth: int = 64) -> BallTree:
    """Regular ball tree with branching ``ceil(δ^{-t0})`` for the largest
    admissible dyadic ``δ``.

    ``δ`` is scanned over ``1/2, 1/4, ...``; a value is admissible when the
    root and all of its children can each supply ``b`` separated children.
    Levels are then added until the child radius drops below ``E.delta`` or
    some node cannot branch.
    """
    if not 0 < t0 < t:
        raise ValueError(f"need 0 < t0 < t, got t0={t0}, t={t}")
    X = E.points
    if len(X) == 0:
        raise ValueError("empty point set")
    if certify:
        report = delta_s_set_check(E, E.delta, min(t, 2.0), cert_constant)
        if not report.passed:
            raise ValueError(f"input is not a ({E.delta}, {t})-set: constant {report.worst_constant:.3g}")
    r_min = E.delta
    tree = cKDTree(X)
    # most central sample point (ties broken by index order)
    mid = 0.5 * (X.min(axis=0) + X.max(axis=0))
    root = X[int(np.argmin(((X - mid) ** 2).sum(axis=1)))]
    r0 = set_diameter(X) * (1 - 1e-6)
    if r0 <= 0:
        return BallTree(tuple(root), r_min, 1, 0.5, [root[None, :]], [np.array([-1])],
                        truncated="single point")

    scan = []
    chosen = None
    delta = 0.5
    while delta * r0 >= r_min:
        b = _ceil_inverse_power(delta, t0)
        kids, _, fail = _grow(X, tree, root[None, :], r0, delta, b)
        ok = kids is not None
        if ok and delta**2 * r0 >= r_min:
            kids, _, fail = _grow(X, tree, kids, r0 * delta, delta, b)
            ok = kids is not None
        scan.append({"delta": delta, "b": b, "ok": ok, "failure": fail})
        if ok:
            chosen = (delta, b)
            break
        delta /= 2
    if chosen is None:
        raise ValueError(f"no admissible dyadic delta; separation counts achieved: {scan}")

    delta, b = chosen
    centers = [root[None, :]]
    parents = [np.array([-1])]
    truncated = "resolution"
    while len(centers) <= max_depth:
        r = r0 * delta ** (len(centers) - 1)
        if r * delta < r_min:
            break
        kids, pars, fail = _grow(X, tree, centers[-1], r, delta, b)
        if kids is None:
            truncated = f"node {fail[0]} at depth {len(centers) - 1} found {fail[1]} < {b} children"
            break
        centers.append(kids)
        parents.append(pars)
    return BallTree(tuple(map(float, root)), r0, b, delta, centers, parents, truncated, scan)
