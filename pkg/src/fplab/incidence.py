"""Point-tube incidences: brute-force oracle, sorted fast path, bound audits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .geometry import Direction, DyadicIndex1, Tube, dyadic_floor, project
from .regularity import DirectionSet, PointSet


@dataclass
class TubeFamily:
    """Level-``level`` tubes grouped by direction.

    ``offsets[k]`` holds the interval indices ``j`` of the tubes in direction
    ``directions[k]``.  Iteration yields ``Tube`` objects in that order.
    """

    level: int
    directions: list
    offsets: list

    def __post_init__(self):
        if len(self.directions) != len(self.offsets):
            raise ValueError("one offset array per direction required")
        self.offsets = [np.asarray(o, dtype=np.int64).ravel() for o in self.offsets]

    @property
    def delta(self) -> float:
        return 2.0**-self.level

    def __len__(self):
        return int(sum(len(o) for o in self.offsets))

    def __iter__(self):
        for e, js in zip(self.directions, self.offsets):
            for j in js:
                yield Tube(e, DyadicIndex1(self.level, int(j)))

    @property
    def tubes(self) -> list:
        return list(self)

    @classmethod
    def from_tubes(cls, tubes: Iterable[Tube], level: int | None = None) -> "TubeFamily":
        tubes = list(tubes)
        if level is None:
            if not tubes:
                raise ValueError("level required for an empty family")
            level = tubes[0].interval.level
        if any(t.interval.level != level for t in tubes):
            raise ValueError("all tubes in a family share one level")
        groups: dict = {}
        for t in tubes:
            groups.setdefault(t.direction, []).append(t.interval.j)
        dirs = list(groups)
        return cls(level, dirs, [groups[e] for e in dirs])

    def merged(self, other: "TubeFamily") -> "TubeFamily":
        if other.level != self.level:
            raise ValueError("tube levels differ")
        return TubeFamily(self.level, self.directions + other.directions, self.offsets + other.offsets)


@dataclass
class IncidenceResult:
    count: int
    per_tube: np.ndarray
    method: str


@dataclass
class BoundAudit:
    delta: float
    t: float
    alpha: float
    tubes: int
    measured: int
    bound_value: float

    @property
    def ratio(self) -> float:
        return self.measured / self.bound_value


@dataclass
class BoundSweep:
    audits: list
    slope: float
    constant: float
    slope_tolerance: float = 0.1
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return abs(self.slope) <= self.slope_tolerance


def _points(P) -> np.ndarray:
    return P.points if isinstance(P, PointSet) else np.asarray(P, dtype=np.float64).reshape(-1, 2)


def incidences_brute(P, T: TubeFamily, block: int = 1 << 20) -> IncidenceResult:
    """Every (point, tube) membership evaluated independently."""
    X = _points(P)
    dirs, js = [], []
    for e, o in zip(T.directions, T.offsets):
        dirs.extend([e.unit] * len(o))
        js.append(o)
    if not dirs or len(X) == 0:
        return IncidenceResult(0, np.zeros(len(T), dtype=np.int64), "brute")
    U = np.asarray(dirs)
    J = np.concatenate(js)
    per_tube = np.empty(len(J), dtype=np.int64)
    step = max(1, block // len(X))
    for a in range(0, len(J), step):
        b = min(len(J), a + step)
        proj = X[:, 0:1] * U[a:b, 0][None, :] + X[:, 1:2] * U[a:b, 1][None, :]
        per_tube[a:b] = (dyadic_floor(proj, T.level) == J[a:b][None, :]).sum(axis=0)
    return IncidenceResult(int(per_tube.sum()), per_tube, "brute")


def incidences_grid(P, T: TubeFamily) -> IncidenceResult:
    """Same count as ``incidences_brute`` via one sort per direction.

    Projections of ``P`` onto each direction are mapped to their interval
    index and sorted once; each tube is then a binary range search.
    """
    X = _points(P)
    per = []
    for e, o in zip(T.directions, T.offsets):
        if len(o) == 0:
            continue
        keys = np.sort(dyadic_floor(project(X, e), T.level)) if len(X) else np.empty(0, dtype=np.int64)
        per.append(np.searchsorted(keys, o, "right") - np.searchsorted(keys, o, "left"))
    per_tube = np.concatenate(per).astype(np.int64) if per else np.zeros(0, dtype=np.int64)
    return IncidenceResult(int(per_tube.sum()), per_tube, "grid")


def incidence_bound(delta: float, t: float, alpha: float, tube_count: int) -> float:
    """``δ^{-t} (max{1, δ^{t-α}} log2(1/δ))^{1/2} |T|^{1/2} + |T|`` (no implied constant)."""
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not (0 < t <= 1 and 0 < alpha <= 1):
        raise ValueError("t and alpha must lie in (0, 1]")
    root = math.sqrt(max(1.0, delta ** (t - alpha)) * math.log2(1.0 / delta))
    return delta**-t * root * math.sqrt(tube_count) + tube_count


def occupied_tubes(P, Omega, m: int) -> TubeFamily:
    """Every level-``m`` tube, in every direction of ``Ω``, that meets ``P``."""
    X = _points(P)
    dirs = list(Omega)
    return TubeFamily(m, dirs, [np.unique(dyadic_floor(project(X, e), m)) for e in dirs])


def audit_incidence_bound(P: PointSet, Omega: DirectionSet, tubes: TubeFamily, t: float) -> BoundAudit:
    """Measured ``I(P, T)`` against the constant-free incidence bound.

    ``P`` and ``Ω`` must carry (δ, t)- and (δ, α)-set certificates.
    """
    if getattr(P, "cert", None) is None:
        raise ValueError("point set carries no (delta, t)-set certificate")
    if getattr(Omega, "cert", None) is None:
        raise ValueError("direction set carries no (delta, alpha)-set certificate")
    delta = tubes.delta
    measured = incidences_grid(P, tubes).count
    bound = incidence_bound(delta, t, Omega.alpha, len(tubes))
    return BoundAudit(delta, t, Omega.alpha, len(tubes), measured, bound)


def fit_log_slope(x, y) -> float:
    """Least-squares slope of ``log2 y`` against ``log2 x``."""
    slope, _ = np.polyfit(np.log2(np.asarray(x, float)), np.log2(np.asarray(y, float)), 1)
    return float(slope)


def sweep_incidence_bound(
    points_at: Callable[[int], PointSet],
    directions_at: Callable[[int], DirectionSet],
    levels: Iterable[int],
    t: float,
    tubes_at: Callable[[PointSet, DirectionSet, int], TubeFamily] = occupied_tubes,
    slope_tolerance: float = 0.1,
) -> BoundSweep:
    """Audit the incidence bound at ``δ = 2^-m`` for each level and fit the
    drift of ``log(ratio)`` against ``log(1/δ)``."""
    audits = []
    for m in levels:
        P = points_at(m)
        Om = directions_at(m)
        audits.append(audit_incidence_bound(P, Om, tubes_at(P, Om, m), t))
    ratios = [a.ratio for a in audits]
    slope = fit_log_slope([1 / a.delta for a in audits], ratios)
    return BoundSweep(audits, slope, max(ratios), slope_tolerance)
