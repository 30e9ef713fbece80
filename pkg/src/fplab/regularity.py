"""Separation, (δ, s)-set certification, direction sets and AD-regularity audits.

Every check here is exhaustive: all centers, all tested radii.  Ball counts
use closed balls and a KD-tree, which keeps the cost near ``N * |ball|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree

from ._validation import check_level, check_points
from .geometry import Direction

if TYPE_CHECKING:
    from .measures import DyadicMeasure2

# relative slack on distance comparisons (float noise on computed coordinates)
SEP_RTOL = 1e-9
_BALL_RTOL = 1e-12


class CertificationError(ValueError):
    """A construction failed its own certificate; the report is attached."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


@dataclass
class DeltaSetReport:
    s: float
    delta: float
    worst_constant: float
    worst_witness: tuple
    pass_at: float
    radii: list = field(default_factory=list)
    metric: str = "euclidean"
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.worst_constant <= self.pass_at

    def rows(self):
        """``(quantity, value, witness)`` rows for the report CSV."""
        center, radius = self.worst_witness
        wit = f"center={center};r={radius!r}"
        return [
            ("s", self.s, ""),
            ("delta", self.delta, ""),
            ("worst_constant", self.worst_constant, wit),
            ("pass_at", self.pass_at, ""),
            ("passed", int(self.passed), ""),
        ]


@dataclass
class PointSet:
    """A finite sample of a planar set at resolution ``delta``."""

    points: np.ndarray
    delta: float
    separated: bool = False
    cert: Optional[DeltaSetReport] = None

    def __post_init__(self):
        self.points = check_points(self.points, allow_empty=True)
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    def __len__(self):
        return len(self.points)


@dataclass
class DirectionSet:
    directions: list
    delta: float
    alpha: float
    cert: DeltaSetReport
    schedule: list = field(default_factory=list)

    @property
    def thetas(self) -> np.ndarray:
        return np.array([e.theta for e in self.directions], dtype=np.float64)

    def __len__(self):
        return len(self.directions)

    def __iter__(self):
        return iter(self.directions)

    @property
    def size_constant(self) -> float:
        """``|Ω| / δ^{-α}``, the cardinality constant."""
        return len(self.directions) * self.delta**self.alpha


@dataclass
class RegularityReport:
    t: float
    scales: list
    lower_constant: float
    upper_constant: float
    samples: int
    per_scale_lower: list = field(default_factory=list)
    per_scale_upper: list = field(default_factory=list)
    note: str = ""

    @property
    def regular(self) -> bool:
        return bool(self.scales) and math.isfinite(self.lower_constant) and math.isfinite(self.upper_constant)

    @property
    def constant(self) -> float:
        return max(self.lower_constant, self.upper_constant)

    def passes(self, C: float) -> bool:
        return self.regular and self.constant <= C


def _as_array(P) -> np.ndarray:
    return P.points if isinstance(P, PointSet) else check_points(P, allow_empty=True, unit_square=False)


def is_delta_separated(P, delta: float) -> bool:
    if not delta > 0:
        raise ValueError("delta must be positive")
    X = _as_array(P)
    if len(X) < 2:
        return True
    d, _ = cKDTree(X).query(X, k=2)
    return bool(d[:, 1].min() >= delta * (1 - SEP_RTOL))


def maximal_separated_subset(P, delta: float) -> PointSet:
    """Greedy maximal δ-separated subset, scanning points in (x, y) order.

    A point is rejected iff it lies at distance ``< delta`` from an already
    selected one, so the output is separated and every rejected point is
    within ``delta`` of it.
    """
    X = _as_array(P)
    return PointSet(X[_greedy_net_indices(X, delta)], delta, separated=True)


def _greedy_net_indices(X: np.ndarray, delta: float) -> np.ndarray:
    if not delta > 0:
        raise ValueError("delta must be positive")
    if len(X) == 0:
        return np.empty(0, dtype=np.int64)
    order = np.lexsort((X[:, 1], X[:, 0]))
    thresh = delta * (1 - SEP_RTOL)
    thresh2 = thresh * thresh
    cells = np.floor(X / delta).astype(np.int64)
    buckets: dict = {}
    chosen = []
    for idx in order:
        cx, cy = cells[idx]
        px, py = X[idx]
        ok = True
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for q in buckets.get((cx + dx, cy + dy), ()):
                    qx, qy = X[q]
                    if (px - qx) ** 2 + (py - qy) ** 2 < thresh2:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            chosen.append(idx)
            buckets.setdefault((cx, cy), []).append(idx)
    return np.asarray(chosen, dtype=np.int64)


def _test_radii(delta: float) -> np.ndarray:
    kmax = max(0, math.ceil(math.log2(1.0 / delta) - 1e-12)) if delta < 1 else 0
    return delta * np.exp2(np.arange(kmax + 1))


def delta_s_set_check(P, delta: float, s: float, C: float) -> DeltaSetReport:
    """Worst ``|X ∩ B(x, r)| / (r/δ)^s`` over centers ``x ∈ X`` and dyadic radii.

    Centers are restricted to ``X``; a ball centered anywhere is contained in
    a ball of twice the radius centered in ``X``, so the reported constant
    under-tests the all-centers definition by at most ``2^s``.
    """
    if not 0 < s <= 2:
        raise ValueError(f"s must lie in (0, 2], got {s}")
    X = _as_array(P)
    if len(X) == 0:
        raise ValueError("empty point set")
    if not is_delta_separated(X, delta):
        raise ValueError(f"point set is not {delta}-separated; (delta, s) report would be meaningless")
    tree = cKDTree(X)
    radii = _test_radii(delta)
    worst, witness = -1.0, None
    for r in radii:
        counts = np.asarray(tree.query_ball_point(X, r * (1 + _BALL_RTOL), return_length=True))
        ratio = counts / (r / delta) ** s
        k = int(np.argmax(ratio))
        if ratio[k] > worst:
            worst, witness = float(ratio[k]), (tuple(map(float, X[k])), float(r))
    return DeltaSetReport(
        s=s, delta=delta, worst_constant=worst, worst_witness=witness, pass_at=C,
        radii=radii.tolist(),
        note="centers restricted to the set; all-center constant is at most 2^s times larger",
    )


def certify(P: PointSet, s: float, C: float) -> PointSet:
    """Attach a (δ, s)-set certificate to ``P`` at its own resolution."""
    P.cert = delta_s_set_check(P, P.delta, s, C)
    P.separated = True
    return P


def _angle_delta_s_check(thetas: np.ndarray, delta: float, s: float, C: float) -> DeltaSetReport:
    th = np.sort(np.asarray(thetas, dtype=np.float64))
    n = len(th)
    if n == 0:
        raise ValueError("empty direction set")
    if n > 1:
        gaps = np.diff(np.append(th, th[0] + math.pi))
        if gaps.min() < delta * (1 - SEP_RTOL):
            raise ValueError(f"direction set is not {delta}-separated in angle")
    ext = np.concatenate([th - math.pi, th, th + math.pi])
    radii = _test_radii(delta)
    worst, witness = -1.0, None
    for r in radii:
        rr = r * (1 + _BALL_RTOL)
        if 2 * rr >= math.pi:
            counts = np.full(n, n)
        else:
            counts = np.searchsorted(ext, th + rr, "right") - np.searchsorted(ext, th - rr, "left")
        ratio = counts / (r / delta) ** s
        k = int(np.argmax(ratio))
        if ratio[k] > worst:
            worst, witness = float(ratio[k]), (float(th[k]), float(r))
    return DeltaSetReport(
        s=s, delta=delta, worst_constant=worst, worst_witness=witness, pass_at=C,
        radii=radii.tolist(), metric="angle",
        note="angle metric on [0,pi); chordal distance differs by at most pi/2",
    )


def direction_set_uniform(m: int, C2: float = 1.0, C1: float = 4.0) -> DirectionSet:
    """``θ_k = k π 2^-m`` for ``0 <= k < 2^m``, certified as a (2^-m, 1)-set."""
    m = check_level(m, "m", 1)
    thetas = np.arange(2**m) * (math.pi / 2**m)
    delta = 2.0**-m
    cert = _angle_delta_s_check(thetas, delta, 1.0, C1)
    ds = DirectionSet([Direction(float(t)) for t in thetas], delta, 1.0, cert, schedule=[2] * m)
    if ds.size_constant < C2:
        raise CertificationError(f"|Omega| = {len(ds)} below C2 * 2^m", cert)
    return ds


def cantor_keep_schedule(m: int, alpha: float) -> list:
    """Per-level keep counts ``b_l ∈ {1, 2}`` with ``prod b_l = 2^ceil(l α)``."""
    doublings = [math.ceil(l * alpha - 1e-12) for l in range(m + 1)]
    return [2 ** (doublings[l] - doublings[l - 1]) for l in range(1, m + 1)]


def direction_set_cantor(m: int, alpha: float, C: float = 8.0) -> DirectionSet:
    """Cantor-like (2^-m, α)-set of angles in ``[0, π)``.

    Each of ``m`` binary refinement levels either keeps both halves or only
    the left one; levels are chosen so the cardinality after level ``l`` is
    ``2^ceil(l α)``.  Angles are the left endpoints of the surviving
    intervals.
    """
    m = check_level(m, "m", 1)
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    schedule = cantor_keep_schedule(m, alpha)
    offsets = np.zeros(1, dtype=np.int64)
    for b in schedule:
        offsets = (2 * offsets[:, None] + np.arange(b)[None, :]).ravel()
    thetas = np.sort(offsets) * (math.pi / 2**m)
    delta = 2.0**-m
    cert = _angle_delta_s_check(thetas, delta, alpha, C)
    if not cert.passed:
        raise CertificationError(
            f"Cantor direction set failed (delta, alpha)-check: constant {cert.worst_constant:.3f} > {C}", cert)
    return DirectionSet([Direction(float(t)) for t in thetas], delta, alpha, cert, schedule=schedule)


def set_diameter(X: np.ndarray) -> float:
    if len(X) < 2:
        return 0.0
    try:
        V = X[ConvexHull(X).vertices]
    except (QhullError, ValueError):
        # collinear: the extremes along the principal axis realise the diameter
        c = X - X.mean(axis=0)
        _, _, vt = np.linalg.svd(c, full_matrices=False)
        proj = c @ vt[0]
        V = X[[int(np.argmin(proj)), int(np.argmax(proj))]]
    d = np.sqrt(((V[:, None, :] - V[None, :, :]) ** 2).sum(-1))
    return float(d.max())


def ad_regularity_audit(mu: "DyadicMeasure2", t: float, samples: int = 64) -> RegularityReport:
    """Tightest ``C`` with ``r^t / C <= μ(B(x, r)) <= C r^t`` over sampled centers.

    Centers are support-cell centers chosen evenly in index order; radii are
    ``2^k 2^-n`` from ``2 * 2^-n`` up to the support diameter.
    """
    if not 0 < t <= 2:
        raise ValueError(f"t must lie in (0, 2], got {t}")
    if len(mu.masses) == 0:
        raise ValueError("measure has empty support")
    centers = mu.centers()
    masses = mu.masses
    n = mu.level
    diam = set_diameter(centers)
    side = 2.0**-n
    radii = []
    r = 2 * side
    while r <= diam * (1 + 1e-12):
        radii.append(r)
        r *= 2
    K = len(centers)
    picks = np.unique((np.arange(min(samples, K)) * K) // min(samples, K))
    if not radii:
        return RegularityReport(t, [], math.inf, math.inf, len(picks),
                                note="support diameter below the smallest admissible radius; not regular")
    tree = cKDTree(centers)
    lower, upper = [], []
    for r in radii:
        balls = tree.query_ball_point(centers[picks], r * (1 + _BALL_RTOL))
        ball_mass = np.array([masses[b].sum() for b in balls])
        ratio = ball_mass / r**t
        upper.append(float(ratio.max()))
        lower.append(float((1.0 / ratio).max()))
    return RegularityReport(
        t=t, scales=radii, lower_constant=max(1.0, max(lower)), upper_constant=max(1.0, max(upper)),
        samples=len(picks), per_scale_lower=lower, per_scale_upper=upper,
    )
