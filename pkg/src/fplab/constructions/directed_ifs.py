"""Two-map iterated function systems whose splitting direction changes per step.

At step ``k`` the scheduled direction ``e = ξ_k`` selects the maps
``f_{e,±}(x) = λ x ± (1/2 - λ/2) e⊥`` with ``2 λ^t = 1``.  The two images of
``B(0, 1/2)`` are internally tangent to it and to each other when ``λ = 1/2``.
Offsets along ``e⊥`` make both images share one shadow under ``π_e``, so each
step scheduled on ``e`` leaves the ``π_e`` covering number unchanged.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..geometry import Direction
from ..intervals import cover_count

_TIE_DECIMALS = 12


def truncate_probabilities(prob: Sequence[float], keep: int) -> tuple[np.ndarray, float]:
    """Keep the first ``keep`` entries; fold the remaining mass into the last one.

    Returns the truncated vector and the folded tail mass.
    """
    p = np.asarray(prob, dtype=np.float64)
    if keep < 1:
        raise ValueError("keep at least one direction")
    if len(p) <= keep:
        return p / p.sum(), 0.0
    tail = float(p[keep:].sum())
    out = p[:keep].copy()
    out[-1] += tail
    return out / out.sum(), tail


def schedule_low_discrepancy(prob: Sequence[float], n: int) -> np.ndarray:
    """Deterministic direction schedule ``ξ_1..ξ_n`` (0-based indices).

    Step ``k`` picks the index maximizing ``p_i k - count_i``; ties go to the
    smallest index.
    """
    p = np.asarray(prob, dtype=np.float64)
    if p.ndim != 1 or len(p) == 0 or np.any(p <= 0):
        raise ValueError("prob must be a non-empty vector of positive entries")
    if abs(p.sum() - 1) > 1e-9:
        raise ValueError(f"prob sums to {p.sum()}, not 1")
    counts = np.zeros(len(p))
    out = np.empty(n, dtype=np.int64)
    for k in range(1, n + 1):
        i = int(np.argmax(np.round(p * k - counts, _TIE_DECIMALS)))
        out[k - 1] = i
        counts[i] += 1
    return out


def schedule_random(prob: Sequence[float], n: int, seed: int) -> np.ndarray:
    p = np.asarray(prob, dtype=np.float64)
    return np.random.default_rng(seed).choice(len(p), size=n, p=p / p.sum())


def schedule_hash(schedule) -> str:
    return hashlib.sha256(np.asarray(schedule, dtype=np.int64).tobytes()).hexdigest()[:16]


@dataclass
class DirectedIFSSpec:
    t: float
    directions: list
    prob: Sequence[float]
    schedule: Optional[np.ndarray] = None
    truncated_mass: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.t <= 1:
            raise ValueError(f"t must lie in (0, 1], got {self.t}")
        self.directions = [e if isinstance(e, Direction) else Direction(float(e)) for e in self.directions]
        self.prob = np.asarray(self.prob, dtype=np.float64)
        if len(self.prob) != len(self.directions):
            raise ValueError("one probability per direction")

    @property
    def lam(self) -> float:
        return 2.0 ** (-1.0 / self.t)

    def schedule_for(self, n: int) -> np.ndarray:
        if self.schedule is not None:
            if len(self.schedule) < n:
                raise ValueError(f"schedule shorter than depth {n}")
            return np.asarray(self.schedule[:n], dtype=np.int64)
        return schedule_low_discrepancy(self.prob, n)


@dataclass
class BallFamily:
    centers: np.ndarray
    radius: float
    depth: int
    schedule: np.ndarray

    def __len__(self):
        return len(self.centers)


def _offsets(spec: DirectedIFSSpec) -> np.ndarray:
    g = 0.5 - spec.lam / 2
    return np.array([[g * e.normal[0], g * e.normal[1]] for e in spec.directions])


def build_directed_ifs(spec: DirectedIFSSpec, n: int) -> BallFamily:
    """Stage ``E_n = S_{ξ_1} ∘ ... ∘ S_{ξ_n}(B(0, 1/2))`` as ``2^n`` balls of radius ``λ^n / 2``."""
    if n < 0:
        raise ValueError("depth must be non-negative")
    if n > 24 * spec.t + 1e-12:
        raise ValueError(f"depth {n} exceeds the 24 t memory cap")
    sched = spec.schedule_for(n)
    lam = spec.lam
    a = _offsets(spec)
    centers = np.zeros((1, 2))
    # apply the innermost map last-in: center = Σ_k λ^{k-1} (±a_{ξ_k})
    for k in range(n):
        step = lam**k * a[sched[k]]
        centers = np.concatenate([centers + step, centers - step])
    return BallFamily(centers, 0.5 * lam**n, n, sched)


def ifs_children(spec: DirectedIFSSpec, parent: BallFamily) -> BallFamily:
    """``E_{n+1}`` grown from ``E_n`` ball by ball (children of each parent ball)."""
    n = parent.depth
    sched = spec.schedule_for(n + 1)
    step = spec.lam**n * _offsets(spec)[sched[n]]
    centers = np.concatenate([parent.centers + step, parent.centers - step])
    return BallFamily(centers, parent.radius * spec.lam, n + 1, sched)


@dataclass
class ProjectionAudit:
    direction_index: int
    n: int
    n_i: int
    covering_count: int
    bound: int
    c: float

    @property
    def passed(self) -> bool:
        return self.covering_count <= self.c * self.bound


def directed_projection_audit(spec: DirectedIFSSpec, balls: BallFamily, i: int, c: float = 4.0) -> ProjectionAudit:
    """``N(π_{e_i}(E_n), λ^n)`` by merging projected ball shadows, against ``2^{n - n_i}``."""
    if not 0 <= i < len(spec.directions):
        raise ValueError(f"direction index {i} not in spec")
    e = spec.directions[i]
    n = balls.depth
    proj = balls.centers[:, 0] * e.unit[0] + balls.centers[:, 1] * e.unit[1]
    r = balls.radius
    count = cover_count(proj - r, proj + r, 2 * r)
    n_i = int(np.sum(balls.schedule[:n] == i))
    return ProjectionAudit(i, n, n_i, count, 2 ** (n - n_i), c)


@dataclass
class BallFamilyCheck:
    count_ok: bool
    disjoint: bool
    nested: bool
    radius_ok: bool

    @property
    def ok(self) -> bool:
        return self.count_ok and self.disjoint and self.nested and self.radius_ok


def check_ball_family(spec: DirectedIFSSpec, balls: BallFamily, parent: Optional[BallFamily] = None,
                      rtol: float = 1e-9) -> BallFamilyCheck:
    """Cardinality ``2^n``, pairwise interior-disjointness, nesting in the parent stage."""
    from scipy.spatial import cKDTree

    n = balls.depth
    r = balls.radius
    count_ok = len(balls) == 2**n
    radius_ok = math.isclose(r, 0.5 * spec.lam**n, rel_tol=1e-12)
    disjoint = True
    if len(balls) > 1:
        d, _ = cKDTree(balls.centers).query(balls.centers, k=2)
        disjoint = bool(d[:, 1].min() >= 2 * r * (1 - rtol))
    nested = True
    if parent is not None:
        half = len(parent)
        # children k and k + half descend from parent k
        for part in (balls.centers[:half], balls.centers[half:]):
            gap = np.hypot(*(part - parent.centers).T)
            nested &= bool(np.all(gap + r <= parent.radius * (1 + rtol)))
    elif n > 0:
        nested = bool(np.all(np.hypot(*balls.centers.T) + r <= 0.5 * (1 + rtol)))
    return BallFamilyCheck(count_ok, disjoint, nested, radius_ok)
