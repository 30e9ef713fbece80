"""Dyadic measures, projection pushforwards, entropy and blow-ups.

Measures are sparse: only cells of positive mass are stored, as sorted
integer index arrays next to a mass array.  Entropies are in bits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_level
from .geometry import Direction, DyadicIndex1, DyadicIndex2, dyadic_floor, project

MASS_TOL = 1e-9
# Largest observed value of -m * (lhs - rhs) over ``calibration_suite()``
# (0.7751, reached by the four-corner measure), rounded up and frozen.
CHAIN_SLACK = 0.78


def unique_rows(keys: np.ndarray):
    """``np.unique(keys, axis=0, return_inverse=True)`` for integer arrays.

    Rows are packed into one int64 per row (order preserving) so the sort
    runs on scalars; falls back to the generic path when the packed range
    would overflow.
    """
    keys = np.asarray(keys)
    if keys.ndim == 1:
        return np.unique(keys, return_inverse=True)
    if len(keys) == 0 or keys.shape[1] == 0:
        return np.unique(keys, axis=0, return_inverse=True)
    lo = keys.min(axis=0)
    span = keys.max(axis=0) - lo + 1
    if math.prod(int(s) for s in span) >= 2**62:
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        return uniq, inv.ravel()
    packed = np.zeros(len(keys), dtype=np.int64)
    for c in range(keys.shape[1]):
        packed = packed * span[c] + (keys[:, c] - lo[c])
    u, first, inv = np.unique(packed, return_index=True, return_inverse=True)
    return keys[first], inv.ravel()


def _merge(keys: np.ndarray, masses: np.ndarray):
    """Sum masses over duplicate keys; drop non-positive mass; sort keys."""
    if len(keys) == 0:
        return keys, masses
    uniq, inv = unique_rows(keys)
    summed = np.bincount(inv.ravel(), weights=masses, minlength=len(uniq))
    keep = summed > 0
    return uniq[keep], summed[keep]


class DyadicMeasure2:
    """Probability mass on level-``n`` dyadic squares ``[i 2^-n, (i+1) 2^-n) x [j 2^-n, ...)``."""

    def __init__(self, level: int, cells, masses, *, normalized: bool = True):
        self.level = check_level(level)
        cells = np.asarray(cells, dtype=np.int64).reshape(-1, 2)
        masses = np.asarray(masses, dtype=np.float64).ravel()
        if len(cells) != len(masses):
            raise ValueError("cells and masses differ in length")
        if np.any(masses < 0):
            raise ValueError("masses must be non-negative")
        self.cells, self.masses = _merge(cells, masses)
        if normalized and abs(math.fsum(self.masses) - 1.0) > MASS_TOL:
            raise ValueError(f"masses sum to {math.fsum(self.masses)!r}, not 1")
        self.cells.setflags(write=False)
        self.masses.setflags(write=False)

    @classmethod
    def from_dict(cls, level: int, masses: dict) -> "DyadicMeasure2":
        keys = [(k.i, k.j) if isinstance(k, DyadicIndex2) else tuple(k) for k in masses]
        return cls(level, keys, list(masses.values()))

    def to_dict(self) -> dict:
        return {DyadicIndex2(self.level, int(i), int(j)): float(m)
                for (i, j), m in zip(self.cells, self.masses)}

    def __len__(self):
        return len(self.masses)

    def __repr__(self):
        return f"DyadicMeasure2(level={self.level}, support={len(self)})"

    def __eq__(self, other):
        return (isinstance(other, DyadicMeasure2) and self.level == other.level
                and np.array_equal(self.cells, other.cells) and np.array_equal(self.masses, other.masses))

    @property
    def total(self) -> float:
        return math.fsum(self.masses)

    def centers(self) -> np.ndarray:
        return np.ldexp(self.cells + 0.5, -self.level)

    def coarsen(self, n: int) -> "DyadicMeasure2":
        if n > self.level:
            raise ValueError(f"cannot coarsen level {self.level} to finer level {n}")
        shift = self.level - n
        return DyadicMeasure2(n, self.cells >> shift, self.masses, normalized=False)

    def refine(self) -> "DyadicMeasure2":
        """Split every cell into its four children with equal mass."""
        kids = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=np.int64)
        cells = (2 * self.cells[:, None, :] + kids[None, :, :]).reshape(-1, 2)
        return DyadicMeasure2(self.level + 1, cells, np.repeat(self.masses / 4, 4), normalized=False)

    def mass_of(self, Q: DyadicIndex2) -> float:
        if Q.level > self.level:
            raise ValueError("cube finer than the measure")
        par = self.cells >> (self.level - Q.level)
        hit = (par[:, 0] == Q.i) & (par[:, 1] == Q.j)
        return math.fsum(self.masses[hit])


class DyadicMeasure1:
    """Probability mass on level-``n`` dyadic intervals of ℝ (signed indices)."""

    def __init__(self, level: int, intervals, masses, *, normalized: bool = True):
        self.level = check_level(level)
        keys = np.asarray(intervals, dtype=np.int64).reshape(-1, 1)
        masses = np.asarray(masses, dtype=np.float64).ravel()
        if len(keys) != len(masses):
            raise ValueError("intervals and masses differ in length")
        if np.any(masses < 0):
            raise ValueError("masses must be non-negative")
        keys, self.masses = _merge(keys, masses)
        self.intervals = keys.ravel()
        if normalized and abs(math.fsum(self.masses) - 1.0) > MASS_TOL:
            raise ValueError(f"masses sum to {math.fsum(self.masses)!r}, not 1")
        self.intervals.setflags(write=False)
        self.masses.setflags(write=False)

    @classmethod
    def from_dict(cls, level: int, masses: dict) -> "DyadicMeasure1":
        keys = [k.j if isinstance(k, DyadicIndex1) else int(k) for k in masses]
        return cls(level, keys, list(masses.values()))

    def to_dict(self) -> dict:
        return {DyadicIndex1(self.level, int(j)): float(m) for j, m in zip(self.intervals, self.masses)}

    def __len__(self):
        return len(self.masses)

    def __repr__(self):
        return f"DyadicMeasure1(level={self.level}, support={len(self)})"

    @property
    def total(self) -> float:
        return math.fsum(self.masses)

    def coarsen(self, n: int) -> "DyadicMeasure1":
        if n > self.level:
            raise ValueError(f"cannot coarsen level {self.level} to finer level {n}")
        return DyadicMeasure1(n, self.intervals >> (self.level - n), self.masses, normalized=False)


@dataclass(frozen=True)
class EntropyValue:
    n: int
    H: float
    normalized: float


@dataclass(frozen=True)
class ChainMargin:
    m: int
    n: int
    lhs: float
    rhs_sum: float
    margin: float
    slack: float

    @property
    def passed(self) -> bool:
        return self.margin >= -self.slack / self.m


def measure_from_points(P, n: int) -> DyadicMeasure2:
    """Uniform empirical measure on ``P``, discretized to level-``n`` cells."""
    n = check_level(n, "n", 1)
    X = P.points if hasattr(P, "points") else np.asarray(P, dtype=np.float64).reshape(-1, 2)
    if len(X) == 0:
        raise ValueError("cannot build a measure from an empty point set")
    cells = dyadic_floor(X, n)
    return DyadicMeasure2(n, cells, np.full(len(X), 1.0 / len(X)))


def _shadow_split(mu: DyadicMeasure2, e: Direction, n: int):
    """Spread each cell's mass over the level-``n`` intervals its shadow meets,
    proportionally to overlap length."""
    c, s = e.unit
    side = 2.0**-mu.level
    half = 0.5 * side * (abs(c) + abs(s))
    mid = project(mu.centers(), e)
    lo, hi = mid - half, mid + half
    j0 = dyadic_floor(lo, n)
    j1 = dyadic_floor(hi, n)
    keys, weights = [], []
    w = 2.0**-n
    span = hi - lo
    for off in range(int((j1 - j0).max()) + 1):
        j = j0 + off
        ov = np.clip(np.minimum(hi, (j + 1) * w) - np.maximum(lo, j * w), 0.0, None)
        sel = (j <= j1) & (ov > 0)
        keys.append(j[sel])
        weights.append(mu.masses[sel] * ov[sel] / span[sel])
    keys = np.concatenate(keys)
    weights = np.concatenate(weights)
    return keys, weights


def project_measure(mu: DyadicMeasure2, e: Direction, n: int, *, split: bool = False) -> DyadicMeasure1:
    """Pushforward ``π_e μ`` at level ``n``.

    By default each cell's mass goes to the interval containing the
    projection of the cell center.  ``split=True`` instead spreads mass over
    every interval the cell's shadow overlaps (sensitivity variant).
    """
    n = check_level(n)
    if n > mu.level:
        raise ValueError(f"projection level {n} finer than measure level {mu.level}")
    if split:
        keys, weights = _shadow_split(mu, e, n)
        return DyadicMeasure1(n, keys, weights)
    return DyadicMeasure1(n, dyadic_floor(project(mu.centers(), e), n), mu.masses)


def _entropy_bits(masses) -> float:
    p = np.asarray(masses, dtype=np.float64)
    p = p[p > 0]
    return max(0.0, -math.fsum(p * np.log2(p)))


def entropy(mu, n: int) -> EntropyValue:
    """``H(μ, D_n)`` in bits, and ``H_n = H / n``."""
    n = check_level(n, "n", 1)
    if n > mu.level:
        raise ValueError(f"partition level {n} finer than measure level {mu.level}")
    coarse = mu.coarsen(n) if n < mu.level else mu
    H = _entropy_bits(coarse.masses)
    return EntropyValue(n, H, H / n)


def blow_up(mu: DyadicMeasure2, Q: DyadicIndex2) -> DyadicMeasure2:
    """``μ^Q``: restrict to ``Q``, renormalize, rescale ``Q`` onto ``[0,1)^2``."""
    if Q.level > mu.level:
        raise ValueError("cube finer than the measure")
    shift = mu.level - Q.level
    par = mu.cells >> shift
    hit = (par[:, 0] == Q.i) & (par[:, 1] == Q.j)
    mass = math.fsum(mu.masses[hit])
    if mass <= 0:
        raise ValueError(f"mu(Q) = 0 for Q = {Q}")
    local = mu.cells[hit] - (np.array([Q.i, Q.j], dtype=np.int64) << shift)
    return DyadicMeasure2(shift, local, mu.masses[hit] / mass)


def mean_direction_entropy(mu: DyadicMeasure2, Omega, n: int) -> float:
    """Mean over ``e ∈ Ω`` of ``H_n(π_e μ)``, reduced in direction order."""
    dirs = list(Omega)
    if not dirs:
        raise ValueError("direction set is empty")
    vals = direction_entropies(mu, dirs, n)
    return math.fsum(vals) / len(vals)


def direction_entropies(mu: DyadicMeasure2, directions, n: int) -> list:
    return [entropy(project_measure(mu, e, n), n).normalized for e in directions]


def _scale_entropy_sum(mu: DyadicMeasure2, e: Direction, m: int, q: int) -> float:
    """``Σ_{Q ∈ D_q} μ(Q) H(π_e μ^Q, D_m)`` in one grouped pass."""
    shift = mu.level - q
    parents = mu.cells >> shift
    local = mu.cells - (parents << shift)
    proj = project(np.ldexp(local + 0.5, -shift), e)
    keys = np.column_stack([parents, dyadic_floor(proj, m)])
    groups, inv = unique_rows(keys)
    w = np.bincount(inv.ravel(), weights=mu.masses)
    _, pinv = unique_rows(groups[:, :2])
    parent_mass = np.bincount(pinv.ravel(), weights=w)[pinv.ravel()]
    pos = w > 0
    return -math.fsum(w[pos] * np.log2(w[pos] / parent_mass[pos]))


def chain_inequality_margin(mu: DyadicMeasure2, e: Direction, m: int, n: int, slack: float) -> ChainMargin:
    """Compare ``H_n(π_e μ)`` with the multiscale average of blow-up entropies.

    ``rhs = (m/n) Σ_{k < n//m} Σ_{Q ∈ D_km} μ(Q) H_m(π_e μ^Q)``; the check
    passes when ``lhs - rhs >= -slack/m``.
    """
    m = check_level(m, "m", 1)
    n = check_level(n, "n", 1)
    if not m < n <= mu.level:
        raise ValueError(f"need m < n <= level, got m={m}, n={n}, level={mu.level}")
    lhs = entropy(project_measure(mu, e, n), n).normalized
    total = math.fsum(_scale_entropy_sum(mu, e, m, k * m) for k in range(n // m))
    rhs = total / n
    return ChainMargin(m, n, lhs, rhs, lhs - rhs, slack)


def calibration_suite() -> dict:
    """Measures used to calibrate the chain-inequality slack: uniform, Dirac, four-corner."""
    from .constructions.cantor import four_corner, full_grid, product_cantor_measure

    return {
        "uniform": product_cantor_measure(full_grid(8))[0],
        "dirac": DyadicMeasure2(12, [[5, 7]], [1.0]),
        "four-corner": product_cantor_measure(four_corner(6))[0],
    }


def calibrate_chain_slack(measures=None, ms=(2, 3, 4), n_directions: int = 8) -> tuple[float, list]:
    """Worst ``-m * margin`` over all ``(μ, e, m, n)`` with ``m < n <= μ.level``.

    Returns the worst value (0 when nothing is violated) and every evaluated
    ``(name, theta, ChainMargin)`` triple.
    """
    if measures is None:
        measures = calibration_suite()
    dirs = [Direction(k * math.pi / n_directions) for k in range(n_directions)]
    worst, rows = 0.0, []
    for name, mu in measures.items():
        for m in ms:
            for n in range(m + 1, mu.level + 1):
                for e in dirs:
                    c = chain_inequality_margin(mu, e, m, n, CHAIN_SLACK)
                    rows.append((name, e.theta, c))
                    worst = max(worst, -c.margin * m)
    return worst, rows


def heavy_tubes(mu: DyadicMeasure2, e: Direction, m: int, s: float):
    """Tubes over level-``m`` intervals ``Q`` with ``π_e μ(Q) >= 2^{-ms}``.

    At most ``2^{ms}`` intervals can clear the threshold since ``π_e μ`` is a
    probability measure.
    """
    from .incidence import TubeFamily

    if not 0 < s <= 1:
        raise ValueError(f"s must lie in (0, 1], got {s}")
    nu = project_measure(mu, e, m)
    thresh = 2.0 ** (-m * s) * (1 - 1e-12)
    js = nu.intervals[nu.masses >= thresh]
    return TubeFamily(m, [e], [np.array(js, dtype=np.int64)])
