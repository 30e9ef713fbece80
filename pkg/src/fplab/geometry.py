"""Planar primitives: points, directions, dyadic indexing and slab tubes.

Projections are scalar: ``project(p, e) = <p, e>`` with ``e = (cos θ, sin θ)``,
``θ ∈ [0, π)``.  Dyadic intervals live on all of ℝ and carry signed indices,
so directions with ``θ > π/2`` need no remapping.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

# scaled values this close to an integer are snapped before flooring
SNAP_TOL = 1e-12


def dyadic_floor(values, n: int):
    """Floor of ``values * 2**n`` with the snapping guard.

    Works elementwise on arrays and returns ``int64``; a Python ``int`` is
    returned for scalar input.
    """
    if n < 0:
        raise ValueError(f"level must be non-negative, got {n}")
    scaled = np.ldexp(np.asarray(values, dtype=np.float64), n)
    nearest = np.rint(scaled)
    out = np.where(np.abs(scaled - nearest) <= SNAP_TOL, nearest, np.floor(scaled))
    out = out.astype(np.int64)
    if out.ndim == 0:
        return int(out)
    return out


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (0.0 <= self.x < 1.0 and 0.0 <= self.y < 1.0):
            raise ValueError(f"point ({self.x}, {self.y}) outside [0,1)^2")

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True)
class Direction:
    """A direction ``e ∈ S^1`` parameterized by ``θ ∈ [0, π)``."""

    theta: float
    unit: tuple[float, float] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (0.0 <= self.theta < math.pi):
            raise ValueError(f"theta must lie in [0, pi), got {self.theta}")
        object.__setattr__(self, "unit", (math.cos(self.theta), math.sin(self.theta)))

    @classmethod
    def from_angle(cls, angle: float) -> "Direction":
        """Canonicalize any angle to ``[0, π)``; antipodal directions coincide."""
        theta = math.fmod(angle, math.pi)
        if theta < 0:
            theta += math.pi
        if theta >= math.pi:
            theta = 0.0
        return cls(theta)

    @property
    def normal(self) -> tuple[float, float]:
        c, s = self.unit
        return (-s, c)


def angle_distance(a: float, b: float) -> float:
    """Distance between two directions on ``[0, π)`` viewed as a circle."""
    d = abs(a - b) % math.pi
    return min(d, math.pi - d)


class DyadicIndex2(NamedTuple):
    level: int
    i: int
    j: int

    def parent(self) -> "DyadicIndex2":
        if self.level == 0:
            raise ValueError("the unit square has no parent")
        return DyadicIndex2(self.level - 1, self.i >> 1, self.j >> 1)

    @property
    def side(self) -> float:
        return math.ldexp(1.0, -self.level)


class DyadicIndex1(NamedTuple):
    level: int
    j: int

    @property
    def bounds(self) -> tuple[float, float]:
        w = math.ldexp(1.0, -self.level)
        return self.j * w, (self.j + 1) * w


@dataclass(frozen=True)
class Tube:
    """The slab ``π_e^{-1}([j 2^-n, (j+1) 2^-n))``."""

    direction: Direction
    interval: DyadicIndex1

    @property
    def width(self) -> float:
        return math.ldexp(1.0, -self.interval.level)


PointLike = Union[Point, tuple, list, np.ndarray]


def project(p, e: Direction):
    """Scalar projection ``x cos θ + y sin θ``.

    ``p`` may be a single point or an ``(N, 2)`` array.  The arithmetic is the
    same elementwise multiply-then-add everywhere so that brute-force and
    sorted incidence counting see bit-identical values.
    """
    c, s = e.unit
    arr = np.asarray(tuple(p) if isinstance(p, Point) else p, dtype=np.float64)
    if arr.ndim == 1:
        return float(arr[0] * c + arr[1] * s)
    return arr[:, 0] * c + arr[:, 1] * s


def dyadic_cell(p, n: int) -> DyadicIndex2:
    x, y = tuple(p)
    return DyadicIndex2(n, dyadic_floor(x, n), dyadic_floor(y, n))


def dyadic_interval(v: float, n: int) -> DyadicIndex1:
    return DyadicIndex1(n, dyadic_floor(v, n))


def tube_contains(t: Tube, p) -> bool:
    return dyadic_interval(project(p, t.direction), t.interval.level) == t.interval
