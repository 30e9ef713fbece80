"""Product Cantor measures aligned with the dyadic grid."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..measures import DyadicMeasure2
from ..regularity import PointSet

MAX_LEVEL = 24


@dataclass(frozen=True)
class ProductCantorSpec:
    """Keep the base-``B`` digits ``digits`` on x (and ``digits_y`` on y) at every stage."""

    base: int
    digits: Sequence[int]
    depth: int
    digits_y: Optional[Sequence[int]] = None

    def __post_init__(self):
        object.__setattr__(self, "digits", tuple(sorted(set(int(d) for d in self.digits))))
        dy = self.digits if self.digits_y is None else self.digits_y
        object.__setattr__(self, "digits_y", tuple(sorted(set(int(d) for d in dy))))
        if self.base < 2 or self.base & (self.base - 1):
            raise ValueError(f"base must be a power of 2 to align with dyadic cells, got {self.base}")
        for ds in (self.digits, self.digits_y):
            if not ds or ds[0] < 0 or ds[-1] >= self.base:
                raise ValueError(f"digits must be a non-empty subset of 0..{self.base - 1}")
        if self.depth < 0:
            raise ValueError("depth must be non-negative")
        if self.level > MAX_LEVEL:
            raise ValueError(f"depth * log2(base) = {self.level} exceeds {MAX_LEVEL}")

    @property
    def level(self) -> int:
        return self.depth * (self.base.bit_length() - 1)

    @property
    def dimension(self) -> float:
        return (math.log(len(self.digits)) + math.log(len(self.digits_y))) / math.log(self.base)

    @property
    def degenerate(self) -> bool:
        return self.dimension == 0


def _axis_indices(base: int, digits, depth: int) -> np.ndarray:
    idx = np.zeros(1, dtype=np.int64)
    d = np.asarray(digits, dtype=np.int64)
    for _ in range(depth):
        idx = (idx[:, None] * base + d[None, :]).ravel()
    return idx


def product_cantor_measure(spec: ProductCantorSpec) -> tuple[DyadicMeasure2, PointSet]:
    """Uniform measure on the stage-``depth`` cells, plus their centers."""
    xs = _axis_indices(spec.base, spec.digits, spec.depth)
    ys = _axis_indices(spec.base, spec.digits_y, spec.depth)
    cells = np.column_stack([np.repeat(xs, len(ys)), np.tile(ys, len(xs))])
    mu = DyadicMeasure2(spec.level, cells, np.full(len(cells), 1.0 / len(cells)))
    side = 2.0**-spec.level
    return mu, PointSet(mu.centers(), side, separated=True)


def four_corner(depth: int) -> ProductCantorSpec:
    """Digits {0, 3} in base 4 on both axes: the planar 1-dimensional four-corner set."""
    return ProductCantorSpec(4, (0, 3), depth)


def one_axis_cantor(depth: int) -> ProductCantorSpec:
    """Middle-half Cantor set on x times a single row: dimension 1/2."""
    return ProductCantorSpec(4, (0, 3), depth, digits_y=(0,))


def full_grid(level: int) -> ProductCantorSpec:
    return ProductCantorSpec(2, (0, 1), level)


def points_at_scale(mu: DyadicMeasure2, m: int) -> PointSet:
    """Centers of the level-``m`` cells charged by ``mu``; a ``2^-m``-separated set."""
    coarse = mu.coarsen(m)
    return PointSet(coarse.centers(), 2.0**-m, separated=True)
