"""Cantor sets rich in arithmetic progressions, and their sumsets.

Stage ``k`` is ``F_k = Σ_{i<=k} δ_i [N_i] + [0, δ_k]`` with
``c_k = 1/(N0 + k)``, ``N_k = ceil((N0 + k)^{t/2})``, ``δ_k = Π c_i`` and
``P_k = Π N_i``.  Interval endpoints are kept as integers in units of
``δ_k`` so merging and containment are exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..intervals import cover_count, minkowski_sum

ENUMERATION_LIMIT = 10**7
_INT64_SAFE = 2**62


def _ceil_power(base: int, expo: float) -> int:
    v = base**expo
    r = round(v)
    # an exact integer power must not be bumped up by rounding noise
    if abs(v - r) <= 1e-9 * max(1.0, v):
        return int(r)
    return math.ceil(v)


def _ceil_power_array(bases: np.ndarray, expo: float) -> np.ndarray:
    v = np.power(bases.astype(np.float64), expo)
    r = np.rint(v)
    return np.where(np.abs(v - r) <= 1e-9 * np.maximum(1.0, v), r, np.ceil(v))


@dataclass(frozen=True)
class ArithCantorSpec:
    N0: int
    t: float

    def __post_init__(self):
        if self.N0 < 1:
            raise ValueError("N0 must be a positive integer")
        if not 0 < self.t <= 2:
            raise ValueError(f"t must lie in (0, 2], got {self.t}")

    def c(self, k: int) -> Fraction:
        return Fraction(1, self.N0 + k)

    def N(self, k: int) -> int:
        return _ceil_power(self.N0 + k, self.t / 2)

    def check(self, k: int) -> None:
        if self.N(k) >= self.N0 + k:
            raise ValueError(
                f"precondition c_k * N_k < 1 violated at k={k}: N_k = {self.N(k)}, 1/c_k = {self.N0 + k}")


@dataclass(frozen=True)
class ArithCantorParams:
    k: int
    c: Fraction
    N: int
    log2_delta: float
    log2_P: float
    P: int
    inv_delta: int

    @property
    def delta(self) -> float:
        return 2.0**self.log2_delta

    @property
    def delta_exact(self) -> Fraction:
        return Fraction(1, self.inv_delta)


def arith_cantor_params(spec: ArithCantorSpec, k: int) -> ArithCantorParams:
    """``(c_k, N_k, δ_k, P_k)``; exact integers for ``P_k`` and ``1/δ_k``."""
    if k < 1:
        raise ValueError("k >= 1")
    P, inv, lp, ld = 1, 1, 0.0, 0.0
    for i in range(1, k + 1):
        spec.check(i)
        Ni = spec.N(i)
        P *= Ni
        inv *= spec.N0 + i
        lp += math.log2(Ni)
        ld -= math.log2(spec.N0 + i)
    return ArithCantorParams(k, spec.c(k), spec.N(k), ld, lp, P, inv)


@dataclass
class ScaledIntervals:
    """Closed intervals ``[lo/denom, hi/denom]`` with integer endpoints."""

    lo: np.ndarray
    hi: np.ndarray
    denom: int

    def __len__(self):
        return len(self.lo)

    def as_float(self) -> tuple[np.ndarray, np.ndarray]:
        return self.lo / self.denom, self.hi / self.denom

    def rescale(self, factor: int) -> "ScaledIntervals":
        return ScaledIntervals(self.lo * factor, self.hi * factor, self.denom * factor)

    @property
    def total_length(self) -> Fraction:
        return Fraction(int((self.hi - self.lo).sum()), self.denom)


def arith_cantor_intervals(spec: ArithCantorSpec, k: int) -> ScaledIntervals:
    """``F_k`` as disjoint merged intervals, in units of ``δ_k``.

    The ``N_k`` level-``k`` pieces above each level-``(k-1)`` offset abut and
    merge into one interval of length ``N_k δ_k``; distinct offsets are at
    least ``δ_{k-1} > N_k δ_k`` apart, so no further merging happens.
    """
    prm = arith_cantor_params(spec, k)
    P_prev = prm.P // prm.N
    if P_prev > ENUMERATION_LIMIT:
        raise ValueError(
            f"P_(k-1) = {P_prev} exceeds the enumeration limit; use the log-domain counts instead")
    if prm.inv_delta * 2 > _INT64_SAFE:
        raise ValueError(f"1/delta_k = {prm.inv_delta} overflows int64 endpoints")
    offsets = np.zeros(1, dtype=np.int64)
    for i in range(1, k):
        # δ_i / δ_k = Π_{j=i+1..k} (N0 + j)
        unit = math.prod(spec.N0 + j for j in range(i + 1, k + 1))
        offsets = (offsets[:, None] + unit * np.arange(spec.N(i), dtype=np.int64)[None, :]).ravel()
    offsets.sort()
    return ScaledIntervals(offsets, offsets + prm.N, prm.inv_delta)


def is_nested(inner: ScaledIntervals, outer: ScaledIntervals) -> bool:
    """Every interval of ``inner`` lies inside one interval of ``outer``."""
    if inner.denom % outer.denom:
        raise ValueError("denominators not compatible")
    o = outer.rescale(inner.denom // outer.denom)
    pos = np.searchsorted(o.lo, inner.lo, "right") - 1
    if np.any(pos < 0):
        return False
    return bool(np.all(inner.hi <= o.hi[pos]))


@dataclass(frozen=True)
class SumsetCount:
    k: int
    p: int
    q: int
    count: int
    bound: int
    components: int

    @property
    def passed(self) -> bool:
        return self.count <= self.bound


def sumset_cover_count(spec: ArithCantorSpec, k: int, p: int, q: int) -> SumsetCount:
    """``N(q F_k + p F_k, δ_k)`` against ``(p + q)^{k+1} P_k`` (exact integers)."""
    if p < 1 or q < 1:
        raise ValueError("p and q must be positive integers")
    F = arith_cantor_intervals(spec, k)
    if len(F) ** 2 > 4 * ENUMERATION_LIMIT:
        raise ValueError("sumset enumeration too large")
    lo, hi = minkowski_sum((F.lo, F.hi), (F.lo, F.hi), scale_a=q, scale_b=p)
    count = cover_count(lo, hi, 1)
    bound = (p + q) ** (k + 1) * arith_cantor_params(spec, k).P
    return SumsetCount(k, p, q, int(count), bound, len(lo))


def stage_cover_counts(spec: ArithCantorSpec, k: int) -> dict:
    """Covering number of ``F_k`` at scale ``δ_k``, with merged/unmerged piece counts."""
    F = arith_cantor_intervals(spec, k)
    prm = arith_cantor_params(spec, k)
    return {
        "covering": int(cover_count(F.lo, F.hi, 1)),
        "merged_intervals": len(F),
        "unmerged_pieces": prm.P,
        "P_k": prm.P,
    }


@dataclass
class LimitTable:
    k: np.ndarray
    dim_ratio: np.ndarray      # log P_k / log(1/δ_k)            -> t/2
    scale_ratio: np.ndarray    # log δ_k / log δ_{k-1}           -> 1   (nan at k=1)
    k_over_log: np.ndarray     # k / log δ_k                     -> 0
    N_delta_eps: np.ndarray    # N_k δ_k^ε                       -> 0
    eps: float
    t: float

    def deviations(self, k: int) -> dict:
        i = k - 1
        return {
            "dim_ratio": abs(self.dim_ratio[i] - self.t / 2),
            "scale_ratio": abs(self.scale_ratio[i] - 1.0),
            "k_over_log": abs(self.k_over_log[i]),
            "N_delta_eps": abs(self.N_delta_eps[i]),
        }


def parameter_limits(spec: ArithCantorSpec, k_max: int, eps: float = 0.1) -> LimitTable:
    """The four parameter sequences up to ``k_max``, accumulated in log space."""
    if k_max < 2:
        raise ValueError("k_max >= 2")
    if eps <= 0:
        raise ValueError("eps must be positive")
    k = np.arange(1, k_max + 1, dtype=np.int64)
    bases = spec.N0 + k
    Nk = _ceil_power_array(bases, spec.t / 2)
    if np.any(Nk >= bases):
        bad = int(k[np.argmax(Nk >= bases)])
        raise ValueError(f"precondition c_k * N_k < 1 violated at k={bad}")
    logP = np.cumsum(np.log(Nk))
    log_inv_delta = np.cumsum(np.log(bases.astype(np.float64)))
    scale = np.full(k_max, np.nan)
    scale[1:] = log_inv_delta[1:] / log_inv_delta[:-1]
    return LimitTable(
        k=k,
        dim_ratio=logP / log_inv_delta,
        scale_ratio=scale,
        k_over_log=-k / log_inv_delta,
        N_delta_eps=np.exp(np.log(Nk) - eps * log_inv_delta),
        eps=eps,
        t=spec.t,
    )
