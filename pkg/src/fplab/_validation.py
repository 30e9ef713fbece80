"""Input validation shared by the functional API and the estimators."""
from __future__ import annotations

import numpy as np
from sklearn.utils import check_array


def check_points(X, *, allow_empty: bool = False, unit_square: bool = True) -> np.ndarray:
    """Return ``X`` as a float64 ``(N, 2)`` array of planar points."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.size == 0:
        if allow_empty:
            return np.empty((0, 2), dtype=np.float64)
        raise ValueError("empty point set")
    X = check_array(arr, dtype=np.float64, ensure_2d=True)
    if X.shape[1] != 2:
        raise ValueError(f"expected planar points with 2 columns, got {X.shape[1]}")
    if unit_square and (np.any(X < 0.0) or np.any(X >= 1.0)):
        raise ValueError("points must lie in [0,1)^2")
    return X


def check_level(n, name: str = "level", minimum: int = 0) -> int:
    if int(n) != n or n < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {n!r}")
    return int(n)


def check_scales(scales, minimum: int = 3) -> np.ndarray:
    scales = np.asarray(scales, dtype=np.float64).ravel()
    if scales.size < minimum:
        raise ValueError(f"need at least {minimum} scales, got {scales.size}")
    if np.any(scales <= 0):
        raise ValueError("scales must be positive")
    return scales
