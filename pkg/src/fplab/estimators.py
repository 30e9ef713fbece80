"""scikit-learn style wrappers around the functional core.

Only the operations that map naturally to ``fit``/``transform`` on a point
array get an estimator: box counting, directional projection entropy,
separated nets and regular-subset extraction.  Everything else stays a
plain function.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_level, check_points
from .constructions.boxdim import box_dimension_estimate
from .constructions.extraction import extract_regular_subset
from .geometry import Direction, project
from .measures import direction_entropies, measure_from_points
from .regularity import PointSet, maximal_separated_subset


def _directions(thetas) -> list:
    if thetas is None:
        raise ValueError("directions must be given")
    out = [e if isinstance(e, Direction) else Direction(float(e)) for e in thetas]
    if not out:
        raise ValueError("direction set is empty")
    return out


class BoxCountingDimension(BaseEstimator):
    """Least-squares box-counting dimension of a planar point sample.

    Parameters
    ----------
    scales : sequence of float
        Box sides ``δ``; at least three.
    """

    def __init__(self, scales=(1 / 4, 1 / 8, 1 / 16, 1 / 32)):
        self.scales = scales

    def fit(self, X, y=None):
        X = check_points(X, unit_square=False)
        est = box_dimension_estimate(X, self.scales)
        self.scales_ = est.scales
        self.counts_ = est.counts
        self.dimension_ = est.slope
        self.intercept_ = est.intercept
        return self

    def score(self, X, y=None) -> float:
        check_is_fitted(self, "dimension_")
        return self.dimension_


class DirectionalProjection(TransformerMixin, BaseEstimator):
    """Project points onto a finite direction set.

    ``transform`` returns the ``(N, |Ω|)`` matrix of coordinates
    ``x·e``.  ``fit`` additionally records the normalized level-``n``
    entropy of the projected empirical measure in each direction.
    """

    def __init__(self, directions=None, n: int = 8):
        self.directions = directions
        self.n = n

    def fit(self, X, y=None):
        X = check_points(X)
        n = check_level(self.n, "n", 1)
        dirs = _directions(self.directions)
        mu = measure_from_points(X, n)
        vals = direction_entropies(mu, dirs, n)
        self.directions_ = dirs
        self.n_features_in_ = 2
        self.entropies_ = np.asarray(vals, dtype=np.float64)
        self.mean_entropy_ = float(np.mean(self.entropies_))
        return self

    def transform(self, X):
        check_is_fitted(self, "directions_")
        X = check_points(X, unit_square=False)
        return np.column_stack([project(X, e) for e in self.directions_])


class SeparatedNet(TransformerMixin, BaseEstimator):
    """Greedy maximal ``delta``-separated subset (lexicographic order)."""

    def __init__(self, delta: float = 0.01):
        self.delta = delta

    def fit(self, X, y=None):
        X = check_points(X, unit_square=False)
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        net = maximal_separated_subset(X, self.delta)
        self.net_ = net.points
        self.n_features_in_ = 2
        return self

    def transform(self, X=None):
        check_is_fitted(self, "net_")
        return self.net_


class RegularSubsetExtractor(BaseEstimator):
    """Grow a regular ball tree of dimension ``t0`` inside a ``t``-set sample.

    ``delta`` is the resolution of the sample (its separation scale).
    """

    def __init__(self, t: float = 1.0, t0: float = 0.5, delta: float | None = None,
                 certify: bool = True, cert_constant: float = 64.0):
        self.t = t
        self.t0 = t0
        self.delta = delta
        self.certify = certify
        self.cert_constant = cert_constant

    def fit(self, X, y=None):
        if isinstance(X, PointSet):
            E = X
        else:
            if self.delta is None:
                raise ValueError("delta is required for raw point arrays")
            E = PointSet(check_points(X), float(self.delta))
        tree = extract_regular_subset(E, self.t, self.t0, certify=self.certify,
                                      cert_constant=self.cert_constant)
        self.tree_ = tree
        self.branching_ = tree.branching
        self.ratio_ = tree.ratio
        self.depth_ = tree.depth
        self.leaves_ = tree.leaf_centers()
        return self

    def transform(self, X=None):
        check_is_fitted(self, "leaves_")
        return self.leaves_
