import math

import numpy as np
import pytest

from fplab.constructions import four_corner, points_at_scale, product_cantor_measure
from fplab.geometry import Direction, DyadicIndex1, Tube, tube_contains
from fplab.incidence import (
    TubeFamily,
    audit_incidence_bound,
    fit_log_slope,
    incidence_bound,
    incidences_brute,
    incidences_grid,
    occupied_tubes,
)
from fplab.regularity import PointSet, certify, direction_set_uniform


def loop_oracle(X, fam):
    """Membership one (point, tube) pair at a time through ``tube_contains``."""
    return [sum(tube_contains(t, p) for p in X) for t in fam]


def random_instance(rng, n_pts=200, n_tubes=50, level=6):
    X = rng.random((n_pts, 2))
    dirs = [Direction(float(t)) for t in rng.uniform(0, math.pi, 5)]
    offs = [rng.integers(-2**level, 2 * 2**level, size=n_tubes // 5) for _ in dirs]
    return X, TubeFamily(level, dirs, offs)


def test_single_point_single_tube():
    fam = TubeFamily(1, [Direction(0.0)], [[1]])
    assert incidences_brute(np.array([[0.5, 0.5]]), fam).count == 1
    assert incidences_grid(np.array([[0.5, 0.5]]), fam).count == 1


def test_grid_columns():
    k = (np.arange(4) + 0.5) / 4
    X = np.array([(x, y) for x in k for y in k])
    fam = TubeFamily(2, [Direction(0.0)], [[0, 1, 2, 3]])
    for f in (incidences_brute, incidences_grid):
        res = f(X, fam)
        assert res.count == 16 and res.per_tube.tolist() == [4, 4, 4, 4]


def test_random_instance_matches_loop_oracle():
    rng = np.random.default_rng(0)
    X, fam = random_instance(rng)
    oracle = loop_oracle(X, fam)
    assert incidences_brute(X, fam).per_tube.tolist() == oracle
    assert incidences_grid(X, fam).per_tube.tolist() == oracle


def test_empty_family_and_empty_points():
    fam = TubeFamily(3, [], [])
    assert incidences_grid(np.array([[0.1, 0.2]]), fam).count == 0
    assert incidences_brute(np.array([[0.1, 0.2]]), fam).count == 0
    fam2 = TubeFamily(3, [Direction(0.2)], [[0, 1]])
    assert incidences_grid(np.empty((0, 2)), fam2).count == 0


def test_partitioning_tubes_count_every_point_once():
    rng = np.random.default_rng(1)
    X = rng.random((300, 2))
    for theta in (0.0, 1.0, 2.5):
        e = Direction(theta)
        fam = TubeFamily(4, [e], [np.arange(-16, 24)])
        assert incidences_grid(X, fam).count == 300
        assert incidences_brute(X, fam).count == 300


def test_monotone_under_additions():
    rng = np.random.default_rng(2)
    X, fam = random_instance(rng)
    base = incidences_grid(X, fam).count
    assert incidences_grid(np.vstack([X, rng.random((1, 2))]), fam).count >= base
    bigger = fam.merged(TubeFamily(fam.level, [Direction(0.4)], [[10]]))
    assert incidences_grid(X, bigger).count >= base


def test_tube_family_iteration_and_from_tubes():
    tubes = [Tube(Direction(0.0), DyadicIndex1(3, j)) for j in (1, 2)] + [Tube(Direction(1.0), DyadicIndex1(3, 0))]
    fam = TubeFamily.from_tubes(tubes)
    assert len(fam) == 3 and fam.delta == 1 / 8
    assert list(fam) == tubes
    with pytest.raises(ValueError):
        TubeFamily.from_tubes(tubes + [Tube(Direction(0.0), DyadicIndex1(4, 0))])
    with pytest.raises(ValueError):
        TubeFamily(2, [Direction(0.0)], [])


def test_incidence_bound_examples():
    v = incidence_bound(2.0**-8, 1.0, 1.0, 256)
    assert v == pytest.approx(256 * math.sqrt(8) * 16 + 256)
    assert v == pytest.approx(11841.2375, abs=1e-4)
    for t in (0.3, 0.7, 1.0):
        assert incidence_bound(0.5, t, t, 1) == pytest.approx(2**t + 1)
    # t < alpha: max{1, delta^(t - alpha)} = 16 enters the root
    d = 2.0**-8
    assert incidence_bound(d, 0.5, 1.0, 4) == pytest.approx(d**-0.5 * math.sqrt(16 * 8) * 2 + 4)
    with pytest.raises(ValueError):
        incidence_bound(1.0, 1.0, 1.0, 1)
    with pytest.raises(ValueError):
        incidence_bound(0.5, 1.5, 1.0, 1)


def test_occupied_tubes_hit_every_point():
    mu, _ = product_cantor_measure(four_corner(3))
    P = points_at_scale(mu, 4)
    Om = direction_set_uniform(3)
    fam = occupied_tubes(P, Om, 4)
    res = incidences_grid(P, fam)
    assert np.all(res.per_tube >= 1)
    assert res.count == len(P) * len(Om)


def test_audit_requires_certificates():
    mu, _ = product_cantor_measure(four_corner(3))
    P = points_at_scale(mu, 6)
    Om = direction_set_uniform(6)
    with pytest.raises(ValueError):
        audit_incidence_bound(P, Om, occupied_tubes(P, Om, 6), 1.0)
    certify(P, 1.0, 64)
    a = audit_incidence_bound(P, Om, occupied_tubes(P, Om, 6), 1.0)
    assert a.ratio == a.measured / a.bound_value
    assert a.ratio <= 1


def test_single_direction_single_tube_ratio():
    P = certify(PointSet(np.array([[0.3, 0.3], [0.8, 0.8]]), 0.25), 1.0, 64)
    Om = direction_set_uniform(2)
    fam = TubeFamily(2, [Om.directions[0]], [[1]])
    assert audit_incidence_bound(P, Om, fam, 1.0).ratio <= 1


def test_fit_log_slope():
    x = np.array([2.0, 4.0, 8.0, 16.0])
    assert fit_log_slope(x, 3 * x**0.5) == pytest.approx(0.5)
