"""Acceptance criteria 1-10.

Each test records one PASS/FAIL line (printed here and again in the pytest
terminal summary) before asserting.
"""
import math
import shutil
import time
from pathlib import Path

import numpy as np
import pytest

from fplab.config import load_config
from fplab.constructions import (
    ArithCantorSpec,
    DirectedIFSSpec,
    arith_cantor_intervals,
    arith_cantor_params,
    box_dimension_estimate,
    build_directed_ifs,
    check_ball_family,
    directed_projection_audit,
    extract_regular_subset,
    four_corner,
    full_grid,
    is_nested,
    one_axis_cantor,
    parameter_limits,
    product_cantor_measure,
    sumset_cover_count,
)
from fplab.geometry import Direction
from fplab.incidence import TubeFamily, incidences_brute, incidences_grid
from fplab.measures import (
    CHAIN_SLACK,
    DyadicMeasure1,
    DyadicMeasure2,
    calibrate_chain_slack,
    calibration_suite,
    entropy,
    mean_direction_entropy,
    project_measure,
)
from fplab.regularity import ad_regularity_audit, direction_set_uniform
from fplab.experiments import run_experiment

pytestmark = pytest.mark.acceptance

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def record(acceptance, k, ok, detail):
    acceptance[k] = (bool(ok), detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def shipped_runs(tmp_path_factory):
    """Run every shipped config once into a scratch directory."""
    out = tmp_path_factory.mktemp("runs")
    results = {}
    for ini in sorted(CONFIGS.glob("*.ini")):
        local = out / ini.name
        shutil.copy(ini, local)
        cfg = load_config(local)
        t0 = time.perf_counter()
        rows = run_experiment(cfg)
        results[ini.stem] = (cfg, rows, time.perf_counter() - t0, cfg.output.read_bytes())
    return results


# 1 ---------------------------------------------------------------------------


def test_c01_grid_equals_brute_force(acceptance):
    rng = np.random.default_rng(20261016)
    mismatches, t0 = 0, time.perf_counter()
    for _ in range(1000):
        level = int(rng.integers(4, 11))
        X = rng.random((int(rng.integers(1, 1001)), 2))
        n_dirs = int(rng.integers(1, 9))
        dirs = [Direction(float(t)) for t in rng.uniform(0, math.pi, n_dirs)]
        per_dir = max(1, int(rng.integers(1, 1001)) // n_dirs)
        span = 2**level
        offs = [np.unique(rng.integers(-span, 2 * span, size=per_dir)) for _ in dirs]
        fam = TubeFamily(level, dirs, offs)
        a, b = incidences_brute(X, fam), incidences_grid(X, fam)
        if a.count != b.count or not np.array_equal(a.per_tube, b.per_tube):
            mismatches += 1
    dt = time.perf_counter() - t0
    record(acceptance, 1, mismatches == 0 and dt < 60,
           f"1000 instances, {mismatches} mismatches, {dt:.1f} s (< 60 s)")


# 2 ---------------------------------------------------------------------------


def test_c02_incidence_bound_audit(acceptance, shipped_runs):
    parts, ok, total = [], True, 0.0
    for name, alphas in (("incidence_four_corner", {1.0}), ("incidence_one_axis", {0.5, 1.0})):
        cfg, rows, dt, _ = shipped_runs[name]
        total += dt
        assert cfg.tol("incidence_constant") == 1.0 and cfg.tol("slope") == 0.1
        inc = [r for r in rows if r.experiment == "incidence-audit/incidences"]
        deltas = sorted({dict(r.params)["delta"] for r in inc})
        assert deltas == [2.0**-m for m in range(12, 5, -1)]
        assert {dict(r.params)["alpha"] for r in inc} == alphas
        ratio = max(r.measured / r.bound for r in inc)
        slopes = [r.measured for r in rows if r.experiment == "incidence-audit/ratio-slope"]
        ok &= all(r.passed for r in rows)
        parts.append(f"{name}: max I/bound={ratio:.3f}, slopes={[round(s, 3) for s in slopes]}")
    record(acceptance, 2, ok and total < 300, "; ".join(parts) + f"; {total:.1f} s")


# 3 ---------------------------------------------------------------------------


def test_c03_mean_projected_entropy(acceptance):
    mu, _ = product_cantor_measure(four_corner(8))
    Om = direction_set_uniform(6)
    levels = [6, 8, 10, 12]
    vals = [mean_direction_entropy(mu, Om, n) for n in levels]
    mono = all(b >= a - 0.02 for a, b in zip(vals, vals[1:]))
    record(acceptance, 3, vals[-1] >= 0.6 and mono,
           f"H_n at n={levels}: {[round(v, 4) for v in vals]} (last >= 0.6, dips <= 0.02)")


# 4 ---------------------------------------------------------------------------


def test_c04_chain_inequality_regression(acceptance):
    assert set(calibration_suite()) == {"uniform", "dirac", "four-corner"}
    worst, rows = calibrate_chain_slack(ms=(2, 3, 4), n_directions=8)
    assert max(c.n for _, _, c in rows) <= 12
    bad = [(name, th, c.m, c.n) for name, th, c in rows if c.margin < -CHAIN_SLACK / c.m]
    record(acceptance, 4, not bad and worst <= CHAIN_SLACK,
           f"{len(rows)} margins, worst -m*margin={worst:.4f} <= slack {CHAIN_SLACK}, violations={len(bad)}")


# 5 ---------------------------------------------------------------------------


def test_c05_directed_ifs(acceptance):
    t0 = time.perf_counter()
    spec = DirectedIFSSpec(1.0, [0.0, math.pi / 2], [0.5, 0.5])
    n = 12
    balls, parent = build_directed_ifs(spec, n), build_directed_ifs(spec, n - 1)
    chk = check_ball_family(spec, balls, parent)
    audits = [directed_projection_audit(spec, balls, i, c=4) for i in (0, 1)]
    dt = time.perf_counter() - t0
    ok = chk.ok and len(balls.centers) == 2**n and all(a.passed for a in audits) and dt < 30
    record(acceptance, 5, ok,
           f"n=12: {len(balls.centers)} balls, invariants={chk.ok}, "
           f"N={[a.covering_count for a in audits]} <= 4*{[a.bound for a in audits]}, {dt:.2f} s")


# 6 ---------------------------------------------------------------------------


def test_c06_arithmetic_cantor(acceptance):
    from fractions import Fraction

    t0 = time.perf_counter()
    s = ArithCantorSpec(100, 1.0)
    p1, p2 = arith_cantor_params(s, 1), arith_cantor_params(s, 2)
    a = p1.c == Fraction(1, 101) and p1.N == 11 and p2.P == 121
    F = [arith_cantor_intervals(s, k) for k in range(1, 6)]
    b = all(is_nested(F[k], F[k - 1]) for k in range(1, 5))
    sums = [sumset_cover_count(s, k, p, q) for k in (1, 2, 3) for p, q in ((1, 1), (1, 2), (2, 3))]
    c = all(r.passed and r.bound == (r.p + r.q) ** (r.k + 1) * arith_cantor_params(s, r.k).P for r in sums)
    table = parameter_limits(s, 10**5)
    dev = table.deviations(10**5)
    d = dev["dim_ratio"] <= 0.02 and dev["scale_ratio"] <= 1e-3
    dt = time.perf_counter() - t0
    record(acceptance, 6, a and b and c and d and dt < 60,
           f"(a)={a} (b)={b} (c)={c} [worst count/bound={max(r.count / r.bound for r in sums):.3f}] "
           f"(d)={d} [dim dev={dev['dim_ratio']:.2e}, scale dev={dev['scale_ratio']:.2e}], {dt:.1f} s")


# 7 ---------------------------------------------------------------------------


def test_c07_regular_subset_extraction(acceptance):
    _, E = product_cantor_measure(four_corner(8))
    tree = extract_regular_subset(E, 1.0, 0.5)
    inv = tree.check()
    audit = ad_regularity_audit(tree.leaf_measure(), 0.5, samples=len(tree.leaf_centers()))
    ok = all(inv.values()) and audit.regular and audit.lower_constant <= 32 and audit.upper_constant <= 32
    record(acceptance, 7, ok,
           f"b={tree.branching}, depth={tree.depth}, invariants={inv}, "
           f"constants lower={audit.lower_constant:.3f} upper={audit.upper_constant:.3f} (<= 32)")


# 8 ---------------------------------------------------------------------------


def test_c08_box_dimension(acceptance):
    _, P = product_cantor_measure(four_corner(6))
    ks = range(2, 7)
    fc = box_dimension_estimate(P, [4.0**-k for k in ks])
    exact = fc.counts.tolist() == [4**k for k in ks]
    _, G = product_cantor_measure(full_grid(8))
    gr = box_dimension_estimate(G, [2.0**-k for k in range(1, 9)])
    ok = exact and abs(fc.slope - 1.0) <= 0.05 and abs(gr.slope - 2.0) <= 0.01
    record(acceptance, 8, ok,
           f"four-corner slope={fc.slope:.4f} counts exact={exact}; full grid slope={gr.slope:.4f}")


# 9 ---------------------------------------------------------------------------


def suite_measures():
    out = dict(calibration_suite())
    for d in (3, 5, 8):
        out[f"four-corner-{d}"] = product_cantor_measure(four_corner(d))[0]
    out["one-axis-6"] = product_cantor_measure(one_axis_cantor(6))[0]
    for n in (1, 4, 9):
        out[f"grid-{n}"] = product_cantor_measure(full_grid(n))[0]
    _, E = product_cantor_measure(four_corner(6))
    out["ball-tree"] = extract_regular_subset(E, 1.0, 0.5).leaf_measure()
    return out


def test_c09_entropy_identities(acceptance):
    failures = []
    for n in (1, 5, 12):
        v = entropy(DyadicMeasure1(n, range(2**n), np.full(2**n, 2.0**-n)), n)
        if v.normalized != 1.0:
            failures.append(f"uniform 1D n={n}: {v.normalized!r}")
        u = product_cantor_measure(full_grid(n))[0] if n <= 9 else None
        if u is not None and entropy(project_measure(u, Direction(0.0), n), n).normalized != 1.0:
            failures.append(f"uniform axis projection n={n}")
    for n in (1, 6, 12):
        if entropy(DyadicMeasure2(12, [[5, 7]], [1.0]), n).H != 0.0:
            failures.append(f"dirac n={n}")
    measures = suite_measures()
    dirs = [Direction(k * math.pi / 8) for k in range(8)]
    checked = 0
    for name, mu in measures.items():
        family = [mu] + [project_measure(mu, e, mu.level) for e in dirs]
        for nu in family:
            prev = 0.0
            for n in range(1, nu.level + 1):
                H = entropy(nu, n).H
                if H > math.log2(len(nu.coarsen(n))) + 1e-12:
                    failures.append(f"{name}: entropy above log count at n={n}")
                if H < prev - 1e-12:
                    failures.append(f"{name}: coarsening not monotone at n={n}")
                prev = H
                checked += 1
    record(acceptance, 9, not failures,
           f"uniform=1 and dirac=0 exact; {checked} (measure, level) pairs over {len(measures)} measures "
           f"and their projections; failures={failures[:3]}")


# 10 --------------------------------------------------------------------------


def test_c10_determinism(acceptance, shipped_runs):
    kinds, diffs = set(), []
    for name, (cfg, _, _, first) in shipped_runs.items():
        run_experiment(cfg)
        kinds.add(cfg.kind)
        if cfg.output.read_bytes() != first:
            diffs.append(name)
    from fplab.config import KINDS

    ok = not diffs and kinds == set(KINDS)
    record(acceptance, 10, ok,
           f"{len(shipped_runs)} configs covering {len(kinds)}/{len(KINDS)} kinds re-run; differing: {diffs}")
