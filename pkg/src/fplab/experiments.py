"""Experiment runners behind ``fplab run``.

Each runner turns an ``ExperimentConfig`` into an ordered list of
``ReportRow`` plus a metadata dict.  Rows carry the bound they were tested
against; runtime and other non-deterministic facts go to the metadata
sidecar so the CSV is byte-identical across re-runs.
"""
from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from .config import ConfigError, ExperimentConfig, parse_fraction, parse_int, parse_list, parse_real
from .constructions import (
    ArithCantorSpec,
    DirectedIFSSpec,
    ProductCantorSpec,
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
    points_at_scale,
    product_cantor_measure,
    schedule_hash,
    schedule_random,
    stage_cover_counts,
    sumset_cover_count,
    truncate_probabilities,
)
from .geometry import Direction
from .incidence import audit_incidence_bound, fit_log_slope, occupied_tubes
from .io import BALL_TREE_HEADER, fmt, write_csv
from .measures import CHAIN_SLACK, calibration_suite, chain_inequality_margin, mean_direction_entropy
from .regularity import ad_regularity_audit, certify, direction_set_cantor, direction_set_uniform

REPORT_HEADER = ("experiment", "params", "measured", "bound", "pass")


@dataclass(frozen=True)
class ReportRow:
    experiment: str
    params: tuple          # ordered (key, value) pairs
    measured: float
    bound: float
    passed: bool

    def as_csv(self) -> tuple:
        p = ";".join(f"{k}={fmt(v)}" for k, v in self.params)
        return (self.experiment, p, self.measured, self.bound, int(self.passed))


def _row(name, params: dict, measured, bound, passed) -> ReportRow:
    return ReportRow(name, tuple(params.items()), measured, bound, bool(passed))


def thread_count() -> int:
    """Worker cap from ``FPLAB_THREADS`` (default 1: sequential)."""
    raw = os.environ.get("FPLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def ordered_map(fn, items) -> list:
    """``map`` over ``items`` with up to ``FPLAB_THREADS`` workers, results in input order."""
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------- instances

def product_spec(inst: dict) -> ProductCantorSpec:
    fam = inst.get("family")
    try:
        if fam == "four-corner":
            return four_corner(parse_int(inst["depth"]))
        if fam == "one-axis":
            return one_axis_cantor(parse_int(inst["depth"]))
        if fam == "full-grid":
            return full_grid(parse_int(inst.get("level", inst.get("depth"))))
        if fam == "product":
            dy = inst.get("digits_y")
            return ProductCantorSpec(
                parse_int(inst["base"]),
                parse_list(inst["digits"], parse_int),
                parse_int(inst["depth"]),
                None if dy is None else parse_list(dy, parse_int),
            )
    except KeyError as exc:
        raise ConfigError(f"[instance] {fam}: missing key {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[instance] {fam}: {exc}") from exc
    raise ConfigError(f"family {fam!r} is not a product Cantor family")


def ifs_spec(inst: dict, seed: int, depth: int) -> DirectedIFSSpec:
    try:
        t = parse_real(inst["t"])
        thetas = [math.pi * x for x in parse_list(inst["thetas_pi"])]
        prob = parse_list(inst["prob"])
    except KeyError as exc:
        raise ConfigError(f"[instance] directed-ifs: missing key {exc.args[0]!r}") from exc
    if not thetas:
        raise ConfigError("directed-ifs: direction list is empty")
    if len(prob) != len(thetas):
        raise ConfigError("directed-ifs: one probability per direction required")
    tail = 0.0
    if "keep" in inst:
        keep = parse_int(inst["keep"])
        p, tail = truncate_probabilities(prob, keep)
        prob, thetas = p.tolist(), thetas[: len(p)]
    mode = inst.get("schedule", "low-discrepancy").strip()
    try:
        spec = DirectedIFSSpec(t, thetas, prob, truncated_mass=tail)
        if mode == "random":
            spec.schedule = schedule_random(prob, depth, seed)
        elif mode != "low-discrepancy":
            raise ConfigError(f"directed-ifs: unknown schedule {mode!r}")
        spec.schedule_for(depth)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"directed-ifs: {exc}") from exc
    spec.meta = {"schedule_mode": mode, "seed": seed}
    return spec


def arith_spec(inst: dict) -> ArithCantorSpec:
    try:
        return ArithCantorSpec(parse_int(inst["N0"] if "N0" in inst else inst["n0"]), parse_real(inst["t"]))
    except KeyError as exc:
        raise ConfigError(f"[instance] arith-cantor: missing key {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise ConfigError(f"[instance] arith-cantor: {exc}") from exc


def _check_precondition(spec: ArithCantorSpec, k_max: int) -> None:
    for k in range(1, k_max + 1):
        try:
            spec.check(k)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------- runners

def run_mean_entropy(cfg: ExperimentConfig):
    spec = product_spec(cfg.instance)
    mu, _ = product_cantor_measure(spec)
    if "thetas_pi" in cfg.sweep:
        dirs = [Direction.from_angle(math.pi * x) for x in cfg.reals("thetas_pi")]
        if not dirs:
            raise ConfigError("mean-entropy: direction set is empty")
        omega_desc = "explicit"
    else:
        dirs = list(direction_set_uniform(parse_int(cfg.sweep["directions_level"])))
        omega_desc = f"uniform-{cfg.sweep['directions_level'].strip()}"
    levels = cfg.ints("levels")
    bad = [n for n in levels if not 1 <= n <= mu.level]
    if bad:
        raise ConfigError(f"mean-entropy: levels {bad} outside 1..{mu.level}")
    vals = ordered_map(lambda n: mean_direction_entropy(mu, dirs, n), levels)
    thr, mono = cfg.tol("entropy_threshold"), cfg.tol("monotone")
    rows = []
    for i, (n, v) in enumerate(zip(levels, vals)):
        floor = 0.0 if i == 0 else vals[i - 1] - mono
        rows.append(_row("mean-entropy/monotone", {"n": n, "directions": len(dirs)}, v, floor, v >= floor))
    rows.append(_row("mean-entropy/threshold", {"n": levels[-1], "directions": len(dirs)},
                     vals[-1], thr, vals[-1] >= thr))
    first = next((n for n, v in zip(levels, vals) if v >= thr), -1)
    rows.append(_row("mean-entropy/first-level-above", {"threshold": thr}, first, levels[-1], first != -1))
    meta = {"measure_level": mu.level, "dimension": spec.dimension, "directions": omega_desc}
    return rows, meta


def run_incidence_audit(cfg: ExperimentConfig):
    spec = product_spec(cfg.instance)
    mu, _ = product_cantor_measure(spec)
    t = parse_real(cfg.sweep["t"]) if "t" in cfg.sweep else spec.dimension
    if not 0 < t <= 1:
        raise ConfigError(f"incidence-audit: t must lie in (0, 1], got {t}")
    levels = cfg.ints("levels")
    if any(not 1 <= m <= mu.level for m in levels):
        raise ConfigError(f"incidence-audit: levels must lie in 1..{mu.level}")
    C, cert_C, tol = cfg.tol("incidence_constant"), cfg.tol("cert_constant"), cfg.tol("slope")
    rows, meta = [], {"dimension": t, "alphas": {}}
    for alpha in cfg.reals("alpha"):
        if not 0 < alpha <= 1:
            raise ConfigError(f"incidence-audit: alpha must lie in (0, 1], got {alpha}")

        def one(m, alpha=alpha):
            P = certify(points_at_scale(mu, m), t, cert_C)
            Om = direction_set_uniform(m) if alpha == 1 else direction_set_cantor(m, alpha)
            return P, audit_incidence_bound(P, Om, occupied_tubes(P, Om, m), t)

        results = ordered_map(one, levels)
        for m, (P, a) in zip(levels, results):
            prm = {"alpha": alpha, "m": m, "delta": a.delta}
            rows.append(_row("incidence-audit/certificate", prm, P.cert.worst_constant, cert_C, P.cert.passed))
            rows.append(_row("incidence-audit/incidences", {**prm, "tubes": a.tubes, "points": len(P)},
                             a.measured, C * a.bound_value, a.measured <= C * a.bound_value))
        audits = [a for _, a in results]
        slope = fit_log_slope([1 / a.delta for a in audits], [a.ratio for a in audits])
        rows.append(_row("incidence-audit/ratio-slope", {"alpha": alpha}, slope, tol, abs(slope) <= tol))
        meta["alphas"][repr(alpha)] = {"max_ratio": max(a.ratio for a in audits)}
    return rows, meta


def run_example14(cfg: ExperimentConfig):
    depths = cfg.ints("depths")
    if any(n < 0 for n in depths):
        raise ConfigError("example14: depths must be non-negative")
    spec = ifs_spec(cfg.instance, cfg.seed, max(depths))
    c = cfg.tol("covering_constant")
    rows = []
    for n in depths:
        try:
            balls = build_directed_ifs(spec, n)
        except ValueError as exc:
            raise ConfigError(f"example14: {exc}") from exc
        parent = build_directed_ifs(spec, n - 1) if n >= 1 else None
        chk = check_ball_family(spec, balls, parent)
        for name in ("count_ok", "disjoint", "nested", "radius_ok"):
            ok = getattr(chk, name)
            rows.append(_row(f"example14/{name}", {"n": n}, int(ok), 1, ok))
        for i, e in enumerate(spec.directions):
            a = directed_projection_audit(spec, balls, i, c)
            rows.append(_row("example14/covering", {"n": n, "i": i, "theta": e.theta, "n_i": a.n_i},
                             a.covering_count, c * a.bound, a.passed))
    sched = spec.schedule_for(max(depths))
    meta = {
        "lambda": spec.lam,
        "schedule_hash": schedule_hash(sched),
        "schedule": sched.tolist(),
        "truncated_mass": spec.truncated_mass,
        **spec.meta,
    }
    return rows, meta


def _pairs(text) -> list:
    out = []
    for item in parse_list(text, str):
        p, _, q = item.partition(":")
        out.append((parse_int(p), parse_int(q)))
    return out


def run_example15(cfg: ExperimentConfig):
    spec = arith_spec(cfg.instance)
    ks = cfg.ints("k_intervals")
    k_sum = cfg.ints("k_sumset") if "k_sumset" in cfg.sweep else []
    k_lim = cfg.ints("k_limits") if "k_limits" in cfg.sweep else []
    _check_precondition(spec, max(ks + k_sum + [1]))
    rows, meta = [], {"delta_k": {}, "P_k": {}}
    prev = None
    for k in range(1, max(ks) + 1):
        F = arith_cantor_intervals(spec, k)
        prm = arith_cantor_params(spec, k)
        meta["delta_k"][k] = f"1/{prm.inv_delta}"
        meta["P_k"][k] = prm.P
        if k in ks:
            cov = stage_cover_counts(spec, k)
            rows.append(_row("example15/covering", {"k": k, "N_k": prm.N, "intervals": cov["merged_intervals"]},
                             cov["covering"], prm.P, cov["covering"] <= prm.P))
            exact = F.total_length == prm.P * prm.delta_exact
            rows.append(_row("example15/total-length", {"k": k}, float(F.total_length),
                             float(prm.P * prm.delta_exact), exact))
            if prev is not None:
                ok = is_nested(F, prev)
                rows.append(_row("example15/nested", {"k": k}, int(ok), 1, ok))
        prev = F
    pairs = _pairs(cfg.sweep.get("pairs", "1:1"))
    for k in k_sum:
        for p, q in pairs:
            try:
                sc = sumset_cover_count(spec, k, p, q)
            except ValueError as exc:
                raise ConfigError(f"example15: {exc}") from exc
            rows.append(_row("example15/sumset", {"k": k, "p": p, "q": q}, sc.count, sc.bound, sc.passed))
    eps = parse_real(cfg.sweep.get("eps", "0.1"))
    for k in k_lim:
        try:
            table = parameter_limits(spec, k, eps)
        except ValueError as exc:
            raise ConfigError(f"example15: {exc}") from exc
        dev = table.deviations(k)
        rows.append(_row("example15/dim-ratio-deviation",
                         {"k": k, "value": float(table.dim_ratio[-1]), "limit": spec.t / 2},
                         dev["dim_ratio"], cfg.tol("dim_ratio"), dev["dim_ratio"] <= cfg.tol("dim_ratio")))
        rows.append(_row("example15/scale-ratio-deviation",
                         {"k": k, "value": float(table.scale_ratio[-1]), "limit": 1},
                         dev["scale_ratio"], cfg.tol("scale_ratio"), dev["scale_ratio"] <= cfg.tol("scale_ratio")))
        meta[f"limits_k{k}"] = {key: float(v) for key, v in dev.items()}
    return rows, meta


def run_extract_subset(cfg: ExperimentConfig):
    spec = product_spec(cfg.instance)
    mu, E = product_cantor_measure(spec)
    t = parse_real(cfg.sweep["t"]) if "t" in cfg.sweep else spec.dimension
    t0 = parse_real(cfg.sweep["t0"])
    try:
        tree = extract_regular_subset(E, t, t0, cert_constant=cfg.tol("cert_constant"))
    except ValueError as exc:
        raise ConfigError(f"extract-subset: {exc}") from exc
    C = cfg.tol("regularity_constant")
    rows = []
    for name, ok in tree.check().items():
        rows.append(_row(f"extract-subset/{name}", {"depth": tree.depth, "b": tree.branching}, int(ok), 1, ok))
    eta = tree.leaf_measure()
    audit = ad_regularity_audit(eta, t0, samples=len(eta))
    prm = {"t0": t0, "scales": len(audit.scales)}
    rows.append(_row("extract-subset/lower-constant", prm, audit.lower_constant, C,
                     audit.regular and audit.lower_constant <= C))
    rows.append(_row("extract-subset/upper-constant", prm, audit.upper_constant, C,
                     audit.regular and audit.upper_constant <= C))
    if "tree_output" in cfg.sweep:
        path = cfg.output.parent / cfg.sweep["tree_output"].strip()
        write_csv(path, BALL_TREE_HEADER, tree.rows())
    meta = {"delta": tree.ratio, "branching": tree.branching, "depth": tree.depth, "r0": tree.r0,
            "truncated": tree.truncated, "scan": [{**s, "failure": s["failure"]} for s in tree.scan]}
    return rows, meta


def run_dim_estimate(cfg: ExperimentConfig):
    fam = cfg.instance.get("family")
    scales = [parse_fraction(s) for s in parse_list(cfg.sweep["scales"], str)]
    if fam == "arith-cantor":
        spec = arith_spec(cfg.instance)
        k = parse_int(cfg.instance.get("k", "2"))
        _check_precondition(spec, k)
        E = arith_cantor_intervals(spec, k)
        expected = spec.t / 2
        cells = [math.ceil(1 / s) + 1 for s in scales]
    else:
        spec = product_spec(cfg.instance)
        _, E = product_cantor_measure(spec)
        expected = spec.dimension
        cells = [math.ceil(1 / s) ** 2 for s in scales]
    if "expected" in cfg.sweep:
        expected = parse_real(cfg.sweep["expected"])
    try:
        est = box_dimension_estimate(E, scales)
    except ValueError as exc:
        raise ConfigError(f"dim-estimate: {exc}") from exc
    rows = [
        _row("dim-estimate/count", {"delta": float(s)}, int(c), cap, c <= cap)
        for s, c, cap in zip(scales, est.counts, cells)
    ]
    tol = cfg.tol("dimension")
    rows.append(_row("dim-estimate/slope", {"expected": expected, "tolerance": tol}, est.slope, expected,
                     abs(est.slope - expected) <= tol))
    return rows, {"intercept": est.intercept}


def run_chain_check(cfg: ExperimentConfig):
    if cfg.instance.get("family"):
        mu, _ = product_cantor_measure(product_spec(cfg.instance))
        measures = {cfg.instance["family"]: mu}
    else:
        measures = calibration_suite()
    ms = cfg.ints("ms")
    nd = parse_int(cfg.sweep["n_directions"])
    if nd < 1 or any(m < 1 for m in ms):
        raise ConfigError("chain-check: ms and n_directions must be positive")
    slack = parse_real(cfg.sweep["slack"]) if "slack" in cfg.sweep else CHAIN_SLACK
    n_max = parse_int(cfg.sweep["n_max"]) if "n_max" in cfg.sweep else None
    dirs = [Direction(k * math.pi / nd) for k in range(nd)]
    jobs = [(name, mu, m) for name, mu in measures.items() for m in ms]

    def one(job):
        name, mu, m = job
        top = mu.level if n_max is None else min(n_max, mu.level)
        out = []
        for n in range(m + 1, top + 1):
            for e in dirs:
                c = chain_inequality_margin(mu, e, m, n, slack)
                out.append(_row("chain-check/margin", {"measure": name, "theta": e.theta, "m": m, "n": n},
                                c.margin, -slack / m, c.passed))
        return out

    rows = [r for chunk in ordered_map(one, jobs) for r in chunk]
    return rows, {"slack": slack, "measures": {k: v.level for k, v in measures.items()}}


RUNNERS = {
    "mean-entropy": run_mean_entropy,
    "incidence-audit": run_incidence_audit,
    "example14": run_example14,
    "example15": run_example15,
    "extract-subset": run_extract_subset,
    "dim-estimate": run_dim_estimate,
    "chain-check": run_chain_check,
}


def run_experiment(cfg: ExperimentConfig) -> list:
    """Run ``cfg``, write the report CSV and its ``.meta.json`` sidecar, return the rows."""
    t0 = time.perf_counter()
    rows, meta = RUNNERS[cfg.kind](cfg)
    elapsed = (time.perf_counter() - t0) * 1000.0
    cfg.output.parent.mkdir(parents=True, exist_ok=True)
    write_csv(cfg.output, REPORT_HEADER, [r.as_csv() for r in rows])
    sidecar = {
        "kind": cfg.kind,
        "seed": cfg.seed,
        "instance": cfg.instance,
        "sweep": cfg.sweep,
        "tolerance": {k: cfg.tol(k) for k in sorted(cfg.tolerance)},
        "runtime_ms": elapsed,
        "threads": thread_count(),
        "rows": len(rows),
        "failures": sum(not r.passed for r in rows),
        "derived": meta,
    }
    with open(str(cfg.output) + ".meta.json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True, default=_json_default)
    return rows


def _json_default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if hasattr(obj, "tolist"):
        return obj.tolist()
    return repr(obj)
