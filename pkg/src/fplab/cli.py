"""``fplab`` command line: run experiments, describe them, generate instances, check point sets.

Exit codes: 0 all checks passed, 1 some check failed (report still
written), 2 invalid config / unknown kind, 3 missing input file.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config, parse_int
from .experiments import (
    REPORT_HEADER,
    arith_spec,
    ifs_spec,
    product_spec,
    run_experiment,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_MISSING = 0, 1, 2, 3

# kind -> (result anchor, required keys, notes)
DESCRIPTIONS = {
    "mean-entropy": (
        "projection theorem for entropy: mean projected entropy over a direction set",
        "[instance] product family; [sweep] levels and directions_level (or thetas_pi)",
        "rows: monotone (per level, bound = previous - tolerance), threshold, first-level-above",
    ),
    "incidence-audit": (
        "incidence bound: point-tube incidences for (delta,t)-sets of points and (delta,alpha)-sets of directions",
        "[instance] product family; [sweep] levels, alpha (list), optional t",
        "rows: certificate, incidences (bound = C * bound value), ratio-slope",
    ),
    "example14": (
        "directed IFS example: random-direction self-similar set and its projection covering numbers",
        "[instance] family=directed-ifs, t, thetas_pi, prob, optional keep, schedule; [sweep] depths",
        "rows: count_ok, disjoint, nested, radius_ok, covering (bound = c * 2^(n - n_i))",
    ),
    "example15": (
        "arithmetic Cantor example: sumset covering numbers and parameter limits",
        "[instance] family=arith-cantor, N0, t; [sweep] k_intervals, optional k_sumset, pairs (p:q), k_limits, eps",
        "rows: covering, total-length, nested, sumset, dim-ratio-deviation, scale-ratio-deviation",
    ),
    "extract-subset": (
        "regular subset extraction: AD-regular subset of smaller dimension via a regular ball tree",
        "[instance] product family; [sweep] t0, optional t, tree_output",
        "rows: branching, disjoint, contained, lower-constant, upper-constant",
    ),
    "dim-estimate": (
        "box-counting dimension (covering numbers N(F, delta))",
        "[instance] product family or arith-cantor with k; [sweep] scales (>= 3), optional expected",
        "rows: count per scale (bound = number of grid cells), slope (bound = expected dimension)",
    ),
    "chain-check": (
        "multiscale chain inequality: projected entropy vs averaged blow-up entropies",
        "[sweep] ms, n_directions, optional slack, n_max; optional [instance] product family "
        "(default: calibration suite)",
        "rows: margin per (measure, theta, m, n), bound = -slack/m",
    ),
}


def describe(kind: str) -> str:
    anchor, fields, rows = DESCRIPTIONS[kind]
    return "\n".join([
        f"kind: {kind}",
        f"anchor: {anchor}",
        f"config: {fields}",
        f"output: CSV {','.join(REPORT_HEADER)}; {rows}",
        "sidecar: <output>.meta.json with runtime and derived parameters",
    ])


def _err(msg: str) -> None:
    print(f"fplab: {msg}", file=sys.stderr)


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except FileNotFoundError as exc:
        _err(str(exc))
        return EXIT_MISSING
    except ConfigError as exc:
        _err(f"invalid config: {exc}")
        return EXIT_CONFIG
    try:
        rows = run_experiment(cfg)
    except FileNotFoundError as exc:
        _err(str(exc))
        return EXIT_MISSING
    except ConfigError as exc:
        _err(f"invalid config: {exc}")
        return EXIT_CONFIG
    failed = [r for r in rows if not r.passed]
    for r in failed:
        _, p, measured, bound, _ = r.as_csv()
        _err(f"FAIL {r.experiment} [{p}] measured={measured!r} bound={bound!r}")
    print(f"{cfg.kind}: {len(rows) - len(failed)}/{len(rows)} checks passed -> {cfg.output}")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_describe(args) -> int:
    if args.kind not in DESCRIPTIONS:
        _err(f"unknown kind {args.kind!r}; known: {', '.join(DESCRIPTIONS)}")
        return EXIT_CONFIG
    print(describe(args.kind))
    return EXIT_OK


def cmd_gen(args) -> int:
    """Write the instance described by the ``[instance]`` section of ``spec``."""
    import configparser

    from . import io
    from .constructions import (
        arith_cantor_intervals,
        arith_cantor_params,
        build_directed_ifs,
        product_cantor_measure,
        schedule_hash,
    )

    path = Path(args.spec)
    if not path.is_file():
        _err(f"spec file not found: {path}")
        return EXIT_MISSING
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read(path)
    except configparser.Error as exc:
        _err(f"invalid spec: {exc}")
        return EXIT_CONFIG
    if not cp.has_section("instance"):
        _err("invalid spec: missing [instance] section")
        return EXIT_CONFIG
    inst = dict(cp["instance"])
    fam = inst.get("family")
    out = Path(args.output)
    meta = {"instance": inst}
    try:
        if fam == "directed-ifs":
            n = parse_int(inst.get("depth", "8"))
            seed = parse_int(inst.get("seed", "0"))
            spec = ifs_spec(inst, seed, n)
            balls = build_directed_ifs(spec, n)
            io.write_csv(out, ("cx", "cy", "r"), [(x, y, balls.radius) for x, y in balls.centers.tolist()])
            meta.update(lam=spec.lam, schedule_hash=schedule_hash(balls.schedule),
                        truncated_mass=spec.truncated_mass)
        elif fam == "arith-cantor":
            spec = arith_spec(inst)
            k = parse_int(inst.get("k", "2"))
            F = arith_cantor_intervals(spec, k)
            io.write_csv(out, io.INTERVAL_HEADER, io.interval_rows(F))
            meta.update(delta_k=f"1/{arith_cantor_params(spec, k).inv_delta}")
        else:
            spec = product_spec(inst)
            mu, P = product_cantor_measure(spec)
            if out.suffix == ".csv":
                io.write_points(out, P.points)
            else:
                io.write_measure(out, mu)
            meta.update(level=spec.level, dimension=spec.dimension, degenerate=spec.degenerate)
    except (ConfigError, ValueError) as exc:
        _err(f"invalid spec: {exc}")
        return EXIT_CONFIG
    with open(str(out) + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_check_set(args) -> int:
    from . import io
    from .regularity import delta_s_set_check

    path = Path(args.points)
    if not path.is_file():
        _err(f"points file not found: {path}")
        return EXIT_MISSING
    try:
        X = io.read_points(path)
        report = delta_s_set_check(X, args.delta, args.s, args.C)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_FAIL if "separated" in str(exc) else EXIT_CONFIG
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(io.REPORT_HEADER)
    for row in report.rows():
        w.writerow([io.fmt(v) for v in row])
    return EXIT_OK if report.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fplab", description="Projection, incidence and regularity experiments.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config and write its CSV report")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("describe", help="print what an experiment kind checks and its config fields")
    p.add_argument("kind")
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("gen", help="generate an instance from the [instance] section of a spec file")
    p.add_argument("spec")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("check-set", help="(delta, s)-set check of a point CSV")
    p.add_argument("points")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--C", type=float, required=True)
    p.set_defaults(func=cmd_check_set)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
