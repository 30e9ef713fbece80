"""Experiment configuration files.

A config is an INI file with four sections::

    [experiment]
    kind = dim-estimate
    output = dim.csv
    seed = 0

    [instance]
    family = four-corner
    depth = 6

    [sweep]
    scales = 1/16, 1/64, 1/256, 1/1024, 1/4096

    [tolerance]
    dimension = 0.05

Only ``key = value`` pairs; no interpolation, no scripting.  Lists are
comma separated; fractions like ``1/16`` are accepted wherever a real is.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

KINDS = (
    "mean-entropy",
    "incidence-audit",
    "example14",
    "example15",
    "extract-subset",
    "dim-estimate",
    "chain-check",
)

FAMILIES = ("four-corner", "one-axis", "full-grid", "product", "directed-ifs", "arith-cantor")

# Tolerances and thresholds used when the config does not override them.
DEFAULTS = {
    "dimension": 0.05,          # box-dimension slope vs expected
    "slope": 0.1,               # drift of log(ratio) in the incidence sweep
    "incidence_constant": 1.0,  # C in measured <= C * bound
    "cert_constant": 64.0,      # (delta, t)-set certificate for point sets
    "entropy_threshold": 0.6,   # mean projected entropy at the largest level
    "monotone": 0.02,           # allowed dip between consecutive levels
    "covering_constant": 4.0,   # c in N(pi_e E_n, lambda^n) <= c 2^(n - n_i)
    "regularity_constant": 32.0,
    "dim_ratio": 0.02,
    "scale_ratio": 1e-3,
}

# Alternative keys: at least one of each group must be present.
ONE_OF = {
    "mean-entropy": ("directions_level", "thetas_pi"),
}

# Sweep keys each kind needs (beyond [instance]).
REQUIRED = {
    "mean-entropy": ("levels",),
    "incidence-audit": ("levels", "alpha"),
    "example14": ("depths",),
    "example15": ("k_intervals",),
    "extract-subset": ("t0",),
    "dim-estimate": ("scales",),
    "chain-check": ("ms", "n_directions"),
}

# Instance families each kind accepts; ``None`` means the instance section is optional.
ACCEPTS = {
    "mean-entropy": ("four-corner", "one-axis", "full-grid", "product"),
    "incidence-audit": ("four-corner", "one-axis", "full-grid", "product"),
    "example14": ("directed-ifs",),
    "example15": ("arith-cantor",),
    "extract-subset": ("four-corner", "one-axis", "full-grid", "product"),
    "dim-estimate": ("four-corner", "one-axis", "full-grid", "product", "arith-cantor"),
    "chain-check": None,
}


class ConfigError(ValueError):
    """The config file is malformed or misses a required field."""


def parse_real(text) -> float:
    try:
        return float(Fraction(str(text).strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a real number: {text!r}") from exc


def parse_fraction(text) -> Fraction:
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


def parse_int(text) -> int:
    try:
        return int(str(text).strip())
    except ValueError as exc:
        raise ConfigError(f"not an integer: {text!r}") from exc


def parse_list(text, conv=parse_real) -> list:
    items = [s for s in (p.strip() for p in str(text).split(",")) if s]
    return [conv(s) for s in items]


@dataclass
class ExperimentConfig:
    kind: str
    output: Path
    instance: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    tolerance: dict = field(default_factory=dict)
    seed: int = 0
    source: Path | None = None

    def tol(self, key: str) -> float:
        if key in self.tolerance:
            return parse_real(self.tolerance[key])
        return DEFAULTS[key]

    def get(self, key: str, default=None):
        return self.sweep.get(key, default)

    def ints(self, key: str) -> list:
        return parse_list(self.sweep[key], parse_int)

    def reals(self, key: str) -> list:
        return parse_list(self.sweep[key])

    def validate(self) -> "ExperimentConfig":
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; known: {', '.join(KINDS)}")
        missing = [k for k in REQUIRED[self.kind] if k not in self.sweep]
        if missing:
            raise ConfigError(f"{self.kind}: missing [sweep] keys: {', '.join(missing)}")
        alt = ONE_OF.get(self.kind)
        if alt and not any(k in self.sweep for k in alt):
            raise ConfigError(f"{self.kind}: one of [sweep] {' / '.join(alt)} is required")
        for k in REQUIRED[self.kind] + tuple(k for k in alt or () if k in self.sweep):
            if not parse_list(self.sweep[k], str):
                raise ConfigError(f"{self.kind}: sweep '{k}' is empty")
        accepted = ACCEPTS[self.kind]
        fam = self.instance.get("family")
        if accepted is not None:
            if fam is None:
                raise ConfigError(f"{self.kind}: [instance] family is required")
            if fam not in accepted:
                raise ConfigError(f"{self.kind}: family {fam!r} not supported; use one of {', '.join(accepted)}")
        elif fam is not None and fam not in FAMILIES:
            raise ConfigError(f"unknown instance family {fam!r}")
        for key in self.tolerance:
            if key not in DEFAULTS:
                raise ConfigError(f"unknown tolerance {key!r}")
            parse_real(self.tolerance[key])
        return self


def load_config(path) -> ExperimentConfig:
    """Parse and validate ``path``.  Raises ``FileNotFoundError`` or ``ConfigError``."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    unknown = set(cp.sections()) - {"experiment", "instance", "sweep", "tolerance"}
    if unknown:
        raise ConfigError(f"{path}: unknown sections {sorted(unknown)}")
    if not cp.has_section("experiment"):
        raise ConfigError(f"{path}: missing [experiment] section")
    exp = dict(cp["experiment"])
    if "kind" not in exp:
        raise ConfigError(f"{path}: [experiment] kind is required")
    out = exp.get("output")
    if not out:
        raise ConfigError(f"{path}: [experiment] output is required")
    out = Path(out)
    if not out.is_absolute():
        out = path.parent / out
    cfg = ExperimentConfig(
        kind=exp["kind"].strip(),
        output=out,
        instance=dict(cp["instance"]) if cp.has_section("instance") else {},
        sweep=dict(cp["sweep"]) if cp.has_section("sweep") else {},
        tolerance=dict(cp["tolerance"]) if cp.has_section("tolerance") else {},
        seed=parse_int(exp.get("seed", "0")),
        source=path,
    )
    return cfg.validate()
