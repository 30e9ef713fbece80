import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from fplab import io
from fplab.cli import DESCRIPTIONS, EXIT_CONFIG, EXIT_FAIL, EXIT_MISSING, EXIT_OK, main
from fplab.config import KINDS, ConfigError, load_config, parse_fraction, parse_list, parse_real
from fplab.experiments import REPORT_HEADER, ordered_map, run_experiment

SMALL = {
    "dim-estimate": """
[experiment]
kind = dim-estimate
output = out.csv
[instance]
family = four-corner
depth = 4
[sweep]
scales = 1/4, 1/16, 1/64, 1/256
""",
    "mean-entropy": """
[experiment]
kind = mean-entropy
output = out.csv
[instance]
family = four-corner
depth = 4
[sweep]
levels = 4, 6, 8
directions_level = 3
[tolerance]
entropy_threshold = 0.5
monotone = 0.1
""",
    "incidence-audit": """
[experiment]
kind = incidence-audit
output = out.csv
[instance]
family = four-corner
depth = 3
[sweep]
levels = 4, 5, 6
alpha = 1
[tolerance]
slope = 0.5
""",
    "example14": """
[experiment]
kind = example14
output = out.csv
[instance]
family = directed-ifs
t = 1
thetas_pi = 0, 1/2
prob = 1/2, 1/2
[sweep]
depths = 2, 4, 6
""",
    "example15": """
[experiment]
kind = example15
output = out.csv
[instance]
family = arith-cantor
N0 = 100
t = 1
[sweep]
k_intervals = 1, 2, 3
k_sumset = 1, 2
pairs = 1:1, 1:2
k_limits = 1000
[tolerance]
dim_ratio = 0.1
scale_ratio = 0.01
""",
    "extract-subset": """
[experiment]
kind = extract-subset
output = out.csv
[instance]
family = four-corner
depth = 4
[sweep]
t0 = 0.5
tree_output = tree.csv
""",
    "chain-check": """
[experiment]
kind = chain-check
output = out.csv
[instance]
family = four-corner
depth = 3
[sweep]
ms = 2, 3
n_directions = 4
""",
}


def write(tmp_path, text, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def read_report(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# ---------------------------------------------------------------- config parsing


def test_parse_helpers():
    assert parse_real("1/16") == 0.0625 and parse_real(" 0.5 ") == 0.5
    assert parse_fraction("3/9") == parse_fraction("1/3")
    assert parse_list("1, 2,, 3") == [1.0, 2.0, 3.0]
    with pytest.raises(ConfigError):
        parse_real("abc")
    with pytest.raises(ConfigError):
        parse_real("1/0")


def test_small_configs_cover_every_kind():
    assert set(SMALL) == set(KINDS) == set(DESCRIPTIONS)


@pytest.mark.parametrize("bad,match", [
    ("[experiment]\nkind = nope\noutput = o.csv\n", "unknown experiment kind"),
    ("[experiment]\noutput = o.csv\n", "kind is required"),
    ("[experiment]\nkind = dim-estimate\n", "output is required"),
    ("[experiment]\nkind = dim-estimate\noutput = o.csv\n[instance]\nfamily = four-corner\n", "missing"),
    ("[experiment]\nkind = dim-estimate\noutput = o.csv\n[instance]\nfamily = directed-ifs\n"
     "[sweep]\nscales = 1/2\n", "not supported"),
    ("[experiment]\nkind = dim-estimate\noutput = o.csv\n[instance]\nfamily = four-corner\n"
     "[sweep]\nscales = 1/2\n[tolerance]\nbogus = 1\n", "unknown tolerance"),
    ("[experiment]\nkind = mean-entropy\noutput = o.csv\n[instance]\nfamily = four-corner\n"
     "[sweep]\nlevels = 2\n", "one of"),
    ("[experiment]\nkind = dim-estimate\noutput = o.csv\n[other]\nx = 1\n", "unknown sections"),
    ("[experiment]\nkind = dim-estimate\noutput = o.csv\n[instance]\nfamily = four-corner\n"
     "[sweep]\nscales = \n", "empty"),
])
def test_config_errors(tmp_path, bad, match):
    with pytest.raises(ConfigError, match=match):
        load_config(write(tmp_path, bad))


def test_config_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "none.ini")


def test_output_relative_to_config(tmp_path):
    cfg = load_config(write(tmp_path, SMALL["dim-estimate"]))
    assert cfg.output == tmp_path / "out.csv"
    assert cfg.tol("dimension") == 0.05


# ---------------------------------------------------------------- run


@pytest.mark.parametrize("kind", sorted(SMALL))
def test_run_every_kind_passes_and_is_deterministic(tmp_path, kind):
    p = write(tmp_path, SMALL[kind])
    assert main(["run", str(p)]) == EXIT_OK
    out = tmp_path / "out.csv"
    first = out.read_bytes()
    rows = read_report(out)
    assert tuple(rows[0]) == REPORT_HEADER
    assert all(r[4] == "1" for r in rows[1:]) and len(rows) > 1
    assert all(r[0].startswith(kind + "/") for r in rows[1:])
    meta = json.loads((tmp_path / "out.csv.meta.json").read_text())
    assert meta["kind"] == kind and meta["failures"] == 0 and meta["runtime_ms"] >= 0
    assert main(["run", str(p)]) == EXIT_OK
    assert out.read_bytes() == first


def test_thread_count_does_not_change_output(tmp_path, monkeypatch):
    p = write(tmp_path, SMALL["incidence-audit"])
    monkeypatch.setenv("FPLAB_THREADS", "1")
    assert main(["run", str(p)]) == EXIT_OK
    one = (tmp_path / "out.csv").read_bytes()
    monkeypatch.setenv("FPLAB_THREADS", "4")
    assert main(["run", str(p)]) == EXIT_OK
    assert (tmp_path / "out.csv").read_bytes() == one


def test_ordered_map_preserves_order(monkeypatch):
    monkeypatch.setenv("FPLAB_THREADS", "3")
    assert ordered_map(lambda x: x * x, range(20)) == [x * x for x in range(20)]


def test_failing_check_exits_one(tmp_path, capsys):
    text = SMALL["dim-estimate"] + "expected = 1.5\n[tolerance]\ndimension = 0.01\n"
    assert main(["run", str(write(tmp_path, text))]) == EXIT_FAIL
    rows = read_report(tmp_path / "out.csv")
    assert rows[-1][0] == "dim-estimate/slope" and rows[-1][4] == "0"
    assert "FAIL dim-estimate/slope" in capsys.readouterr().err


def test_run_exit_codes(tmp_path):
    assert main(["run", str(tmp_path / "missing.ini")]) == EXIT_MISSING
    assert main(["run", str(write(tmp_path, "[experiment]\nkind = nope\noutput = o.csv\n"))]) == EXIT_CONFIG
    # precondition c_k N_k < 1 violated at runtime
    bad = SMALL["example15"].replace("t = 1", "t = 2")
    assert main(["run", str(write(tmp_path, bad))]) == EXIT_CONFIG


def test_run_direct_api(tmp_path):
    rows = run_experiment(load_config(write(tmp_path, SMALL["dim-estimate"])))
    counts = [r.measured for r in rows if r.experiment == "dim-estimate/count"]
    assert counts == [4, 16, 64, 256]


def test_example15_rows(tmp_path):
    main(["run", str(write(tmp_path, SMALL["example15"]))])
    rows = read_report(tmp_path / "out.csv")
    names = {r[0] for r in rows[1:]}
    assert {"example15/covering", "example15/nested", "example15/sumset",
            "example15/dim-ratio-deviation", "example15/scale-ratio-deviation"} <= names


def test_extract_subset_tree_output(tmp_path):
    main(["run", str(write(tmp_path, SMALL["extract-subset"]))])
    rows = io.read_csv(tmp_path / "tree.csv", io.BALL_TREE_HEADER)
    assert rows[0][4] == "-1" and [int(r[5]) for r in rows] == list(range(len(rows)))


# ---------------------------------------------------------------- describe / gen / check-set


@pytest.mark.parametrize("kind", KINDS)
def test_describe(kind, capsys):
    assert main(["describe", kind]) == EXIT_OK
    out = capsys.readouterr().out
    assert f"kind: {kind}" in out and "anchor:" in out and "config:" in out


def test_describe_anchors(capsys):
    main(["describe", "incidence-audit"])
    assert "anchor: incidence bound" in capsys.readouterr().out
    main(["describe", "chain-check"])
    assert "anchor: multiscale chain inequality" in capsys.readouterr().out


def test_describe_unknown(capsys):
    assert main(["describe", "nope"]) == EXIT_CONFIG
    assert "unknown kind" in capsys.readouterr().err


def test_gen_and_check_set(tmp_path, capsys):
    spec = write(tmp_path, "[instance]\nfamily = four-corner\ndepth = 3\n", "spec.ini")
    pts = tmp_path / "pts.csv"
    assert main(["gen", str(spec), "-o", str(pts)]) == EXIT_OK
    X = io.read_points(pts)
    assert X.shape == (64, 2)
    assert json.loads((tmp_path / "pts.csv.meta.json").read_text())["level"] == 6
    capsys.readouterr()
    assert main(["check-set", str(pts), "--delta", str(2.0**-6), "--s", "1", "--C", "64"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "quantity,value,witness"
    assert main(["check-set", str(pts), "--delta", str(2.0**-6), "--s", "1", "--C", "0.5"]) == EXIT_FAIL
    assert main(["check-set", str(pts), "--delta", "0.5", "--s", "1", "--C", "64"]) == EXIT_FAIL
    assert main(["check-set", str(tmp_path / "none.csv"), "--delta", "0.1", "--s", "1", "--C", "1"]) == EXIT_MISSING


def test_gen_measure_ifs_and_intervals(tmp_path):
    spec = write(tmp_path, "[instance]\nfamily = full-grid\nlevel = 2\n", "g.ini")
    assert main(["gen", str(spec), "-o", str(tmp_path / "mu.txt")]) == EXIT_OK
    mu = io.read_measure(tmp_path / "mu.txt")
    assert len(mu) == 16 and np.allclose(mu.masses, 1 / 16)
    spec = write(tmp_path, "[instance]\nfamily = directed-ifs\nt = 1\nthetas_pi = 0, 1/2\n"
                 "prob = 1/2, 1/2\ndepth = 4\n", "i.ini")
    assert main(["gen", str(spec), "-o", str(tmp_path / "balls.csv")]) == EXIT_OK
    assert len(io.read_csv(tmp_path / "balls.csv", ("cx", "cy", "r"))) == 16
    spec = write(tmp_path, "[instance]\nfamily = arith-cantor\nN0 = 100\nt = 1\nk = 2\n", "a.ini")
    assert main(["gen", str(spec), "-o", str(tmp_path / "iv.csv")]) == EXIT_OK
    assert len(io.read_csv(tmp_path / "iv.csv", io.INTERVAL_HEADER)) >= 1
    assert main(["gen", str(tmp_path / "none.ini"), "-o", str(tmp_path / "x")]) == EXIT_MISSING
    spec = write(tmp_path, "[instance]\nfamily = product\nB = 3\nD = 0, 2\ndepth = 2\n", "b.ini")
    assert main(["gen", str(spec), "-o", str(tmp_path / "x.csv")]) == EXIT_CONFIG


def test_console_script_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "fplab.cli", "describe", "example14"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "kind: example14" in r.stdout


def test_mean_entropy_empty_direction_set_exits_two(tmp_path, capsys):
    text = SMALL["mean-entropy"].replace("directions_level = 3", "thetas_pi =")
    assert main(["run", str(write(tmp_path, text))]) == EXIT_CONFIG
    assert "empty" in capsys.readouterr().err
