import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from hdmeans.cli import main


@pytest.fixture
def files(tmp_path):
    g = np.random.default_rng(0)
    p = 24
    header = ",".join(f"g{k}" for k in range(p))
    x, y = g.normal(size=(20, p)), g.normal(size=(22, p))
    y[:, :4] += 1.5

    def dump(name, arr, labels=None):
        rows = [(f"{labels[i]}," if labels else "") + ",".join(repr(v) for v in r) for i, r in enumerate(arr.tolist())]
        head = ("label," if labels else "") + header
        (tmp_path / name).write_text(head + "\n" + "\n".join(rows) + "\n")
        return str(tmp_path / name)

    both = np.vstack([x, y])
    labels = ["ctrl"] * 20 + ["case"] * 22
    sets = {"A": [f"g{k}" for k in range(0, 20)], "B": [f"g{k}" for k in range(4, 24)], "tiny": ["g1"]}
    (tmp_path / "sets.json").write_text(json.dumps(sets))
    cfg = {"seed": 1, "replicates": 6, "M": 100,
           "scenarios": [{"id": "one", "model": 1, "n": 12, "p": 15, "betas": [0, 1], "tests": ["ns", "s"]}]}
    (tmp_path / "sim.json").write_text(json.dumps(cfg))
    (tmp_path / "mu0.csv").write_text(",".join(["0.1"] * p) + "\n")
    return {
        "x": dump("x.csv", x), "y": dump("y.csv", y), "grp": dump("grp.csv", both, labels),
        "sets": str(tmp_path / "sets.json"), "sim": str(tmp_path / "sim.json"),
        "mu0": str(tmp_path / "mu0.csv"), "dir": tmp_path,
    }


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_test_one(files, capsys):
    code, out, _ = run(["test-one", files["x"], "--seed", "3", "--mu0", files["mu0"]], capsys)
    assert code == 0
    d = json.loads(out)
    assert d["test"] == "one_sample:ns" and d["M"] == 1500 and d["seed"] == 3


def test_test_two_variants(files, capsys):
    code, out, _ = run(["test-two", files["x"], files["y"], "--studentized", "--screen",
                        "--mc-draws", "2000", "--alpha", "0.1"], capsys)
    assert code == 0
    d = json.loads(out)
    assert d["test"] == "two_sample:s_f" and d["M"] == 2000 and d["alpha"] == 0.1
    code, out2, _ = run(["test-two", files["grp"], "--group-column", "label", "--groups", "ctrl,case",
                         "--studentized", "--screen", "--mc-draws", "2000", "--alpha", "0.1"], capsys)
    assert code == 0 and out2 == out


def test_out_and_csv(files, capsys):
    target = files["dir"] / "res.csv"
    code, out, _ = run(["test-two", files["grp"], "--group-column", "label", "--format", "csv",
                        "--out", str(target)], capsys)
    assert code == 0 and out == ""
    rows = list(csv.DictReader(io.StringIO(target.read_text())))
    assert len(rows) == 1 and rows[0]["test"] == "two_sample:ns"


def test_batch(files, capsys):
    code, out, _ = run(["batch", files["x"], files["y"], "--sets", files["sets"], "--mc-draws", "5000",
                        "--fdr", "0.05"], capsys)
    assert code == 0
    d = json.loads(out)
    assert d["config"]["fdr_q"] == 0.05 and d["config"]["min_set_size"] == 19 and d["config"]["M"] == 5000
    assert {s["set_id"] for s in d["sets"]} == {"A", "B"}
    assert d["skipped"][0]["set_id"] == "tiny"


def test_batch_default_draws(files, capsys):
    code, out, _ = run(["batch", files["x"], files["y"], "--sets", files["sets"]], capsys)
    assert code == 0 and json.loads(out)["config"]["M"] == 50000


@pytest.mark.filterwarnings("ignore:M=")
def test_simulate(files, capsys):
    plot = files["dir"] / "plot.csv"
    code, out, _ = run(["simulate", files["sim"], "--emit-plot-data", str(plot)], capsys)
    assert code == 0
    reports = json.loads(out)
    assert [r["scenario"]["id"] for r in reports] == ["one/beta=0", "one/beta=1"]
    assert len(list(csv.DictReader(io.StringIO(plot.read_text())))) == 4
    code, out4, _ = run(["simulate", files["sim"], "--workers", "4"], capsys)
    assert out4 == out
    code, out_seed, _ = run(["simulate", files["sim"], "--seed", "99"], capsys)
    assert json.loads(out_seed)[0]["scenario"]["seed"] == 99


@pytest.mark.parametrize("argv", [
    ["test-one", "missing.csv"],
    ["test-two", "{x}"],
    ["test-two", "{x}", "{y}", "--group-column", "label"],
    ["test-two", "{grp}", "--group-column", "label", "--groups", "ctrl"],
    ["batch", "{x}", "{y}"],
    ["batch", "{x}", "{y}", "--sets", "{sets}", "--fdr", "2"],
    ["test-one", "{x}", "--bogus"],
    ["test-one", "{x}", "--mc-draws", "50"],
    ["test-one", "{x}", "--mu0", "{sets}"],
    [],
])
def test_usage_errors_exit_1(files, capsys, argv):
    argv = [a.format(**files) for a in argv]
    try:
        code = main(argv)
    except SystemExit as exc:  # argparse errors
        code = exc.code
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_degenerate_exit_2(tmp_path, capsys):
    (tmp_path / "c.csv").write_text("a,b\n1,1\n2,1\n3,1\n")
    code, _, err = run(["test-one", str(tmp_path / "c.csv"), "--studentized"], capsys)
    assert code == 2 and "degenerate" in err
    code, _, _ = run(["test-one", str(tmp_path / "c.csv")], capsys)
    assert code == 0


def test_console_script(files):
    proc = subprocess.run([sys.executable, "-m", "hdmeans", "test-one", files["x"], "--format", "csv"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("test,statistic")
