import csv
import io
import json
import os
import subprocess
import sys

import pytest

from cachecalc.cli import main


def run(*args, env=None):
    full = dict(os.environ, **(env or {}))
    return subprocess.run([sys.executable, "-m", "cachecalc", *args], capture_output=True, text=True, env=full)


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_exact_example(capsys):
    assert main(["exact", "-K", "2", "-L", "2", "--t", "1"]) == 0
    row = rows_of(capsys.readouterr().out)[0]
    assert (row["exact"], row["t_min"], row["g"]) == ("0.75", "0.5", "1.5")


def test_exact_full_cache(capsys):
    assert main(["exact", "-K", "3", "-L", "3", "--t", "3"]) == 0
    row = rows_of(capsys.readouterr().out)[0]
    assert row["exact"] == "0" and row["g"] == "1"


def test_gamma_grid_and_no_gain_note(capsys):
    assert main(["exact", "-K", "4,8", "-L", "4", "--gamma", "0,0.5"]) == 0
    rows = rows_of(capsys.readouterr().out)
    assert [(r["users"], r["t"]) for r in rows] == [("4", "0"), ("4", "2"), ("8", "0"), ("8", "2")]
    assert rows[0]["note"] == "no coded gain (t=0)"


def test_budget_refusal_is_row_error(capsys):
    assert main(["exact", "-K", "10,60", "-L", "20", "--t", "2", "--budget", "1000"]) == 1
    rows = rows_of(capsys.readouterr().out)
    assert rows[0]["error"] == "" and rows[0]["exact"] != ""
    assert "budget" in rows[1]["error"] and rows[1]["exact"] == ""


def test_bounds_columns(capsys):
    argv = ["bounds", "-K", "16", "-L", "8", "--t", "2", "--rho", "0.9", "--alpha", "1", "--policy", "proximity", "--h", "2"]
    assert main(argv) == 0
    row = rows_of(capsys.readouterr().out)[0]
    for key in ("aub", "alb", "nlb", "nub", "rho_realized", "nu_aub", "nu_alb", "prox_aub"):
        assert row[key] != "", key
    assert row["sbn_mean"] == ""


def test_proximity_bounds_monotone_in_h(capsys):
    vals = []
    for h in (1, 2, 4, 8):
        assert main(["bounds", "-K", "64", "-L", "16", "--t", "2", "--policy", "proximity", "--h", str(h)]) == 0
        vals.append(float(rows_of(capsys.readouterr().out)[0]["prox_aub"]))
    assert vals == sorted(vals, reverse=True)


def test_lower_bound_refusal(capsys):
    assert main(["bounds", "-K", "3", "-L", "1", "--t", "0"]) == 1
    assert "caches >= 2" in rows_of(capsys.readouterr().out)[0]["error"]


@pytest.mark.parametrize(
    "argv,field",
    [
        (["simulate", "-K", "8", "-L", "4", "--t", "1"], "--seed"),
        (["exact", "-K", "8", "-L", "4"], "--t"),
        (["exact", "-K", "8", "-L", "4", "--t", "1", "--gamma", "0.25"], "--t"),
        (["exact", "-K", "8", "-L", "4", "--t", "5"], "--t"),
        (["exact", "-K", "8", "-L", "4", "--gamma", "0.3"], "--gamma"),
        (["bounds", "-K", "8", "-L", "4", "--t", "1", "--rho", "1.5"], "--rho"),
        (["simulate", "-K", "8", "-L", "4", "--t", "1", "--seed", "1", "--policy", "hchoice", "--h", "9"], "--h"),
        (["exact", "-K", "x", "-L", "4", "--t", "1"], "grid"),
        (["probe-scaling", "-L", "2", "--regime", "K=L", "--seed", "1"], "--caches"),
    ],
)
def test_spec_errors(capsys, argv, field):
    assert main(argv) == 2
    err = capsys.readouterr().err
    assert field in err


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "spec.yaml"
    cfg.write_text("users: [2]\ncaches: [2]\nt: [1]\nformat: json\n")
    assert main(["exact", "--config", str(cfg)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload[1]["exact"] == 0.75
    assert main(["exact", "--config", str(cfg), "-K", "4", "--format", "csv"]) == 0
    assert rows_of(capsys.readouterr().out)[0]["users"] == "4"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"colour": 1}))
    assert main(["exact", "--config", str(bad)]) == 2


def test_simulate_byte_identical_across_workers(tmp_path):
    outs = []
    for threads in ("1", "4", "1"):
        out = tmp_path / f"sim{len(outs)}.json"
        r = run("simulate", "-K", "20", "-L", "5", "--t", "1,2", "--samples", "5000", "--seed", "42",
                "--policy", "hchoice", "--h", "2", "--format", "json", "--out", str(out),
                env={"CACHECALC_THREADS": threads})
        assert r.returncode == 0, r.stderr
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_probe_scaling(capsys):
    assert main(["probe-scaling", "-L", "16,32", "--regime", "K=L^2", "--seed", "1", "--samples", "200"]) == 0
    rows = rows_of(capsys.readouterr().out)
    assert [r["users"] for r in rows] == ["256", "1024"]
    assert all(r["ratio"] and r["normalizer"] == "1" for r in rows)


def test_figure_writes_data_and_png(tmp_path):
    out = tmp_path / "fig2.csv"
    assert main(["figure", "2", "--out", str(out)]) == 0
    rows = rows_of(out.read_text())
    assert len(rows) == 8 * 9
    assert (tmp_path / "fig2.png").stat().st_size > 0


def test_figure_no_plot(tmp_path):
    out = tmp_path / "fig3.json"
    assert main(["figure", "3", "--out", str(out), "--format", "json", "--no-plot"]) == 0
    assert not (tmp_path / "fig3.png").exists()
    rows = json.loads(out.read_text())[1:]
    assert all(0 <= r["cdf"] <= 1 for r in rows)


def test_entry_point_version():
    r = run("--version")
    assert r.returncode == 0 and "0.1.0" in r.stdout
