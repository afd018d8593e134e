import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from toyns.analysis import read_diagnostics
from toyns.cli import main

SMALL = [
    "lattice.N=16",
    "lattice.h=1/8",
    "data.center=0.55,-0.55",
    "data.radius=0.2",
    "data.amplitude=0.5",
    "stepper.dt=1e-3",
    "stepper.t_end=0.02",
    "stepper.record_interval=0.005",
]


def run(cmd, out, *overrides, config=None, threads=None):
    argv = [cmd, "--out", str(out)]
    if config:
        argv += ["--config", str(config)]
    if threads:
        argv += ["--threads", str(threads)]
    for o in overrides:
        argv += ["--override", o]
    return main(argv)


def test_simulate_outputs(tmp_path, capsys):
    assert run("simulate", tmp_path, *SMALL) == 0
    assert "reached_t_end" in capsys.readouterr().out
    for name in ("config.json", "diagnostics.csv", "diagnostics.csv.meta", "summary.txt", "checkpoints/final.tnsf"):
        assert (tmp_path / name).exists(), name
    cfg = json.loads((tmp_path / "config.json").read_text())
    assert cfg["lattice"]["N"] == 16
    for name in ("diagnostics.csv", "summary.txt"):
        first = (tmp_path / name).read_text().splitlines()[0]
        assert json.loads(first.split(":", 1)[1]) == cfg
    data = read_diagnostics(tmp_path / "diagnostics.csv")
    assert len(data["t"]) == 5


def test_simulate_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("simulate", a, *SMALL) == 0
    assert run("simulate", b, *SMALL) == 0
    for name in ("diagnostics.csv", "summary.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_blowup_is_exit_zero(tmp_path, capsys):
    over = SMALL[:4] + ["data.amplitude=400", "stepper.adaptive=true", "stepper.t_end=1", "stepper.record_interval=0.1"]
    assert run("simulate", tmp_path, *over) == 0
    assert "norm_cap_exceeded" in (tmp_path / "summary.txt").read_text()


@pytest.mark.parametrize(
    "overrides",
    [["lattice.N=abc"], ["bogus.x=1"], ["data.center=0.6,0.6"], ["lattice.N=4"], ["model.kind=XYZ"]],
)
def test_malformed_config_exit_nonzero(tmp_path, overrides, capsys):
    assert run("simulate", tmp_path, *overrides) != 0
    assert "error:" in capsys.readouterr().err


def test_malformed_config_file(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[lattice]\nN = twelve\n")
    assert run("simulate", tmp_path / "o", config=bad) == 2
    assert run("simulate", tmp_path / "o", config=tmp_path / "nope.ini") == 2


def test_certify_insufficient(tmp_path, capsys):
    over = ["lattice.N=64", "lattice.h=1/16", "data.radius=0.1", "data.amplitude=1"]
    assert run("certify", tmp_path, *over) == 0
    out = capsys.readouterr().out
    assert "no certificate: amplitude" in out
    assert (tmp_path / "certificate.txt").exists()


def test_certify_issues_and_warns(tmp_path, capsys):
    over = ["lattice.N=64", "lattice.h=1/16", "data.radius=0.1", "data.amplitude=32", "run.k_max=5", "run.simulate=false"]
    assert run("certify", tmp_path, *over) == 0
    out = capsys.readouterr().out
    assert "blow-up certificate" in out and "warning: lattice room limits" in out
    rows = list(csv.reader(l for l in (tmp_path / "certificate.csv").read_text().splitlines() if not l.startswith("#")))
    assert rows[0][0] == "k" and len(rows) >= 2


def test_certify_with_domination(tmp_path, capsys):
    over = ["lattice.N=64", "lattice.h=1/16", "data.radius=0.1", "data.amplitude=32", "stepper.t_end=0.3"]
    assert run("certify", tmp_path, *over) == 0
    text = (tmp_path / "domination.txt").read_text()
    assert "checkpoint k=0" in text
    assert (tmp_path / "domination.csv").exists()


def test_compare_small_data(tmp_path, capsys):
    assert run("compare", tmp_path, *SMALL) == 0
    summary = (tmp_path / "compare_summary.txt").read_text()
    assert summary.count("reached_t_end") == 2
    header = [l for l in (tmp_path / "compare.csv").read_text().splitlines() if not l.startswith("#")][0]
    assert header.startswith("t,tns_sup_fourier") and "ns_heat_besov_minus1" in header


def test_sweep_empty_grid_is_noop(tmp_path, capsys):
    assert run("sweep", tmp_path, *SMALL) == 0
    lines = [l for l in (tmp_path / "sweep.csv").read_text().splitlines() if not l.startswith("#")]
    assert len(lines) == 1


def test_sweep_records_cell_failures(tmp_path, capsys):
    p = tmp_path / "s.ini"
    p.write_text("[sweep]\ncommand = norms\ndata.amplitude = 1, 2\ndata.radius = 0.2, 0.9\n")
    assert run("sweep", tmp_path / "o", *SMALL, config=p, threads=2) == 0
    rows = list(csv.DictReader(l for l in (tmp_path / "o" / "sweep.csv").read_text().splitlines() if not l.startswith("#")))
    assert len(rows) == 4
    assert [bool(r["error"]) for r in rows] == [False, True, False, True]
    assert float(rows[2]["A"]) == pytest.approx(2 * float(rows[0]["A"]))


def test_eps_sweep_monotone(tmp_path, capsys):
    assert run("sweep", tmp_path, config=Path(__file__).resolve().parents[1] / "configs" / "eps_sweep.ini") == 0
    rows = list(csv.DictReader(l for l in (tmp_path / "sweep.csv").read_text().splitlines() if not l.startswith("#")))
    vals = [float(r["heat_besov_minus1"]) for r in rows]
    assert [r["data.eps"] for r in rows] == ["0.1", "0.01", "0.001"]
    assert vals[0] < vals[1] < vals[2]


def test_verify_multipliers(tmp_path, capsys):
    assert run("verify-multipliers", tmp_path, "lattice.N=16", "run.positivity_samples=1000") == 0
    assert "PASS" in (tmp_path / "positivity.txt").read_text()


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "toyns", "simulate", "--out", str(tmp_path), "--override", "lattice.N=x"], capture_output=True, text=True)
    assert res.returncode == 2 and "lattice.N" in res.stderr
