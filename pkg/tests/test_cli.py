import json

import pytest

from moran.cli import main

EX31 = {"K": 3, "rates": [[0, 7, 2], [1, 0, 6], [5, 7, 0]]}
CIRC = {"K": 3, "rates": [[0, 1, 2], [2, 0, 1], [1, 2, 0]]}


@pytest.fixture
def files(tmp_path):
    (tmp_path / "ex.json").write_text(json.dumps(EX31))
    (tmp_path / "circ.json").write_text(json.dumps(CIRC))
    return tmp_path


def test_spectrum_to_stdout(capsys):
    assert main(["spectrum", "--mu", "1,2,3", "--N", "2", "--p", "1", "--model", "parent-independent"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert [(r["re"], r["multiplicity"]) for r in rows] == [(0.0, 1), (-6.0, 2), (-13.0, 3)]


def test_reproduction_catalog(capsys):
    assert main(["spectrum", "--model", "reproduction", "--K", "2", "--N", "3"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert {r["re"]: r["multiplicity"] for r in rows} == {0.0: 2, -2.0: 1, -6.0: 1}


def test_out_manifest_and_rerun(files):
    out = files / "cat.json"
    args = ["spectrum", "--mutation", str(files / "ex.json"), "--N", "3", "--p", "1", "--verify", "brute", "--out", str(out)]
    assert main(args) == 0
    first = out.read_bytes()
    man = json.loads((files / "cat.json.manifest.json").read_text())
    assert man["command"] == "spectrum"
    assert list(man["inputs"].values())[0] and man["results"]["bottleneck_distance"] < 1e-8
    assert main(args) == 0
    assert out.read_bytes() == first


@pytest.mark.parametrize(
    "argv",
    [
        ["spectrum", "--mutation", "nope.json", "--N", "3"],
        ["spectrum", "--mu", "1,-2", "--N", "3"],
        ["spectrum", "--mu", "1,2", "--N", "0"],
        ["mix", "--mu", "1,1", "--N", "3", "--times", "0:1"],
        ["mix", "--mu", "1,1", "--N", "3", "--times", "0:1:0.5", "--start", "Nek:5"],
        ["simulate", "--mu", "1,1", "--N", "3", "--horizon", "-1"],
        ["frobnicate"],
    ],
)
def test_invalid_inputs_exit_2(argv, files, monkeypatch):
    monkeypatch.chdir(files)
    out = files / "never.csv"
    assert main(argv + (["--out", str(out)] if argv[0] != "frobnicate" else [])) == 2
    assert not out.exists()


def test_capacity_exit_3(capsys):
    assert main(["spectrum", "--mu", "1,1,1,1", "--N", "6", "--verify", "brute", "--cap", "10"]) == 3


def test_unsupported_exit_4(files):
    argv = ["mix", "--mutation", str(files / "ex.json"), "--N", "2", "--times", "0:1:0.5", "--method", "spectral"]
    assert main(argv) == 4


def test_mix_cross_check(files, capsys):
    out = files / "mix.csv"
    argv = ["mix", "--mu", "1/2,1,3/2", "--N", "3", "--p", "1", "--times", "0:2:0.5", "--cross-check", "--out", str(out)]
    assert main(argv) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,value,metric,provenance" and len(lines) == 6
    man = json.loads((files / "mix.csv.manifest.json").read_text())
    assert man["results"]["max_abs_delta_uniformization_vs_spectral"] < 1e-10


def test_closed_form_chi2_with_overflow(capsys):
    argv = ["mix", "--mu", "1/3,1/3,1/3", "--N", "1000", "--times", "0:5:1", "--metric", "chi2", "--method", "closed-form"]
    assert main(argv) == 0
    rows = capsys.readouterr().out.splitlines()[1:]
    assert rows[0].startswith("0.0,inf")


def test_cutoff_table(capsys):
    assert main(["cutoff", "--mu", "1/3,1/3,1/3", "--c-range=-2:2:2", "--N-list", "100,5000"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert len(rows) == 1 + 6


def test_checks(files, capsys):
    assert main(["check", "--mutation", str(files / "circ.json"), "--N", "2", "--p", "1", "--what", "reversibility"]) == 1
    assert "(2, 0, 0)" in capsys.readouterr().out
    assert main(["check", "--mu", "1,2,3", "--N", "3", "--p", "1", "--what", "reversibility"]) == 0
    assert main(["check", "--mu", "1,2,3", "--N", "3", "--p", "2", "--what", "stationarity"]) == 0
    assert main(["check", "--mutation", str(files / "ex.json"), "--N", "3", "--p", "1", "--what", "slem"]) == 0


def test_simulate_reproducible(files, monkeypatch):
    a, b = files / "a.csv", files / "b.csv"
    base = ["simulate", "--mutation", str(files / "ex.json"), "--N", "4", "--p", "1", "--horizon", "0.2", "--replicas", "3000", "--seed", "9"]
    monkeypatch.setenv("MORAN_THREADS", "1")
    assert main(base + ["--out", str(a)]) == 0
    monkeypatch.setenv("MORAN_THREADS", "4")
    assert main(base + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads((files / "a.csv.manifest.json").read_text())["seed"] == 9
