from __future__ import annotations

import json
import subprocess
import sys

import pytest

from decaylab.cli import main


def _write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


@pytest.fixture
def U(tmp_path):
    return _write(tmp_path, "U.json", {"gram": [[0, 1], [1, 0]]})


def test_density_prints_exact_rational(U, capsys):
    assert main(["density", "--lattice", U, "--l", "3", "--m", "1"]) == 0
    assert capsys.readouterr().out.strip() == "2/3"


def test_density_json_and_enumeration_agree(U, capsys):
    assert main(["density", "--lattice", U, "--l", "3", "--m", "1", "--out", "json"]) == 0
    hensel = json.loads(capsys.readouterr().out)["density"]
    assert main(["density", "--lattice", U, "--l", "3", "--m", "1", "--method", "enumerate", "--out", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["density"] == hensel == "2/3"


@pytest.mark.parametrize("content,pointer", [
    ("{not json", "invalid JSON"),
    ({"gram": [[0, 1], [1]]}, "/gram/1"),
    ({"gram": [[0, 1], [1, "x"]]}, "/gram/1/1"),
    ({"matrix": []}, "/gram"),
])
def test_malformed_lattice_exits_2_with_pointer(tmp_path, capsys, content, pointer):
    path = _write(tmp_path, "bad.json", content)
    assert main(["density", "--lattice", path, "--l", "3", "--m", "1"]) == 2
    err = capsys.readouterr().err
    assert "SchemaError" in err and pointer in err


def test_unknown_subcommand_exits_2(capsys):
    assert main(["frobnicate"]) == 2


def test_crystal_scenario(tmp_path, capsys):
    sc = _write(tmp_path, "s.json", {"field": {"p": 3, "k": 2}, "m": 2, "T": 40,
                                     "x": [{"1": [0, 1]}, {"2": [0, 2]}], "y": [{"5": 1}, {"4": [1]}]})
    vs = _write(tmp_path, "v.json", [[0, 0, 1, 0, 0, 0], [1, 0, 0, 0, 0, 0]])
    assert main(["crystal", "--scenario", sc, "--vectors", vs, "--n-max", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["h"] == ["ge_T", 8, 14]
    assert out["a_seq"] == [1]
    assert [p["d"]["1"] for p in out["profiles"]] == [1, 8]
    assert out["scenario"]["field"]["modulus"] == [1, 0, 1]


def test_crystal_precision_override_and_schema(tmp_path, capsys):
    sc = _write(tmp_path, "s.json", {"field": {"p": 3, "k": 2}, "m": 2, "T": "long",
                                     "x": [{"1": 1}, {"1": 1}], "y": [{"2": 1}, {"2": 2}]})
    assert main(["crystal", "--scenario", sc]) == 2
    assert "/T" in capsys.readouterr().err
    assert main(["crystal", "--scenario", sc, "--precision", "4,30"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["scenario"]["T"] == 30 and out["scenario"]["N"] == 4


def test_words(tmp_path, capsys):
    ctx = _write(tmp_path, "c.json", {"p": 3, "m": 3, "h": {"0": "inf", "1": 8, "2": 14}, "vx": 5})
    assert main(["words", "--ctx", ctx, "--r", "3"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["minimal"] == ["Q1Q1x"] and out["nu_min"] == 485


def test_eisenstein_csv_has_intervals(tmp_path, capsys):
    g = [[0] * 6 for _ in range(6)]
    g[0][1] = g[1][0] = g[2][3] = g[3][2] = 1
    g[4][4] = g[5][5] = 2
    g[4][5] = g[5][4] = 1
    lat = _write(tmp_path, "L.json", {"gram": g})
    assert main(["eisenstein", "--lattice", lat, "--m-range", "1:4", "--out", "csv"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "m,lower,upper,ratio_to_m_pow"
    assert len(lines) == 5
    assert all('"[' in ln for ln in lines[1:])


def test_bounds_and_sweep(tmp_path, capsys):
    prm = _write(tmp_path, "p.json", {"p": 3, "a": 1, "a_k": 1, "n": 2, "m": 2, "c": [2, 2], "d": [2, 2],
                                      "h_ak": 8, "h_a": 8, "bd": 2, "gammas": [1, 1]})
    assert main(["bounds", "--params", prm, "--M", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["S"] == "1" and out["certificate"]["pass"]
    sw = _write(tmp_path, "sw.json", {"p": [3], "m_max": 4})
    assert main(["bounds", "--sweep", sw, "--out", "csv"]) == 0
    rows = capsys.readouterr().out.strip().splitlines()
    assert rows[0].startswith("kind,") and all(r.endswith("True") for r in rows[1:])


def test_bounds_relation_failure_exits_1(tmp_path, capsys):
    prm = _write(tmp_path, "p.json", {"p": 3, "a": 1, "a_k": 1, "n": 2, "m": 2, "c": [1, 2], "d": [3, 3],
                                      "h_ak": 6, "bd": 1})
    assert main(["bounds", "--params", prm]) == 1
    assert "RelationViolated" in capsys.readouterr().err


def test_lineconfig_counterexample_exits_1(tmp_path, capsys):
    coll = {"field": {"p": 3, "k": 2}, "T": 9,
            "x": [{"4": [1, 1]}, {"2": [2, 1], "4": [2, 0]}, {"2": [0, 1], "4": [2, 2]}, {"4": [0, 2]}],
            "y": [{"1": [2, 2], "3": [1, 2], "4": [2, 0], "5": [2, 0], "6": [2, 0], "7": [2, 0], "8": [0, 2]},
                  {"2": [1, 2], "3": [1, 1], "4": [1, 2], "5": [2, 0], "6": [1, 1], "7": [0, 1], "8": [2, 0]},
                  {"2": [1, 0], "3": [2, 0], "4": [1, 2], "5": [2, 2], "6": [2, 0], "7": [1, 1], "8": [1, 2]},
                  {"1": [0, 2], "2": [0, 1], "3": [1, 2], "4": [2, 0], "5": [1, 2], "6": [2, 2], "7": [2, 1],
                   "8": [2, 0]}]}
    path = _write(tmp_path, "c.json", coll)
    assert main(["lineconfig", "--collection", path, "--s", "0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["critical_point_law_violations"] == []
    assert main(["lineconfig", "--collection", path, "--s", "0", "--a", "1"]) == 1


def test_verify_is_deterministic(capsys, monkeypatch):
    args = ["verify", "--suite", "words,series", "--seed", "42", "--out", "json"]
    assert main(args) == 0
    first = capsys.readouterr().out
    monkeypatch.setenv("DECAYLAB_THREADS", "2")
    assert main(args) == 0
    assert capsys.readouterr().out == first


def test_module_entry_point(U):
    res = subprocess.run([sys.executable, "-m", "decaylab", "density", "--lattice", U, "--l", "3", "--m", "1"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and res.stdout.strip() == "2/3"
