import json

import pytest

from phasebeam.cli import build_parser, main

CFG = {"n": 1, "potential": [{"exponents": [2], "coeff": 0.5}],
       "S_in": [{"exponents": [1], "coeff": 0.4}], "A_in": {"kind": "gaussian", "a": 1.0},
       "k": 1, "eps": [0.08, 0.04, 0.02], "times": [0.5], "reference": "exact-quadratic",
       "eulerian": {"x_range": [-1.5, 1.5], "p_range": [-1.5, 1.5], "counts": [21, 41, 81],
                    "times": [0.3], "probes": [0.0, 0.1], "dump_count": 11}}


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(CFG))
    return p


def test_parser_subcommands():
    ap = build_parser()
    args = ap.parse_args(["run", "--config", "x.json", "--out", "o", "--threads", "2"])
    assert (args.command, args.threads) == ("run", 2)
    with pytest.raises(SystemExit):
        ap.parse_args(["converge", "--config", "x.json", "--quantity", "bogus"])


def test_run_command(cfg_path, tmp_path, capsys):
    code = main(["run", "--config", str(cfg_path), "--out", str(tmp_path / "out")])
    out = capsys.readouterr().out
    print(out)
    assert code == 0
    assert (tmp_path / "out" / "rates.csv").exists()
    assert "total" in out


def test_converge_eulerian(cfg_path, tmp_path):
    code = main(["converge", "--config", str(cfg_path), "--quantity", "eulerian-vs-lagrangian",
                 "--out", str(tmp_path / "eul")])
    rep = json.loads((tmp_path / "eul" / "report.json").read_text())
    print("eulerian slope", rep["fits"]["eulerian"]["slope"])
    assert code in (0, 1)
    assert len(rep["rows"]) == 3


def test_caustic_demo(tmp_path):
    assert main(["caustic-demo", "--eps", "0.05", "--out", str(tmp_path / "c")]) == 0
    s = json.loads((tmp_path / "c" / "caustic.json").read_text())
    assert abs(s["err_sq_ratio"] - 1) < 0.01


def test_fields_dump(cfg_path, tmp_path):
    assert main(["fields-dump", "--config", str(cfg_path), "--time", "0.3",
                 "--out", str(tmp_path / "f")]) == 0
    lines = (tmp_path / "f" / "A.csv").read_text().splitlines()
    assert lines[0].startswith("x0,p0,re,im")
    assert len(lines) == 1 + 11 * 11


def test_bad_config_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(dict(CFG, eps=[])))
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "eps" in capsys.readouterr().err
