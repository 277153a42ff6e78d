import csv
import json
import logging
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stripes import make_params
from stripes.cli import COMMANDS, main, run
from stripes.config import REQUIRED, ConfigError, RunConfig, load_config, parse_pairs, parse_range, typed
from stripes.grid import load_grid
from stripes.profiles import equal_stripes, read_profiles, write_profiles
from stripes.report import NonFiniteError, RunReport, format_number, table_csv, write_report


def read_table(path):
    with open(path) as fh:
        first = fh.readline()
        rows = list(csv.DictReader(fh))
    assert first.startswith("# config_hash=")
    return first.strip().split("=", 1)[1], rows


# -- config ------------------------------------------------------------------------------

def test_parse_pairs_comments_and_errors():
    got = parse_pairs(["# header", "", "d = 2  # dimension", "alpha=0.1:0.9:0.1"])
    assert got == {"d": "2", "alpha": "0.1:0.9:0.1"}
    with pytest.raises(ConfigError, match=":2:"):
        parse_pairs(["d=2", "oops"], "f.cfg")
    with pytest.raises(ConfigError, match="empty key"):
        parse_pairs(["=3"])


def test_duplicate_key_last_wins_with_warning(caplog):
    with caplog.at_level(logging.WARNING):
        got = parse_pairs(["tau=0.1", "tau=0.2"], "f.cfg")
    assert got["tau"] == "0.2"
    assert "duplicate key 'tau'" in caplog.text


def test_load_config_precedence(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("tau=0.1\nd=2\n")
    cfg = load_config(f, "lambda-table", {"tau": "0.3"})
    assert cfg.values == {"tau": "0.3", "d": "2"}
    empty = tmp_path / "empty.cfg"
    empty.write_text("")
    assert load_config(empty, "params", {"d": "3"}).values == {"d": "3"}


def test_parse_range():
    assert parse_range("0.1:0.9:0.2") == [0.1, 0.3, 0.5, 0.7, 0.9]
    assert parse_range("0.1:0.9:0.05")[-1] == 0.9
    assert parse_range("1,2.5") == [1.0, 2.5]
    assert parse_range("0.5") == [0.5]
    for bad in ("1:2", "1:0:0.1", "0:1:0"):
        with pytest.raises(ConfigError):
            parse_range(bad)


def test_typed_validation():
    schema = {"alpha": ("float", 0.5), "seed": ("int", REQUIRED), "alphas": ("range", "0.1:0.3:0.1")}
    out = typed(RunConfig("x", {"seed": "3"}), schema)
    assert out == {"alpha": 0.5, "seed": 3, "alphas": [0.1, 0.2, 0.3]}
    with pytest.raises(ConfigError, match="alhpa"):
        typed(RunConfig("x", {"seed": "1", "alhpa": "0.3"}), schema)
    with pytest.raises(ConfigError, match="seed"):
        typed(RunConfig("x", {}), schema)
    with pytest.raises(ConfigError, match="bad value"):
        typed(RunConfig("x", {"seed": "one"}), schema)


def test_config_hash_stable():
    a = RunConfig("params", {"d": "2", "p": "4"})
    b = RunConfig("params", {"p": "4", "d": "2"})
    assert a.hash() == b.hash() and len(a.hash()) == 16
    assert RunConfig("params", {"d": "3"}).hash() != a.hash()


# -- report ------------------------------------------------------------------------------

@given(st.floats(allow_nan=False, allow_infinity=False))
def test_format_number_round_trips(x):
    assert float(format_number(x)) == x


def test_non_finite_output_writes_nothing(tmp_path):
    rep = RunReport("x", {}, "abc", "0")
    rep.add_table("t", ["a"], [(1.0,), (math.nan,)])
    with pytest.raises(NonFiniteError):
        write_report(rep, tmp_path / "x")
    assert list(tmp_path.iterdir()) == []


def test_table_csv_layout():
    rep = RunReport("x", {}, "abc", "0")
    t = rep.add_table("t", ["a", "b"], [(1, 0.1), (2, "x,y")])
    assert table_csv(t, "abc") == '# config_hash=abc\na,b\n1,0.10000000000000001\n2,"x,y"\n'
    bad = rep.add_table("u", ["a"], [(1, 2)])
    with pytest.raises(ValueError):
        table_csv(bad, "abc")


# -- commands ------------------------------------------------------------------------------

@pytest.fixture
def in_tmp(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_every_command_registered():
    assert set(COMMANDS) == {
        "params", "lambda-table", "optimal-period", "convexity-scan", "abc-check", "rate-scan",
        "profile-energy", "minimize-profile", "rp-probe", "grid-energy", "grid-decompose",
        "grid-distance", "grid-classify", "grid-anneal",
    }


def test_lambda_table_example(in_tmp, capsys):
    assert main(["lambda-table", "d=2", "p=4", "tau=0", "alpha=0.1:0.9:0.05"]) == 0
    h, rows = read_table(in_tmp / "lambda_table_lambda.csv")
    assert list(rows[0]) == ["alpha", "h_star", "lambda", "d_alpha", "d2_alpha"]
    mid = next(r for r in rows if float(r["alpha"]) == 0.5)
    assert float(mid["lambda"]) == pytest.approx(-3.0 / (16.0 * math.log(2.0)), abs=1e-9)
    meta = json.loads((in_tmp / "lambda_table.json").read_text())
    assert meta["config_hash"] == h and meta["config"]["tau"] == "0"
    assert meta["falsifications"] == []
    assert "lambda_table_lambda.csv" in capsys.readouterr().out


def test_config_file_and_override(in_tmp):
    (in_tmp / "run.cfg").write_text("d=2\np=4\ntau=0.5\nalpha=0.5\nout=res/p\n")
    assert main(["optimal-period", "--config", "run.cfg", "tau=0"]) == 0
    _, rows = read_table(in_tmp / "res" / "p_period.csv")
    assert rows[0]["sign_changes"] == "1"
    meta = json.loads((in_tmp / "res" / "p.json").read_text())
    assert meta["config"]["tau"] == "0"


@pytest.mark.parametrize(
    "argv",
    [
        ["no-such-command"],
        ["lambda-table", "alhpa=0.3"],
        ["lambda-table", "garbage"],
        ["lambda-table", "p=2"],
        ["rp-probe", "n_samples=3"],
        ["profile-energy"],
        ["grid-energy", "fixture=hexagons"],
    ],
)
def test_errors_exit_1(in_tmp, argv, capsys):
    assert main(argv) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_falsification_exits_2(in_tmp, capsys):
    # a negative tolerance turns the equality case into a reported violation
    argv = ["grid-decompose", "fixture=stripes", "n=32", "period_cells=16", "L=4", "tau=0.05", "slack_tol=-1"]
    assert main(argv) == 2
    assert "falsification [decomposition_slack]" in capsys.readouterr().err
    meta = json.loads((in_tmp / "grid_decompose.json").read_text())
    assert meta["falsifications"][0]["kind"] == "decomposition_slack"


def test_params_and_verify(in_tmp):
    assert main(["params", "d=2", "p=4", "tau=0.1", "verify=true", "jc=true"]) == 0
    _, rows = read_table(in_tmp / "params_params.csv")
    prm = make_params(2, 4, 0.1)
    assert float(rows[0]["c1"]) == prm.c1 and float(rows[0]["eps"]) == prm.eps


def test_analytic_commands_run(in_tmp):
    assert main(["convexity-scan", "tau=0.01", "alpha=0.2:0.8:0.2"]) == 0
    assert main(["abc-check", "alpha=0.1,0.3"]) == 0
    assert main(["rate-scan", "tau=1e-3,1e-2", "alpha=0.5", "n_h=16"]) == 0
    meta = json.loads((in_tmp / "rate_scan.json").read_text())
    assert meta["summary"]["expected_slope"] == 1.0


def test_profile_energy_from_file(in_tmp):
    prm = make_params(2, 4, 0.1)
    write_profiles(in_tmp / "p.jsonl", [(equal_stripes(2, 0.5, 6.0), prm), (equal_stripes(1, 0.3, 4.0), prm)])
    assert main(["profile-energy", "input=p.jsonl"]) == 0
    _, rows = read_table(in_tmp / "profile_energy_energies.csv")
    assert len(rows) == 2
    assert all(abs(float(r["identity_residual"])) < 1e-8 for r in rows)


def test_rp_probe_byte_identical(in_tmp):
    argv = ["rp-probe", "tau=0.1", "n_samples=40", "m_max=3", "L_min=2", "L_max=8", "seed=7"]
    main(argv + ["out=a"])
    main(argv + ["out=b"])
    assert (in_tmp / "a_rp.csv").read_bytes() == (in_tmp / "b_rp.csv").read_bytes()


def test_minimize_profile_small(in_tmp):
    argv = ["minimize-profile", "tau=0.1", "grid_n=60", "n_starts=3", "seed=1"]
    assert main(argv) == 0
    items = read_profiles(in_tmp / "minimize_profile_profiles.jsonl")
    assert len(items) == 4


def test_grid_commands(in_tmp):
    common = ["n=32", "L=8", "tau=0.05"]
    assert main(["grid-energy", "fixture=checkerboard", "cell=4"] + common) == 0
    assert main(["grid-distance", "fixture=stripes", "period_cells=8"] + common) == 0
    _, rows = read_table(in_tmp / "grid_distance_distance.csv")
    assert float(rows[0]["D_eta"]) == 0.0 and float(rows[1]["D_eta"]) == 0.5
    assert main(["grid-distance", "fixture=disc", "alpha=0.3", "center=16,16", "l=2"] + common) == 0
    assert main(["grid-classify", "fixture=stripes", "period_cells=8", "l=2"] + common) == 0
    _, rows = read_table(in_tmp / "grid_classify_regions.csv")
    assert {int(r["label"]): float(r["fraction"]) for r in rows}[1] == 1.0
    assert main(["grid-energy", "fixture=random", "alpha=0.25"] + common) == 1


def test_grid_anneal_small(in_tmp, caplog):
    argv = ["grid-anneal", "n=16", "alpha=0.3", "moves=20000", "t_start=1", "t_end=0.1", "seed=4"]
    with caplog.at_level(logging.WARNING):
        assert main(argv) == 0
    assert "using 77/256" in caplog.text
    meta = json.loads((in_tmp / "grid_anneal.json").read_text())
    assert meta["summary"]["occupied_cells"] == 77
    assert meta["summary"]["max_mismatch"] < 1e-8
    grid, prm = load_grid(in_tmp / "grid_anneal.grid")
    assert grid.n_occupied == 77 and prm.tau == 0.05
    _, trace = read_table(in_tmp / "grid_anneal_trace.csv")
    assert int(trace[-1]["move"]) == 20000
    # rerun reproduces the trace exactly
    main(argv + ["out=again"])
    assert (in_tmp / "again_trace.csv").read_text() == (in_tmp / "grid_anneal_trace.csv").read_text()


def test_run_returns_report(in_tmp):
    rep = run("params", RunConfig("params", {"d": "3", "p": "6"}))
    assert rep.tables[0].rows[0][0] == 3
    assert rep.wall_time >= 0 and rep.version
