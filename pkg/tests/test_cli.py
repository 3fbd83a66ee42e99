import csv
import json

import pytest

from ztescape import report as report_mod
from ztescape.cli import main
from ztescape.config import (ConfigParseError, GuardViolation, build_config,
                             validate_config)
from ztescape.errors import NumericalError
from ztescape.rates import DETERMINISTIC_METHODS, METHODS
from ztescape.report import run_point, run_sweep

FIXED_TS = "2000-01-01T00:00:00+00:00"


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


# -- configuration -----------------------------------------------------------

def test_valid_config():
    cfg = validate_config("ys = 10\ngamma = 0.01\nmethods = asymptotic,perturbative\n")
    assert cfg.ys == (10.0,) and cfg.gamma == (0.01,)
    assert cfg.methods == ("asymptotic", "perturbative")
    assert cfg.grid_cells == 4000  # default applied
    assert "grid_cells = 4000" in cfg.echo()


def test_comments_and_all_keyword():
    cfg = validate_config("# point\n\nys = 8   # barrier\nmethods = all, langevin_mc\n")
    assert cfg.methods == DETERMINISTIC_METHODS + ("langevin_mc",)


def test_gamma_guard():
    with pytest.raises(GuardViolation) as exc:
        validate_config("gamma = 0.5\n")
    assert exc.value.exit_code == 3
    assert exc.value.constraint == "gamma/Omega0 <= 0.1"


def test_eigenvalue_barrier_guard():
    with pytest.raises(GuardViolation, match="ys >= 2"):
        validate_config("ys = 1.5\nmethods = laguerre_root\n")
    assert validate_config("ys = 1.5\nmethods = asymptotic\n").ys == (1.5,)


@pytest.mark.parametrize("text,line", [
    ("ys = 10\nbogus = 1\n", 2),
    ("methods = \n", 1),
    ("ys = 10\ngamma = abc\n", 2),
    ("ys 10\n", 1),
    ("methods = asymptotic, warp\n", 1),
    ("ys = 1\nys = 2\n", 2),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigParseError) as exc:
        validate_config(text)
    assert exc.value.exit_code == 2
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_two_sweep_axes_rejected():
    with pytest.raises(ConfigParseError):
        validate_config("ys = 6,8\ngamma = 0.01,0.02\n")


def test_config_hash_ignores_output_location():
    a = build_config({"out": "a"})
    b = build_config({"out": "b"})
    c = build_config({"seed": 3})
    assert a.config_hash() == b.config_hash() != c.config_hash()


# -- run_point ---------------------------------------------------------------

def test_run_point_deterministic_suite(tmp_path):
    cfg = build_config({"ys": (10.0,), "gamma": (0.01,)})
    rep = run_point(cfg, tmp_path, timestamp=FIXED_TS)
    assert rep.exit_code == 0
    rows = {r["method"]: r for r in read_csv(tmp_path / "rates.csv")}
    assert list(rows) == list(DETERMINISTIC_METHODS)
    assert float(rows["asymptotic"]["rate"]) == pytest.approx(9.080e-6, rel=5e-4)
    assert float(rows["perturbative"]["rate"]) == pytest.approx(8.034e-6, rel=5e-4)
    assert rows["asymptotic"]["lo"] == "" and rows["asymptotic"]["hi"] == ""
    data = json.loads((tmp_path / "report.json").read_text())
    assert set(data["results"]) == set(DETERMINISTIC_METHODS)
    assert all(r["method"] in METHODS for r in data["results"].values())
    assert data["results"]["asymptotic"]["rate_over_omega0"] == pytest.approx(9.07998e-6, rel=1e-5)
    assert data["config_hash"] == cfg.config_hash()
    assert "perturbative/asymptotic" in data["ratios"]
    assert {"version", "timestamp", "seed", "warnings", "status"} <= set(data)


def test_rate_units_follow_omega0(tmp_path):
    cfg = build_config({"ys": (10.0,), "gamma": (0.01,), "omega0": 2.0, "methods": ("asymptotic",)})
    data = json.loads((run_point(cfg, tmp_path) and tmp_path / "report.json").read_text())
    entry = data["results"]["asymptotic"]
    assert entry["rate"] == pytest.approx(2 * 9.07998595e-6, rel=1e-8)
    assert entry["rate_over_omega0"] == pytest.approx(9.07998595e-6, rel=1e-8)


def test_single_method_csv(tmp_path):
    run_point(build_config({"methods": ("asymptotic",)}), tmp_path)
    assert len(read_csv(tmp_path / "rates.csv")) == 1


def test_report_is_reproducible(tmp_path):
    cfg = build_config({"ys": (8.0,), "gamma": (0.02,)})
    run_point(cfg, tmp_path / "a")
    run_point(cfg, tmp_path / "b")

    def strip(p):
        return [ln for ln in p.read_text().splitlines() if '"timestamp"' not in ln]

    assert strip(tmp_path / "a" / "report.json") == strip(tmp_path / "b" / "report.json")
    assert (tmp_path / "a" / "rates.csv").read_bytes() == (tmp_path / "b" / "rates.csv").read_bytes()


def test_partial_failure(tmp_path, monkeypatch):
    real = report_mod.compute_method

    def flaky(method, *args):
        if method == "perturbative":
            raise NumericalError("synthetic failure")
        return real(method, *args)

    monkeypatch.setattr(report_mod, "compute_method", flaky)
    rep = run_point(build_config({"methods": ("asymptotic", "perturbative")}), tmp_path)
    assert rep.exit_code == 1
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["status"] == "partial"
    assert data["results"]["perturbative"]["status"] == "error"
    assert [r["method"] for r in read_csv(tmp_path / "rates.csv")] == ["asymptotic"]
    assert data["ratios"] == {}


def test_profile_output(tmp_path):
    cfg = build_config({"ys": (6.0,), "gamma": (0.05,), "methods": ("fp_numeric",), "grid_cells": 200,
                        "profile": True})
    run_point(cfg, tmp_path)
    assert (tmp_path / "profile.csv").read_text().startswith("y,F,t\n")


def test_monte_carlo_point(tmp_path):
    cfg = build_config({"ys": (4.0,), "gamma": (0.1,), "methods": ("langevin_mc",), "ntraj": 30,
                        "t_max": 60.0, "seed": 1})
    rep = run_point(cfg, tmp_path)
    row = read_csv(tmp_path / "rates.csv")[0]
    assert row["method"] == "langevin_mc" and row["lo"] != "" and row["hi"] != ""
    assert float(row["lo"]) <= float(row["rate"]) <= float(row["hi"])
    assert (tmp_path / "survival.csv").read_text().startswith("t,S,lo95,hi95\n")
    assert (tmp_path / "first_passage.csv").read_text().startswith("traj_id,seed,escape_time,censored\n")
    assert rep.results["langevin_mc"].diagnostics["seed"] == 1


# -- sweeps ------------------------------------------------------------------

def test_sweep_ratio_increasing(tmp_path):
    cfg = build_config({"ys": (6.0, 8.0, 10.0, 12.0), "gamma": (0.01,), "workers": 2,
                        "methods": ("asymptotic", "perturbative", "tunnel_isolated")})
    res = run_sweep(cfg, tmp_path)
    assert res.strictly_increasing is True
    rows = read_csv(tmp_path / "sweep.csv")
    assert list(rows[0]) == ["ys", "gamma", "method", "rate"]
    assert len(rows) == 12
    summary = json.loads((tmp_path / "sweep_summary.json").read_text())
    assert summary["ratio_strictly_increasing_in_ys"] is True
    assert len(list((tmp_path / "points").iterdir())) == 4


def test_single_point_sweep_equals_run_point(tmp_path):
    cfg = build_config({"ys": (9.0,), "gamma": (0.03,)})
    rep = run_point(cfg, tmp_path / "p")
    res = run_sweep(cfg, tmp_path / "s")
    sweep_rates = {m: r for _, _, m, r in res.rows}
    assert sweep_rates == {m: r.rate for m, r in rep.results.items()}


def test_sweep_continues_past_failures(tmp_path, monkeypatch):
    real = report_mod.compute_method

    def flaky(method, cfg, ys, gamma):
        if ys == 8.0:
            raise NumericalError("synthetic")
        return real(method, cfg, ys, gamma)

    monkeypatch.setattr(report_mod, "compute_method", flaky)
    res = run_sweep(build_config({"ys": (6.0, 8.0, 10.0), "methods": ("asymptotic",)}), tmp_path)
    assert res.exit_code == 1
    assert [r[0] for r in res.rows] == [6.0, 10.0]


# -- command line ------------------------------------------------------------

def test_cli_rate_and_check(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["rate", "--ys", "10", "--gamma", "0.01", "--methods", "asymptotic", "--out", str(out)]) == 0
    assert (out / "report.json").exists()
    assert "asymptotic" in capsys.readouterr().out
    cfg = tmp_path / "c.cfg"
    cfg.write_text("ys = 10\ngamma = 0.01\nmethods = asymptotic,perturbative\n")
    assert main(["check", "--config", str(cfg)]) == 0
    assert "methods = asymptotic,perturbative" in capsys.readouterr().out


@pytest.mark.parametrize("text,code", [("gamma = 0.5\n", 3), ("methods =\n", 2), ("nope = 1\n", 2)])
def test_cli_exit_codes(tmp_path, capsys, text, code):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(text)
    assert main(["check", "--config", str(cfg)]) == code
    err = capsys.readouterr().err
    assert "error" in err
    if code == 3:
        assert "gamma/Omega0 <= 0.1" in err


def test_cli_flags_override_file(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("ys = 10\ngamma = 0.5\n")
    assert main(["check", "--config", str(cfg), "--gamma", "0.02", "--cutoff", "80", "--ntraj", "10",
                 "--grid-cells", "500", "--seed", "4"]) == 0
    echo = capsys.readouterr().out
    assert "gamma = 0.02" in echo and "cutoff = 80.0" in echo and "grid_cells = 500" in echo


def test_cli_misc_errors(tmp_path):
    assert main(["check", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert main(["rate", "--ys", "6,8", "--out", str(tmp_path)]) == 2
    assert main(["sweep", "--ys", ",", "--out", str(tmp_path)]) == 2
    assert main(["frobnicate"]) == 2


def test_cli_sweep(tmp_path, capsys):
    assert main(["sweep", "--ys", "6,8,10,12", "--gamma", "0.01", "--out", str(tmp_path)]) == 0
    assert "strictly increasing in ys: True" in capsys.readouterr().out
