import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from qotto import serialize
from qotto.cli import main
from qotto.config import FIXTURES, fixture_path, load_fixture, parse_config
from qotto.cycle import SUMMARY_COLUMNS
from qotto.errors import ConfigError

BASE = yaml.safe_load(fixture_path("optimal_linear").read_text())


def write_cfg(tmp_path, data, name="run.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return str(p)


def with_(**sections):
    d = json.loads(json.dumps(BASE))
    d.update(sections)
    return d


@pytest.mark.parametrize("name", FIXTURES)
def test_fixtures_load(name):
    cfg = load_fixture(name)
    assert cfg.spec.period > 0
    assert cfg.description


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="engin"):
        parse_config({"engin": {}})
    bad = with_()
    bad["engine"]["omega_c"] = 1.0
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_physics_violation_is_config_error():
    bad = with_()
    bad["engine"]["omega_a"] = 20.0
    with pytest.raises(ConfigError, match="omega_b > omega_a"):
        parse_config(bad)


def test_sweep_grid_forms():
    cfg = parse_config(with_(sweep={"parameter": "tau_h", "grid": {"start": 1, "stop": 2, "num": 3}}))
    assert np.allclose(cfg.sweep_grid(), [1.0, 1.5, 2.0])
    cfg = parse_config(with_(sweep={"parameter": "tau_h", "grid": [0.5, 0.7]}))
    assert np.allclose(cfg.sweep_grid(), [0.5, 0.7])


def test_config_error_exit_code(tmp_path, capsys):
    p = write_cfg(tmp_path, {"engine": {"omega_a": 1}})
    assert main(["limit-cycle", "--config", p]) == 2
    assert "config error" in capsys.readouterr().err
    assert main(["limit-cycle", "--config", str(tmp_path / "missing.yaml")]) == 2
    assert main(["sweep", "--fixture", "optimal_linear"]) == 2
    assert main(["simulate"]) == 2


def test_limit_cycle_csv_and_sidecars(tmp_path, capsys):
    out = tmp_path / "lc.csv"
    assert main(["limit-cycle", "--fixture", "optimal_linear", "--out", str(out)]) == 0
    rows = serialize.read_table(out)
    assert list(rows[0]) == list(SUMMARY_COLUMNS)
    res_w = rows[0]["W_out"]
    assert res_w == pytest.approx(0.7701480651617709, rel=1e-10)
    corners = serialize.read_table(tmp_path / "lc_corners.csv")
    assert [c["corner"] for c in corners] == ["A", "B", "C", "D"]
    for suffix in ("field_entropy", "entropy_temperature", "bloch", "phase"):
        assert (tmp_path / f"lc_{suffix}.png").stat().st_size > 1000
    assert "efficiency bound" in capsys.readouterr().out


def test_limit_cycle_json(tmp_path):
    out = tmp_path / "lc.json"
    assert main(["limit-cycle", "--fixture", "analytic_infinite", "--out", str(out), "--format", "json", "--no-figures"]) == 0
    s = json.loads(out.read_text())
    assert s["efficiency"] <= s["carnot_otto_bound"] + 1e-12
    assert set(s["corners"]) == {"A", "B", "C", "D"}
    assert not list(tmp_path.glob("*.png"))


def test_output_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["simulate", "--fixture", "phase_decay", "--out", str(p), "--no-figures"]) == 0
    assert a.read_bytes() == b.read_bytes()
    pa, pb = tmp_path / "a", tmp_path / "b"
    for p in (pa, pb):
        main(["limit-cycle", "--fixture", "analytic_short", "--out", str(p / "lc.csv")])
    for name in ("lc.csv", "lc_corners.csv", "lc_phase.png", "lc_bloch.png"):
        assert (pa / name).read_bytes() == (pb / name).read_bytes()


def test_trajectory_roundtrip(tmp_path):
    out = tmp_path / "traj.csv"
    assert main(["simulate", "--fixture", "analytic_short", "--out", str(out), "--no-figures"]) == 0
    samples = serialize.read_trajectory(out)
    out2 = tmp_path / "traj2.csv"
    serialize.write_trajectory(out2, samples)
    assert out.read_bytes() == out2.read_bytes()
    js = tmp_path / "traj.json"
    serialize.write_trajectory(js, samples, "json")
    back = serialize.read_trajectory(js)
    assert [s.b for s in back] == [s.b for s in samples]


def test_simulate_several_periods(tmp_path):
    p = write_cfg(tmp_path, with_(simulate={"start": "hot-equilibrium", "periods": 3}))
    out = tmp_path / "t.csv"
    assert main(["simulate", "--config", p, "--out", str(out), "--no-figures"]) == 0
    rows = serialize.read_table(out)
    t = np.array([r["t"] for r in rows])
    assert np.all(np.diff(t) >= 0)
    assert t[-1] == pytest.approx(3 * load_fixture("optimal_linear").spec.period)
    e = np.array([r["E"] for r in rows])
    assert np.allclose(e - e[0], [r["W"] + r["Q"] for r in rows], atol=1e-12)


def test_zero_samples_gives_header_only(tmp_path):
    d = with_(simulate={"start": [0, 0, 0, 0, 0]})
    d["engine"]["samples_per_branch"] = 0
    out = tmp_path / "t.csv"
    assert main(["simulate", "--config", write_cfg(tmp_path, d), "--out", str(out)]) == 0
    assert out.read_text().strip() == ",".join(serialize.TRAJECTORY_COLUMNS)


def test_empty_sweep_grid(tmp_path):
    d = with_(sweep={"parameter": "tau_h", "grid": []})
    out = tmp_path / "s.csv"
    assert main(["sweep", "--config", write_cfg(tmp_path, d), "--out", str(out)]) == 0
    assert out.read_text().strip().startswith("variant,value,ok")
    assert len(out.read_text().strip().splitlines()) == 1


def test_single_point_sweep_equals_limit_cycle(tmp_path):
    d = with_(sweep={"parameter": "tau_h", "grid": [BASE["engine"]["tau_h"]]})
    p = write_cfg(tmp_path, d)
    assert main(["sweep", "--config", p, "--out", str(tmp_path / "s.csv"), "--no-figures"]) == 0
    assert main(["limit-cycle", "--config", p, "--out", str(tmp_path / "l.csv"), "--no-figures"]) == 0
    srow = (tmp_path / "s.csv").read_text().splitlines()[1].split(",")
    lrow = (tmp_path / "l.csv").read_text().splitlines()[1].split(",")
    assert srow[3:] == lrow[1:] and srow[0] == "base"


def test_sweep_outputs(tmp_path):
    d = with_(sweep={"parameter": "tau_h", "grid": {"start": 2.0, "stop": 4.0, "num": 5}, "fixed_cycle_time": 6.6718,
                     "variants": [{"label": "plain"}, {"label": "deph", "overrides": {"gamma_h": 0.01, "gamma_c": 0.03}}]})
    out = tmp_path / "s.json"
    assert main(["sweep", "--config", write_cfg(tmp_path, d), "--out", str(out), "--threads", "2"]) == 0
    rows = json.loads(out.read_text())
    assert len(rows) == 10 and {r["variant"] for r in rows} == {"plain", "deph"}
    summary = json.loads((tmp_path / "s_summary.json").read_text())
    assert summary["variants"]["plain"]["succeeded"] == 5
    assert (tmp_path / "s_sweep.png").exists()


def test_optimize(tmp_path):
    d = with_(optimize={"total_budget": 6.6718, "xtol": 1e-3})
    out = tmp_path / "o.csv"
    assert main(["optimize", "--config", write_cfg(tmp_path, d), "--out", str(out)]) == 0
    best = json.loads((tmp_path / "o_best.json").read_text())
    assert best["power"] >= best["start_power"]
    assert len(serialize.read_table(out)) == best["evaluations"]


def test_validate_command(tmp_path, capsys):
    out = tmp_path / "v.json"
    assert main(["validate", "--seed", "3", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["passed"] and report["seed"] == 3
    assert "checks passed" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "qotto", "limit-cycle", "--fixture", "analytic_long", "--out",
                        str(tmp_path / "x.csv"), "--no-figures"], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert "W_out" in r.stdout


def test_fmt_tokens():
    assert serialize.fmt(float("nan")) == "nan"
    assert serialize.fmt(float("-inf")) == "-inf"
    assert serialize.fmt(True) == "true"
    assert float(serialize.fmt(0.1)) == 0.1
