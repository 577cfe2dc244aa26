import csv
import io
import json
import subprocess
import sys

import pytest

from sipls import analytic as an
from sipls.cli import METRIC_COLUMNS, SLOT_COLUMNS, VALIDATE_COLUMNS, main, parse_sweep
from sipls.scenario import ConfigError, default_config, load_config


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_metrics_base_point_bitwise(capsys, cfg_path):
    code, out, _ = run(capsys, "metrics", "--config", cfg_path)
    assert code == 0
    assert out.splitlines()[0] == ",".join(METRIC_COLUMNS)
    (r,) = rows(out)
    rep = an.metric_report(load_config(cfg_path))
    for k in ("cop", "sop_upper", "sop_lower", "srp"):
        assert float(r[k]) == getattr(rep, k)
    assert r["inputs_hash"] == rep.inputs_hash


def test_metrics_noise_sweep(capsys, cfg_path):
    vals = ",".join(f"{v:g}" for v in (1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6))
    code, out, _ = run(capsys, "metrics", "--config", cfg_path, "--sweep", f"comm.noise_bob={vals}")
    assert code == 0
    cop = [float(r["cop"]) for r in rows(out)]
    assert len(cop) == 7 and all(a <= b for a, b in zip(cop, cop[1:]))
    assert [int(r["index"]) for r in rows(out)] == list(range(7))


def test_metrics_json(capsys, cfg_path, tmp_path):
    dest = tmp_path / "m.json"
    code, out, _ = run(capsys, "metrics", "--config", cfg_path, "--format", "json", "--out", dest)
    assert code == 0 and out == ""
    data = json.loads(dest.read_text())
    assert data[0]["cop"] == an.metric_report(default_config()).cop


@pytest.mark.parametrize("sweep", ["comm.nothing=1,2", "comm.noise_bob", "comm.noise_bob=a,b",
                                   "comm.noise_bob=", "road.lane_width=-1"])
def test_bad_sweep(capsys, cfg_path, sweep):
    code, _, err = run(capsys, "metrics", "--config", cfg_path, "--sweep", sweep)
    assert code == 1 and "error" in err


def test_parse_sweep(cfg):
    s = parse_sweep("road.eve_density=1e-5,1e-4", cfg)
    assert s.axis == "road.eve_density" and s.values == [1e-5, 1e-4]
    with pytest.raises(ConfigError):
        parse_sweep("x.y=1", cfg)


def test_usage_errors(capsys, cfg_path, tmp_path):
    assert run(capsys, "window", "--config", tmp_path / "missing.cfg")[0] == 1
    with pytest.raises(SystemExit) as e:
        main(["window"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main(["explode", "--config", str(cfg_path)])
    assert e.value.code == 1
    bad = tmp_path / "bad.cfg"
    bad.write_text("lane_width = -2\n")
    assert run(capsys, "metrics", "--config", bad)[0] == 1
    assert run(capsys, "validate", "--config", cfg_path, "--trials", 100)[0] == 1


def test_window_outputs(capsys, cfg_path, tmp_path):
    code, out, _ = run(capsys, "window", "--config", cfg_path)
    w = json.loads(out)
    assert code == 0 and (w["k_start"], w["k_end"], w["empty"]) == (11, 58, False)
    gap = tmp_path / "gap.cfg"
    gap.write_text("carol_x = 509\nhorizon = 20\nnum_slots = 160\n")
    w = json.loads(run(capsys, "window", "--config", gap)[1])
    assert w["t_carol_first"] == pytest.approx(9.376, abs=5e-4)
    assert w["t_carol_last"] == pytest.approx(15.430, abs=5e-4)
    near = tmp_path / "near.cfg"
    near.write_text("carol_x = 12\n")
    code, out, _ = run(capsys, "window", "--config", near)
    assert code == 0 and json.loads(out)["empty"] is True
    code, out, _ = run(capsys, "window", "--config", cfg_path, "--format", "csv")
    assert code == 0 and rows(out)[0]["k_start"] == "11"


def test_validate_degenerate(capsys, tmp_path):
    p = tmp_path / "d.cfg"
    p.write_text("carol_density = 0\neve_density = 0\n")
    code, out, _ = run(capsys, "validate", "--config", p, "--trials", 20_000)
    assert code == 0
    rs = {(r["metric"], r["mode"]): r for r in rows(out)}
    for key in (("sop_any_eve", "derivation_matched"), ("sop_nearest_eve", "derivation_matched")):
        assert float(rs[key]["mc_mean"]) == 0.0 and float(rs[key]["z"]) == 0.0
    # with no Carols the random-interference SRP equals the mean-interference one
    assert rs[("srp", "random_interference")]["mc_mean"] == rs[("srp", "mean_interference")]["mc_mean"]


def test_validate_pass_and_deterministic(capsys, cfg_path):
    args = ("validate", "--config", cfg_path, "--trials", 100_000)
    code1, out1, _ = run(capsys, *args)
    code2, out2, _ = run(capsys, *args)
    assert code1 == code2 == 0 and out1 == out2
    assert out1.splitlines()[0] == ",".join(VALIDATE_COLUMNS)
    verdicts = [r["verdict"] for r in rows(out1)]
    assert "FAIL" not in verdicts and verdicts.count("PASS") == 4


def test_validate_corrupted_constant_fails(capsys, cfg_path):
    code, out, _ = run(capsys, "validate", "--config", cfg_path, "--trials", 100_000,
                       "--corrupt-constant", 2.0)
    assert code == 2
    cop = [r for r in rows(out) if r["metric"] == "cop"][0]
    assert cop["verdict"] == "FAIL" and abs(float(cop["z"])) > 3
    assert an.interference_constant(4) == pytest.approx(1.5707963267948966)


def test_validate_scenario_mode_reports(capsys, cfg_path):
    code, out, _ = run(capsys, "validate", "--config", cfg_path, "--trials", 20_000,
                       "--mode", "scenario", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data[0]["mode"] == "scenario" and data[0]["verdict"] == "INFO"


def test_optimize(capsys, cfg_path, tmp_path):
    slots = tmp_path / "slots.csv"
    code, out, _ = run(capsys, "optimize", "--config", cfg_path, "--csv", slots)
    assert code == 0
    d = json.loads(out)
    tr = d["objective_trace"]
    assert d["converged"] and all(b >= a - 1e-9 for a, b in zip(tr, tr[1:]))
    table = rows(slots.read_text())
    assert list(table[0]) == SLOT_COLUMNS and len(table) == 65
    assert max(float(r["secrecy_rate"]) for r in table) > 0


def test_optimize_baseline_and_iters(capsys, cfg_path):
    d = json.loads(run(capsys, "optimize", "--config", cfg_path, "--baseline", "traditional")[1])
    assert d["objective_trace"][-1] == 0.0
    d = json.loads(run(capsys, "optimize", "--config", cfg_path, "--iters", 1)[1])
    assert d["iterations"] == 1 and len(d["objective_trace"]) == 1


def test_optimize_runtime_error(capsys, tmp_path):
    p = tmp_path / "e.cfg"
    p.write_text("carol_x = 12\n")    # empty window
    code, _, err = run(capsys, "optimize", "--config", p)
    assert code == 3 and "empty" in err


def test_entry_point(cfg_path):
    res = subprocess.run([sys.executable, "-m", "sipls", "metrics", "--config", str(cfg_path)],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and res.stdout.startswith("index,")
