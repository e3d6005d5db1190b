import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from alignqnd.cli import SWEEP_HEADER, kernel_check, main, scenario_report, sweep_rows
from alignqnd.config import ConfigError, RunConfig, apply_overrides, load_config

GOLDEN = Path(__file__).parent / "golden"


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("name, argv", [
    ("run_double_pass.txt", ["run"]),
    ("run_double_cell_two_pulse.txt", ["run", "--geometry", "double_cell_two_pulse"]),
    ("kernel_check_zero.txt", ["kernel-check", "--kappa", "0", "--grid", "128"]),
    ("sweep_small.csv", ["sweep", "--set", "sweep.steps=12"]),
])
def test_golden_reports(capsys, name, argv):
    code, out, _ = run_cli(capsys, *argv)
    assert code == 0
    assert out == (GOLDEN / name).read_text()


def test_run_numbers_come_from_library(capsys):
    code, out, _ = run_cli(capsys, "run", "--format", "json-lines")
    assert code == 0
    record = json.loads(out)
    _, direct = scenario_report(load_config())
    assert record == json.loads(json.dumps(direct))
    assert record["couplings"]["kappa_t"] == pytest.approx(-0.42, rel=0.2)
    assert record["double_pass"]["exact_kernel"] < 1


def test_vectorial_example(capsys):
    code, out, _ = run_cli(capsys, "run", "--geometry", "vectorial_single_pass",
                           "--set", "scenario.kappa_v=1", "--format", "json-lines")
    assert code == 0
    assert json.loads(out)["conditional_variances"]["p|sy"] == pytest.approx(0.5, abs=1e-14)


def test_double_cell_without_coupling_is_not_entangled(capsys):
    code, out, _ = run_cli(capsys, "run", "--geometry", "double_cell", "--set", "scenario.kappa_t=0")
    assert code == 0
    assert "EPR variance: 4 (no entanglement" in out


def test_run_writes_record(tmp_path, capsys):
    target = tmp_path / "rec.json"
    code, _, _ = run_cli(capsys, "run", "--out", str(target))
    assert code == 0
    assert json.loads(target.read_text())["geometry"] == "double_pass"


def test_sweep_csv_shape_and_precision(tmp_path, capsys):
    target = tmp_path / "sweep.csv"
    code, _, _ = run_cli(capsys, "sweep", "--out", str(target))
    assert code == 0
    rows = list(csv.reader(io.StringIO(target.read_text())))
    assert tuple(rows[0]) == SWEEP_HEADER
    assert len(rows) == 501
    masked = [r for r in rows[1:] if r[-1] == "1"]
    assert masked and all(r[1] == "nan" for r in masked)
    d = [float(r[0]) for r in rows[1:]]
    assert d == sorted(d)
    assert float(rows[1][1]) == float(format(float(rows[1][1]), ".17g"))


def test_sweep_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli(capsys, "sweep", "--out", str(a))[0] == 0
    assert run_cli(capsys, "sweep", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_sweep_threading_does_not_change_rows():
    cfg = load_config(None, ["sweep.steps=40"])
    one = sweep_rows(cfg, workers=1)
    many = sweep_rows(cfg, workers=8)
    assert json.dumps(one) == json.dumps(many)


def test_sweep_json_lines(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--set", "sweep.steps=5", "--format", "json-lines")
    assert code == 0
    lines = [json.loads(x) for x in out.splitlines()]
    assert len(lines) == 5
    assert set(lines[0]) == set(SWEEP_HEADER)


def test_kernel_check_record():
    text, rec = kernel_check(0.5, 512)
    assert rec["max_discrepancy"] < 1e-3
    assert rec["convergence_order"] == pytest.approx(2.0, abs=0.1)
    _, rec0 = kernel_check(0.0, 128)
    assert rec0["max_discrepancy"] < 1e-15
    assert "max discrepancy" in text


def test_kernel_check_reports_double_pass_at_035(capsys):
    code, out, _ = run_cli(capsys, "kernel-check", "--kappa", "0.35", "--grid", "128",
                           "--format", "json-lines")
    assert code == 0
    dp = json.loads(out)["double_pass"]
    assert dp["series"] == pytest.approx(0.51)
    assert dp["exact"] == pytest.approx(dp["grid"], abs=1e-5)


# --- configuration ---

def test_config_round_trip(tmp_path):
    cfg = load_config(None, ["experiment.detuning_mhz=35.7", "scenario.geometry=double_cell",
                             "manifold.ground_f=1"])
    path = tmp_path / "c.yaml"
    path.write_text(cfg.to_yaml())
    again = load_config(path)
    assert again == cfg
    assert again.to_yaml() == cfg.to_yaml()


def test_default_config_matches_operating_point():
    cfg = RunConfig()
    assert cfg.experiment.detuning_mhz == 38.0
    assert cfg.manifold.gamma_mhz == 5.76
    assert cfg.params().beam_area == pytest.approx(1e-6)


def test_schema_errors_are_field_level(tmp_path):
    bad = RunConfig().to_dict()
    bad["experiment"]["beam_area_mm2"] = -1
    bad["scenario"]["geometry"] = "triple"
    bad["extra"] = 1
    with pytest.raises(ConfigError) as exc:
        RunConfig.from_dict(bad)
    joined = "\n".join(exc.value.errors)
    assert "experiment.beam_area_mm2" in joined
    assert "scenario.geometry" in joined
    assert "extra" in joined


def test_physics_errors():
    with pytest.raises(ConfigError, match="resonant"):
        load_config(None, ["experiment.detuning_mhz=72"])
    with pytest.raises(ConfigError, match="stop must exceed start"):
        load_config(None, ["sweep.start=10", "sweep.stop=10"])
    with pytest.raises(ConfigError):
        apply_overrides({}, ["no_equals_sign"])


@pytest.mark.parametrize("argv, code", [
    (["validate"], 0),
    (["validate", "--set", "experiment.detuning_mhz=0"], 2),
    (["run", "--set", "schema_version=2"], 2),
    (["run", "--config", "/nonexistent/c.yaml"], 2),
    (["sweep", "--set", "sweep.stop=1"], 2),
    (["kernel-check", "--kappa", "0.5", "--grid", "64"], 2),
    (["kernel-check", "--kappa", "1.5"], 2),
    (["kernel-check", "--kappa", "1.0", "--grid", "128"], 0),
    (["sweep", "--out", "/nonexistent/dir/out.csv", "--set", "sweep.steps=3"], 2),
])
def test_exit_codes(capsys, argv, code):
    assert run_cli(capsys, *argv)[0] == code


def test_numerical_failure_exit_code(capsys, monkeypatch):
    from alignqnd import cli
    from alignqnd.kernel_solver import NumericalError

    def boom(*a, **k):
        raise NumericalError("forced")

    monkeypatch.setattr(cli, "kernel_check", boom)
    code, _, err = run_cli(capsys, "kernel-check")
    assert code == 3
    assert "forced" in err


def test_invalid_yaml_file(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("schema_version: [1\n")
    code, _, err = run_cli(capsys, "validate", "--config", str(p))
    assert code == 2
    assert "not valid YAML" in err


def test_yaml_config_file(tmp_path, capsys):
    p = tmp_path / "c.yaml"
    p.write_text(yaml.safe_dump({"schema_version": 1, "scenario": {"geometry": "double_cell"}}))
    code, out, _ = run_cli(capsys, "run", "--config", str(p))
    assert code == 0
    assert out.startswith("geometry: double_cell\n")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "alignqnd", "validate"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert res.stdout == "configuration OK\n"
