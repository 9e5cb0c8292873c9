import subprocess
import sys

import pytest
import yaml

from iqdyne.cli import main
from iqdyne.config import ConfigError, DEFAULTS, load, resolve, set_path, validate_config


def write(tmp_path, data, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return p


def test_defaults_derived(tmp_path):
    out = validate_config(write(tmp_path, {}))
    d = out["derived"]
    assert d["t_l"] == pytest.approx(4.35e-3, rel=1e-12)
    assert d["tones"][0]["t_s_over_t_ac"] == pytest.approx(45.0, abs=1e-3)
    assert d["bandwidth"] == pytest.approx(740.74, abs=0.01)
    assert d["picket_lengths"] == [900, 1000]
    assert out["config"]["schedule"] == DEFAULTS["schedule"]


def test_exact_integer_ratio(tmp_path):
    out = validate_config(write(tmp_path, {"field": {"tones": [{"amplitude": 4e-6, "frequency": 1 / 300e-9}]}}))
    assert out["derived"]["tones"][0]["t_s_over_t_ac"] == pytest.approx(45.0, rel=1e-12)


def test_t_s_zero(tmp_path):
    with pytest.raises(ConfigError) as err:
        validate_config(write(tmp_path, {"schedule": {"t_s": 0}}))
    assert err.value.errors[0][0] == "schedule.t_s"


def test_block_longer_than_t_s(tmp_path):
    with pytest.raises(ConfigError) as err:
        validate_config(write(tmp_path, {"schedule": {"t_s": 5e-6}}))
    path, msg = err.value.errors[0]
    assert path == "block.duration"
    assert "t_s" in msg


def test_errors_aggregated():
    with pytest.raises(ConfigError) as err:
        resolve({"camera": {"pixel_area": -1, "well_depth": 0}, "block": {"colour": 1}, "extra": 2})
    paths = {p for p, _ in err.value.errors}
    assert {"extra", "block.colour"} <= paths
    with pytest.raises(ConfigError) as err:
        resolve({"camera": {"pixel_area": -1, "well_depth": 0}})
    assert {p for p, _ in err.value.errors} == {"camera.pixel_area", "camera.well_depth"}


def test_bad_mode_and_analysis():
    with pytest.raises(ConfigError, match="mode"):
        resolve({"mode": "fast"})
    with pytest.raises(ConfigError, match="min_length"):
        resolve({"analysis": {"min_length": 5}})
    with pytest.raises(ConfigError, match="picket_fraction"):
        resolve({"analysis": {"picket_fraction": 1.5}})


def test_direct_mode_snapshot():
    s = resolve({"mode": "direct_qdyne"})
    assert s.experiment.schedule.n_rep == 1
    assert s.raw["schedule"]["n_rep"] == 1
    assert s.derived()["t_l"] == pytest.approx(3.0135e-3)


def test_set_path():
    raw = resolve().raw
    assert set_path(raw, "schedule.n_rep", 10.0)["schedule"]["n_rep"] == 10
    assert set_path(raw, "field.tones.0.amplitude", 1e-6)["field"]["tones"][0]["amplitude"] == 1e-6
    assert raw["schedule"]["n_rep"] == 100
    for bad in ("schedule.nope", "field.tones.3.amplitude", "mode", "schedule"):
        with pytest.raises(ConfigError):
            set_path(raw, bad, 1.0)


def test_load_rejects_non_mapping(tmp_path):
    p = tmp_path / "x.yaml"
    p.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load(p)
    p.write_text("a: [1,\n")
    with pytest.raises(ConfigError):
        load(p)


def test_cli_validate(tmp_path, capsys):
    assert main(["validate", "--config", str(write(tmp_path, {}))]) == 0
    assert "t_l: 0.00435" in capsys.readouterr().out
    assert main(["validate", "--config", str(write(tmp_path, {"schedule": {"t_s": 0}}))]) == 1
    assert "schedule.t_s" in capsys.readouterr().err


def test_cli_unknown_preset(tmp_path, capsys):
    assert main(["run", "fig9", "--out", str(tmp_path)]) == 1
    assert "unknown preset" in capsys.readouterr().err


def test_cli_runtime_error(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "fig2c_two_tone", "--out", str(blocker / "sub")]) == 2


def test_cli_sweep_empty(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--param", "schedule.n_rep", "--values", "--out", str(out)]) == 0
    assert out.read_text().splitlines() == ["value,snr,eta_t_per_sqrthz,resolution_hz,fitted_frequency_hz,t_tot_s,n_rep"]


def test_cli_sweep_bad_path(tmp_path):
    assert main(["sweep", "--param", "schedule.speed", "--values", "1", "--out", str(tmp_path / "s.csv")]) == 1


def test_console_script(tmp_path):
    res = subprocess.run([sys.executable, "-m", "iqdyne", "validate", "--config", str(write(tmp_path, {}))],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert "picket_lengths" in res.stdout
