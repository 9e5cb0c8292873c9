import math

import numpy as np
import pytest
import yaml

from iqdyne.analysis import eta_model
from iqdyne.cli import main
from iqdyne.config import resolve
from iqdyne.experiments import PRESETS, detuning_grid, preset_settings, run_preset, sweep, write_sweep
from iqdyne.io import read_trace, read_table, write_trace
from iqdyne.acquisition import run_trace
from iqdyne.signal_model import dirichlet_z

SMALL = {"schedule": {"n_exposures": 300}, "widefield": {"rows": 2, "cols": 3}}


def test_presets_known():
    assert set(PRESETS) == {"fig2a_spectra", "fig2b_eta_vs_nrep", "fig2c_two_tone", "fig2d_widefield_hist",
                            "fig3_detuning_sweep", "fig4_performance_map"}


def test_trace_roundtrip(tmp_path, default_config):
    tr = run_trace(default_config, position=(2, 5))
    path = write_trace(tr, tmp_path)
    assert path.name == "pixel_r2_c5.csv"
    back = read_trace(path, default_config.schedule)
    np.testing.assert_array_equal(back.counts, tr.counts)
    assert path.read_text().startswith("exposure_index,count\n0,")


def test_manifest_and_replay(tmp_path):
    m = run_preset("fig2d_widefield_hist", tmp_path / "a", SMALL, seed=3)
    files = sorted(p.name for p in (tmp_path / "a" / "traces").iterdir())
    assert files == sorted(f"pixel_r{r}_c{c}.csv" for r in range(2) for c in range(3))
    snap = yaml.safe_load((tmp_path / "a" / "manifest.yaml").read_text())
    assert snap["seed"] == 3 and snap["preset"] == "fig2d_widefield_hist"
    # the snapshot re-resolves to itself
    assert resolve(snap["config"]).raw == snap["config"]
    assert main(["run", "fig2d_widefield_hist", "--config", str(tmp_path / "a" / "manifest.yaml"),
                 "--out", str(tmp_path / "b")]) == 0
    for name in m.outputs:
        if name.endswith(".csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_report_schema(tmp_path):
    run_preset("fig2c_two_tone", tmp_path, {"schedule": {"n_exposures": 400}})
    header, rows = read_table(tmp_path / "report.csv")
    assert header == ["snr", "eta_t_per_sqrthz", "resolution_hz", "t_tot_s", "b_z_t", "n_rep"]
    assert read_table(tmp_path / "spectrum.csv")[0] == ["frequency_hz", "magnitude"]
    snr, eta, res, t_tot, b, n = map(float, rows[0])
    assert eta == pytest.approx(b * math.sqrt(t_tot) / snr, rel=1e-12)


def test_svg_deterministic(tmp_path):
    run_preset("fig4_performance_map", tmp_path / "a", {"schedule": {"n_exposures": 200}})
    run_preset("fig4_performance_map", tmp_path / "b", {"schedule": {"n_exposures": 200}})
    name = "fig4_performance_map.svg"
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_detuning_grid_avoids_dc():
    s = preset_settings("fig3_detuning_sweep")
    d, f = detuning_grid(s)
    t_l = s.experiment.schedule.t_l
    alias = np.abs(((f * t_l + 0.5) % 1) - 0.5) / t_l
    assert alias.min() > 5.0
    assert alias.max() < 0.5 / t_l - 5.0
    assert d[-1] <= 2000.0


def test_sweep_empty():
    assert sweep("schedule.n_rep", []) == []


def test_sweep_n_rep(tmp_path):
    rows = sweep("schedule.n_rep", [1, 10, 100, 1000])
    eta = [r[2] for r in rows]
    assert all(a > b for a, b in zip(eta, eta[1:]))
    # large-n_rep end follows the iteration model
    ratio = eta[3] / eta[2]
    assert ratio == pytest.approx(eta_model(1000, 1, 3e-3, 13.5e-6) / eta_model(100, 1, 3e-3, 13.5e-6), rel=0.15)
    write_sweep(rows, tmp_path / "s.csv")
    assert [int(float(r[6])) for r in read_table(tmp_path / "s.csv")[1]] == [1, 10, 100, 1000]


def test_sweep_t_s_follows_dirichlet():
    base = resolve()
    f = base.experiment.field.tones[0].frequency
    t0 = base.experiment.schedule.t_s
    values = [t0 + d for d in (0.0, 0.75e-9, 1.5e-9, 2.25e-9)]
    rows = sweep("schedule.t_s", values, base)
    snr = np.array([r[1] for r in rows])
    z = np.abs([dirichlet_z(f - round(f * t) / t, 100, t) / 100 for t in values])
    assert z[-1] < 0.5  # genuinely off the lock
    np.testing.assert_allclose(snr / snr[0], z / z[0], rtol=0.15)
