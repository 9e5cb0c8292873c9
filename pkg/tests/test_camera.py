import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iqdyne._validation import ValidationError
from iqdyne.camera import CameraModel, NoiseRegime, PixelTrace, expose, mean_counts, noise_regime, pixel_rng
from iqdyne.signal_model import Schedule


def test_mean_matches_model():
    cam = CameraModel(photons_per_xy8=50, modulation_depth=0.3)
    assert mean_counts(10.0, 100, cam) == pytest.approx(100 * 50 * (1 + 0.3 * 10 / 100))


def test_negative_mean_rejected():
    with pytest.raises(ValueError):
        mean_counts(-1000.0, 10, CameraModel(modulation_depth=0.5))


def test_monte_carlo_mean():
    cam = CameraModel(photons_per_xy8=50, readout_noise_sigma=30)
    counts, sat = expose(np.zeros(100_000), 100, cam, pixel_rng(1))
    sigma = np.sqrt(5000 + 30 ** 2)
    assert not sat
    assert abs(counts.mean() - 5000) < 3 * sigma / np.sqrt(100_000)
    assert counts.std() == pytest.approx(sigma, rel=0.02)


def test_shot_noise_scaling():
    rng = pixel_rng(2)
    for photons in (10.0, 100.0, 1000.0):
        cam = CameraModel(photons_per_xy8=photons, readout_noise_sigma=0)
        counts, _ = expose(np.zeros(50_000), 100, cam, rng)
        assert counts.std() == pytest.approx(np.sqrt(100 * photons), rel=0.05)


def test_relative_fluctuation_vanishes():
    rel = []
    for photons in (1e2, 1e4, 1e6):
        cam = CameraModel(photons_per_xy8=photons, readout_noise_sigma=0, well_depth=1e12)
        counts, _ = expose(np.zeros(5000), 10, cam, pixel_rng(3))
        rel.append(counts.std() / counts.mean())
    assert rel[0] > rel[1] > rel[2]
    assert rel[2] < 1e-3


def test_saturation_clamps():
    cam = CameraModel(photons_per_xy8=1000, readout_noise_sigma=5, well_depth=50_000)
    counts, sat = expose(np.zeros(10), 100, cam, pixel_rng(4))
    assert sat
    assert np.all(counts == 50_000)


def test_noiseless_returns_mean():
    cam = CameraModel()
    counts, sat = expose(np.array([0.0, 10.0]), 100, cam, None, noiseless=True)
    np.testing.assert_allclose(counts, mean_counts([0.0, 10.0], 100, cam))
    assert not sat


@settings(max_examples=40, deadline=None)
@given(st.floats(1, 2000), st.floats(0, 500), st.integers(1, 1000), st.integers(0, 2 ** 32))
def test_counts_in_range(photons, sigma, n_rep, seed):
    cam = CameraModel(photons_per_xy8=photons, readout_noise_sigma=sigma, well_depth=1e5)
    counts, _ = expose(np.zeros(64), n_rep, cam, pixel_rng(seed))
    assert counts.min() >= 0
    assert counts.max() <= 1e5


def test_deterministic():
    cam = CameraModel()
    a, _ = expose(np.zeros(100), 10, cam, pixel_rng(7, 3))
    b, _ = expose(np.zeros(100), 10, cam, pixel_rng(7, 3))
    c, _ = expose(np.zeros(100), 10, cam, pixel_rng(7, 4))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_count_snr_grows_with_iterations():
    # a fixed per-block signal: mean/std of the modulation improves as sqrt(m)
    cam = CameraModel(photons_per_xy8=200, readout_noise_sigma=0, well_depth=1e9)
    ratios = []
    for n_rep in (10, 40):
        hi, _ = expose(np.full(20_000, 0.5 * n_rep), n_rep, cam, pixel_rng(8, n_rep))
        lo, _ = expose(np.zeros(20_000), n_rep, cam, pixel_rng(9, n_rep))
        ratios.append((hi.mean() - lo.mean()) / lo.std())
    assert ratios[1] / ratios[0] == pytest.approx(2.0, rel=0.05)


@pytest.mark.parametrize(
    "sigma, photons, n_rep, regime",
    [
        (0.0, 50, 100, NoiseRegime.SHOT_DOMINATED),
        (50.0, 25, 100, NoiseRegime.MIXED),
        (60.0, 50, 1, NoiseRegime.READOUT_DOMINATED),
        (30.0, 200, 100, NoiseRegime.SHOT_DOMINATED),
        (30.0, 200, 1, NoiseRegime.READOUT_DOMINATED),
    ],
)
def test_noise_regime(sigma, photons, n_rep, regime):
    assert noise_regime(CameraModel(photons_per_xy8=photons, readout_noise_sigma=sigma), n_rep) is regime


@pytest.mark.parametrize("kwargs", [{"photons_per_xy8": 0}, {"readout_noise_sigma": -1}, {"well_depth": 0},
                                    {"pixel_area": -2}, {"seed": -1}])
def test_camera_rejects(kwargs):
    with pytest.raises(ValidationError):
        CameraModel(**kwargs)


def test_trace_length_checked():
    with pytest.raises(ValidationError):
        PixelTrace(np.zeros(5), Schedule(n_exposures=6))
    tr = PixelTrace(np.zeros(6), Schedule(n_exposures=6))
    assert tr.times[-1] == pytest.approx(5 * tr.t_l)
