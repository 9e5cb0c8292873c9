import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import FunctionTransformer

from iqdyne.acquisition import run_trace
from iqdyne.analysis import analyze_trace, eta_model
from iqdyne.estimators import EtaCurveRegressor, SincPeakTransformer


@pytest.fixture
def traces(default_config):
    return np.array([run_trace(default_config, pixel=p).counts for p in range(3)], dtype=float)


def test_params_roundtrip():
    est = SincPeakTransformer(t_l=1e-3, picket_fraction=0.95, n_peaks=2)
    assert est.get_params() == {"t_l": 1e-3, "picket_fraction": 0.95, "n_peaks": 2}
    twin = clone(est)
    assert twin.get_params() == est.get_params()
    est.set_params(n_peaks=1)
    assert est.n_peaks == 1


def test_transform_matches_function(traces):
    est = SincPeakTransformer(t_l=4.35e-3, picket_fraction=0.95).fit(traces)
    out = est.transform(traces)
    assert out.shape == (3, 4)
    for row, feats, length in zip(traces, out, est.data_lengths_):
        res = analyze_trace(row, 950, 1000, t_l=4.35e-3)
        assert length == res.length
        np.testing.assert_array_equal(feats, [res.fits[0].center_frequency, res.fits[0].frequency_uncertainty,
                                              res.fits[0].height, res.snr[0]])
    assert list(est.get_feature_names_out()) == [
        "peak0_center_frequency", "peak0_frequency_uncertainty", "peak0_height", "peak0_snr"]


def test_in_pipeline(traces):
    pipe = make_pipeline(FunctionTransformer(lambda x: x - x.mean(axis=1, keepdims=True)),
                         SincPeakTransformer(picket_fraction=1.0))
    out = pipe.fit_transform(traces)
    assert np.all(np.isfinite(out))


def test_unfitted_and_shape_checks(traces):
    with pytest.raises(NotFittedError):
        SincPeakTransformer().transform(traces)
    est = SincPeakTransformer().fit(traces)
    with pytest.raises(ValueError):
        est.transform(traces[:, :500])
    with pytest.raises(ValueError):
        SincPeakTransformer(picket_fraction=0).fit(traces)
    with pytest.raises(ValueError):
        SincPeakTransformer().fit(np.zeros((2, 5)))


def test_failed_rows_are_nan():
    # a constant trace has no peak; its row is NaN and the others are unaffected
    x = np.vstack([np.full(64, 5.0), np.cos(np.arange(64) * 1.3)])
    out = SincPeakTransformer(picket_fraction=1.0).fit_transform(x)
    assert np.all(np.isnan(out[0]))
    assert out[1, 0] == pytest.approx(1.3 / (2 * np.pi * 4.35e-3), rel=1e-9)


def test_eta_regressor():
    n = np.array([25, 50, 100, 200, 400, 1000], dtype=float)[:, None]
    y = eta_model(n[:, 0], 41e-9, 3e-3, 13.5e-6)
    reg = EtaCurveRegressor().fit(n, y)
    assert reg.eta_infinity_ == pytest.approx(41e-9, rel=1e-6)
    np.testing.assert_allclose(reg.predict(n), y, rtol=1e-9)
    assert reg.score(n, y) == pytest.approx(1.0)
    assert clone(reg).get_params() == {"t_read": 3e-3, "t_s": 13.5e-6}


def test_eta_regressor_rejects():
    with pytest.raises(ValueError):
        EtaCurveRegressor().fit(np.ones((4, 2)), np.ones(4))
    with pytest.raises(ValueError):
        EtaCurveRegressor().fit(np.array([[100.0]]), np.array([1e-8]))
    with pytest.raises(NotFittedError):
        EtaCurveRegressor().predict(np.array([[100.0]]))
