"""scikit-learn compatible wrappers around the analysis pipeline.

Rows of ``X`` are pixel traces (exposure counts), so the transformer slots
into a :class:`~sklearn.pipeline.Pipeline` after any per-pixel preprocessing.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .analysis import PeakFitError, analyze_trace, eta_model, fit_eta_curve

_PEAK_FEATURES = ("center_frequency", "frequency_uncertainty", "height", "snr")


class SincPeakTransformer(TransformerMixin, BaseEstimator):
    """Fit leakage peaks to each trace and return their parameters.

    Parameters
    ----------
    t_l : float
        Exposure period of the traces in seconds.
    picket_fraction : float
        Shortest data length tried by the picket-fence search, as a fraction
        of the trace length. ``1.0`` disables the search.
    n_peaks : int
        Number of tones fitted per trace.

    Attributes
    ----------
    n_features_in_ : int
        Trace length seen during :meth:`fit`.
    data_lengths_ : ndarray of shape (n_samples,)
        Data length chosen for each row by the last :meth:`transform` call.

    Notes
    -----
    :meth:`transform` returns, per peak, the centre frequency (Hz), its
    standard error (Hz), the peak height and the SNR. Rows whose fit fails
    get NaN.
    """

    def __init__(self, t_l=4.35e-3, picket_fraction=0.9, n_peaks=1):
        self.t_l = t_l
        self.picket_fraction = picket_fraction
        self.n_peaks = n_peaks

    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=np.float64, ensure_min_features=14)
        if not 0 < self.picket_fraction <= 1:
            raise ValueError(f"picket_fraction must be in (0, 1], got {self.picket_fraction}")
        if self.t_l <= 0:
            raise ValueError(f"t_l must be > 0, got {self.t_l}")
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        n = X.shape[1]
        lo = max(14, int(np.ceil(self.picket_fraction * n)))
        out = np.full((X.shape[0], len(_PEAK_FEATURES) * self.n_peaks), np.nan)
        lengths = np.zeros(X.shape[0], dtype=int)
        for i, row in enumerate(X):
            try:
                res = analyze_trace(row, lo, n, self.n_peaks, t_l=self.t_l)
            except PeakFitError:
                continue
            lengths[i] = res.length
            feats = []
            for fit, snr in zip(res.fits, res.snr):
                feats += [fit.center_frequency, fit.frequency_uncertainty, fit.height, snr]
            out[i] = feats
        self.data_lengths_ = lengths
        return out

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "n_features_in_")
        return np.array([f"peak{k}_{name}" for k in range(self.n_peaks) for name in _PEAK_FEATURES], dtype=object)


class EtaCurveRegressor(RegressorMixin, BaseEstimator):
    """Sensitivity versus iteration count, ``eta_inf * sqrt(1 + t_read / (t_s n_rep))``.

    ``X`` holds ``n_rep`` in its single column; ``y`` the measured
    sensitivities. The only learned parameter is ``eta_infinity_``.
    """

    def __init__(self, t_read=3e-3, t_s=13.5e-6):
        self.t_read = t_read
        self.t_s = t_s

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64)
        if X.shape[1] != 1:
            raise ValueError(f"expected a single n_rep column, got {X.shape[1]}")
        res = fit_eta_curve(list(zip(X[:, 0], y)), self.t_read, self.t_s)
        self.eta_infinity_ = res.eta_infinity
        self.eta_infinity_stderr_ = res.stderr
        return self

    def predict(self, X):
        check_is_fitted(self, "eta_infinity_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return eta_model(X[:, 0], self.eta_infinity_, self.t_read, self.t_s)
