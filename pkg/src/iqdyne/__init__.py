"""Simulation and spectral analysis of iterated-XY8 heterodyne magnetometry.

A wide-field camera cannot read out after every XY8 block, so each exposure
integrates ``n_rep`` phase-locked blocks and the AC field is recorded once per
exposure cycle. The package simulates that acquisition (:mod:`.signal_model`,
:mod:`.camera`, :mod:`.acquisition`), estimates tone frequencies, SNR and
sensitivity from the undersampled record (:mod:`.analysis`,
:mod:`.estimators`), and runs figure presets from the command line
(:mod:`.experiments`, :mod:`.cli`).
"""

__version__ = "0.1.0"

from .acquisition import ExperimentConfig, Mode, WideFieldConfig, phase_at_exposure, run_trace, run_widefield
from .analysis import (
    PeakFit,
    PeakFitError,
    SensitivityReport,
    Spectrum,
    analyze_trace,
    compute_snr,
    fft_magnitude,
    fit_eta_curve,
    fit_peaks,
    fit_sinc_peak,
    picket_fence_search,
    sensitivity,
)
from .camera import CameraModel, NoiseRegime, PixelTrace, expose, noise_regime
from .estimators import EtaCurveRegressor, SincPeakTransformer
from .signal_model import (
    AcField,
    AcTone,
    NvEnsemble,
    Schedule,
    Xy8Block,
    alias_frequency,
    bandwidth,
    delta_phi,
    dirichlet_z,
    exposure_signal_bruteforce,
    exposure_signal_closed,
    xy8_response,
)

__all__ = [
    "__version__",
    "ExperimentConfig",
    "Mode",
    "WideFieldConfig",
    "phase_at_exposure",
    "run_trace",
    "run_widefield",
    "PeakFit",
    "PeakFitError",
    "SensitivityReport",
    "Spectrum",
    "analyze_trace",
    "compute_snr",
    "fft_magnitude",
    "fit_eta_curve",
    "fit_peaks",
    "fit_sinc_peak",
    "picket_fence_search",
    "sensitivity",
    "CameraModel",
    "NoiseRegime",
    "PixelTrace",
    "expose",
    "noise_regime",
    "EtaCurveRegressor",
    "SincPeakTransformer",
    "AcField",
    "AcTone",
    "NvEnsemble",
    "Schedule",
    "Xy8Block",
    "alias_frequency",
    "bandwidth",
    "delta_phi",
    "dirichlet_z",
    "exposure_signal_bruteforce",
    "exposure_signal_closed",
    "xy8_response",
]
