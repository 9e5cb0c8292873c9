"""Spectral estimation of undersampled traces.

Pipeline: choose a data length (picket-fence search), take the rectangular
window DFT of the mean-subtracted counts, fit the exact finite-length
leakage shape of a cosine around the strongest bin, and derive SNR,
resolution and sensitivity from the fit.

The peak model is the DFT of a truncated cosine,

    X[m] = c G((nu - m)/L) + conj(c) G((-nu - m)/L),
    G(u) = exp(i pi u (L-1)) sin(pi L u) / sin(pi u),

with ``nu`` the tone position in bins and ``c = (a/2) exp(i theta)``. Its
magnitude is the Dirichlet (periodic sinc) peak; keeping the image term and
phase makes the model exact for noiseless data, which a magnitude-only sinc
is not.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._validation import ValidationError, check_int
from .camera import PixelTrace

#: Half width (in bins) of the window each peak is fitted over.
FIT_HALF_WINDOW = 5

#: residual_sigma / height below which the SNR is reported as infinite.
NOISELESS_RTOL = 1e-9


class PeakFitError(RuntimeError):
    """The peak fit could not be performed or did not converge."""


@dataclass
class Spectrum:
    """One-sided DFT of the first ``data_length`` samples of a trace.

    ``values`` keeps the complex bins; ``magnitudes`` is their modulus.
    """

    bin_frequencies: np.ndarray
    magnitudes: np.ndarray
    data_length: int
    t_l: float
    values: np.ndarray = field(repr=False, default=None)

    @property
    def bin_width(self) -> float:
        return 1.0 / (self.data_length * self.t_l)

    def __len__(self):
        return len(self.magnitudes)


@dataclass
class PeakFit:
    """Fitted leakage peak.

    ``height`` is the peak as it appears on the bin grid (the largest model
    magnitude among the bins), which is what spectral leakage reduces.
    ``amplitude`` is the leakage-free height ``a L / 2`` the peak would have
    on a bin.
    """

    center_frequency: float
    height: float
    frequency_uncertainty: float
    residual_sigma: float
    amplitude: float
    phase: float
    center_bin: float
    data_length: int
    t_l: float
    amplitude_uncertainty: float = 0.0
    iterations: int = 0

    @property
    def coefficient(self) -> complex:
        return (self.amplitude / self.data_length) * np.exp(1j * self.phase)

    def model(self, bins) -> np.ndarray:
        """Complex model spectrum at integer ``bins``."""
        return _tone_dft(self.center_bin, self.coefficient, self.data_length, np.asarray(bins, dtype=float))


@dataclass
class SensitivityReport:
    snr: float
    eta: float
    eta_normalized: float
    resolution: float
    t_tot: float
    b_z: float
    pixel_area: float = 1.0


@dataclass
class EtaCurveFit:
    eta_infinity: float
    stderr: float
    residuals: np.ndarray


@dataclass
class TraceAnalysis:
    """Everything the pipeline derives from one trace."""

    length: int
    spectrum: Spectrum
    fits: list[PeakFit]
    snr: list[float]
    snr_by_length: dict[int, float] = field(default_factory=dict, repr=False)


# --------------------------------------------------------------------------
# spectrum


def fft_magnitude(trace: PixelTrace | np.ndarray, length: int | None = None, t_l: float | None = None) -> Spectrum:
    """Rectangular-window DFT of the mean-subtracted first ``length`` counts.

    Accepts a :class:`PixelTrace` or a plain array together with ``t_l``.
    """
    if isinstance(trace, PixelTrace):
        data, t_l = trace.counts, trace.t_l
    else:
        data = np.asarray(trace)
        if t_l is None:
            raise ValidationError("t_l", "sampling interval required for raw arrays")
    n = len(data) if length is None else length
    check_int(n, "length")
    if not 2 <= n <= len(data):
        raise ValidationError("length", f"must be in [2, {len(data)}], got {n}")
    x = np.asarray(data[:n], dtype=float)
    x = x - x.mean()
    values = np.fft.rfft(x)
    freqs = np.arange(len(values)) / (n * t_l)
    return Spectrum(freqs, np.abs(values), n, float(t_l), values)


# --------------------------------------------------------------------------
# peak model


def _dirichlet_and_slope(u: np.ndarray, n: int):
    """``sin(pi n u)/sin(pi u)`` and its derivative in ``u``, stable near integers."""
    m = np.rint(u)
    x = np.pi * (u - m)
    sign = 1.0 - 2.0 * ((m * (n - 1)) % 2)
    s = np.sin(x)
    tiny = np.abs(s) < 1e-9
    if tiny.any():
        s = np.where(tiny, 1.0, s)
        d = np.where(tiny, n * (1.0 - (n * n - 1.0) * x * x / 6.0), np.sin(n * x) / s)
        dd = np.where(tiny, -n * (n * n - 1.0) * x / 3.0, (n * np.cos(n * x) - d * np.cos(x)) / s)
    else:
        d = np.sin(n * x) / s
        dd = (n * np.cos(n * x) - d * np.cos(x)) / s
    return sign * d, (sign * np.pi) * dd


def _kernel(u: np.ndarray, n: int):
    d, dd = _dirichlet_and_slope(u, n)
    rot = np.exp((1j * np.pi * (n - 1)) * u)
    g = rot * d
    dg = rot * ((1j * np.pi * (n - 1)) * d + dd)
    return g, dg


def _tone_dft(nu: float, c: complex, n: int, bins: np.ndarray) -> np.ndarray:
    g, _ = _kernel(np.concatenate([nu - bins, -nu - bins]) / n, n)
    k = len(bins)
    return c * g[:k] + np.conj(c) * g[k:]


def _model_and_jacobian(params: np.ndarray, n: int, bins: np.ndarray):
    """Complex model and its Jacobian for stacked ``[nu, Re c, Im c]`` per peak."""
    nb = len(bins)
    nus = params[0::3]
    u = np.concatenate([(nus[:, None] - bins) / n, (-nus[:, None] - bins) / n], axis=1)
    g, dg = _kernel(u, n)
    gp, gm, dgp, dgm = g[:, :nb], g[:, nb:], dg[:, :nb], dg[:, nb:]
    c = (params[1::3] + 1j * params[2::3])[:, None]
    cc = np.conj(c)
    jac = np.empty((len(params), nb), dtype=complex)
    jac[0::3] = (c * dgp - cc * dgm) / n
    jac[1::3] = gp + gm
    jac[2::3] = 1j * (gp - gm)
    model = (c * gp + cc * gm).sum(axis=0)
    return model, jac.T


def _stack(z: np.ndarray) -> np.ndarray:
    return np.concatenate([z.real, z.imag], axis=0)


def _levenberg_marquardt(params: np.ndarray, n: int, bins: np.ndarray, data: np.ndarray,
                         max_iter: int = 100):
    """Minimize ``|model - data|^2`` over complex bins; returns params, J, residual, iterations."""
    lam = 1e-6
    model, jac = _model_and_jacobian(params, n, bins)
    r = _stack(model - data)
    j = _stack(jac)
    cost = r @ r
    for it in range(1, max_iter + 1):
        jtj = j.T @ j
        g = j.T @ r
        diag = np.diag(jtj).copy()
        diag[diag == 0] = 1.0
        while True:
            try:
                step = np.linalg.solve(jtj + np.diag(lam * diag), -g)
            except np.linalg.LinAlgError:
                step = None
            if step is not None:
                trial = params + step
                t_model, t_jac = _model_and_jacobian(trial, n, bins)
                t_r = _stack(t_model - data)
                t_cost = t_r @ t_r
                if t_cost <= cost:
                    break
            lam *= 10
            if lam > 1e10:
                # no downhill step left: already at the minimum to rounding
                return params, j, r, it
        small_step = np.all(np.abs(step) <= 1e-10 * (np.abs(params) + 1e-10 * np.abs(params).max()))
        flat = (cost - t_cost) <= 1e-12 * cost
        params, r, cost = trial, t_r, t_cost
        j = _stack(t_jac)
        lam = max(lam / 10, 1e-12)
        if small_step or flat:
            return params, j, r, it
    raise PeakFitError(f"peak fit did not converge in {max_iter} iterations")


def _initial_guess(values: np.ndarray, m: int, n: int, n_bins: int) -> float:
    """Rectangular-window bin interpolation (Jacobsen) around bin ``m``."""
    if 1 <= m - 1 and m + 1 < n_bins:
        xm, x0, xp = values[m - 1], values[m], values[m + 1]
        den = 2 * x0 - xm - xp
        if abs(den) > 0:
            delta = float(np.real((xm - xp) / den))
            if abs(delta) <= 1:
                return m + delta
    return float(m)


def _linear_coefficient(nu: float, n: int, bins: np.ndarray, data: np.ndarray) -> complex:
    gp, _ = _kernel((nu - bins) / n, n)
    gm, _ = _kernel((-nu - bins) / n, n)
    basis = np.column_stack([_stack(gp + gm), _stack(1j * (gp - gm))])
    coef, *_ = np.linalg.lstsq(basis, _stack(data), rcond=None)
    return complex(coef[0], coef[1])


def _window(m: int, n_bins: int, half: int) -> np.ndarray:
    return np.arange(max(1, m - half), min(n_bins, m + half + 1))


def fit_peaks(spec: Spectrum, n_peaks: int = 1, half_window: int = FIT_HALF_WINDOW) -> list[PeakFit]:
    """Fit ``n_peaks`` tones, strongest first.

    Peaks are located one at a time (fit, subtract, search again) and then
    refined jointly over the union of their windows, so neighbouring tones
    do not bias each other.
    """
    check_int(n_peaks, "n_peaks", minimum=1)
    n = spec.data_length
    n_bins = len(spec.values)
    if n_bins < 7:
        raise PeakFitError(f"spectrum has {n_bins} bins, need at least 7")
    residual = spec.values.copy()
    residual[0] = 0.0
    all_bins = np.arange(n_bins, dtype=float)
    params = []
    windows = []
    for i in range(n_peaks):
        mag = np.abs(residual)
        m = int(np.argmax(mag[1:])) + 1
        if m == n_bins - 1:
            raise PeakFitError("peak at spectrum edge")
        win = _window(m, n_bins, half_window)
        bins = win.astype(float)
        nu0 = _initial_guess(residual, m, n, n_bins)
        c0 = _linear_coefficient(nu0, n, bins, residual[win])
        p, jac, r, iters = _levenberg_marquardt(np.array([nu0, c0.real, c0.imag]), n, bins, residual[win])
        params.append(p)
        windows.append(win)
        if i + 1 < n_peaks:
            nu, cr, ci = p
            residual = residual - _tone_dft(nu, cr + 1j * ci, n, all_bins)
            residual[0] = 0.0
    p0 = np.concatenate(params)
    if n_peaks > 1:
        win = np.unique(np.concatenate(windows))
        p0, jac, r, iters = _levenberg_marquardt(p0, n, win.astype(float), spec.values[win])
    dof = max(len(r) - len(p0), 1)
    s2 = float(r @ r) / dof
    try:
        cov = s2 * np.linalg.inv(jac.T @ jac)
    except np.linalg.LinAlgError as err:
        raise PeakFitError("singular fit covariance") from err
    fits = []
    for j in range(n_peaks):
        nu, cr, ci = p0[3 * j:3 * j + 3]
        if not 0 < nu < n / 2:
            raise PeakFitError(f"fitted peak left the spectrum (nu={nu:.3f} bins)")
        c = complex(cr, ci)
        near = _window(int(round(nu)), n_bins, 1).astype(float)
        height = float(np.max(np.abs(_tone_dft(nu, c, n, near))))
        var_nu = max(cov[3 * j, 3 * j], 0.0)
        # |c| uncertainty from the (cr, ci) block, projected on the phase direction
        u = np.array([cr, ci]) / max(abs(c), 1e-300)
        var_abs = max(float(u @ cov[3 * j + 1:3 * j + 3, 3 * j + 1:3 * j + 3] @ u), 0.0)
        fits.append(PeakFit(
            center_frequency=nu / (n * spec.t_l),
            height=height,
            frequency_uncertainty=math.sqrt(var_nu) / (n * spec.t_l),
            residual_sigma=math.sqrt(s2),
            amplitude=abs(c) * n,
            phase=float(np.angle(c)),
            center_bin=float(nu),
            data_length=n,
            t_l=spec.t_l,
            amplitude_uncertainty=math.sqrt(var_abs) * n,
            iterations=iters,
        ))
    return fits


def fit_sinc_peak(spec: Spectrum, half_window: int = FIT_HALF_WINDOW) -> PeakFit:
    """Fit the strongest non-DC peak of ``spec`` over ``+/- half_window`` bins."""
    return fit_peaks(spec, 1, half_window)[0]


# --------------------------------------------------------------------------
# SNR and sensitivity


def noise_level(spec: Spectrum, fits: PeakFit | Sequence[PeakFit]) -> float:
    """Standard deviation of ``|spectrum| - |model|`` over all non-DC bins."""
    fits = [fits] if isinstance(fits, PeakFit) else list(fits)
    bins = np.arange(1, len(spec.values), dtype=float)
    model = np.zeros(len(bins), dtype=complex)
    for f in fits:
        model += f.model(bins)
    return float(np.std(spec.magnitudes[1:] - np.abs(model)))


def compute_snr(spec: Spectrum, fit: PeakFit | Sequence[PeakFit]):
    """Peak height over the residual standard deviation.

    With several fits the residual is taken against their summed model and
    one SNR per fit is returned. A residual at rounding level (noiseless
    input) gives ``math.inf``.
    """
    fits = [fit] if isinstance(fit, PeakFit) else list(fit)
    noise = noise_level(spec, fits)
    top = max(f.height for f in fits)
    out = [math.inf if noise <= NOISELESS_RTOL * top else f.height / noise for f in fits]
    return out[0] if isinstance(fit, PeakFit) else out


def _analyze_length(trace, length, t_l, n_peaks):
    spec = fft_magnitude(trace, length, t_l)
    fits = fit_peaks(spec, n_peaks)
    return spec, fits, compute_snr(spec, fits)


def analyze_trace(trace: PixelTrace | np.ndarray, min_len: int | None = None, max_len: int | None = None,
                  n_peaks: int = 1, t_l: float | None = None) -> TraceAnalysis:
    """Picket-fence search plus peak fits; the full per-trace pipeline.

    The data length maximizing the SNR of the strongest peak is kept, ties
    going to the longer record. Lengths where the fit fails are skipped.
    """
    data = trace.counts if isinstance(trace, PixelTrace) else np.asarray(trace)
    if isinstance(trace, PixelTrace):
        t_l = trace.t_l
    total = len(data)
    lo = total if min_len is None else min_len
    hi = total if max_len is None else max_len
    check_int(lo, "min_len", minimum=2)
    check_int(hi, "max_len", minimum=2)
    if not lo <= hi <= total:
        raise ValidationError("max_len", f"need min_len <= max_len <= {total}, got [{lo}, {hi}]")
    best = None
    by_length = {}
    last_error = None
    for length in range(hi, lo - 1, -1):
        try:
            spec, fits, snr = _analyze_length(data, length, t_l, n_peaks)
        except PeakFitError as err:
            last_error = err
            continue
        by_length[length] = snr[0]
        if best is None or snr[0] > best.snr[0]:
            best = TraceAnalysis(length, spec, fits, snr)
    if best is None:
        raise PeakFitError(f"no data length in [{lo}, {hi}] could be fitted: {last_error}")
    best.snr_by_length = by_length
    return best


def picket_fence_search(trace: PixelTrace | np.ndarray, min_len: int, max_len: int,
                        t_l: float | None = None) -> tuple[int, Spectrum]:
    """Data length in ``[min_len, max_len]`` with the highest peak SNR."""
    result = analyze_trace(trace, min_len, max_len, 1, t_l)
    return result.length, result.spectrum


def sensitivity(b_z: float, t_tot: float, snr: float, pixel_area: float = 1.0,
                resolution: float = math.nan) -> SensitivityReport:
    """``eta = b_z sqrt(t_tot) / snr`` in T/sqrt(Hz).

    ``eta_normalized`` rescales to a 1 um^2 sensing area:
    ``eta * sqrt(pixel_area / 1 um^2)``.
    """
    if not snr > 0:
        raise ValidationError("snr", f"must be > 0, got {snr!r}")
    for name, v in (("b_z", b_z), ("t_tot", t_tot), ("pixel_area", pixel_area)):
        if not v > 0:
            raise ValidationError(name, f"must be > 0, got {v!r}")
    eta = b_z * math.sqrt(t_tot) / snr
    return SensitivityReport(snr, eta, eta * math.sqrt(pixel_area), resolution, t_tot, b_z, pixel_area)


def eta_model(n_rep, eta_infinity: float, t_read: float, t_s: float):
    """Sensitivity versus iterations: ``eta_inf * sqrt(1 + t_read / (t_s n_rep))``."""
    return eta_infinity * np.sqrt(1.0 + t_read / (t_s * np.asarray(n_rep, dtype=float)))


def fit_eta_curve(points: Sequence[tuple[float, float]], t_read: float, t_s: float) -> EtaCurveFit:
    """Least-squares ``eta_infinity`` for measured ``(n_rep, eta)`` pairs.

    The model is linear in its only parameter, so the solution is closed
    form; the standard error comes from the residual scatter.
    """
    pts = [(float(n), float(e)) for n, e in points if n > 0 and np.isfinite(e) and e > 0]
    if len(pts) < 3:
        raise ValidationError("points", f"need at least 3 usable (n_rep, eta) points, got {len(pts)}")
    n_rep, eta = np.array(pts).T
    g = np.sqrt(1.0 + t_read / (t_s * n_rep))
    eta_inf = float(g @ eta / (g @ g))
    resid = eta - eta_inf * g
    s2 = float(resid @ resid) / (len(pts) - 1)
    return EtaCurveFit(eta_inf, math.sqrt(s2 / float(g @ g)), resid)
