"""Named experiment presets, parameter sweeps and run manifests."""
from __future__ import annotations

import datetime as _dt
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .acquisition import ExperimentConfig, pixel_config, run_trace, run_widefield
from .analysis import (
    PeakFitError,
    SensitivityReport,
    TraceAnalysis,
    analyze_trace,
    eta_model,
    fit_eta_curve,
    sensitivity,
)
from .camera import PixelTrace, noise_regime
from .config import CALIBRATED_CAMERA, DEFAULT_FREQUENCY, ConfigError, Settings, deep_merge, dump, resolve, set_path
from .io import report_row, write_reports, write_spectrum, write_table, write_trace
from .signal_model import AcField, AcTone, alias_frequency, bandwidth, detuning, dirichlet_z

log = logging.getLogger(__name__)

#: Conventional triggered-XY8 reference point, from the measured data.
XY8_REFERENCE_ETA = 97e-9
XY8_REFERENCE_RESOLUTION = 70e3

FIG2B_N_REP = (1, 2, 5, 10, 25, 50, 100, 200, 400, 1000)
FIG2B_REPEATS = 4
FIG2B_FIT_MIN_N_REP = 25

FIG3_MAX_DETUNING = 2000.0
#: Sweep step as a fraction of 1/t_l; keeps every alias clear of DC and Nyquist.
FIG3_STEPS_PER_ALIAS_PERIOD = 12


@dataclass
class Measurement:
    trace: PixelTrace
    analysis: TraceAnalysis | None
    report: SensitivityReport | None

    @property
    def snr(self) -> float:
        return self.analysis.snr[0] if self.analysis else 0.0

    @property
    def eta(self) -> float:
        return self.report.eta_normalized if self.report else math.inf

    @property
    def frequency(self) -> float:
        return self.analysis.fits[0].center_frequency if self.analysis else math.nan


@dataclass
class RunManifest:
    preset: str
    config: dict
    seed: int
    timestamp: str
    outputs: list[str]
    version: str = __version__
    summary: dict = field(default_factory=dict)
    derived: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "preset": self.preset,
            "seed": self.seed,
            "timestamp": self.timestamp,
            "version": self.version,
            "outputs": list(self.outputs),
            "summary": _plain(self.summary),
            "derived": _plain(self.derived),
            "config": _plain(self.config),
        }


def _plain(obj):
    """Convert numpy scalars and tuples to YAML-safe builtins."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# --------------------------------------------------------------------------
# pipeline


def _matching_tone(config: ExperimentConfig, frequency: float) -> AcTone:
    t_l = config.schedule.t_l_exact
    return min(config.field.tones, key=lambda t: abs(alias_frequency(t.frequency, t_l) - frequency))


def analyze(settings: Settings, trace: PixelTrace, config: ExperimentConfig | None = None) -> Measurement:
    """Spectral analysis and sensitivity of one simulated trace."""
    config = config or settings.experiment
    lo, hi = settings.analysis.lengths(len(trace))
    try:
        res = analyze_trace(trace, lo, hi, settings.analysis.n_peaks)
    except PeakFitError as err:
        log.debug("no peak found: %s", err)
        return Measurement(trace, None, None)
    snr = res.snr[0]
    tone = _matching_tone(config, res.fits[0].center_frequency)
    report = None
    if snr > 0 and tone.amplitude > 0:
        report = sensitivity(tone.amplitude, res.length * trace.t_l, snr, config.camera.pixel_area,
                             resolution=res.spectrum.bin_width)
    return Measurement(trace, res, report)


def measure(settings: Settings, config: ExperimentConfig | None = None, pixel: int = 0) -> Measurement:
    config = config or settings.experiment
    return analyze(settings, run_trace(config, pixel=pixel), config)


def _map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _with_frequencies(config: ExperimentConfig, freqs: Sequence[float]) -> ExperimentConfig:
    tones = tuple(AcTone(t.amplitude, f, t.initial_phase) for t, f in zip(config.field.tones, freqs))
    return replace(config, field=AcField(tones))


# --------------------------------------------------------------------------
# plotting


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "iqdyne"
    return plt


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None})
    _pyplot().close(fig)
    return path


# --------------------------------------------------------------------------
# presets


def _fig2a(settings: Settings, out: Path, workers: int):
    runs = {}
    for mode in ("direct_qdyne", "iqdyne"):
        s = resolve({"mode": mode}, base=settings.raw)
        runs[mode] = (s, measure(s))
    outputs, rows, summary = [], [], {}
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for mode, (s, m) in runs.items():
        outputs.append(write_trace(m.trace, out / "traces" / mode))
        n_rep = s.experiment.schedule.n_rep
        if m.analysis is None:
            summary[mode] = {"snr": 0.0, "eta": math.inf}
            continue
        outputs.append(write_spectrum(m.analysis.spectrum, out / f"spectrum_{mode}.csv"))
        rows.append(report_row(m.report, n_rep))
        summary[mode] = {
            "snr": m.snr,
            "eta": m.eta,
            "resolution": m.report.resolution,
            "data_length": m.analysis.length,
            "frequency": m.frequency,
        }
        spec = m.analysis.spectrum
        # display normalization: total time and noise level
        noise = m.analysis.fits[0].height / m.snr if math.isfinite(m.snr) else 1.0
        ax.plot(spec.bin_frequencies, spec.magnitudes / noise / (spec.data_length * spec.t_l), label=mode)
    outputs.append(write_reports(rows, out / "report.csv"))
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("normalized magnitude")
    ax.legend()
    outputs.append(_save(fig, out / "fig2a_spectra.svg"))
    if runs["direct_qdyne"][1].report and runs["iqdyne"][1].report:
        summary["eta_ratio"] = runs["direct_qdyne"][1].eta / runs["iqdyne"][1].eta
    return outputs, summary


def _fig2b(settings: Settings, out: Path, workers: int):
    sch = settings.experiment.schedule

    def point(n_rep):
        s = resolve({"schedule": {"n_rep": n_rep}}, base=settings.raw)
        ms = [measure(s, pixel=j) for j in range(FIG2B_REPEATS)]
        etas = [m.eta for m in ms]
        return n_rep, ms, float(np.mean(etas)), float(np.mean([m.snr for m in ms])), s

    points = _map(point, list(FIG2B_N_REP), workers)
    fit = fit_eta_curve([(n, eta) for n, _, eta, _, _ in points if n >= FIG2B_FIT_MIN_N_REP], sch.t_read, sch.t_s)
    rows, report_rows = [], []
    for n_rep, ms, eta, snr, s in points:
        regime = noise_regime(s.experiment.camera, n_rep).value
        model = float(eta_model(n_rep, fit.eta_infinity, sch.t_read, sch.t_s))
        rows.append([n_rep, snr, eta, model, eta / model - 1.0, regime])
        report_rows += [report_row(m.report, n_rep) for m in ms if m.report]
    outputs = [
        write_table(out / "eta_vs_nrep.csv",
                    ("n_rep", "snr", "eta_t_per_sqrthz", "eta_model_t_per_sqrthz", "relative_residual", "noise_regime"),
                    rows),
        write_reports(report_rows, out / "report.csv"),
    ]
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    n = np.array([r[0] for r in rows], dtype=float)
    ax.loglog(n, [r[2] for r in rows], "o", label="simulated")
    grid = np.logspace(0, math.log10(n.max()), 200)
    ax.loglog(grid, eta_model(grid, fit.eta_infinity, sch.t_read, sch.t_s), "-", color="gray", label="fit")
    ax.axhline(fit.eta_infinity, ls="--", color="tab:blue", label="eta_inf")
    ax.set_xlabel("iterations per exposure")
    ax.set_ylabel("sensitivity (T/sqrt(Hz))")
    ax.legend()
    outputs.append(_save(fig, out / "fig2b_eta_vs_nrep.svg"))
    summary = {
        "eta_infinity": fit.eta_infinity,
        "eta_infinity_stderr": fit.stderr,
        "points": {int(r[0]): {"eta": r[2], "relative_residual": r[4], "regime": r[5]} for r in rows},
    }
    return outputs, summary


def _fig2c(settings: Settings, out: Path, workers: int):
    m = measure(settings)
    outputs = [write_trace(m.trace, out / "traces")]
    if m.analysis is None:
        raise PeakFitError("two-tone trace could not be fitted")
    t_l = settings.experiment.schedule.t_l_exact
    fits = sorted(zip(m.analysis.fits, m.analysis.snr), key=lambda p: p[0].center_frequency)
    rows = []
    for i, (f, snr) in enumerate(fits):
        tone = _matching_tone(settings.experiment, f.center_frequency)
        rows.append([i, f.center_frequency, f.frequency_uncertainty, f.height, snr,
                     alias_frequency(tone.frequency, t_l)])
    outputs.append(write_table(out / "peaks.csv",
                               ("peak", "center_frequency_hz", "frequency_uncertainty_hz", "height", "snr",
                                "applied_alias_hz"), rows))
    outputs.append(write_spectrum(m.analysis.spectrum, out / "spectrum.csv"))
    outputs.append(write_reports([report_row(m.report, settings.experiment.schedule.n_rep)], out / "report.csv"))
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    spec = m.analysis.spectrum
    ax.plot(spec.bin_frequencies, spec.magnitudes, ".-")
    for r in rows:
        ax.axvline(r[5], color="k", ls="--", lw=0.8)
    lo = min(r[1] for r in rows) - 2
    ax.set_xlim(lo, lo + 5)
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("magnitude")
    outputs.append(_save(fig, out / "fig2c_two_tone.svg"))
    summary = {
        "centers": [r[1] for r in rows],
        "uncertainties": [r[2] for r in rows],
        "separation": rows[-1][1] - rows[0][1] if len(rows) > 1 else math.nan,
    }
    return outputs, summary


def _fig2d(settings: Settings, out: Path, workers: int):
    wf = settings.widefield
    grid = run_widefield(wf, workers=workers)
    flat = [t for row in grid for t in row]

    def one(p):
        return analyze(settings, flat[p], pixel_config(wf, p))

    ms = _map(one, list(range(len(flat))), workers)
    outputs = [write_trace(t, out / "traces") for t in flat]
    rows = []
    for t, m in zip(flat, ms):
        r, c = t.pixel
        if m.analysis is None:
            rows.append([r, c, math.nan, math.nan, 0.0, 0])
            continue
        f = m.analysis.fits[0]
        rows.append([r, c, f.center_frequency, f.frequency_uncertainty, m.snr, m.analysis.length])
    outputs.append(write_table(out / "pixels.csv",
                               ("row", "col", "center_frequency_hz", "frequency_uncertainty_hz", "snr",
                                "data_length"), rows))
    freqs = np.array([r[2] for r in rows if math.isfinite(r[2])])
    unc = np.array([r[3] for r in rows if math.isfinite(r[2])])
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(freqs, bins=30)
    ax.set_xlabel("fitted frequency (Hz)")
    ax.set_ylabel("pixels")
    outputs.append(_save(fig, out / "fig2d_widefield_hist.svg"))
    summary = {
        "pixels": len(rows),
        "fitted": int(len(freqs)),
        "mean_frequency": float(freqs.mean()),
        "frequency_std": float(freqs.std(ddof=1)),
        "mean_uncertainty": float(unc.mean()),
        "rms_uncertainty": float(np.sqrt(np.mean(unc ** 2))),
        "injected_sigma": wf.field_inhomogeneity_sigma,
    }
    return outputs, summary


def detuning_grid(settings: Settings) -> tuple[np.ndarray, np.ndarray]:
    """Detunings (from the nearest multiple of 1/t_s) and tone frequencies of the sweep."""
    exp = settings.experiment
    sch = exp.schedule
    f0 = exp.field.tones[0].frequency
    d0 = detuning(f0, sch.t_s)
    step = 1.0 / (FIG3_STEPS_PER_ALIAS_PERIOD * sch.t_l)
    j = np.arange(int((FIG3_MAX_DETUNING - d0) // step) + 1)
    return d0 + j * step, f0 + j * step


def _fig3(settings: Settings, out: Path, workers: int):
    exp = settings.experiment
    sch = exp.schedule
    detunings, freqs = detuning_grid(settings)

    def point(i):
        cfg = _with_frequencies(exp, [freqs[i]] + [t.frequency for t in exp.field.tones[1:]])
        return measure(settings, cfg)

    ms = _map(point, list(range(len(freqs))), workers)
    z = dirichlet_z(detunings, sch.n_rep, sch.t_s) / sch.n_rep
    snr0 = ms[0].snr / abs(z[0])
    rows = []
    for d, f, zz, m in zip(detunings, freqs, z, ms):
        rows.append([d, m.snr, snr0 * abs(zz), zz, m.frequency, alias_frequency(f, sch.t_l_exact)])
    outputs = [write_table(out / "detuning_sweep.csv",
                           ("detuning_hz", "snr", "snr_predicted", "z_over_nrep", "fitted_frequency_hz",
                            "alias_frequency_hz"), rows)]
    snr = np.array([r[1] for r in rows])
    bw = bandwidth(sch.n_rep, sch.t_s)
    dips, revivals = [], []
    for k in range(1, int(detunings[-1] / bw) + 1):
        near = np.abs(detunings - k * bw) <= bw / 2
        dips.append({"expected": k * bw, "measured": float(detunings[near][np.argmin(snr[near])])})
        # a revival counts only if the maximum is interior, not the sweep edge
        between = (detunings > k * bw) & (detunings < (k + 1) * bw)
        if between.sum() >= 3 and np.argmax(snr[between]) < between.sum() - 1:
            revivals.append({"after_zero": k, "detuning": float(detunings[between][np.argmax(snr[between])]),
                             "snr": float(snr[between].max())})
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(detunings, snr, "o", ms=3, label="simulated")
    ax.plot(detunings, [r[2] for r in rows], "-", color="gray", label="|Z| prediction")
    for d in dips:
        ax.axvline(d["expected"], color="k", ls=":", lw=0.8)
    ax.set_xlabel("detuning (Hz)")
    ax.set_ylabel("SNR")
    ax.legend()
    outputs.append(_save(fig, out / "fig3_detuning_sweep.svg"))
    summary = {"step": float(detunings[1] - detunings[0]), "bandwidth": bw, "dips": dips, "revivals": revivals,
               "snr_on_resonance": ms[0].snr}
    return outputs, summary


def _fig4(settings: Settings, out: Path, workers: int):
    rows = []
    for mode in ("direct_qdyne", "iqdyne"):
        m = measure(resolve({"mode": mode}, base=settings.raw))
        rows.append([mode, m.report.resolution if m.report else math.nan, m.eta, "simulated"])
    rows.append(["conventional_xy8", XY8_REFERENCE_RESOLUTION, XY8_REFERENCE_ETA, "reference"])
    outputs = [write_table(out / "performance_map.csv",
                           ("protocol", "resolution_hz", "eta_t_per_sqrthz", "source"), rows)]
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4))
    for name, res, eta, _ in rows:
        ax.loglog(res, eta, "o", label=name)
    ax.set_xlabel("frequency resolution (Hz)")
    ax.set_ylabel("sensitivity (T/sqrt(Hz))")
    ax.legend()
    outputs.append(_save(fig, out / "fig4_performance_map.svg"))
    summary = {r[0]: {"resolution": r[1], "eta": r[2]} for r in rows}
    return outputs, summary


PRESETS: dict[str, tuple[dict, Callable]] = {
    "fig2a_spectra": ({"camera": CALIBRATED_CAMERA}, _fig2a),
    "fig2b_eta_vs_nrep": ({}, _fig2b),
    "fig2c_two_tone": (
        {
            "field": {"tones": [
                {"amplitude": 2.0e-6, "frequency": DEFAULT_FREQUENCY},
                {"amplitude": 1.5e-6, "frequency": DEFAULT_FREQUENCY + 1.0},
            ]},
            "analysis": {"n_peaks": 2},
        },
        _fig2c,
    ),
    "fig2d_widefield_hist": ({}, _fig2d),
    "fig3_detuning_sweep": ({}, _fig3),
    "fig4_performance_map": ({"camera": CALIBRATED_CAMERA}, _fig4),
}


def preset_settings(name: str, overrides: dict | None = None, seed: int | None = None) -> Settings:
    if name not in PRESETS:
        raise ConfigError([("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}")])
    raw = deep_merge(PRESETS[name][0], overrides or {})
    if seed is not None:
        raw = deep_merge(raw, {"camera": {"seed": seed}})
    return resolve(raw)


def run_preset(name: str, output_dir: str | Path, overrides: dict | None = None, *, seed: int | None = None,
               workers: int = 1, settings: Settings | None = None) -> RunManifest:
    """Run a figure preset and write its CSVs, plot and ``manifest.yaml``.

    ``overrides`` (a partial config) is merged over the preset's own
    settings. Passing ``settings`` skips preset resolution entirely, which is
    how a manifest's snapshot is replayed.
    """
    if settings is None:
        settings = preset_settings(name, overrides, seed)
    elif name not in PRESETS:
        raise ConfigError([("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}")])
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    outputs, summary = PRESETS[name][1](settings, out, workers)
    manifest = RunManifest(
        preset=name,
        config=settings.raw,
        seed=settings.experiment.camera.seed,
        timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat(),
        outputs=[str(Path(p).relative_to(out)) for p in outputs],
        summary=summary,
        derived=settings.derived(),
    )
    (out / "manifest.yaml").write_text(dump(manifest.to_dict()))
    return manifest


SWEEP_HEADER = ("value", "snr", "eta_t_per_sqrthz", "resolution_hz", "fitted_frequency_hz", "t_tot_s", "n_rep")


def sweep(param_path: str, values: Sequence[float], base: Settings | dict | None = None,
          workers: int = 1) -> list[list]:
    """One pipeline run per value of the numeric config field ``param_path``.

    Every point uses the same seed, so differences between rows come from
    the parameter rather than from the noise draw.
    """
    raw = base.raw if isinstance(base, Settings) else resolve(base).raw
    set_path(raw, param_path, 0)  # validates the path before running anything
    settings = [resolve(set_path(raw, param_path, v)) for v in values]

    def one(s: Settings):
        m = measure(s)
        rep = m.report
        return [
            None,
            m.snr,
            m.eta,
            rep.resolution if rep else math.nan,
            m.frequency,
            rep.t_tot if rep else math.nan,
            s.experiment.schedule.n_rep,
        ]

    rows = _map(one, settings, workers)
    for row, v in zip(rows, values):
        row[0] = v
    return rows


def write_sweep(rows, path: str | Path) -> Path:
    return write_table(path, SWEEP_HEADER, rows)

