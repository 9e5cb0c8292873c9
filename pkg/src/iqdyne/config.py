"""YAML configuration: defaults, merging, validation and derived quantities.

A config file mirrors the domain types::

    mode: iqdyne
    field:
      tones:
        - {amplitude: 4.0e-6, frequency: 3333338.71, initial_phase: 0.0}
    block: {n_pulses: 48, tau: 1.5e-7}
    ensemble: {t2: 3.0e-6, gyromagnetic_ratio: 2.8024e10, contrast: 1.0}
    schedule: {t_s: 1.35e-5, n_rep: 100, t_read: 3.0e-3, n_exposures: 1000}
    camera: {photons_per_xy8: 200, readout_noise_sigma: 30, ...}
    analysis: {picket_fraction: 0.9, min_length: null, max_length: null, n_peaks: 1}
    widefield: {rows: 16, cols: 16, field_inhomogeneity_sigma: 0.0, ...}

Every key is optional; missing keys take the defaults below. Unknown keys
are errors.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from ._validation import ValidationError
from .acquisition import ExperimentConfig, Mode, WideFieldConfig
from .camera import CameraModel, noise_regime
from .signal_model import (
    AcField,
    AcTone,
    NvEnsemble,
    Schedule,
    Xy8Block,
    accumulated_phase,
    alias_frequency,
    bandwidth,
    coupling,
)

#: Test field period and a small offset that puts the 1000-point alias on
#: an exact bin at a 966-point record.
T_AC = 300e-9
DEFAULT_OFFSET_HZ = 24 / (966 * 4.35e-3)
DEFAULT_FREQUENCY = 1.0 / T_AC + DEFAULT_OFFSET_HZ

DEFAULTS: dict[str, Any] = {
    "mode": "iqdyne",
    "field": {"tones": [{"amplitude": 4.0e-6, "frequency": DEFAULT_FREQUENCY, "initial_phase": 0.0}]},
    "block": {"n_pulses": 48, "tau": 150e-9},
    "ensemble": {"t2": 3e-6, "gyromagnetic_ratio": 2.8024e10, "contrast": 1.0},
    "schedule": {"t_s": 13.5e-6, "n_rep": 100, "t_read": 3e-3, "n_exposures": 1000},
    "camera": {
        "photons_per_xy8": 200.0,
        "readout_noise_sigma": 30.0,
        "well_depth": 250000.0,
        "pixel_area": 1.0,
        "modulation_depth": 0.3,
        "seed": 0,
    },
    "analysis": {"picket_fraction": 0.9, "min_length": None, "max_length": None, "n_peaks": 1},
    "widefield": {
        "rows": 16,
        "cols": 16,
        "field_inhomogeneity_sigma": 0.0,
        "amplitude_inhomogeneity_sigma": 0.0,
    },
}

#: Camera fitted so that the direct and iterated sensitivities land near the
#: measured 2.07 uT/sqrt(Hz) and 65 nT/sqrt(Hz). Not derived from hardware data.
CALIBRATED_CAMERA = {"readout_noise_sigma": 57.0, "pixel_area": 25.0}

_TONE_KEYS = {"amplitude", "frequency", "initial_phase"}
_SECTIONS = {
    "block": Xy8Block,
    "ensemble": NvEnsemble,
    "schedule": Schedule,
    "camera": CameraModel,
}


class ConfigError(ValueError):
    """Configuration rejected; ``errors`` lists ``(field path, message)``."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("; ".join(f"{p}: {m}" for p, m in errors))


@dataclass(frozen=True)
class AnalysisSettings:
    picket_fraction: float = 0.9
    min_length: int | None = None
    max_length: int | None = None
    n_peaks: int = 1

    def lengths(self, n_exposures: int) -> tuple[int, int]:
        hi = n_exposures if self.max_length is None else self.max_length
        lo = math.ceil(self.picket_fraction * hi) if self.min_length is None else self.min_length
        return lo, hi


@dataclass(frozen=True)
class Settings:
    """A validated configuration plus the raw dictionary it came from."""

    experiment: ExperimentConfig
    analysis: AnalysisSettings
    widefield: WideFieldConfig
    raw: dict

    def derived(self) -> dict:
        return derived_quantities(self)


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _unknown(section: dict, allowed, prefix: str, errors):
    for key in section:
        if key not in allowed:
            errors.append((f"{prefix}{key}", "unknown key"))


def resolve(raw: dict | None = None, *, base: dict | None = None) -> Settings:
    """Merge ``raw`` over the defaults (or ``base``) and validate everything.

    All problems are collected and raised together as :class:`ConfigError`.
    """
    merged = deep_merge(DEFAULTS if base is None else base, raw or {})
    errors: list[tuple[str, str]] = []
    _unknown(merged, DEFAULTS.keys(), "", errors)
    for name, section in merged.items():
        if name in DEFAULTS and isinstance(DEFAULTS[name], dict):
            if not isinstance(section, dict):
                errors.append((name, "expected a mapping"))
                continue
            _unknown(section, DEFAULTS[name].keys(), f"{name}.", errors)
    if errors:
        raise ConfigError(errors)

    def build(path, factory, kwargs):
        try:
            return factory(**kwargs)
        except ValidationError as err:
            # dataclasses stop at the first bad field; retry keys one by one to report all of them
            found = []
            for key, value in kwargs.items():
                if key == "base":
                    continue
                try:
                    factory(**{k: v for k, v in kwargs.items() if k == "base"}, **{key: value})
                except ValidationError as single:
                    found.append((f"{path}.{single.field}", single.message))
                except TypeError:
                    pass
            errors.extend(found or [(f"{path}.{err.field}", err.message)])
        except TypeError as err:
            errors.append((path, str(err)))
        return None

    tones = []
    raw_tones = merged["field"].get("tones")
    if not isinstance(raw_tones, list) or not raw_tones:
        errors.append(("field.tones", "expected a non-empty list of tones"))
    else:
        for i, t in enumerate(raw_tones):
            if not isinstance(t, dict):
                errors.append((f"field.tones.{i}", "expected a mapping"))
                continue
            _unknown(t, _TONE_KEYS, f"field.tones.{i}.", errors)
            tones.append(build(f"field.tones.{i}", AcTone, {k: v for k, v in t.items() if k in _TONE_KEYS}))
    field = None
    if tones and all(t is not None for t in tones):
        try:
            field = AcField(tuple(tones))
        except ValidationError as err:
            errors.append((f"field.{err.field}", err.message))
    parts = {name: build(name, cls, merged[name]) for name, cls in _SECTIONS.items()}
    analysis = build("analysis", AnalysisSettings, merged["analysis"])
    try:
        mode = Mode(merged["mode"])
    except ValueError:
        errors.append(("mode", f"must be one of {[m.value for m in Mode]}, got {merged['mode']!r}"))
        mode = None
    if errors:
        raise ConfigError(errors)

    try:
        experiment = ExperimentConfig(field, parts["block"], parts["ensemble"], parts["schedule"], parts["camera"], mode)
    except ValidationError as err:
        path = "block.duration" if err.field == "block" else f"field.{err.field}"
        raise ConfigError([(path, err.message)]) from None
    if mode is Mode.DIRECT_QDYNE:
        merged["schedule"]["n_rep"] = 1
    _check_analysis(analysis, experiment.schedule.n_exposures, errors)
    wf = build("widefield", WideFieldConfig, dict(base=experiment, **merged["widefield"]))
    if errors:
        raise ConfigError(errors)
    return Settings(experiment, analysis, wf, merged)


def _check_analysis(analysis: AnalysisSettings, n_exposures: int, errors):
    if not 0 < analysis.picket_fraction <= 1:
        errors.append(("analysis.picket_fraction", "must be in (0, 1]"))
        return
    if isinstance(analysis.n_peaks, bool) or not isinstance(analysis.n_peaks, int) or analysis.n_peaks < 1:
        errors.append(("analysis.n_peaks", "must be an integer >= 1"))
    lo, hi = analysis.lengths(n_exposures)
    if not 14 <= lo <= hi <= n_exposures:
        errors.append(("analysis.min_length", f"need 14 <= min_length <= max_length <= n_exposures, got [{lo}, {hi}]"))


def load(path: str | Path, overrides: dict | None = None) -> Settings:
    """Read a YAML config (or a run manifest) and resolve it."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as err:
        raise ConfigError([("<file>", f"not valid YAML: {err}")]) from None
    if not isinstance(data, dict):
        raise ConfigError([("<file>", "top level must be a mapping")])
    if "config" in data and "preset" in data:
        data = data["config"]
    return resolve(deep_merge(data, overrides or {}))


def validate_config(path: str | Path) -> dict:
    """Resolved config plus derived quantities; raises :class:`ConfigError`."""
    settings = load(path)
    return {"config": settings.raw, "derived": settings.derived()}


def derived_quantities(settings: Settings) -> dict:
    exp = settings.experiment
    sch = exp.schedule
    lo, hi = settings.analysis.lengths(sch.n_exposures)
    tones = []
    for tone in exp.field.tones:
        tones.append({
            "frequency": tone.frequency,
            "t_s_over_t_ac": sch.t_s * tone.frequency,
            "alias_frequency": alias_frequency(tone.frequency, sch.t_l_exact),
            "accumulated_phase": accumulated_phase(tone.amplitude, exp.block, exp.ensemble),
        })
    return {
        "t_l": sch.t_l,
        "t_tot": sch.t_tot,
        "bandwidth": bandwidth(sch.n_rep, sch.t_s),
        "bin_width": 1.0 / (sch.n_exposures * sch.t_l),
        "block_duration": exp.block.duration,
        "coupling_per_tesla": coupling(exp.block, exp.ensemble),
        "noise_regime": noise_regime(exp.camera, sch.n_rep).value,
        "picket_lengths": [lo, hi],
        "tones": tones,
    }


def set_path(raw: dict, path: str, value) -> dict:
    """Copy of ``raw`` with the dotted ``path`` set to ``value``.

    The path must address an existing numeric leaf (list indices allowed).
    """
    out = copy.deepcopy(raw)
    keys = path.split(".")
    node = out
    for i, key in enumerate(keys):
        last = i == len(keys) - 1
        if isinstance(node, list):
            try:
                key = int(key)
                node[key]
            except (ValueError, IndexError):
                raise ConfigError([(path, "unknown path")]) from None
        elif not isinstance(node, dict) or key not in node:
            raise ConfigError([(path, "unknown path")])
        if last:
            current = node[key]
            if isinstance(current, bool) or not isinstance(current, (int, float)):
                raise ConfigError([(path, f"not a numeric field (current value {current!r})")])
            node[key] = int(value) if isinstance(current, int) and float(value).is_integer() else float(value)
        else:
            node = node[key]
    return out


def dump(data: dict) -> str:
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None)
