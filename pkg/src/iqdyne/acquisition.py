"""Drive a full measurement: exposure phases, exposure signals, camera counts."""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from ._validation import ValidationError, check_int, check_positive
from .camera import CameraModel, PixelTrace, expose, pixel_rng
from .signal_model import (
    TWO_PI,
    AcField,
    AcTone,
    NvEnsemble,
    Schedule,
    Xy8Block,
    _closed_unchecked,
    check_linear_regime,
    coupling,
    exposure_signal_bruteforce,
)


class Mode(str, enum.Enum):
    DIRECT_QDYNE = "direct_qdyne"
    IQDYNE = "iqdyne"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to simulate one pixel.

    ``mode="direct_qdyne"`` pins ``schedule.n_rep`` to 1 (one XY8 block per
    exposure); any other value in the given schedule is overridden.
    """

    field: AcField
    block: Xy8Block = Xy8Block()
    ensemble: NvEnsemble = NvEnsemble()
    schedule: Schedule = Schedule()
    camera: CameraModel = CameraModel()
    mode: Mode = Mode.IQDYNE

    def __post_init__(self):
        mode = Mode(self.mode)
        object.__setattr__(self, "mode", mode)
        if mode is Mode.DIRECT_QDYNE and self.schedule.n_rep != 1:
            object.__setattr__(self, "schedule", self.schedule.replace(n_rep=1))
        if self.block.duration > self.schedule.t_s:
            raise ValidationError(
                "block",
                f"XY8 duration {self.block.duration:.4g} s exceeds the sampling interval t_s={self.schedule.t_s:.4g} s",
            )
        check_linear_regime(self.field, self.block, self.ensemble)


@dataclass(frozen=True)
class WideFieldConfig:
    """A grid of pixels sharing timing and camera but not field parameters.

    Each pixel draws its tone frequencies from ``Normal(f_ac, field_inhomogeneity_sigma)``
    and amplitudes from ``b_z * (1 + Normal(0, amplitude_inhomogeneity_sigma))``.
    """

    base: ExperimentConfig
    rows: int = 16
    cols: int = 16
    field_inhomogeneity_sigma: float = 0.0
    amplitude_inhomogeneity_sigma: float = 0.0

    def __post_init__(self):
        check_int(self.rows, "rows", minimum=1)
        check_int(self.cols, "cols", minimum=1)
        check_positive(self.field_inhomogeneity_sigma, "field_inhomogeneity_sigma", strict=False)
        check_positive(self.amplitude_inhomogeneity_sigma, "amplitude_inhomogeneity_sigma", strict=False)


def phase_at_exposure(tone: AcTone, schedule: Schedule, k):
    """AC phase at the first XY8 block of exposure ``k``, in ``[0, 2pi)``.

    ``k`` may be an integer or an integer array. The cycle count
    ``f_ac * t_l * k`` is reduced modulo 1 with exact integer arithmetic, so
    there is no drift however large ``k`` gets.
    """
    c = Fraction(tone.frequency) * schedule.t_l_exact
    frac = c - math.floor(c)
    p, q = frac.numerator, frac.denominator
    if np.ndim(k) == 0:
        kk = int(k)
        if kk < 0:
            raise ValidationError("k", "exposure index must be >= 0")
        return (tone.initial_phase + TWO_PI * ((kk * p % q) / q)) % TWO_PI
    ks = np.asarray(k)
    if np.any(ks < 0):
        raise ValidationError("k", "exposure index must be >= 0")
    cycles = np.array([(int(kk) * p % q) / q for kk in ks.ravel()], dtype=float).reshape(ks.shape)
    return (tone.initial_phase + TWO_PI * cycles) % TWO_PI


def exposure_phases(field: AcField, schedule: Schedule) -> list[np.ndarray]:
    k = np.arange(schedule.n_exposures)
    return [phase_at_exposure(tone, schedule, k) for tone in field.tones]


def ideal_trace(config: ExperimentConfig, bruteforce: bool = False) -> np.ndarray:
    """Exposure signals (before the camera) for every exposure of the record."""
    phases = exposure_phases(config.field, config.schedule)
    if bruteforce:
        return exposure_signal_bruteforce(config.field, config.block, config.ensemble, config.schedule, phases)
    a = coupling(config.block, config.ensemble)
    return np.asarray(_closed_unchecked(config.field, a, config.schedule, phases), dtype=float) \
        * np.ones(config.schedule.n_exposures)


def run_trace(config: ExperimentConfig, *, pixel: int = 0, position: tuple[int, int] = (0, 0),
              noiseless: bool = False, bruteforce: bool = False) -> PixelTrace:
    """Simulate the camera record of a single pixel.

    Noise is drawn from :func:`~iqdyne.camera.pixel_rng` keyed on
    ``(config.camera.seed, pixel)``. ``noiseless=True`` returns expected
    (float) counts.
    """
    signal = ideal_trace(config, bruteforce=bruteforce)
    rng = None if noiseless else pixel_rng(config.camera.seed, pixel, 0)
    counts, saturated = expose(signal, config.schedule.n_rep, config.camera, rng, noiseless=noiseless)
    return PixelTrace(np.atleast_1d(counts), config.schedule, saturated, position)


def pixel_config(config: WideFieldConfig, pixel: int) -> ExperimentConfig:
    """Per-pixel experiment with inhomogeneous tone parameters drawn."""
    base = config.base
    if config.field_inhomogeneity_sigma == 0 and config.amplitude_inhomogeneity_sigma == 0:
        return base
    rng = pixel_rng(base.camera.seed, pixel, 1)
    tones = []
    for tone in base.field.tones:
        f = tone.frequency + config.field_inhomogeneity_sigma * rng.standard_normal()
        scale = 1.0 + config.amplitude_inhomogeneity_sigma * rng.standard_normal()
        tones.append(AcTone(tone.amplitude * max(scale, 0.0), f, tone.initial_phase))
    return replace(base, field=AcField(tuple(tones)))


def run_widefield(config: WideFieldConfig, *, workers: int = 1, noiseless: bool = False) -> list[list[PixelTrace]]:
    """Simulate every pixel of the grid; returns ``traces[row][col]``.

    Results are identical for any ``workers`` count.
    """

    def one(p):
        r, c = divmod(p, config.cols)
        return run_trace(pixel_config(config, p), pixel=p, position=(r, c), noiseless=noiseless)

    n = config.rows * config.cols
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            flat = list(pool.map(one, range(n)))
    else:
        flat = [one(p) for p in range(n)]
    return [flat[r * config.cols:(r + 1) * config.cols] for r in range(config.rows)]
