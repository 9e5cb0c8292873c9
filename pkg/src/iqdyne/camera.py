"""Camera noise model: photon budget, shot noise, readout noise, well depth."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ._validation import ValidationError, check_int, check_positive
from .signal_model import Schedule


class NoiseRegime(str, enum.Enum):
    READOUT_DOMINATED = "readout_dominated"
    SHOT_DOMINATED = "shot_dominated"
    MIXED = "mixed"


@dataclass(frozen=True)
class CameraModel:
    """Per-pixel camera response.

    Parameters
    ----------
    photons_per_xy8 : float
        Mean baseline photoelectrons collected per pixel per XY8 block.
    readout_noise_sigma : float
        Gaussian readout noise, electrons rms per exposure.
    well_depth : float
        Full-well capacity in electrons; counts are clamped to it.
    pixel_area : float
        Pixel area in square micrometres, used to normalize sensitivities.
    modulation_depth : float
        Fractional fluorescence change per unit of per-block signal.
    seed : int
        Root seed for all per-pixel random streams.
    """

    photons_per_xy8: float = 200.0
    readout_noise_sigma: float = 30.0
    well_depth: float = 250_000.0
    pixel_area: float = 1.0
    modulation_depth: float = 0.3
    seed: int = 0

    def __post_init__(self):
        check_positive(self.photons_per_xy8, "photons_per_xy8")
        check_positive(self.readout_noise_sigma, "readout_noise_sigma", strict=False)
        check_positive(self.well_depth, "well_depth")
        check_positive(self.pixel_area, "pixel_area")
        check_positive(self.modulation_depth, "modulation_depth")
        check_int(self.seed, "seed", minimum=0)


@dataclass
class PixelTrace:
    """Per-exposure photon counts of one pixel.

    ``counts`` holds integers for simulated acquisitions; noiseless runs store
    the float expected counts instead.
    """

    counts: np.ndarray
    schedule: Schedule
    saturated: bool = False
    pixel: tuple[int, int] = (0, 0)

    def __post_init__(self):
        self.counts = np.asarray(self.counts)
        if self.counts.ndim != 1 or len(self.counts) != self.schedule.n_exposures:
            raise ValidationError(
                "counts", f"expected {self.schedule.n_exposures} exposures, got shape {self.counts.shape}"
            )

    def __len__(self):
        return len(self.counts)

    @property
    def t_l(self) -> float:
        return self.schedule.t_l

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.counts)) * self.schedule.t_l


def pixel_rng(seed: int, pixel: int = 0, stream: int = 0) -> np.random.Generator:
    """Random generator for one pixel.

    Keyed on ``(seed, pixel, stream)`` only, so a pixel's draws do not depend
    on how many other pixels exist or in which order they are simulated.
    Stream 0 feeds camera noise, stream 1 per-pixel parameter draws.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(pixel, stream)))


def mean_counts(ideal_signal, n_rep: int, model: CameraModel) -> np.ndarray:
    """Expected photoelectrons: ``n_rep * P * (1 + depth * s / n_rep)``."""
    s = np.asarray(ideal_signal, dtype=float)
    mean = n_rep * model.photons_per_xy8 + model.photons_per_xy8 * model.modulation_depth * s
    if np.any(mean < 0):
        raise ValueError("negative expected count; ideal signal exceeds the modulation range")
    return mean


def expose(ideal_signal, n_rep: int, model: CameraModel, rng: np.random.Generator | None,
           noiseless: bool = False):
    """Sample camera counts for one or many exposures.

    Returns ``(counts, saturated)``. With ``noiseless=True`` the expected count
    is returned unrounded and ``rng`` is unused.
    """
    mean = mean_counts(ideal_signal, n_rep, model)
    saturated = bool(np.any(mean > model.well_depth))
    if noiseless:
        counts = np.minimum(mean, model.well_depth)
    else:
        counts = rng.poisson(mean).astype(np.int64)
        if model.readout_noise_sigma > 0:
            counts += np.rint(rng.normal(0.0, model.readout_noise_sigma, size=mean.shape)).astype(np.int64)
        saturated = saturated or bool(np.any(counts > model.well_depth))
        counts = np.clip(counts, 0, int(model.well_depth))
    if counts.ndim == 0:
        counts = counts.item()
    return counts, saturated


def noise_regime(model: CameraModel, n_rep: int) -> NoiseRegime:
    """Classify the dominant noise source of one exposure.

    Compares readout variance with shot variance ``n_rep * photons_per_xy8``:
    ratio above 3 is readout dominated, below 1/3 shot dominated.
    """
    ratio = model.readout_noise_sigma ** 2 / (n_rep * model.photons_per_xy8)
    if ratio > 3:
        return NoiseRegime.READOUT_DOMINATED
    if ratio < 1 / 3:
        return NoiseRegime.SHOT_DOMINATED
    return NoiseRegime.MIXED
