"""Closed-form physics of the iterated-XY8 exposure signal.

A camera exposure integrates ``n_rep`` XY8 blocks spaced by ``t_s``. In the
weak-field regime each block returns ``A * b_z * cos(phase)`` where ``phase``
is the AC phase at the start of the block, so one exposure is a sum of
equally phase-stepped cosines. That sum has the Dirichlet-kernel closed form
implemented here, next to the literal summation used as its oracle.

Phase bookkeeping is done with exact rational arithmetic on the binary values
of the float inputs, because ``f_ac * t`` is a product of a MHz frequency and
a millisecond-to-second time and double precision loses the fractional cycle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from ._validation import ValidationError, check_finite, check_int, check_positive

TWO_PI = 2.0 * math.pi

#: Electron gyromagnetic ratio gamma_e / 2pi in Hz/T.
GAMMA_E = 2.8024e10

#: Fractional tolerance on ``tau`` around ``T_ac / 2``.
RESONANCE_TOLERANCE = 0.10

#: Largest accumulated phase accepted by the linear model.
MAX_LINEAR_PHASE = math.pi / 4


@dataclass(frozen=True)
class AcTone:
    """One RF tone: amplitude (T), frequency (Hz), initial phase (rad).

    The initial phase is stored reduced to ``[0, 2pi)``.
    """

    amplitude: float
    frequency: float
    initial_phase: float = 0.0

    def __post_init__(self):
        check_positive(self.amplitude, "amplitude", strict=False)
        check_positive(self.frequency, "frequency")
        phase = check_finite(self.initial_phase, "initial_phase") % TWO_PI
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "frequency", float(self.frequency))
        object.__setattr__(self, "initial_phase", phase)

    @property
    def period(self) -> float:
        return 1.0 / self.frequency


@dataclass(frozen=True)
class AcField:
    """Superposition of one or more tones with distinct frequencies."""

    tones: tuple[AcTone, ...]

    def __post_init__(self):
        tones = tuple(self.tones)
        if not tones:
            raise ValidationError("tones", "an AC field needs at least one tone")
        freqs = [t.frequency for t in tones]
        if len(set(freqs)) != len(freqs):
            raise ValidationError("tones", "tone frequencies must be pairwise distinct")
        object.__setattr__(self, "tones", tones)

    @classmethod
    def single(cls, amplitude: float, frequency: float, initial_phase: float = 0.0) -> "AcField":
        return cls((AcTone(amplitude, frequency, initial_phase),))

    def __len__(self):
        return len(self.tones)

    def __iter__(self):
        return iter(self.tones)


@dataclass(frozen=True)
class Xy8Block:
    """XY8-N block with idealized zero-width pulses.

    ``n_pulses`` counts pi pulses and must be a multiple of 8; ``tau`` is the
    spacing between pulse centers.
    """

    n_pulses: int = 48
    tau: float = 150e-9

    def __post_init__(self):
        n = check_int(self.n_pulses, "n_pulses", minimum=8)
        if n % 8:
            raise ValidationError("n_pulses", f"must be a multiple of 8, got {n}")
        check_positive(self.tau, "tau")
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def duration(self) -> float:
        return self.n_pulses * self.tau


@dataclass(frozen=True)
class NvEnsemble:
    t2: float = 3e-6
    gyromagnetic_ratio: float = GAMMA_E
    contrast: float = 1.0

    def __post_init__(self):
        check_positive(self.t2, "t2")
        check_positive(self.gyromagnetic_ratio, "gyromagnetic_ratio")
        c = check_positive(self.contrast, "contrast")
        if c > 1:
            raise ValidationError("contrast", f"must be in (0, 1], got {c}")


@dataclass(frozen=True)
class Schedule:
    """Two-timescale timing of an acquisition.

    Within an exposure, ``n_rep`` XY8 blocks start every ``t_s`` seconds; the
    camera then spends ``t_read`` seconds reading out. One exposure cycle lasts
    ``t_l = n_rep * t_s + t_read`` and the record holds ``n_exposures`` cycles.
    """

    t_s: float = 13.5e-6
    n_rep: int = 100
    t_read: float = 3e-3
    n_exposures: int = 1000
    _t_l_exact: Fraction = dc_field(init=False, repr=False, compare=False)

    def __post_init__(self):
        check_positive(self.t_s, "t_s")
        check_int(self.n_rep, "n_rep", minimum=1)
        check_positive(self.t_read, "t_read", strict=False)
        check_int(self.n_exposures, "n_exposures", minimum=2)
        object.__setattr__(self, "t_s", float(self.t_s))
        object.__setattr__(self, "t_read", float(self.t_read))
        exact = self.n_rep * Fraction(self.t_s) + Fraction(self.t_read)
        object.__setattr__(self, "_t_l_exact", exact)

    @property
    def t_l_exact(self) -> Fraction:
        """Exposure period as an exact rational of the float inputs."""
        return self._t_l_exact

    @property
    def t_l(self) -> float:
        return float(self._t_l_exact)

    @property
    def t_tot(self) -> float:
        return float(self.n_exposures * self._t_l_exact)

    def replace(self, **changes) -> "Schedule":
        kw = dict(t_s=self.t_s, n_rep=self.n_rep, t_read=self.t_read, n_exposures=self.n_exposures)
        kw.update(changes)
        return Schedule(**kw)


# --------------------------------------------------------------------------
# exact cycle arithmetic


def _as_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(float(x))


def centered_cycles(frequency, duration) -> Fraction:
    """Fractional part of ``frequency * duration`` reduced to ``(-1/2, 1/2]``.

    Both inputs are taken at their exact binary value (or as given, if
    already :class:`~fractions.Fraction`).
    """
    c = _as_fraction(frequency) * _as_fraction(duration)
    r = c - math.floor(c)
    if r > Fraction(1, 2):
        r -= 1
    return r


def coupling(block: Xy8Block, ens: NvEnsemble) -> float:
    """First-order XY8 response per tesla: ``(2/pi) * gamma * contrast * T``."""
    return (2.0 / math.pi) * ens.gyromagnetic_ratio * ens.contrast * block.duration


def accumulated_phase(amplitude: float, block: Xy8Block, ens: NvEnsemble) -> float:
    """Peak phase accumulated by a resonant block, ``(2/pi) * gamma * b * T``."""
    return (2.0 / math.pi) * ens.gyromagnetic_ratio * amplitude * block.duration


def check_linear_regime(field: AcField | AcTone, block: Xy8Block, ens: NvEnsemble) -> None:
    """Reject tones off the block's resonance or fields outside the linear regime."""
    tones = (field,) if isinstance(field, AcTone) else field.tones
    for i, tone in enumerate(tones):
        half_period = 0.5 / tone.frequency
        mismatch = abs(block.tau - half_period) / half_period
        if mismatch > RESONANCE_TOLERANCE:
            raise ValidationError(
                f"tones[{i}].frequency",
                f"tau={block.tau:.4g} s is {mismatch:.1%} away from T_ac/2={half_period:.4g} s "
                f"(limit {RESONANCE_TOLERANCE:.0%})",
            )
    # worst case: all tones in phase
    phase = accumulated_phase(sum(t.amplitude for t in tones), block, ens)
    if phase >= MAX_LINEAR_PHASE:
        raise ValidationError(
            "tones.amplitude",
            f"accumulated phase {phase:.4g} >= pi/4; field too strong for the linear model",
        )


def xy8_response(tone: AcTone, block: Xy8Block, ens: NvEnsemble, phase_at_start) -> np.ndarray | float:
    """Signal of a single XY8 block whose first pulse sees AC phase ``phase_at_start``."""
    check_linear_regime(tone, block, ens)
    out = coupling(block, ens) * tone.amplitude * np.cos(phase_at_start)
    return float(out) if np.ndim(out) == 0 else out


def delta_phi(tone: AcTone, schedule: Schedule) -> float:
    """AC phase advance between consecutive blocks, reduced to ``(-pi, pi]``."""
    return TWO_PI * float(centered_cycles(tone.frequency, schedule.t_s))


def dirichlet_z(delta_f, n_rep: int, t_s: float):
    """Frequency response ``sin(pi N t_s df) / sin(pi t_s df)``.

    Removable singularities (``t_s * df`` integer) return the analytic limit
    ``(-1)**(m*(N-1)) * N``.
    """
    check_int(n_rep, "n_rep", minimum=1)
    x = np.asarray(delta_f, dtype=float) * t_s
    m = np.round(x)
    r = x - m
    sign = np.where((m * (n_rep - 1)) % 2 == 0, 1.0, -1.0)
    z = sign * _dirichlet_half_angle(np.pi * r, n_rep)
    return float(z) if z.ndim == 0 else z


def _dirichlet_half_angle(x, n: int) -> np.ndarray:
    """``sin(n x) / sin(x)`` for ``|x| <= pi/2`` with the limit at 0."""
    x = np.asarray(x, dtype=float)
    s = np.sin(x)
    small = np.abs(s) < 1e-8
    safe = np.where(small, 1.0, s)
    taylor = n * (1.0 - (n * n - 1.0) * x * x / 6.0)
    return np.where(small, taylor, np.sin(n * x) / safe)


def bandwidth(n_rep: int, t_s: float) -> float:
    """First zero of the frequency response, ``1 / (n_rep * t_s)``."""
    check_int(n_rep, "n_rep", minimum=1)
    check_positive(t_s, "t_s")
    return 1.0 / (n_rep * t_s)


def alias_frequency(f_ac, t_l) -> float:
    """Frequency at which a tone ``f_ac`` appears when sampled every ``t_l``.

    Folded into ``[0, 1 / (2 t_l)]``. ``t_l`` may be a Fraction for exact
    bookkeeping (see :attr:`Schedule.t_l_exact`).
    """
    t = _as_fraction(t_l)
    if t <= 0:
        raise ValidationError("t_l", "must be > 0")
    return float(abs(centered_cycles(f_ac, t)) / t)


# --------------------------------------------------------------------------
# exposure signal


def _phase_arrays(field: AcField, first_phase) -> list[np.ndarray]:
    # a bare scalar or ndarray belongs to the single tone; lists/tuples are per tone
    if len(field) == 1 and not isinstance(first_phase, (list, tuple)):
        return [np.asarray(first_phase, dtype=float)]
    if len(first_phase) != len(field):
        raise ValidationError("first_phase", f"need one phase (or phase array) per tone, got {len(first_phase)}")
    return [np.asarray(p, dtype=float) for p in first_phase]


def _finish(total):
    return float(total) if np.ndim(total) == 0 else total


def exposure_signal_bruteforce(field: AcField, block: Xy8Block, ens: NvEnsemble, schedule: Schedule,
                               first_phase) -> np.ndarray | float:
    """Literal sum of the ``n_rep`` block responses of one exposure.

    ``first_phase`` is the AC phase at the first block, a scalar for a
    single-tone field or one entry per tone otherwise. Entries may be arrays,
    in which case one exposure is evaluated per element.
    """
    check_linear_regime(field, block, ens)
    a = coupling(block, ens)
    k = np.arange(schedule.n_rep, dtype=float)
    total = 0.0
    for tone, phi in zip(field.tones, _phase_arrays(field, first_phase)):
        dphi = delta_phi(tone, schedule)
        terms = np.cos(phi[..., None] + k * dphi)
        total = total + a * tone.amplitude * terms.sum(axis=-1)
    return _finish(total)


def exposure_signal_closed(field: AcField, block: Xy8Block, ens: NvEnsemble, schedule: Schedule,
                           first_phase) -> np.ndarray | float:
    """Dirichlet closed form of :func:`exposure_signal_bruteforce`.

    ``A b Z cos(phi + (N-1)/2 dphi)`` per tone, summed over tones.
    """
    check_linear_regime(field, block, ens)
    return _finish(_closed_unchecked(field, coupling(block, ens), schedule, first_phase))


def _closed_unchecked(field: AcField, a: float, schedule: Schedule, first_phase):
    n = schedule.n_rep
    total = 0.0
    for tone, phi in zip(field.tones, _phase_arrays(field, first_phase)):
        dphi = delta_phi(tone, schedule)
        z = _dirichlet_half_angle(0.5 * dphi, n)
        total = total + a * tone.amplitude * z * np.cos(phi + 0.5 * (n - 1) * dphi)
    return total


def resonant_frequency(t_s: float, harmonic: int) -> float:
    """Tone frequency with exactly ``harmonic`` periods per ``t_s``."""
    return harmonic / t_s


def detuning(f_ac: float, t_s: float) -> float:
    """Offset of ``f_ac`` from the nearest multiple of ``1 / t_s``, in Hz."""
    return float(centered_cycles(f_ac, t_s) / Fraction(t_s))
