"""Small input-checking helpers shared across modules."""
from __future__ import annotations

import numbers

import numpy as np


class ValidationError(ValueError):
    """Raised when a parameter violates a documented invariant.

    ``field`` names the offending parameter (dotted path for nested configs).
    """

    def __init__(self, field: str, message: str):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")


def check_positive(value, field: str, *, strict: bool = True) -> float:
    if not isinstance(value, numbers.Real) or isinstance(value, bool) or not np.isfinite(value):
        raise ValidationError(field, f"expected a finite real number, got {value!r}")
    if strict and value <= 0:
        raise ValidationError(field, f"must be > 0, got {value!r}")
    if not strict and value < 0:
        raise ValidationError(field, f"must be >= 0, got {value!r}")
    return float(value)


def check_int(value, field: str, *, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValidationError(field, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ValidationError(field, f"must be >= {minimum}, got {value!r}")
    return int(value)


def check_finite(value, field: str) -> float:
    if not isinstance(value, numbers.Real) or isinstance(value, bool) or not np.isfinite(value):
        raise ValidationError(field, f"expected a finite real number, got {value!r}")
    return float(value)
