"""Signal-to-noise ratios for the three classic quality characteristics.

All three return decibels.  The smaller-better and larger-better forms are
negated log mean squares, so for a single observation y the smaller-better
value is exactly ``-20*log10(y)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, InvalidInputError


def _as_observations(values, metric: str) -> np.ndarray:
    y = np.asarray(values, dtype=float).ravel()
    if y.size == 0:
        raise InvalidInputError(f"{metric}: no observations")
    if not np.all(np.isfinite(y)):
        raise InvalidInputError(f"{metric}: non-finite observation")
    return y


def snr_smaller_better(values) -> float:
    """``-10*log10(mean(y^2))`` for strictly positive observations."""
    y = _as_observations(values, "smaller-better")
    if np.any(y <= 0):
        raise DomainError("smaller-better: observations must be > 0")
    return float(-10.0 * math.log10(float(np.mean(np.square(y)))))


def snr_larger_better(values) -> float:
    """``-10*log10(mean(1/y^2))`` for strictly positive observations."""
    y = _as_observations(values, "larger-better")
    if np.any(y <= 0):
        raise DomainError("larger-better: observations must be > 0")
    return float(-10.0 * math.log10(float(np.mean(1.0 / np.square(y)))))


def snr_nominal_best(values) -> float:
    """``10*log10(mean^2 / var)`` with the (n-1)-denominator variance.

    Needs at least two observations; a zero mean or zero spread has no
    finite ratio and raises :class:`DomainError`.
    """
    y = _as_observations(values, "nominal-best")
    if y.size < 2:
        raise InvalidInputError("nominal-best: needs at least 2 observations")
    mean = float(np.mean(y))
    var = float(np.var(y, ddof=1))
    if var == 0.0:
        raise DomainError("nominal-best: zero variance, ratio undefined")
    if mean == 0.0:
        raise DomainError("nominal-best: zero mean, ratio undefined")
    return float(10.0 * math.log10(mean * mean / var))


SNR_METRICS = {
    "smaller": snr_smaller_better,
    "larger": snr_larger_better,
    "nominal": snr_nominal_best,
}


@dataclass(frozen=True)
class SnrVector:
    """Per-design-point SNR values tagged with the metric that produced them."""

    metric: str
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        for v in self.values:
            if not math.isfinite(v):
                raise InvalidInputError("SNR vector contains a non-finite value")

    def __len__(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def snr_vector(response_rows, metric: str) -> SnrVector:
    """Apply one metric to each row of an ``(n_points, r)`` response block."""
    if metric not in SNR_METRICS:
        raise InvalidInputError(
            f"unknown SNR metric {metric!r}; choose from {sorted(SNR_METRICS)}"
        )
    fn = SNR_METRICS[metric]
    rows = np.asarray(response_rows, dtype=float)
    if rows.ndim == 1:
        rows = rows[:, np.newaxis]
    return SnrVector(metric=metric, values=tuple(fn(row) for row in rows))
