"""Baseline distributions on the positive half-line.

The tilted family in :mod:`tiltreg.family` is generic over a baseline
distribution that supplies a CDF ``G``, a density ``g``, the density's
derivative ``g'`` and a quantile function, all on the support ``(0, inf)``.
Baselines with any other support are not admitted.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np


def _require_positive(x, name: str):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError(f"{name} must be strictly positive")
    return x


def _require_probability(p, name: str = "p"):
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0) & (p < 1))):
        raise ValueError(f"{name} must lie strictly inside (0, 1)")
    return p


def _scalar_like(result, reference):
    """Return a Python float when the input was scalar, else the array."""
    if np.ndim(reference) == 0:
        return float(result)
    return result


class BaselineDistribution(ABC):
    """Continuous distribution on (0, inf) usable as a tilt baseline.

    Subclasses must provide ``cdf``, ``pdf`` and ``quantile``.  The density
    derivative defaults to a central difference; baselines with a closed form
    should override it.  ``log_pdf`` / ``log_sf`` have generic fallbacks and
    exist so that tail evaluations can stay in log space.

    All operations are pure functions of immutable parameters and accept
    scalars or NumPy arrays.
    """

    @abstractmethod
    def cdf(self, x):
        """G(x) for x > 0."""

    @abstractmethod
    def pdf(self, x):
        """g(x) = G'(x) for x > 0."""

    @abstractmethod
    def quantile(self, p):
        """Inverse CDF for p in (0, 1)."""

    def pdf_derivative(self, x):
        """g'(x), by central differences with relative step 1e-6 by default."""
        x = _require_positive(x, "x")
        h = 1e-6 * np.maximum(1.0, np.abs(x))
        lo = np.maximum(x - h, x * 0.5)  # stay inside the support
        return _scalar_like((self.pdf(x + h) - self.pdf(lo)) / (x + h - lo), x)

    def log_pdf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(x))

    def log_sf(self, x):
        """log(1 - G(x)); override when a cancellation-free form exists."""
        with np.errstate(divide="ignore"):
            return np.log1p(-np.asarray(self.cdf(x)))


@dataclass(frozen=True)
class ExponentialBaseline(BaselineDistribution):
    """Exponential distribution with rate ``rate`` per unit of x.

    cdf(x) = 1 - exp(-rate*x), pdf(x) = rate*exp(-rate*x),
    quantile(p) = -log(1-p)/rate.
    """

    rate: float

    def __post_init__(self):
        if not (np.isfinite(self.rate) and self.rate > 0):
            raise ValueError("rate must be a positive finite number")

    def cdf(self, x):
        x = _require_positive(x, "x")
        return _scalar_like(-np.expm1(-self.rate * x), x)

    def pdf(self, x):
        x = _require_positive(x, "x")
        return _scalar_like(self.rate * np.exp(-self.rate * x), x)

    def pdf_derivative(self, x):
        x = _require_positive(x, "x")
        return _scalar_like(-self.rate**2 * np.exp(-self.rate * x), x)

    def quantile(self, p):
        p = _require_probability(p)
        return _scalar_like(-np.log1p(-p) / self.rate, p)

    def log_pdf(self, x):
        x = _require_positive(x, "x")
        return _scalar_like(np.log(self.rate) - self.rate * x, x)

    def log_sf(self, x):
        x = _require_positive(x, "x")
        return _scalar_like(-self.rate * x, x)
