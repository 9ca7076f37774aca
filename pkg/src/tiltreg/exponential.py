"""Closed forms for the tilted exponential and its median parameterization.

With an exponential baseline of rate ``lam`` the tilted CDF collapses to

    F(x) = (1 - exp(-lam*x)) * exp(-exp(-beta*lam*x)),    x > 0,

which this module evaluates directly instead of through the generic family.

The median parameterization replaces (beta, lam) by (mu, sigma), where mu is
the distribution's median and sigma > 0 reshapes the tails:

    lam  = (sigma + log 2) / mu,
    beta = -log(log(2*(1 - exp(-(sigma + log 2))))) / (sigma + log 2).

Writing c = sigma + log 2 and L = log(2*(1 - e^-c)), the CDF becomes

    F(x) = (1 - exp(-c*x/mu)) * exp(-L^(x/mu)),

and F(mu) = 0.5 identically, which is what makes the pair (mu, sigma) usable
as location/shape coordinates in a median regression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .baseline import ExponentialBaseline, _require_positive, _require_probability, _scalar_like
from .errors import NumericalError
from .family import TiltedDistribution, _aux_quantile_raw

_LOG2 = math.log(2.0)

# Below this sigma the implied beta overflows (the inner logarithm of the
# reparameterization tends to zero); reject instead of feeding exp() garbage.
_SIGMA_MIN = 1e-8


def _log_expm1(t):
    """log(exp(t) - 1) for t > 0 without overflow."""
    t = np.asarray(t, dtype=float)
    return np.where(t > 30.0, t, np.log(np.expm1(np.minimum(t, 30.0))))


@dataclass(frozen=True)
class TiltedExponential:
    """Tilted exponential distribution with shape ``beta`` and rate ``rate``."""

    beta: float
    rate: float

    def __post_init__(self):
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise ValueError("beta must be a positive finite number")
        if not (np.isfinite(self.rate) and self.rate > 0):
            raise ValueError("rate must be a positive finite number")

    def as_generic(self) -> TiltedDistribution:
        """The same law routed through the generic family (for cross-checks)."""
        return TiltedDistribution(ExponentialBaseline(self.rate), self.beta)

    def cdf(self, x):
        x = _require_positive(x, "x")
        lx = self.rate * x
        return _scalar_like(-np.expm1(-lx) * np.exp(-np.exp(-self.beta * lx)), x)

    def pdf(self, x):
        # lam*e^{-lam x}*[1 + beta*(1-e^{-lam x})*e^{-(beta-1) lam x}] * tilt,
        # regrouped as two decaying terms so beta < 1 cannot overflow.
        x = _require_positive(x, "x")
        lx = self.rate * x
        t1 = self.rate * np.exp(-lx)
        t2 = self.rate * self.beta * (-np.expm1(-lx)) * np.exp(-self.beta * lx)
        return _scalar_like((t1 + t2) * np.exp(-np.exp(-self.beta * lx)), x)

    def sf(self, t):
        t = _require_positive(t, "t")
        return _scalar_like(1.0 - np.asarray(self.cdf(t)), t)

    def hazard(self, t):
        t = _require_positive(t, "t")
        s = np.asarray(self.sf(t), dtype=float)
        if np.any(s <= 0.0):
            raise NumericalError(
                "survival function underflowed to zero; the hazard would "
                "overflow at the requested point"
            )
        return _scalar_like(np.asarray(self.pdf(t)) / s, t)

    def quantile(self, p):
        p = _require_probability(p)
        q = _aux_quantile_raw(self.beta, np.asarray(p, dtype=float))
        return _scalar_like(-np.log1p(-q) / self.rate, p)

    def sample(self, n: int, seed: int) -> np.ndarray:
        return self.as_generic().sample(n, seed)


def beta_from_quantile(rate: float, q: float, tau: float) -> float:
    """Shape beta making q the tau-th quantile of a tilted exponential.

    Inverts  tau = (1 - e^{-rate*q}) * exp(-e^{-beta*rate*q})  for beta:

        beta = -log(log((1 - e^{-rate*q}) / tau)) / (rate * q).

    A positive solution exists only when tau < 1 - e^{-rate*q} < tau*e;
    outside that window the inner logarithms leave the feasible branch.
    """
    if not (np.isfinite(rate) and rate > 0):
        raise ValueError("rate must be a positive finite number")
    if not (np.isfinite(q) and q > 0):
        raise ValueError("q must be a positive finite number")
    if not (0 < tau < 1):
        raise ValueError("tau must lie strictly inside (0, 1)")
    reach = -math.expm1(-rate * q)  # 1 - e^{-rate*q}
    ratio = reach / tau
    if ratio <= 1.0:
        raise ValueError(
            f"no positive shape exists: requires 1 - exp(-rate*q) > tau, "
            f"got {reach:.6g} <= {tau:.6g}"
        )
    inner = math.log(ratio)
    if inner >= 1.0:
        raise ValueError(
            f"no positive shape exists: requires 1 - exp(-rate*q) < tau*e, "
            f"got {reach:.6g} >= {tau * math.e:.6g}"
        )
    return -math.log(inner) / (rate * q)


def _reparam_constants(mu: float, sigma: float) -> tuple[float, float, float]:
    """(c, lam, logL) with c = sigma + log 2, lam = c/mu, L = log(2(1-e^-c)).

    For sigma > 0 we have c > log 2, hence 1 - e^-c > 1/2, hence L in (0, 1)
    and logL < 0.  That sign is what keeps the density bracket >= 1, so it is
    asserted rather than assumed.
    """
    c = sigma + _LOG2
    lam = c / mu
    L = math.log(2.0 * -math.expm1(-c))
    if not 0.0 < L < 1.0:
        raise AssertionError("tilt constant left (0, 1); reparameterization is broken")
    return c, lam, math.log(L)


def median_tilted_cdf(x, mu, sigma):
    """CDF of the median parameterization, vectorized over all arguments."""
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    c = sigma + _LOG2
    logL = np.log(np.log(2.0 * -np.expm1(-c)))
    return -np.expm1(-c * x / mu) * np.exp(-np.exp((x / mu) * logL))


def median_tilted_logpdf(x, mu, sigma):
    """Log-density of the median parameterization, vectorized and overflow-free.

    Evaluates the three printed factors in log space:

        log f = log(c/mu) - c*x/mu + log(bracket) - L^(x/mu),
        bracket = 1 + (-logL/c) * (e^{c*x/mu} - 1) * L^(x/mu),

    where powers L^(x/mu) are taken as exp((x/mu)*log L) in one shot.  The
    bracket's logarithm uses logaddexp so that large x/mu cannot overflow.
    """
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    c = sigma + _LOG2
    lam = c / mu
    logL = np.log(np.log(2.0 * -np.expm1(-c)))
    b = np.exp((x / mu) * logL)  # L^(x/mu) in (0, 1)
    log_bracket = np.logaddexp(
        0.0,
        np.log(-logL / c) + _log_expm1(lam * x) + (x / mu) * logL,
    )
    return np.log(lam) - lam * x + log_bracket - b


def median_tilted_score(x, mu, sigma):
    """(d logf/d mu, d logf/d sigma) of the median parameterization.

    Differentiates the log-space decomposition used by
    ``median_tilted_logpdf``: with weights w1, w2 from the logaddexp of the
    two density branches,

        d logf = -db + w1*dt1 + w2*dt2

    applied coordinate-wise in mu and sigma.  Vectorized; used as the
    optimizer's internal gradient through the link chain rule.
    """
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    c = sigma + _LOG2
    lam = c / mu
    A = -np.expm1(-c)  # 1 - e^{-c}
    L = np.log(2.0 * A)
    logL = np.log(L)
    r = x / mu
    b = np.exp(r * logL)
    lx = lam * x
    E = -np.expm1(-lx)  # 1 - e^{-lam x}
    t1 = np.log(lam) - lx
    t2 = np.log(E) + np.log(-logL) - np.log(mu) + r * logL
    s = np.logaddexp(t1, t2)
    w1 = np.exp(t1 - s)
    w2 = np.exp(t2 - s)

    dlogL = np.exp(-c) / (A * L)  # d logL / d sigma
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(lx < 1e-8, 1.0 / lam, x * np.exp(-lx) / E)  # x e^-lx / E

    db_dmu = -b * r * logL / mu
    db_dsig = b * r * dlogL
    dt1_dmu = (lx - 1.0) / mu
    dt1_dsig = (1.0 - lx) / c
    dt2_dmu = -(lam * ratio + 1.0 + r * logL) / mu
    dt2_dsig = ratio / mu + dlogL / logL + r * dlogL

    d_mu = -db_dmu + w1 * dt1_dmu + w2 * dt2_dmu
    d_sigma = -db_dsig + w1 * dt1_dsig + w2 * dt2_dsig
    return d_mu, d_sigma


@dataclass(frozen=True)
class MedianTiltedExponential:
    """Tilted exponential located by its median ``mu`` with shape ``sigma``."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (np.isfinite(self.mu) and self.mu > 0):
            raise ValueError("mu must be a positive finite number")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError("sigma must be a positive finite number")
        if self.sigma < _SIGMA_MIN:
            raise ValueError(
                f"sigma below {_SIGMA_MIN:g} makes the implied shape overflow"
            )

    def to_classical(self) -> TiltedExponential:
        """The same law in (beta, rate) coordinates."""
        c, lam, logL = _reparam_constants(self.mu, self.sigma)
        return TiltedExponential(beta=-logL / c, rate=lam)

    def cdf(self, x):
        x = _require_positive(x, "x")
        _reparam_constants(self.mu, self.sigma)  # sign sanity check
        return _scalar_like(median_tilted_cdf(x, self.mu, self.sigma), x)

    def pdf(self, x):
        x = _require_positive(x, "x")
        return _scalar_like(np.exp(median_tilted_logpdf(x, self.mu, self.sigma)), x)

    def log_pdf(self, x):
        x = _require_positive(x, "x")
        return _scalar_like(median_tilted_logpdf(x, self.mu, self.sigma), x)

    def sf(self, t):
        t = _require_positive(t, "t")
        return _scalar_like(1.0 - np.asarray(self.cdf(t)), t)

    def quantile(self, p):
        return self.to_classical().quantile(p)

    def sample(self, n: int, seed: int) -> np.ndarray:
        return self.to_classical().sample(n, seed)
