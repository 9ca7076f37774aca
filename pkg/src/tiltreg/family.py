"""Survival-tilted distributions built on a positive baseline.

A baseline CDF ``G`` with survival ``Gbar = 1 - G`` is mapped to

    F(x) = G(x) * exp(-Gbar(x)**beta),        x > 0, beta > 0,

with density

    f(x) = g(x) * [1 + beta*G(x)*Gbar(x)**(beta-1)] * exp(-Gbar(x)**beta).

The tilt factor ``exp(-Gbar**beta)`` equals the survival function of a
unit-scale Weibull with shape ``beta`` evaluated at ``Gbar(x)``; it thins the
lower tail of the baseline and fades to one in the upper tail.  Quantiles and
sampling route through a unit-interval auxiliary variable with CDF
``y * exp(-(1-y)**beta)``: if ``Y`` follows that law, ``G^{-1}(Y)`` follows
``F``.

Closed-form moments do not exist for this family; the moment operations below
evaluate the survival-function identity

    E[X^p; eps < X < delta] = eps^p S(eps) - delta^p S(delta)
                              + p * int_eps^delta u^(p-1) S(u) du

by adaptive quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .baseline import (
    BaselineDistribution,
    _require_positive,
    _require_probability,
    _scalar_like,
)
from .errors import NumericalError

# Hybrid secant/bisection controls for the auxiliary quantile solve.
_ROOT_ATOL = 1e-14
_ROOT_MAX_ITER = 200

# Quadrature targets for the moment operations.
_QUAD_ABS_TOL = 1e-10
_QUAD_REL_TOL = 1e-8
_TAIL_SF_CUTOFF = 1e-14


def _check_beta(beta: float) -> float:
    if not (np.isfinite(beta) and beta > 0):
        raise ValueError("beta must be a positive finite number")
    return float(beta)


def _aux_cdf_raw(y, beta):
    # y * exp(-(1-y)^beta) without domain checks; y may touch the endpoints.
    return y * np.exp(-np.exp(beta * np.log1p(-y)))


def _aux_quantile_raw(beta: float, p: np.ndarray) -> np.ndarray:
    """Solve q * exp(-(1-q)^beta) = p elementwise on a guaranteed bracket.

    The map is continuous and strictly increasing, and its value at q = p is
    below p, so [max(p, 1e-300), 1 - 1e-16] brackets the root.  Each iteration
    tries a secant step and falls back to the midpoint whenever the secant
    leaves the bracket (and on alternate iterations, which bounds the bracket
    width by halving).  For p within ~1e-8 of 1 and beta < 1 the root can sit
    closer to 1 than the upper endpoint allows; the endpoint is returned there.
    """
    p = np.asarray(p, dtype=float)
    lo = np.maximum(p, 1e-300)
    hi = np.full_like(p, 1.0 - 1e-16)
    flo = _aux_cdf_raw(lo, beta) - p
    fhi = _aux_cdf_raw(hi, beta) - p

    done_hi = fhi <= 0  # root beyond the representable bracket
    a, b = lo.copy(), hi.copy()
    fa, fb = flo, fhi
    for it in range(_ROOT_MAX_ITER):
        width = b - a
        if np.all((width < _ROOT_ATOL) | done_hi):
            break
        denom = fb - fa
        with np.errstate(divide="ignore", invalid="ignore"):
            secant = b - fb * width / denom
        mid = 0.5 * (a + b)
        inside = (secant > a) & (secant < b) & np.isfinite(secant)
        x = np.where(inside & (it % 2 == 0), secant, mid)
        fx = _aux_cdf_raw(x, beta) - p
        neg = fx < 0
        a = np.where(neg, x, a)
        fa = np.where(neg, fx, fa)
        b = np.where(neg, b, x)
        fb = np.where(neg, fx, fb)
    else:
        resid = np.max(np.abs(_aux_cdf_raw(0.5 * (a + b), beta) - p))
        raise NumericalError(
            f"auxiliary quantile solve did not converge within "
            f"{_ROOT_MAX_ITER} iterations (max residual {resid:.3e})"
        )
    q = 0.5 * (a + b)
    return np.where(done_hi, hi, q)


@dataclass(frozen=True)
class TiltVariable:
    """Unit-interval auxiliary variable with CDF ``y * exp(-(1-y)**beta)``.

    Its density is ``exp(-(1-y)^beta) * (1 + y*beta*(1-y)^(beta-1))`` on
    (0, 1).  Quantiles of the tilted distribution factor through this
    variable's quantile followed by the baseline quantile.
    """

    beta: float

    def __post_init__(self):
        _check_beta(self.beta)

    def density(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(~((y > 0) & (y < 1))):
            raise ValueError("y must lie strictly inside (0, 1)")
        log1my = np.log1p(-y)
        tail = np.exp(self.beta * log1my)  # (1-y)^beta
        slope = np.exp((self.beta - 1.0) * log1my)  # (1-y)^(beta-1)
        return _scalar_like(np.exp(-tail) * (1.0 + y * self.beta * slope), y)

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(~((y > 0) & (y < 1))):
            raise ValueError("y must lie strictly inside (0, 1)")
        return _scalar_like(_aux_cdf_raw(y, self.beta), y)

    def quantile(self, p):
        p = _require_probability(p)
        return _scalar_like(_aux_quantile_raw(self.beta, p), p)


@dataclass(frozen=True)
class TiltedDistribution:
    """Baseline distribution reshaped by the survival tilt with shape beta."""

    baseline: BaselineDistribution
    beta: float

    def __post_init__(self):
        _check_beta(self.beta)
        if not isinstance(self.baseline, BaselineDistribution):
            raise TypeError("baseline must be a BaselineDistribution")
        # support must be (0, inf): a baseline putting mass at or below zero
        # has a non-positive lower quantile
        if not float(self.baseline.quantile(1e-12)) > 0.0:
            raise ValueError(
                "baseline support must be contained in (0, inf)"
            )

    # -- distribution functions ----------------------------------------

    def cdf(self, x):
        """F(x) = G(x) * exp(-(1-G(x))^beta)."""
        x = _require_positive(x, "x")
        G = np.asarray(self.baseline.cdf(x), dtype=float)
        log_sf = np.asarray(self.baseline.log_sf(x), dtype=float)
        return _scalar_like(G * np.exp(-np.exp(self.beta * log_sf)), x)

    def sf(self, t):
        """Survival 1 - F(t)."""
        t = _require_positive(t, "t")
        return _scalar_like(1.0 - np.asarray(self.cdf(t)), t)

    def pdf(self, x):
        """Density of F; the tail term is assembled in log space.

        ``Gbar**(beta-1)`` explodes as x grows when beta < 1 while the density
        itself decays, so the product ``g*G*Gbar^(beta-1)`` is fused via
        ``log_pdf`` and ``log_sf`` before exponentiating.
        """
        x = _require_positive(x, "x")
        G = np.asarray(self.baseline.cdf(x), dtype=float)
        log_sf = np.asarray(self.baseline.log_sf(x), dtype=float)
        g = np.asarray(self.baseline.pdf(x), dtype=float)
        log_g = np.asarray(self.baseline.log_pdf(x), dtype=float)
        with np.errstate(divide="ignore"):
            bump = np.exp(np.log(self.beta) + np.log(G) + log_g
                          + (self.beta - 1.0) * log_sf)
        tilt = np.exp(-np.exp(self.beta * log_sf))
        return _scalar_like((g + bump) * tilt, x)

    def log_pdf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(x))

    def hazard(self, t):
        """f(t) / S(t).  Raises when the survival underflows to zero."""
        t = _require_positive(t, "t")
        s = np.asarray(self.sf(t), dtype=float)
        if np.any(s <= 0.0):
            raise NumericalError(
                "survival function underflowed to zero; the hazard would "
                "overflow at the requested point"
            )
        return _scalar_like(np.asarray(self.pdf(t)) / s, t)

    # -- quantiles and sampling ----------------------------------------

    def quantile(self, p):
        """Inverse CDF: baseline quantile of the auxiliary quantile."""
        p = _require_probability(p)
        q = _aux_quantile_raw(self.beta, np.asarray(p, dtype=float))
        return _scalar_like(np.asarray(self.baseline.quantile(q)), p)

    def sample(self, n: int, seed: int) -> np.ndarray:
        """n inverse-transform draws, deterministic for a given seed."""
        if n < 1:
            raise ValueError("n must be at least 1")
        rng = np.random.default_rng(seed)
        u = rng.uniform(size=n)
        u[u == 0.0] = 1e-300  # keep inside the quantile domain
        q = _aux_quantile_raw(self.beta, u)
        return np.asarray(self.baseline.quantile(q), dtype=float)

    # -- mode ------------------------------------------------------------

    def mode(self, grid_points: int = 256) -> float | None:
        """Interior mode, or None when no interior critical point exists.

        Scans ``grid_points`` subintervals of [quantile(0.001),
        quantile(0.999)] for a sign change of d/dx log f (central
        differences), then polishes the bracketing interval with Brent's
        method.  A root only qualifies when the derivative passes from
        positive to negative, i.e. the point is a local maximum.  With
        several qualifying roots the one with the largest density wins.
        """
        lo = float(self.quantile(0.001))
        hi = float(self.quantile(0.999))

        def slope(x: float) -> float:
            h = 1e-6 * max(1.0, abs(x))
            h = min(h, 0.5 * x)
            return float((self.log_pdf(x + h) - self.log_pdf(x - h)) / (2 * h))

        xs = np.linspace(lo, hi, grid_points + 1)
        ss = np.array([slope(float(x)) for x in xs])
        candidates = []
        for i in range(grid_points):
            if ss[i] > 0.0 and ss[i + 1] < 0.0:
                root = brentq(slope, xs[i], xs[i + 1], xtol=1e-12)
                candidates.append(float(root))
        if not candidates:
            return None
        return max(candidates, key=lambda x: float(self.pdf(x)))

    # -- moments ---------------------------------------------------------

    def _sf_quad(self, p: float, lower: float, upper: float) -> float:
        result = quad(
            lambda u: u ** (p - 1.0) * (1.0 - float(self.cdf(u))) if u > 0 else 0.0,
            lower,
            upper,
            epsabs=_QUAD_ABS_TOL,
            epsrel=_QUAD_REL_TOL,
            limit=200,
            full_output=True,
        )
        value, abserr = result[0], result[1]
        if len(result) > 3:  # QUADPACK warning message present
            raise NumericalError(
                f"moment quadrature did not converge on ({lower}, {upper}); "
                f"estimated error {abserr:.3e}"
            )
        return float(value)

    def _tail_cutoff(self, lower: float) -> float:
        t = max(1.0, 2.0 * lower)
        for _ in range(64):
            if 1.0 - float(self.cdf(t)) < _TAIL_SF_CUTOFF:
                return t
            t *= 2.0
        raise NumericalError("survival tail did not fall below the cutoff")

    def truncated_moment(self, p: float, lower: float, upper: float) -> float:
        """E[X^p; lower < X < upper] via the survival-function identity."""
        if not p > 0:
            raise ValueError("moment order p must be positive")
        if not (lower >= 0 and upper > lower):
            raise ValueError("need 0 <= lower < upper")
        if np.isinf(upper):
            return self.upper_moment(p, lower)
        s_lo = 1.0 if lower == 0.0 else float(self.sf(lower))
        s_hi = float(self.sf(upper))
        head = lower**p * s_lo - upper**p * s_hi
        return head + p * self._sf_quad(p, lower, upper)

    def upper_moment(self, p: float, lower: float) -> float:
        """E[X^p; X > lower]; the infinite tail is cut where S < 1e-14."""
        if not p > 0:
            raise ValueError("moment order p must be positive")
        if lower < 0:
            raise ValueError("lower must be nonnegative")
        cutoff = self._tail_cutoff(lower)
        s_lo = 1.0 if lower == 0.0 else float(self.sf(lower))
        return lower**p * s_lo + p * self._sf_quad(p, lower, cutoff)

    def moment(self, p: float) -> float:
        """Raw moment E[X^p]."""
        return self.upper_moment(p, 0.0)
