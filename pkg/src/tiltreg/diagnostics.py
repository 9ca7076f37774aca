"""Quantile residuals and goodness-of-fit plots.

Residuals are normal scores of the fitted CDF: r_i = Phi^{-1}(F(y_i)) with F
evaluated at the per-observation fitted (mu_i, sigma_i).  Under a correct
model they are approximately standard normal, so a QQ-plot against normal
quantiles and a worm plot (the de-trended QQ-plot, with pointwise 95% bands)
summarize fit quality.  Plots are written as standalone SVG with fully
deterministic bytes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import kurtosis, norm, skew

from .exponential import median_tilted_cdf
from .regression import FittedModel, ModelSpec, predict_median, predict_sigma

# Keeps Phi^{-1} finite: |residual| tops out near 8.
_CDF_FLOOR = 1e-15


def quantile_residuals(fitted: FittedModel, spec: ModelSpec) -> np.ndarray:
    """Normal scores of the fitted CDF at each observation.

    The CDF value is floored into [1e-15, 1 - 1e-15] before applying the
    normal quantile function so saturation cannot produce infinities.  A
    non-converged fit still yields residuals but attaches a warning.
    """
    if not fitted.converged:
        warnings.warn(
            "computing quantile residuals from a non-converged fit",
            RuntimeWarning,
        )
    mu = predict_median(fitted, spec.mu_design)
    sigma = predict_sigma(fitted, spec.sigma_design)
    u = median_tilted_cdf(spec.response, mu, sigma)
    u = np.clip(u, _CDF_FLOOR, 1.0 - _CDF_FLOOR)
    return norm.ppf(u)


def _plotting_positions(n: int) -> np.ndarray:
    # Blom's rule, the standard choice for normal QQ plots.
    i = np.arange(1, n + 1)
    return (i - 0.375) / (n + 0.25)


def qq_plot_data(residuals) -> np.ndarray:
    """(n, 2) array of (theoretical normal quantile, ordered residual)."""
    r = np.asarray(residuals, dtype=float).ravel()
    if r.size < 2:
        raise ValueError("QQ plot needs at least 2 residuals")
    theo = norm.ppf(_plotting_positions(r.size))
    return np.column_stack([theo, np.sort(r)])


def worm_plot_data(residuals) -> tuple[np.ndarray, np.ndarray]:
    """De-trended QQ points plus pointwise 95% bands.

    Returns ``(points, bands)``: points are (theoretical quantile, ordered
    residual - theoretical quantile); bands are (lower, upper) limits
    ``+/- 1.96 * sqrt(p(1-p)/n) / phi(z)`` at each plotting position.
    """
    r = np.asarray(residuals, dtype=float).ravel()
    if r.size < 10:
        raise ValueError("worm plot needs at least 10 residuals")
    qq = qq_plot_data(r)
    theo = qq[:, 0]
    dev = qq[:, 1] - theo
    p = _plotting_positions(r.size)
    half = 1.96 * np.sqrt(p * (1.0 - p) / r.size) / norm.pdf(theo)
    bands = np.column_stack([-half, half])
    return np.column_stack([theo, dev]), bands


@dataclass(frozen=True)
class DiagnosticsReport:
    """Residuals with their QQ/worm renderings and moment summary."""

    residuals: np.ndarray
    qq_points: np.ndarray
    worm_points: np.ndarray
    bands: np.ndarray
    summary: dict[str, float]


def build_report(residuals) -> DiagnosticsReport:
    """Assemble the full report; requires enough residuals for a worm plot."""
    r = np.asarray(residuals, dtype=float).ravel()
    worm, bands = worm_plot_data(r)
    summary = {
        "mean": float(np.mean(r)),
        "variance": float(np.var(r, ddof=1)),
        "skewness": float(skew(r)),
        "excess_kurtosis": float(kurtosis(r)),
    }
    return DiagnosticsReport(
        residuals=r,
        qq_points=qq_plot_data(r),
        worm_points=worm,
        bands=bands,
        summary=summary,
    )


# ---------------------------------------------------------------------------
# SVG rendering.  Plots are assembled by hand so output bytes depend only on
# the report contents (matplotlib embeds environment-dependent metadata).
# ---------------------------------------------------------------------------

_W, _H = 640, 480
_ML, _MR, _MT, _MB = 70, 20, 40, 55


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / target
    mag = 10.0 ** np.floor(np.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = np.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * span:
        ticks.append(0.0 if abs(t) < 1e-12 * span else float(t))
        t += step
    return ticks


class _Canvas:
    def __init__(self, xlim, ylim):
        self.xlim = xlim
        self.ylim = ylim
        self.parts: list[str] = []

    def x(self, v: float) -> float:
        lo, hi = self.xlim
        return _ML + (v - lo) / (hi - lo) * (_W - _ML - _MR)

    def y(self, v: float) -> float:
        lo, hi = self.ylim
        return _H - _MB - (v - lo) / (hi - lo) * (_H - _MT - _MB)

    def add(self, s: str):
        self.parts.append(s)


def _render(canvas: _Canvas, title: str, xlabel: str, ylabel: str) -> str:
    xt = _ticks(*canvas.xlim)
    yt = _ticks(*canvas.ylim)
    axes = []
    x0, x1 = _ML, _W - _MR
    y0, y1 = _H - _MB, _MT
    axes.append(
        f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
        f'fill="none" stroke="black" stroke-width="1"/>'
    )
    for t in xt:
        px = canvas.x(t)
        if x0 - 0.5 <= px <= x1 + 0.5:
            axes.append(
                f'<line x1="{px:.2f}" y1="{y0}" x2="{px:.2f}" y2="{y0 + 5}" '
                f'stroke="black" stroke-width="1"/>'
            )
            axes.append(
                f'<text x="{px:.2f}" y="{y0 + 18}" text-anchor="middle" '
                f'font-size="11">{_fmt(t)}</text>'
            )
    for t in yt:
        py = canvas.y(t)
        if y1 - 0.5 <= py <= y0 + 0.5:
            axes.append(
                f'<line x1="{x0 - 5}" y1="{py:.2f}" x2="{x0}" y2="{py:.2f}" '
                f'stroke="black" stroke-width="1"/>'
            )
            axes.append(
                f'<text x="{x0 - 8}" y="{py + 4:.2f}" text-anchor="end" '
                f'font-size="11">{_fmt(t)}</text>'
            )
    labels = [
        f'<text x="{(x0 + x1) / 2:.2f}" y="{_H - 12}" text-anchor="middle" '
        f'font-size="13">{xlabel}</text>',
        f'<text x="18" y="{(y0 + y1) / 2:.2f}" text-anchor="middle" '
        f'font-size="13" transform="rotate(-90 18 {(y0 + y1) / 2:.2f})">'
        f"{ylabel}</text>",
        f'<text x="{(x0 + x1) / 2:.2f}" y="24" text-anchor="middle" '
        f'font-size="15">{title}</text>',
    ]
    body = "\n".join(axes + labels + canvas.parts)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">\n<rect width="{_W}" height="{_H}" '
        f'fill="white"/>\n{body}\n</svg>\n'
    )


def _pad_limits(values: np.ndarray) -> tuple[float, float]:
    lo, hi = float(np.min(values)), float(np.max(values))
    pad = 0.06 * (hi - lo) if hi > lo else max(0.5, abs(hi)) * 0.1
    return lo - pad, hi + pad


def render_svg(report: DiagnosticsReport, kind: str, path) -> None:
    """Write the QQ or worm plot of a report to ``path`` as SVG.

    Points are circles, the reference (identity line for QQ, zero line plus
    dotted 95% bands for worm) is drawn beneath them.  Byte output is a pure
    function of the report contents.
    """
    if kind not in ("qq", "worm"):
        raise ValueError("kind must be 'qq' or 'worm'")
    if kind == "qq":
        pts = report.qq_points
        xlim = _pad_limits(pts[:, 0])
        ylim = _pad_limits(np.concatenate([pts[:, 1], pts[:, 0]]))
        canvas = _Canvas(xlim, ylim)
        canvas.add(
            f'<line x1="{canvas.x(xlim[0]):.2f}" y1="{canvas.y(xlim[0]):.2f}" '
            f'x2="{canvas.x(xlim[1]):.2f}" y2="{canvas.y(xlim[1]):.2f}" '
            f'stroke="firebrick" stroke-width="1.5"/>'
        )
        for tx, ty in pts:
            canvas.add(
                f'<circle cx="{canvas.x(tx):.2f}" cy="{canvas.y(ty):.2f}" '
                f'r="2.5" fill="steelblue" fill-opacity="0.7"/>'
            )
        svg = _render(
            canvas,
            "Normal QQ plot of quantile residuals",
            "Theoretical quantile",
            "Ordered residual",
        )
    else:
        pts = report.worm_points
        bands = report.bands
        xlim = _pad_limits(pts[:, 0])
        ylim = _pad_limits(
            np.concatenate([pts[:, 1], bands[:, 0], bands[:, 1]])
        )
        canvas = _Canvas(xlim, ylim)
        canvas.add(
            f'<line x1="{canvas.x(xlim[0]):.2f}" y1="{canvas.y(0):.2f}" '
            f'x2="{canvas.x(xlim[1]):.2f}" y2="{canvas.y(0):.2f}" '
            f'stroke="firebrick" stroke-width="1.5"/>'
        )
        for col in (0, 1):
            coords = " ".join(
                f"{canvas.x(tx):.2f},{canvas.y(b):.2f}"
                for tx, b in zip(pts[:, 0], bands[:, col])
            )
            canvas.add(
                f'<polyline points="{coords}" fill="none" stroke="gray" '
                f'stroke-width="1" stroke-dasharray="3,3"/>'
            )
        for tx, ty in pts:
            canvas.add(
                f'<circle cx="{canvas.x(tx):.2f}" cy="{canvas.y(ty):.2f}" '
                f'r="2.5" fill="steelblue" fill-opacity="0.7"/>'
            )
        svg = _render(
            canvas,
            "Worm plot of quantile residuals",
            "Theoretical quantile",
            "Deviation",
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
