"""Deterministic SVG scatter plots of accuracy points and baseline curves.

Axes are logit-scaled with tick labels in percent, so the fitted baseline
curve renders as a straight line.  The plot shows the pooled standard-model
cloud, the selected regime's intervention and reference points, the fitted
curve, its shifted significance variant, and a shaded band marking OOD
accuracies above the reference model (positive relative robustness).

The SVG is assembled from fixed-precision coordinates with no timestamps or
generated identifiers, so identical inputs produce byte-identical files.
Elements carry class attributes (``beta``, ``beta-shifted``,
``point-standard``, ``point-intervention``, ``point-reference``) to keep
the output machine-checkable.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .metrics import (
    AccuracyPoint,
    LogitLinearFit,
    SignificanceConfig,
    logit,
)
from .records import (
    AccuracyRecord,
    DatasetProfile,
    model_point,
    select,
)

__all__ = ["scatter_svg", "emit_scatter"]

_TICK_PERCENTS = (
    0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0,
    60.0, 70.0, 80.0, 90.0, 95.0, 98.0, 99.0, 99.5, 99.8, 99.9,
)

_CURVE_SAMPLES = 129


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(pct: float) -> str:
    return f"{pct:g}"


class _Axes:
    """Maps logit-space coordinates onto the pixel plot rectangle."""

    def __init__(
        self,
        x_range: tuple[float, float],
        y_range: tuple[float, float],
        width: int,
        height: int,
    ) -> None:
        self.margin_left = 64.0
        self.margin_right = 16.0
        self.margin_top = 16.0
        self.margin_bottom = 48.0
        self.width = width
        self.height = height
        self.x_lo, self.x_hi = x_range
        self.y_lo, self.y_hi = y_range

    @property
    def plot_left(self) -> float:
        return self.margin_left

    @property
    def plot_right(self) -> float:
        return self.width - self.margin_right

    @property
    def plot_top(self) -> float:
        return self.margin_top

    @property
    def plot_bottom(self) -> float:
        return self.height - self.margin_bottom

    def px(self, x_logit: float) -> float:
        frac = (x_logit - self.x_lo) / (self.x_hi - self.x_lo)
        return self.plot_left + frac * (self.plot_right - self.plot_left)

    def py(self, y_logit: float) -> float:
        frac = (y_logit - self.y_lo) / (self.y_hi - self.y_lo)
        return self.plot_bottom - frac * (self.plot_bottom - self.plot_top)


def _padded(values: Sequence[float], pad_frac: float = 0.06) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    span = hi - lo
    pad = pad_frac * span if span > 0.0 else 0.5
    return lo - pad, hi + pad


def scatter_svg(
    fit: LogitLinearFit,
    d: float,
    records: Sequence[AccuracyRecord],
    profile: DatasetProfile,
    regime: str = "full",
    cfg: SignificanceConfig | None = None,
    width: int = 900,
    height: int = 600,
) -> str:
    """Render the scatter plot as an SVG string.

    Standard-model points are pooled across regimes (they form the cloud
    the fit came from); intervention and reference points come from the
    selected ``regime`` only.  One reference model per plot.
    """
    cfg = cfg or SignificanceConfig()
    records = list(records)

    def points_for(role: str, only_regime: str | None) -> list[tuple[str, AccuracyPoint]]:
        out: list[tuple[str, AccuracyPoint]] = []
        seen: set[tuple[str, str]] = set()
        for rec in select(records, role=role):
            if only_regime is not None and rec.regime != only_regime:
                continue
            key = (rec.model, rec.regime)
            if key in seen:
                continue
            seen.add(key)
            out.append(
                (rec.model, model_point(records, rec.model, rec.regime, profile))
            )
        return out

    standard = points_for("standard", None)
    interventions = points_for("intervention", regime)
    reference = points_for("reference", regime)
    if len({name for name, _ in reference}) > 1:
        raise ValueError("one reference model per plot; records contain several")

    tf = fit.transform
    all_points = standard + interventions + reference
    xs = [logit(p.acc_id, tf) for _, p in all_points]
    ys = [logit(p.acc_ood, tf) for _, p in all_points]
    if not xs:
        raise ValueError("no accuracy points to plot")

    x_lo, x_hi = _padded(xs)
    shift = cfg.lam * d
    curve_ys = [fit.w * x + fit.b for x in (x_lo, x_hi)]
    curve_ys += [fit.w * x + fit.b + shift for x in (x_lo, x_hi)]
    y_lo, y_hi = _padded(ys + curve_ys)

    ax = _Axes((x_lo, x_hi), (y_lo, y_hi), width, height)

    out: list[str] = []
    out.append('<?xml version="1.0" encoding="UTF-8"?>')
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">'
    )
    out.append(f'<rect width="{width}" height="{height}" fill="#ffffff"/>')

    # band of positive relative robustness: OOD accuracy above the reference
    if reference:
        _, ref_point = reference[0]
        ref_y = ax.py(logit(ref_point.acc_ood, tf))
        band_top = ax.plot_top
        if ref_y > band_top:
            out.append(
                f'<rect class="tau-region" x="{_fmt(ax.plot_left)}" '
                f'y="{_fmt(band_top)}" '
                f'width="{_fmt(ax.plot_right - ax.plot_left)}" '
                f'height="{_fmt(max(0.0, ref_y - band_top))}" '
                f'fill="#dbeafe" fill-opacity="0.6"/>'
            )

    # grid and ticks
    for pct in _TICK_PERCENTS:
        t = logit(pct / 100.0, tf)
        if ax.x_lo <= t <= ax.x_hi:
            x = ax.px(t)
            out.append(
                f'<line x1="{_fmt(x)}" y1="{_fmt(ax.plot_top)}" '
                f'x2="{_fmt(x)}" y2="{_fmt(ax.plot_bottom)}" '
                f'stroke="#e5e5e5" stroke-width="1"/>'
            )
            out.append(
                f'<text x="{_fmt(x)}" y="{_fmt(ax.plot_bottom + 16)}" '
                f'font-family="sans-serif" font-size="11" fill="#444444" '
                f'text-anchor="middle">{_tick_label(pct)}</text>'
            )
        if ax.y_lo <= t <= ax.y_hi:
            y = ax.py(t)
            out.append(
                f'<line x1="{_fmt(ax.plot_left)}" y1="{_fmt(y)}" '
                f'x2="{_fmt(ax.plot_right)}" y2="{_fmt(y)}" '
                f'stroke="#e5e5e5" stroke-width="1"/>'
            )
            out.append(
                f'<text x="{_fmt(ax.plot_left - 6)}" y="{_fmt(y + 4)}" '
                f'font-family="sans-serif" font-size="11" fill="#444444" '
                f'text-anchor="end">{_tick_label(pct)}</text>'
            )

    # plot frame
    out.append(
        f'<rect x="{_fmt(ax.plot_left)}" y="{_fmt(ax.plot_top)}" '
        f'width="{_fmt(ax.plot_right - ax.plot_left)}" '
        f'height="{_fmt(ax.plot_bottom - ax.plot_top)}" '
        f'fill="none" stroke="#666666" stroke-width="1"/>'
    )

    def polyline(offset: float) -> str:
        pts = []
        for i in range(_CURVE_SAMPLES):
            t = x_lo + (x_hi - x_lo) * i / (_CURVE_SAMPLES - 1)
            y = fit.w * t + fit.b + offset
            pts.append(f"{_fmt(ax.px(t))},{_fmt(ax.py(y))}")
        return " ".join(pts)

    out.append(
        f'<polyline class="beta" points="{polyline(0.0)}" fill="none" '
        f'stroke="#222222" stroke-width="1.5"/>'
    )
    if shift > 0.0:
        out.append(
            f'<polyline class="beta-shifted" points="{polyline(shift)}" '
            f'fill="none" stroke="#d62728" stroke-width="1.5" '
            f'stroke-dasharray="6 4"/>'
        )

    def circles(
        named_points: list[tuple[str, AccuracyPoint]],
        cls: str,
        color: str,
        r: float,
    ) -> None:
        for name, p in named_points:
            cx = ax.px(logit(p.acc_id, tf))
            cy = ax.py(logit(p.acc_ood, tf))
            out.append(
                f'<circle class="{cls}" cx="{_fmt(cx)}" cy="{_fmt(cy)}" '
                f'r="{r:g}" fill="{color}" fill-opacity="0.85">'
                f"<title>{name}</title></circle>"
            )

    circles(standard, "point-standard", "#8a8a8a", 4.0)
    circles(reference, "point-reference", "#d62728", 5.0)
    circles(interventions, "point-intervention", "#1f77b4", 5.0)

    # legend
    legend = [
        ("#8a8a8a", "standard models (all regimes)"),
        ("#1f77b4", f"interventions ({regime})"),
        ("#d62728", f"reference ({regime})"),
        ("#222222", "baseline curve"),
    ]
    if shift > 0.0:
        legend.append(("#d62728", f"shifted curve (lambda={cfg.lam:g})"))
    ly = ax.plot_top + 16
    for color, label in legend:
        out.append(
            f'<circle cx="{_fmt(ax.plot_left + 12)}" cy="{_fmt(ly - 4)}" '
            f'r="4" fill="{color}"/>'
        )
        out.append(
            f'<text x="{_fmt(ax.plot_left + 22)}" y="{_fmt(ly)}" '
            f'font-family="sans-serif" font-size="11" '
            f'fill="#333333">{label}</text>'
        )
        ly += 16

    # axis titles
    out.append(
        f'<text x="{_fmt((ax.plot_left + ax.plot_right) / 2)}" '
        f'y="{_fmt(ax.plot_bottom + 36)}" font-family="sans-serif" '
        f'font-size="13" fill="#222222" text-anchor="middle">'
        f"ID accuracy (%, logit scale)</text>"
    )
    out.append(
        f'<text x="16" y="{_fmt((ax.plot_top + ax.plot_bottom) / 2)}" '
        f'font-family="sans-serif" font-size="13" fill="#222222" '
        f'text-anchor="middle" transform="rotate(-90 16 '
        f'{_fmt((ax.plot_top + ax.plot_bottom) / 2)})">'
        f"OOD accuracy (%, logit scale)</text>"
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_scatter(
    fit: LogitLinearFit,
    d: float,
    records: Sequence[AccuracyRecord],
    profile: DatasetProfile,
    out_path: str | Path,
    regime: str = "full",
    cfg: SignificanceConfig | None = None,
    width: int = 900,
    height: int = 600,
) -> Path:
    """Write the scatter SVG to ``out_path``; byte-deterministic per input."""
    svg = scatter_svg(
        fit, d, records, profile, regime=regime, cfg=cfg, width=width, height=height
    )
    out_path = Path(out_path)
    out_path.write_bytes(svg.encode("utf-8"))
    return out_path
