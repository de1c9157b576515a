"""Minimal self-contained SVG charts for sweep results.

No external renderer or plotting dependency: charts are assembled as SVG
text with a plain affine data-to-pixel mapping, which also makes the output
coordinates directly checkable in tests.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

WIDTH = 640.0
HEIGHT = 480.0
MARGIN_L = 70.0
MARGIN_R = 20.0
MARGIN_T = 40.0
MARGIN_B = 50.0

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


@dataclass
class Series:
    """One plotted series; ``mode`` is ``line``, ``scatter`` or both."""

    x: np.ndarray
    y: np.ndarray
    label: str = ""
    mode: str = "line"

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if len(self.x) != len(self.y) or len(self.x) == 0:
            raise ConfigurationError("series must be non-empty and aligned")
        if self.mode not in ("line", "scatter", "both"):
            raise ConfigurationError(f"unknown series mode {self.mode!r}")


def affine_map(v, lo: float, hi: float, px0: float, px1: float):
    """Linear data-to-pixel mapping used for every plotted coordinate."""
    v = np.asarray(v, dtype=float)
    if hi == lo:
        return np.full_like(v, 0.5 * (px0 + px1))
    return px0 + (v - lo) * (px1 - px0) / (hi - lo)


def _limits(values) -> tuple:
    lo = float(np.min(values))
    hi = float(np.max(values))
    if lo == hi:
        pad = 1.0 if lo == 0 else abs(lo) * 0.1
        return lo - pad, hi + pad
    pad = (hi - lo) * 0.05
    return lo - pad, hi + pad


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def render_chart(series_list, title: str, xlabel: str, ylabel: str) -> str:
    """Assemble a complete SVG document for the given series."""
    if not series_list:
        raise ConfigurationError("nothing to plot")
    x_lo, x_hi = _limits(np.concatenate([s.x for s in series_list]))
    y_lo, y_hi = _limits(np.concatenate([s.y for s in series_list]))
    px0, px1 = MARGIN_L, WIDTH - MARGIN_R
    py0, py1 = HEIGHT - MARGIN_B, MARGIN_T

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0f}" '
        f'height="{HEIGHT:.0f}" viewBox="0 0 {WIDTH:.0f} {HEIGHT:.0f}">',
        f'<rect width="{WIDTH:.0f}" height="{HEIGHT:.0f}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]
    # axes
    out.append(
        f'<path d="M {px0:.1f} {py1:.1f} L {px0:.1f} {py0:.1f} '
        f'L {px1:.1f} {py0:.1f}" fill="none" stroke="black"/>'
    )
    for i in range(5):
        xv = x_lo + (x_hi - x_lo) * i / 4
        yv = y_lo + (y_hi - y_lo) * i / 4
        xp = float(affine_map(xv, x_lo, x_hi, px0, px1))
        yp = float(affine_map(yv, y_lo, y_hi, py0, py1))
        out.append(
            f'<line x1="{xp:.1f}" y1="{py0:.1f}" x2="{xp:.1f}" '
            f'y2="{py0 + 5:.1f}" stroke="black"/>'
        )
        out.append(
            f'<text x="{xp:.1f}" y="{py0 + 18:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt(xv)}</text>'
        )
        out.append(
            f'<line x1="{px0 - 5:.1f}" y1="{yp:.1f}" x2="{px0:.1f}" '
            f'y2="{yp:.1f}" stroke="black"/>'
        )
        out.append(
            f'<text x="{px0 - 8:.1f}" y="{yp + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt(yv)}</text>'
        )
    out.append(
        f'<text x="{(px0 + px1) / 2:.1f}" y="{HEIGHT - 10:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{xlabel}</text>'
    )
    out.append(
        f'<text x="18" y="{(py0 + py1) / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 18 {(py0 + py1) / 2:.1f})">{ylabel}</text>'
    )
    for idx, s in enumerate(series_list):
        color = PALETTE[idx % len(PALETTE)]
        xp = affine_map(s.x, x_lo, x_hi, px0, px1)
        yp = affine_map(s.y, y_lo, y_hi, py0, py1)
        if s.mode in ("line", "both") and len(s.x) > 1:
            pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(xp, yp))
            out.append(
                f'<polyline points="{pts}" fill="none" stroke="{color}" '
                f'stroke-width="1.5"/>'
            )
        if s.mode in ("scatter", "both") or len(s.x) == 1:
            for a, b in zip(xp, yp):
                out.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="3" fill="{color}"/>')
        if s.label:
            ly = MARGIN_T + 16 * idx
            out.append(
                f'<rect x="{px1 - 130:.1f}" y="{ly - 9:.1f}" width="10" height="10" '
                f'fill="{color}"/>'
            )
            out.append(
                f'<text x="{px1 - 115:.1f}" y="{ly:.1f}" font-family="sans-serif" '
                f'font-size="11">{s.label}</text>'
            )
    out.append("</svg>")
    return "\n".join(out)


def write_chart(path: str, series_list, title: str, xlabel: str, ylabel: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(render_chart(series_list, title, xlabel, ylabel))
