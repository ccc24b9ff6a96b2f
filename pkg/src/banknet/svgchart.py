"""Self-contained SVG line charts, written without any GUI toolkit."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PALETTE = ["#1b1b1b", "#c0392b", "#2980b9", "#27ae60", "#8e44ad",
           "#d35400", "#16a085", "#7f8c8d", "#f39c12", "#2c3e50"]

_STYLES = ("line", "multi-line")


@dataclass(frozen=True)
class Series:
    name: str
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.size == 0 or x.shape != y.shape:
            raise ValueError(f"series {self.name!r} needs matching non-empty x/y")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min(s for s in (mag, 2 * mag, 2.5 * mag, 5 * mag, 10 * mag) if s >= raw)
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + 1e-12 * step:
        out.append(v)
        v += step
    return out or [lo]


def emit_plot(series: list[Series], path, style: str = "line", *,
              title: str = "", x_label: str = "", y_label: str = "",
              width: int = 720, height: int = 480, y_log: bool = False) -> None:
    """Render the series as one SVG file with one polyline per series.

    ``multi-line`` draws a legend entry per series.  Rendering is
    presentation-only; the file is valid standalone SVG 1.1.
    """
    if style not in _STYLES:
        raise ValueError(f"style must be one of {_STYLES}")
    if not series:
        raise ValueError("emit_plot needs at least one series")
    if y_log and any(s.y.min() <= 0 for s in series):
        raise ValueError("log-scale plots need strictly positive values")

    def ty(v):
        return math.log10(v) if y_log else v

    x_lo = min(s.x.min() for s in series)
    x_hi = max(s.x.max() for s in series)
    y_lo = min(ty(s.y.min()) for s in series)
    y_hi = max(ty(s.y.max()) for s in series)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad_y = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad_y, y_hi + pad_y

    left, right, top, bottom = 62, 16, 34, 42
    pw, ph = width - left - right, height - top - bottom

    def px(x):
        return left + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return top + ph - (ty(y) - y_lo) / (y_hi - y_lo) * ph

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    if title:
        parts.append(f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="14">{title}</text>')

    # axes with ticks
    parts.append(f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" '
                 f'stroke="#444444" stroke-width="1"/>')
    parts.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" '
                 f'stroke="#444444" stroke-width="1"/>')
    for v in _ticks(x_lo, x_hi):
        x = px(v)
        parts.append(f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" '
                     f'y2="{top + ph + 4}" stroke="#444444" stroke-width="1"/>')
        parts.append(f'<text x="{x:.2f}" y="{top + ph + 16}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="10">{v:.6g}</text>')
    for v in _ticks(y_lo, y_hi):
        y = top + ph - (v - y_lo) / (y_hi - y_lo) * ph
        label = 10.0 ** v if y_log else v
        parts.append(f'<line x1="{left - 4}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" '
                     f'stroke="#444444" stroke-width="1"/>')
        parts.append(f'<text x="{left - 7}" y="{y + 3:.2f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="10">{label:.4g}</text>')
    if x_label:
        parts.append(f'<text x="{left + pw / 2:.1f}" y="{height - 8}" '
                     f'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="11">{x_label}</text>')
    if y_label:
        parts.append(f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11" '
                     f'transform="rotate(-90 14 {top + ph / 2:.1f})">{y_label}</text>')

    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(s.x, s.y))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.4"/>')

    if style == "multi-line" or len(series) > 1:
        lx = left + pw - 150
        for i, s in enumerate(series):
            color = PALETTE[i % len(PALETTE)]
            ly = top + 12 + 14 * i
            parts.append(f'<line x1="{lx}" y1="{ly - 3}" x2="{lx + 18}" y2="{ly - 3}" '
                         f'stroke="{color}" stroke-width="1.4"/>')
            parts.append(f'<text x="{lx + 24}" y="{ly}" font-family="sans-serif" '
                         f'font-size="10" class="legend">{s.name}</text>')

    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
