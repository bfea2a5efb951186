"""Minimal static SVG line plots: curves, shaded regions, axes and a legend.

Output is plain text built from fixed-precision numbers, so the same inputs
always give the same bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")

_W, _H = 640, 420
_LEFT, _RIGHT, _TOP, _BOTTOM = 64, 160, 36, 52


@dataclass
class Line:
    label: str
    x: Sequence[float]
    y: Sequence[float]
    dashed: bool = False
    color: str | None = None


@dataclass
class Region:
    label: str
    x: Sequence[float]
    lower: Sequence[float]
    upper: Sequence[float]
    color: str | None = None


@dataclass
class Plot:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    logx: bool = True
    lines: list[Line] = field(default_factory=list)
    regions: list[Region] = field(default_factory=list)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _tick_label(v: float) -> str:
    return f"{v:g}"


def render(plot: Plot) -> str:
    xs = [np.asarray(s.x, dtype=float) for s in plot.lines] + [np.asarray(r.x, dtype=float) for r in plot.regions]
    ys = [np.asarray(s.y, dtype=float) for s in plot.lines]
    ys += [np.asarray(r.lower, dtype=float) for r in plot.regions] + [np.asarray(r.upper, dtype=float) for r in plot.regions]
    xall = np.concatenate(xs) if xs else np.array([0.0, 1.0])
    yall = np.concatenate(ys) if ys else np.array([0.0, 1.0])
    if plot.logx:
        xall = xall[xall > 0]
    xall, yall = xall[np.isfinite(xall)], yall[np.isfinite(yall)]
    if plot.logx:
        lo, hi = math.floor(math.log10(xall.min())), math.ceil(math.log10(xall.max()))
        hi = max(hi, lo + 1)
        fx = lambda v: (math.log10(v) - lo) / (hi - lo)  # noqa: E731
        xticks = [10.0**e for e in range(lo, hi + 1)]
    else:
        lo, hi = float(xall.min()), float(xall.max())
        hi = hi if hi > lo else lo + 1.0
        fx = lambda v: (v - lo) / (hi - lo)  # noqa: E731
        xticks = _nice_ticks(lo, hi)
    ylo, yhi = min(0.0, float(yall.min())), float(yall.max())
    if yhi <= ylo:
        yhi = ylo + 1.0
    pad = 0.04 * (yhi - ylo)
    ylo, yhi = ylo - (pad if ylo < 0 else 0.0), yhi + pad
    fy = lambda v: (v - ylo) / (yhi - ylo)  # noqa: E731
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM

    def px(v: float) -> float:
        return _LEFT + fx(v) * pw

    def py(v: float) -> float:
        return _TOP + (1.0 - fy(v)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}" '
        'font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
    ]
    if plot.title:
        out.append(f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" font-size="13">{escape(plot.title)}</text>')
    x0, x1, y0, y1 = _LEFT, _LEFT + pw, _TOP + ph, _TOP
    out.append(f'<rect x="{x0}" y="{y1}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for t in xticks:
        x = px(t)
        out.append(f'<line x1="{_fmt(x)}" y1="{y0}" x2="{_fmt(x)}" y2="{y0 + 4}" stroke="black"/>')
        out.append(f'<text x="{_fmt(x)}" y="{y0 + 16}" text-anchor="middle">{_tick_label(t)}</text>')
    for t in _nice_ticks(ylo, yhi):
        y = py(t)
        out.append(f'<line x1="{x0 - 4}" y1="{_fmt(y)}" x2="{x0}" y2="{_fmt(y)}" stroke="black"/>')
        out.append(f'<text x="{x0 - 7}" y="{_fmt(y + 4)}" text-anchor="end">{_tick_label(t)}</text>')
    if plot.xlabel:
        out.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{_H - 12}" text-anchor="middle">{escape(plot.xlabel)}</text>')
    if plot.ylabel:
        cy = (y0 + y1) / 2
        out.append(
            f'<text x="16" y="{cy:.1f}" text-anchor="middle" transform="rotate(-90 16 {cy:.1f})">'
            f"{escape(plot.ylabel)}</text>"
        )

    legend: list[tuple[str, str, str]] = []
    for i, reg in enumerate(plot.regions):
        color = reg.color or PALETTE[i % len(PALETTE)]
        pts = [(px(a), py(b)) for a, b in zip(reg.x, reg.upper) if (a > 0 or not plot.logx)]
        pts += [(px(a), py(b)) for a, b in reversed(list(zip(reg.x, reg.lower))) if (a > 0 or not plot.logx)]
        path = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in pts)
        out.append(f'<polygon points="{path}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        legend.append((reg.label, color, "region"))
    for i, line in enumerate(plot.lines):
        color = line.color or PALETTE[i % len(PALETTE)]
        pts = [(px(a), py(b)) for a, b in zip(line.x, line.y) if (a > 0 or not plot.logx) and math.isfinite(b)]
        path = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in pts)
        dash = ' stroke-dasharray="5,4"' if line.dashed else ""
        out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>')
        legend.append((line.label, color, "dashed" if line.dashed else "line"))

    ly = _TOP + 8
    lx = x1 + 12
    for label, color, kind in legend:
        if not label:
            continue
        if kind == "region":
            out.append(f'<rect x="{lx}" y="{ly - 6}" width="18" height="10" fill="{color}" fill-opacity="0.2"/>')
        else:
            dash = ' stroke-dasharray="5,4"' if kind == "dashed" else ""
            out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" stroke="{color}" stroke-width="1.6"{dash}/>')
        out.append(f'<text x="{lx + 24}" y="{ly + 4}">{escape(label)}</text>')
        ly += 16
    out.append("</svg>")
    return "\n".join(out) + "\n"
