"""Minimal static SVG plots of a trace: gaps, velocities and accelerations.

Written by hand so the output is byte-for-byte deterministic and needs no
plotting backend.  One polyline per follower, coloured along a fixed ramp
from the first to the last vehicle.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Optional, Sequence, Union
from xml.sax.saxutils import escape

import numpy as np

from .simulator import SimulationTrace

KINDS = ("distances", "velocities", "accelerations")

WIDTH, HEIGHT = 800, 480
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 30, 50


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw = (hi - lo) / target
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    k = 0
    while first + k * step <= hi + 1e-9 * step:
        ticks.append(first + k * step)
        k += 1
    return ticks


def _colour(k: int, n: int) -> str:
    # blue -> red ramp over the platoon
    s = 0.0 if n <= 1 else k / (n - 1)
    r, g, b = int(30 + 200 * s), int(90 - 50 * s), int(200 - 170 * s)
    return f"#{r:02x}{g:02x}{b:02x}"


def _fmt_tick(x: float) -> str:
    s = f"{x:.6g}"
    return "0" if s in ("-0", "0") else s


def svg_plot(
    t: np.ndarray,
    series: np.ndarray,
    *,
    title: str,
    ylabel: str,
    hlines: Sequence[tuple[float, str]] = (),
) -> str:
    """SVG document with one polyline per column of ``series`` against ``t``."""
    t = np.asarray(t, dtype=float)
    series = np.asarray(series, dtype=float).reshape(len(t), -1)
    ys = [series.min(initial=np.inf), series.max(initial=-np.inf)] + [h for h, _ in hlines]
    ylo, yhi = min(ys), max(ys)
    pad = 0.05 * (yhi - ylo) if yhi > ylo else max(1.0, abs(ylo) * 0.1)
    ylo, yhi = ylo - pad, yhi + pad
    tlo, thi = float(t[0]), float(t[-1])
    if thi <= tlo:
        thi = tlo + 1.0
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(tt):
        return LEFT + (np.asarray(tt) - tlo) / (thi - tlo) * pw

    def py(yy):
        return TOP + (yhi - np.asarray(yy)) / (yhi - ylo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for tick in _nice_ticks(tlo, thi):
        x = float(px(tick))
        out.append(f'<line x1="{x:.2f}" y1="{TOP + ph}" x2="{x:.2f}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{TOP + ph + 18}" text-anchor="middle">{_fmt_tick(tick)}</text>')
    for tick in _nice_ticks(ylo, yhi):
        y = float(py(tick))
        out.append(f'<line x1="{LEFT - 5}" y1="{y:.2f}" x2="{LEFT}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<line x1="{LEFT}" y1="{y:.2f}" x2="{LEFT + pw}" y2="{y:.2f}" stroke="#e6e6e6"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y + 4:.2f}" text-anchor="end">{_fmt_tick(tick)}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle">time t [s]</text>')
    out.append(
        f'<text x="16" y="{TOP + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {TOP + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    for value, label in hlines:
        y = float(py(value))
        out.append(
            f'<line class="reference" x1="{LEFT}" y1="{y:.2f}" x2="{LEFT + pw}" y2="{y:.2f}" '
            f'stroke="black" stroke-dasharray="6,4"/>'
        )
        out.append(f'<text x="{LEFT + pw - 4}" y="{y - 4:.2f}" text-anchor="end">{escape(label)}</text>')

    n = series.shape[1]
    X = px(t)
    for k in range(n):
        Y = py(series[:, k])
        colour = _colour(k, n)
        if len(t) == 1:
            out.append(f'<circle class="series" cx="{X[0]:.2f}" cy="{Y[0]:.2f}" r="3" fill="{colour}"/>')
        else:
            pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(X, Y))
            out.append(f'<polyline class="series" fill="none" stroke="{colour}" stroke-width="1" points="{pts}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_trace(
    trace: SimulationTrace,
    kind: str,
    path: Union[str, Path],
    *,
    d_min: Optional[float] = None,
    d_max: Optional[float] = None,
) -> Path:
    """Write one SVG of ``kind`` (distances, velocities or accelerations) to ``path``."""
    if len(trace.t) == 0:
        raise ValueError("cannot plot an empty trace")
    if kind == "distances":
        hl = []
        if d_min is not None:
            hl.append((d_min, f"d_min = {d_min:g} m"))
        if d_max is not None:
            hl.append((d_max, f"d_max = {d_max:g} m"))
        doc = svg_plot(trace.t, trace.gap, title="Inter-vehicle distances", ylabel="gap x_(i-1) - x_i [m]", hlines=hl)
    elif kind == "velocities":
        doc = svg_plot(trace.t, trace.v, title="Velocities", ylabel="velocity v_i [m/s]")
    elif kind == "accelerations":
        doc = svg_plot(trace.t, trace.a, title="Accelerations", ylabel="acceleration a_i [m/s^2]")
    else:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {KINDS}")
    path = Path(path)
    path.write_text(doc)
    return path
