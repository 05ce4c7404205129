"""CSV and SVG serialization of trajectories.

Both writers are pure text generation with fixed formatting, so the same
trajectory always produces the same bytes.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .sim import Trajectory

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def coordinate_labels(prefix: str, action_dims: Sequence[int]) -> list[str]:
    return [f"{prefix}_{i + 1}_{c + 1}" for i, d in enumerate(action_dims) for c in range(d)]


def _fmt(value: float) -> str:
    # repr is the shortest decimal string that parses back to the same double
    return repr(float(value))


def emit_csv(traj: Trajectory, path, action_dims: Sequence[int], include_controls: bool = True) -> Path:
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    path = Path(path)
    header = ["t"] + coordinate_labels("x", action_dims) + coordinate_labels("v", action_dims)
    blocks = [traj.times[:, None], traj.positions, traj.velocities]
    if include_controls and traj.controls is not None:
        header += coordinate_labels("u", action_dims)
        blocks.append(traj.controls)
    table = np.hstack(blocks)
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in table)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    """Round tick values (1, 2 or 5 times a power of ten) covering [lo, hi]."""
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / max(target - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(s * mag for s in (1, 2, 5, 10) if s * mag >= raw)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else round(t, 12))
        t += step
    return ticks


def _tick_label(value: float) -> str:
    return f"{value:.6g}"


def emit_svg_plot(
    traj: Trajectory,
    which: str,
    path,
    action_dims: Sequence[int],
    title: str | None = None,
    width: int = 820,
    height: int = 480,
) -> Path:
    """Line plot of positions or velocities against time, one polyline per coordinate."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    if which == "positions":
        data, prefix = traj.positions, "x"
    elif which == "velocities":
        data, prefix = traj.velocities, "v"
    else:
        raise ValueError("which must be 'positions' or 'velocities'")
    path = Path(path)
    labels = coordinate_labels(prefix, action_dims)

    left, right, top, bottom = 70, 130, 40, 50
    pw, ph = width - left - right, height - top - bottom
    t0, t1 = float(traj.times[0]), float(traj.times[-1])
    if t1 <= t0:
        t1 = t0 + 1.0
    lo, hi = float(np.min(data)), float(np.max(data))
    if hi - lo < 1e-12:
        pad = max(abs(hi), 1.0) * 0.5
        lo, hi = lo - pad, hi + pad
    else:
        pad = 0.05 * (hi - lo)
        lo, hi = lo - pad, hi + pad

    def sx(t):
        return left + (t - t0) / (t1 - t0) * pw

    def sy(y):
        return top + (hi - y) / (hi - lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{left + pw / 2:.2f}" y="22" text-anchor="middle" font-size="14">'
                   f"{escape(title)}</text>")
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')

    for t in nice_ticks(t0, t1):
        X = sx(t)
        out.append(f'<line x1="{X:.2f}" y1="{top + ph}" x2="{X:.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{top + ph + 18}" text-anchor="middle">{_tick_label(t)}</text>')
    for y in nice_ticks(lo, hi):
        Y = sy(y)
        out.append(f'<line x1="{left - 5}" y1="{Y:.2f}" x2="{left}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<line x1="{left}" y1="{Y:.2f}" x2="{left + pw}" y2="{Y:.2f}" '
                   f'stroke="#dddddd" stroke-width="0.5"/>')
        out.append(f'<text x="{left - 8}" y="{Y + 4:.2f}" text-anchor="end">{_tick_label(y)}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 10}" text-anchor="middle">time</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.2f})">{which}</text>')

    for col, label in enumerate(labels):
        color = PALETTE[col % len(PALETTE)]
        pts = " ".join(f"{sx(t):.2f},{sy(y):.2f}" for t, y in zip(traj.times, data[:, col]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" '
                   f'data-label="{label}" points="{pts}"/>')
        ly = top + 10 + 16 * col
        lx = left + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">{label}</text>')
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return path
