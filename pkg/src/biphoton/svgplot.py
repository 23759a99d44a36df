"""Minimal dependency-free SVG writers for heatmaps, curves and bar charts."""
from __future__ import annotations

import datetime
import math
from html import escape

import numpy as np

# viridis anchor colours, evenly spaced on [0, 1]
_VIRIDIS = np.array([
    (68, 1, 84), (72, 40, 120), (62, 74, 137), (49, 104, 142), (38, 130, 142),
    (31, 158, 137), (53, 183, 121), (110, 206, 88), (181, 222, 43), (253, 231, 37),
], dtype=float)
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")

W, H = 480, 400
LEFT, RIGHT, TOP, BOTTOM = 70, 90, 40, 60


def _colour(v: float) -> str:
    x = min(max(v, 0.0), 1.0) * (len(_VIRIDIS) - 1)
    i = min(int(x), len(_VIRIDIS) - 2)
    c = _VIRIDIS[i] + (x - i) * (_VIRIDIS[i + 1] - _VIRIDIS[i])
    return "#%02x%02x%02x" % tuple(int(round(t)) for t in c)


def _fmt(v: float) -> str:
    return f"{v:.4g}"


class _Canvas:
    def __init__(self, title, xlabel, ylabel, timestamp):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
        ]
        if timestamp:
            stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
            self.parts.append(f"<!-- generated {stamp} -->")
        self.parts.append(f'<rect width="{W}" height="{H}" fill="white"/>')
        self.parts.append(f'<text x="{W / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
        self.parts.append(f'<text x="{LEFT + (W - LEFT - RIGHT) / 2}" y="{H - 15}" '
                          f'text-anchor="middle">{escape(xlabel)}</text>')
        cy = TOP + (H - TOP - BOTTOM) / 2
        self.parts.append(f'<text x="18" y="{cy}" text-anchor="middle" '
                          f'transform="rotate(-90 18 {cy})">{escape(ylabel)}</text>')

    def frame(self, xlim, ylim, ylog=False, draw=True):
        self.xlim, self.ylim, self.ylog = xlim, ylim, ylog
        if draw:
            self.axes()

    def axes(self):
        xlim, ylim, ylog = self.xlim, self.ylim, self.ylog
        pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM
        self.parts.append(f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
        for t in np.linspace(*xlim, 5):
            x = self.px(t)
            self.parts.append(f'<line x1="{x:.2f}" y1="{TOP + ph}" x2="{x:.2f}" y2="{TOP + ph + 5}" stroke="black"/>')
            self.parts.append(f'<text x="{x:.2f}" y="{TOP + ph + 18}" text-anchor="middle">{_fmt(t)}</text>')
        yt = np.linspace(*ylim, 5)
        for t in yt:
            y = self.py(10 ** t if ylog else t)
            label = _fmt(10 ** t) if ylog else _fmt(t)
            self.parts.append(f'<line x1="{LEFT - 5}" y1="{y:.2f}" x2="{LEFT}" y2="{y:.2f}" stroke="black"/>')
            self.parts.append(f'<text x="{LEFT - 8}" y="{y + 4:.2f}" text-anchor="end">{label}</text>')

    def px(self, x):
        lo, hi = self.xlim
        return LEFT + (x - lo) / (hi - lo) * (W - LEFT - RIGHT)

    def py(self, y):
        lo, hi = self.ylim
        if self.ylog:
            y = math.log10(y)
        return TOP + (hi - y) / (hi - lo) * (H - TOP - BOTTOM)

    def write(self, path):
        self.parts.append("</svg>\n")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(self.parts))


def _pad(lo, hi):
    if hi == lo:
        return lo - 0.5, hi + 0.5
    d = 0.05 * (hi - lo)
    return lo - d, hi + d


def heatmap(path, x, y, z, *, title="", xlabel="", ylabel="", max_cells=128, timestamp=False):
    """z[j, k] drawn at (x[k], y[j]) with a linear colour scale on [0, max z]."""
    z = np.asarray(z, dtype=float)
    step = max(1, int(math.ceil(max(z.shape) / max_cells)))
    ny, nx = (z.shape[0] // step) * step, (z.shape[1] // step) * step
    zc = z[:ny, :nx].reshape(ny // step, step, nx // step, step).mean(axis=(1, 3))
    xc = np.asarray(x, dtype=float)[:nx].reshape(-1, step).mean(axis=1)
    yc = np.asarray(y, dtype=float)[:ny].reshape(-1, step).mean(axis=1)
    zmax = zc.max() if zc.max() > 0 else 1.0
    cv = _Canvas(title, xlabel, ylabel, timestamp)
    cv.frame((float(xc[0]), float(xc[-1])), (float(yc[0]), float(yc[-1])), draw=False)
    cw = (W - LEFT - RIGHT) / zc.shape[1]
    ch = (H - TOP - BOTTOM) / zc.shape[0]
    cells = []
    for j in range(zc.shape[0]):
        top = TOP + (zc.shape[0] - 1 - j) * ch
        for k in range(zc.shape[1]):
            cells.append(f'<rect x="{LEFT + k * cw:.2f}" y="{top:.2f}" width="{cw + 0.05:.2f}" '
                         f'height="{ch + 0.05:.2f}" fill="{_colour(zc[j, k] / zmax)}"/>')
    cv.parts.append("\n".join(cells))
    cv.axes()
    bx = W - RIGHT + 20
    for i in range(50):
        yy = TOP + (49 - i) * (H - TOP - BOTTOM) / 50
        cv.parts.append(f'<rect x="{bx}" y="{yy:.2f}" width="15" height="{(H - TOP - BOTTOM) / 50 + 0.05:.2f}" '
                        f'fill="{_colour(i / 49)}"/>')
    cv.parts.append(f'<text x="{bx + 20}" y="{TOP + 10}">1</text>')
    cv.parts.append(f'<text x="{bx + 20}" y="{H - BOTTOM}">0</text>')
    cv.write(path)


def curves(path, series, *, title="", xlabel="", ylabel="", timestamp=False):
    """``series``: list of dicts with keys x, y, optional yerr and label."""
    xs = np.concatenate([np.asarray(s["x"], float) for s in series])
    lows, highs = [], []
    for s in series:
        y = np.asarray(s["y"], float)
        e = np.nan_to_num(np.asarray(s.get("yerr", np.zeros_like(y)), float))
        ok = np.isfinite(y)
        lows.append((y - e)[ok])
        highs.append((y + e)[ok])
    lo = np.concatenate(lows)
    hi = np.concatenate(highs)
    ylim = _pad(float(lo.min()), float(hi.max())) if lo.size else (0.0, 1.0)
    cv = _Canvas(title, xlabel, ylabel, timestamp)
    cv.frame(_pad(float(xs.min()), float(xs.max())), ylim)
    for n, s in enumerate(series):
        colour = _PALETTE[n % len(_PALETTE)]
        x = np.asarray(s["x"], float)
        y = np.asarray(s["y"], float)
        ok = np.isfinite(y)
        pts = " ".join(f"{cv.px(a):.2f},{cv.py(b):.2f}" for a, b in zip(x[ok], y[ok]))
        dash = ' stroke-dasharray="4 3"' if s.get("dashed") else ""
        cv.parts.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="1.5"{dash}/>')
        if s.get("markers", True) and x.size <= 64:
            for a, b in zip(x[ok], y[ok]):
                cv.parts.append(f'<circle cx="{cv.px(a):.2f}" cy="{cv.py(b):.2f}" r="3" fill="{colour}"/>')
        if "yerr" in s:
            for a, b, e in zip(x, y, s["yerr"]):
                if np.isfinite(b) and e is not None and np.isfinite(e) and e > 0:
                    cv.parts.append(f'<line x1="{cv.px(a):.2f}" y1="{cv.py(b - e):.2f}" x2="{cv.px(a):.2f}" '
                                    f'y2="{cv.py(b + e):.2f}" stroke="{colour}"/>')
        if s.get("label"):
            ly = TOP + 15 + 15 * n
            cv.parts.append(f'<text x="{W - RIGHT + 8}" y="{ly}" fill="{colour}">{escape(s["label"])}</text>')
    cv.write(path)


def bars(path, values, *, title="", xlabel="", ylabel="", log=True, timestamp=False):
    v = np.asarray(values, dtype=float)
    cv = _Canvas(title, xlabel, ylabel, timestamp)
    if log:
        pos = v[v > 0]
        lo = math.floor(math.log10(pos.min())) if pos.size else -1
        cv.frame((0.5, v.size + 0.5), (lo, 0.0), ylog=True)
        base = cv.py(10 ** lo)
    else:
        cv.frame((0.5, v.size + 0.5), (0.0, max(1.0, float(v.max()))))
        base = cv.py(0.0)
    bw = 0.7 * (W - LEFT - RIGHT) / v.size
    for n, val in enumerate(v, start=1):
        if log and val <= 0:
            continue
        top = cv.py(val)
        cv.parts.append(f'<rect x="{cv.px(n) - bw / 2:.2f}" y="{top:.2f}" width="{bw:.2f}" '
                        f'height="{max(base - top, 0):.2f}" fill="{_PALETTE[0]}"/>')
    cv.write(path)
