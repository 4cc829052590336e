"""Minimal deterministic SVG charts (same input, same bytes)."""
from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 720, 440
MARGIN = {"left": 70, "right": 80, "top": 40, "bottom": 55}
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
DASHES = {"solid": None, "dots": "1.5,4", "dashed": "8,5", "dashdot": "8,4,2,4"}


def _f(x: float) -> str:
    return f"{x:.2f}"


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    style: str = "solid"
    color: str | None = None
    axis: str = "left"


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    return [float(v) for v in np.arange(start, hi + step * 1e-9, step)]


def _range(values, pad=0.05):
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi == lo:
        return lo - 0.5, hi + 0.5
    span = hi - lo
    return lo - pad * span, hi + pad * span


class Canvas:
    def __init__(self, title: str, xlabel: str, ylabel: str, y2label: str | None = None):
        self.parts: list[str] = []
        self.title, self.xlabel, self.ylabel, self.y2label = title, xlabel, ylabel, y2label
        self.x0, self.x1 = MARGIN["left"], WIDTH - MARGIN["right"]
        self.y0, self.y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]

    def _sx(self, x, xr):
        return self.x0 + (x - xr[0]) / (xr[1] - xr[0]) * (self.x1 - self.x0)

    def _sy(self, y, yr):
        return self.y0 - (y - yr[0]) / (yr[1] - yr[0]) * (self.y0 - self.y1)

    def axes(self, xr, yr, y2r=None):
        p = self.parts
        p.append(f'<rect x="{self.x0}" y="{self.y1}" width="{self.x1 - self.x0}" '
                 f'height="{self.y0 - self.y1}" fill="none" stroke="#333"/>')
        for t in _nice_ticks(*xr):
            x = self._sx(t, xr)
            p.append(f'<line x1="{_f(x)}" y1="{self.y0}" x2="{_f(x)}" y2="{self.y0 + 5}" stroke="#333"/>')
            p.append(f'<text x="{_f(x)}" y="{self.y0 + 18}" text-anchor="middle" font-size="11">{t:g}</text>')
        for t in _nice_ticks(*yr):
            y = self._sy(t, yr)
            p.append(f'<line x1="{self.x0 - 5}" y1="{_f(y)}" x2="{self.x0}" y2="{_f(y)}" stroke="#333"/>')
            p.append(f'<text x="{self.x0 - 8}" y="{_f(y + 4)}" text-anchor="end" font-size="11">{t:g}</text>')
        if y2r is not None:
            for t in _nice_ticks(*y2r):
                y = self._sy(t, y2r)
                p.append(f'<line x1="{self.x1}" y1="{_f(y)}" x2="{self.x1 + 5}" y2="{_f(y)}" stroke="#333"/>')
                p.append(f'<text x="{self.x1 + 8}" y="{_f(y + 4)}" font-size="11">{t:g}</text>')
        cx = (self.x0 + self.x1) / 2
        cy = (self.y0 + self.y1) / 2
        p.append(f'<text x="{_f(cx)}" y="22" text-anchor="middle" font-size="14">{escape(self.title)}</text>')
        p.append(f'<text x="{_f(cx)}" y="{HEIGHT - 12}" text-anchor="middle" font-size="12">{escape(self.xlabel)}</text>')
        p.append(f'<text x="16" y="{_f(cy)}" text-anchor="middle" font-size="12" '
                 f'transform="rotate(-90 16 {_f(cy)})">{escape(self.ylabel)}</text>')
        if self.y2label:
            xx = WIDTH - 18
            p.append(f'<text x="{xx}" y="{_f(cy)}" text-anchor="middle" font-size="12" '
                     f'transform="rotate(90 {xx} {_f(cy)})">{escape(self.y2label)}</text>')

    def polyline(self, s: Series, xr, yr, color):
        pts = " ".join(f"{_f(self._sx(x, xr))},{_f(self._sy(y, yr))}" for x, y in zip(s.x, s.y))
        dash = DASHES[s.style]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        cap = ' stroke-linecap="round"' if s.style == "dots" else ""
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                          f'stroke-width="1.6"{dash_attr}{cap}/>')

    def legend(self, entries):
        for k, (label, color, style) in enumerate(entries):
            y = self.y1 + 14 + 16 * k
            dash = DASHES[style]
            dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
            self.parts.append(f'<line x1="{self.x0 + 10}" y1="{y}" x2="{self.x0 + 38}" y2="{y}" '
                              f'stroke="{color}" stroke-width="1.6"{dash_attr}/>')
            self.parts.append(f'<text x="{self.x0 + 44}" y="{y + 4}" font-size="11">{escape(label)}</text>')

    def render(self) -> str:
        body = "\n".join(self.parts)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
                f'viewBox="0 0 {WIDTH} {HEIGHT}">\n<rect width="100%" height="100%" fill="white"/>\n'
                f"{body}\n</svg>\n")


def line_chart(series: list[Series], title: str, xlabel: str, ylabel: str,
               y2label: str | None = None, yrange=None) -> str:
    left = [s for s in series if s.axis == "left"]
    right = [s for s in series if s.axis == "right"]
    xr = _range(np.concatenate([s.x for s in series]), pad=0.0)
    yr = yrange or _range(np.concatenate([s.y for s in left]))
    y2r = _range(np.concatenate([s.y for s in right])) if right else None
    canvas = Canvas(title, xlabel, ylabel, y2label if right else None)
    canvas.axes(xr, yr, y2r)
    entries = []
    for k, s in enumerate(series):
        color = s.color or PALETTE[k % len(PALETTE)]
        canvas.polyline(s, xr, yr if s.axis == "left" else y2r, color)
        entries.append((s.label, color, s.style))
    canvas.legend(entries)
    return canvas.render()


def labeled_scatter(points, labels, title: str, xlabel: str, ylabel: str) -> str:
    pts = np.asarray(points, dtype=np.float64)
    xr, yr = _range(pts[:, 0], 0.1), _range(pts[:, 1], 0.1)
    canvas = Canvas(title, xlabel, ylabel)
    canvas.axes(xr, yr)
    for (x, y), label in zip(pts, labels):
        sx, sy = canvas._sx(x, xr), canvas._sy(y, yr)
        canvas.parts.append(f'<circle cx="{_f(sx)}" cy="{_f(sy)}" r="3.5" fill="{PALETTE[0]}"/>')
        canvas.parts.append(f'<text x="{_f(sx + 5)}" y="{_f(sy - 5)}" font-size="10">{escape(str(label))}</text>')
    return canvas.render()


def bar_chart(values, title: str, xlabel: str, ylabel: str) -> str:
    v = np.asarray(values, dtype=np.float64)
    xr = (-0.5, len(v) - 0.5)
    yr = (0.0, float(v.max()) * 1.05 if v.max() > 0 else 1.0)
    canvas = Canvas(title, xlabel, ylabel)
    canvas.axes(xr, yr)
    width = (canvas.x1 - canvas.x0) / len(v) * 0.7
    for k, val in enumerate(v):
        x = canvas._sx(k, xr) - width / 2
        y = canvas._sy(val, yr)
        canvas.parts.append(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(width)}" '
                            f'height="{_f(canvas.y0 - y)}" fill="{PALETTE[0]}"/>')
    return canvas.render()


def accuracy_curves(trace) -> str:
    ep = trace.epochs.astype(float)
    return line_chart(
        [Series("train accuracy", ep, trace.column("train_acc"), "dots", PALETTE[1]),
         Series("test accuracy", ep, trace.column("test_acc"), "solid", PALETTE[0])],
        "Training and test accuracy", "epoch", "accuracy", yrange=(0.0, 1.02))


def entropy_curves(trace) -> str:
    """Layer entropies (right axis) over train (dots) and test (solid) accuracy."""
    ep = trace.epochs.astype(float)
    styles = ["dashdot", "dashed", "solid"]
    series = [Series("train accuracy", ep, trace.column("train_acc"), "dots", PALETTE[1]),
              Series("test accuracy", ep, trace.column("test_acc"), "solid", PALETTE[0])]
    for k in range(trace.n_layers):
        series.append(Series(f"entropy layer {k + 1}", ep, trace.entropy(k),
                             styles[k % len(styles)], PALETTE[2 + k], axis="right"))
    return line_chart(series, "Layer entropy and accuracy", "epoch", "accuracy",
                      y2label="entropy (nats)", yrange=(0.0, 1.02))
