"""Minimal static SVG line charts.

Charts are emitted directly as SVG markup (built with the standard-library
XML tree, so output is always well-formed) instead of going through a
plotting package: the CSV next to each figure is the authoritative
artifact and the figure only needs to be a faithful sketch of it.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET

import numpy as np

WIDTH = 720
HEIGHT = 460
MARGIN_LEFT = 72
MARGIN_RIGHT = 24
MARGIN_TOP = 40
MARGIN_BOTTOM = 56

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")


def _nice_ticks(lo: float, hi: float, target: int = 6):
    """Round tick positions covering [lo, hi]."""
    if not math.isfinite(lo) or not math.isfinite(hi):
        return [0.0]
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 12))
        v += step
    return ticks or [lo]


def _fmt(value: float) -> str:
    if value == int(value) and abs(value) < 1e7:
        return str(int(value))
    return f"{value:g}"


class LineChart:
    """A single-axes chart assembled series by series, then written once."""

    def __init__(self, title: str, x_label: str, y_label: str):
        self.title = title
        self.x_label = x_label
        self.y_label = y_label
        self.series = []

    def add(self, label: str, x, y, color: str | None = None):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("series x and y must be equal-length 1-D arrays")
        if color is None:
            color = PALETTE[len(self.series) % len(PALETTE)]
        self.series.append((label, x, y, color))
        return self

    def _limits(self):
        xs = np.concatenate([s[1] for s in self.series])
        ys = np.concatenate([s[2] for s in self.series])
        x_lo, x_hi = float(xs.min()), float(xs.max())
        y_lo, y_hi = float(ys.min()), float(ys.max())
        if y_hi == y_lo:
            y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
        pad = 0.05 * (y_hi - y_lo)
        return x_lo, x_hi, y_lo - pad, y_hi + pad

    def write(self, path):
        if not self.series:
            raise ValueError("chart has no series")
        x_lo, x_hi, y_lo, y_hi = self._limits()
        plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
        plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

        def sx(v):
            return MARGIN_LEFT + (v - x_lo) / (x_hi - x_lo) * plot_w

        def sy(v):
            return MARGIN_TOP + (y_hi - v) / (y_hi - y_lo) * plot_h

        root = ET.Element(
            "svg",
            xmlns="http://www.w3.org/2000/svg",
            width=str(WIDTH),
            height=str(HEIGHT),
            viewBox=f"0 0 {WIDTH} {HEIGHT}",
        )
        ET.SubElement(root, "rect", x="0", y="0", width=str(WIDTH),
                      height=str(HEIGHT), fill="white")
        ET.SubElement(
            root, "rect",
            x=str(MARGIN_LEFT), y=str(MARGIN_TOP),
            width=str(plot_w), height=str(plot_h),
            fill="none", stroke="#333333",
        )
        text_attrs = {"font-family": "sans-serif", "fill": "#111111"}
        title = ET.SubElement(
            root, "text", x=str(WIDTH / 2), y=str(MARGIN_TOP - 14),
            **text_attrs, **{"text-anchor": "middle", "font-size": "16"},
        )
        title.text = self.title

        for tick in _nice_ticks(x_lo, x_hi):
            if not x_lo <= tick <= x_hi:
                continue
            px = sx(tick)
            ET.SubElement(
                root, "line", x1=f"{px:.2f}", x2=f"{px:.2f}",
                y1=str(MARGIN_TOP), y2=str(MARGIN_TOP + plot_h),
                stroke="#dddddd",
            )
            label = ET.SubElement(
                root, "text", x=f"{px:.2f}", y=str(MARGIN_TOP + plot_h + 18),
                **text_attrs, **{"text-anchor": "middle", "font-size": "12"},
            )
            label.text = _fmt(tick)
        for tick in _nice_ticks(y_lo, y_hi):
            if not y_lo <= tick <= y_hi:
                continue
            py = sy(tick)
            ET.SubElement(
                root, "line", y1=f"{py:.2f}", y2=f"{py:.2f}",
                x1=str(MARGIN_LEFT), x2=str(MARGIN_LEFT + plot_w),
                stroke="#dddddd",
            )
            label = ET.SubElement(
                root, "text", x=str(MARGIN_LEFT - 8), y=f"{py + 4:.2f}",
                **text_attrs, **{"text-anchor": "end", "font-size": "12"},
            )
            label.text = _fmt(tick)

        x_title = ET.SubElement(
            root, "text", x=str(MARGIN_LEFT + plot_w / 2),
            y=str(HEIGHT - 14),
            **text_attrs, **{"text-anchor": "middle", "font-size": "13"},
        )
        x_title.text = self.x_label
        y_title = ET.SubElement(
            root, "text", x="18", y=str(MARGIN_TOP + plot_h / 2),
            transform=f"rotate(-90 18 {MARGIN_TOP + plot_h / 2})",
            **text_attrs, **{"text-anchor": "middle", "font-size": "13"},
        )
        y_title.text = self.y_label

        for label, x, y, color in self.series:
            pts = " ".join(
                f"{sx(xi):.2f},{sy(yi):.2f}" for xi, yi in zip(x, y)
            )
            ET.SubElement(
                root, "polyline", points=pts, fill="none",
                stroke=color, **{"stroke-width": "1.5"},
            )
        for i, (label, _, _, color) in enumerate(self.series):
            ly = MARGIN_TOP + 16 + 18 * i
            ET.SubElement(
                root, "line", x1=str(MARGIN_LEFT + 10), x2=str(MARGIN_LEFT + 34),
                y1=str(ly), y2=str(ly), stroke=color, **{"stroke-width": "2"},
            )
            entry = ET.SubElement(
                root, "text", x=str(MARGIN_LEFT + 40), y=str(ly + 4),
                **text_attrs, **{"font-size": "12"},
            )
            entry.text = label

        tree = ET.ElementTree(root)
        ET.indent(tree)
        tree.write(path, encoding="unicode", xml_declaration=True)
        with open(path, "a", encoding="utf-8", newline="\n") as fh:
            fh.write("\n")
