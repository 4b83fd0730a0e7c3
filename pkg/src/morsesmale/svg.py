"""Plain SVG renderings: phase portraits and quotient rings."""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

SIZE = 600
MARGIN = 30
KIND_COLOR = {"sink": "#1f5fbf", "source": "#c0392b", "saddle": "#111111"}
SIGN_COLOR = {1: "#1a9850", -1: "#e67e22"}
PALETTE = ("#8e44ad", "#16a085", "#d35400", "#2c3e50", "#c0392b", "#2980b9", "#7f8c8d")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Canvas:
    def __init__(self, box: Sequence[float]):
        self.x0, self.x1, self.y0, self.y1 = box
        self.items: list[str] = []

    def xy(self, p):
        w = SIZE - 2 * MARGIN
        sx = MARGIN + (p[..., 0] - self.x0) / (self.x1 - self.x0) * w
        sy = SIZE - MARGIN - (p[..., 1] - self.y0) / (self.y1 - self.y0) * w
        return sx, sy

    def polyline(self, pts: np.ndarray, color: str, width: float = 1.0, dash: str | None = None):
        if len(pts) < 2:
            return
        sx, sy = self.xy(pts)
        coords = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(sx, sy))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.items.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="{width}"{extra}/>')

    def circle(self, p, r: float, color: str, fill: str | None = None, title: str | None = None):
        sx, sy = self.xy(np.asarray(p, dtype=float))
        t = f"<title>{title}</title>" if title else ""
        self.items.append(f'<circle cx="{_fmt(float(sx))}" cy="{_fmt(float(sy))}" r="{r}" '
                          f'stroke="{color}" fill="{fill or color}">{t}</circle>')

    def text(self, x: float, y: float, s: str, size: int = 12):
        self.items.append(f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-family="monospace" font-size="{size}">{s}</text>')

    def render(self, title: str) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
                f'viewBox="0 0 {SIZE} {SIZE}">')
        bg = f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>'
        frame = (f'<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE - 2 * MARGIN}" height="{SIZE - 2 * MARGIN}" '
                 f'fill="none" stroke="#999"/>')
        label = f'<text x="{MARGIN}" y="{MARGIN - 10}" font-family="monospace" font-size="13">{title}</text>'
        return "\n".join([head, bg, frame, label, *self.items, "</svg>"]) + "\n"


def _split_wraps(xy: np.ndarray, torus: bool) -> list[np.ndarray]:
    ok = np.isfinite(xy).all(axis=1)
    breaks = np.nonzero(~ok)[0].tolist()
    if torus and len(xy) > 1:
        jump = np.abs(np.diff(xy, axis=0)).max(axis=1) > 0.5
        breaks += (np.nonzero(jump)[0] + 1).tolist()
    pieces, lo = [], 0
    for b in sorted(set(breaks)):
        pieces.append(xy[lo:b])
        lo = b + (0 if ok[b] else 1) if b < len(xy) else b
    pieces.append(xy[lo:])
    return [p[np.isfinite(p).all(axis=1)] for p in pieces if len(p) > 1]


def _portrait_box(m) -> tuple[float, float, float, float]:
    k = m.surface.kind
    if k == "torus":
        return (0.0, 1.0, 0.0, 1.0)
    if k == "sphere":
        return (-2.0, 2.0, -2.0, 2.0)
    x0, x1, y0, y1 = m.search_box
    cx, cy, h = 0.5 * (x0 + x1), 0.5 * (y0 + y1), 0.75 * max(x1 - x0, y1 - y0)
    return (cx - h, cx + h, cy - h, cy + h)


def _chart0(m, charts, xy):
    if m.surface.kind != "sphere":
        return np.asarray(xy, dtype=float)
    return m.surface.to_chart(np.asarray(charts), np.asarray(xy, dtype=float), 0)


def phase_portrait_svg(m, orbits, separatrices, heteroclinic_points) -> str:
    """Orbits, grown separatrices and heteroclinic points (colored by sign) in chart 0."""
    c = _Canvas(_portrait_box(m))
    torus = m.surface.kind == "torus"
    for sep in separatrices:
        color = "#c0392b" if sep.stability == "unstable" else "#1f5fbf"
        for piece in _split_wraps(_chart0(m, sep.charts, sep.xy), torus):
            c.polyline(piece, color, 0.8)
    for o in orbits:
        for p in o.points:
            q = _chart0(m, np.array([p.chart]), p.array[None])[0]
            if np.all(np.isfinite(q)):
                c.circle(q, 4, KIND_COLOR[o.kind], title=f"{o.kind} {o.id} period {o.period}")
    for h in heteroclinic_points:
        q = _chart0(m, np.array([h.location.chart]), h.location.array[None])[0]
        c.circle(q, 2.5, SIGN_COLOR[h.sign], title=f"{h.unstable_id} x {h.stable_id} sign {h.sign:+d}")
    return c.render(f"{m.name} ({m.surface.kind})")


def quotient_svg(sink_id: int, curves: Iterable, title: str = "") -> str:
    """The fundamental annulus drawn as a planar ring, gluing boundary dashed.

    ``s = 0`` (the circle C) is the outer ring, ``s -> 1`` the inner one.
    """
    c = _Canvas((-1.0, 1.0, -1.0, 1.0))
    r_out, r_in = 0.9, 0.4
    th = np.linspace(0, 2 * np.pi, 181)
    ring = np.column_stack([np.cos(th), np.sin(th)])
    c.polyline(r_out * ring, "#333", 1.5)
    c.polyline(r_in * ring, "#333", 1.5, dash="6,4")
    lines = []
    for i, curve in enumerate(curves):
        col = PALETTE[i % len(PALETTE)]
        for arc in curve.arcs:
            if len(arc) < 2:
                continue
            rad = r_out - arc[:, 0] * (r_out - r_in)
            ang = 2 * np.pi * arc[:, 1]
            pts = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
            # break where theta wraps so the ring is not crossed by chords
            jump = np.nonzero(np.abs(np.diff(arc[:, 1])) > 0.5)[0] + 1
            for piece in np.split(pts, jump):
                c.polyline(piece, col, 1.4)
        lines.append((col, f"{curve.source_id}: winding {curve.winding}"))
    for k, (col, s) in enumerate(lines):
        c.items.append(f'<text x="{MARGIN + 6}" y="{SIZE - MARGIN - 8 - 16 * k}" font-family="monospace" '
                       f'font-size="12" fill="{col}">{s}</text>')
    return c.render(title or f"orbit space of the basin of sink {sink_id}")
