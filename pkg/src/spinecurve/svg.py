"""Minimal standalone SVG renderings (deterministic text, no plotting library)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from .angle_matrix import AngleMatrix, Pc1Scores
from .diagnosis import CurveReport, Direction, Kind
from .landmarks import LABELS, Spine


def _doc(width: float, height: float, body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}" font-family="sans-serif">'
    )
    return "\n".join([head, *body, "</svg>", ""])


def _diverging(v: float, vmax: float) -> str:
    """Blue (negative) to white to red (positive)."""
    t = 0.0 if vmax == 0 else max(-1.0, min(1.0, v / vmax))
    if t >= 0:
        r, g, b = 255, round(255 * (1 - t)), round(255 * (1 - t))
    else:
        r, g, b = round(255 * (1 + t)), round(255 * (1 + t)), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def angle_matrix_svg(am: AngleMatrix, cell: float = 28.0) -> str:
    """Heatmap of gamma; clinically invalid cells are left blank."""
    n = am.gamma.shape[0]
    off = 40.0
    vmax = float(np.abs(am.gamma[am.valid_mask]).max()) if am.valid_mask.any() else 0.0
    body = []
    for i in range(n):
        y = off + i * cell
        body.append(f'<text x="{off - 4:.1f}" y="{y + cell * 0.65:.1f}" font-size="9" text-anchor="end">{LABELS[i]}</text>')
        body.append(
            f'<text x="{off + i * cell + cell / 2:.1f}" y="{off - 6:.1f}" font-size="9" text-anchor="middle">{LABELS[i]}</text>'
        )
        for j in range(n):
            if not am.valid_mask[i, j]:
                continue
            x = off + j * cell
            g = am.gamma[i, j]
            body.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{cell:.1f}" height="{cell:.1f}" '
                f'fill="{_diverging(g, vmax)}" stroke="#ccc" stroke-width="0.5"/>'
            )
            body.append(
                f'<text x="{x + cell / 2:.1f}" y="{y + cell * 0.62:.1f}" font-size="7" text-anchor="middle">{g:.1f}</text>'
            )
    size = off + n * cell + 10
    return _doc(size, size, body)


def pc1_svg(pc1: Pc1Scores, report: CurveReport | None = None, width: float = 640, height: float = 320) -> str:
    s = np.asarray(pc1.scores, dtype=float)
    n = len(s)
    left, right, top, bottom = 50.0, 20.0, 20.0, 40.0
    lo, hi = float(s.min()), float(s.max())
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    xs = [left + k * (width - left - right) / (n - 1) for k in range(n)]
    ys = [top + (hi - v) * (height - top - bottom) / (hi - lo) for v in s]
    body = [
        f'<line x1="{left:.1f}" y1="{height - bottom:.1f}" x2="{width - right:.1f}" y2="{height - bottom:.1f}" stroke="#000"/>',
        f'<line x1="{left:.1f}" y1="{top:.1f}" x2="{left:.1f}" y2="{height - bottom:.1f}" stroke="#000"/>',
        '<polyline fill="none" stroke="#1f77b4" stroke-width="2" points="'
        + " ".join(f"{x:.1f},{y:.1f}" for x, y in zip(xs, ys))
        + '"/>',
    ]
    for k in range(n):
        body.append(
            f'<text x="{xs[k]:.1f}" y="{height - bottom + 14:.1f}" font-size="9" text-anchor="middle">{LABELS[k]}</text>'
        )
    if report is not None:
        for e in report.extrema:
            k = e.vertebra.pos
            colour = "#d62728" if e.kind is Kind.Max else "#2ca02c"
            body.append(f'<circle cx="{xs[k]:.1f}" cy="{ys[k]:.1f}" r="4" fill="{colour}"/>')
    return _doc(width, height, body)


def spine_svg(spine: Spine, report: CurveReport | None = None) -> str:
    """Endplate lines over the spine; end-vertebra endplates of each curve highlighted."""
    mids = spine.midpoints()
    xs, ys = mids[:, 0], mids[:, 1]
    pad = 120.0
    x0, y0 = float(xs.min()) - pad, float(ys.min()) - pad
    w = float(xs.max() - xs.min()) + 2 * pad + 160
    h = float(ys.max() - ys.min()) + 2 * pad
    half = 40.0
    body = []
    for v in spine.vertebrae:
        for plate in (v.upper, v.lower):
            a = math.radians(plate.angle_deg)
            mx, my = plate.midpoint.x - x0, plate.midpoint.y - y0
            dx, dy = half * math.cos(a), half * math.sin(a)
            body.append(
                f'<line x1="{mx - dx:.1f}" y1="{my - dy:.1f}" x2="{mx + dx:.1f}" y2="{my + dy:.1f}" stroke="#555" stroke-width="2"/>'
            )
        c = ((v.upper.midpoint.x + v.lower.midpoint.x) / 2 - x0, (v.upper.midpoint.y + v.lower.midpoint.y) / 2 - y0)
        body.append(f'<text x="{c[0] + half + 6:.1f}" y="{c[1] + 3:.1f}" font-size="10">{v.id.label}</text>')
    if report is not None:
        for k, cur in enumerate(report.curves):
            colour = "#d62728" if cur.direction is Direction.Right else "#1f77b4"
            ends = ((spine[cur.upper_ev].upper, -1), (spine[cur.lower_ev].lower, 1))
            for plate, _side in ends:
                a = math.radians(plate.angle_deg)
                mx, my = plate.midpoint.x - x0, plate.midpoint.y - y0
                dx, dy = 3 * half * math.cos(a), 3 * half * math.sin(a)
                body.append(
                    f'<line x1="{mx - dx:.1f}" y1="{my - dy:.1f}" x2="{mx + dx:.1f}" y2="{my + dy:.1f}" '
                    f'stroke="{colour}" stroke-width="2.5"/>'
                )
            up = spine[cur.upper_ev].upper.midpoint
            lo = spine[cur.lower_ev].lower.midpoint
            ax = max(up.x, lo.x) - x0 + 3 * half + 10
            ay0, ay1 = up.y - y0, lo.y - y0
            r = (ay1 - ay0) / 2
            body.append(
                f'<path d="M {ax:.1f} {ay0:.1f} A {r:.1f} {r:.1f} 0 0 1 {ax:.1f} {ay1:.1f}" '
                f'fill="none" stroke="{colour}" stroke-dasharray="4 3"/>'
            )
            body.append(
                f'<text x="{ax + r * 0.3 + 8:.1f}" y="{(ay0 + ay1) / 2:.1f}" font-size="12" fill="{colour}">'
                f"{escape(cur.upper_ev.label)}-{escape(cur.lower_ev.label)} {cur.cobb_deg:.1f}&#176;</text>"
            )
    return _doc(w, h, body)


def confusion_svg(counts, labels=("NormalMild", "Moderate", "Severe"), cell: float = 70.0) -> str:
    counts = np.asarray(counts, dtype=int)
    off = 90.0
    row_tot = counts.sum(axis=1)
    body = [
        f'<text x="{off + 1.5 * cell:.1f}" y="16" font-size="12" text-anchor="middle">predicted</text>',
    ]
    for j, lab in enumerate(labels):
        body.append(f'<text x="{off + j * cell + cell / 2:.1f}" y="{off - 8:.1f}" font-size="10" text-anchor="middle">{lab}</text>')
    for i, lab in enumerate(labels):
        y = off + i * cell
        body.append(f'<text x="{off - 6:.1f}" y="{y + cell / 2:.1f}" font-size="10" text-anchor="end">{lab}</text>')
        for j in range(len(labels)):
            frac = counts[i, j] / row_tot[i] if row_tot[i] else 0.0
            shade = round(255 * (1 - 0.8 * frac))
            x = off + j * cell
            body.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{cell:.1f}" height="{cell:.1f}" '
                f'fill="#{shade:02x}{shade:02x}ff" stroke="#888"/>'
            )
            body.append(
                f'<text x="{x + cell / 2:.1f}" y="{y + cell / 2:.1f}" font-size="11" text-anchor="middle">'
                f"{100 * frac:.1f}% ({counts[i, j]})</text>"
            )
    size = off + len(labels) * cell + 10
    return _doc(size, size, body)
