"""Minimal SVG output for reports; no plotting dependency."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

from .features import METRIC_ORDER, MetricKind

_BAR = '<rect x="{x:.1f}" y="{y:.1f}" width="{w:.1f}" height="{h:.1f}" fill="#4878cf"/>'
_TEXT = '<text x="{x:.1f}" y="{y:.1f}" font-size="{s}" text-anchor="{a}" font-family="sans-serif">{t}</text>'


def component_bar_chart(
    component_means: Mapping[MetricKind, float], title: str = "component likelihoods"
) -> str:
    """An SVG bar chart of per-metric likelihoods in [0, 1]."""
    width, height, pad, floor = 720, 320, 40, 70
    n = len(METRIC_ORDER)
    slot = (width - 2 * pad) / n
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        _TEXT.format(x=width / 2, y=24, s=15, a="middle", t=title),
        f'<line x1="{pad}" y1="{height - floor}" x2="{width - pad}" y2="{height - floor}" stroke="black"/>',
    ]
    axis_top = 40
    scale = height - floor - axis_top
    for i, metric in enumerate(METRIC_ORDER):
        x = pad + i * slot
        value = component_means.get(metric)
        if value is not None:
            bar_h = max(1.0, value * scale)
            parts.append(_BAR.format(x=x + slot * 0.15, y=height - floor - bar_h, w=slot * 0.7, h=bar_h))
            parts.append(
                _TEXT.format(x=x + slot / 2, y=height - floor - bar_h - 4, s=10, a="middle", t=f"{value:.3f}")
            )
        label = metric.value.replace("_", " ")
        parts.append(
            f'<text x="{x + slot / 2:.1f}" y="{height - floor + 12:.1f}" font-size="9" '
            f'text-anchor="end" font-family="sans-serif" '
            f'transform="rotate(-35 {x + slot / 2:.1f} {height - floor + 12:.1f})">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def replan_curve(points: Sequence[tuple[float, float]], title: str = "composite vs replan interval") -> str:
    """An SVG polyline of composite score against replan interval (steps)."""
    width, height, pad = 560, 320, 50
    pts = sorted(points)
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    x_lo, x_hi = min(xs), max(xs)
    x_span = (x_hi - x_lo) or 1.0

    def sx(x):
        return pad + (x - x_lo) / x_span * (width - 2 * pad)

    def sy(y):
        return height - pad - y * (height - 2 * pad)

    path = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in pts)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        _TEXT.format(x=width / 2, y=24, s=15, a="middle", t=title),
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<polyline points="{path}" fill="none" stroke="#c44e52" stroke-width="2"/>',
    ]
    for x, y in pts:
        parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="#c44e52"/>')
        parts.append(_TEXT.format(x=sx(x), y=sy(y) - 8, s=10, a="middle", t=f"{y:.3f}"))
        parts.append(_TEXT.format(x=sx(x), y=height - pad + 14, s=10, a="middle", t=f"{x:g}"))
    parts.append("</svg>")
    return "\n".join(parts)


def save_svg(svg: str, path) -> None:
    Path(path).write_text(svg)
