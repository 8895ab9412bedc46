"""Dependency-free SVG line chart for exceedance-rate spectra."""
from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

from .exceedance import read_spectrum_csv


@dataclass(frozen=True)
class ChartStyle:
    width: int = 640
    height: int = 400
    margin_left: int = 60
    margin_right: int = 20
    margin_top: int = 40
    margin_bottom: int = 50
    stroke: str = "#1f77b4"
    stroke_width: float = 1.5
    title: str = "Exceedance rate spectrum"


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def render_spectrum_svg(csv_text: str, style: ChartStyle = ChartStyle()) -> str:
    """Render a spectrum CSV as one polyline: span (m) against rate (%), rate clamped to 0..100."""
    points = read_spectrum_csv(csv_text)
    if not points:
        raise ValueError("spectrum has no points")
    x0, x1 = style.margin_left, style.width - style.margin_right
    y0, y1 = style.height - style.margin_bottom, style.margin_top  # y0 is the 0 % line
    smin = min(p.span_m for p in points)
    smax = max(p.span_m for p in points)
    if smax == smin:
        smax = smin + 1.0

    def px(span):
        return x0 + (span - smin) / (smax - smin) * (x1 - x0)

    def py(rate):
        rate = min(100.0, max(0.0, rate))
        return y0 - rate / 100.0 * (y0 - y1)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{style.width}" height="{style.height}" '
        f'viewBox="0 0 {style.width} {style.height}">',
        f'<title>{escape(style.title)}</title>',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    for r in range(0, 101, 20):
        y = _fmt(py(r))
        out.append(f'<line class="grid" x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="#ddd"/>')
        out.append(f'<text x="{x0 - 6}" y="{y}" font-size="11" text-anchor="end" '
                   f'dominant-baseline="middle">{r}</text>')
    for s in _ticks(smin, smax):
        x = _fmt(px(s))
        out.append(f'<text x="{x}" y="{y0 + 16}" font-size="11" text-anchor="middle">{_fmt(s)}</text>')
    out.append(f'<line class="axis" x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
    out.append(f'<line class="axis" x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
    verts = " ".join(f"{_fmt(px(p.span_m))},{_fmt(py(p.rate_percent))}" for p in points)
    out.append(f'<polyline points="{verts}" fill="none" stroke="{style.stroke}" '
               f'stroke-width="{style.stroke_width}"/>')
    out.append(f'<text x="{(x0 + x1) / 2:.0f}" y="{style.height - 12}" font-size="12" '
               f'text-anchor="middle">Span length (m)</text>')
    out.append(f'<text x="16" y="{(y0 + y1) / 2:.0f}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 16 {(y0 + y1) / 2:.0f})">Exceedance rate (%)</text>')
    out.append(f'<text x="{(x0 + x1) / 2:.0f}" y="{style.margin_top - 14}" font-size="14" '
               f'text-anchor="middle">{escape(style.title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    raw = (hi - lo) / target
    step = min((s for s in (1, 2, 5, 10, 20, 25, 50, 100, 200, 500, 1000) if s >= raw), default=raw)
    first = -(-lo // step) * step
    out = []
    v = first
    while v <= hi + 1e-9:
        out.append(v)
        v += step
    return out
