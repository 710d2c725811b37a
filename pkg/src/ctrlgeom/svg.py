"""Minimal SVG 1.1 emitters: line plots for 1-axis scans, heatmaps for 2-axis scans."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

from .scan import ScanResult

WIDTH, HEIGHT, MARGIN = 640, 420, 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _num(x: float) -> str:
    return f"{x:.2f}"


def _header(title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f"<title>{escape(title)}</title>",
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]


def _symlog(y: float) -> float:
    # compresses poles so the whole curve stays visible
    return math.copysign(math.log10(1.0 + abs(y)), y)


def line_plot(result: ScanResult, columns: list[str] | None = None, title: str = "") -> str:
    """One polyline per quantity, broken at singular cells; y on a signed log scale."""
    job = result.job
    if len(job.axes) != 1:
        raise ValueError("line plots need a 1-axis scan")
    xname = job.axes[0].name
    columns = columns or job.columns[1:]
    xs = result.column(xname)
    series = {c: [None if v is None else _symlog(v) for v in result.column(c)] for c in columns}
    ys = [v for s in series.values() for v in s if v is not None]
    ylo, yhi = (min(ys), max(ys)) if ys else (-1.0, 1.0)
    if ylo == yhi:
        ylo, yhi = ylo - 1.0, yhi + 1.0
    xlo, xhi = xs[0], xs[-1]
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def px(x):
        return MARGIN + (x - xlo) / (xhi - xlo) * pw

    def py(y):
        return HEIGHT - MARGIN - (y - ylo) / (yhi - ylo) * ph

    out = _header(title or f"{', '.join(columns)} vs {xname}")
    out.append(f'<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    if ylo < 0 < yhi:
        out.append(f'<line x1="{MARGIN}" y1="{_num(py(0))}" x2="{WIDTH - MARGIN}" y2="{_num(py(0))}" '
                   'stroke="#999" stroke-dasharray="4 3"/>')
    for k, (name, ys_) in enumerate(series.items()):
        color = COLORS[k % len(COLORS)]
        run: list[str] = []
        for x, y in zip(xs, ys_ + [None]):
            if y is None:
                if len(run) > 1:
                    out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                               f'points="{" ".join(run)}"/>')
                run = []
            else:
                run.append(f"{_num(px(x))},{_num(py(y))}")
        if len(run) > 1:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(run)}"/>')
        out.append(f'<text x="{WIDTH - MARGIN - 120}" y="{MARGIN + 16 + 16 * k}" fill="{color}" '
                   f'font-size="12">{escape(name)}</text>')
    for i, r in enumerate(result.records):
        if r.classification.value == "Singular":
            x = _num(px(xs[i]))
            out.append(f'<line x1="{x}" y1="{MARGIN}" x2="{x}" y2="{HEIGHT - MARGIN}" '
                       'stroke="#bbb" stroke-width="0.5"/>')
    out += _axis_labels(xname, "sign(y) log10(1+|y|)", xlo, xhi, ylo, yhi)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def heatmap(result: ScanResult, column: str | None = None, title: str = "") -> str:
    """Shaded grid of one quantity (signed log colour scale); singular cells hatched."""
    job = result.job
    if len(job.axes) != 2:
        raise ValueError("heatmaps need a 2-axis scan")
    column = column or job.columns[2]
    ax0, ax1 = job.axes
    n0, n1 = ax0.steps, ax1.steps
    vals = [None if v is None else _symlog(v) for v in result.column(column)]
    finite = [abs(v) for v in vals if v is not None]
    scale = max(finite) if finite else 1.0
    scale = scale or 1.0
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN
    cw, ch = pw / n0, ph / n1
    out = _header(title or f"{column} over ({ax0.name}, {ax1.name})")
    out.append(
        '<defs><pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse" '
        'patternTransform="rotate(45)"><rect width="6" height="6" fill="white"/>'
        '<line x1="0" y1="0" x2="0" y2="6" stroke="black" stroke-width="1.5"/></pattern></defs>'
    )
    for idx, v in enumerate(vals):
        i, j = divmod(idx, n1)  # row-major: first axis outer
        x = MARGIN + i * cw
        y = HEIGHT - MARGIN - (j + 1) * ch
        if v is None:
            fill = "url(#hatch)"
        else:
            t = v / scale
            fill = _diverging(t)
        out.append(f'<rect x="{_num(x)}" y="{_num(y)}" width="{_num(cw + 0.05)}" height="{_num(ch + 0.05)}" '
                   f'fill="{fill}"/>')
    out.append(f'<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out += _axis_labels(ax0.name, ax1.name, ax0.min, ax0.max, ax1.min, ax1.max)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _diverging(t: float) -> str:
    # blue (negative) - white - red (positive)
    t = max(-1.0, min(1.0, t))
    if t >= 0:
        r, g, b = 255, int(255 * (1 - t)), int(255 * (1 - t))
    else:
        r, g, b = int(255 * (1 + t)), int(255 * (1 + t)), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def _axis_labels(xname, yname, xlo, xhi, ylo, yhi) -> list[str]:
    bottom = HEIGHT - MARGIN
    return [
        f'<text x="{MARGIN}" y="{bottom + 18}" font-size="12">{xlo:.3g}</text>',
        f'<text x="{WIDTH - MARGIN}" y="{bottom + 18}" font-size="12" text-anchor="end">{xhi:.3g}</text>',
        f'<text x="{WIDTH / 2}" y="{bottom + 36}" font-size="13" text-anchor="middle">{escape(xname)}</text>',
        f'<text x="{MARGIN - 6}" y="{bottom}" font-size="12" text-anchor="end">{ylo:.3g}</text>',
        f'<text x="{MARGIN - 6}" y="{MARGIN + 10}" font-size="12" text-anchor="end">{yhi:.3g}</text>',
        f'<text x="16" y="{HEIGHT / 2}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 16 {HEIGHT / 2})">{escape(yname)}</text>',
    ]


def render(result: ScanResult, title: str = "") -> str:
    if len(result.job.axes) == 1:
        return line_plot(result, title=title)
    if len(result.job.axes) == 2:
        return heatmap(result, title=title)
    raise ValueError("SVG output supports 1- and 2-axis scans only")
