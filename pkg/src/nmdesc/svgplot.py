"""Minimal static SVG line charts.

Writes standalone SVG documents with no third-party plotting dependency.
Supports multiple named series, optional log-scale y, axis ticks, and a
simple legend. Good enough for diagnostic artifacts, not publication.
"""

import math

PALETTE = [
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
]

WIDTH = 640
HEIGHT = 420
MARGIN_L = 70
MARGIN_R = 20
MARGIN_T = 40
MARGIN_B = 50


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    raw = span / n
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12 * span:
        out.append(t)
        t += step
    return out


def _log_ticks(lo, hi):
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    return [10.0**e for e in range(lo_e, hi_e + 1)]


def _fmt_tick(v):
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.0e}"
    return f"{v:g}"


def line_plot_svg(series, title="", xlabel="", ylabel="", logy=False):
    """Render named (x, y) series as an SVG string.

    series: mapping name -> (x values, y values). With logy=True, points
    with nonpositive y are dropped from the drawing (the line breaks).
    """
    if not series:
        raise ValueError("no series to plot")
    xs_all, ys_all = [], []
    for xv, yv in series.values():
        for x, y in zip(xv, yv):
            if logy and y <= 0:
                continue
            xs_all.append(float(x))
            ys_all.append(float(y))
    if not xs_all:
        raise ValueError("no drawable points (all y nonpositive on log scale?)")
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if logy:
        if y_hi == y_lo:
            y_hi = y_lo * 10.0
        y_lo_t, y_hi_t = math.log10(y_lo), math.log10(y_hi)
    else:
        if y_hi == y_lo:
            y_hi = y_lo + 1.0
        y_lo_t, y_hi_t = y_lo, y_hi

    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def px(x):
        return MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y):
        t = math.log10(y) if logy else y
        return MARGIN_T + plot_h - (t - y_lo_t) / (y_hi_t - y_lo_t) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="black"/>',
    ]
    if title:
        parts.append(
            f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" '
            f'font-size="16" font-family="sans-serif">{_esc(title)}</text>'
        )
    for t in _ticks(x_lo, x_hi):
        x = px(t)
        parts.append(
            f'<line x1="{x:.2f}" y1="{MARGIN_T + plot_h}" x2="{x:.2f}" '
            f'y2="{MARGIN_T + plot_h + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{MARGIN_T + plot_h + 18}" '
            f'text-anchor="middle" font-size="11" '
            f'font-family="sans-serif">{_fmt_tick(t)}</text>'
        )
    y_ticks = _log_ticks(y_lo, y_hi) if logy else _ticks(y_lo, y_hi)
    for t in y_ticks:
        if logy and not (y_lo <= t <= y_hi):
            continue
        y = py(t)
        parts.append(
            f'<line x1="{MARGIN_L - 5}" y1="{y:.2f}" x2="{MARGIN_L}" '
            f'y2="{y:.2f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{MARGIN_L - 8}" y="{y + 4:.2f}" text-anchor="end" '
            f'font-size="11" font-family="sans-serif">{_fmt_tick(t)}</text>'
        )
    if xlabel:
        parts.append(
            f'<text x="{MARGIN_L + plot_w / 2}" y="{HEIGHT - 12}" '
            f'text-anchor="middle" font-size="13" '
            f'font-family="sans-serif">{_esc(xlabel)}</text>'
        )
    if ylabel:
        parts.append(
            f'<text x="18" y="{MARGIN_T + plot_h / 2}" text-anchor="middle" '
            f'font-size="13" font-family="sans-serif" '
            f'transform="rotate(-90 18 {MARGIN_T + plot_h / 2})">'
            f"{_esc(ylabel)}</text>"
        )

    for i, (name, (xv, yv)) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        segments = []
        current = []
        for x, y in zip(xv, yv):
            if logy and y <= 0:
                if current:
                    segments.append(current)
                current = []
                continue
            current.append((px(float(x)), py(float(y))))
        if current:
            segments.append(current)
        for seg in segments:
            pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in seg)
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="{color}" '
                f'stroke-width="1.5"/>'
            )
        ly = MARGIN_T + 14 + 16 * i
        lx = MARGIN_L + plot_w - 150
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{lx + 30}" y="{ly}" font-size="12" '
            f'font-family="sans-serif">{_esc(name)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _esc(s):
    return (
        str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )


def write_line_plot(path, series, **kwargs):
    svg = line_plot_svg(series, **kwargs)
    with open(path, "w") as f:
        f.write(svg)
