"""Box-plot SVG rendering with no external dependencies.

Each chart is a row of box-and-whisker glyphs over a shared linear y
axis: the box spans the interquartile range, the heavy line marks the
median, whiskers extend to the most extreme points within 1.5 IQR of the
box, and (optionally) outliers beyond the whiskers are drawn as circles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

WIDTH = 960
HEIGHT = 540
MARGIN_LEFT = 80
MARGIN_RIGHT = 30
MARGIN_TOP = 60
MARGIN_BOTTOM = 70


@dataclass(frozen=True)
class BoxCell:
    """One box: quartiles, whisker endpoints, and points beyond the fences."""

    label: str
    q25: float
    median: float
    q75: float
    whisker_lo: float
    whisker_hi: float
    outliers: tuple[float, ...] = field(default_factory=tuple)


def _escape(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def render_box_plot(cells, title: str, y_label: str, x_label: str = "",
                    y_range: tuple[float, float] | None = None,
                    draw_outliers: bool = False) -> str:
    """Render the chart as an SVG document string."""
    cells = list(cells)
    if not cells:
        raise ValueError("box plot needs at least one cell")
    if y_range is None:
        lo = min(c.whisker_lo for c in cells)
        hi = max(c.whisker_hi for c in cells)
        if draw_outliers:
            lo = min([lo] + [min(c.outliers) for c in cells if c.outliers])
            hi = max([hi] + [max(c.outliers) for c in cells if c.outliers])
        lo = min(lo, 0.0)
        if hi <= lo:
            hi = lo + 1.0
        hi += 0.05 * (hi - lo)
        y_range = (lo, hi)
    y_lo, y_hi = y_range

    plot_left, plot_right = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    plot_top, plot_bottom = MARGIN_TOP, HEIGHT - MARGIN_BOTTOM
    plot_w = plot_right - plot_left
    plot_h = plot_bottom - plot_top

    slot = plot_w / len(cells)
    box_w = min(0.6 * slot, 40.0)

    def ypx(v: float) -> float:
        frac = (v - y_lo) / (y_hi - y_lo)
        return plot_bottom - max(0.0, min(1.0, frac)) * plot_h

    out = []
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
               f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">')
    out.append('<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>')
    out.append(f'<text x="{WIDTH / 2}" y="32" text-anchor="middle" '
               f'font-size="20" font-family="sans-serif">{_escape(title)}</text>')

    # y grid and ticks
    n_ticks = 6
    for i in range(n_ticks + 1):
        v = y_lo + (y_hi - y_lo) * i / n_ticks
        y = ypx(v)
        out.append(f'<line x1="{plot_left}" y1="{y:.2f}" x2="{plot_right}" '
                   f'y2="{y:.2f}" stroke="#dddddd" stroke-width="1"/>')
        out.append(f'<text x="{plot_left - 8}" y="{y + 4:.2f}" text-anchor="end" '
                   f'font-size="12" font-family="sans-serif">{_fmt(v)}</text>')
    out.append(f'<text x="18" y="{(plot_top + plot_bottom) / 2:.2f}" font-size="14" '
               f'font-family="sans-serif" text-anchor="middle" '
               f'transform="rotate(-90 18 {(plot_top + plot_bottom) / 2:.2f})">'
               f'{_escape(y_label)}</text>')

    # axes
    out.append(f'<line x1="{plot_left}" y1="{plot_bottom}" x2="{plot_right}" '
               f'y2="{plot_bottom}" stroke="#000000" stroke-width="1.5"/>')
    out.append(f'<line x1="{plot_left}" y1="{plot_top}" x2="{plot_left}" '
               f'y2="{plot_bottom}" stroke="#000000" stroke-width="1.5"/>')

    for idx, cell in enumerate(cells):
        cx = plot_left + (idx + 0.5) * slot
        x0 = cx - box_w / 2
        y_q25, y_med, y_q75 = ypx(cell.q25), ypx(cell.median), ypx(cell.q75)
        y_wlo, y_whi = ypx(cell.whisker_lo), ypx(cell.whisker_hi)
        # whisker stem and caps
        out.append(f'<line x1="{cx:.2f}" y1="{y_wlo:.2f}" x2="{cx:.2f}" '
                   f'y2="{y_q25:.2f}" stroke="#333333" stroke-width="1"/>')
        out.append(f'<line x1="{cx:.2f}" y1="{y_whi:.2f}" x2="{cx:.2f}" '
                   f'y2="{y_q75:.2f}" stroke="#333333" stroke-width="1"/>')
        for wy in (y_wlo, y_whi):
            out.append(f'<line x1="{cx - box_w / 3:.2f}" y1="{wy:.2f}" '
                       f'x2="{cx + box_w / 3:.2f}" y2="{wy:.2f}" '
                       f'stroke="#333333" stroke-width="1"/>')
        # box and median
        out.append(f'<rect class="box" x="{x0:.2f}" y="{y_q75:.2f}" width="{box_w:.2f}" '
                   f'height="{max(y_q25 - y_q75, 0.5):.2f}" fill="#9ecae1" '
                   f'stroke="#3182bd" stroke-width="1.2"/>')
        out.append(f'<line x1="{x0:.2f}" y1="{y_med:.2f}" x2="{x0 + box_w:.2f}" '
                   f'y2="{y_med:.2f}" stroke="#d62728" stroke-width="2"/>')
        if draw_outliers:
            for v in cell.outliers:
                out.append(f'<circle cx="{cx:.2f}" cy="{ypx(v):.2f}" r="2" '
                           f'fill="none" stroke="#555555" stroke-width="0.8"/>')
        out.append(f'<text x="{cx:.2f}" y="{plot_bottom + 18}" text-anchor="middle" '
                   f'font-size="12" font-family="sans-serif">{_escape(cell.label)}</text>')

    if x_label:
        out.append(f'<text x="{(plot_left + plot_right) / 2:.2f}" y="{HEIGHT - 20}" '
                   f'text-anchor="middle" font-size="14" font-family="sans-serif">'
                   f'{_escape(x_label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_box_plot(path, cells, title: str, y_label: str, x_label: str = "",
                   y_range: tuple[float, float] | None = None,
                   draw_outliers: bool = False) -> None:
    doc = render_box_plot(cells, title, y_label, x_label, y_range, draw_outliers)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(doc)
