"""Minimal static SVG rendering of result CSVs (line plots and heatmaps)."""
from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path
from xml.sax.saxutils import escape

W, H = 520, 360
ML, MR, MT, MB = 60, 130, 40, 50
COLORS = {"vanilla": "#1f77b4", "naive_q": "#ff7f0e", "orth_q": "#2ca02c", "rbf": "#d62728"}


class SchemaError(ValueError):
    pass


def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise SchemaError(f"{path} has no data rows")
    return rows


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'font-family="sans-serif" font-size="11">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]


def line_plot(series: dict[str, list[tuple[float, float, float, float]]], title: str,
              xlabel: str, ylabel: str = "TPR") -> str:
    """``series`` maps a name to (x, mean, lo, hi) points; y is fixed to [0, 1]."""
    xs = [p[0] for pts in series.values() for p in pts]
    x0, x1 = min(xs), max(xs)
    if x1 == x0:
        x1 = x0 + 1
    pw, ph = W - ML - MR, H - MT - MB

    def sx(x):
        return ML + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return MT + (1 - y) * ph

    out = _header(title)
    out.append(f'<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for t in (0, 0.25, 0.5, 0.75, 1.0):
        out.append(f'<text x="{ML - 6}" y="{sy(t) + 4:.1f}" text-anchor="end">{t:g}</text>')
        out.append(f'<line x1="{ML}" x2="{ML + pw}" y1="{sy(t):.1f}" y2="{sy(t):.1f}" stroke="#ddd"/>')
    for x in sorted(set(xs)):
        out.append(f'<text x="{sx(x):.1f}" y="{MT + ph + 15}" text-anchor="middle">{x:g}</text>')
    out.append(f'<text x="{ML + pw / 2}" y="{H - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="15" y="{MT + ph / 2}" transform="rotate(-90 15 {MT + ph / 2})" '
               f'text-anchor="middle">{escape(ylabel)}</text>')
    for i, (name, pts) in enumerate(series.items()):
        color = COLORS.get(name, "#555")
        pts = sorted(pts)
        band = [(sx(x), sy(hi)) for x, _, _, hi in pts] + [(sx(x), sy(lo)) for x, _, lo, _ in reversed(pts)]
        out.append('<polygon points="' + " ".join(f"{a:.1f},{b:.1f}" for a, b in band)
                   + f'" fill="{color}" fill-opacity="0.15" stroke="none"/>')
        out.append('<polyline points="' + " ".join(f"{sx(x):.1f},{sy(m):.1f}" for x, m, _, _ in pts)
                   + f'" fill="none" stroke="{color}" stroke-width="2"/>')
        ly = MT + 15 + 18 * i
        out.append(f'<line x1="{W - MR + 10}" x2="{W - MR + 30}" y1="{ly}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{W - MR + 35}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out)


def heatmap(values: dict[tuple[float, int], float], title: str) -> str:
    rows = sorted({k[0] for k in values})
    cols = sorted({k[1] for k in values})
    pw, ph = W - ML - MR, H - MT - MB
    cw, ch = pw / len(cols), ph / len(rows)
    out = _header(title)
    for i, g in enumerate(rows):
        y = MT + i * ch
        out.append(f'<text x="{ML - 6}" y="{y + ch / 2 + 4:.1f}" text-anchor="end">{g:g}x</text>')
        for j, L in enumerate(cols):
            v = values[(g, L)]
            shade = int(255 * (1 - v))
            x = ML + j * cw
            out.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{cw:.1f}" height="{ch:.1f}" '
                       f'fill="rgb({shade},{shade},255)" stroke="white"/>')
            out.append(f'<text x="{x + cw / 2:.1f}" y="{y + ch / 2 + 4:.1f}" '
                       f'text-anchor="middle">{v:.2f}</text>')
    for j, L in enumerate(cols):
        out.append(f'<text x="{ML + (j + 0.5) * cw:.1f}" y="{MT + ph + 15}" text-anchor="middle">{L}</text>')
    out.append(f'<text x="{ML + pw / 2}" y="{H - 12}" text-anchor="middle">landmarks</text>')
    out.append(f'<text x="15" y="{MT + ph / 2}" transform="rotate(-90 15 {MT + ph / 2})" '
               f'text-anchor="middle">gamma / gamma_median</text>')
    out.append("</svg>")
    return "\n".join(out)


def _grouped(rows, key, x, y="tpr"):
    acc = defaultdict(lambda: defaultdict(list))
    try:
        for r in rows:
            acc[r[key]][float(r[x])].append(float(r[y]))
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"non-numeric {x!r}/{y!r} value: {exc}") from None
    return {
        name: [(xv, sum(v) / len(v), min(v), max(v)) for xv, v in pts.items()]
        for name, pts in acc.items()
    }


def plot_csv(path, out_dir=None) -> list[Path]:
    """Render a result CSV to SVG, choosing the plot type from its header."""
    path = Path(path)
    out_dir = Path(out_dir) if out_dir else path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = read_rows(path)
    cols = set(rows[0])
    written = []
    if {"system", "method", "sigma", "tpr"} <= cols:
        by_sys = defaultdict(list)
        for r in rows:
            by_sys[r["system"]].append(r)
        for system, rs in by_sys.items():
            svg = line_plot(_grouped(rs, "method", "sigma"), f"{system}: TPR vs noise", "sigma")
            written.append(out_dir / f"{path.stem}_{system}.svg")
            written[-1].write_text(svg)
    elif {"gamma_multiplier", "landmarks", "mean_tpr"} <= cols:
        try:
            vals = {(float(r["gamma_multiplier"]), int(r["landmarks"])): float(r["mean_tpr"]) for r in rows}
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{path}: {exc}") from None
        written.append(out_dir / f"{path.stem}.svg")
        written[-1].write_text(heatmap(vals, "RBF-augmented mean TPR"))
    elif {"p", "method", "tpr"} <= cols:
        svg = line_plot(_grouped(rows, "method", "p"), "TPR vs depolarizing strength", "p")
        written.append(out_dir / f"{path.stem}.svg")
        written[-1].write_text(svg)
    else:
        raise SchemaError(f"{path}: unrecognised columns {sorted(cols)}")
    return written
