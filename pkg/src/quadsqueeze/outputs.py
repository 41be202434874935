"""CSV, JSON and SVG writers.  Output is a pure function of its inputs."""
from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

GRID_COLUMNS = ("beta0", "beta1", "gamma", "class", "u11", "u12", "u21", "u22")
CURVE_COLUMNS = ("curve_id", "element", "beta0", "beta1")

CLASS_III_FILL = "#f5e663"
U12_COLOR = "#d62728"
U21_COLOR = "#1f77b4"
POINT_COLOR = "#000000"


def fmt(x: float) -> str:
    """17 significant digits, locale independent."""
    return "%.17g" % x


def _header_lines(header: dict | None) -> list[str]:
    if not header:
        return []
    return ["# " + line for line in json.dumps(header, sort_keys=True, indent=1).splitlines()]


def _csv_text(columns, rows, header) -> str:
    buf = io.StringIO()
    for line in _header_lines(header):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def grid_csv(grid, header: dict | None = None) -> str:
    rows = []
    for j, b1 in enumerate(grid.beta1):
        for i, b0 in enumerate(grid.beta0):
            u = grid.u[j, i]
            rows.append([fmt(b0), fmt(b1), fmt(grid.gamma[j, i]), grid.classes[j, i],
                         *(fmt(v) for v in u)])
    return _csv_text(GRID_COLUMNS, rows, header)


def curves_csv(curves: Sequence, header: dict | None = None) -> str:
    rows = []
    for cid, c in enumerate(curves):
        for b0, b1 in c.polyline:
            rows.append([cid, c.element, fmt(b0), fmt(b1)])
    return _csv_text(CURVE_COLUMNS, rows, header)


def samples_csv(columns: Sequence[str], data: Iterable[Sequence[float]],
                header: dict | None = None) -> str:
    return _csv_text(columns, [[fmt(v) for v in row] for row in data], header)


def read_csv(text: str) -> tuple[list[str], list[list[str]]]:
    """Columns and rows of a CSV written here, skipping '#' comment lines."""
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


# ---------------------------------------------------------------- SVG


def _f(x: float) -> str:
    return f"{x:.3f}"


def _cell_edges(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    # cell boundaries halfway between nodes; a single node spans the window
    if values.size == 1:
        return np.array([lo - 0.5, hi + 0.5]) if lo == hi else np.array([lo, hi])
    mids = 0.5 * (values[1:] + values[:-1])
    first = values[0] - (mids[0] - values[0])
    last = values[-1] + (values[-1] - mids[-1])
    return np.concatenate([[first], mids, [last]])


def strutt_svg(grid, red: Sequence = (), blue: Sequence = (), points: Sequence = (),
               header: dict | None = None, width: int = 640, height: int = 560) -> str:
    """Self-contained Strutt map: class III filled, zero curves, squeeze points."""
    ml, mr, mt, mb = 70, 190, 20, 50
    pw, ph = width - ml - mr, height - mt - mb
    ex = _cell_edges(grid.beta0, *grid.spec.beta0_range[:2])
    ey = _cell_edges(grid.beta1, *grid.spec.beta1_range[:2])
    x0, x1, y0, y1 = ex[0], ex[-1], ey[0], ey[-1]

    def X(b0):
        return ml + (b0 - x0) / (x1 - x0) * pw

    def Y(b1):
        return mt + (y1 - b1) / (y1 - y0) * ph

    out = ['<?xml version="1.0" encoding="UTF-8"?>']
    if header:
        text = json.dumps(header, sort_keys=True).replace("--", "- -")
        out.append(f"<!-- {escape(text)} -->")
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
               f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">')
    out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="#ffffff" stroke="#000000"/>')

    out.append('<g id="class-III" stroke="none" fill="%s">' % CLASS_III_FILL)
    n1, n0 = grid.classes.shape
    for j in range(n1):
        i = 0
        while i < n0:
            if grid.classes[j, i] != "III":
                i += 1
                continue
            k = i
            while k + 1 < n0 and grid.classes[j, k + 1] == "III":
                k += 1
            xa, xb = X(ex[i]), X(ex[k + 1])
            ya, yb = Y(ey[j + 1]), Y(ey[j])
            out.append(f'<rect x="{_f(xa)}" y="{_f(ya)}" width="{_f(xb - xa)}" height="{_f(yb - ya)}"/>')
            i = k + 1
    out.append("</g>")

    for gid, curves, color in (("u12-zero", red, U12_COLOR), ("u21-zero", blue, U21_COLOR)):
        out.append(f'<g id="{gid}" fill="none" stroke="{color}" stroke-width="1.5">')
        for c in curves:
            pts = " ".join(f"{_f(X(a))},{_f(Y(b))}" for a, b in c.polyline)
            out.append(f'<polyline points="{pts}"/>')
        out.append("</g>")

    out.append(f'<g id="squeeze-points" fill="{POINT_COLOR}">')
    for p in points:
        out.append(f'<circle cx="{_f(X(p.beta0))}" cy="{_f(Y(p.beta1))}" r="4">'
                   f'<title>lambda={p.lam:.4f}</title></circle>')
    out.append("</g>")

    # axes
    out.append('<g id="axes" fill="#000000">')
    for v in np.linspace(x0, x1, 5):
        out.append(f'<text x="{_f(X(v))}" y="{height - mb + 18}" text-anchor="middle">{v:.2f}</text>')
    for v in np.linspace(y0, y1, 5):
        out.append(f'<text x="{ml - 6}" y="{_f(Y(v) + 4)}" text-anchor="end">{v:.2f}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">&#946;&#8320;</text>')
    out.append(f'<text x="18" y="{mt + ph / 2:.1f}" text-anchor="middle">&#946;&#8321;</text>')
    out.append("</g>")

    lx, ly = width - mr + 15, mt + 10
    out.append('<g id="legend">')
    out.append(f'<rect x="{lx}" y="{ly}" width="14" height="14" fill="{CLASS_III_FILL}" stroke="#000000"/>')
    out.append(f'<text x="{lx + 20}" y="{ly + 11}">class III (squeezing)</text>')
    out.append(f'<rect x="{lx}" y="{ly + 22}" width="14" height="14" fill="#ffffff" stroke="#000000"/>')
    out.append(f'<text x="{lx + 20}" y="{ly + 33}">class I (stable)</text>')
    out.append(f'<line x1="{lx}" y1="{ly + 51}" x2="{lx + 14}" y2="{ly + 51}" stroke="{U12_COLOR}" stroke-width="2"/>')
    out.append(f'<text x="{lx + 20}" y="{ly + 55}">u12 = 0</text>')
    out.append(f'<line x1="{lx}" y1="{ly + 73}" x2="{lx + 14}" y2="{ly + 73}" stroke="{U21_COLOR}" stroke-width="2"/>')
    out.append(f'<text x="{lx + 20}" y="{ly + 77}">u21 = 0</text>')
    out.append(f'<circle cx="{lx + 7}" cy="{ly + 95}" r="4" fill="{POINT_COLOR}"/>')
    out.append(f'<text x="{lx + 20}" y="{ly + 99}">squeeze point</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def finite_or_none(x: float):
    return x if math.isfinite(x) else None
