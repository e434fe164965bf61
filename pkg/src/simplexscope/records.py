"""Result serialization: JSON records, CSV tables and a minimal SVG line plot.

Writers stage every file in a temporary sibling and rename only once all
outputs are rendered, so a failing run leaves no partial files behind.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from fractions import Fraction
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["to_jsonable", "dumps_json", "csv_text", "svg_line_plot", "write_outputs"]


def to_jsonable(obj):
    """Convert numpy scalars/arrays, fractions and dataclass-like dicts to JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Fraction):
        return str(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_json(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def svg_line_plot(x, series: dict, *, title="", xlabel="", ylabel="", logx=False,
                  width=640, height=400) -> str:
    """Self-contained SVG of one or more ``y(x)`` curves.

    ``series`` maps a legend label to y values aligned with ``x``.
    """
    x = np.asarray(x, dtype=float)
    xs = np.log10(x) if logx else x
    ys = [np.asarray(v, dtype=float) for v in series.values()]
    left, right, top, bottom = 70, 20, 40, 50
    pw, ph = width - left - right, height - top - bottom
    x0, x1 = float(xs.min()), float(xs.max())
    finite = np.concatenate([y[np.isfinite(y)] for y in ys]) if ys else np.zeros(1)
    y0, y1 = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return top + (1 - (v - y0) / (y1 - y0)) * ph

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{width / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="{left + pw / 2}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="16" y="{top + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2})">{escape(ylabel)}</text>',
    ]
    for frac in np.linspace(0, 1, 5):
        xv = x0 + frac * (x1 - x0)
        yv = y0 + frac * (y1 - y0)
        xt = 10 ** xv if logx else xv
        out.append(f'<text x="{px(xv):.1f}" y="{top + ph + 16}" text-anchor="middle">{xt:.3g}</text>')
        out.append(f'<text x="{left - 6}" y="{py(yv) + 4:.1f}" text-anchor="end">{yv:.3g}</text>')
    for n, (label, y) in enumerate(zip(series, ys)):
        color = colors[n % len(colors)]
        ok = np.isfinite(y)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(xs[ok], y[ok]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        for a, b in zip(xs[ok], y[ok]):
            out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="2.5" fill="{color}"/>')
        out.append(f'<text x="{left + 10}" y="{top + 16 + 14 * n}" fill="{color}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_outputs(directory, files: dict) -> list[str]:
    """Write ``{name: text}`` into ``directory`` all-or-nothing.

    Every file is first written to a temporary path in ``directory``; the
    renames happen only after all writes succeed. Returns the final paths.
    """
    os.makedirs(directory, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=directory)
            staged.append((tmp, os.path.join(directory, name)))
            with os.fdopen(fd, "w") as fh:
                fh.write(text)
    except BaseException:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.remove(tmp)
        raise
    for tmp, final in staged:
        os.replace(tmp, final)
    return [final for _, final in staged]
