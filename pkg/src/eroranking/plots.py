"""Self-contained SVG figures: (p, eta) error heatmaps and per-entry error bars."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import NonRectangularGrid

ISO_SNR = (0.5, 0.8, 1.7)
ISO_COLORS = {0.5: "#d62728", 0.8: "#2ca02c", 1.7: "#1f77b4"}


def _escape(text: str) -> str:
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))


def gray(value: float) -> str:
    """Fill colour for a metric value: 0 -> white, >= 1 -> black."""
    v = 0.0 if not math.isfinite(value) else min(max(value, 0.0), 1.0)
    level = int(round(255 * (1 - v)))
    return f"#{level:02x}{level:02x}{level:02x}"


def heatmap_grid(summary, metric: str, method=None, n=None):
    """Arrange summary rows into ``(etas, ps, values)`` with ``values[i, j]`` at ``(etas[i], ps[j])``."""
    rows = [r for r in summary
            if (method is None or r.method == method) and (n is None or r.n == n)]
    if not rows:
        raise NonRectangularGrid("no summary rows match the requested method / n")
    if len({r.n for r in rows}) > 1 or len({r.method for r in rows}) > 1:
        raise NonRectangularGrid("summary mixes several n or methods; select one")
    etas = sorted({r.eta for r in rows})
    ps = sorted({r.p for r in rows})
    cell = {(r.eta, r.p): r for r in rows}
    if len(cell) != len(rows) or len(cell) != len(etas) * len(ps):
        raise NonRectangularGrid(
            f"{len(rows)} rows do not cover the {len(etas)} x {len(ps)} (eta, p) grid exactly once")
    values = np.array([[getattr(cell[(e, p)], f"{metric}_mean") for p in ps] for e in etas], dtype=float)
    # SNR is proportional to eta * sqrt(p) for fixed scores and n
    coef = np.median([r.snr / (r.eta * math.sqrt(r.p)) for r in rows])
    return etas, ps, values, float(coef)


def emit_heatmap(summary, metric: str, path, method=None, n=None, iso_snr=ISO_SNR, title=None) -> Path:
    etas, ps, values, coef = heatmap_grid(summary, metric, method, n)
    ne, npp = len(etas), len(ps)
    cell = max(12, min(40, 480 // max(ne, npp)))
    left, top, right, bottom = 80, 50, 150, 60
    w, h = npp * cell, ne * cell
    W, Hh = left + w + right, top + h + bottom

    def x_of(p):
        idx = np.interp(p, ps, np.arange(npp)) if npp > 1 else 0.0
        return left + (idx + 0.5) * cell

    def y_of(eta):
        idx = np.interp(eta, etas, np.arange(ne)) if ne > 1 else 0.0
        return top + h - (idx + 0.5) * cell

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{Hh}" viewBox="0 0 {W} {Hh}">',
           f'<rect x="0" y="0" width="{W}" height="{Hh}" fill="#ffffff"/>']
    label = title or f"{metric} ({method or 'all'})"
    out.append(f'<text x="{left + w / 2:.1f}" y="28" text-anchor="middle" font-size="16" '
               f'font-family="sans-serif">{_escape(label)}</text>')
    for i, eta in enumerate(etas):
        for j, p in enumerate(ps):
            x = left + j * cell
            y = top + h - (i + 1) * cell
            out.append(f'<rect class="cell" x="{x}" y="{y}" width="{cell}" height="{cell}" '
                       f'fill="{gray(values[i, j])}" data-eta="{float(eta)!r}" data-p="{float(p)!r}" '
                       f'data-value="{float(values[i, j])!r}"/>')
    out.append(f'<rect x="{left}" y="{top}" width="{w}" height="{h}" fill="none" stroke="#000"/>')

    step = max(1, npp // 8)
    for j in range(0, npp, step):
        out.append(f'<text x="{x_of(ps[j]):.1f}" y="{top + h + 16}" text-anchor="middle" '
                   f'font-size="10" font-family="sans-serif">{ps[j]:.3g}</text>')
    step = max(1, ne // 8)
    for i in range(0, ne, step):
        out.append(f'<text x="{left - 6}" y="{y_of(etas[i]) + 3:.1f}" text-anchor="end" '
                   f'font-size="10" font-family="sans-serif">{etas[i]:.3g}</text>')
    out.append(f'<text x="{left + w / 2:.1f}" y="{top + h + 40}" text-anchor="middle" '
               f'font-size="13" font-family="sans-serif">p</text>')
    out.append(f'<text x="20" y="{top + h / 2:.1f}" text-anchor="middle" font-size="13" '
               f'font-family="sans-serif" transform="rotate(-90 20 {top + h / 2:.1f})">eta</text>')

    # iso-SNR curves: eta = snr / (coef * sqrt(p))
    for k, target in enumerate(iso_snr):
        pgrid = np.linspace(ps[0], ps[-1], 200)
        eg = target / (coef * np.sqrt(pgrid))
        ok = (eg >= etas[0]) & (eg <= etas[-1])
        if ok.sum() < 2:
            continue
        pts = " ".join(f"{x_of(pv):.1f},{y_of(ev):.1f}" for pv, ev in zip(pgrid[ok], eg[ok]))
        color = ISO_COLORS.get(target, "#ff7f0e")
        out.append(f'<polyline class="iso-snr" data-snr="{float(target)!r}" points="{pts}" fill="none" '
                   f'stroke="{color}" stroke-width="2"/>')
        ly = top + 20 + 18 * k
        out.append(f'<line x1="{left + w + 14}" y1="{ly}" x2="{left + w + 34}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + w + 40}" y="{ly + 4}" font-size="11" '
                   f'font-family="sans-serif">SNR = {target:g}</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path


def whisker_half_widths(errors) -> np.ndarray:
    e = np.atleast_2d(np.asarray(errors, dtype=float))
    return (e.max(axis=0) - e.min(axis=0)) / 2


def emit_errorbar(errors, reference, path, title=None) -> Path:
    """Per-index min/max whiskers of ``reference + error`` across trials, reference in red.

    ``errors`` is a ``trials x n`` array of signed errors ``x - s * xbar``.
    """
    e = np.atleast_2d(np.asarray(errors, dtype=float))
    ref = np.asarray(reference, dtype=float)
    if e.shape[1] != ref.size:
        raise ValueError("errors and reference have different lengths")
    n = ref.size
    lo = ref + e.min(axis=0)
    hi = ref + e.max(axis=0)
    left, top, pw, ph = 70, 40, 720, 360
    W, H = left + pw + 30, top + ph + 60
    ymin = float(min(lo.min(), ref.min()))
    ymax = float(max(hi.max(), ref.max()))
    if ymax == ymin:
        ymax, ymin = ymax + 1, ymin - 1
    pad = 0.05 * (ymax - ymin)
    ymin, ymax = ymin - pad, ymax + pad

    def X(i):
        return left + (i + 0.5) * pw / n

    def Y(v):
        return top + ph - (v - ymin) / (ymax - ymin) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="#ffffff"/>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>']
    if title:
        out.append(f'<text x="{left + pw / 2}" y="24" text-anchor="middle" font-size="15" '
                   f'font-family="sans-serif">{_escape(title)}</text>')
    for i in range(n):
        out.append(f'<line class="whisker" x1="{X(i):.2f}" y1="{Y(lo[i]):.2f}" x2="{X(i):.2f}" '
                   f'y2="{Y(hi[i]):.2f}" stroke="#555" stroke-width="1" data-lo="{float(lo[i])!r}" data-hi="{float(hi[i])!r}"/>')
    pts = " ".join(f"{X(i):.2f},{Y(v):.2f}" for i, v in enumerate(ref))
    out.append(f'<polyline class="reference" points="{pts}" fill="none" stroke="#d62728" stroke-width="1.5"/>')
    for v in np.linspace(ymin + pad, ymax - pad, 5):
        out.append(f'<text x="{left - 6}" y="{Y(v) + 3:.1f}" text-anchor="end" font-size="10" '
                   f'font-family="sans-serif">{v:.3g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{top + ph + 36}" text-anchor="middle" font-size="13" '
               f'font-family="sans-serif">item index (1..{n})</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path
