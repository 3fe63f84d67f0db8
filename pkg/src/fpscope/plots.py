"""Deterministic SVG figures.

Heatmaps are rasterized through a fixed 256-step color ramp and embedded as a
PNG data URI; line plots are plain SVG paths. No timestamps or random ids, so
identical data gives identical files.
"""

import base64
import struct
import zlib
from html import escape

import numpy as np

__all__ = ["RAMP_ANCHORS", "color_ramp", "png_bytes", "heatmap_svg", "radial_svg",
           "angular_svg", "fisher_polar_svg"]

# Ramp anchors at positions 0, 1/4, 1/2, 3/4, 1; linear RGB interpolation in between.
RAMP_ANCHORS = ("#440154", "#3b528b", "#21918c", "#5ec962", "#fde725")

FONT = 'font-family="sans-serif" font-size="12"'


def _hex(c):
    return [int(c[i:i + 2], 16) for i in (1, 3, 5)]


def color_ramp(steps=256):
    """``(steps, 3)`` uint8 table; entry ``k`` sits at position ``k / (steps - 1)``."""
    anchors = np.array([_hex(c) for c in RAMP_ANCHORS], dtype=np.float64)
    pos = np.linspace(0.0, 1.0, len(anchors))
    t = np.arange(steps) / (steps - 1)
    table = np.stack([np.interp(t, pos, anchors[:, ch]) for ch in range(3)], axis=1)
    return np.floor(table + 0.5).astype(np.uint8)


RAMP = color_ramp()


def _chunk(tag, payload):
    body = tag + payload
    return struct.pack(">I", len(payload)) + body + struct.pack(">I", zlib.crc32(body))


def png_bytes(rgb):
    """Minimal 8-bit RGB PNG encoder (filter 0 on every row)."""
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    h, w, _ = rgb.shape
    raw = b"".join(b"\x00" + rgb[y].tobytes() for y in range(h))
    header = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    return (b"\x89PNG\r\n\x1a\n" + _chunk(b"IHDR", header)
            + _chunk(b"IDAT", zlib.compress(raw, 9)) + _chunk(b"IEND", b""))


def _to_index(grid, lo, hi):
    if not hi > lo:
        return np.zeros(grid.shape, dtype=np.int64)
    t = (np.clip(grid, lo, hi) - lo) / (hi - lo)
    return np.floor(t * 255 + 0.5).astype(np.int64)


def _fmt(v):
    return f"{v:.4g}"


def heatmap_svg(grid, title="", log=False, vmin=None, vmax=None, pixel=None, lag_labels=None):
    """Heatmap of a 2-D grid.

    ``log`` plots ``log10`` of the values (non-positive bins take the smallest
    positive value). ``vmin``/``vmax`` default to the data range.
    """
    g = np.asarray(grid, dtype=np.float64)
    if log:
        pos = g[g > 0]
        floor = pos.min() if pos.size else 1.0
        g = np.log10(np.where(g > 0, g, floor))
    finite = g[np.isfinite(g)]
    lo = float(finite.min()) if vmin is None else float(vmin)
    hi = float(finite.max()) if vmax is None else float(vmax)
    if log and vmin is not None:
        lo = float(np.log10(vmin))
    if log and vmax is not None:
        hi = float(np.log10(vmax))
    rgb = RAMP[_to_index(np.nan_to_num(g, nan=lo), lo, hi)]
    M, N = g.shape
    if pixel is None:
        pixel = max(1, 512 // max(M, N))
    w, h = N * pixel, M * pixel
    left, top, bar = 20, 30, 16
    width, height = left + w + 20 + bar + 70, top + h + 30
    img = base64.b64encode(png_bytes(rgb)).decode("ascii")
    bar_rgb = RAMP[::-1][:, None, :].repeat(1, axis=1)
    bar_img = base64.b64encode(png_bytes(bar_rgb)).decode("ascii")
    unit = "log10 " if log else ""
    bx = left + w + 20
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left}" y="18" {FONT}>{escape(title)}</text>',
        f'<image x="{left}" y="{top}" width="{w}" height="{h}" preserveAspectRatio="none" '
        f'style="image-rendering:pixelated" href="data:image/png;base64,{img}"/>',
        f'<image x="{bx}" y="{top}" width="{bar}" height="{h}" preserveAspectRatio="none" '
        f'href="data:image/png;base64,{bar_img}"/>',
        f'<text x="{bx + bar + 4}" y="{top + 10}" {FONT}>{unit}{_fmt(hi)}</text>',
        f'<text x="{bx + bar + 4}" y="{top + h}" {FONT}>{unit}{_fmt(lo)}</text>',
    ]
    if lag_labels is not None:
        parts.append(f'<text x="{left}" y="{top + h + 18}" {FONT}>'
                     f'{escape(lag_labels)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


class _Axes:
    """Linear or log-scaled mapping from data to an SVG plot box."""

    def __init__(self, xr, yr, logx=False, logy=False, box=(60, 20, 420, 300)):
        self.logx, self.logy = logx, logy
        self.x0, self.y0, self.w, self.h = box
        self.xr = [self._tx(v, logx) for v in xr]
        self.yr = [self._tx(v, logy) for v in yr]
        if self.xr[1] == self.xr[0]:
            self.xr[1] += 1.0
        if self.yr[1] == self.yr[0]:
            self.yr[1] += 1.0

    @staticmethod
    def _tx(v, log):
        return float(np.log10(v)) if log else float(v)

    def px(self, x):
        t = (self._tx(x, self.logx) - self.xr[0]) / (self.xr[1] - self.xr[0])
        return self.x0 + t * self.w

    def py(self, y):
        t = (self._tx(y, self.logy) - self.yr[0]) / (self.yr[1] - self.yr[0])
        return self.y0 + self.h - t * self.h

    def path(self, xs, ys, color, dash=None, width=1.5):
        pts = [(self.px(x), self.py(y)) for x, y in zip(xs, ys)
               if np.isfinite(x) and np.isfinite(y) and (not self.logy or y > 0)]
        if not pts:
            return ""
        d = " ".join(("M" if i == 0 else "L") + f"{x:.2f},{y:.2f}" for i, (x, y) in enumerate(pts))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        return (f'<path d="{d}" fill="none" stroke="{color}" stroke-width="{width}"{extra}/>')

    def frame(self, xlabel, ylabel, xticks, yticks):
        x0, y0, w, h = self.x0, self.y0, self.w, self.h
        out = [f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="black"/>']
        for t in xticks:
            X = self.px(t)
            out.append(f'<line x1="{X:.2f}" y1="{y0 + h}" x2="{X:.2f}" y2="{y0 + h + 4}" '
                       f'stroke="black"/>')
            out.append(f'<text x="{X:.2f}" y="{y0 + h + 16}" text-anchor="middle" {FONT}>'
                       f'{_fmt(t)}</text>')
        for t in yticks:
            Y = self.py(t)
            out.append(f'<line x1="{x0 - 4}" y1="{Y:.2f}" x2="{x0}" y2="{Y:.2f}" stroke="black"/>')
            out.append(f'<text x="{x0 - 6}" y="{Y + 4:.2f}" text-anchor="end" {FONT}>'
                       f'{_fmt(t)}</text>')
        out.append(f'<text x="{x0 + w / 2:.2f}" y="{y0 + h + 32}" text-anchor="middle" {FONT}>'
                   f'{escape(xlabel)}</text>')
        out.append(f'<text x="14" y="{y0 + h / 2:.2f}" text-anchor="middle" {FONT} '
                   f'transform="rotate(-90 14 {y0 + h / 2:.2f})">{escape(ylabel)}</text>')
        return out


def _svg(width, height, body, title):
    head = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">',
            f'<rect width="{width}" height="{height}" fill="white"/>',
            f'<text x="60" y="14" {FONT}>{escape(title)}</text>']
    return "\n".join(head + [b for b in body if b] + ["</svg>"]) + "\n"


def _decades(lo, hi):
    return [10.0 ** k for k in range(int(np.floor(np.log10(lo))), int(np.ceil(np.log10(hi))) + 1)
            if lo <= 10.0 ** k <= hi]


def radial_svg(centers, mean, fit=None, title="radial spectrum", ylabel="mean power"):
    """Log-log radial profile; ``fit`` is a :class:`PowerLawFit` or ``None``."""
    c = np.asarray(centers, dtype=np.float64)
    m = np.asarray(mean, dtype=np.float64)
    ok = np.isfinite(m) & (m > 0)
    if not ok.any():
        return _svg(540, 370, [f'<text x="60" y="60" {FONT}>no positive bins</text>'], title)
    ylo, yhi = float(m[ok].min()), float(m[ok].max())
    ax = _Axes((c[0], c[-1]), (ylo, yhi), logx=True, logy=True, box=(70, 24, 440, 290))
    body = ax.frame("radial frequency (cycles/pixel)", ylabel,
                    [t for t in (0.01, 0.02, 0.05, 0.1, 0.2, 0.5) if c[0] <= t <= c[-1]],
                    _decades(ylo, yhi))
    body.append(ax.path(c[ok], m[ok], "#3b528b"))
    if fit is not None and fit.alpha is not None:
        alpha = float(fit.alpha)
        slope = -alpha if fit.mode == "power" else -alpha / 2
        xs = np.array([fit.rho_min, fit.rho_max])
        ys = np.exp(fit.intercept) * xs ** slope
        body.append(ax.path(xs, np.clip(ys, ylo, yhi), "#d62728", width=2))
        body.append(f'<text x="330" y="44" {FONT} fill="#d62728">'
                    f'fit: alpha = {alpha:.3f}</text>')
    return _svg(540, 370, body, title)


def angular_svg(centers, mean, title="angular spectrum"):
    c = np.asarray(centers, dtype=np.float64)
    m = np.asarray(mean, dtype=np.float64)
    ok = np.isfinite(m)
    lo, hi = (float(m[ok].min()), float(m[ok].max())) if ok.any() else (0.0, 1.0)
    pad = 0.05 * (hi - lo) if hi > lo else 0.5
    ax = _Axes((0.0, np.pi), (lo - pad, hi + pad), box=(70, 24, 440, 290))
    ticks = np.linspace(lo - pad, hi + pad, 5)
    body = ax.frame("orientation (rad)", "mean magnitude",
                    [0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4, np.pi], ticks)
    body.append(ax.path(c, m, "#21918c"))
    for x, y in zip(c[ok], m[ok]):
        body.append(f'<circle cx="{ax.px(x):.2f}" cy="{ax.py(y):.2f}" r="2.5" fill="#21918c"/>')
    return _svg(540, 370, body, title)


def fisher_polar_svg(centers, values, title="Fisher profile"):
    """Polar plot of ``r = 1 + F`` over the full circle (double cone mirrored).

    The reference corpus corresponds to the unit circle; radii below 0 are
    drawn at the center.
    """
    c = np.asarray(centers, dtype=np.float64)
    f = np.asarray(values, dtype=np.float64)
    theta = np.concatenate([c, c + np.pi, c[:1] + 2 * np.pi])
    r = np.concatenate([f, f, f[:1]])
    r = np.maximum(1.0 + np.nan_to_num(r, nan=0.0), 0.0)
    rmax = max(2.0, float(r.max()))
    size, cx, cy = 360, 180, 190
    scale = 150 / rmax
    body = []
    for ring in np.arange(0.5, rmax + 1e-9, 0.5):
        body.append(f'<circle cx="{cx}" cy="{cy}" r="{ring * scale:.2f}" fill="none" '
                    f'stroke="#cccccc"/>')
    body.append(f'<circle cx="{cx}" cy="{cy}" r="{scale:.2f}" fill="none" stroke="#2ca02c" '
                f'stroke-width="2"/>')
    xs = cx + r * scale * np.cos(theta)
    ys = cy - r * scale * np.sin(theta)
    d = " ".join(("M" if i == 0 else "L") + f"{x:.2f},{y:.2f}" for i, (x, y) in enumerate(zip(xs, ys)))
    body.append(f'<path d="{d}" fill="none" stroke="#440154" stroke-width="2"/>')
    body.append(f'<text x="10" y="{size + 24}" {FONT}>green: reference (F = 0); '
                f'radius = 1 + F</text>')
    return _svg(size, size + 40, body, title)
