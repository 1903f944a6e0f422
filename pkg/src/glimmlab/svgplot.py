"""Minimal SVG line-plot writer (log-log), no plotting dependency."""

import numpy as np

WIDTH, HEIGHT, PAD = 640, 480, 60


def _map(vals, lo, hi, out_lo, out_hi):
    t = (np.asarray(vals) - lo) / (hi - lo) if hi > lo else np.zeros(len(vals))
    return out_lo + t * (out_hi - out_lo)


def write_loglog(path, xs, ys, title="", xlabel="", ylabel="", guide_slope=None):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    keep = (xs > 0) & (ys > 0) & np.isfinite(xs) & np.isfinite(ys)
    lx, ly = np.log10(xs[keep]), np.log10(ys[keep])
    if len(lx) == 0:
        lx = ly = np.array([0.0])
    x0, x1 = float(lx.min()), float(lx.max())
    y0, y1 = float(ly.min()), float(ly.max())
    x1 = x1 if x1 > x0 else x0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0
    px = _map(lx, x0, x1, PAD, WIDTH - PAD)
    py = _map(ly, y0, y1, HEIGHT - PAD, PAD)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}">',
             f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
             f'<line x1="{PAD}" y1="{HEIGHT - PAD}" x2="{WIDTH - PAD}" '
             f'y2="{HEIGHT - PAD}" stroke="black"/>',
             f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{HEIGHT - PAD}" '
             f'stroke="black"/>']
    pts = " ".join(f"{a:.1f},{b:.1f}" for a, b in zip(px, py))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="steelblue" '
                 f'stroke-width="2"/>')
    for a, b in zip(px, py):
        parts.append(f'<circle cx="{a:.1f}" cy="{b:.1f}" r="3" fill="steelblue"/>')
    if guide_slope is not None and len(lx) >= 2:
        gy = ly[0] + guide_slope * (lx - lx[0])
        gpy = _map(gy, y0, y1, HEIGHT - PAD, PAD)
        gpts = " ".join(f"{a:.1f},{b:.1f}" for a, b in zip(px, gpy))
        parts.append(f'<polyline points="{gpts}" fill="none" stroke="gray" '
                     f'stroke-dasharray="6,4"/>')
    if title:
        parts.append(f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" '
                     f'font-size="16">{title}</text>')
    if xlabel:
        parts.append(f'<text x="{WIDTH // 2}" y="{HEIGHT - 16}" '
                     f'text-anchor="middle" font-size="13">{xlabel}</text>')
    if ylabel:
        parts.append(f'<text x="18" y="{HEIGHT // 2}" text-anchor="middle" '
                     f'font-size="13" transform="rotate(-90 18 {HEIGHT // 2})">'
                     f'{ylabel}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
