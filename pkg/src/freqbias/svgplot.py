"""Minimal deterministic SVG line charts.

Output depends only on the data: no timestamps, no random ids, fixed
coordinate formatting.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"]
PANEL_W, PANEL_H = 340, 240
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 62, 12, 28, 40


def _c(v):
    return f"{v:.2f}"


def _tick_label(v):
    if v == 0:
        return "0"
    a = abs(v)
    if a >= 1e4 or a < 1e-3:
        return f"{v:.0e}".replace("e+0", "e").replace("e-0", "e-")
    return f"{v:.4g}"


def nice_ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(n, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str | None = None
    color: str | None = None


@dataclass
class Panel:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    logy: bool = False
    series: list = field(default_factory=list)

    def line(self, x, y, label=None, color=None):
        self.series.append(Series(np.asarray(x, float), np.asarray(y, float), label, color))
        return self

    def _finite(self, s):
        ok = np.isfinite(s.x) & np.isfinite(s.y)
        if self.logy:
            ok &= s.y > 0
        return ok

    def limits(self):
        xs, ys = [], []
        for s in self.series:
            ok = self._finite(s)
            xs.append(s.x[ok])
            ys.append(s.y[ok])
        xs = np.concatenate(xs) if xs else np.array([])
        ys = np.concatenate(ys) if ys else np.array([])
        if xs.size == 0:
            return None
        x0, x1 = float(xs.min()), float(xs.max())
        y0, y1 = float(ys.min()), float(ys.max())
        if self.logy:
            y0, y1 = math.floor(math.log10(y0)), math.ceil(math.log10(y1))
            if y1 == y0:
                y1 += 1
        elif y1 == y0:
            y0, y1 = y0 - 1, y1 + 1
        else:
            pad = 0.05 * (y1 - y0)
            y0, y1 = y0 - pad, y1 + pad
        if x1 == x0:
            x0, x1 = x0 - 1, x1 + 1
        return x0, x1, y0, y1

    def render(self, ox, oy):
        lim = self.limits()
        out = [f'<g transform="translate({_c(ox)},{_c(oy)})">']
        pw = PANEL_W - MARGIN_L - MARGIN_R
        ph = PANEL_H - MARGIN_T - MARGIN_B
        out.append(f'<text x="{_c(PANEL_W / 2)}" y="16" text-anchor="middle" font-size="12">{escape(self.title)}</text>')
        out.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>')
        if lim is None:
            out.append(f'<text x="{_c(MARGIN_L + pw / 2)}" y="{_c(MARGIN_T + ph / 2)}" text-anchor="middle" font-size="10">no data</text></g>')
            return out
        x0, x1, y0, y1 = lim

        def px(x):
            return MARGIN_L + (x - x0) / (x1 - x0) * pw

        def py(y):
            v = np.log10(y) if self.logy else y
            return MARGIN_T + ph - (v - y0) / (y1 - y0) * ph

        for t in nice_ticks(x0, x1):
            X = px(t)
            out.append(f'<line x1="{_c(X)}" y1="{_c(MARGIN_T + ph)}" x2="{_c(X)}" y2="{_c(MARGIN_T + ph + 4)}" stroke="#000"/>')
            out.append(f'<text x="{_c(X)}" y="{_c(MARGIN_T + ph + 15)}" text-anchor="middle" font-size="9">{_tick_label(t)}</text>')
        if self.logy:
            step = max(1, int(math.ceil((y1 - y0) / 6)))
            yt = [10.0**e for e in range(int(y0), int(y1) + 1, step)]
        else:
            yt = nice_ticks(y0, y1)
        for t in yt:
            Y = py(t)
            out.append(f'<line x1="{MARGIN_L - 4}" y1="{_c(Y)}" x2="{MARGIN_L}" y2="{_c(Y)}" stroke="#000"/>')
            out.append(f'<text x="{MARGIN_L - 6}" y="{_c(Y + 3)}" text-anchor="end" font-size="9">{_tick_label(t)}</text>')
        out.append(f'<text x="{_c(MARGIN_L + pw / 2)}" y="{PANEL_H - 6}" text-anchor="middle" font-size="10">{escape(self.xlabel)}</text>')
        out.append(f'<text x="12" y="{_c(MARGIN_T + ph / 2)}" text-anchor="middle" font-size="10" '
                   f'transform="rotate(-90 12 {_c(MARGIN_T + ph / 2)})">{escape(self.ylabel)}</text>')

        legend = []
        for i, s in enumerate(self.series):
            color = s.color or PALETTE[i % len(PALETTE)]
            ok = self._finite(s)
            # break the polyline wherever a point is missing
            runs, cur = [], []
            for xv, yv, good in zip(s.x, s.y, ok):
                if good:
                    cur.append(f"{_c(px(xv))},{_c(py(yv))}")
                elif cur:
                    runs.append(cur)
                    cur = []
            if cur:
                runs.append(cur)
            for run in runs:
                if len(run) == 1:
                    x_, y_ = run[0].split(",")
                    out.append(f'<circle cx="{x_}" cy="{y_}" r="1.2" fill="{color}"/>')
                else:
                    out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{" ".join(run)}"/>')
            if s.label:
                legend.append((s.label, color))
        for i, (label, color) in enumerate(legend):
            ly = MARGIN_T + 10 + 12 * i
            lx = MARGIN_L + pw - 110
            out.append(f'<line x1="{lx}" y1="{ly - 3}" x2="{lx + 14}" y2="{ly - 3}" stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{lx + 18}" y="{ly}" font-size="9">{escape(label)}</text>')
        out.append("</g>")
        return out


def save_figure(path, panels, ncols=None, title=None):
    """Lay ``panels`` out on a grid and write one SVG file."""
    panels = list(panels)
    if not panels or all(not p.series for p in panels):
        raise ValueError("nothing to plot")
    ncols = ncols or min(len(panels), 4)
    nrows = -(-len(panels) // ncols)
    top = 24 if title else 0
    width, height = ncols * PANEL_W, nrows * PANEL_H + top
    body = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#fff"/>',
    ]
    if title:
        body.append(f'<text x="{_c(width / 2)}" y="17" text-anchor="middle" font-size="14">{escape(title)}</text>')
    for i, p in enumerate(panels):
        r, c = divmod(i, ncols)
        body.extend(p.render(c * PANEL_W, top + r * PANEL_H))
    body.append("</svg>")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        fh.write("\n".join(body) + "\n")
    return path


# ------------------------------------------------------------ figure makers


def plot_target(path, grid, target_values, spectrum):
    """Target on the sample grid and the magnitude of its transform."""
    x = grid.points
    p1 = Panel("target", "x", "f(x)").line(x, target_values)
    pos = spectrum.freqs >= 0
    p2 = Panel("|transform|", "xi", "magnitude", logy=True).line(spectrum.freqs[pos], np.abs(spectrum.values[pos]))
    return save_figure(path, [p1, p2], ncols=2)


def kappa_panel(profiles: dict, title="", logy=True):
    p = Panel(title, "xi", "kappa", logy=logy)
    for label, prof in profiles.items():
        pos = prof.freqs >= 0
        k = np.where(prof.valid, prof.kappa, np.nan)
        p.line(prof.freqs[pos], k[pos], label=label)
    return p


def plot_kappa_overlay(path, profiles: dict, title=None):
    if not profiles:
        raise ValueError("no kappa profiles to plot")
    return save_figure(path, [kappa_panel(profiles, title or "frequency learning rate")], ncols=1)


def plot_kappa_panels(path, groups: dict, title=None):
    """One kappa overlay panel per group, e.g. per depth or per width."""
    if not groups:
        raise ValueError("no kappa groups to plot")
    return save_figure(path, [kappa_panel(v, k) for k, v in groups.items()], title=title)


def plot_snapshot_grid(path, rows: dict, max_cols=6):
    """|spectrum| per snapshot; one row per trace (e.g. NN and FEM)."""
    if not rows or any(len(tr) == 0 for tr in rows.values()):
        raise ValueError("no traces to plot")
    ncols = min(max_cols, max(len(tr) for tr in rows.values()))
    panels = []
    for name, tr in rows.items():
        idx = np.unique(np.linspace(0, len(tr) - 1, ncols).round().astype(int))
        row = []
        for j in idx:
            pos = tr.freqs >= 0
            row.append(Panel(f"{name} t={tr.times[j]:.4g}", "xi", "|u|", logy=True)
                       .line(tr.freqs[pos], np.abs(tr.values[j, pos])))
        row += [Panel(f"{name}") for _ in range(ncols - len(row))]
        panels.extend(row)
    return save_figure(path, panels, ncols=ncols)
