"""
Static SVG and text rendering: copula scatterplots, panel grids, dependence
tables and network diagrams.

Output is plain SVG 1.1 written by hand so that identical inputs give
byte-identical files. Scatterplot axes follow the U1 (x, the T margin) /
U2 (y, the Delta margin) convention.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .copula import DependenceSummary, PseudoObservations, pseudo_observations
from .intervals import DIRECTIONS, CaseSet, aligned, neuron_label
from .network import FptSample, NetworkSpec

MARKER_RADIUS = 1.5
FONT = "font-family=\"Helvetica, Arial, sans-serif\""


def marker_opacity(n: int) -> float:
    """0.25 at n = 10^4, more opaque for small samples."""
    return round(min(1.0, max(0.05, 25.0 / math.sqrt(max(n, 1)))), 3)


@dataclass
class PlotSpec:
    title: str = ""
    x_label: str = "U1"
    y_label: str = "U2"
    size: int = 320


def _f(v: float) -> str:
    return f"{v:.2f}"


def _document(width: float, height: float, body: list[str]) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_f(width)}" height="{_f(height)}" viewBox="0 0 {_f(width)} {_f(height)}">\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


def _cell(pobs: PseudoObservations | None, x0, y0, w, h, x_label="", y_label="", title="",
          ticks=True) -> list[str]:
    """Unit-square axes with one dot per pseudo-observation, placed at (x0, y0)."""
    out = [f'<g transform="translate({_f(x0)},{_f(y0)})">',
           f'<rect x="0" y="0" width="{_f(w)}" height="{_f(h)}" fill="white" stroke="black" stroke-width="1"/>']
    if pobs is not None and len(pobs):
        op = marker_opacity(len(pobs))
        out.append(f'<g class="points" fill="black" fill-opacity="{op}" stroke="none">')
        for u, v in zip(pobs.u.tolist(), pobs.v.tolist()):
            out.append(f'<circle cx="{_f(u * w)}" cy="{_f((1 - v) * h)}" r="{MARKER_RADIUS}"/>')
        out.append("</g>")
    if ticks:
        for t in (0.0, 0.5, 1.0):
            out.append(f'<text x="{_f(t * w)}" y="{_f(h + 12)}" font-size="9" text-anchor="middle" {FONT}>{t:g}</text>')
            out.append(f'<text x="-4" y="{_f((1 - t) * h + 3)}" font-size="9" text-anchor="end" {FONT}>{t:g}</text>')
    if x_label:
        out.append(f'<text x="{_f(w / 2)}" y="{_f(h + 26)}" font-size="11" text-anchor="middle" {FONT}>{escape(x_label)}</text>')
    if y_label:
        out.append(f'<text transform="translate(-22,{_f(h / 2)}) rotate(-90)" font-size="11" '
                   f'text-anchor="middle" {FONT}>{escape(y_label)}</text>')
    if title:
        out.append(f'<text x="{_f(w / 2)}" y="-6" font-size="12" text-anchor="middle" {FONT}>{escape(title)}</text>')
    out.append("</g>")
    return out


def scatterplot_svg(pobs: PseudoObservations, spec: PlotSpec | None = None) -> str:
    """Copula scatterplot of ``pobs`` on the unit square."""
    spec = spec or PlotSpec()
    pts = pobs.points
    if pts.size and (pts.min() < 0 or pts.max() > 1):
        raise ValueError("pseudo-observations must lie in the unit square")
    left, top, bottom, right = 44, 26, 36, 12
    body = _cell(pobs, left, top, spec.size, spec.size, spec.x_label, spec.y_label, spec.title)
    return _document(left + spec.size + right, top + spec.size + bottom, body)


# ---------------------------------------------------------------- panel grids


def fpt_cells(sample: FptSample) -> dict[tuple[int, int], PseudoObservations | None]:
    """Cell (i, j) holds pobs of (FPT_i, FPT_j); the diagonal is empty."""
    n = sample.n_neurons
    return {(i, j): None if i == j else pseudo_observations(sample.times[:, [i, j]])
            for i in range(n) for j in range(n)}


def case_cells(cases: CaseSet, target: int, direction: str):
    """
    Grid over the variables [T, Delta_p1, Delta_p2, ...] of one case, using
    only target spikes where every partner inter-time exists.
    """
    samples = cases.partners(target, direction)
    if not samples:
        raise KeyError((target, direction))
    T, deltas = aligned(samples)
    cols = [T] + deltas
    names = [neuron_label(target)] + [f"D_{neuron_label(s.partner)}" for s in samples]
    k = len(cols)
    cells = {(i, j): None if i == j else pseudo_observations(np.column_stack([cols[i], cols[j]]))
             for i in range(k) for j in range(k)}
    return cells, names


def _grid(cells, nrows, ncols, row_names, col_names, title, cell=150, gap=34, titles=None):
    left, top = 56, 40 + (14 if titles else 0)
    width = left + ncols * (cell + gap)
    height = top + nrows * (cell + gap) + 10
    body = []
    if title:
        body.append(f'<text x="{_f(width / 2)}" y="18" font-size="14" text-anchor="middle" {FONT}>{escape(title)}</text>')
    for r in range(nrows):
        for c in range(ncols):
            key = (r, c)
            if key not in cells:
                continue
            pobs = cells[key]
            x0 = left + c * (cell + gap)
            y0 = top + r * (cell + gap)
            body.append(f'<g class="cell" data-row="{r}" data-col="{c}" data-empty="{int(pobs is None)}">')
            body.extend(_cell(pobs, x0, y0, cell, cell, col_names[c], row_names[r],
                              title=(titles or {}).get(key, ""), ticks=False))
            body.append("</g>")
    return _document(width, height, body)


def panel_matrix(samples, target: int | None = None, direction: str | None = None, title: str = "") -> str:
    """
    Grid of scatterplots.

    * :class:`FptSample` -- N x N grid, empty diagonal, cell (i, j) plots
      FPT_i (x) against FPT_j (y).
    * 2-neuron :class:`CaseSet` -- 2 x 2 grid, rows A/B, columns FWD/BWD.
    * 3-neuron :class:`CaseSet` with ``target`` and ``direction`` -- 3 x 3
      grid over [T, D_p1, D_p2].
    """
    if isinstance(samples, FptSample):
        n = samples.n_neurons
        names = [f"({k + 1})" for k in range(n)]
        return _grid(fpt_cells(samples), n, n, names, names, title)
    if not isinstance(samples, CaseSet):
        raise TypeError(f"unsupported sample type {type(samples).__name__}")
    if samples.n_neurons == 2 and target is None:
        cells, titles = {}, {}
        for s in samples:
            key = (s.target, DIRECTIONS.index(s.direction))
            cells[key] = pseudo_observations(s.pairs)
            titles[key] = s.case
        return _grid(cells, 2, 2, ["U2"] * 2, ["U1"] * 2, title, titles=titles)
    if target is None or direction is None:
        raise ValueError("target and direction are required for networks of more than two neurons")
    cells, names = case_cells(samples, target, direction)
    k = len(names)
    return _grid(cells, k, k, names, names, title)


# ---------------------------------------------------------------- tables


def _tau_shown(s: DependenceSummary, alpha: float) -> float:
    return 0.0 if s.tau_p_value > alpha else s.kendall_tau


def dependence_table(summaries: list[DependenceSummary], alpha: float = 0.05) -> tuple[str, str]:
    """
    Aligned text table plus CSV text.

    In the text table a tau whose p-value exceeds ``alpha`` is printed as 0;
    the CSV keeps the raw value.
    """
    if not summaries:
        raise ValueError("no summaries to tabulate")
    w = max(5, *(len(s.label) for s in summaries))
    lines = [f"{'label':<{w}}  {'n':>6}  {'r':>7}  {'tau':>7}  {'rho':>7}  {'p(tau)':>8}"]
    for s in summaries:
        tau = _tau_shown(s, alpha)
        lines.append(f"{s.label:<{w}}  {s.n:>6d}  {s.pearson_r:>7.2f}  {tau:>7.2f}  "
                     f"{s.spearman_rho:>7.2f}  {s.tau_p_value:>8.2g}")
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["label", "n", "pearson_r", "kendall_tau", "spearman_rho", "tau_p_value"])
    for s in summaries:
        wr.writerow([s.label, s.n, f"{s.pearson_r:.4f}", f"{s.kendall_tau:.4f}",
                     f"{s.spearman_rho:.4f}", f"{s.tau_p_value:.4f}"])
    return "\n".join(lines) + "\n", buf.getvalue()


# ---------------------------------------------------------------- network diagram

_POSITIONS = {
    1: [(150.0, 110.0)],
    2: [(70.0, 110.0), (230.0, 110.0)],
    3: [(150.0, 45.0), (65.0, 190.0), (235.0, 190.0)],
}
NODE_R = 22.0


def network_diagram(spec: NetworkSpec, title: str = "") -> str:
    """
    Nodes at fixed positions; an arrowhead edge for each excitatory jump,
    a circle-terminated edge for each inhibitory one, labelled with |h| (mV).
    """
    n = spec.n
    if n not in _POSITIONS:
        raise ValueError("diagrams are drawn for 1-3 neurons")
    pos = _POSITIONS[n]
    body = [
        "<defs>",
        '<marker id="arrow" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="8" markerHeight="8" orient="auto">'
        '<path d="M0,0 L10,5 L0,10 z" fill="black"/></marker>',
        '<marker id="dot" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="8" markerHeight="8" orient="auto">'
        '<circle cx="5" cy="5" r="4" fill="white" stroke="black" stroke-width="1.5"/></marker>',
        "</defs>",
    ]
    if title:
        body.append(f'<text x="150" y="16" font-size="13" text-anchor="middle" {FONT}>{escape(title)}</text>')
    h = spec.jumps
    for i in range(n):
        for j in range(n):
            if i == j or h[i, j] == 0:
                continue
            (x1, y1), (x2, y2) = pos[i], pos[j]
            dx, dy = x2 - x1, y2 - y1
            dist = math.hypot(dx, dy)
            ux, uy = dx / dist, dy / dist
            # offset reciprocal edges so both stay visible
            off = 7.0 if h[j, i] != 0 else 0.0
            px, py = -uy * off, ux * off
            sx, sy = x1 + ux * NODE_R + px, y1 + uy * NODE_R + py
            ex, ey = x2 - ux * NODE_R + px, y2 - uy * NODE_R + py
            kind = "excitatory" if h[i, j] > 0 else "inhibitory"
            marker = "arrow" if h[i, j] > 0 else "dot"
            label = f"{abs(h[i, j]):g}"
            body.append(
                f'<line class="edge {kind}" data-source="{i + 1}" data-target="{j + 1}" data-h="{h[i, j]:g}" '
                f'x1="{_f(sx)}" y1="{_f(sy)}" x2="{_f(ex)}" y2="{_f(ey)}" stroke="black" stroke-width="1.5" '
                f'marker-end="url(#{marker})"/>')
            mx, my = (sx + ex) / 2 + px * 1.4, (sy + ey) / 2 + py * 1.4
            body.append(f'<text class="edge-label" x="{_f(mx)}" y="{_f(my)}" font-size="10" '
                        f'text-anchor="middle" {FONT}>{escape(label)}</text>')
    for k, (x, y) in enumerate(pos):
        body.append(f'<g class="node" data-neuron="{k + 1}">'
                    f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{NODE_R}" fill="white" stroke="black" stroke-width="1.5"/>'
                    f'<text x="{_f(x)}" y="{_f(y + 4)}" font-size="13" text-anchor="middle" {FONT}>'
                    f'{escape(f"({k + 1})")}</text></g>')
    return _document(300, 230, body)


__all__ = [
    "PlotSpec", "scatterplot_svg", "panel_matrix", "fpt_cells", "case_cells",
    "dependence_table", "network_diagram", "marker_opacity",
]
