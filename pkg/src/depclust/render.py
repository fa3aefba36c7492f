"""Static SVG rendering of a dendrogram."""
from __future__ import annotations

from xml.sax.saxutils import escape

from .clustering import Dendrogram, Key

_W, _H = 640.0, 400.0
_LEFT, _RIGHT, _TOP, _BOTTOM = 60.0, 20.0, 30.0, 70.0


def _f(x: float) -> str:
    return f"{x:.6f}"


def leaf_order(dendrogram: Dendrogram) -> list[int]:
    children: dict[Key, tuple[Key, Key]] = {mg.key: (mg.left, mg.right) for mg in dendrogram.merges}

    def walk(key: Key) -> list[int]:
        if key in children:
            left, right = children[key]
            return walk(left) + walk(right)
        return [key[0]]

    if not dendrogram.merges:
        return [0]
    return walk(dendrogram.merges[-1].key)


def dendrogram_svg(dendrogram: Dendrogram, title: str = "") -> str:
    """Heights on the vertical axis; merges are drawn at their recorded
    heights even when they are lower than an earlier merge."""
    order = leaf_order(dendrogram)
    m = dendrogram.m
    plot_w = _W - _LEFT - _RIGHT
    plot_h = _H - _TOP - _BOTTOM
    top = max([mg.height for mg in dendrogram.merges] + [1e-12])
    bottom = min([mg.height for mg in dendrogram.merges] + [0.0])
    span = top - bottom

    def y_of(h: float) -> float:
        return _TOP + (top - h) / span * plot_h

    x: dict[Key, float] = {}
    y: dict[Key, float] = {}
    for pos, j in enumerate(order):
        x[(j,)] = _LEFT + (pos + 0.5) * plot_w / m
        y[(j,)] = y_of(0.0)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(_W)}" height="{_f(_H)}" '
           f'viewBox="0 0 {_f(_W)} {_f(_H)}">',
           '<rect width="100%" height="100%" fill="white"/>']
    if title:
        out.append(f'<text x="{_f(_W / 2)}" y="{_f(18.0)}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="13">{escape(title)}</text>')
    # vertical axis with five ticks
    out.append(f'<line x1="{_f(_LEFT - 10)}" y1="{_f(_TOP)}" x2="{_f(_LEFT - 10)}" '
               f'y2="{_f(_TOP + plot_h)}" stroke="black"/>')
    for i in range(5):
        h = bottom + span * i / 4
        yy = y_of(h)
        out.append(f'<line x1="{_f(_LEFT - 14)}" y1="{_f(yy)}" x2="{_f(_LEFT - 10)}" '
                   f'y2="{_f(yy)}" stroke="black"/>')
        out.append(f'<text x="{_f(_LEFT - 16)}" y="{_f(yy + 4)}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="10">{h:.3f}</text>')
    for mg in dendrogram.merges:
        a, b = mg.left, mg.right
        hy = y_of(mg.height)
        for c in (a, b):
            out.append(f'<line x1="{_f(x[c])}" y1="{_f(y[c])}" x2="{_f(x[c])}" y2="{_f(hy)}" '
                       f'stroke="steelblue"/>')
        out.append(f'<line x1="{_f(x[a])}" y1="{_f(hy)}" x2="{_f(x[b])}" y2="{_f(hy)}" '
                   f'stroke="steelblue"/>')
        x[mg.key] = (x[a] + x[b]) / 2.0
        y[mg.key] = hy
    base = y_of(0.0)
    for j in order:
        out.append(f'<text x="{_f(x[(j,)])}" y="{_f(base + 16)}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="11">'
                   f'{escape(dendrogram.leaf_labels[j])}</text>')
    if dendrogram.has_inversions():
        out.append(f'<text x="{_f(_LEFT)}" y="{_f(_H - 12)}" font-family="sans-serif" '
                   f'font-size="11" fill="firebrick">warning: merge heights are not monotone '
                   f'(inversions drawn as recorded)</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
