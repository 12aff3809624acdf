"""SVG output: patches, decorations, structure overlays and alpha sweeps.

Everything is plain string formatting with fixed 6-decimal coordinates, so
identical inputs give byte-identical documents.  The y axis is flipped once,
on the outer group, so the numbers written are the mathematical coordinates.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path

import numpy as np

from .geometry import AngleParam, as_angle
from .tiling import Arrow, Color, Patch, arrow_of, atomic_write

PRECISION = 6


class EmptyPatch(ValueError):
    pass


class MismatchedGraph(ValueError):
    pass


class ColorBy(Enum):
    KIND = "kind"
    CLASS = "class"
    ORIENTATION = "orientation"
    NONE = "none"


DEFAULT_PALETTE = {
    "green": "#5aa357",
    "red": "#d25b4b",
    "triangle": "#e9c46a",
    "rhombus": "#c9c9c9",
    "glue": "#2b2b2b",
    "plain": "#ffffff",
    "stroke": "#1e1e1e",
    "node": "#1f4e9c",
    "edge": "#1f4e9c",
    "dot_B": "#000000",
    "dot_W": "#ffffff",
    "arrow": "#404040",
}

# twelve orientation colours, indexed by (frame, flip)
_ORIENT = ("#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02",
           "#a6761d", "#666666", "#1f78b4", "#b2df8a", "#fb9a99", "#cab2d6")


@dataclass(frozen=True)
class StyleSpec:
    show_decorations: bool = False
    color_by: ColorBy = ColorBy.CLASS
    show_structure_overlay: bool = False
    glue_mode: bool = False
    stroke_width: float = 0.02
    palette: dict = field(default_factory=lambda: dict(DEFAULT_PALETTE))

    def __post_init__(self):
        if not isinstance(self.color_by, ColorBy):
            object.__setattr__(self, "color_by", ColorBy(str(self.color_by).lower()))

    def colour(self, key: str) -> str:
        return self.palette.get(key, DEFAULT_PALETTE[key])


@dataclass(frozen=True)
class SweepSpec:
    alpha_start: AngleParam
    alpha_end: AngleParam
    frames: int
    easing: str = "linear"

    def __post_init__(self):
        object.__setattr__(self, "alpha_start", as_angle(self.alpha_start))
        object.__setattr__(self, "alpha_end", as_angle(self.alpha_end))
        if self.frames < 2:
            raise ValueError("a sweep needs at least 2 frames")
        if self.easing != "linear":
            raise ValueError(f"unknown easing {self.easing!r}")

    def alphas(self) -> list[AngleParam]:
        a0, a1 = self.alpha_start.degrees, self.alpha_end.degrees
        n = self.frames - 1
        return [AngleParam(a0 + (a1 - a0) * Fraction(i, n)) for i in range(self.frames)]


def _num(x: float) -> str:
    s = f"{x:.{PRECISION}f}"
    return "0.000000" if s == "-0.000000" else s


def _pts(xy: np.ndarray) -> str:
    return " ".join(f"{_num(x)},{_num(y)}" for x, y in xy)


def _bbox(polys: list) -> tuple:
    allp = np.concatenate(polys)
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = np.maximum(hi - lo, 1e-6)
    pad = 0.05 * span
    return lo - pad, hi + pad


def _fill(p: Patch, i: int, s: StyleSpec, degenerate: bool) -> tuple[str, str]:
    """(css classes, fill colour) for tile i."""
    proto = p.prototiles[p.proto[i]]
    rh = proto.tclass is None
    cls = ["tile", "rhombus" if rh else "triangle"]
    if not rh:
        cls.append(proto.tclass.value)
    if rh and (s.glue_mode or degenerate):
        cls.append("glue")
    if rh and degenerate:
        return " ".join(cls), "none"
    if rh and s.glue_mode:
        return " ".join(cls), s.colour("glue")
    cb = s.color_by
    if cb is ColorBy.NONE:
        col = s.colour("plain")
    elif cb is ColorBy.KIND:
        col = s.colour("rhombus" if rh else "triangle")
    elif cb is ColorBy.CLASS:
        col = s.colour("rhombus") if rh else s.colour(proto.tclass.value)
    else:
        k = (int(p.frame[i]) % 6) * 2 + int(p.flip[i])
        col = _ORIENT[k]
    return " ".join(cls), col


def _decorations(xy: np.ndarray, labels: tuple, s: StyleSpec) -> list[str]:
    out = []
    c = xy.mean(axis=0)
    n = len(xy)
    r = 0.06
    for v in range(n):
        dot = xy[v] + 0.22 * (c - xy[v])
        col = s.colour("dot_B") if labels[v] is Color.BLACK else s.colour("dot_W")
        out.append(f'<circle class="dot" cx="{_num(dot[0])}" cy="{_num(dot[1])}" r="{_num(r)}" fill="{col}"/>')
    for v in range(n):
        a, b = xy[v], xy[(v + 1) % n]
        d = b - a
        ln = float(np.hypot(*d))
        if ln < 1e-9:
            continue
        d = d / ln
        if arrow_of(labels[v]) is Arrow.BACKWARD:
            d = -d
        m = 0.5 * (a + b)
        inward = c - m
        nrm = float(np.hypot(*inward))
        inward = inward / nrm if nrm > 1e-12 else np.zeros(2)
        m = m + 0.08 * inward
        tip = m + 0.08 * d
        wing = np.array([-d[1], d[0]]) * 0.05
        tri = np.array([tip, m - 0.05 * d + wing, m - 0.05 * d - wing])
        out.append(f'<polygon class="arrow" points="{_pts(tri)}" fill="{s.colour("arrow")}"/>')
    return out


def _style_block(s: StyleSpec) -> str:
    w = _num(s.stroke_width)
    rules = [
        f".tile{{stroke:{s.colour('stroke')};stroke-width:{w};stroke-linejoin:round}}",
        f".glue{{stroke:{s.colour('glue')};stroke-width:{_num(max(s.stroke_width, 0.04))}}}",
        f".node{{fill:{s.colour('node')}}}",
        f".edge{{stroke:{s.colour('edge')};stroke-width:{_num(2 * s.stroke_width)}}}",
    ]
    return "<style type=\"text/css\">" + "".join(rules) + "</style>"


def _document(p: Patch, a: AngleParam, s: StyleSpec, body_extra: list[str] | None = None,
              tile_opacity: str | None = None) -> str:
    if len(p) == 0:
        raise EmptyPatch("nothing to render")
    polys = p.polygons(a)
    degenerate = a.is_degenerate
    lo, hi = _bbox(polys)
    w, h = hi - lo
    head = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="{_num(lo[0])} {_num(-hi[1])} {_num(w)} {_num(h)}">',
        f"<title>trirhomb {p.meta.variant} alpha={a.text()} depth={p.meta.depth} tiles={len(p)}</title>",
        _style_block(s),
        '<g transform="scale(1,-1)">',
    ]
    op = f' opacity="{tile_opacity}"' if tile_opacity else ""
    body = [f'<g class="tiles"{op}>']
    for i, xy in enumerate(polys):
        cls, fill = _fill(p, i, s, degenerate)
        body.append(f'<polygon id="t{i}" class="{cls}" points="{_pts(xy)}" fill="{fill}"/>')
    body.append("</g>")
    if s.show_decorations:
        body.append('<g class="decorations">')
        for i, xy in enumerate(polys):
            body.extend(_decorations(xy, p.labels(i), s))
        body.append("</g>")
    if body_extra:
        body.extend(body_extra)
    return "\n".join(head + body + ["</g>", "</svg>", ""])


def render_svg(p: Patch, alpha=None, style: StyleSpec | None = None) -> str:
    """One polygon element per tile, in patch order."""
    a = p.alpha if alpha is None else as_angle(alpha)
    s = style or StyleSpec()
    if s.show_structure_overlay:
        from .analysis import underlying_structure
        return render_structure(p, underlying_structure(p, a), a, s)
    return _document(p, a, s)


def render_structure(p: Patch, g, alpha=None, style: StyleSpec | None = None) -> str:
    """Tiling at reduced opacity with the hexagon-centre graph drawn on top."""
    a = p.alpha if alpha is None else as_angle(alpha)
    s = style or StyleSpec()
    n = len(p)
    for node in g.nodes:
        if any(t < 0 or t >= n for t in node.tiles):
            raise MismatchedGraph("structure graph refers to tiles not in the patch")
    xy = np.array([node.center.eval(a) for node in g.nodes]).reshape(-1, 2)
    extra = ['<g class="structure">']
    for u, v in g.edges:
        extra.append(f'<line class="edge" x1="{_num(xy[u][0])}" y1="{_num(xy[u][1])}" '
                     f'x2="{_num(xy[v][0])}" y2="{_num(xy[v][1])}"/>')
    for i, c in enumerate(xy):
        extra.append(f'<circle class="node" id="n{i}" cx="{_num(c[0])}" cy="{_num(c[1])}" r="{_num(0.18)}"/>')
    extra.append("</g>")
    return _document(p, a, s, extra, tile_opacity="0.35")


def render_sweep(p: Patch, sw: SweepSpec, style: StyleSpec | None = None) -> list[str]:
    """Frame i drawn at the i-th linearly interpolated alpha."""
    return [render_svg(p, a, style) for a in sw.alphas()]


def write_sweep(directory, p: Patch, sw: SweepSpec, style: StyleSpec | None = None) -> list[Path]:
    """frame_0000.svg ... plus manifest.txt (frame -> exact alpha)."""
    d = Path(directory)
    os.makedirs(d, exist_ok=True)
    paths, manifest = [], []
    for i, (a, doc) in enumerate(zip(sw.alphas(), render_sweep(p, sw, style))):
        name = f"frame_{i:04d}.svg"
        atomic_write(d / name, doc)
        paths.append(d / name)
        manifest.append(f"{name} alpha={a.text()}")
    atomic_write(d / "manifest.txt", "\n".join(manifest) + "\n")
    return paths
