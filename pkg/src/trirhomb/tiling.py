"""Tiles, prototiles and patches.

A patch is stored column-wise: per tile a prototile index, a placement
rotation (multiples of 60 degrees), a flip bit and an exact anchor in lift
coordinates.  ``Tile`` objects are built on demand as a read-only view.
"""
from __future__ import annotations

import os
import re
import tempfile
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterator, Mapping, Sequence

import numpy as np

from .geometry import (AngleParam, DegenerateTile, Direction, ExactPoint, as_angle, basis_xy,
                       motion_matrix, parse_point, polygon_area)


class ParseError(ValueError):
    def __init__(self, msg, line=None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


class UnresolvedPrototile(KeyError):
    pass


class TileKind(Enum):
    TRIANGLE = "triangle"
    RHOMBUS = "rhombus"


class TriangleClass(Enum):
    GREEN = "green"
    RED = "red"


class Color(Enum):
    BLACK = "B"
    WHITE = "W"

    @property
    def other(self) -> "Color":
        return Color.WHITE if self is Color.BLACK else Color.BLACK


class Arrow(Enum):
    FORWARD = "F"
    BACKWARD = "B"


def arrow_of(c: Color) -> Arrow:
    # black corners carry a forward arrow, white ones a backward arrow
    return Arrow.FORWARD if c is Color.BLACK else Arrow.BACKWARD


# shape templates in the base frame, counter-clockwise from the anchor
_TEMPLATES = {
    (TileKind.TRIANGLE, 0): [{}, {(0, 0): 1}, {(1, 0): 1}],
    (TileKind.TRIANGLE, 1): [{}, {(0, 1): 1}, {(1, 1): 1}],
    (TileKind.RHOMBUS, 0): [{}, {(0, 0): 1}, {(0, 0): 1, (0, 1): 1}, {(0, 1): 1}],
}


def shape_template(kind: TileKind, m: int) -> np.ndarray:
    """Lift offsets (n, 4) of a shape in its base frame."""
    return np.array([ExactPoint(t).to_lift() for t in _TEMPLATES[(kind, m)]], dtype=np.int64)


@dataclass(frozen=True)
class Prototile:
    """One decorated tile class.

    ``corners`` carries one colour per vertex; the colour of a corner also
    decorates the edge leaving it counter-clockwise.  ``base_rot`` rotates
    the shape template, used by variants whose classes only allow the
    rotations 0 and 180.
    """

    pid: str
    kind: TileKind
    tclass: TriangleClass | None
    corners: tuple
    base_rot: int = 0

    @property
    def m(self) -> int:
        return 1 if self.tclass is TriangleClass.RED else 0

    @property
    def nverts(self) -> int:
        return 3 if self.kind is TileKind.TRIANGLE else 4

    @cached_property
    def template(self) -> np.ndarray:
        """Vertex offsets (n, 4) with the base rotation applied."""
        return shape_template(self.kind, self.m) @ motion_matrix(self.base_rot, False).T

    def placed(self, rot: int, flip: bool) -> np.ndarray:
        """Offsets of the template moved by R_rot F^flip, counter-clockwise."""
        v = self.template @ motion_matrix(rot, flip).T
        if flip:
            v = np.concatenate([v[:1], v[1:][::-1]])
        return v

    def labels(self, flip: bool) -> tuple:
        if not flip:
            return self.corners
        # reflection reverses the edge order and swaps the colours
        return tuple(c.other for c in self.corners[::-1])


@dataclass(frozen=True)
class Decoration:
    prototile_id: str
    corner_labels: tuple
    arrows: tuple


@dataclass(frozen=True)
class Tile:
    id: int
    kind: TileKind
    anchor: ExactPoint
    orientation: Direction
    flipped: bool
    triangle_class: TriangleClass | None
    decoration: Decoration
    vertices: tuple

    def xy(self, alpha) -> np.ndarray:
        return np.array([v.eval(alpha) for v in self.vertices])

    def area(self, alpha) -> float:
        return float(polygon_area(self.xy(alpha)))

    def centroid(self, alpha) -> np.ndarray:
        return self.xy(alpha).mean(axis=0)


def tile_vertices(t: Tile, alpha=None, limit: bool = False) -> list[ExactPoint]:
    """Counter-clockwise exact vertices starting at the anchor.

    A rhombus at alpha 0 or 180 is refused unless ``limit`` is set.
    """
    if alpha is not None and t.kind is TileKind.RHOMBUS and as_angle(alpha).is_degenerate and not limit:
        raise DegenerateTile(f"rhombus at alpha = {as_angle(alpha)}")
    return list(t.vertices)


@dataclass(frozen=True)
class PatchMeta:
    variant: str
    alpha: AngleParam
    depth: int
    seed: str = ""

    def with_alpha(self, alpha) -> "PatchMeta":
        return PatchMeta(self.variant, as_angle(alpha), self.depth, self.seed)


class Patch:
    """Ordered, column-stored collection of placed prototiles."""

    def __init__(self, meta: PatchMeta, prototiles: Sequence[Prototile], proto, rot, flip, anchor):
        self.meta = meta
        self.prototiles = tuple(prototiles)
        self.proto = np.asarray(proto, dtype=np.int32)
        self.rot = np.asarray(rot, dtype=np.int8) % 6
        self.flip = np.asarray(flip, dtype=bool)
        self.anchor = np.asarray(anchor, dtype=np.int64).reshape(-1, 4)
        n = len(self.proto)
        if not (len(self.rot) == len(self.flip) == len(self.anchor) == n):
            raise ValueError("patch columns differ in length")

    # -- basic protocol
    def __len__(self):
        return len(self.proto)

    def __iter__(self) -> Iterator[Tile]:
        for i in range(len(self)):
            yield self.tile(i)

    def __getitem__(self, i) -> Tile:
        return self.tile(i)

    @property
    def alpha(self) -> AngleParam:
        return self.meta.alpha

    @property
    def tiles(self) -> list[Tile]:
        return list(self)

    def with_meta(self, meta: PatchMeta) -> "Patch":
        return Patch(meta, self.prototiles, self.proto, self.rot, self.flip, self.anchor)

    def subset(self, idx) -> "Patch":
        idx = np.asarray(idx)
        if idx.dtype != bool:
            idx = idx.astype(np.int64)
        return Patch(self.meta, self.prototiles, self.proto[idx], self.rot[idx],
                     self.flip[idx], self.anchor[idx])

    # -- per-prototile lookup tables
    @cached_property
    def _kind_arr(self) -> np.ndarray:
        return np.array([p.kind is TileKind.RHOMBUS for p in self.prototiles])

    @property
    def is_rhombus(self) -> np.ndarray:
        return self._kind_arr[self.proto] if len(self) else np.zeros(0, bool)

    @property
    def is_triangle(self) -> np.ndarray:
        return ~self.is_rhombus

    @property
    def m(self) -> np.ndarray:
        ms = np.array([p.m for p in self.prototiles], dtype=np.int8)
        return ms[self.proto]

    @property
    def base_rot(self) -> np.ndarray:
        b = np.array([p.base_rot for p in self.prototiles], dtype=np.int8)
        return b[self.proto]

    @property
    def frame(self) -> np.ndarray:
        """Rotation of the bare shape template, in multiples of 60 degrees."""
        b = self.base_rot
        return np.where(self.flip, self.rot - b, self.rot + b) % 6

    @cached_property
    def _offsets(self) -> dict:
        tab = {}
        for i, p in enumerate(self.prototiles):
            for r in range(6):
                for f in (False, True):
                    tab[(i, r, f)] = p.placed(r, f)
        return tab

    def groups(self) -> dict:
        """Tile indices split by vertex count: {3: idx, 4: idx}."""
        r = self.is_rhombus
        return {3: np.flatnonzero(~r), 4: np.flatnonzero(r)}

    def vertex_lift(self, idx) -> np.ndarray:
        """Exact vertices (n, nv, 4) of tiles ``idx`` which share a vertex count."""
        idx = np.asarray(idx)
        if len(idx) == 0:
            return np.zeros((0, 3, 4), dtype=np.int64)
        nv = self.prototiles[self.proto[idx[0]]].nverts
        out = np.empty((len(idx), nv, 4), dtype=np.int64)
        keys = self.proto[idx].astype(np.int64) * 12 + self.rot[idx].astype(np.int64) * 2 + self.flip[idx]
        for kk in np.unique(keys):
            sel = keys == kk
            i, rem = divmod(int(kk), 12)
            r, f = divmod(rem, 2)
            out[sel] = self._offsets[(i, r, bool(f))][None, :, :]
        out += self.anchor[idx][:, None, :]
        return out

    def vertex_xy(self, idx, alpha=None) -> np.ndarray:
        a = self.alpha if alpha is None else as_angle(alpha)
        return self.vertex_lift(idx).astype(float) @ basis_xy(a)

    def polygons(self, alpha=None) -> list[np.ndarray]:
        """Per-tile vertex arrays, in patch order."""
        out: list = [None] * len(self)
        for nv, idx in self.groups().items():
            xy = self.vertex_xy(idx, alpha)
            for j, i in enumerate(idx):
                out[i] = xy[j]
        return out

    def areas(self, alpha=None) -> np.ndarray:
        out = np.zeros(len(self))
        for nv, idx in self.groups().items():
            if len(idx):
                out[idx] = polygon_area(self.vertex_xy(idx, alpha))
        return out

    def centroids(self, alpha=None) -> np.ndarray:
        out = np.zeros((len(self), 2))
        for nv, idx in self.groups().items():
            if len(idx):
                out[idx] = self.vertex_xy(idx, alpha).mean(axis=1)
        return out

    def labels(self, i) -> tuple:
        return self.prototiles[self.proto[i]].labels(bool(self.flip[i]))

    def tile(self, i: int) -> Tile:
        i = int(i)
        if i < 0:
            i += len(self)
        p = self.prototiles[self.proto[i]]
        f = bool(self.flip[i])
        verts = self.vertex_lift([i])[0]
        labels = p.labels(f)
        return Tile(
            id=i,
            kind=p.kind,
            anchor=ExactPoint.from_lift(self.anchor[i]),
            orientation=Direction(int(self.frame[i]), p.m),
            flipped=f,
            triangle_class=p.tclass,
            decoration=Decoration(p.pid, labels, tuple(arrow_of(c) for c in labels)),
            vertices=tuple(ExactPoint.from_lift(v) for v in verts),
        )


def concat(patches: Sequence[Patch], meta: PatchMeta | None = None) -> Patch:
    first = patches[0]
    for p in patches[1:]:
        if p.prototiles != first.prototiles:
            raise ValueError("patches use different prototile tables")
    return Patch(meta or first.meta, first.prototiles,
                 np.concatenate([p.proto for p in patches]),
                 np.concatenate([p.rot for p in patches]),
                 np.concatenate([p.flip for p in patches]),
                 np.concatenate([p.anchor for p in patches]))


# ---------------------------------------------------------------------------
# text form

HEADER = "trirhomb-patch v1"
_HEADER_RE = re.compile(
    r"^trirhomb-patch v1 variant=(\S+) alpha=(\d+/\d+) depth=(\d+)(?: seed=(\S+))?$")
_TILE_RE = re.compile(
    r"^(triangle|rhombus) (-?\d+) (-?\d+) ([01]) (green|red|-) (\S+) anchor=(\{.*\})$")


def serialize_patch(p: Patch) -> str:
    m = p.meta
    head = f"{HEADER} variant={m.variant} alpha={m.alpha.text()} depth={m.depth}"
    if m.seed:
        head += f" seed={m.seed}"
    lines = [head]
    frame = p.frame
    for i in range(len(p)):
        pt = p.prototiles[p.proto[i]]
        cls = pt.tclass.value if pt.tclass else "-"
        lines.append(f"{pt.kind.value} {frame[i]} {pt.m} {int(p.flip[i])} {cls} {pt.pid} "
                     f"anchor={ExactPoint.from_lift(p.anchor[i]).text()}")
    return "\n".join(lines) + "\n"


def parse_patch(text: str, prototiles: Mapping[str, Prototile] | Sequence[Prototile]) -> Patch:
    """Read the text form.  ``prototiles`` resolves the ids used in tile lines."""
    if not isinstance(prototiles, Mapping):
        prototiles = {p.pid: p for p in prototiles}
    table = list(prototiles.values())
    index = {p.pid: i for i, p in enumerate(table)}
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty patch file", 1)
    mh = _HEADER_RE.match(lines[0].strip())
    if not mh:
        raise ParseError(f"bad header {lines[0]!r}", 1)
    try:
        alpha = as_angle(mh.group(2))
    except ValueError as exc:
        raise ParseError(str(exc), 1) from exc
    meta = PatchMeta(mh.group(1), alpha, int(mh.group(3)), mh.group(4) or "")
    proto, rot, flip, anchor = [], [], [], []
    for ln, line in enumerate(lines[1:], start=2):
        s = line.strip()
        if not s:
            continue
        mt = _TILE_RE.match(s)
        if not mt:
            raise ParseError(f"bad tile line {s!r}", ln)
        kind, k, m, f, cls, pid, a = mt.groups()
        if pid not in index:
            raise UnresolvedPrototile(f"line {ln}: unknown prototile {pid!r}")
        pt = table[index[pid]]
        if pt.kind.value != kind or pt.m != int(m) or (pt.tclass.value if pt.tclass else "-") != cls:
            raise ParseError(f"tile fields disagree with prototile {pid}", ln)
        try:
            pa = parse_point(a)
            lift = pa.to_lift()
        except ValueError as exc:
            raise ParseError(str(exc), ln) from exc
        fb = f == "1"
        # the file stores the frame of the bare shape; undo the base rotation
        r = (int(k) + pt.base_rot) if fb else (int(k) - pt.base_rot)
        proto.append(index[pid])
        rot.append(r % 6)
        flip.append(fb)
        anchor.append(lift)
    return Patch(meta, table, proto, rot, flip, np.array(anchor, dtype=np.int64).reshape(-1, 4))


def atomic_write(path, data: str | bytes) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# spatial index and vertex adjacency

VERTEX_TOL = 1e-9


def tile_area(t: Tile, alpha) -> float:
    return t.area(alpha)


@dataclass
class GridIndex:
    cell: float
    alpha: AngleParam
    cells: dict

    def __len__(self):
        return len(self.cells)

    def near(self, xmin, ymin, xmax, ymax) -> set:
        c = self.cell
        out: set = set()
        for i in range(int(np.floor(xmin / c)), int(np.floor(xmax / c)) + 1):
            for j in range(int(np.floor(ymin / c)), int(np.floor(ymax / c)) + 1):
                out.update(self.cells.get((i, j), ()))
        return out


def build_index(p: Patch, alpha=None, cell: float = 1.0) -> GridIndex:
    """Grid of cells; each tile is registered in every cell its bounding box touches."""
    if cell <= 0:
        raise ValueError("cell must be positive")
    a = p.alpha if alpha is None else as_angle(alpha)
    cells: dict = {}
    for i, xy in enumerate(p.polygons(a)):
        lo = np.floor(xy.min(axis=0) / cell).astype(int)
        hi = np.floor(xy.max(axis=0) / cell).astype(int)
        for cx in range(lo[0], hi[0] + 1):
            for cy in range(lo[1], hi[1] + 1):
                cells.setdefault((cx, cy), []).append(i)
    return GridIndex(float(cell), a, cells)


def vertex_clusters(points: np.ndarray, tol: float = VERTEX_TOL) -> np.ndarray:
    """Label array grouping points closer than ``tol`` (transitively)."""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components
    from scipy.spatial import cKDTree

    n = len(points)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    pairs = cKDTree(points).query_pairs(tol, output_type="ndarray")
    g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    return connected_components(g, directed=False)[1]


def vertex_sharing(p: Patch, alpha=None, tol: float = VERTEX_TOL) -> dict:
    """{(i, j): shared vertex count} for tiles i < j, numeric equality within ``tol``."""
    a = p.alpha if alpha is None else as_angle(alpha)
    polys = p.polygons(a)
    if not polys:
        return {}
    owners = np.concatenate([[i] * len(xy) for i, xy in enumerate(polys)]).astype(np.int64)
    lab = vertex_clusters(np.concatenate(polys), tol)
    order = np.lexsort((owners, lab))
    lab, owners = lab[order], owners[order]
    cuts = np.flatnonzero(np.diff(lab)) + 1
    out: dict = {}
    for grp in np.split(owners, cuts):
        ids = np.unique(grp)
        for x in range(len(ids)):
            for y in range(x + 1, len(ids)):
                key = (int(ids[x]), int(ids[y]))
                out[key] = out.get(key, 0) + 1
    return out


def neighbors(p: Patch, t: int, index: GridIndex | None = None, tol: float = VERTEX_TOL) -> list:
    """[(tile id, shared vertex count)] of tiles touching tile ``t``, sorted by id."""
    if index is None:
        index = build_index(p, p.alpha, 1.0)
    a = index.alpha
    mine = p.tile(t).xy(a)
    lo, hi = mine.min(axis=0) - tol, mine.max(axis=0) + tol
    out = []
    for j in sorted(index.near(lo[0], lo[1], hi[0], hi[1])):
        if j == t:
            continue
        other = p.tile(j).xy(a)
        d = np.linalg.norm(mine[:, None, :] - other[None, :, :], axis=2)
        shared = int((d.min(axis=1) <= tol).sum())
        if shared:
            out.append((j, shared))
    return out
