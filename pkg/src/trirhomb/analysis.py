"""Patch validation, census, period scan and the hexagon-centre structure."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .geometry import AngleParam, ExactPoint, as_angle, basis_xy, intersection_area
from .rules import Matching
from .tiling import VERTEX_TOL, Color, Patch, TileKind

AREA_TOL = 1e-9


@dataclass
class ValidationReport:
    alpha: AngleParam
    overlaps: list = field(default_factory=list)             # (i, j, area)
    gaps: list = field(default_factory=list)                 # ((x, y), area estimate)
    decoration_mismatches: list = field(default_factory=list)  # (i, j, (edge i, edge j))
    degenerate: list = field(default_factory=list)           # rhombi with zero area at alpha 0/180
    samples: int = 0

    @property
    def passed(self) -> bool:
        return not (self.overlaps or self.gaps or self.decoration_mismatches)

    def lines(self) -> list[str]:
        out = [f"validate alpha={self.alpha.text()} passed={int(self.passed)} overlaps={len(self.overlaps)} "
               f"gaps={len(self.gaps)} mismatches={len(self.decoration_mismatches)} "
               f"degenerate={len(self.degenerate)} samples={self.samples}"]
        out += [f"overlap {i} {j} {a:.3e}" for i, j, a in self.overlaps]
        out += [f"gap {x:.6f} {y:.6f} {a:.3e}" for (x, y), a in self.gaps]
        out += [f"mismatch {i} {j} edges={e[0]},{e[1]}" for i, j, e in self.decoration_mismatches]
        return out

    def to_json(self) -> str:
        d = {"alpha": self.alpha.text(), "passed": self.passed,
             "overlaps": [[int(i), int(j), float(a)] for i, j, a in self.overlaps],
             "gaps": [[[float(x), float(y)], float(a)] for (x, y), a in self.gaps],
             "decoration_mismatches": [[int(i), int(j), [int(e[0]), int(e[1])]]
                                       for i, j, e in self.decoration_mismatches],
             "degenerate": [int(i) for i in self.degenerate], "samples": self.samples}
        return json.dumps(d, sort_keys=True)


# ---------------------------------------------------------------------------
# overlaps

def _padded(p: Patch, a) -> np.ndarray:
    """(n, 4, 2) vertices; triangles repeat their last vertex."""
    out = np.zeros((len(p), 4, 2))
    for nv, idx in p.groups().items():
        if len(idx) == 0:
            continue
        xy = p.vertex_xy(idx, a)
        out[idx, :nv] = xy
        if nv == 3:
            out[idx, 3] = xy[:, 2]
    return out


def _normals(poly: np.ndarray) -> np.ndarray:
    e = np.roll(poly, -1, axis=1) - poly
    n = np.stack([-e[..., 1], e[..., 0]], axis=-1)
    ln = np.linalg.norm(n, axis=-1, keepdims=True)
    bad = ln[..., 0] < 1e-12
    n = np.where(ln > 1e-12, n / np.maximum(ln, 1e-300), 0.0)
    # zero-length padding edges borrow the first edge normal
    n[bad] = np.broadcast_to(n[:, :1], n.shape)[bad]
    return n


def _separated(pa: np.ndarray, pb: np.ndarray, na: np.ndarray, nb: np.ndarray, eps: float) -> np.ndarray:
    """SAT: True where the convex pair has disjoint interiors."""
    axes = np.concatenate([na, nb], axis=1)                      # (m, 8, 2)
    proj_a = np.einsum("mkd,mvd->mkv", axes, pa)
    proj_b = np.einsum("mkd,mvd->mkv", axes, pb)
    gap1 = proj_a.max(axis=2) <= proj_b.min(axis=2) + eps
    gap2 = proj_b.max(axis=2) <= proj_a.min(axis=2) + eps
    return (gap1 | gap2).any(axis=1)


def find_overlaps(p: Patch, a, tol: float = AREA_TOL) -> list:
    if len(p) < 2:
        return []
    poly = _padded(p, a)
    cen = poly.mean(axis=1)
    rad = np.linalg.norm(poly - cen[:, None, :], axis=2).max(axis=1)
    pairs = cKDTree(cen).query_pairs(2 * rad.max() + 1e-9, output_type="ndarray")
    if len(pairs) == 0:
        return []
    close = np.linalg.norm(cen[pairs[:, 0]] - cen[pairs[:, 1]], axis=1) <= rad[pairs[:, 0]] + rad[pairs[:, 1]] + 1e-9
    pairs = pairs[close]
    nrm = _normals(poly)
    out = []
    for s in range(0, len(pairs), 200_000):
        ch = pairs[s:s + 200_000]
        sep = _separated(poly[ch[:, 0]], poly[ch[:, 1]], nrm[ch[:, 0]], nrm[ch[:, 1]], 1e-9)
        for i, j in ch[~sep]:
            area = intersection_area(_trim(poly[i]), _trim(poly[j]))
            if area >= tol:
                out.append((int(min(i, j)), int(max(i, j)), area))
    return sorted(out)


def _trim(q: np.ndarray) -> np.ndarray:
    return q[:3] if np.allclose(q[3], q[2]) else q


# ---------------------------------------------------------------------------
# coverage raster

@dataclass
class Raster:
    """Counts of covering tiles at jittered sample lines.

    Samples sit on lines x = x0 + (i + u_i) h, at y = y0 + (j + v_i) h.
    """

    x0: float
    y0: float
    h: float
    u: np.ndarray
    v: np.ndarray
    count: np.ndarray   # (nx, ny)

    def xs(self) -> np.ndarray:
        return self.x0 + (np.arange(len(self.u)) + self.u) * self.h

    def point(self, i, j):
        return (self.x0 + (i + self.u[i]) * self.h, self.y0 + (j + self.v[i]) * self.h)


def _column_spans(poly: np.ndarray, xs: np.ndarray, rows: np.ndarray, eps: float):
    """y-interval of convex polygons ``poly[rows]`` on the vertical lines xs."""
    P = poly[rows]                          # (m, 4, 2)
    Q = np.roll(P, -1, axis=1)
    x1, y1, x2, y2 = P[..., 0], P[..., 1], Q[..., 0], Q[..., 1]
    c = xs[:, None]
    lo_x, hi_x = np.minimum(x1, x2), np.maximum(x1, x2)
    hit = (lo_x - eps <= c) & (c <= hi_x + eps)
    dx = x2 - x1
    flat = np.abs(dx) < 1e-12
    t = np.where(flat, 0.0, (c - x1) / np.where(flat, 1.0, dx))
    t = np.clip(t, 0.0, 1.0)
    y = y1 + t * (y2 - y1)
    ylo = np.where(hit, np.minimum(y, np.where(flat, np.minimum(y1, y2), y)), np.inf).min(axis=1)
    yhi = np.where(hit, np.maximum(y, np.where(flat, np.maximum(y1, y2), y)), -np.inf).max(axis=1)
    return ylo, yhi


def coverage_raster(poly: np.ndarray, h: float, rng, margin: float = 2.0, eps: float = 1e-9) -> Raster:
    """Rasterise convex polygons (n, 4, 2) onto jittered vertical sample lines."""
    lo = poly.reshape(-1, 2).min(axis=0) - margin
    hi = poly.reshape(-1, 2).max(axis=0) + margin
    nx = int(math.ceil((hi[0] - lo[0]) / h)) + 1
    ny = int(math.ceil((hi[1] - lo[1]) / h)) + 2
    u = rng.random(nx)
    v = rng.random(nx)
    xs = lo[0] + (np.arange(nx) + u) * h
    diff = np.zeros((nx, ny + 1), dtype=np.int32)
    pxmin = poly[..., 0].min(axis=1)
    pxmax = poly[..., 0].max(axis=1)
    i0 = np.clip(np.floor((pxmin - lo[0]) / h).astype(np.int64) - 1, 0, nx - 1)
    i1 = np.clip(np.ceil((pxmax - lo[0]) / h).astype(np.int64) + 1, 0, nx - 1)
    width = i1 - i0 + 1
    tiles = np.repeat(np.arange(len(poly)), width)
    cols = i0[tiles] + (np.arange(len(tiles)) - np.repeat(np.cumsum(width) - width, width))
    for s in range(0, len(tiles), 500_000):
        tt, cc = tiles[s:s + 500_000], cols[s:s + 500_000]
        ylo, yhi = _column_spans(poly, xs[cc], tt, eps)
        ok = np.isfinite(ylo) & np.isfinite(yhi)
        tt, cc, ylo, yhi = tt[ok], cc[ok], ylo[ok], yhi[ok]
        j0 = np.ceil((ylo - eps - lo[1]) / h - v[cc]).astype(np.int64)
        j1 = np.floor((yhi + eps - lo[1]) / h - v[cc]).astype(np.int64)
        keep = j1 >= j0
        j0 = np.clip(j0[keep], 0, ny)
        j1 = np.clip(j1[keep] + 1, 0, ny)
        np.add.at(diff, (cc[keep], j0), 1)
        np.add.at(diff, (cc[keep], j1), -1)
    count = np.cumsum(diff, axis=1)[:, :ny]
    return Raster(float(lo[0]), float(lo[1]), h, u, v, count)


def _seg_distance(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from each point to the nearest of the segments a[k] -> b[k]."""
    out = np.full(len(pts), np.inf)
    d = b - a
    dd = np.maximum((d * d).sum(axis=1), 1e-300)
    for s in range(0, len(pts), 2000):
        q = pts[s:s + 2000, None, :]
        t = np.clip(((q - a) * d).sum(axis=2) / dd, 0.0, 1.0)
        c = a + t[..., None] * d
        out[s:s + 2000] = np.sqrt(((q - c) ** 2).sum(axis=2)).min(axis=1)
    return out


def _inside(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Even-odd test against the closed edge set a[k] -> b[k]."""
    out = np.zeros(len(pts), dtype=bool)
    for s in range(0, len(pts), 2000):
        x = pts[s:s + 2000, 0:1]
        y = pts[s:s + 2000, 1:2]
        y1, y2 = a[:, 1], b[:, 1]
        cross = (y1 > y) != (y2 > y)
        xc = a[:, 0] + (y - y1) * (b[:, 0] - a[:, 0]) / np.where(y2 == y1, 1.0, y2 - y1)
        out[s:s + 2000] = ((cross & (xc > x)).sum(axis=1) % 2) == 1
    return out


def outline(p: Patch, a) -> tuple[np.ndarray, np.ndarray] | None:
    """Edges (start, end) bounding the patch from outside, numeric at ``a``.

    Boundary edges are those without a reversed partner.  They are chained
    into cycles turning as far right as possible at every vertex; cycles with
    positive area bound the patch, negative ones are holes and are left out.
    Returns None when the boundary does not close into cycles.
    """
    (e, f), (starts, ends, *_rest) = shared_edges(p)
    used = np.zeros(len(starts), dtype=bool)
    used[e] = used[f] = True
    bidx = np.flatnonzero(~used)
    if len(bidx) == 0:
        return None
    B = basis_xy(a)
    sx = starts[bidx].astype(float) @ B
    ex = ends[bidx].astype(float) @ B
    skey = [r.tobytes() for r in starts[bidx]]
    ekey = [r.tobytes() for r in ends[bidx]]
    out_of: dict = {}
    for k, key in enumerate(skey):
        out_of.setdefault(key, []).append(k)
    done = np.zeros(len(bidx), dtype=bool)
    keep = []
    for k0 in range(len(bidx)):
        if done[k0]:
            continue
        cyc, k = [], k0
        while not done[k]:
            done[k] = True
            cyc.append(k)
            opts = [j for j in out_of.get(ekey[k], []) if not done[j]]
            if not opts:
                break
            din = ex[k] - sx[k]
            # right-most turn relative to the incoming direction
            ang = [math.atan2(din[0] * (ex[j] - sx[j])[1] - din[1] * (ex[j] - sx[j])[0],
                              float(np.dot(din, ex[j] - sx[j]))) for j in opts]
            k = opts[int(np.argmin(ang))]
        if ekey[cyc[-1]] != skey[cyc[0]]:
            return None
        pts = sx[cyc]
        area = 0.5 * np.sum(pts[:, 0] * np.roll(pts[:, 1], -1) - np.roll(pts[:, 0], -1) * pts[:, 1])
        if area > 0:
            keep.extend(cyc)
    if not keep:
        return None
    return sx[keep], ex[keep]


def _gaps_from_raster(r: Raster, erode: float, hull) -> list:
    uncovered = r.count == 0
    lab, _ = ndimage.label(uncovered)
    border = np.unique(np.concatenate([lab[0], lab[-1], lab[:, 0], lab[:, -1]]))
    enclosed = uncovered & ~np.isin(lab, border)
    if not enclosed.any():
        return []
    ii, jj = np.nonzero(enclosed)
    pts = np.stack([r.x0 + (ii + r.u[ii]) * r.h, r.y0 + (jj + r.v[ii]) * r.h], axis=1)
    if hull is not None:
        a, b = hull
        ok = _inside(pts, a, b)
        ok[ok] = _seg_distance(pts[ok], a, b) >= erode
    else:
        depth = ndimage.distance_transform_edt(~uncovered | enclosed) * r.h
        ok = depth[ii, jj] >= erode
    holes = np.zeros_like(enclosed)
    holes[ii[ok], jj[ok]] = True
    lab, n = ndimage.label(holes, structure=np.ones((3, 3)))
    out = []
    for k in range(1, n + 1):
        sel = lab[ii[ok], jj[ok]] == k
        q = pts[ok][sel]
        out.append(((float(q[:, 0].mean()), float(q[:, 1].mean())), float(len(q) * r.h * r.h)))
    return out


def find_gaps(p: Patch, a, density: float = 400.0, seed: int = 0, erode: float = 1.0) -> tuple[list, int]:
    """Uncovered samples inside the patch outline, at least ``erode`` from it.

    Two orthogonal passes of jittered sample lines, each at ``density``
    samples per unit area.
    """
    if len(p) == 0:
        return [], 0
    h = 1.0 / math.sqrt(density)
    poly = _padded(p, a)
    hull = outline(p, a)
    rng = np.random.default_rng(seed)
    gaps, samples = [], 0
    for swap in (False, True):
        q = poly[..., ::-1] if swap else poly
        hh = hull if hull is None or not swap else (hull[0][:, ::-1], hull[1][:, ::-1])
        r = coverage_raster(q, h, rng)
        samples += r.count.size
        for (x, y), area in _gaps_from_raster(r, erode, hh):
            loc = (y, x) if swap else (x, y)
            if not any(math.hypot(loc[0] - g[0][0], loc[1] - g[0][1]) < 1.0 for g in gaps):
                gaps.append((loc, area))
    return sorted(gaps), samples


# ---------------------------------------------------------------------------
# decorations

def edge_table(p: Patch):
    """Directed edges: (start lift, end lift, tile, edge index, label, edge m)."""
    starts, ends, tile, eidx, lab = [], [], [], [], []
    for nv, idx in p.groups().items():
        if len(idx) == 0:
            continue
        v = p.vertex_lift(idx)
        w = np.roll(v, -1, axis=1)
        labels = np.array([[c is Color.WHITE for c in p.labels(i)] for i in idx], dtype=bool)
        starts.append(v.reshape(-1, 4))
        ends.append(w.reshape(-1, 4))
        tile.append(np.repeat(idx, nv))
        eidx.append(np.tile(np.arange(nv), len(idx)))
        lab.append(labels.reshape(-1))
    starts, ends = np.concatenate(starts), np.concatenate(ends)
    d = ends - starts
    # lift unit vectors with m = 1 have a nonzero (0,1) or (1,1) coefficient
    em = (d[:, 2] != 0) | (d[:, 3] != 0)
    return starts, ends, np.concatenate(tile), np.concatenate(eidx), np.concatenate(lab), em.astype(np.int8)


def _rowkeys(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.int64)
    return a.view(np.dtype((np.void, a.dtype.itemsize * a.shape[1]))).ravel()


def shared_edges(p: Patch):
    """Index pairs (e, f) of directed edges that are reverses of each other, e < f."""
    starts, ends, tile, eidx, lab, em = edge_table(p)
    fwd = _rowkeys(np.concatenate([starts, ends], axis=1))
    rev = _rowkeys(np.concatenate([ends, starts], axis=1))
    order = np.argsort(fwd)
    pos = np.searchsorted(fwd[order], rev)
    pos = np.clip(pos, 0, len(fwd) - 1)
    match = fwd[order][pos] == rev
    e = np.flatnonzero(match)
    f = order[pos[match]]
    keep = e < f
    return (e[keep], f[keep]), (starts, ends, tile, eidx, lab, em)


def find_mismatches(p: Patch, matching=None) -> list:
    if len(p) < 2:
        return []
    matching = matching or {}
    (e, f), (_, _, tile, eidx, lab, em) = shared_edges(p)
    out = []
    for a_, b_ in zip(e, f):
        mt = matching.get("green" if em[a_] == 0 else "red", Matching())
        same = lab[a_] == lab[b_]
        colour_ok = same if mt.colour == "equal" else not same
        # black arrows follow the tile's traversal; the traversals are opposite
        d1 = 1 if not lab[a_] else -1
        d2 = -(1 if not lab[b_] else -1)
        arrows_ok = (d1 != d2) if mt.arrows == "opposed" else (d1 == d2)
        if not (colour_ok and arrows_ok):
            i, j = int(tile[a_]), int(tile[b_])
            ei, ej = int(eidx[a_]), int(eidx[b_])
            if i > j:
                i, j, ei, ej = j, i, ej, ei
            out.append((i, j, (ei, ej)))
    return sorted(out)


def validate(p: Patch, alpha=None, matching=None, density: float = 400.0, seed: int = 0) -> ValidationReport:
    a = p.alpha if alpha is None else as_angle(alpha)
    rep = ValidationReport(a)
    if a.is_degenerate:
        rep.degenerate = [int(i) for i in np.flatnonzero(p.is_rhombus)]
    rep.overlaps = find_overlaps(p, a)
    rep.gaps, rep.samples = find_gaps(p, a, density, seed)
    rep.decoration_mismatches = find_mismatches(p, matching)
    return rep


# ---------------------------------------------------------------------------
# census

@dataclass
class Census:
    triangles: int
    rhombi: int
    green: int
    red: int
    orientations: dict      # (k, m, flipped) -> count
    prototiles: dict        # pid -> count
    total_area: float
    alpha: AngleParam

    @property
    def total(self) -> int:
        return self.triangles + self.rhombi

    def frequencies(self) -> tuple[float, float]:
        n = self.total
        return (self.triangles / n, self.rhombi / n) if n else (0.0, 0.0)

    def lines(self) -> list[str]:
        ft, fr = self.frequencies()
        out = [f"census alpha={self.alpha.text()} tiles={self.total} triangles={self.triangles} "
               f"rhombi={self.rhombi} green={self.green} red={self.red} area={self.total_area:.9f}",
               f"frequency triangle={ft:.9f} rhombus={fr:.9f}"]
        for (k, m, f), c in sorted(self.orientations.items()):
            out.append(f"orientation k={k} m={m} flipped={int(f)} count={c}")
        for pid, c in sorted(self.prototiles.items()):
            out.append(f"prototile {pid} count={c}")
        return out

    def to_json(self) -> str:
        d = asdict(self)
        d["alpha"] = self.alpha.text()
        d["orientations"] = {f"{k},{m},{int(f)}": c for (k, m, f), c in sorted(self.orientations.items())}
        return json.dumps(d, sort_keys=True)


def census(p: Patch, alpha=None) -> Census:
    a = p.alpha if alpha is None else as_angle(alpha)
    rh = p.is_rhombus
    m = p.m
    nt = int((~rh).sum())
    nr = int(rh.sum())
    red = int(((~rh) & (m == 1)).sum())
    keys = p.frame.astype(np.int64) * 4 + m.astype(np.int64) * 2 + p.flip
    orient = {}
    for kk, c in zip(*np.unique(keys, return_counts=True)):
        k, rem = divmod(int(kk), 4)
        orient[(k, rem // 2, bool(rem % 2))] = int(c)
    protos = {}
    for i, c in zip(*np.unique(p.proto, return_counts=True)):
        protos[p.prototiles[i].pid] = int(c)
    # exact by construction: triangle area is fixed, rhombus area is sin(alpha)
    area = nt * math.sqrt(3) / 4 + nr * math.sin(a.radians)
    return Census(nt, nr, nt - red, red, orient, protos, area, a)


# ---------------------------------------------------------------------------
# periodicity

def _signatures(p: Patch, a, decorated: bool) -> tuple[list, np.ndarray, np.ndarray]:
    """Translation-invariant key per tile, centroids and circumradii."""
    poly = p.polygons(a)
    keys, cen, rad = [], np.zeros((len(p), 2)), np.zeros(len(p))
    for i, xy in enumerate(poly):
        c = xy.mean(axis=0)
        d = xy - c
        r = np.round(d, 7) + 0.0
        labels = [c_.value for c_ in p.labels(i)] if decorated else [""] * len(xy)
        keys.append(tuple(sorted(zip(map(float, r[:, 0]), map(float, r[:, 1]), labels))))
        cen[i] = c
        rad[i] = np.linalg.norm(d, axis=1).max()
    return keys, cen, rad


def _outline_depth(p: Patch, a):
    """Callable giving (inside, distance to outline) for query points."""
    hull = outline(p, a)
    if hull is None:
        # no closed boundary: fall back to a filled raster and its EDT
        h = 0.05
        r = coverage_raster(_padded(p, a), h, np.random.default_rng(1))
        filled = ndimage.binary_fill_holes(r.count > 0)
        depth = ndimage.distance_transform_edt(filled) * h

        def at(pts, need=None):
            i = np.clip(np.round((pts[:, 0] - r.x0) / h - 0.5).astype(int), 0, depth.shape[0] - 1)
            j = np.clip(np.round((pts[:, 1] - r.y0) / h - 0.5).astype(int), 0, depth.shape[1] - 1)
            d = depth[i, j] - h
            return d > 0, d
        return at
    s, e = hull
    # densify the outline so a KD-tree gives distances to within 0.01
    seg = np.linalg.norm(e - s, axis=1)
    n = np.maximum(1, np.ceil(seg / 0.02).astype(int))
    k = np.repeat(np.arange(len(s)), n)
    frac = (np.arange(n.sum()) - np.repeat(np.cumsum(n) - n, n)) / np.repeat(n, n)
    tree = cKDTree(s[k] + (e - s)[k] * frac[:, None])
    ctree = cKDTree(p.centroids(a))

    def at(pts, need=-np.inf):
        d = tree.query(pts)[0] - 0.01
        inside = np.zeros(len(pts), dtype=bool)
        sel = np.flatnonzero(d >= need)
        # one edge length clear of the outline, a point is inside exactly when
        # some tile centroid is within 1 (no tile has a larger circumradius)
        far = d[sel] >= 1.0
        inside[sel[far]] = np.isfinite(ctree.query(pts[sel[far]], distance_upper_bound=1.0)[0])
        inside[sel[~far]] = _inside(pts[sel[~far]], s, e)
        return inside, d
    return at


def _offset_key(d: np.ndarray) -> np.ndarray:
    """One int64 per offset, equal for offsets that agree to 1e-7."""
    q = np.round(d * 1e7).astype(np.int64) + (1 << 30)
    return (q[:, 0] << 31) | q[:, 1]


def periodicity_scan(p: Patch, alpha=None, max_radius: float = 10.0, decorated: bool | None = None,
                     tol: float = VERTEX_TOL):
    """Shortest translation t (|t| <= max_radius) mapping the patch onto itself.

    Candidates are the offsets between tiles with the same signature (shape,
    orientation and, when ``decorated``, corner labels).  A candidate is a
    period when every tile whose translate lies inside the patch outline, at
    least |t| from it, lands on an identical tile.  Zero-area tiles (rhombi
    at the degenerate angles) are ignored.  Returns an (x, y) array or None.
    """
    a = p.alpha if alpha is None else as_angle(alpha)
    if decorated is None:
        decorated = not a.is_degenerate
    live = np.flatnonzero(np.abs(p.areas(a)) > AREA_TOL)
    if len(live) < 2:
        return None
    q = p.subset(live)
    keys, cen, rad = _signatures(q, a, decorated)
    kid = {k: i for i, k in enumerate(dict.fromkeys(keys))}
    codes = np.array([kid[k] for k in keys])
    diffs = []
    for c in range(len(kid)):
        cs = cen[codes == c]
        if len(cs) < 2:
            continue
        pairs = cKDTree(cs).query_pairs(max_radius + 1e-9, output_type="ndarray")
        if len(pairs):
            d = cs[pairs[:, 1]] - cs[pairs[:, 0]]
            d = np.concatenate([d, -d])
            _, first = np.unique(_offset_key(d), return_index=True)
            diffs.append(d[first])
    if not diffs:
        return None
    cand = np.concatenate(diffs)
    _, first = np.unique(_offset_key(cand), return_index=True)
    cand = cand[first]
    ln = np.hypot(cand[:, 0], cand[:, 1])
    keep = ln > 1e-6
    cand, ln = cand[keep], ln[keep]
    cand = cand[np.lexsort((cand[:, 1], cand[:, 0], np.round(ln, 9)))]
    # the outline comes from the full patch: collapsed rhombi still pair the
    # edges of their neighbours, so no slits open up at alpha 0 / 180
    where = _outline_depth(p, a)
    # test points per tile: corners and edge midpoints
    P = _padded(q, a)
    pts = np.concatenate([P, 0.5 * (P + np.roll(P, -1, axis=1))], axis=1)    # (n, 8, 2)
    # tiles whose own position is deep are tested first; a failure there is cheap
    inside0, d0 = where(cen, 1.0)
    order = np.argsort(-np.where(inside0, d0, -np.inf), kind="stable")
    chunks = [order[:64]] + [order[s:s + 4096] for s in range(64, len(order), 4096)]
    tree = cKDTree(cen)
    for t in cand:
        L = float(np.hypot(*t))
        good, used = True, 0
        for idx in chunks:
            # cheap bound first: a tile cannot be |t| deep unless its centroid is
            inside, d = where(cen[idx] + t, L - 0.02)
            idx = idx[inside & (d >= L - 0.02)]
            if len(idx) == 0:
                continue
            ins, dv = where((pts[idx] + t).reshape(-1, 2), L)
            must = (ins & (dv >= L)).reshape(len(idx), -1).all(axis=1)
            if not must.any():
                continue
            dist, j = tree.query(cen[idx[must]] + t, distance_upper_bound=max(tol, 1e-9) * 10)
            hit = np.isfinite(dist)
            jj = np.where(hit, j, 0)
            if not (hit & (codes[jj] == codes[idx[must]])).all():
                good = False
                break
            used += int(must.sum())
        if good and used:
            return np.array(t)
    return None


# ---------------------------------------------------------------------------
# hexagon-centre structure

class NotValidated(RuntimeError):
    pass


@dataclass
class StructureNode:
    center: ExactPoint
    tiles: tuple


@dataclass
class StructureGraph:
    alpha: AngleParam
    nodes: list
    edges: list                   # (u, v) node ids, u < v
    faces: list                   # (node id cycle, kind)
    distances: tuple = ()         # the distance values used for adjacency

    def centers(self, alpha=None) -> np.ndarray:
        a = self.alpha if alpha is None else as_angle(alpha)
        return np.array([n.center.eval(a) for n in self.nodes]).reshape(-1, 2)

    def face_kinds(self) -> dict:
        out: dict = {}
        for _, kind in self.faces:
            out[kind] = out.get(kind, 0) + 1
        return out

    def rhombus_angles(self) -> list[float]:
        """Distinct acute angles (degrees) of the rhombus faces."""
        xy = self.centers()
        out = []
        for cyc, kind in self.faces:
            if kind != "rhombus":
                continue
            q = xy[cyc]
            u, v = q[1] - q[0], q[-1] - q[0]
            ang = math.degrees(math.acos(np.clip(np.dot(u, v) / np.linalg.norm(u) / np.linalg.norm(v), -1, 1)))
            ang = min(ang, 180 - ang)
            if not any(abs(ang - x) < 1e-6 for x in out):
                out.append(ang)
        return sorted(out)

    def lines(self) -> list[str]:
        kinds = self.face_kinds()
        out = [f"structure alpha={self.alpha.text()} nodes={len(self.nodes)} edges={len(self.edges)} "
               f"faces={len(self.faces)} " + " ".join(f"{k}={v}" for k, v in sorted(kinds.items()))]
        out += [f"distance {d:.9f}" for d in self.distances]
        out += [f"rhombus_angle {x:.9f}" for x in self.rhombus_angles()]
        return out

    def to_json(self) -> str:
        return json.dumps({"alpha": self.alpha.text(), "nodes": [n.center.text() for n in self.nodes],
                           "edges": [list(map(int, e)) for e in self.edges],
                           "faces": [[list(map(int, c)), k] for c, k in self.faces],
                           "distances": list(self.distances)}, sort_keys=True)


def hexagon_centres(p: Patch) -> list[StructureNode]:
    """Vertices met by exactly six triangles and no rhombus (exact incidence)."""
    inc: dict = {}
    for nv, idx in p.groups().items():
        if len(idx) == 0:
            continue
        v = p.vertex_lift(idx)
        for row, i in enumerate(idx):
            for w in v[row]:
                inc.setdefault(w.tobytes(), []).append(int(i))
    rh = p.is_rhombus
    nodes = []
    for key, tiles in inc.items():
        if len(tiles) == 6 and not rh[tiles].any():
            nodes.append(StructureNode(ExactPoint.from_lift(np.frombuffer(key, dtype=np.int64)),
                                       tuple(sorted(tiles))))
    nodes.sort(key=lambda n: n.tiles)
    return nodes


def _faces(xy: np.ndarray, edges: list) -> list:
    """Bounded faces of a straight-line planar graph, as node cycles."""
    adj: dict = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    for u in adj:
        adj[u].sort(key=lambda w: math.atan2(xy[w][1] - xy[u][1], xy[w][0] - xy[u][0]))
    seen = set()
    faces = []
    for u0 in adj:
        for v0 in adj[u0]:
            if (u0, v0) in seen:
                continue
            cyc = []
            u, v = u0, v0
            while (u, v) not in seen:
                seen.add((u, v))
                cyc.append(u)
                # next edge: turn right-most around v, i.e. previous in ccw order
                nb = adj[v]
                k = nb.index(u)
                u, v = v, nb[(k - 1) % len(nb)]
            pts = xy[cyc]
            area = 0.5 * np.sum(pts[:, 0] * np.roll(pts[:, 1], -1) - np.roll(pts[:, 0], -1) * pts[:, 1])
            if area > 1e-9:
                faces.append(cyc)
    return faces


def _classify(pts: np.ndarray) -> str:
    n = len(pts)
    e = np.roll(pts, -1, axis=0) - pts
    ln = np.linalg.norm(e, axis=1)
    if n == 3:
        return "triangle"
    if n == 4 and np.ptp(ln) < 1e-6 * ln.max():
        return "rhombus"
    return f"polygon{n}"


def underlying_structure(p: Patch, alpha=None, report: ValidationReport | None = None,
                         k: int = 1, tol: float = 1e-6) -> StructureGraph:
    """Graph on hexagon centres, joined at the ``k`` smallest centre distances.

    k = 1 (nearest centres only) gives triangles and rhombi at every tested
    angle; k = 2 adds rhombus diagonals, which cross each other at 90 degrees.
    """
    a = p.alpha if alpha is None else as_angle(alpha)
    if report is None:
        report = validate(p, a)
    if not report.passed:
        raise NotValidated("patch failed validation")
    nodes = hexagon_centres(p)
    xy = np.array([n.center.eval(a) for n in nodes]).reshape(-1, 2)
    if len(nodes) < 2:
        return StructureGraph(a, nodes, [], [], ())
    tree = cKDTree(xy)
    kk = min(len(nodes), 16)
    d, _ = tree.query(xy, k=kk)
    vals = np.sort(d[:, 1:].ravel())
    levels = []
    for x in vals:
        if not levels or x - levels[-1] > tol:
            levels.append(float(x))
        if len(levels) == k:
            break
    pairs = tree.query_pairs(levels[-1] + tol, output_type="ndarray")
    dist = np.linalg.norm(xy[pairs[:, 0]] - xy[pairs[:, 1]], axis=1)
    keep = np.zeros(len(pairs), dtype=bool)
    for L in levels:
        keep |= np.abs(dist - L) <= tol
    edges = sorted((int(u), int(v)) for u, v in pairs[keep])
    faces = [(cyc, _classify(xy[cyc])) for cyc in _faces(xy, edges)]
    return StructureGraph(a, nodes, edges, faces, tuple(levels))
