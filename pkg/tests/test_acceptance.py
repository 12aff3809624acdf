"""Acceptance suite: one test (and one printed PASS/FAIL line) per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.spatial import cKDTree

from conftest import ALPHAS, VARIANTS, patch, report, ruleset
from trirhomb import analysis, render
from trirhomb.engine import GenerationConfig, generate, reparameterize
from trirhomb.geometry import AngleParam
from trirhomb.rules import check_ruleset, perron_frequencies, substitution_matrix
from trirhomb.tiling import serialize_patch, vertex_sharing


def _interior_angles(xy):
    out = []
    n = len(xy)
    for i in range(n):
        u = xy[(i + 1) % n] - xy[i]
        v = xy[i - 1] - xy[i]
        c = np.dot(u, v) / np.linalg.norm(u) / np.linalg.norm(v)
        out.append(math.degrees(math.acos(np.clip(c, -1, 1))))
    return out


# -- 1 ----------------------------------------------------------------------

def test_criterion_01_rule_consistency():
    bad = []
    for v, count in (("R28", 28), ("R12", 12), ("R6", 6)):
        for a in ALPHAS:
            rs = ruleset(v, a)
            rep = check_ruleset(rs)
            if len(rs.rules) != count or not rep.passed:
                bad.append(f"{v}@{a}: rules={len(rs.rules)} violations={len(rep.violations)}")
    report(1, "rule consistency", not bad, "; ".join(bad))
    assert not bad


# -- 2 ----------------------------------------------------------------------

class Z3:
    """a + b*sqrt(3) with rational a, b."""

    def __init__(self, a, b=0):
        self.a, self.b = Fraction(a), Fraction(b)

    def __mul__(self, o):
        return Z3(self.a * o.a + 3 * self.b * o.b, self.a * o.b + self.b * o.a)


def square_triangle_counts(depth, seed="triangle"):
    """Tile counts of the square-triangle tiling at equal area.

    A patch of unit squares (area 1) and unit triangles (area sqrt(3)/4) with
    total area a + b sqrt(3) must hold exactly a squares and 4b triangles,
    since 1 and sqrt(3) are linearly independent over Q.  The five-rule
    square-triangle substitution has linear factor 2 + sqrt(3), so its
    supertile of a triangle at level d has area (2 + sqrt(3))^(2d) * sqrt(3)/4.
    """
    lam2 = Z3(7, 4)
    area = Z3(0, Fraction(1, 4)) if seed == "triangle" else Z3(1, 0)
    for _ in range(depth):
        area = area * lam2
    return int(4 * area.b), int(area.a)


def test_criterion_02_square_triangle_anchoring():
    bad = []
    for v in VARIANTS:
        p = patch(v, 90, 3)
        polys = p.polygons(90)
        for i in np.flatnonzero(p.is_rhombus):
            ang = _interior_angles(polys[i])
            if max(abs(x - 90) for x in ang) > 1e-9:
                bad.append(f"{v}: tile {i} angles {ang}")
                break
        for d in range(4):
            c = analysis.census(patch(v, 90, d))
            want = square_triangle_counts(d)
            if (c.triangles, c.rhombi) != want:
                bad.append(f"{v} depth {d}: {(c.triangles, c.rhombi)} vs {want}")
    report(2, "square-triangle anchoring", not bad, "; ".join(bad))
    assert not bad


# -- 3 ----------------------------------------------------------------------

def test_criterion_03_patch_validity():
    bad = []
    for v in VARIANTS:
        for a in ALPHAS:
            p = patch(v, a, 4)
            rep = analysis.validate(p, a, ruleset(v, a).matching)
            if not rep.passed:
                bad.append(f"{v}@{a}: {rep.lines()[0]}")
    report(3, "patch validity (depth 4)", not bad, "; ".join(bad))
    assert not bad


# -- 4 ----------------------------------------------------------------------

def test_criterion_04_area_inflation():
    worst = {}
    for v in VARIANTS:
        for a in ALPHAS:
            lam2 = ruleset(v, a).inflation_factor ** 2
            for d in range(4):
                a0 = patch(v, a, d).areas(a).sum()
                a1 = patch(v, a, d + 1).areas(a).sum()
                err = abs(a1 / a0 - lam2) / lam2
                worst[a] = max(worst.get(a, 0.0), err)
    failing = {a: e for a, e in worst.items() if e > 1e-9}
    detail = ", ".join(f"alpha={a}: rel.err {e:.2e}" for a, e in sorted(failing.items()))
    report(4, "area inflation", not failing, detail)
    assert not failing, detail


# -- 5 ----------------------------------------------------------------------

def test_criterion_05_frequency_convergence():
    bad = []
    for v in VARIANTS:
        rs = ruleset(v, 36)
        ft, fr, ev = perron_frequencies(substitution_matrix(rs).collapsed)
        p = generate(GenerationConfig(6, v, 36), rs)
        c = analysis.census(p)
        got_t, got_r = c.frequencies()
        del p
        if abs(got_t - ft) > 0.02 * ft or abs(got_r - fr) > 0.02 * fr:
            bad.append(f"{v}: frequencies {got_t:.5f}/{got_r:.5f} vs {ft:.5f}/{fr:.5f}")
        for a in ALPHAS:
            lam2 = ruleset(v, a).inflation_factor ** 2
            if abs(ev - lam2) > 1e-9:
                bad.append(f"{v}@{a}: eigenvalue {ev:.9f} vs lambda^2 {lam2:.9f}")
    report(5, "frequency convergence", not bad, "; ".join(bad))
    assert not bad


# -- 6 ----------------------------------------------------------------------

def test_criterion_06_variable_geometry():
    bad = []
    for v in VARIANTS:
        p60 = patch(v, 60, 4)
        p36 = patch(v, 36, 4)
        q = reparameterize(p60, 36)
        c1, c2 = analysis.census(q), analysis.census(p36)
        if (c1.triangles, c1.rhombi, c1.green, c1.red, c1.orientations, c1.prototiles) != \
           (c2.triangles, c2.rhombi, c2.green, c2.red, c2.orientations, c2.prototiles):
            bad.append(f"{v}: census differs")
        # both patches start from the same seed frame, so no extra alignment is needed
        x1 = np.concatenate(q.polygons())
        x2 = np.concatenate(p36.polygons())
        if x1.shape != x2.shape or np.abs(x1 - x2).max() > 1e-9:
            bad.append(f"{v}: coordinates differ")
        back = reparameterize(reparameterize(p60, 10), 60)
        y1 = np.concatenate(back.polygons())
        y0 = np.concatenate(p60.polygons())
        if np.abs(y1 - y0).max() > 1e-12:
            bad.append(f"{v}: round trip 60->10->60 off by {np.abs(y1 - y0).max():.2e}")
        g60 = vertex_sharing(patch(v, 60, 3))
        g36 = vertex_sharing(reparameterize(patch(v, 60, 3), 36))
        g10 = vertex_sharing(reparameterize(patch(v, 60, 3), 10))
        if not (g60 == g36 == g10):
            bad.append(f"{v}: vertex-sharing graph changes")
    report(6, "variable geometry", not bad, "; ".join(bad))
    assert not bad


# -- 7 ----------------------------------------------------------------------

def test_criterion_07_rhombus_uniformity():
    bad = []
    for v in VARIANTS:
        for a in ALPHAS:
            for d in range(5):
                p = patch(v, a, d)
                idx = np.flatnonzero(p.is_rhombus)
                if len(idx) == 0:
                    continue
                xy = p.vertex_xy(idx, a)
                u = xy[:, 1] - xy[:, 0]
                w = xy[:, 3] - xy[:, 0]
                cos = (u * w).sum(axis=1) / np.linalg.norm(u, axis=1) / np.linalg.norm(w, axis=1)
                ang = np.degrees(np.arccos(np.clip(cos, -1, 1)))
                # the anchor corner is either the alpha corner or its supplement
                dev = np.minimum(np.abs(ang - a), np.abs(ang - (180 - a))).max()
                if dev > 1e-9:
                    bad.append(f"{v}@{a} depth {d}: deviation {dev:.2e}")
    report(7, "rhombus uniformity", not bad, "; ".join(bad))
    assert not bad


# -- 8 ----------------------------------------------------------------------

def _canon(xy):
    """Vertex set in a fixed order (lexicographic on rounded coordinates)."""
    r = np.round(xy, 6)
    out = xy[np.lexsort((r[:, 1], r[:, 0]))]
    return np.concatenate([out, np.repeat(out[-1:], 4 - len(out), axis=0)])


def exhaustive_period(p, a, max_radius, decorated=True):
    """Reference search: every offset between identically decorated,
    identically oriented tiles is tried against every tile of the patch.

    Independent of analysis.periodicity_scan: the hull is the exact union of
    the tiles (shapely) and a tile only counts when its translate lies in
    the hull at distance >= |t| from the hull boundary.
    """
    import shapely
    from shapely.geometry import Polygon

    polys = p.polygons(a)
    live = np.array([i for i in range(len(p)) if abs(Polygon(polys[i]).area) > 1e-9])
    cen = np.array([polys[i].mean(axis=0) for i in live])
    canon = np.array([_canon(polys[i]) for i in live])
    if decorated:
        sig = np.array([hash((int(p.proto[i]), int(p.frame[i]) % 6, bool(p.flip[i]))) for i in live])
    else:
        # shape only: the canonical vertex offsets from the centroid
        sig = np.array([hash(tuple(np.round(c - c.mean(axis=0), 6).ravel() + 0.0)) for c in canon])
    cands = {}
    for s_ in np.unique(sig):
        cs = cen[sig == s_]
        for i, j in cKDTree(cs).query_pairs(max_radius + 1e-9):
            for t in (cs[j] - cs[i], cs[i] - cs[j]):
                key = (round(float(t[0]), 7) + 0.0, round(float(t[1]), 7) + 0.0)
                cands.setdefault(key, (float(t[0]), float(t[1])))
    geoms = np.array([Polygon(polys[i]) for i in live])
    union = shapely.unary_union(geoms)
    edge = union.boundary
    shapely.prepare(union)
    tree = cKDTree(cen)
    # boundary densified to 0.02 spacing, for a quick distance bound
    bpts = [np.asarray(g.coords) for g in getattr(edge, "geoms", [edge])]
    dense = []
    for b_ in bpts:
        for u, w in zip(b_[:-1], b_[1:]):
            n = max(1, int(np.ceil(np.hypot(*(w - u)) / 0.02)))
            dense.append(u + (w - u) * np.arange(n)[:, None] / n)
    btree = cKDTree(np.concatenate(dense))
    # deep tiles first, so that a failing tile is usually met early
    order = np.argsort(-shapely.distance(edge, shapely.points(cen)))
    chunks = [order[:64]] + [order[s:s + 2048] for s in range(64, len(order), 2048)]
    best = None
    for key in sorted(cands, key=lambda t: (round(math.hypot(*t), 9), t)):
        t = cands[key]
        L = math.hypot(*t)
        if L < 1e-6:
            continue
        if best is not None and L > math.hypot(*best) + 1e-9:
            break
        tv = np.array(t)
        ok, matched = True, 0
        for idx in chunks:
            d, j = tree.query(cen[idx] + tv, distance_upper_bound=1e-6)
            hit = np.isfinite(d)
            jj = np.where(hit, j, 0)
            same = hit & (sig[jj] == sig[idx]) & \
                (np.abs(canon[jj] - (canon[idx] + tv)).reshape(len(idx), -1).max(axis=1) <= 1e-9)
            # a translate can only sit |t| deep if its centroid does
            mc = cen[idx] + tv
            maybe = (btree.query(mc)[0] >= L - 0.05) & shapely.contains_xy(union, mc[:, 0], mc[:, 1])
            for k, hit_k in zip(idx[maybe], same[maybe]):
                if hit_k and matched:
                    continue
                moved = shapely.transform(geoms[k], lambda xy: xy + tv)
                if union.contains(moved) and edge.distance(moved) >= L:
                    if not hit_k:
                        ok = False
                        break
                    matched += 1
            if not ok:
                break
        if ok and matched:
            best = t
    return best


def test_criterion_08_limit_behaviour():
    bad = []
    zero = AngleParam.parse("0")
    p = patch("R12", 60, 4)
    areas = p.areas(zero)
    if np.abs(areas[p.is_rhombus]).max() > 1e-12:
        bad.append("alpha=0 rhombi have area")
    t = analysis.periodicity_scan(p, zero, 10)
    if t is None or abs(np.hypot(*t) - 1) > 1e-9:
        bad.append(f"alpha=0 period {t}")
    t0 = exhaustive_period(patch("R12", 60, 3), zero, 1.5, decorated=False)
    if t0 is None or abs(math.hypot(*t0) - 1) > 1e-9:
        bad.append(f"alpha=0 exhaustive oracle period {t0}")
    t60 = analysis.periodicity_scan(p, 60, 10)
    oracle = exhaustive_period(p, 60, 10)
    if t60 is not None:
        bad.append(f"alpha=60 scan found {t60}")
    if oracle is not None:
        bad.append(f"alpha=60 exhaustive oracle found {oracle}")
    report(8, "limit behaviour", not bad, "; ".join(bad))
    assert not bad


# -- 9 ----------------------------------------------------------------------

def test_criterion_09_underlying_structure():
    bad = []
    for v, d in (("R12", 3), ("R12", 4), ("R6", 3), ("R28", 3)):
        counts = set()
        for a in (10, 60):
            p = patch(v, a, d)
            g = analysis.underlying_structure(p, a)
            kinds = g.face_kinds()
            if not g.faces or set(kinds) - {"triangle", "rhombus"}:
                bad.append(f"{v}@{a} depth {d}: faces {kinds}")
            counts.add(len(g.nodes))
        q = reparameterize(patch(v, 60, d), 10)
        counts.add(len(analysis.underlying_structure(q, 10).nodes))
        if len(counts) != 1:
            bad.append(f"{v} depth {d}: node counts {sorted(counts)}")
    report(9, "underlying structure", not bad, "; ".join(bad))
    assert not bad


# -- 10 ---------------------------------------------------------------------

def test_criterion_10_determinism(tmp_path):
    bad = []
    for v in VARIANTS:
        rs = ruleset(v, 36)
        a = serialize_patch(generate(GenerationConfig(3, v, 36), rs))
        b = serialize_patch(generate(GenerationConfig(3, v, 36), rs))
        if a != b:
            bad.append(f"{v}: patch text differs")
        p = patch(v, 36, 3)
        s = render.StyleSpec(show_decorations=True)
        if render.render_svg(p, 36, s) != render.render_svg(p, 36, s):
            bad.append(f"{v}: svg differs")
        sw = render.SweepSpec("0", "180", 19)
        frames = render.write_sweep(tmp_path / v, p, sw)
        direct = render.render_svg(p, 90).encode()
        if frames[9].read_bytes() != direct:
            bad.append(f"{v}: sweep frame at 90 differs from direct render")
    report(10, "determinism", not bad, "; ".join(bad))
    assert not bad
