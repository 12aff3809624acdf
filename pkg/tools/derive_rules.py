"""Derive the three rule files from the supertile edge paths.

Offline tool, not imported by the package.  It

1. builds every decorated supertile region from the zigzag edge paths,
2. finds its (unique) square-triangle tiling at alpha = 90 by exact cover,
3. assigns chirality bits to interior edges with a small symmetric CSP,
4. rewrites the children as placements for the R12, R6 and R28 variants.

Needs shapely (region containment during the search).

    python3 tools/derive_rules.py src/trirhomb/data
"""
import itertools
import math
import sys
from pathlib import Path

import numpy as np
from shapely.geometry import Polygon

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))
from trirhomb.geometry import (ExactPoint, basis_xy, motion_matrix,  # noqa: E402
                               inflation_matrix)

# edge paths, offsets from the chord in 30 degree units (alpha = 90 picture)
PATH = {0: [-1, 0, 3, 0, -1], 1: [0, -1, 3, -1, 0]}
# step bits along the bit-0 path of each edge class; bit-1 paths complement them
SIGMA = {0: [1, 1, 1, 1, 1], 1: [0, 0, 0, 0, 0]}
# square classes kept, one per mirror pair
SQUARE_REPS = [(0, 0, 0, 0), (0, 0, 0, 1), (0, 0, 1, 0)]

GREEN_INF = ExactPoint({(0, 0): 2, (0, 1): 1, (1, 1): -2})
RED_INF = ExactPoint({(0, 0): -1, (1, 0): 2, (0, 1): 2})

B90 = basis_xy(90)
Z = [complex(math.cos(math.pi * j / 6), math.sin(math.pi * j / 6)) for j in range(12)]


def unit(j):
    j %= 12
    if j % 2 == 0:
        return ExactPoint({(j // 2, 0): 1}).to_lift()
    return ExactPoint({((j - 3) // 2, 1): 1}).to_lift()


def cz(v):
    x, y = np.asarray(v) @ B90
    return complex(x, y)


def key(v):
    z = cz(v)
    return (round(z.real, 6) + 0.0, round(z.imag, 6) + 0.0)


def jdir(a, b):
    d = cz(np.asarray(b) - np.asarray(a))
    j = round(math.atan2(d.imag, d.real) / (math.pi / 6)) % 12
    assert abs(d - Z[j]) < 1e-9
    return j


# --- types ------------------------------------------------------------------

def canon(kind, bits):
    bits = list(bits)
    n = 3 if kind != "S" else 4
    step = 1 if kind != "S" else 2
    return (kind, min(tuple(bits[i:] + bits[:i]) for i in range(0, n, step)))


def mirror(t):
    kind, b = t
    c = [1 - x for x in b]
    if kind == "S":
        return canon("S", [c[0], c[3], c[2], c[1]])
    return canon(kind, c[::-1])


TEMPLATE_DIRS = {"Tg": [0, 4, 8], "Tr": [3, 7, 11], "S": [0, 3, 6, 9]}


def template(kind):
    pts = [np.zeros(4, dtype=np.int64)]
    for j in TEMPLATE_DIRS[kind][:-1]:
        pts.append(pts[-1] + unit(j))
    return pts


# --- exact cover --------------------------------------------------------------

def sat_overlap(a, b, eps=1e-7):
    for poly in (a, b):
        n = len(poly)
        for i in range(n):
            e = poly[(i + 1) % n] - poly[i]
            nrm = complex(-e.imag, e.real)
            pa = [(p * nrm.conjugate()).real for p in a]
            pb = [(p * nrm.conjugate()).real for p in b]
            if max(pa) <= min(pb) + eps or max(pb) <= min(pa) + eps:
                return False
    return True


def tile_on(v, w):
    """Candidate tiles on the left of the directed edge v -> w."""
    j = jdir(v, w)
    yield "T", [v, w, v + unit(j + 2)]
    yield "S", [v, w, w + unit(j + 3), v + unit(j + 3)]


def exact_cover(boundary, limit=3):
    region = Polygon([(cz(p).real, cz(p).imag) for p in boundary]).buffer(1e-7)
    n = len(boundary)
    front = {}
    for i in range(n):
        a, b = boundary[i], boundary[(i + 1) % n]
        front[(key(a), key(b))] = (a, b)
    placed, results = [], []

    def ok(t):
        zt = [cz(p) for p in t]
        if not region.contains(Polygon([(z.real, z.imag) for z in zt])):
            return False
        return not any(sat_overlap(zt, [cz(p) for p in q]) for _, q in placed)

    def rec():
        if len(results) >= limit:
            return
        if not front:
            results.append(list(placed))
            return
        best = None
        for k, (v, w) in front.items():
            opts = [o for o in tile_on(v, w) if ok(o[1])]
            if best is None or len(opts) < len(best):
                best = opts
                if len(opts) <= 1:
                    break
        for kd, t in best:
            changes = []
            for i in range(len(t)):
                a, b = t[i], t[(i + 1) % len(t)]
                ka, kb = key(a), key(b)
                if (ka, kb) in front:
                    changes.append(("del", (ka, kb), front.pop((ka, kb))))
                else:
                    front[(kb, ka)] = (b, a)
                    changes.append(("add", (kb, ka), None))
            placed.append((kd, t))
            rec()
            placed.pop()
            for op, kk, val in reversed(changes):
                if op == "del":
                    front[kk] = val
                else:
                    del front[kk]

    rec()
    return results


# --- decorated supertiles -----------------------------------------------------

def supertile(t):
    """Boundary (exact), boundary step bits and the child tiles of class t."""
    kind, bits = t
    boundary, bnd = [], {}
    cur = np.zeros(4, dtype=np.int64)
    for j, bit in zip(TEMPLATE_DIRS[kind], bits):
        ec = j % 2
        path = PATH[ec] if bit == 0 else [-s for s in PATH[ec]]
        sig = SIGMA[ec] if bit == 0 else [1 - s for s in SIGMA[ec]]
        for s, sb in zip(path, sig):
            nxt = cur + unit(j + s)
            boundary.append(cur)
            bnd[frozenset((key(cur), key(nxt)))] = sb
            cur = nxt
    assert not cur.any()
    # corners of the region are the inflated template corners
    S = inflation_matrix(GREEN_INF, RED_INF)
    corners = [S @ p for p in template(kind)]
    for c in corners:
        assert any((c == b).all() for b in boundary)
    tilings = exact_cover(boundary)
    assert len(tilings) == 1, (t, len(tilings))
    children = []
    for kd, vs in tilings[0]:
        j = jdir(vs[0], vs[1])
        if kd == "T":
            kd = "Tg" if j % 2 == 0 else "Tr"
        elif j % 2 == 1:
            vs = vs[1:] + vs[:1]
        es = [frozenset((key(vs[i]), key(vs[(i + 1) % len(vs)]))) for i in range(len(vs))]
        children.append((kd, vs, es))
    return boundary, bnd, children


def symmetry(t, children):
    kind, b = t
    if kind == "S":
        if tuple(b[2:] + b[:2]) != tuple(b):
            return None
        lam = 2 + math.sqrt(3)
        ctr = lam * (Z[0] + Z[3]) / 2
        return lambda z: 2 * ctr - z
    if len(set(b)) != 1:
        return None
    d = TEMPLATE_DIRS[kind]
    ctr = (2 + math.sqrt(3)) * (Z[d[0]] - Z[d[2]]) / 3
    return lambda z: ctr + (z - ctr) * Z[4]


def assign_bits(t, allowed):
    """First solution of the interior edge bits, symmetric under the class symmetry."""
    boundary, bnd, children = supertile(t)
    pts = {key(v): v for _, vs, _ in children for v in vs}
    order = []
    for _, _, es in children:
        for e in es:
            if e not in bnd and e not in order:
                order.append(e)
    rep = {e: e for e in order}

    def find(e):
        while rep[e] != e:
            e = rep[e]
        return e

    f = symmetry(t, children)
    if f is not None:
        def mk(k):
            z = f(cz(pts[k]))
            kk = (round(z.real, 6) + 0.0, round(z.imag, 6) + 0.0)
            assert kk in pts
            return kk
        for e in order:
            g = frozenset(mk(k) for k in e)
            if g not in bnd and find(e) != find(g):
                rep[find(e)] = find(g)
    groups = sorted({find(e) for e in order}, key=order.index)
    assign = {}

    def bit(e):
        return bnd[e] if e in bnd else assign.get(find(e))

    def consistent():
        for kd, _, es in children:
            bs = [bit(e) for e in es]
            if None in bs:
                known = {x for x in bs if x is not None}
                if kd == "Tg" and len(known) > 1:
                    return False
                continue
            if canon(kd, bs) not in allowed:
                return False
        return True

    def rec(i):
        if i == len(groups):
            return True
        for v in (0, 1):
            assign[groups[i]] = v
            if consistent() and rec(i + 1):
                return True
            del assign[groups[i]]
        return False

    assert consistent() and rec(0), t
    out = []
    for kd, vs, es in children:
        out.append((kd, vs, [bit(e) for e in es]))
    return boundary, out


# --- placements ---------------------------------------------------------------

class Proto:
    def __init__(self, pid, kind, bits, base_rot=0):
        self.pid, self.kind, self.bits, self.base_rot = pid, kind, tuple(bits), base_rot

    def placed(self, rot, flip, anchor):
        """Vertex list (exact) and edge bits of a placement."""
        M = motion_matrix(rot, flip)
        R = motion_matrix(self.base_rot, False)
        vs = [anchor + M @ (R @ p) for p in template(self.kind)]
        bits = list(self.bits)
        if flip:
            vs = [vs[0]] + vs[1:][::-1]
            bits = [1 - x for x in bits[::-1]]
        return vs, bits


def same_tile(va, ba, vb, bb):
    n = len(va)
    if len(vb) != n:
        return False
    for s in range(n):
        if all((va[i] == vb[(i + s) % n]).all() and ba[i] == bb[(i + s) % n] for i in range(n)):
            return True
    return False


def express(kd, vs, bits, protos, rots, flips):
    """Find the unique (prototile, rot, flip, anchor) reproducing a decorated tile."""
    hits = []
    for p in protos:
        if p.kind != kd:
            continue
        for r in rots:
            for f in flips:
                for a in vs:
                    off = a - p.placed(r, f, np.zeros(4, dtype=np.int64))[0][0]
                    pv, pb = p.placed(r, f, off)
                    if same_tile(pv, pb, vs, bits):
                        hits.append((p.pid, r, f, tuple(int(x) for x in off)))
    assert hits, (kd, bits)
    return min(hits, key=lambda h: (h[2], h[1], h[0]))


def mirrored_rule(rep, mir, children):
    """Rule of the mirror class: reflect the representative's rule."""
    F = motion_matrix(0, True)
    kind = rep[0]
    src = Proto("x", kind, rep[1])
    fv, fb = src.placed(0, True, np.zeros(4, dtype=np.int64))
    tgt = Proto("y", kind, mir[1])
    for r in range(6):
        for a in fv:
            pv, pb = tgt.placed(r, False, a)
            if same_tile(pv, pb, fv, fb):
                Rinv = motion_matrix(-r, False)
                Sa = inflation_matrix(GREEN_INF, RED_INF) @ a
                out = []
                for kd, vs, bits in children:
                    w = [F @ v for v in vs]
                    w = [w[0]] + w[1:][::-1]
                    wb = [1 - x for x in bits[::-1]]
                    out.append((kd, [Rinv @ (v - Sa) for v in w], wb))
                return out
    raise AssertionError((rep, mir))


def class_name(t):
    kind, b = t
    s = "".join("BW"[x] for x in b)
    return {"Tg": "G", "Tr": "R", "S": "S"}[kind] + s


def main(outdir):
    outdir = Path(outdir)
    tri = [("Tg", (0, 0, 0)), ("Tg", (1, 1, 1)), ("Tr", (0, 0, 0)), ("Tr", (1, 1, 1)),
           ("Tr", (0, 0, 1)), ("Tr", (0, 1, 1))]
    allowed = list(tri)
    for s in SQUARE_REPS:
        allowed += [("S", s), mirror(("S", s))]
    allowed = [canon(k, b) for k, b in allowed]
    # mirror pairs, representative first
    pairs = []
    for t in allowed:
        if not any(t in p for p in pairs):
            pairs.append((t, mirror(t)))

    children = {}
    for rep, mir in pairs:
        _, ch = assign_bits(rep, set(allowed))
        children[rep] = ch
        children[mir] = mirrored_rule(rep, mir, ch)
    for t, ch in children.items():
        cnt = {}
        for kd, _, _ in ch:
            cnt[kd] = cnt.get(kd, 0) + 1
        print(class_name(t), cnt)

    rules = {"R12": {}, "R6": {}, "R28": {}}
    protos = {}
    # R12: one prototile per C6 class
    protos["R12"] = [Proto(class_name(t), t[0], t[1]) for t in allowed]
    # R6: one prototile per mirror pair, mirrors by flipping
    protos["R6"] = [Proto(class_name(r), r[0], r[1]) for r, _ in pairs]
    # R28: C2 classes, rotations by 0 and 180 only
    p28 = []
    for t in allowed:
        sym3 = t[0] != "S" and len(set(t[1])) == 1
        for b in ([0] if sym3 else [0, 1, 2]):
            pid = class_name(t) + ("" if sym3 else f".{b}")
            p28.append(Proto(pid, t[0], t[1], base_rot=b))
    protos["R28"] = p28
    motions = {"R12": (range(6), (False,)), "R6": (range(6), (False, True)),
               "R28": ((0, 3), (False,))}

    for var in ("R12", "R6", "R28"):
        for p in protos[var]:
            t = canon(p.kind, p.bits)
            R = motion_matrix(p.base_rot, False)
            rule = []
            for kd, vs, bits in children[t]:
                vv = [R @ v for v in vs]
                rule.append(express(kd, vv, bits, protos[var], *motions[var]))
            rules[var][p.pid] = rule

    text = render_files(protos, rules)
    for var, body in text.items():
        (outdir / f"{var.lower()}.trd").write_text(body)
        print("wrote", outdir / f"{var.lower()}.trd", len(rules[var]), "rules")


def point_text(v):
    return ExactPoint.from_lift(v).text()


def render_files(protos, rules):
    kinds = {"Tg": ("triangle", "green"), "Tr": ("triangle", "red"), "S": ("rhombus", "-")}
    paths = []
    for ec, name in ((0, "green"), (1, "red")):
        j0 = 0 if ec == 0 else 3
        for bit in (0, 1):
            path = PATH[ec] if bit == 0 else [-s for s in PATH[ec]]
            sig = SIGMA[ec] if bit == 0 else [1 - s for s in SIGMA[ec]]
            steps = []
            for s, sb in zip(path, sig):
                j = (j0 + s) % 12
                k, m = ((j // 2, 0) if j % 2 == 0 else ((j - 3) // 2, 1))
                steps.append(f"({k % 6},{m}):{'BW'[sb]}")
            paths.append(f"{name}{'BW'[bit]} = " + " ".join(steps))
    out = {}
    for var in ("R12", "R6", "R28"):
        lines = [
            "# trirhomb rule data, generated by tools/derive_rules.py",
            "trirhomb-rules v1",
            "",
            "[inflation]",
            "# images of e(0,0) and e(0,1); the map commutes with 60 degree rotation",
            f"green = {GREEN_INF.text()}",
            f"red = {RED_INF.text()}",
            "",
            "[paths]",
            "# supertile edge path per edge class and chirality bit, as unit steps",
            "# (k,m):label relative to the canonical edge e(0,0) or e(0,1)",
            *paths,
            "",
            "[prototiles]",
        ]
        for p in protos[var]:
            shape, cls = kinds[p.kind]
            lines.append(f"{p.pid} shape={shape} class={cls} rot={p.base_rot} "
                         f"corners={''.join('BW'[x] for x in p.bits)}")
        lines += ["", f"[rules:{var}]"]
        for p in protos[var]:
            shape = kinds[p.kind][0]
            lines.append(f"rule {p.pid} parent_shape={shape} edge="
                         + (GREEN_INF if p.kind != "Tr" else RED_INF).text())
            for pid, r, f, off in rules[var][p.pid]:
                lines.append(f"  child={pid} rot=({r},0) flip={int(f)} at={point_text(np.array(off))}")
        lines += ["", "[matching]",
                  "# corner colour and arrow rules across a shared edge",
                  "green = colour:equal arrows:opposed",
                  "red = colour:equal arrows:opposed", ""]
        out[var] = "\n".join(lines)
    return out


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "src/trirhomb/data")
