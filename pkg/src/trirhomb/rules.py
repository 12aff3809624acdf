"""Rule-data files, rule sets and their consistency checks.

A rule file declares the prototiles, the inflation map of the unit edges,
the zigzag path that replaces each supertile edge, one rule section per
variant and the decoration matching semantics.  Placements are symbolic so
one file serves every alpha.
"""
from __future__ import annotations

import json
import math
import os
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from .geometry import (AngleParam, Direction, ExactPoint, RigidMotion, as_angle, basis_xy,
                       compose, eval_point, inflation_matrix, intersection_area, motion_matrix,
                       parse_point, point_in_polygon, polygon_area, rotate_point)
from .tiling import Color, ParseError, Prototile, TileKind, TriangleClass, UnresolvedPrototile

FORMAT_HEADER = "trirhomb-rules v1"
RULES_ENV = "TRIRHOMB_RULES_DIR"


class VariantMismatch(ValueError):
    pass


class MissingRule(KeyError):
    pass


class NotPrimitive(ValueError):
    pass


class RuleVariant(Enum):
    R28 = "R28"
    R12 = "R12"
    R6 = "R6"

    @property
    def rule_count(self) -> int:
        return {"R28": 28, "R12": 12, "R6": 6}[self.value]

    @property
    def rotations(self) -> tuple:
        return (0, 3) if self is RuleVariant.R28 else tuple(range(6))

    @property
    def flip_allowed(self) -> bool:
        return self is RuleVariant.R6


def as_variant(v) -> RuleVariant:
    if isinstance(v, RuleVariant):
        return v
    try:
        return RuleVariant(str(v).upper())
    except ValueError as exc:
        raise ValueError(f"unknown variant {v!r}; expected R28, R12 or R6") from exc


@dataclass(frozen=True)
class ChildPlacement:
    child: str
    motion: RigidMotion


@dataclass(frozen=True)
class Rule:
    parent: str
    parent_shape: str  # "triangle" | "rhombus"
    edge: ExactPoint
    children: tuple


@dataclass(frozen=True)
class PathStep:
    direction: Direction
    label: Color


@dataclass(frozen=True)
class Matching:
    colour: str = "equal"     # equal | opposite
    arrows: str = "opposed"   # opposed | aligned


@dataclass(frozen=True)
class RuleDocument:
    """Parsed rule file, structure only."""

    inflation: tuple            # (image of e(0,0), image of e(0,1))
    paths: Mapping              # "greenB" ... -> tuple[PathStep]
    prototiles: Mapping         # pid -> Prototile, file order
    rules: Mapping              # variant name -> tuple[Rule]
    matching: Mapping           # "green" | "red" -> Matching

    def __eq__(self, other):
        if not isinstance(other, RuleDocument):
            return NotImplemented
        return (self.inflation == other.inflation
                and list(self.paths.items()) == list(other.paths.items())
                and list(self.prototiles.items()) == list(other.prototiles.items())
                and {k: tuple(v) for k, v in self.rules.items()} == {k: tuple(v) for k, v in other.rules.items()}
                and dict(self.matching) == dict(other.matching))


# ---------------------------------------------------------------------------
# parsing

_SECTION = re.compile(r"^\[([a-z]+)(?::(R28|R12|R6))?\]$")
_PLACEMENT = re.compile(r"^child=(\S+) rot=\((-?\d+),(-?\d+)\) flip=([01]) at=(\{.*\})$")
_RULE = re.compile(r"^rule (\S+) parent_shape=(triangle|rhombus) edge=(\{.*\})$")
_PROTO = re.compile(r"^(\S+) shape=(triangle|rhombus) class=(green|red|-) rot=(\d) corners=([BW]+)$")
_STEP = re.compile(r"^\((-?\d+),(-?\d+)\):([BW])$")


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_rules(text: str) -> RuleDocument:
    lines = text.splitlines()
    body = [(i + 1, _strip(s)) for i, s in enumerate(lines)]
    body = [(n, s) for n, s in body if s]
    if not body or body[0][1] != FORMAT_HEADER:
        raise ParseError(f"missing {FORMAT_HEADER!r} header", body[0][0] if body else 1)
    section = None
    inflation: dict = {}
    paths: dict = {}
    protos: dict = {}
    rules: dict = {}
    matching: dict = {}
    current: list | None = None
    for n, s in body[1:]:
        ms = _SECTION.match(s)
        if ms:
            name, var = ms.groups()
            if name == "rules":
                if var is None:
                    raise ParseError("rules section needs a variant", n)
                section = ("rules", var)
                if var in rules:
                    raise ParseError(f"duplicate section {s}", n)
                rules[var] = []
            elif name in ("inflation", "paths", "prototiles", "matching") and var is None:
                section = (name, None)
            else:
                raise ParseError(f"unknown section {s}", n)
            current = None
            continue
        if section is None:
            raise ParseError(f"content outside a section: {s!r}", n)
        kind = section[0]
        try:
            if kind == "inflation":
                key, _, val = (x.strip() for x in s.partition("="))
                if key not in ("green", "red"):
                    raise ParseError(f"unknown inflation key {key!r}", n)
                inflation[key] = parse_point(val)
            elif kind == "paths":
                key, _, val = (x.strip() for x in s.partition("="))
                steps = []
                for tok in val.split():
                    mt = _STEP.match(tok)
                    if not mt:
                        raise ParseError(f"bad path step {tok!r}", n)
                    steps.append(PathStep(Direction(int(mt.group(1)), int(mt.group(2))),
                                          Color(mt.group(3))))
                paths[key] = tuple(steps)
            elif kind == "prototiles":
                mp = _PROTO.match(s)
                if not mp:
                    raise ParseError(f"bad prototile line {s!r}", n)
                pid, shape, cls, rot, corners = mp.groups()
                kd = TileKind(shape)
                tc = None if cls == "-" else TriangleClass(cls)
                if (kd is TileKind.TRIANGLE) != (tc is not None):
                    raise ParseError(f"prototile {pid}: class does not fit the shape", n)
                if len(corners) != (3 if kd is TileKind.TRIANGLE else 4):
                    raise ParseError(f"prototile {pid}: corner count", n)
                if pid in protos:
                    raise ParseError(f"duplicate prototile {pid}", n)
                protos[pid] = Prototile(pid, kd, tc, tuple(Color(c) for c in corners), int(rot))
            elif kind == "rules":
                mr = _RULE.match(s)
                if mr:
                    current = [mr.group(1), mr.group(2), parse_point(mr.group(3)), []]
                    rules[section[1]].append(current)
                    continue
                mc = _PLACEMENT.match(s)
                if not mc:
                    raise ParseError(f"bad rule line {s!r}", n)
                if current is None:
                    raise ParseError("placement before any rule header", n)
                cid, k, m, f, at = mc.groups()
                current[3].append(ChildPlacement(
                    cid, RigidMotion(Direction(int(k), int(m)), f == "1", parse_point(at))))
            elif kind == "matching":
                key, _, val = (x.strip() for x in s.partition("="))
                opts = dict(tok.split(":", 1) for tok in val.split())
                colour, arrows = opts.get("colour", "equal"), opts.get("arrows", "opposed")
                if colour not in ("equal", "opposite") or arrows not in ("opposed", "aligned"):
                    raise ParseError(f"bad matching entry {s!r}", n)
                matching[key] = Matching(colour, arrows)
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(str(exc), n) from exc
    if set(inflation) != {"green", "red"}:
        raise ParseError("inflation section needs green and red")
    frozen = {v: tuple(Rule(p, sh, e, tuple(ch)) for p, sh, e, ch in rs) for v, rs in rules.items()}
    return RuleDocument((inflation["green"], inflation["red"]), paths, protos, frozen, matching)


def serialize_rules(doc: RuleDocument) -> str:
    out = [FORMAT_HEADER, "", "[inflation]",
           f"green = {doc.inflation[0].text()}", f"red = {doc.inflation[1].text()}", "", "[paths]"]
    for key, steps in doc.paths.items():
        out.append(f"{key} = " + " ".join(f"({s.direction.k},{s.direction.m}):{s.label.value}"
                                          for s in steps))
    out += ["", "[prototiles]"]
    for p in doc.prototiles.values():
        cls = p.tclass.value if p.tclass else "-"
        out.append(f"{p.pid} shape={p.kind.value} class={cls} rot={p.base_rot} "
                   f"corners={''.join(c.value for c in p.corners)}")
    for var, rs in doc.rules.items():
        out += ["", f"[rules:{var}]"]
        for r in rs:
            out.append(f"rule {r.parent} parent_shape={r.parent_shape} edge={r.edge.text()}")
            for c in r.children:
                g = c.motion
                out.append(f"  child={c.child} rot=({g.rotation.k},{g.rotation.m}) "
                           f"flip={int(g.flip)} at={g.translation.text()}")
    out += ["", "[matching]"]
    for key, mt in doc.matching.items():
        out.append(f"{key} = colour:{mt.colour} arrows:{mt.arrows}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# rule sets

@dataclass(frozen=True)
class RuleSet:
    variant: RuleVariant
    alpha: AngleParam
    rules: tuple
    prototiles: tuple
    inflation: tuple
    paths: Mapping
    matching: Mapping
    _index: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        self._index.update({p.pid: i for i, p in enumerate(self.prototiles)})

    def index_of(self, pid: str) -> int:
        try:
            return self._index[pid]
        except KeyError:
            raise UnresolvedPrototile(pid) from None

    def prototile(self, pid: str) -> Prototile:
        return self.prototiles[self.index_of(pid)]

    def rule_for(self, pid: str) -> Rule:
        for r in self.rules:
            if r.parent == pid:
                return r
        raise MissingRule(pid)

    @property
    def inflation_lift(self) -> np.ndarray:
        return inflation_matrix(*self.inflation)

    def inflation_factor_at(self, alpha) -> float:
        return math.hypot(*eval_point(self.inflation[0], alpha))

    @property
    def inflation_factor(self) -> float:
        """Length of the supertile edge (unit edges inflate to this), at ``alpha``."""
        return self.inflation_factor_at(self.alpha)

    def with_alpha(self, alpha) -> "RuleSet":
        return RuleSet(self.variant, as_angle(alpha), self.rules, self.prototiles,
                       self.inflation, self.paths, self.matching)


def default_rules_dir() -> Path:
    env = os.environ.get(RULES_ENV)
    if env:
        return Path(env)
    return Path(str(resources.files("trirhomb") / "data"))


def rules_path(variant, rules_dir=None) -> Path:
    d = Path(rules_dir) if rules_dir is not None else default_rules_dir()
    return d / f"{as_variant(variant).value.lower()}.trd"


def load_ruleset(file=None, variant="R12", alpha=60) -> RuleSet:
    """Load one variant of a rule file at a given alpha.

    ``file`` may be a path, the file text, a parsed RuleDocument or None for
    the default rule directory.
    """
    var = as_variant(variant)
    a = as_angle(alpha)
    if file is None:
        file = rules_path(var)
    if isinstance(file, RuleDocument):
        doc = file
    elif isinstance(file, Path) or (isinstance(file, str) and "\n" not in file):
        doc = parse_rules(Path(file).read_text())
    else:
        doc = parse_rules(file)
    if var.value not in doc.rules:
        raise VariantMismatch(f"file has no [rules:{var.value}] section")
    rules = doc.rules[var.value]
    if len(rules) != var.rule_count:
        raise VariantMismatch(f"{var.value} needs {var.rule_count} rules, file has {len(rules)}")
    table = []
    seen = set()
    for r in rules:
        if r.parent in seen:
            raise VariantMismatch(f"two rules for {r.parent}")
        seen.add(r.parent)
        if r.parent not in doc.prototiles:
            raise UnresolvedPrototile(r.parent)
        table.append(doc.prototiles[r.parent])
    for r in rules:
        for c in r.children:
            if c.child not in seen:
                raise UnresolvedPrototile(f"child {c.child} of rule {r.parent} has no rule")
    green, red = doc.inflation
    # the declared supertile edge must be the inflated first template edge
    for r, p in zip(rules, table):
        first = ExactPoint.from_lift(p.template[1] - p.template[0])
        expect = ExactPoint.from_lift(inflation_matrix(green, red) @ first.to_lift())
        declared = rotate_point(r.edge, Direction(p.base_rot, 0))
        if declared != expect:
            raise ParseError(f"rule {r.parent}: declared edge {r.edge.text()} is not the inflated edge")
        if r.parent_shape != p.kind.value:
            raise ParseError(f"rule {r.parent}: parent_shape {r.parent_shape} vs prototile {p.kind.value}")
    rs = RuleSet(var, a, rules, tuple(table), doc.inflation, doc.paths, doc.matching)
    if rs.inflation_factor_at(90) <= 1:
        raise ParseError("inflation factor must exceed 1")
    return rs


def load_default(variant="R12", alpha=60) -> RuleSet:
    return load_ruleset(None, variant, alpha)


# ---------------------------------------------------------------------------
# supertile geometry

@dataclass(frozen=True)
class Placed:
    """A child in the supertile frame: exact vertices and edge labels."""

    pid: str
    lift: np.ndarray   # (n, 4)
    labels: tuple


def place(p: Prototile, motion: RigidMotion) -> Placed:
    if motion.rotation.m != 0:
        raise ValueError("placements rotate by multiples of 60 degrees only")
    off = p.placed(motion.rotation.k, motion.flip) + motion.translation.to_lift()[None, :]
    return Placed(p.pid, off, p.labels(motion.flip))


def edge_class(vec: np.ndarray) -> tuple[int, int]:
    """(k, m) of a unit lift vector."""
    for m in (0, 1):
        for k in range(6):
            if (ExactPoint({(k, m): 1}).to_lift() == vec).all():
                return k, m
    raise ValueError(f"{vec} is not a unit edge")


def supertile_boundary(rs: RuleSet, p: Prototile):
    """Exact boundary points of the supertile region and the label of each step."""
    pts, labels = [], []
    cur = np.zeros(4, dtype=np.int64)
    tpl = p.template
    n = len(tpl)
    for i in range(n):
        k, m = edge_class(tpl[(i + 1) % n] - tpl[i])
        key = ("green" if m == 0 else "red") + p.corners[i].value
        for st in rs.paths[key]:
            d = Direction(st.direction.k + k, st.direction.m)
            pts.append(cur)
            labels.append(st.label)
            cur = cur + ExactPoint.unit(d).to_lift()
    return np.array(pts), labels, cur


@dataclass
class Violation:
    rule: str
    kind: str
    detail: str


@dataclass
class ConsistencyReport:
    variant: str
    alpha: AngleParam
    violations: list

    @property
    def passed(self) -> bool:
        return not self.violations

    def lines(self) -> list[str]:
        head = f"check-rules variant={self.variant} alpha={self.alpha.text()} violations={len(self.violations)}"
        return [head] + [f"{v.rule}: {v.kind}: {v.detail}" for v in self.violations]

    def to_json(self) -> str:
        return json.dumps({"variant": self.variant, "alpha": self.alpha.text(), "passed": self.passed,
                           "violations": [{"rule": v.rule, "kind": v.kind, "detail": v.detail}
                                          for v in self.violations]}, sort_keys=True)


def _sampled_overlap(a: np.ndarray, b: np.ndarray, n: int, rng) -> float:
    """Monte Carlo area of a & b from n uniform samples inside convex polygon a."""
    tri = [(a[0], a[i], a[i + 1]) for i in range(1, len(a) - 1)]
    w = np.array([abs(polygon_area(np.array(t))) for t in tri])
    area = w.sum()
    pick = rng.choice(len(tri), size=n, p=w / area)
    u, v = rng.random(n), rng.random(n)
    swap = u + v > 1
    u[swap], v[swap] = 1 - u[swap], 1 - v[swap]
    t = np.array(tri)[pick]
    pts = t[:, 0] + u[:, None] * (t[:, 1] - t[:, 0]) + v[:, None] * (t[:, 2] - t[:, 0])
    inside = np.ones(n, dtype=bool)
    m = len(b)
    for i in range(m):
        e = b[(i + 1) % m] - b[i]
        inside &= e[0] * (pts[:, 1] - b[i][1]) - e[1] * (pts[:, 0] - b[i][0]) > 1e-12
    return area * inside.mean()


def check_ruleset(rs: RuleSet, method: str = "clip", samples: int = 10_000) -> ConsistencyReport:
    """Verify every rule of ``rs`` at its alpha.

    Per rule: (a) child areas sum to the supertile area, (b) children do not
    overlap, (c) children lie inside the supertile region, (d) decorations
    match across shared child edges and along the supertile boundary, plus
    the variant's rotation and flip restrictions.
    """
    a = rs.alpha
    B = basis_xy(a)
    S = rs.inflation_lift
    out: list = []
    rng = np.random.default_rng(12345)
    for rule, parent in zip(rs.rules, rs.prototiles):
        rid = rule.parent
        for c in rule.children:
            g = c.motion
            if g.rotation.m != 0 or g.rotation.k not in rs.variant.rotations:
                out.append(Violation(rid, "motion", f"{c.child} rotation {g.rotation} not allowed"))
            if g.flip and not rs.variant.flip_allowed:
                out.append(Violation(rid, "motion", f"{c.child} is flipped"))
        kids = [place(rs.prototile(c.child), c.motion) for c in rule.children]
        polys = [k.lift.astype(float) @ B for k in kids]
        # (a) area balance against the straight supertile
        corners = (parent.template @ S.T).astype(float) @ B
        parent_area = float(polygon_area(corners))
        kid_area = float(sum(polygon_area(q) for q in polys))
        if abs(kid_area - parent_area) > 1e-9:
            out.append(Violation(rid, "area", f"children {kid_area:.12f} vs supertile {parent_area:.12f}"))
        bnd, blabels, end = supertile_boundary(rs, parent)
        if end.any():
            out.append(Violation(rid, "boundary", "edge paths do not close"))
        region = bnd.astype(float) @ B
        region_area = float(polygon_area(region))
        if abs(region_area - parent_area) > 1e-9:
            out.append(Violation(rid, "area", f"path region {region_area:.12f} vs supertile {parent_area:.12f}"))
        for ci in corners:
            if not np.any(np.all(np.isclose(region, ci, atol=1e-9), axis=1)):
                out.append(Violation(rid, "boundary", "supertile corner missing from edge path"))
        # (b) pairwise overlaps
        for i in range(len(polys)):
            for j in range(i + 1, len(polys)):
                if method == "sample":
                    ov = _sampled_overlap(polys[i], polys[j], samples, rng)
                    bad = ov > 0
                else:
                    ov = intersection_area(polys[i], polys[j])
                    bad = ov >= 1e-9
                if bad:
                    out.append(Violation(rid, "overlap",
                                         f"children {i} ({kids[i].pid}) and {j} ({kids[j].pid}) share area {ov:.3e}"))
        # (c) containment in the path region
        for i, q in enumerate(polys):
            pts = list(q) + [q.mean(axis=0)]
            if not all(point_in_polygon(pt, region) for pt in pts):
                out.append(Violation(rid, "coverage", f"child {i} ({kids[i].pid}) leaves the supertile"))
        # (d) decorations on shared edges and along the boundary
        bedges = {}
        nb = len(bnd)
        for i in range(nb):
            bedges[(bnd[i].tobytes(), bnd[(i + 1) % nb].tobytes())] = blabels[i]
        directed = {}
        for i, k in enumerate(kids):
            n = len(k.lift)
            for e in range(n):
                u, v = k.lift[e], k.lift[(e + 1) % n]
                directed[(u.tobytes(), v.tobytes())] = (i, e, k.labels[e], v - u)
        for (u, v), (i, e, lab, vec) in directed.items():
            partner = directed.get((v, u))
            if partner is not None:
                j, f, lab2, _ = partner
                if i < j and not _labels_match(rs, vec, lab, lab2):
                    out.append(Violation(rid, "decoration", f"children {i} and {j} disagree on edge {e}"))
            elif (u, v) in bedges:
                if bedges[(u, v)] != lab:
                    out.append(Violation(rid, "decoration", f"child {i} edge {e} vs supertile path label"))
            else:
                out.append(Violation(rid, "edge", f"child {i} edge {e} is neither shared nor on the boundary"))
    return ConsistencyReport(rs.variant.value, a, out)


def _labels_match(rs: RuleSet, vec: np.ndarray, lab: Color, lab2: Color) -> bool:
    k, m = edge_class(vec)
    mt = rs.matching.get("green" if m == 0 else "red", Matching())
    colour_ok = (lab == lab2) if mt.colour == "equal" else (lab != lab2)
    # arrows point along each tile's own counter-clockwise traversal for black
    # corners and against it for white; the two traversals run opposite ways
    a1 = 1 if lab is Color.BLACK else -1
    a2 = -(1 if lab2 is Color.BLACK else -1)
    arrows_ok = (a1 != a2) if mt.arrows == "opposed" else (a1 == a2)
    return colour_ok and arrows_ok


# ---------------------------------------------------------------------------
# substitution matrices

@dataclass(frozen=True)
class SubstitutionMatrix:
    ids: tuple
    full: np.ndarray       # (n, n), entry (i, j) = copies of i in the rule of j
    collapsed: np.ndarray  # 2x2 over (triangle, rhombus)


def substitution_matrix(rs: RuleSet) -> SubstitutionMatrix:
    ids = tuple(p.pid for p in rs.prototiles)
    n = len(ids)
    M = np.zeros((n, n), dtype=np.int64)
    for j, r in enumerate(rs.rules):
        for c in r.children:
            M[rs.index_of(c.child), j] += 1
    is_rh = np.array([p.kind is TileKind.RHOMBUS for p in rs.prototiles])
    C = np.zeros((2, 2), dtype=np.int64)
    for J, sel in enumerate((~is_rh, is_rh)):
        cols = M[:, sel]
        if cols.shape[1] == 0:
            continue
        sums = np.stack([cols[~is_rh].sum(axis=0), cols[is_rh].sum(axis=0)])
        if not (sums == sums[:, :1]).all():
            raise ValueError("decorated rules disagree on child counts; no collapsed matrix")
        C[:, J] = sums[:, 0]
    return SubstitutionMatrix(ids, M, C)


def is_primitive(m: np.ndarray) -> bool:
    a = (np.asarray(m) > 0).astype(np.int64)
    n = len(a)
    p = np.eye(n, dtype=np.int64)
    # Wielandt bound on the exponent of a primitive matrix
    for _ in range((n - 1) ** 2 + 1):
        p = np.minimum(p @ a, 1)
    return bool((p > 0).all())


def perron_frequencies(m) -> tuple[float, float, float]:
    """(f_triangle, f_rhombus, dominant eigenvalue) of a primitive 2x2 matrix."""
    m = np.asarray(m, dtype=float)
    if m.shape != (2, 2) or (m < 0).any() or not is_primitive(m):
        raise NotPrimitive("matrix is not primitive")
    w, v = np.linalg.eig(m)
    i = int(np.argmax(w.real))
    vec = np.abs(v[:, i].real)
    vec /= vec.sum()
    return float(vec[0]), float(vec[1]), float(w[i].real)
