"""Substitution engine and reparameterisation.

Because every coordinate is an integer lift vector, one substitution step is
a handful of integer array operations: the parent anchor is inflated, each
child offset is moved by the parent's rotation/flip, and motions compose.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .geometry import (AngleParam, Direction, ExactPoint, RigidMotion, as_angle, motion_matrix,
                       parse_point)
from .rules import MissingRule, RuleSet, RuleVariant, as_variant
from .tiling import Patch, PatchMeta, TriangleClass

DEFAULT_MAX_DEPTH = 7


class DepthExceeded(ValueError):
    pass


class DegenerateTarget(ValueError):
    pass


class UnclassifiableOrientation(ValueError):
    pass


@dataclass(frozen=True)
class SeedSpec:
    prototile_id: str
    motion: RigidMotion = field(default_factory=RigidMotion)

    def text(self) -> str:
        g = self.motion
        s = self.prototile_id
        if g.rotation.k or g.flip or not g.translation.is_zero():
            s += f"@{g.rotation.k},{int(g.flip)},{g.translation.text()}"
        return s.replace(" ", "")


_SEED = re.compile(r"^([^@\s]+)(?:@(-?\d+)(?:,([01]))?(?:,(\{.*\}))?)?$")


def parse_seed(text: str) -> SeedSpec:
    """``PID`` or ``PID@rot[,flip[,{(k,m):c,...}]]``."""
    m = _SEED.match(text.strip())
    if not m:
        raise ValueError(f"bad seed {text!r}")
    pid, rot, flip, at = m.groups()
    motion = RigidMotion(Direction(int(rot or 0), 0), flip == "1",
                         parse_point(at) if at else ExactPoint())
    return SeedSpec(pid, motion)


def default_seed(rs: RuleSet) -> SeedSpec:
    """First triangle prototile of the rule set, at the origin."""
    for p in rs.prototiles:
        if p.tclass is TriangleClass.GREEN:
            return SeedSpec(p.pid)
    return SeedSpec(rs.prototiles[0].pid)


@dataclass(frozen=True)
class GenerationConfig:
    depth: int
    variant: RuleVariant
    alpha: AngleParam
    seed: SeedSpec | None = None
    max_depth: int = DEFAULT_MAX_DEPTH

    def __post_init__(self):
        object.__setattr__(self, "variant", as_variant(self.variant))
        object.__setattr__(self, "alpha", as_angle(self.alpha))
        if self.depth < 0:
            raise ValueError("depth must be nonnegative")


def seed_patch(rs: RuleSet, seed: SeedSpec | None = None, alpha=None) -> Patch:
    seed = seed or default_seed(rs)
    i = rs.index_of(seed.prototile_id)
    g = seed.motion
    if g.rotation.m != 0:
        raise ValueError("seed rotation must be a multiple of 60 degrees")
    if g.flip and not rs.variant.flip_allowed:
        raise ValueError(f"{rs.variant.value} does not allow flipped tiles")
    meta = PatchMeta(rs.variant.value, as_angle(alpha if alpha is not None else rs.alpha), 0, seed.text())
    return Patch(meta, rs.prototiles, [i], [g.rotation.k], [g.flip], [g.translation.to_lift()])


class _Compiled:
    """Rule children as integer arrays, per prototile index."""

    def __init__(self, rs: RuleSet):
        self.S = rs.inflation_lift
        self.count = np.zeros(len(rs.prototiles), dtype=np.int64)
        self.kids = []
        for i, p in enumerate(rs.prototiles):
            try:
                rule = rs.rule_for(p.pid)
            except MissingRule:
                self.kids.append(None)
                continue
            self.count[i] = len(rule.children)
            cp = np.array([rs.index_of(c.child) for c in rule.children], dtype=np.int32)
            cr = np.array([c.motion.rotation.k for c in rule.children], dtype=np.int8)
            cf = np.array([c.motion.flip for c in rule.children], dtype=bool)
            # offsets moved by every parent (rot, flip): shape (12, nchild, 4)
            t = np.array([c.motion.translation.to_lift() for c in rule.children], dtype=np.int64)
            moved = np.stack([t @ motion_matrix(r, f).T for r in range(6) for f in (False, True)])
            self.kids.append((cp, cr, cf, moved))


_CACHE: dict = {}


def _compiled(rs: RuleSet) -> _Compiled:
    key = id(rs)
    hit = _CACHE.get(key)
    if hit is None or hit[0] is not rs:
        hit = (rs, _Compiled(rs))
        _CACHE[key] = hit
    return hit[1]


def substitute_once(p: Patch, rs: RuleSet) -> Patch:
    """Replace every tile by its rule's children, parent-major order."""
    if p.prototiles != rs.prototiles:
        raise ValueError("patch and rule set use different prototile tables")
    comp = _compiled(rs)
    meta = PatchMeta(p.meta.variant, p.meta.alpha, p.meta.depth + 1, p.meta.seed)
    n = len(p)
    if n == 0:
        return Patch(meta, rs.prototiles, [], [], [], np.zeros((0, 4), dtype=np.int64))
    for i in np.unique(p.proto):
        if comp.kids[i] is None:
            raise MissingRule(rs.prototiles[i].pid)
    counts = comp.count[p.proto]
    start = np.concatenate([[0], np.cumsum(counts)[:-1]])
    total = int(counts.sum())
    proto = np.empty(total, dtype=np.int32)
    rot = np.empty(total, dtype=np.int8)
    flip = np.empty(total, dtype=bool)
    anchor = np.empty((total, 4), dtype=np.int64)
    big = p.anchor @ comp.S.T
    code = p.rot.astype(np.int64) * 2 + p.flip
    for i in np.unique(p.proto):
        sel = np.flatnonzero(p.proto == i)
        cp, cr, cf, moved = comp.kids[i]
        pr, pf, pc = p.rot[sel].astype(np.int64), p.flip[sel], code[sel]
        for j in range(len(cp)):
            pos = start[sel] + j
            proto[pos] = cp[j]
            # R_r F^f R_c F^g = R_(r +- c) F^(f xor g)
            rot[pos] = np.where(pf, pr - cr[j], pr + cr[j]) % 6
            flip[pos] = pf ^ cf[j]
            anchor[pos] = big[sel] + moved[pc, j]
    return Patch(meta, rs.prototiles, proto, rot, flip, anchor)


def generate(cfg: GenerationConfig, rs: RuleSet) -> Patch:
    if cfg.depth > cfg.max_depth:
        raise DepthExceeded(f"depth {cfg.depth} exceeds the cap {cfg.max_depth}")
    if rs.variant is not cfg.variant:
        raise ValueError(f"rule set is {rs.variant.value}, config asks for {cfg.variant.value}")
    if cfg.alpha.is_degenerate:
        raise DegenerateTarget(f"cannot generate at alpha = {cfg.alpha}")
    p = seed_patch(rs, cfg.seed, cfg.alpha)
    for _ in range(cfg.depth):
        p = substitute_once(p, rs)
    return p


def reparameterize(p: Patch, alpha) -> Patch:
    """Same tiles, same symbolic data, new alpha."""
    a = as_angle(alpha)
    if a.is_degenerate:
        raise DegenerateTarget(f"alpha = {a} is only available for limit evaluation")
    return p.with_meta(p.meta.with_alpha(a))


@dataclass(frozen=True)
class TriangleClasses:
    labels: tuple      # per tile, None for rhombi
    green: int
    red: int


def classify_triangles(p: Patch) -> TriangleClasses:
    labels = []
    green = red = 0
    for i in range(len(p)):
        proto = p.prototiles[p.proto[i]]
        if proto.tclass is None:
            labels.append(None)
            continue
        m = proto.m
        if m == 0:
            labels.append(TriangleClass.GREEN)
            green += 1
        elif m == 1:
            labels.append(TriangleClass.RED)
            red += 1
        else:
            raise UnclassifiableOrientation(f"tile {i} has m = {m}")
    return TriangleClasses(tuple(labels), green, red)
