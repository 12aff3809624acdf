"""Exact geometry kernel.

Every point of a tiling is an integer combination of unit vectors e(k, m)
pointing at angle 60k + m*alpha degrees.  Points are stored symbolically so
the same combinatorial patch can be evaluated at any alpha.

Canonical form
--------------
Using e(k+3, m) = -e(k, m) and e(2, m) = e(1, m) - e(0, m), every term folds
onto the keys k in {0, 1}.  For m restricted to {0, 1} this gives the rank-4
*lift* lattice with basis ``LIFT_BASIS`` and the representation is unique for
every alpha where sin(alpha) is not a rational multiple of sqrt(3).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

# largest |m| allowed in a term; products of two alpha-rotations stay within it
ALPHA_ORDER_BOUND = 2

LIFT_BASIS = ((0, 0), (1, 0), (0, 1), (1, 1))
_LIFT_INDEX = {key: i for i, key in enumerate(LIFT_BASIS)}


class OverflowOfAlphaOrder(ValueError):
    """A term would carry a power of the alpha-rotation above the bound."""


class DegenerateTile(ValueError):
    """A rhombus evaluated at alpha in {0, 180} where area is required."""


class AngleClass(Enum):
    INTERIOR = "interior"
    DEGENERATE_ZERO = "zero"
    DEGENERATE_FLAT = "flat"
    SQUARE = "square"


@dataclass(frozen=True)
class AngleParam:
    """Rhombus opening angle in degrees, held as an exact rational."""

    degrees: Fraction

    def __post_init__(self):
        d = Fraction(self.degrees)
        if d < 0 or d > 180:
            raise ValueError(f"alpha must lie in [0, 180], got {d}")
        object.__setattr__(self, "degrees", d)

    @classmethod
    def parse(cls, text) -> "AngleParam":
        """Accept ``p/q``, a decimal string, an int, a Fraction or an AngleParam."""
        if isinstance(text, AngleParam):
            return text
        if isinstance(text, (int, Fraction)):
            return cls(Fraction(text))
        if isinstance(text, float):
            # floats are taken at their shortest repr, not their binary value
            return cls(Fraction(repr(text)))
        s = str(text).strip()
        try:
            return cls(Fraction(s))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse angle {text!r}") from exc

    @property
    def angle_class(self) -> AngleClass:
        if self.degrees == 0:
            return AngleClass.DEGENERATE_ZERO
        if self.degrees == 180:
            return AngleClass.DEGENERATE_FLAT
        if self.degrees == 90:
            return AngleClass.SQUARE
        return AngleClass.INTERIOR

    @property
    def is_degenerate(self) -> bool:
        return self.degrees in (0, 180)

    @property
    def radians(self) -> float:
        return float(self.degrees) * math.pi / 180.0

    def text(self) -> str:
        """Exact ``p/q`` text form used in patch headers."""
        return f"{self.degrees.numerator}/{self.degrees.denominator}"

    def __float__(self):
        return float(self.degrees)

    def __str__(self):
        return self.text()


def as_angle(a) -> AngleParam:
    return AngleParam.parse(a)


@dataclass(frozen=True)
class Direction:
    """Unit direction at 60k + m*alpha degrees; k is kept mod 6."""

    k: int
    m: int = 0

    def __post_init__(self):
        object.__setattr__(self, "k", int(self.k) % 6)
        if abs(self.m) > ALPHA_ORDER_BOUND:
            raise OverflowOfAlphaOrder(f"|m| = {abs(self.m)} exceeds {ALPHA_ORDER_BOUND}")

    def negate(self) -> "Direction":
        return Direction(self.k + 3, self.m)

    def __add__(self, other: "Direction") -> "Direction":
        return Direction(self.k + other.k, self.m + other.m)

    def angle(self, alpha) -> float:
        """Angle in degrees, reduced to [0, 360)."""
        a = as_angle(alpha).degrees
        return float((60 * self.k + self.m * a) % 360)


IDENTITY_ROTATION = Direction(0, 0)


def direction_angle(d: Direction, alpha) -> float:
    return d.angle(alpha)


def _fold(terms: Iterable[tuple[tuple[int, int], int]]) -> dict:
    out: dict = {}
    for (k, m), c in terms:
        if c == 0:
            continue
        if abs(m) > ALPHA_ORDER_BOUND:
            raise OverflowOfAlphaOrder(f"term e({k},{m}) exceeds |m| <= {ALPHA_ORDER_BOUND}")
        k %= 6
        if k >= 3:
            k -= 3
            c = -c
        if k == 2:
            # e(2) = e(1) - e(0)
            out[(1, m)] = out.get((1, m), 0) + c
            out[(0, m)] = out.get((0, m), 0) - c
        else:
            out[(k, m)] = out.get((k, m), 0) + c
    return {key: c for key, c in out.items() if c != 0}


class ExactPoint:
    """Immutable integer combination of unit vectors e(k, m), canonicalised."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[tuple[int, int], int] | Iterable = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        folded = _fold(((int(k), int(m)), int(c)) for (k, m), c in items)
        self._terms = tuple(sorted(folded.items(), key=lambda kv: (kv[0][1], kv[0][0])))
        self._hash = hash(self._terms)

    @classmethod
    def unit(cls, d: Direction) -> "ExactPoint":
        return cls({(d.k, d.m): 1})

    @classmethod
    def from_lift(cls, vec) -> "ExactPoint":
        return cls({key: int(c) for key, c in zip(LIFT_BASIS, vec)})

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def to_lift(self) -> np.ndarray:
        v = np.zeros(4, dtype=np.int64)
        for key, c in self._terms:
            if key not in _LIFT_INDEX:
                raise OverflowOfAlphaOrder(f"term e{key} lies outside the lift lattice")
            v[_LIFT_INDEX[key]] = c
        return v

    def __add__(self, other: "ExactPoint") -> "ExactPoint":
        t = dict(self._terms)
        for key, c in other._terms:
            t[key] = t.get(key, 0) + c
        return ExactPoint(t)

    def __neg__(self) -> "ExactPoint":
        return ExactPoint({key: -c for key, c in self._terms})

    def __sub__(self, other: "ExactPoint") -> "ExactPoint":
        return self + (-other)

    def scale(self, n: int) -> "ExactPoint":
        return ExactPoint({key: n * c for key, c in self._terms})

    def __eq__(self, other):
        return isinstance(other, ExactPoint) and self._terms == other._terms

    def __hash__(self):
        return self._hash

    def is_zero(self) -> bool:
        return not self._terms

    def eval(self, alpha) -> tuple[float, float]:
        return eval_point(self, alpha)

    def text(self) -> str:
        """Serialised form ``{(k,m):c,...}``."""
        return "{" + ",".join(f"({k},{m}):{c}" for (k, m), c in self._terms) + "}"

    def __repr__(self):
        return f"ExactPoint({self.text()})"


ORIGIN = ExactPoint()


_TERM = re.compile(r"\((-?\d+),(-?\d+)\):(-?\d+)")


def parse_point(text: str) -> ExactPoint:
    """Inverse of ``ExactPoint.text``."""
    s = text.replace(" ", "")
    if not (s.startswith("{") and s.endswith("}")):
        raise ValueError(f"bad point literal {text!r}")
    body = s[1:-1]
    terms: dict = {}
    if body:
        items = _TERM.findall(body)
        if ",".join(f"({k},{m}):{c}" for k, m, c in items) != body:
            raise ValueError(f"bad point literal {text!r}")
        for k, m, c in items:
            key = (int(k), int(m))
            terms[key] = terms.get(key, 0) + int(c)
    return ExactPoint(terms)


def unit_xy(k: int, m: int, alpha) -> tuple[float, float]:
    a = as_angle(alpha)
    t = math.radians(60 * k) + m * a.radians
    return math.cos(t), math.sin(t)


def eval_point(p: ExactPoint, alpha) -> tuple[float, float]:
    a = as_angle(alpha)
    x = y = 0.0
    for (k, m), c in p._terms:
        ux, uy = unit_xy(k, m, a)
        x += c * ux
        y += c * uy
    return x, y


def points_equal(p: ExactPoint, q: ExactPoint, alpha=None, tol: float | None = None) -> bool:
    """Symbolic equality when ``tol`` is None, otherwise numeric at ``alpha``."""
    if tol is None:
        return p == q
    px, py = eval_point(p, alpha)
    qx, qy = eval_point(q, alpha)
    return math.hypot(px - qx, py - qy) <= tol


def rotate_point(p: ExactPoint, d: Direction) -> ExactPoint:
    """Rotate by 60k + m*alpha, i.e. e(k', m') -> e(k'+k, m'+m)."""
    return ExactPoint(((k + d.k, m + d.m), c) for (k, m), c in p._terms)


def flip_point(p: ExactPoint) -> ExactPoint:
    """Lift reflection e(k, m) -> e(-k - 3m, m).

    At alpha = 90 this is the mirror in the x-axis.  It keeps the alpha power,
    so a rhombus stays a rhombus of the same opening angle for every alpha.
    """
    return ExactPoint(((-k - 3 * m, m), c) for (k, m), c in p._terms)


def flip_direction(d: Direction) -> Direction:
    return Direction(-d.k - 3 * d.m, d.m)


@dataclass(frozen=True)
class RigidMotion:
    """p -> R(F^flip p) + translation."""

    rotation: Direction = IDENTITY_ROTATION
    flip: bool = False
    translation: ExactPoint = ORIGIN

    def apply(self, p: ExactPoint) -> ExactPoint:
        q = flip_point(p) if self.flip else p
        return rotate_point(q, self.rotation) + self.translation

    def then(self, outer: "RigidMotion") -> "RigidMotion":
        """``outer`` applied after ``self``."""
        return compose(outer, self)


def compose(g2: RigidMotion, g1: RigidMotion) -> RigidMotion:
    """Motion equal to applying g1 first, then g2."""
    r1 = flip_direction(g1.rotation) if g2.flip else g1.rotation
    return RigidMotion(g2.rotation + r1, g1.flip != g2.flip, g2.apply(g1.translation))


def apply_motion(g: RigidMotion, p: ExactPoint) -> ExactPoint:
    return g.apply(p)


# ---------------------------------------------------------------------------
# Integer matrices acting on lift coordinates (column vectors in LIFT_BASIS).

def _matrix_of(fn) -> np.ndarray:
    cols = [fn(ExactPoint({key: 1})).to_lift() for key in LIFT_BASIS]
    return np.array(cols, dtype=np.int64).T


ROT60 = _matrix_of(lambda p: rotate_point(p, Direction(1, 0)))
FLIP = _matrix_of(flip_point)


def rotation_matrix(k: int) -> np.ndarray:
    return np.linalg.matrix_power(ROT60, k % 6)


def motion_matrix(k: int, flip: bool) -> np.ndarray:
    """Lift matrix of R_k F^flip (m = 0 rotations only)."""
    r = rotation_matrix(k)
    return r @ FLIP if flip else r


def basis_xy(alpha) -> np.ndarray:
    """4x2 array of the lift basis vectors evaluated at alpha."""
    return np.array([unit_xy(k, m, alpha) for k, m in LIFT_BASIS])


def lift_to_xy(lift: np.ndarray, alpha) -> np.ndarray:
    return np.asarray(lift, dtype=float) @ basis_xy(alpha)


def inflation_matrix(green: ExactPoint, red: ExactPoint) -> np.ndarray:
    """Lift matrix of the C6-equivariant map with e(0,0) -> green, e(0,1) -> red."""
    g, r = green.to_lift(), red.to_lift()
    cols = [g, ROT60 @ g, r, ROT60 @ r]
    return np.array(cols, dtype=np.int64).T


def apply_lift_matrix(mat: np.ndarray, p: ExactPoint) -> ExactPoint:
    return ExactPoint.from_lift(mat @ p.to_lift())


def polygon_area(xy: np.ndarray) -> float:
    """Signed shoelace area of one polygon, or of a stack (..., n, 2)."""
    x = xy[..., 0]
    y = xy[..., 1]
    return 0.5 * np.sum(x * np.roll(y, -1, axis=-1) - np.roll(x, -1, axis=-1) * y, axis=-1)


def clip_convex(subject: np.ndarray, clipper: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of a polygon by a convex counter-clockwise polygon."""
    out = [tuple(p) for p in subject]
    n = len(clipper)
    for i in range(n):
        if not out:
            break
        ax, ay = clipper[i]
        bx, by = clipper[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        inp, out = out, []

        def side(p):
            return ex * (p[1] - ay) - ey * (p[0] - ax)

        for j in range(len(inp)):
            p, q = inp[j], inp[(j + 1) % len(inp)]
            sp, sq = side(p), side(q)
            if sp >= 0:
                out.append(p)
            if (sp >= 0) != (sq >= 0):
                t = sp / (sp - sq)
                out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return np.array(out, dtype=float).reshape(-1, 2)


def intersection_area(a: np.ndarray, b: np.ndarray) -> float:
    """Area of the intersection of two convex counter-clockwise polygons."""
    c = clip_convex(a, b)
    if len(c) < 3:
        return 0.0
    return max(0.0, float(polygon_area(c)))


def point_in_polygon(pt, poly: np.ndarray, tol: float = 1e-9) -> bool:
    """Closed point-in-polygon test (boundary within ``tol`` counts as inside)."""
    x, y = pt
    n = len(poly)
    inside = False
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        dx, dy = x2 - x1, y2 - y1
        seg = dx * dx + dy * dy
        t = 0.0 if seg == 0 else max(0.0, min(1.0, ((x - x1) * dx + (y - y1) * dy) / seg))
        if math.hypot(x - (x1 + t * dx), y - (y1 + t * dy)) <= tol:
            return True
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * dx / dy
            if xc > x:
                inside = not inside
    return inside
