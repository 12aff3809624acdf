import math
from fractions import Fraction

import numpy as np
import pytest

from trirhomb.geometry import (FLIP, ROT60, AngleClass, AngleParam, Direction, ExactPoint,
                               OverflowOfAlphaOrder, RigidMotion, basis_xy, compose, eval_point,
                               flip_point, intersection_area, lift_to_xy, parse_point,
                               point_in_polygon, points_equal, polygon_area, rotate_point)


def test_angle_parse_forms():
    assert AngleParam.parse("36").degrees == 36
    assert AngleParam.parse("7/2").degrees == Fraction(7, 2)
    assert AngleParam.parse("12.5").degrees == Fraction(25, 2)
    assert AngleParam.parse(0.1).degrees == Fraction(1, 10)
    assert AngleParam.parse("90").angle_class is AngleClass.SQUARE
    assert AngleParam.parse("180").angle_class is AngleClass.DEGENERATE_FLAT
    assert AngleParam.parse("0").is_degenerate
    assert AngleParam.parse("60").text() == "60/1"


@pytest.mark.parametrize("bad", ["-1", "181", "abc", "1/0"])
def test_angle_rejects(bad):
    with pytest.raises(ValueError):
        AngleParam.parse(bad)


def test_direction_bounds():
    assert Direction(7, 0).k == 1
    assert Direction(1, 2).angle(30) == 120.0
    with pytest.raises(OverflowOfAlphaOrder):
        Direction(0, 3)


def test_canonical_form_is_unique():
    # e(2) = e(1) - e(0) and e(3) = -e(0)
    assert ExactPoint({(2, 0): 1}) == ExactPoint({(1, 0): 1, (0, 0): -1})
    assert ExactPoint({(3, 1): 1}) == -ExactPoint({(0, 1): 1})
    assert ExactPoint({(0, 0): 1, (3, 0): 1}).is_zero()


def test_point_text_round_trip():
    p = ExactPoint({(0, 0): 2, (1, 1): -3, (0, 1): 1})
    assert parse_point(p.text()) == p
    assert parse_point("{}") == ExactPoint()
    with pytest.raises(ValueError):
        parse_point("(0,0):1")


@pytest.mark.parametrize("alpha", [10, 36, 60, 90, 150])
def test_eval_matches_trig(alpha):
    p = ExactPoint({(0, 0): 1, (1, 1): 2})
    x, y = eval_point(p, alpha)
    t = math.radians(60 + alpha)
    assert x == pytest.approx(1 + 2 * math.cos(t), abs=1e-12)
    assert y == pytest.approx(2 * math.sin(t), abs=1e-12)
    np.testing.assert_allclose(lift_to_xy(p.to_lift(), alpha), (x, y), atol=1e-12)


def test_rotation_matrix_has_order_six():
    assert (np.linalg.matrix_power(ROT60, 6) == np.eye(4, dtype=int)).all()
    assert (FLIP @ FLIP == np.eye(4, dtype=int)).all()


@pytest.mark.parametrize("alpha", [10, 60, 90, 150])
def test_flip_maps_tiles_to_congruent_tiles(alpha):
    # the lift flip is a true mirror only at 90; elsewhere it still sends every
    # unit direction to a unit direction and keeps 60 degree and alpha corners
    e = {key: ExactPoint({key: 1}) for key in [(0, 0), (1, 0), (0, 1), (1, 1)]}
    f = {key: lift_to_xy(flip_point(p).to_lift(), alpha) for key, p in e.items()}
    for v in f.values():
        assert np.hypot(*v) == pytest.approx(1.0)

    def ang(u, v):
        return math.degrees(math.acos(np.clip(np.dot(u, v), -1, 1)))

    assert ang(f[(0, 0)], f[(1, 0)]) == pytest.approx(60)
    assert ang(f[(0, 1)], f[(1, 1)]) == pytest.approx(60)
    assert ang(f[(0, 0)], f[(0, 1)]) in (pytest.approx(alpha), pytest.approx(180 - alpha))
    if alpha == 90:
        p = ExactPoint({(0, 0): 1, (1, 1): 2})
        x, y = eval_point(p, 90)
        assert eval_point(flip_point(p), 90) == pytest.approx((x, -y))
    assert basis_xy(alpha).shape == (4, 2)


def test_compose_matches_sequential_application():
    g1 = RigidMotion(Direction(2, 0), True, ExactPoint({(0, 1): 1}))
    g2 = RigidMotion(Direction(1, 0), False, ExactPoint({(1, 0): -2}))
    p = ExactPoint({(0, 0): 3, (1, 1): 1})
    assert compose(g2, g1).apply(p) == g2.apply(g1.apply(p))
    assert g1.then(g2).apply(p) == g2.apply(g1.apply(p))


def test_alpha_rotation_raises_order():
    p = ExactPoint({(0, 1): 1})
    assert rotate_point(p, Direction(0, 1)).terms == {(0, 2): 1}
    with pytest.raises(OverflowOfAlphaOrder):
        rotate_point(rotate_point(p, Direction(0, 1)), Direction(0, 1))


def test_points_equal_modes():
    # at alpha = 60, e(0,1) and e(1,0) coincide numerically but not symbolically
    p, q = ExactPoint({(0, 1): 1}), ExactPoint({(1, 0): 1})
    assert not points_equal(p, q)
    assert points_equal(p, q, 60, 1e-12)
    assert not points_equal(p, q, 61, 1e-12)


def test_polygon_helpers():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    assert polygon_area(sq) == pytest.approx(1.0)
    assert intersection_area(sq, sq + [0.5, 0.5]) == pytest.approx(0.25)
    assert intersection_area(sq, sq + [1.0, 0]) == pytest.approx(0.0, abs=1e-12)
    assert point_in_polygon((0.5, 0.5), sq)
    assert point_in_polygon((1.0, 0.5), sq)
    assert not point_in_polygon((1.5, 0.5), sq)
