import math

import numpy as np
import pytest

from trirhomb import analysis
from trirhomb.engine import reparameterize
from trirhomb.tiling import Patch

from conftest import patch, ruleset


def _central(p):
    c = p.centroids()
    return int(np.argmin(((c - c.mean(axis=0)) ** 2).sum(axis=1)))


def test_single_tile_is_valid():
    r = analysis.validate(patch("R12", 60, 0))
    assert r.passed
    assert r.samples > 0


def test_duplicate_tile_overlaps():
    p = patch("R12", 60, 2)
    q = p.subset(list(range(len(p))) + [3])
    ov = analysis.find_overlaps(q, 60)
    assert len(ov) == 1
    i, j, a = ov[0]
    assert (i, j) == (3, len(p))
    assert a == pytest.approx(abs(p.areas()[3]))


def test_removed_tile_is_a_gap():
    p = patch("R12", 60, 2)
    i = _central(p)
    q = p.subset([j for j in range(len(p)) if j != i])
    gaps, _ = analysis.find_gaps(q, 60)
    assert len(gaps) == 1
    (x, y), area = gaps[0]
    np.testing.assert_allclose((x, y), p.centroids()[i], atol=0.2)


def test_concave_outline_is_not_a_gap():
    # a substitution patch has bays; none of them may count as a hole
    for a in (1, 10, 150):
        assert analysis.find_gaps(reparameterize(patch("R6", 60, 3), a), a)[0] == []


def test_swapped_decoration_mismatches():
    p = patch("R12", 60, 2)
    i = _central(p)
    k = p.proto[i]
    t = p.prototiles[k]
    alt = next(j for j, o in enumerate(p.prototiles) if j != k and o.kind is t.kind and o.tclass is t.tclass)
    pr = p.proto.copy()
    pr[i] = alt
    q = Patch(p.meta, p.prototiles, pr, p.rot, p.flip, p.anchor)
    mm = analysis.find_mismatches(q, ruleset("R12", 60).matching)
    assert mm and all(i in (a, b) for a, b, _ in mm)
    assert not analysis.validate(q).passed


def test_outline_of_a_triangle():
    sx, ex = analysis.outline(patch("R12", 60, 0), 60)
    assert len(sx) == 3
    assert np.linalg.norm(ex - sx, axis=1) == pytest.approx([1, 1, 1])


def test_census_counts_and_json():
    p = patch("R6", 36, 2)
    c = analysis.census(p)
    assert c.total == len(p)
    assert c.green + c.red == c.triangles
    assert sum(c.orientations.values()) == len(p)
    assert sum(c.prototiles.values()) == len(p)
    assert c.total_area == pytest.approx(p.areas().sum())
    assert '"triangles"' in c.to_json()


def test_report_lines():
    r = analysis.validate(patch("R12", 60, 1))
    assert r.lines()[0].startswith("validate alpha=60/1 passed=1")
    assert '"passed": true' in r.to_json()


def test_period_at_zero_is_unit():
    t = analysis.periodicity_scan(patch("R12", 60, 3), "0", 3.0)
    assert t is not None
    assert math.hypot(*t) == pytest.approx(1.0)


def test_no_period_at_sixty_small():
    assert analysis.periodicity_scan(patch("R12", 60, 3), 60, 10.0) is None


def test_structure_graph():
    p = patch("R12", 60, 3)
    g = analysis.underlying_structure(p)
    kinds = g.face_kinds()
    assert set(kinds) <= {"triangle", "rhombus"}
    assert all(len(n.tiles) == 6 for n in g.nodes)
    assert g.lines()[0].startswith(f"structure alpha=60/1 nodes={len(g.nodes)}")
    g90 = analysis.underlying_structure(reparameterize(p, 90))
    assert g90.rhombus_angles() == pytest.approx([90.0])


def test_structure_needs_a_valid_patch():
    p = patch("R12", 60, 2)
    q = p.subset(list(range(len(p))) + [0])
    with pytest.raises(analysis.NotValidated):
        analysis.underlying_structure(q)
