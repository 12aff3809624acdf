import numpy as np
import pytest

from trirhomb.geometry import DegenerateTile
from trirhomb.tiling import (Arrow, Color, ParseError, TileKind, UnresolvedPrototile, atomic_write,
                             build_index, concat, neighbors, parse_patch, serialize_patch,
                             tile_vertices, vertex_sharing)

from conftest import patch, ruleset


def test_colour_and_arrow():
    assert Color.BLACK.other is Color.WHITE
    assert Color.WHITE.other is Color.BLACK


@pytest.mark.parametrize("variant", ["R28", "R12", "R6"])
def test_patch_text_round_trip(variant):
    p = patch(variant, 36, 2)
    text = serialize_patch(p)
    q = parse_patch(text, ruleset(variant, 36).prototiles)
    assert serialize_patch(q) == text
    assert (q.anchor == p.anchor).all() and (q.rot == p.rot).all() and (q.flip == p.flip).all()
    assert q.meta == p.meta


def test_parse_errors():
    protos = ruleset("R12", 60).prototiles
    with pytest.raises(ParseError):
        parse_patch("", protos)
    with pytest.raises(ParseError):
        parse_patch("not a patch\n", protos)
    good = serialize_patch(patch("R12", 60, 0)).splitlines()
    with pytest.raises(UnresolvedPrototile):
        parse_patch("\n".join([good[0], good[1].replace(good[1].split()[5], "NOPE")]), protos)
    with pytest.raises(ParseError) as e:
        parse_patch(good[0] + "\ntriangle x\n", protos)
    assert e.value.line == 2


def test_tile_view():
    p = patch("R12", 60, 1)
    t = p[0]
    assert t.id == 0
    assert len(t.vertices) == (3 if t.kind is TileKind.TRIANGLE else 4)
    assert t.decoration.arrows == tuple(Arrow.FORWARD if c is Color.BLACK else Arrow.BACKWARD
                                        for c in t.decoration.corner_labels)
    np.testing.assert_allclose(t.xy(60), p.polygons()[0], atol=1e-12)
    assert t.area(60) > 0


def test_rhombus_vertices_refused_at_degenerate_alpha():
    p = patch("R12", 60, 1)
    i = int(np.flatnonzero(p.is_rhombus)[0])
    with pytest.raises(DegenerateTile):
        tile_vertices(p[i], 0)
    assert len(tile_vertices(p[i], 0, limit=True)) == 4
    assert p.areas(0)[i] == pytest.approx(0.0, abs=1e-12)


def test_counter_clockwise_orientation():
    p = patch("R6", 36, 2)
    assert (p.areas() > 0).all()


def test_concat_and_subset():
    p = patch("R12", 60, 1)
    q = concat([p.subset([0, 1]), p.subset([2])])
    assert len(q) == 3
    assert (q.anchor == p.anchor[:3]).all()


def test_index_and_neighbors():
    p = patch("R12", 60, 2)
    idx = build_index(p, 60, 1.0)
    assert len(idx) > 0
    share = vertex_sharing(p)
    nb = neighbors(p, 0, idx)
    assert nb
    for j, c in nb:
        assert share[(min(0, j), max(0, j))] == c


def test_atomic_write(tmp_path):
    f = tmp_path / "out.txt"
    atomic_write(f, "hello\n")
    atomic_write(f, "again\n")
    assert f.read_text() == "again\n"
    assert [x.name for x in tmp_path.iterdir()] == ["out.txt"]
    atomic_write(tmp_path / "b.bin", b"\x00\x01")
    assert (tmp_path / "b.bin").read_bytes() == b"\x00\x01"
