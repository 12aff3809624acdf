import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from trirhomb import analysis
from trirhomb.render import (ColorBy, EmptyPatch, MismatchedGraph, StyleSpec, SweepSpec, render_structure,
                             render_svg, render_sweep, write_sweep)

from conftest import patch

NS = {"s": "http://www.w3.org/2000/svg"}


def _polys(doc):
    root = ET.fromstring(doc.encode())
    return root.findall(".//s:g[@class='tiles']/s:polygon", NS)


def test_one_polygon_per_tile():
    p = patch("R12", 60, 0)
    polys = _polys(render_svg(p))
    assert len(polys) == 1
    assert "triangle" in polys[0].get("class")


def test_parse_back_coordinates():
    p = patch("R6", 36, 2)
    polys = _polys(render_svg(p))
    assert len(polys) == len(p)
    for el, xy in zip(polys, p.polygons()):
        got = np.array([[float(v) for v in pt.split(",")] for pt in el.get("points").split()])
        np.testing.assert_allclose(got, xy, atol=5e-7)


def test_glue_class_and_degenerate_frames():
    p = patch("R12", 60, 1)
    doc = render_svg(p, "0")
    rh = [el for el in _polys(doc) if "rhombus" in el.get("class")]
    assert rh and all("glue" in el.get("class") and el.get("fill") == "none" for el in rh)
    doc = render_svg(p, 60, StyleSpec(glue_mode=True))
    assert all("glue" in el.get("class") for el in _polys(doc) if "rhombus" in el.get("class"))
    assert not any("glue" in el.get("class") for el in _polys(render_svg(p)))


def test_styles_are_deterministic():
    p = patch("R12", 36, 2)
    for cb in ColorBy:
        s = StyleSpec(show_decorations=True, color_by=cb)
        assert render_svg(p, style=s) == render_svg(p, style=s)
    assert StyleSpec(color_by="kind").color_by is ColorBy.KIND
    assert "class=\"dot\"" in render_svg(p, style=StyleSpec(show_decorations=True))


def test_no_negative_zero():
    doc = render_svg(patch("R28", 90, 2))
    assert not re.search(r"-0\.000000\b", doc)


def test_empty_patch():
    with pytest.raises(EmptyPatch):
        render_svg(patch("R12", 60, 1).subset([]))


def test_mismatched_graph():
    big = patch("R12", 60, 3)
    g = analysis.underlying_structure(big)
    doc = render_structure(big, g)
    assert doc.count("<circle class=\"node\"") == len(g.nodes)
    with pytest.raises(MismatchedGraph):
        render_structure(big.subset(range(10)), g)


def test_sweep(tmp_path):
    p = patch("R12", 60, 1)
    sw = SweepSpec("0", "180", 5)
    docs = render_sweep(p, sw)
    assert len({len(_polys(d)) for d in docs}) == 1
    assert docs[2] == render_svg(p, 90)
    same = render_sweep(p, SweepSpec(36, 36, 2))
    assert same[0] == same[1]
    paths = write_sweep(tmp_path, p, sw)
    assert [x.name for x in paths] == [f"frame_{i:04d}.svg" for i in range(5)]
    assert (tmp_path / "manifest.txt").read_text().splitlines()[1] == "frame_0001.svg alpha=45/1"
    with pytest.raises(ValueError):
        SweepSpec(0, 1, 1)
