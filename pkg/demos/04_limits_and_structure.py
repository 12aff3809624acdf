"""
Limits and the hidden structure
===============================

At 0 (and 180) degrees the rhombi flatten to segments and what remains is
an ordinary periodic tiling by triangles.  Between the limits the tiling has
no period.  Joining the centres of the six-triangle hexagons exposes a
coarser tiling made of triangles and rhombi.
"""
from pathlib import Path

from trirhomb.analysis import periodicity_scan, underlying_structure
from trirhomb.engine import GenerationConfig, generate, reparameterize
from trirhomb.rules import load_default
from trirhomb.render import StyleSpec, render_structure, render_svg

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)

p = generate(GenerationConfig(4, "R12", 60), load_default("R12", 60))

print("zero-area rhombi at 0:", int((abs(p.areas(0)[p.is_rhombus]) < 1e-12).sum()), "of", int(p.is_rhombus.sum()))
print("period at alpha=0:  ", periodicity_scan(p, "0", max_radius=3))
print("period at alpha=60: ", periodicity_scan(p, 60, max_radius=10))
(out / "limit0.svg").write_text(render_svg(p, "0"))

q = reparameterize(generate(GenerationConfig(3, "R12", 60), load_default("R12", 60)), 10)
g = underlying_structure(q)
print(g.lines()[0])
print("rhombus face angles:", [round(x, 3) for x in g.rhombus_angles()])
(out / "structure10.svg").write_text(render_structure(q, g, style=StyleSpec(color_by="kind")))
