"""
Generating and checking a patch
===============================

Substitute one green triangle a few times with the 12-rule system, then
check the result for overlaps, holes and decoration clashes.
"""
from pathlib import Path

from trirhomb.analysis import census, validate
from trirhomb.engine import GenerationConfig, generate
from trirhomb.rules import check_ruleset, load_default
from trirhomb.render import StyleSpec, render_svg
from trirhomb.tiling import serialize_patch

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)

# the rule file itself is checked first: children must fill each supertile
rs = load_default("R12", alpha=36)
print(check_ruleset(rs).lines()[0])

p = generate(GenerationConfig(depth=3, variant="R12", alpha=36), rs)
print(len(p), "tiles")

rep = validate(p)
print(rep.lines()[0])

# census: counts by kind, class and orientation
for line in census(p).lines()[:2]:
    print(line)

(out / "r12_depth3.trp").write_text(serialize_patch(p))
(out / "r12_depth3.svg").write_text(render_svg(p, style=StyleSpec(show_decorations=True)))
print("wrote", out / "r12_depth3.svg")
