"""
Tile frequencies
================

Collapsing the decorated rules to (triangle, rhombus) counts gives a 2x2
substitution matrix.  Its Perron eigenvector predicts the share of each tile
kind, and the census of deeper patches approaches it.
"""
import numpy as np

from trirhomb.analysis import census
from trirhomb.engine import GenerationConfig, generate
from trirhomb.rules import load_default, perron_frequencies, substitution_matrix

rs = load_default("R28", 60)
sm = substitution_matrix(rs)
print("collapsed matrix\n", sm.collapsed)

ft, fr, ev = perron_frequencies(sm.collapsed)
print(f"perron eigenvalue {ev:.6f}, frequencies {ft:.5f} / {fr:.5f}")

for d in range(1, 6):
    c = census(generate(GenerationConfig(d, "R28", 60), rs))
    t, r = c.frequencies()
    print(f"depth {d}: {c.total:7d} tiles  triangles {t:.5f}  rhombi {r:.5f}")

# the area of a patch grows by the eigenvalue only in the square case
for a in (60, 90):
    rs_a = rs.with_alpha(a)
    areas = [census(generate(GenerationConfig(d, "R28", a), rs_a)).total_area for d in range(5)]
    print(f"alpha={a}: area ratios", np.round(np.array(areas[1:]) / areas[:-1], 6),
          "lambda^2 =", round(rs_a.inflation_factor ** 2, 6))
