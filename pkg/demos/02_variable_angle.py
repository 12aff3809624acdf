"""
One symbolic tiling, many angles
================================

A patch stores integer combinations of unit vectors, not coordinates, so
the same patch can be drawn at any rhombus angle.  At 90 degrees the rhombi
are squares and we get a square-triangle tiling.
"""
import math
from pathlib import Path

import numpy as np

from trirhomb.engine import GenerationConfig, generate, reparameterize
from trirhomb.rules import load_default
from trirhomb.render import SweepSpec, write_sweep

out = Path(__file__).with_name("out")

p60 = generate(GenerationConfig(3, "R6", 60), load_default("R6", 60))

for a in (10, 36, 60, 90, 150):
    q = reparameterize(p60, a)
    rh = q.is_rhombus
    ar = q.areas()
    # every rhombus has area sin(alpha); triangles never change
    print(f"alpha={a:3d}  rhombus area {ar[rh].min():.6f}..{ar[rh].max():.6f}"
          f"  (sin = {math.sin(math.radians(a)):.6f})  total {ar.sum():.4f}")

# the angles of a rhombus corner at 90 degrees
sq = reparameterize(p60, 90)
xy = sq.polygons()[int(np.flatnonzero(sq.is_rhombus)[0])]
u, v = xy[1] - xy[0], xy[3] - xy[0]
print("corner angle at 90:", math.degrees(math.acos(np.dot(u, v))))

# sweep from the flat limit to the other one
paths = write_sweep(out / "sweep", p60, SweepSpec(0, 180, 19))
print(len(paths), "frames in", out / "sweep")
