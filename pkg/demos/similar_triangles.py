"""Finding similar copies of a triangle.

Three copies of one triangle are planted at scales 1, 2 and 3, rotated and
scattered about the plane. The direction-hash index looks for pairs of
3-point configurations whose distance vectors are proportional, and each
candidate is confirmed by recovering an explicit similarity map.

Run with ``python demos/similar_triangles.py``.
"""
import numpy as np
from scipy.stats import ortho_group

from simplexscope import configmeasure as cm
from simplexscope import fractal as F

rng = np.random.default_rng(3)
triangle = np.array([[0.0, 0.0], [1.0, 0.0], [0.3, 0.8]])
copies = []
for n, scale in enumerate([1.0, 2.0, 3.0]):
    rot = ortho_group.rvs(2, random_state=rng)
    copies.append(scale * triangle @ rot.T + rng.uniform(-10, 10, size=2))
# a handful of unrelated points as clutter
pts = np.concatenate(copies + [rng.uniform(-10, 10, size=(5, 2))])
ps = F.PointSet.uniform(pts)

for r in (2.0, 3.0, 1.5):
    wits = [w for w in cm.find_similar_pairs(ps, 2, r) if len(set(w.base_tuple)) == 3]
    print(f"r = {r}: {len(wits)} nondegenerate witnesses")
    if wits:
        w = wits[0]
        tr = w.transforms[0]
        print(f"  {w.base_tuple} -> {w.other_tuples[0]}, scale {tr.scale:.6f}, residual {w.residual:.1e}")

# All three copies at once: a multiplicity-3 witness.
multi = [w for w in cm.find_multi_similarity(ps, 2, (2.0, 3.0)) if len(set(w.base_tuple)) == 3]
w = multi[0]
print(f"\nmultiplicity {w.multiplicity}: base {w.base_tuple}, copies {w.other_tuples}, "
      f"residual {w.residual:.1e}")

# With a pinned vertex: pairs (y, z) with |pin - z| = 2 |pin - y|.
pairs = cm.pinned_search(ps, pts[0], 2.0, 1e-9)
print(f"\npinned at point 0, ratio 2: {len(pairs)} pairs")
