"""Counting similar pairs two ways.

The weighted number of pairs of configurations that are similar at scale r,
up to eps, can also be read off the difference measure lambda: push
mu x mu forward under (u, v) -> u - r theta v and average its L^{k+1} norm over
random orthogonal theta. This demo computes both sides on 200 random points
of the Sierpinski gasket and prints their ratio, which should stay bounded as
eps shrinks. Then it checks the discrete Hoelder floor behind the lower
bound.

Run with ``python demos/two_sides.py``.
"""
from simplexscope import fractal as F
from simplexscope import pushforward as P

ps = F.generate_points(F.preset("sierpinski"), n=200, seed=3)

print("   eps     pair side   rotation side   ratio")
for row in P.compare_sides(ps, k=1, r=1.0, eps_grid=[0.2, 0.1, 0.05], n_rotations=64, seed=1):
    print(f"{row.eps:6.3f}  {row.lhs:10.4f}  {row.rhs:13.4f}  {row.ratio:7.3f}")

# The histogram functional can never drop below mass^(k+1) / M^k, M being
# the number of occupied cells.
for r in (0.5, 1.0, 2.0):
    rep = P.hoelder_check(ps, 1, r, n_rotations=16, h=0.1, seed=2)
    print(f"r = {r}: functional {rep.functional:.3f}, floor {rep.floor:.3f}, passed {rep.passed}")

# For a single point everything is atomic and the functional blows up like h^(-dk).
lone = F.PointSet.uniform([[0.0, 0.0]])
for h in (0.5, 0.1, 0.02):
    rep = P.lambda_Lk1_functional(lone, 1, 1.0, 4, h, 0, full_output=True)
    print(f"single point, h = {h}: {rep.value:.1f} (atomic: {rep.atomic})")
