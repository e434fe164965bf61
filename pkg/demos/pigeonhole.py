"""A measure-theoretic pigeonhole principle, checked by brute force.

Given N events of probability at least c, some n of them must share an
event of positive probability once N is large enough. The bound comes from
a recursion: pairs of heavy sets overlap in at least c^3/3, and those
overlaps are heavy sets of the next level down.

Run with ``python demos/pigeonhole.py``.
"""
from simplexscope import pigeonhole as PH

for c in (0.7, 0.5, 0.3, 0.1):
    print(f"c = {c}: P_c = {PH.p_constant(c)}, N(c,2) = {PH.n_bound(c, 2)}, N(c,3) = {PH.n_bound(c, 3)}")

# Two sets each holding 6 of 10 equally likely atoms overlap in at least 2 atoms.
space = PH.FiniteProbSpace.uniform(10)
fam = PH.SetFamily.from_indices([range(0, 6), range(4, 10)], space)
print("\nbest pair:", PH.extract_pair(fam, 0.6))

# Every family of the guaranteed size on 12 atoms, searched exhaustively.
rep = PH.verify_lemma(PH.FiniteProbSpace.uniform(12), 0.3, 2, exhaustive=True)
print(f"\nexhaustive M=12, c=0.3, n=2: {rep.counterexamples} counterexamples, {rep.search_nodes} search nodes")

# At c = 1/2 on ten atoms, two disjoint halves show the n = 2 bound is sharp
# only up to equality; those families are reported as boundary cases.
rep = PH.verify_lemma(space, 0.5, 2, exhaustive=True)
print(f"M=10, c=0.5: {rep.counterexamples} counterexamples, {rep.boundary_cases} boundary cases")

# Random and packed families for n = 3.
rep = PH.verify_lemma(PH.FiniteProbSpace.uniform(30), 0.3, 3, trials=1000, seed=1)
print(f"random M=30, c=0.3, n=3, N={rep.family_size}: {rep.counterexamples} counterexamples, "
      f"smallest triple intersection {rep.min_intersection:.4f}")
