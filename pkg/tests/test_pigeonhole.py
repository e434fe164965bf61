import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from simplexscope import pigeonhole as PH
from simplexscope._errors import InvalidInputError


def n_bound_unrolled(c, n):
    """The size recursion unfolded bottom-up: c_j = c_{j-1}^3 / 3, with
    N = ceil(1/c_{n-2}) at the bottom and N <- 2N + P at each level above."""
    levels = [Fraction(repr(c))]
    for _ in range(max(n - 2, 0)):
        levels.append(levels[-1] ** 3 / 3)
    if n == 1:
        return 1
    N = math.ceil(1 / levels[-1])
    for lev in reversed(levels[:-1]):
        N = 2 * N + 2 ** (oracles.f_iterations_to(float(lev)) + 1)
    return N


# -- f and the constants ----------------------------------------------------------

def test_f_examples():
    assert PH.f_iter(0.3) == pytest.approx(0.591, abs=1e-15)
    assert PH.f_iter(0.6) == pytest.approx(1.128, abs=1e-15)
    for bad in (0.0, 1.0, -0.2):
        with pytest.raises(InvalidInputError):
            PH.f_iter(bad)


@given(st.floats(1e-9, 1 - 1e-9))
def test_f_has_no_fixed_point(c):
    assert PH.f_iter(c) > c


def test_p_constant_examples():
    assert PH.p_constant(0.7) == 2
    assert PH.p_constant(0.3) == 8
    assert PH.p_constant(0.61) == 2
    assert PH.p_constant(0.5) == 4


@given(st.floats(0.005, 0.995))
def test_p_constant_matches_iteration(c):
    assert PH.p_constant(c) == 2 ** (oracles.f_iterations_to(c) + 1)


def test_p_constant_base_case_is_valid():
    # two sets of measure >= 3/5 meet in at least 2c - 1 >= c^3/3
    for c in np.linspace(0.6, 0.999, 200):
        assert 2 * c - 1 >= c ** 3 / 3


def test_n_bound_examples():
    assert PH.n_bound(0.25, 2) == 4
    assert PH.n_bound(0.37, 1) == 1
    assert PH.n_bound(0.5, 3) == 52
    assert PH.n_bound(0.3, 3) == 232
    assert [PH.n_bound(i / 10, 2) for i in range(1, 10)] == [10, 5, 4, 3, 2, 2, 2, 2, 2]
    assert PH.n_bound(Fraction(1, 3), 2) == 3


@given(st.floats(0.02, 0.98), st.integers(1, 4))
def test_n_bound_matches_unrolled(c, n):
    assert PH.n_bound(c, n) == n_bound_unrolled(c, n)


def test_monotonicity_grid():
    grid = [round(0.05 * i, 2) for i in range(1, 20)]
    p = [PH.p_constant(c) for c in grid]
    assert all(a >= b for a, b in zip(p, p[1:]))
    for n in range(1, 5):
        row = [PH.n_bound(c, n) for c in grid]
        assert all(a >= b for a, b in zip(row, row[1:]))
    for c in grid:
        col = [PH.n_bound(c, n) for n in range(1, 6)]
        assert all(a <= b for a, b in zip(col, col[1:]))


def test_n_bound_validation():
    with pytest.raises(InvalidInputError):
        PH.n_bound(0.3, 0)
    with pytest.raises(InvalidInputError):
        PH.n_bound(1.5, 2)


# -- spaces and families ------------------------------------------------------------

def test_space_and_family_roundtrip():
    space = PH.FiniteProbSpace.uniform(5)
    fam = PH.SetFamily.from_bitsets([0b00111, 0b11000], space)
    assert fam.to_bitsets() == [0b00111, 0b11000]
    np.testing.assert_allclose(fam.measures(), [0.6, 0.4])
    fam2 = PH.SetFamily.from_indices([[0, 1, 2], [3, 4]], space)
    assert np.array_equal(fam.sets, fam2.sets)
    with pytest.raises(InvalidInputError):
        PH.FiniteProbSpace(np.array([0.5, 0.6]))
    with pytest.raises(InvalidInputError):
        PH.SetFamily.from_bitsets([1 << 5], space)


# -- pair extraction ----------------------------------------------------------------

def test_extract_pair_overlapping_sets():
    space = PH.FiniteProbSpace.uniform(10)
    fam = PH.SetFamily.from_indices([range(0, 6), range(4, 10)], space)
    res = PH.extract_pair(fam, 0.6)
    assert (res.i, res.j) == (0, 1)
    assert res.measure == pytest.approx(0.2) and res.meets_threshold
    assert res.measure >= 0.6 ** 3 / 3


def test_extract_pair_disjoint_flagged():
    space = PH.FiniteProbSpace.uniform(4)
    fam = PH.pairwise_disjoint_family(space, 0.25, 3)
    res = PH.extract_pair(fam, 0.25)
    assert res.measure == 0 and not res.meets_threshold and not res.guaranteed


def test_extract_pair_rejects_light_sets():
    space = PH.FiniteProbSpace.uniform(10)
    with pytest.raises(InvalidInputError):
        PH.extract_pair(PH.SetFamily.from_indices([[0], [1, 2, 3]], space), 0.3)


def random_heavy_family(rng, weights, c, N):
    """Independent generator: each set is a random subset grown until it
    reaches measure c, then padded with a few extra atoms."""
    M = weights.size
    rows = []
    for _ in range(N):
        row = np.zeros(M, dtype=bool)
        for a in rng.permutation(M):
            if weights[row].sum() >= c:
                break
            row[a] = True
        row[rng.random(M) < rng.random() * 0.2] = True
        rows.append(row)
    return np.array(rows)


def test_extract_pair_guarantee_random():
    space = PH.FiniteProbSpace.uniform(30)
    c = 0.3
    N = PH.p_constant(c) + 1
    rng = np.random.default_rng(0)
    for _ in range(1000):
        res = PH.extract_pair(PH.SetFamily(random_heavy_family(rng, space.weights, c, N), space), c)
        assert res.guaranteed and res.meets_threshold


# -- lemma verification ----------------------------------------------------------

def test_verify_trivial_n1():
    rep = PH.verify_lemma(PH.FiniteProbSpace.uniform(5), 0.4, 1)
    assert rep.counterexamples == 0 and rep.family_size == 1


def test_exhaustive_small_plane():
    rep = PH.verify_lemma(PH.FiniteProbSpace.uniform(12), 0.3, 2, exhaustive=True)
    assert rep.counterexamples == 0 and rep.skipped is None and rep.family_size == 4


def test_boundary_case_recorded():
    rep = PH.verify_lemma(PH.FiniteProbSpace.uniform(10), 0.5, 2, exhaustive=True)
    assert rep.counterexamples == 0
    assert rep.boundary_cases == math.comb(10, 5) // 2
    assert all(ex["boundary"] for ex in rep.examples)


def brute_counterexamples(M, c, n, N):
    w = [1 / M] * M
    heavy = [s for r in range(1, M + 1) for s in itertools.combinations(range(M), r) if r / M >= c - 1e-12]
    rows = [[a in s for a in range(M)] for s in heavy]
    return sum(not oracles.some_n_sets_meet([rows[i] for i in combo], w, n)
               for combo in itertools.combinations(range(len(rows)), N))


@pytest.mark.parametrize("M,c,n,N", [(6, 0.3, 2, 3), (5, 0.4, 3, 3), (6, 0.3, 3, 4), (7, 0.25, 2, 3)])
def test_exhaustive_engine_matches_brute_force(M, c, n, N):
    # below the guaranteed size, so counterexamples do exist
    rep = PH.LemmaReport(c, n, N, M)
    PH._exhaustive(rep, PH.FiniteProbSpace.uniform(M).weights, c, n, N, 10 ** 7)
    assert rep.skipped is None
    assert rep.counterexamples + rep.boundary_cases == brute_counterexamples(M, c, n, N) > 0


def test_exhaustive_budget_reported():
    rep = PH.verify_lemma(PH.FiniteProbSpace.uniform(10), 0.2, 2, exhaustive=True, max_nodes=10)
    assert "exceeded" in rep.skipped


def test_exhaustive_size_limit():
    with pytest.raises(InvalidInputError):
        PH.verify_lemma(PH.FiniteProbSpace.uniform(21), 0.3, 2, exhaustive=True)


def test_infeasible_configuration_skipped():
    # only the full set reaches 0.7 on three atoms, but two distinct sets are needed
    rep = PH.verify_lemma(PH.FiniteProbSpace.uniform(3), 0.7, 2, exhaustive=True)
    assert rep.skipped is not None and rep.families_checked == 0


def test_randomized_verification():
    rep = PH.verify_lemma(PH.FiniteProbSpace.uniform(30), 0.3, 3, trials=400, seed=1)
    assert rep.family_size == 232
    assert rep.counterexamples == 0 and rep.constructive_failures == 0
    assert rep.families_checked == 400 and rep.min_intersection > 0


def test_randomized_verification_deterministic():
    space = PH.FiniteProbSpace.uniform(16)
    a = PH.verify_lemma(space, 0.4, 3, trials=50, seed=9).to_dict()
    b = PH.verify_lemma(space, 0.4, 3, trials=50, seed=9).to_dict()
    assert a == b


@given(st.integers(0, 10 ** 6), st.integers(4, 8), st.sampled_from([0.3, 0.4, 0.5, 0.6]), st.integers(2, 3))
def test_families_at_bound_always_meet(seed, M, c, n):
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.5, 1.5, M)
    w /= w.sum()
    N = PH.n_bound(c, n)
    if N > 60:
        return
    sets = random_heavy_family(rng, w, c, N)
    rows = sets.tolist()
    assert oracles.some_n_sets_meet(rows, w.tolist(), n) if N <= 14 else PH.max_multiplicity(sets) >= n
    wit = PH.lemma_witness(sets, w, c, n)
    if wit is not None:
        assert len(set(wit)) == n
        assert w @ np.logical_and.reduce(sets[wit], axis=0) > 0


def test_pairwise_disjoint_family():
    space = PH.FiniteProbSpace.uniform(8)
    fam = PH.pairwise_disjoint_family(space, 0.25, 4)
    assert len(fam) == 4 and PH.max_multiplicity(fam.sets) == 1
    with pytest.raises(InvalidInputError):
        PH.pairwise_disjoint_family(space, 0.25, 5)
