import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chisquare, ortho_group

import oracles
from simplexscope import fractal as F
from simplexscope import pushforward as P
from simplexscope.configmeasure import pair_count
from simplexscope._errors import InvalidInputError


def random_ps(seed, n, d):
    rng = np.random.default_rng(seed)
    return F.PointSet.weighted(rng.normal(size=(n, d)), rng.uniform(0.2, 1.0, n))


def sorted_atoms(z, w):
    order = np.lexsort(np.round(z, 9).T[::-1])
    return z[order], w[order]


# -- Haar sampling ------------------------------------------------------------

@pytest.mark.parametrize("d", [2, 3, 4])
def test_haar_invariants(d):
    qs = P.haar_rotations(d, 2000, 5)
    eye = np.broadcast_to(np.eye(d), qs.shape)
    assert np.max(np.abs(np.swapaxes(qs, 1, 2) @ qs - eye)) <= 1e-12
    assert np.max(np.abs(np.abs(np.linalg.det(qs)) - 1)) <= 1e-12
    single = P.haar_rotation(d, 17).matrix
    assert np.max(np.abs(single.T @ single - np.eye(d))) <= 1e-12


def test_haar_deterministic():
    a, b = P.haar_rotation(3, 99), P.haar_rotation(3, 99)
    assert np.array_equal(a.matrix, b.matrix) and a.seed == 99
    assert np.array_equal(P.haar_rotations(2, 10, 4), P.haar_rotations(2, 10, 4))
    assert not np.array_equal(P.haar_rotation(3, 98).matrix, a.matrix)


def test_haar_angle_uniform():
    qs = P.haar_rotations(2, 20_000, 2024)
    angle = np.arctan2(qs[:, 1, 0], qs[:, 0, 0])
    counts = np.histogram(angle, bins=16, range=(-np.pi, np.pi))[0]
    assert chisquare(counts).pvalue > 0.001


def test_haar_both_orientations():
    # sampling O(d) rather than SO(d): about half the determinants are -1
    det = np.linalg.det(P.haar_rotations(3, 4000, 8))
    assert 0.45 < np.mean(det < 0) < 0.55


def test_haar_trace_moments():
    # E tr(Q) = 0 and E tr(Q)^2 = 1 on O(d) under Haar measure
    tr = np.trace(P.haar_rotations(3, 40_000, 3), axis1=1, axis2=2)
    assert abs(tr.mean()) < 0.03
    assert abs((tr ** 2).mean() - 1) < 0.05


def test_haar_rejects_line():
    with pytest.raises(InvalidInputError):
        P.haar_rotation(1, 0)


# -- lambda pushforward ---------------------------------------------------------

def test_lambda_single_point():
    lam = P.lambda_pushforward(F.PointSet.uniform([[0.0, 0.0]]), 3.0, P.haar_rotation(2, 1))
    assert lam.atoms.tolist() == [[0.0, 0.0]] and lam.weights.tolist() == [1.0]


def test_lambda_two_points():
    ps = F.PointSet.uniform([[0.0, 0.0], [1.0, 0.0]])
    lam = P.lambda_pushforward(ps, 1.0, np.eye(2))
    z, w = sorted_atoms(lam.atoms, lam.weights)
    assert z.tolist() == [[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]]
    assert w.tolist() == [0.25, 0.5, 0.25]


@given(st.integers(0, 10 ** 6), st.integers(1, 12), st.integers(2, 3), st.floats(0.1, 10))
def test_lambda_mass_and_support(seed, n, d, r):
    ps = random_ps(seed, n, d)
    theta = ortho_group.rvs(d, random_state=seed)
    lam = P.lambda_pushforward(ps, r, theta)
    assert abs(lam.total_mass - 1) <= 1e-12
    # every atom is u - r theta v for some support pair
    cand = (ps.points[:, None, :] - r * (ps.points @ theta.T)[None, :, :]).reshape(-1, d)
    dist = np.min(np.max(np.abs(lam.atoms[:, None, :] - cand[None, :, :]), axis=2), axis=1)
    assert np.all(dist <= 1e-12)


@given(st.integers(0, 10 ** 6), st.integers(1, 8), st.floats(0.2, 5))
def test_lambda_rotation_covariance(seed, n, r):
    ps = random_ps(seed, n, 2)
    rng = np.random.default_rng(seed)
    theta = ortho_group.rvs(2, random_state=rng)
    q = ortho_group.rvs(2, random_state=rng)
    base = P.lambda_pushforward(ps, r, theta, merge_tol=0)
    moved = P.lambda_pushforward(F.PointSet(ps.points @ q.T, ps.weights), r, q @ theta @ q.T, merge_tol=0)
    # no merging, so atoms stay in pair order
    assert np.max(np.abs(moved.atoms - base.atoms @ q.T)) <= 1e-12
    assert np.array_equal(moved.weights, base.weights)


@given(st.integers(0, 10 ** 6), st.integers(1, 8), st.floats(0.2, 5))
def test_lambda_translation_shift(seed, n, r):
    ps = random_ps(seed, n, 2)
    theta = ortho_group.rvs(2, random_state=seed)
    t = np.array([0.7, -1.3])
    base = P.lambda_pushforward(ps, r, theta, merge_tol=0)
    moved = P.lambda_pushforward(F.PointSet(ps.points + t, ps.weights), r, theta, merge_tol=0)
    assert np.max(np.abs(moved.atoms - base.atoms - (t - r * theta @ t))) <= 1e-12


def test_lambda_validation():
    ps = F.PointSet.uniform([[0.0, 0.0]])
    with pytest.raises(InvalidInputError):
        P.lambda_pushforward(ps, 0.0, np.eye(2))
    with pytest.raises(InvalidInputError):
        P.lambda_pushforward(ps, 1.0, np.eye(3))


# -- histogram functional -------------------------------------------------------

@given(st.integers(0, 10 ** 6), st.integers(1, 200), st.integers(-20, 20), st.integers(-20, 20))
def test_cell_masses_shift_by_grid_multiple(seed, n, a, b):
    rng = np.random.default_rng(seed)
    h = 0.125
    z = rng.integers(-64, 64, size=(n, 2)) / 32.0  # dyadic, so shifts are exact
    w = rng.random(n)
    m0 = np.sort(P.cell_masses(z, w, h))
    m1 = np.sort(P.cell_masses(z + h * np.array([a, b]), w, h))
    assert np.array_equal(m0, m1)
    assert math.fsum(m0) == pytest.approx(math.fsum(w), rel=1e-12)


def test_functional_translation_invariant_at_unit_scale():
    # with r = 1 and theta = -identity the difference atoms move by 2t
    ps = F.PointSet.uniform(np.random.default_rng(0).integers(0, 16, size=(40, 2)) / 8.0)
    moved = F.PointSet.uniform(ps.points + np.array([0.25, -0.5]))
    theta = -np.eye(2)
    for h in (0.5, 0.25):
        z0, w0 = P._difference_atoms(ps.points, ps.weights, 1.0, theta)
        z1, w1 = P._difference_atoms(moved.points, moved.weights, 1.0, theta)
        assert np.array_equal(np.sort(P.cell_masses(z0, w0, h)), np.sort(P.cell_masses(z1, w1, h)))


def test_functional_single_point_degenerate():
    ps = F.PointSet.uniform([[0.2, 0.9]])
    for k in (1, 2):
        for h in (0.5, 0.1):
            rep = P.lambda_Lk1_functional(ps, k, 1.0, 4, h, 0, full_output=True)
            assert rep.value == pytest.approx(h ** (-2 * k), rel=1e-12)
            assert rep.atomic and rep.max_cells == 1


def test_functional_flags_only_atomic_regime():
    ps = F.PointSet.uniform(np.random.default_rng(1).random((50, 2)))
    assert P.lambda_Lk1_functional(ps, 1, 1.0, 4, 1e-9, 0, full_output=True).atomic
    assert not P.lambda_Lk1_functional(ps, 1, 1.0, 4, 0.3, 0, full_output=True).atomic


def test_functional_deterministic_and_validated():
    ps = random_ps(3, 30, 2)
    assert P.lambda_Lk1_functional(ps, 1, 1.5, 8, 0.2, 5) == P.lambda_Lk1_functional(ps, 1, 1.5, 8, 0.2, 5)
    for bad in [dict(h=0.0), dict(r=-1.0), dict(n=0)]:
        args = dict(h=0.2, r=1.0, n=4) | bad
        with pytest.raises(InvalidInputError):
            P.lambda_Lk1_functional(ps, 1, args["r"], args["n"], args["h"], 0)


def test_functional_matches_dense_convolution():
    g = (np.arange(32) + 0.5) / 32
    ps = F.PointSet.uniform(np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2))
    n_rot = 64
    est = P.lambda_Lk1_functional(ps, 1, 1.0, n_rot, 0.25, 11)
    thetas = P.haar_rotations(2, n_rot, 11)
    oracle = np.mean([oracles.square_autocorrelation_l2(t, step=1 / 128) for t in thetas])
    assert est == pytest.approx(oracle, rel=0.1)


@given(st.integers(0, 10 ** 6), st.integers(1, 40), st.sampled_from([0.5, 1.0, 2.0]), st.integers(1, 2),
       st.floats(0.01, 2))
def test_hoelder_floor_holds(seed, n, r, k, h):
    ps = random_ps(seed, n, 2)
    rep = P.hoelder_check(ps, k, r, 4, h, seed)
    assert rep.passed
    if h <= 1:
        assert rep.functional >= (1 - 1e-9) * rep.count_floor


def test_hoelder_single_point():
    rep = P.hoelder_check(F.PointSet.uniform([[0.0, 0.0]]), 1, 1.0, 3, 0.5, 0)
    assert rep.max_cells == 1 and rep.count_floor == 1.0
    assert rep.functional == pytest.approx(4.0) and rep.passed


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_hoelder_product_cantor(r):
    ps = F.generate_points(F.preset("cantor13_prod2"), 4)
    rep = P.hoelder_check(ps, 1, r, 8, 0.1, 2)
    assert rep.passed and rep.functional >= rep.count_floor
    assert rep.ratio >= 1


# -- both sides -------------------------------------------------------------------

def test_compare_single_point():
    ps = F.PointSet.uniform([[0.0, 0.0]])
    for k in (1, 2):
        m = k * (k + 1) // 2
        for row in P.compare_sides(ps, k, 1.0, [0.2, 0.1, 0.05], 2, 0):
            assert row.lhs == pytest.approx(row.eps ** (-m), rel=1e-12)
            assert row.rhs == pytest.approx(row.eps ** (-2 * k), rel=1e-12)
            assert row.ratio == pytest.approx(row.eps ** (2 * k - m), rel=1e-12)


def test_compare_swap_relation():
    ps = random_ps(6, 12, 2)
    r, eps = 2.0, 0.3
    a = P.compare_sides(ps, 1, r, [eps], 2, 0)[0]
    b = P.compare_sides(ps, 1, 1 / r, [eps / r], 2, 0)[0]
    assert a.lhs * eps == b.lhs * (eps / r)
    assert a.lhs * eps == pair_count(ps, ps, 1, r, eps)


def test_compare_planar_preset_band():
    ps = F.generate_points(F.preset("sierpinski"), n=200, seed=3)
    for row in P.compare_sides(ps, 1, 1.0, [0.2, 0.1, 0.05], 16, 1):
        assert 0.1 <= row.ratio <= 10


def test_compare_validation():
    with pytest.raises(InvalidInputError):
        P.compare_sides(random_ps(0, 3, 2), 1, 1.0, [0.1, 0.0], 2, 0)
