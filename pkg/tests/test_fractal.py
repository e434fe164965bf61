import io
import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from simplexscope import fractal as F
from simplexscope._errors import DegenerateInputError, InvalidInputError, ResourceLimitError

LOG2_LOG3 = math.log(2) / math.log(3)


# -- similarity dimension ---------------------------------------------------

def test_similarity_dimension_examples():
    assert F.similarity_dimension(F.preset("cantor13")) == pytest.approx(0.6309297536, abs=1e-10)
    assert F.similarity_dimension(F.preset("cantor13_prod2")) == pytest.approx(1.2618595071, abs=1e-10)
    assert F.similarity_dimension(F.preset("cantor14_prod2")) == pytest.approx(1.0, abs=1e-15)


def test_moran_residual_unequal_ratios():
    ifs = F.IFS([F.SimilarityMap(0.5, np.eye(1), [0.0]), F.SimilarityMap(0.25, np.eye(1), [0.75])])
    s = F.similarity_dimension(ifs)
    assert abs(0.5 ** s + 0.25 ** s - 1) <= 1e-10
    # golden-ratio root of x + x^2 = 1 with x = 2^-s
    assert s == pytest.approx(math.log((1 + math.sqrt(5)) / 2) / math.log(2), abs=1e-12)


@given(st.lists(st.floats(0.05, 0.45), min_size=2, max_size=5), st.integers(0, 4), st.floats(0.001, 0.04))
def test_dimension_monotone_in_ratios(ratios, which, bump):
    which %= len(ratios)
    maps = [F.SimilarityMap(r, np.eye(1), [float(i)]) for i, r in enumerate(ratios)]
    s0 = F.similarity_dimension(F.IFS(maps))
    rho = np.array(ratios)
    assert abs(np.sum(rho ** s0) - 1) <= 1e-10
    ratios2 = list(ratios)
    ratios2[which] += bump
    maps2 = [F.SimilarityMap(r, np.eye(1), [float(i)]) for i, r in enumerate(ratios2)]
    assert F.similarity_dimension(F.IFS(maps2)) > s0


def test_ifs_validation():
    with pytest.raises(InvalidInputError):
        F.IFS([F.SimilarityMap(0.5, np.eye(1), [0.0])])
    with pytest.raises(InvalidInputError):
        F.SimilarityMap(1.0, np.eye(1), [0.0])
    with pytest.raises(InvalidInputError):
        F.SimilarityMap(0.5, np.array([[1.0, 0.2], [0.0, 1.0]]), [0.0, 0.0])
    with pytest.raises(InvalidInputError):
        F.preset("no-such-preset")


# -- point generation -------------------------------------------------------

def test_level_one_cantor():
    ps = F.generate_points(F.preset("cantor13"), 1, base=[0.0])
    np.testing.assert_allclose(ps.points.ravel(), [0, 2 / 3], atol=1e-15)
    np.testing.assert_allclose(ps.weights, [0.5, 0.5], atol=1e-15)


def test_level_zero_is_base_point():
    ps = F.generate_points(F.preset("sierpinski"), 0)
    assert len(ps) == 1 and ps.weights.tolist() == [1.0]
    np.testing.assert_allclose(ps.points[0], F.preset("sierpinski").maps[0].fixed_point())


def bounding_box(ifs, iters=200):
    """Hull of the attractor from the map fixed points: iterate the box of
    the fixed points under the maps until it stops growing."""
    fixed = np.array([m.fixed_point() for m in ifs.maps])
    lo, hi = fixed.min(0), fixed.max(0)
    for _ in range(iters):
        corners = np.array(list(itertools.product(*zip(lo, hi))))
        imgs = np.concatenate([np.array([m(c) for c in corners]) for m in ifs.maps])
        lo2, hi2 = np.minimum(lo, imgs.min(0)), np.maximum(hi, imgs.max(0))
        if np.allclose(lo2, lo) and np.allclose(hi2, hi):
            break
        lo, hi = lo2, hi2
    return lo, hi


@pytest.mark.parametrize("name", sorted(F.PRESETS))
def test_points_inside_bounding_box(name):
    ifs = F.preset(name)
    lo, hi = bounding_box(ifs)
    for ps in (F.generate_points(ifs, 3), F.generate_points(ifs, n=500, seed=1)):
        assert np.all(ps.points >= lo - 1e-12) and np.all(ps.points <= hi + 1e-12)
        assert abs(math.fsum(ps.weights) - 1) <= 1e-12


def test_cylinder_weights_follow_ratios():
    ifs = F.IFS([F.SimilarityMap(0.5, np.eye(1), [0.0]), F.SimilarityMap(0.25, np.eye(1), [0.75])])
    s = F.similarity_dimension(ifs)
    ps = F.generate_points(ifs, 3)
    for w, code in zip(ps.weights, itertools.product(range(2), repeat=3)):
        assert w == pytest.approx(math.prod([0.5, 0.25][c] ** s for c in code), rel=1e-12)
    assert abs(math.fsum(ps.weights) - 1) <= 1e-12


def test_full_mode_lexicographic_order():
    ps = F.generate_points(F.preset("cantor13"), 2, base=[0.0])
    np.testing.assert_allclose(ps.points.ravel(), [0, 2 / 9, 2 / 3, 8 / 9], atol=1e-15)


def test_random_mode_deterministic():
    a = F.generate_points(F.preset("carpet"), n=300, seed=42)
    b = F.generate_points(F.preset("carpet"), n=300, seed=42)
    c = F.generate_points(F.preset("carpet"), n=300, seed=43)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)


def test_generation_errors():
    ifs = F.preset("cantor13")
    with pytest.raises(InvalidInputError):
        F.generate_points(ifs, n=10)
    with pytest.raises(InvalidInputError):
        F.generate_points(ifs)
    with pytest.raises(ResourceLimitError):
        F.generate_points(ifs, 30)


# -- point sets and IO ------------------------------------------------------

def test_pointset_validation():
    with pytest.raises(InvalidInputError):
        F.PointSet(np.zeros((2, 2)), [0.5, 0.6])
    with pytest.raises(InvalidInputError):
        F.PointSet(np.zeros((2, 2)), [1.0, 0.0])
    with pytest.raises(InvalidInputError):
        F.PointSet(np.array([[0.0], [np.inf]]), [0.5, 0.5])


@given(st.integers(1, 3), st.integers(1, 30), st.integers(0, 1000))
def test_csv_round_trip(d, n, seed):
    rng = np.random.default_rng(seed)
    ps = F.PointSet.weighted(rng.normal(size=(n, d)), rng.uniform(0.1, 1, n))
    buf = io.StringIO()
    F.write_pointset_csv(ps, buf)
    assert buf.getvalue().startswith(f"# d={d}\n")
    back = F.read_pointset_csv(io.StringIO(buf.getvalue()))
    assert np.array_equal(back.points, ps.points)
    np.testing.assert_allclose(back.weights, ps.weights, rtol=1e-15)


def test_csv_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        F.read_pointset_csv(io.StringIO("0,1,0.5\n"))
    with pytest.raises(InvalidInputError):
        F.read_pointset_csv(io.StringIO("# d=2\n0.1,1.0\n"))


# -- Frostman surrogate -----------------------------------------------------

def test_frostman_equally_spaced_segment():
    pts = np.linspace(0, 1, 1024)
    radii = np.geomspace(0.05, 0.5, 10)
    ps = F.PointSet.uniform(pts)
    value = F.frostman_surrogate(ps, 1.0, radii, probes=2048)
    assert value == pytest.approx(oracles.frostman_brute(pts, ps.weights, 1.0, radii), rel=1e-12)
    assert value <= 2.5


def test_frostman_single_atom_flags_growth():
    radii = [0.001, 0.01, 0.1]
    rep = F.frostman_surrogate(F.PointSet.uniform([[0.5, 0.5]]), 1.5, radii, full_output=True)
    assert rep.value == pytest.approx(1 / 0.001 ** 1.5)
    assert rep.growing


def test_frostman_cantor_level_six():
    ps = F.generate_points(F.preset("cantor13"), 6)
    radii = 3.0 ** -np.arange(0, 7)
    value = F.frostman_surrogate(ps, LOG2_LOG3, radii, probes=64)
    assert value == pytest.approx(oracles.frostman_brute(ps.points, ps.weights, LOG2_LOG3, radii), rel=1e-12)
    assert value <= 4
    assert not F.frostman_surrogate(ps, LOG2_LOG3, radii, probes=64, full_output=True).growing


# -- box dimension ----------------------------------------------------------

def test_box_dimension_segment():
    ps = F.PointSet.uniform(np.linspace(0, 1, 4096))
    scales = np.geomspace(0.3, 1e-3, 8)
    est = F.box_dimension_estimate(ps, scales)
    counts = oracles.box_counts(ps.points.tolist(), scales)
    assert est == pytest.approx(np.polyfit(np.log(1 / scales), np.log(counts), 1)[0], rel=1e-12)
    assert abs(est - 1.0) <= 0.1


def test_box_dimension_product_cantor():
    ps = F.generate_points(F.preset("cantor13_prod2"), 6)
    scales = np.geomspace(0.5, 3.0 ** -5, 8)
    est = F.box_dimension_estimate(ps, scales)
    assert oracles.box_counts(ps.points.tolist(), scales) == [4, 16, 36, 121, 324, 625, 1444, 1024]
    assert est == pytest.approx(1.2305221739592636, rel=1e-12)
    assert abs(est - 1.26) <= 0.1


def test_box_dimension_single_point():
    assert F.box_dimension_estimate(F.PointSet.uniform([[1.0, 2.0]]), [1, 0.1, 0.01]) == 0.0


def test_box_dimension_scale_validation():
    ps = F.PointSet.uniform(np.linspace(0, 1, 10))
    with pytest.raises(InvalidInputError):
        F.box_dimension_estimate(ps, [0.1, 0.05])
    with pytest.raises(InvalidInputError):
        F.box_dimension_estimate(ps, [0.1, 0.08, 0.05])
    with pytest.raises(DegenerateInputError):
        F.box_dimension_estimate(ps, [0.1, 0.1, 0.1])
