"""Configuration measures, configuration sets and similarity search.

For a weighted point set ``(E, mu)`` and ``k >= 1``:

* ``nu_k`` is the distribution of the distance vector of ``k+1`` points drawn
  independently from ``mu`` (:func:`sample_nu`);
* ``Delta_k(E)`` is the set of realized distance vectors (:func:`delta_k`);
* ``Delta_k^r(E)`` keeps the vectors ``t`` with ``r t`` also realized, up to a
  sup-norm slack ``eps`` (:func:`delta_k_r`).

Repeated-point tuples are always included. Mass-valued results come with the
share carried by the all-zero vector, which users may want to discount.

Two forms of the ``r <-> 1/r`` relation hold exactly on finite sets and are
what this module guarantees: ``r * Delta_k^r = Delta_k^{1/r}`` as sets, and
``pair_count(X, X, k, r, eps) == pair_count(X, X, k, 1/r, eps/r)``. The
literal ``Delta_k^{1/r} = Delta_k^r`` fails on finite sets: for ``{0, 1, 2}``,
``k=1``, ``r=2`` the two sides are ``{0, 2}`` and ``{0, 1}``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from scipy.special import gamma

from . import _parallel
from ._errors import InvalidInputError, ResourceLimitError
from .fractal import PointSet
from .geometry import (
    ABS_FLOOR,
    SimilarityTransform,
    batch_distance_vectors,
    edge_order,
    recover_transform,
)

__all__ = [
    "MAX_TUPLES",
    "DEDUPE_TOL",
    "EmpiricalNu",
    "SimilarityWitness",
    "DeltaIndex",
    "ScanResult",
    "sample_nu",
    "delta_k",
    "delta_k_r",
    "nu_mass_of_delta_r",
    "pair_count",
    "mollified_nu_density",
    "mollified_pairing",
    "annulus_volume",
    "similar_tuple_pairs",
    "find_similar_pairs",
    "find_multi_similarity",
    "joint_mass",
    "scan_r",
    "pinned_search",
]

#: cap on ``n ** (k+1)`` for exhaustive enumeration
MAX_TUPLES = 1 << 22
#: sup-norm tolerance for treating two distance vectors as the same
DEDUPE_TOL = 1e-9
#: cap on unordered pairs kept in the sorted distance table for ``k = 1``
MAX_PAIR_TABLE = 1 << 26


def _parse_mode(mode):
    """Accept ``"exhaustive"``, ``("sampled", n, seed)`` or a dict."""
    if mode is None or mode == "exhaustive":
        return {"mode": "exhaustive"}
    if isinstance(mode, dict):
        mode = dict(mode)
        if mode.get("mode") == "sampled":
            if mode.get("seed") is None:
                raise InvalidInputError("sampled mode requires a seed")
            return {"mode": "sampled", "n": int(mode["n"]), "seed": int(mode["seed"])}
        if mode.get("mode") == "exhaustive":
            return {"mode": "exhaustive"}
    if isinstance(mode, (tuple, list)) and len(mode) == 3 and mode[0] == "sampled":
        if mode[2] is None:
            raise InvalidInputError("sampled mode requires a seed")
        return {"mode": "sampled", "n": int(mode[1]), "seed": int(mode[2])}
    raise InvalidInputError(f"unrecognised sampling mode {mode!r}")


def _all_tuples(n: int, k: int, cap: int = MAX_TUPLES) -> np.ndarray:
    total = n ** (k + 1)
    if total > cap:
        raise ResourceLimitError(f"{n}**{k + 1} = {total} tuples exceeds the cap of {cap}")
    if n == 0:
        return np.empty((0, k + 1), dtype=np.intp)
    return np.indices((n,) * (k + 1)).reshape(k + 1, -1).T.astype(np.intp)


def _sample_tuples(weights: np.ndarray, k: int, n: int, seed, stream: int = 0) -> np.ndarray:
    def draw(args):
        idx, size = args
        rng = _parallel.chunk_rng(seed, idx, stream)
        return rng.choice(weights.size, size=(size, k + 1), p=weights)

    parts = _parallel.pmap(draw, enumerate(_parallel.chunk_sizes(n)))
    return np.concatenate(parts) if parts else np.empty((0, k + 1), dtype=np.intp)


def _merge_rows(vectors: np.ndarray, weights: np.ndarray):
    """Exact duplicates merged; masses summed with compensated arithmetic."""
    if vectors.shape[0] == 0:
        return vectors, weights
    uniq, inv = np.unique(vectors, axis=0, return_inverse=True)
    inv = inv.ravel()
    order = np.argsort(inv, kind="stable")
    bounds = np.flatnonzero(np.diff(inv[order])) + 1
    groups = np.split(weights[order], bounds)
    return uniq, np.array([math.fsum(g) for g in groups])


@dataclass
class EmpiricalNu:
    """Atoms of ``nu_k``: one distance vector per (sampled or enumerated) tuple.

    In exhaustive mode each ordered tuple of point indices appears once with
    weight ``prod mu(x^j)``; in sampled mode each draw from ``mu^(k+1)``
    carries ``1/n``.
    """

    vectors: np.ndarray
    weights: np.ndarray
    tuples: np.ndarray
    k: int
    d: int
    edges: tuple
    sampling: dict = field(default_factory=lambda: {"mode": "exhaustive"})

    @property
    def total_mass(self) -> float:
        return math.fsum(self.weights)

    @property
    def degenerate_mask(self) -> np.ndarray:
        return ~np.any(self.vectors > 0, axis=1)

    @property
    def degenerate_mass(self) -> float:
        return math.fsum(self.weights[self.degenerate_mask])

    def merged(self):
        """Distinct distance vectors (exact equality) with summed mass."""
        return _merge_rows(self.vectors, self.weights)


def sample_nu(ps: PointSet, k: int, mode="exhaustive", *, max_tuples: int = MAX_TUPLES,
              stream: int = 0) -> EmpiricalNu:
    """Empirical ``nu_k`` of ``ps``, exhaustive or Monte Carlo.

    ``mode`` is ``"exhaustive"`` or ``("sampled", n, seed)``. ``stream``
    selects an independent random stream for the same seed.
    """
    if k < 1:
        raise InvalidInputError("k must be at least 1")
    mode = _parse_mode(mode)
    edges = edge_order(ps.d, k)
    if mode["mode"] == "exhaustive":
        tuples = _all_tuples(len(ps), k, max_tuples)
        weights = np.prod(ps.weights[tuples], axis=1) if tuples.size else np.empty(0)
    else:
        tuples = _sample_tuples(ps.weights, k, mode["n"], mode["seed"], stream)
        weights = np.full(tuples.shape[0], 1.0 / max(mode["n"], 1))
    vectors = batch_distance_vectors(ps.points, tuples, edges)
    return EmpiricalNu(vectors, weights, tuples, k, ps.d, edges, mode)


def _dedupe(vectors: np.ndarray, tol: float) -> np.ndarray:
    """Distinct rows up to sup-norm ``tol``; one representative per cluster.

    Rows closer than ``tol`` are linked and each connected cluster keeps its
    lexicographically smallest member.
    """
    uniq = np.unique(vectors, axis=0)
    if uniq.shape[0] < 2 or tol <= 0:
        return uniq
    if uniq.shape[1] == 1:
        keep = np.ones(uniq.shape[0], dtype=bool)
        keep[1:] = np.diff(uniq[:, 0]) > tol
        return uniq[keep]
    pairs = cKDTree(uniq).query_pairs(tol, p=np.inf, output_type="ndarray")
    if pairs.size == 0:
        return uniq
    n = uniq.shape[0]
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    _, first = np.unique(labels, return_index=True)
    return uniq[np.sort(first)]


class DeltaIndex:
    """Membership oracle for ``Delta_k(E)`` under the sup-norm.

    ``contains(v, eps)`` answers ``dist_inf(v, Delta_k(E)) <= max(eps, tol)``.
    Three backends, picked automatically:

    ``"pairs"``
        ``k = 1``: sorted table of all pairwise distances.
    ``"table"``
        all ``n ** (k+1)`` tuples enumerated and deduplicated.
    ``"search"``
        backtracking over a k-d tree of the points, placing one vertex at a
        time inside the distance shells of its already-placed neighbours.
        Used when the table would exceed ``max_tuples``.
    """

    def __init__(self, ps: PointSet, k: int, tol: float = DEDUPE_TOL, *, max_tuples: int = MAX_TUPLES,
                 backend: str | None = None):
        if k < 1:
            raise InvalidInputError("k must be at least 1")
        self.ps, self.k, self.tol = ps, k, tol
        self.edges = edge_order(ps.d, k)
        n = len(ps)
        if backend is None:
            if n ** (k + 1) <= max_tuples:
                backend = "table"
            elif k == 1 and n * (n - 1) // 2 <= MAX_PAIR_TABLE:
                backend = "pairs"
            else:
                backend = "search"
        self.backend = backend
        self._tree = None
        if backend == "table":
            vecs = batch_distance_vectors(ps.points, _all_tuples(n, k, max_tuples), self.edges)
            self.vectors = _dedupe(vecs, tol)
            if self.vectors.shape[1] == 1:
                self._sorted = self.vectors[:, 0]
            elif len(self.vectors):
                self._tree = cKDTree(self.vectors)
        elif backend == "pairs":
            if k != 1:
                raise InvalidInputError("the pairs backend only serves k = 1")
            from scipy.spatial.distance import pdist

            dist = np.sort(pdist(ps.points)) if n > 1 else np.empty(0)
            self._sorted = np.concatenate([[0.0], dist]) if n else dist
            self.vectors = None
        elif backend == "search":
            self.vectors = None
            self._points_tree = cKDTree(ps.points) if n else None
            self._preds = [[(i, c) for c, (i, j) in enumerate(self.edges) if j == v] for v in range(k + 1)]
        else:
            raise InvalidInputError(f"unknown backend {backend!r}")

    def __len__(self):
        if self.vectors is None:
            raise TypeError(f"the {self.backend!r} backend does not materialise Delta_k")
        return self.vectors.shape[0]

    def contains(self, vectors, eps: float = 0.0) -> np.ndarray:
        """Boolean mask: is each row within ``max(eps, tol)`` of ``Delta_k(E)``?"""
        v = np.atleast_2d(np.asarray(vectors, dtype=float))
        slack = max(float(eps), self.tol)
        if v.shape[0] == 0 or len(self.ps) == 0:
            return np.zeros(v.shape[0], dtype=bool)
        if self.backend == "search":
            return np.array([self._search(row, slack) for row in v], dtype=bool)
        if self._tree is None:
            s = self._sorted
            x = v[:, 0]
            pos = np.searchsorted(s, x)
            left = s[np.clip(pos - 1, 0, len(s) - 1)]
            right = s[np.clip(pos, 0, len(s) - 1)]
            return np.minimum(np.abs(x - left), np.abs(x - right)) <= slack
        dist, _ = self._tree.query(v, k=1, p=np.inf, distance_upper_bound=slack * (1 + 1e-12) + 1e-300)
        return dist <= slack

    def _search(self, target: np.ndarray, slack: float) -> bool:
        pts = self.ps.points
        tree = self._points_tree
        preds = self._preds

        def candidates(assign):
            v = len(assign)
            cand = None
            for i, col in preds[v]:
                centre = pts[assign[i]]
                idx = np.asarray(tree.query_ball_point(centre, target[col] + slack), dtype=np.intp)
                if idx.size:
                    dist = np.linalg.norm(pts[idx] - centre, axis=1)
                    idx = idx[dist >= target[col] - slack]
                cand = idx if cand is None else np.intersect1d(cand, idx, assume_unique=True)
                if cand.size == 0:
                    break
            return cand

        def extend(assign):
            if len(assign) == self.k + 1:
                return True
            for c in candidates(assign):
                if extend(assign + [int(c)]):
                    return True
            return False

        return any(extend([a]) for a in range(len(pts)))


def delta_k(ps: PointSet, k: int, dedupe_tol: float = DEDUPE_TOL, *, max_tuples: int = MAX_TUPLES) -> np.ndarray:
    """All realized distance vectors, deduplicated, as a sorted ``(N, m)`` array."""
    if len(ps) == 0:
        return np.empty((0, len(edge_order(max(ps.d, 1), k))))
    return DeltaIndex(ps, k, dedupe_tol, max_tuples=max_tuples, backend="table").vectors


def delta_k_r(ps: PointSet, k: int, r: float, eps: float = 0.0, *, dedupe_tol: float = DEDUPE_TOL,
              max_tuples: int = MAX_TUPLES) -> np.ndarray:
    """Rows ``t`` of :func:`delta_k` with ``dist_inf(r t, Delta_k) <= eps``.

    ``eps = 0`` means membership at the deduplication tolerance.
    """
    if not r > 0:
        raise InvalidInputError("r must be positive")
    if len(ps) == 0:
        return delta_k(ps, k)
    index = DeltaIndex(ps, k, dedupe_tol, max_tuples=max_tuples, backend="table")
    return index.vectors[index.contains(r * index.vectors, eps)]


def _atoms_for_mass(nu: EmpiricalNu):
    if nu.sampling["mode"] == "exhaustive":
        return nu.merged()
    return nu.vectors, nu.weights


def _mass_where(vectors, weights, mask):
    zero = ~np.any(vectors > 0, axis=1)
    return math.fsum(weights[mask]), math.fsum(weights[mask & zero])


def nu_mass_of_delta_r(ps: PointSet, k: int, r: float, eps: float = 0.0, mode="exhaustive", *,
                       dedupe_tol: float = DEDUPE_TOL, max_tuples: int = MAX_TUPLES) -> float:
    """``nu_k`` mass of ``{t : dist_inf(r t, Delta_k(E)) <= eps}``."""
    if not r > 0:
        raise InvalidInputError("r must be positive")
    nu = sample_nu(ps, k, mode, max_tuples=max_tuples)
    index = DeltaIndex(ps, k, dedupe_tol, max_tuples=max_tuples)
    vecs, w = _atoms_for_mass(nu)
    return _mass_where(vecs, w, index.contains(r * vecs, eps))[0]


def joint_mass(ps: PointSet, k: int, scales: Sequence[float], eps: float = 0.0, mode="exhaustive", *,
               dedupe_tol: float = DEDUPE_TOL, max_tuples: int = MAX_TUPLES) -> float:
    """``nu_k`` mass of the intersection of ``Delta_k^{r_i, eps}`` over ``scales``."""
    scales = [float(s) for s in scales]
    if not scales:
        raise InvalidInputError("scales must be nonempty")
    if any(s <= 0 for s in scales):
        raise InvalidInputError("scales must be positive")
    if len(set(scales)) != len(scales):
        raise InvalidInputError("scales must be pairwise distinct")
    nu = sample_nu(ps, k, mode, max_tuples=max_tuples)
    index = DeltaIndex(ps, k, dedupe_tol, max_tuples=max_tuples)
    vecs, w = _atoms_for_mass(nu)
    mask = np.ones(len(w), dtype=bool)
    for s in scales:
        live = np.flatnonzero(mask)
        mask[live] = index.contains(s * vecs[live], eps)
    return _mass_where(vecs, w, mask)[0]


@dataclass
class ScanResult:
    """Table of ``(r, mass, degenerate_mass)`` from :func:`scan_r`."""

    r: np.ndarray
    mass: np.ndarray
    degenerate_mass: np.ndarray
    k: int
    eps: float
    sampling: dict

    @property
    def min(self) -> float:
        return float(self.mass.min())

    @property
    def max(self) -> float:
        return float(self.mass.max())

    @property
    def uniformity(self) -> float:
        """``min / max`` over the grid."""
        return self.min / self.max if self.max > 0 else 0.0

    def rows(self):
        return list(zip(self.r.tolist(), self.mass.tolist(), self.degenerate_mass.tolist()))


def scan_r(ps: PointSet, k: int, r_grid, eps: float = 0.0, mode="exhaustive", *,
           dedupe_tol: float = DEDUPE_TOL, max_tuples: int = MAX_TUPLES) -> ScanResult:
    """:func:`nu_mass_of_delta_r` over a grid of scales, sharing atoms and index."""
    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.size == 0 or np.any(r_grid <= 0):
        raise InvalidInputError("r_grid must contain positive values")
    nu = sample_nu(ps, k, mode, max_tuples=max_tuples)
    index = DeltaIndex(ps, k, dedupe_tol, max_tuples=max_tuples)
    vecs, w = _atoms_for_mass(nu)
    mass, degen = [], []
    for r in r_grid:
        m, z = _mass_where(vecs, w, index.contains(r * vecs, eps))
        mass.append(m)
        degen.append(z)
    return ScanResult(r_grid, np.array(mass), np.array(degen), k, float(eps), nu.sampling)


def _count_pairs(ax, wx, by, wy, r, eps):
    """``sum wx[a] wy[b]`` over ``max|ax[a] - r by[b]| < eps``."""
    if len(ax) == 0 or len(by) == 0:
        return 0.0
    if len(ax) * len(by) <= 1 << 22:
        ok = np.all(np.abs(ax[:, None, :] - r * by[None, :, :]) < eps, axis=2)
        return math.fsum(np.outer(wx, wy)[ok])
    if ax.shape[1] == 1:
        rb = r * by[:, 0]
        order = np.argsort(rb)
        rb = rb[order]
        cum = np.concatenate([[0.0], np.cumsum(wy[order])])
        a = ax[:, 0]
        lo = np.searchsorted(rb, a - eps, side="right")
        hi = np.searchsorted(rb, a + eps, side="left")
        return math.fsum(wx * (cum[hi] - cum[lo]))
    rb = r * by
    m = ax.shape[1]
    cells_a = np.floor(ax / eps).astype(np.int64)
    n_cells = len(np.unique(cells_a, axis=0))
    if n_cells * 3 ** m <= 1 << 21:
        return _grid_count(ax, wx, rb, wy, eps, cells_a)
    return _tree_count(ax, wx, rb, wy, eps)


def _grid_count(ax, wx, rb, wy, eps, cells_a):
    """Bucket both sides on a grid of side ``eps``; a match can only lie in
    one of the ``3**m`` cells around a point's own cell."""
    m = ax.shape[1]
    cells_b = np.floor(rb / eps).astype(np.int64)
    ub, inv_b = np.unique(cells_b, axis=0, return_inverse=True)
    order_b = np.argsort(inv_b.ravel(), kind="stable")
    bounds_b = np.searchsorted(inv_b.ravel()[order_b], np.arange(len(ub) + 1))
    buckets = {tuple(c): order_b[bounds_b[i]:bounds_b[i + 1]] for i, c in enumerate(ub.tolist())}
    ua, inv_a = np.unique(cells_a, axis=0, return_inverse=True)
    order_a = np.argsort(inv_a.ravel(), kind="stable")
    bounds_a = np.searchsorted(inv_a.ravel()[order_a], np.arange(len(ua) + 1))
    offsets = np.array(list(itertools.product((-1, 0, 1), repeat=m)), dtype=np.int64)
    total = []
    for i, cell in enumerate(ua):
        near = [buckets.get(tuple(c)) for c in (cell + offsets).tolist()]
        near = [b for b in near if b is not None]
        if not near:
            continue
        cand = np.concatenate(near)
        members = order_a[bounds_a[i]:bounds_a[i + 1]]
        step = max(1, (1 << 22) // (len(cand) * m))
        for s0 in range(0, len(members), step):
            ia = members[s0:s0 + step]
            ok = np.all(np.abs(ax[ia][:, None, :] - rb[cand][None, :, :]) < eps, axis=2)
            total.extend((wx[ia] * (ok @ wy[cand])).tolist())
    return math.fsum(total)


def _tree_count(ax, wx, rb, wy, eps):
    tree = cKDTree(rb)
    total = []
    for s0 in range(0, len(ax), 1024):
        blk = ax[s0:s0 + 1024]
        hits = tree.query_ball_point(blk, eps, p=np.inf)
        lens = np.fromiter((len(h) for h in hits), dtype=np.intp, count=len(hits))
        if not lens.sum():
            continue
        idx = np.concatenate([np.asarray(h, dtype=np.intp) for h in hits])
        rows = np.repeat(np.arange(len(blk)), lens)
        ok = np.all(np.abs(blk[rows] - rb[idx]) < eps, axis=1)
        sums = np.bincount(rows[ok], weights=wy[idx[ok]], minlength=len(blk))
        total.extend((wx[s0:s0 + 1024] * sums).tolist())
    return math.fsum(total)


def pair_count(psX: PointSet, psY: PointSet, k: int, r: float, eps: float, mode="exhaustive", *,
               max_tuples: int = MAX_TUPLES) -> float:
    """``mu^(k+1) x mu^(k+1)`` mass of tuple pairs with ``| |x^i-x^j| - r |y^i-y^j| | < eps`` on every edge.

    In sampled mode ``n`` tuples are drawn on each side (independent streams
    from ``seed``) and all ``n**2`` cross pairs are scored.
    """
    if not r > 0 or not eps > 0:
        raise InvalidInputError("r and eps must be positive")
    if psX.d != psY.d:
        raise InvalidInputError("point sets live in different dimensions")
    mode = _parse_mode(mode)
    if mode["mode"] == "exhaustive":
        ax, wx = sample_nu(psX, k, mode, max_tuples=max_tuples).merged()
        by, wy = sample_nu(psY, k, mode, max_tuples=max_tuples).merged()
    else:
        nx = sample_nu(psX, k, mode, stream=0)
        ny = sample_nu(psY, k, mode, stream=1)
        ax, wx = _merge_rows(nx.vectors, nx.weights)
        by, wy = _merge_rows(ny.vectors, ny.weights)
    return _count_pairs(ax, wx, by, wy, float(r), float(eps))


def _ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / gamma(d / 2 + 1)


def annulus_volume(t, eps: float, d: int):
    """Lebesgue measure of ``{x in R^d : t - eps < |x| < t + eps}``."""
    t = np.asarray(t, dtype=float)
    return _ball_volume(d) * ((t + eps) ** d - np.maximum(t - eps, 0.0) ** d)


def mollified_nu_density(ps: PointSet, k: int, t, eps: float, *, max_tuples: int = MAX_TUPLES) -> float:
    """Smoothed ``nu_k`` density at ``t`` with an annulus kernel.

    Each edge contributes ``1{t_ij - eps < |x^i - x^j| < t_ij + eps}``
    divided by the volume of that annulus in ``R^d``, the normalized
    indicator standing in for the sphere measure convolved with a bump.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if not eps > 0:
        raise InvalidInputError("eps must be positive")
    if np.any(t < 0):
        raise InvalidInputError("distance entries must be nonnegative")
    edges = edge_order(ps.d, k)
    if t.shape != (len(edges),):
        raise InvalidInputError(f"t must have {len(edges)} entries for k={k}, d={ps.d}")
    vecs, w = sample_nu(ps, k, "exhaustive", max_tuples=max_tuples).merged()
    inside = np.all(np.abs(vecs - t) < eps, axis=1)
    norm = float(np.prod(annulus_volume(t, eps, ps.d)))
    return math.fsum(w[inside]) / norm


def mollified_pairing(ps: PointSet, k: int, r: float, eps: float, *, max_tuples: int = MAX_TUPLES) -> float:
    """``sum_t nu_k(t) * mollified_nu_density(ps, k, r t, eps)`` over the atoms of ``nu_k``.

    The pairing of ``nu_k`` against its annulus-smoothed version evaluated at
    ``r t``; computed in one pass instead of one density call per atom.
    """
    if not r > 0 or not eps > 0:
        raise InvalidInputError("r and eps must be positive")
    vecs, w = sample_nu(ps, k, "exhaustive", max_tuples=max_tuples).merged()
    vol = np.prod(annulus_volume(r * vecs, eps, ps.d), axis=1)
    return _count_pairs(vecs, w, vecs, w / vol, float(r), float(eps))


# -- similarity search ------------------------------------------------------


@dataclass
class SimilarityWitness:
    """A base configuration and its similar copies.

    ``others[i]`` is (up to ``tol``) a copy of ``base`` scaled by
    ``scales[i]``; ``transforms[i]`` maps ``base`` onto it point by point,
    or is ``None`` when ``k > d`` (distance vectors then do not pin down the
    congruence class). Multiplicity is ``1 + len(others)``.
    """

    base: np.ndarray
    others: list
    scales: list
    transforms: list
    residual: float
    base_tuple: tuple = ()
    other_tuples: list = field(default_factory=list)

    def __post_init__(self):
        self.base_tuple = tuple(int(i) for i in self.base_tuple)
        self.other_tuples = [tuple(int(i) for i in t) for t in self.other_tuples]

    @property
    def multiplicity(self) -> int:
        return 1 + len(self.others)

    def to_dict(self) -> dict:
        return {
            "base": self.base.tolist(),
            "base_tuple": list(self.base_tuple),
            "others": [o.tolist() for o in self.others],
            "other_tuples": [list(t) for t in self.other_tuples],
            "scales": [float(s) for s in self.scales],
            "multiplicity": self.multiplicity,
            "residual": float(self.residual),
            "transforms": [
                None if tr is None else {
                    "scale": tr.scale,
                    "rotation": tr.rotation.tolist(),
                    "translation": tr.translation.tolist(),
                    "residual": tr.residual,
                }
                for tr in self.transforms
            ],
        }


def _match_bound(vx_inf, tol):
    return np.maximum(tol * vx_inf, ABS_FLOOR)


class _DirectionIndex:
    """Hash of distance vectors by unit direction, for one scale ``r``.

    A pair ``(x, y)`` matches when ``max|v(y) - r v(x)| <= max(tol max|v(x)|, ABS_FLOOR)``.
    Cells have side ``w = 2 sqrt(m) tol / r`` in direction space, the largest
    direction change such a match allows, so probing the ``3**m``
    neighbouring cells is complete. Queries whose allowed change exceeds the
    cell size (tiny vectors, the zero vector) fall back to a norm-window scan.
    """

    def __init__(self, vectors: np.ndarray, r: float, tol: float):
        self.v = vectors
        self.r, self.tol = r, tol
        m = vectors.shape[1]
        self.m = m
        self.norms = np.linalg.norm(vectors, axis=1)
        self.vinf = np.max(np.abs(vectors), axis=1) if len(vectors) else np.empty(0)
        self.w = max(2 * math.sqrt(m) * tol / r, 1e-9)
        nz = np.flatnonzero(self.norms > 0)
        self.by_norm = np.argsort(self.norms, kind="stable")
        self.sorted_norms = self.norms[self.by_norm]
        keys = np.floor(vectors[nz] / self.norms[nz, None] / self.w).astype(np.int64)
        buckets: dict = {}
        for key, i in zip(map(tuple, keys), nz):
            buckets.setdefault(key, []).append(i)
        self.buckets = {k: np.array(v, dtype=np.intp) for k, v in buckets.items()}
        self.offsets = None

    def _norm_window(self, lo, hi):
        a = np.searchsorted(self.sorted_norms, lo, side="left")
        b = np.searchsorted(self.sorted_norms, hi, side="right")
        return self.by_norm[a:b]

    def candidates(self, i: int) -> np.ndarray:
        a = self.r * self.v[i]
        na = self.r * self.norms[i]
        bound = float(_match_bound(self.vinf[i], self.tol))
        slack = math.sqrt(self.m) * bound * (1 + 1e-9)
        if na <= 2 * slack:
            return self._norm_window(-np.inf, na + slack)
        delta = 2 * slack / na
        reach = math.ceil(delta / self.w)
        if reach > 1 or 3 ** self.m > len(self.buckets):
            return self._norm_window(na - slack, na + slack)
        if self.offsets is None:
            self.offsets = list(itertools.product((-1, 0, 1), repeat=self.m))
        key = np.floor(a / na / self.w).astype(np.int64)
        found = [self.buckets.get(tuple(key + off)) for off in self.offsets]
        found = [f for f in found if f is not None]
        if not found:
            return np.empty(0, dtype=np.intp)
        return np.concatenate(found)

    def matches(self, i: int, cand: np.ndarray) -> np.ndarray:
        if cand.size == 0:
            return cand
        err = np.max(np.abs(self.v[cand] - self.r * self.v[i]), axis=1)
        return np.sort(cand[err <= _match_bound(self.vinf[i], self.tol)])


class _TupleTable:
    def __init__(self, ps: PointSet, k: int, max_tuples: int):
        self.ps, self.k = ps, k
        self.tuples = _all_tuples(len(ps), k, max_tuples)
        self.edges = edge_order(ps.d, k)
        self.vectors = batch_distance_vectors(ps.points, self.tuples, self.edges)

    def config(self, i: int) -> np.ndarray:
        return self.ps.points[self.tuples[i]]


def similar_tuple_pairs(ps: PointSet, k: int, r: float, tol: float = 1e-9, budget: int | None = None, *,
                        max_tuples: int = MAX_TUPLES) -> np.ndarray:
    """Index pairs ``(i, j)`` of ordered tuples with ``v(tuple_j) ~= r v(tuple_i)``.

    Tuples are numbered in lexicographic order of their point indices, as
    produced by ``np.indices``. ``budget`` caps the number of candidate pairs
    examined; ``None`` means unlimited.
    """
    table = _TupleTable(ps, k, max_tuples)
    return _similar_pairs(table, r, tol, budget)


def _similar_pairs(table: _TupleTable, r, tol, budget):
    if not r > 0:
        raise InvalidInputError("r must be positive")
    index = _DirectionIndex(table.vectors, float(r), float(tol))
    out = []
    examined = 0
    for i in range(len(table.vectors)):
        cand = index.candidates(i)
        if budget is not None and examined + cand.size > budget:
            cand = cand[: max(budget - examined, 0)]
        examined += cand.size
        for j in index.matches(i, cand):
            out.append((i, int(j)))
        if budget is not None and examined >= budget:
            break
    return np.array(out, dtype=np.intp).reshape(-1, 2)


def _witness_transform(x, y, r, tol, k, d, vy_inf):
    """Transform carrying ``x`` onto ``y``; ``None`` if the check fails."""
    if k > d:
        return None, True
    if not np.any(x != x[0]):
        tr = SimilarityTransform(r, np.eye(d), y[0] / r - x[0], float(np.max(np.abs(y - y[0]))))
        return tr, tr.residual <= 10 * tol * max(1.0, vy_inf)
    tr = recover_transform(x, y, tol=10 * tol * max(1.0, vy_inf))
    return tr, tr is not None


def find_similar_pairs(ps: PointSet, k: int, r: float, tol: float = 1e-9, budget: int | None = None, *,
                       max_tuples: int = MAX_TUPLES) -> list[SimilarityWitness]:
    """Witnesses of pairs of configurations similar at scale ``r``.

    Candidates come from :func:`similar_tuple_pairs`. When ``k <= d`` each is
    re-checked by point-wise alignment (residual at most
    ``10 tol max(1, |v(y)|_inf)``) and dropped if the alignment fails.
    Fully degenerate tuples (all points equal) match each other at every
    scale and carry no information, so they are not reported.
    """
    table = _TupleTable(ps, k, max_tuples)
    pairs = _similar_pairs(table, r, tol, budget)
    witnesses = []
    for i, j in pairs:
        x, y = table.config(i), table.config(j)
        vy = table.vectors[j]
        vx = table.vectors[i]
        if not np.any(vx > 0):
            continue
        scale = float(np.linalg.norm(vy) / np.linalg.norm(vx))
        tr, ok = _witness_transform(x, y, scale, tol, k, ps.d, float(np.max(vy, initial=0.0)))
        if not ok:
            continue
        res = tr.residual if tr is not None else float(np.max(np.abs(vy - r * vx)))
        witnesses.append(SimilarityWitness(x, [y], [scale], [tr], res, tuple(table.tuples[i]),
                                           [tuple(table.tuples[j])]))
    return witnesses


def find_multi_similarity(ps: PointSet, k: int, scales: Sequence[float], tol: float = 1e-9,
                          budget: int | None = None, *, max_tuples: int = MAX_TUPLES) -> list[SimilarityWitness]:
    """Witnesses of ``{t, r_1 t, ..., r_{n-1} t}`` inside ``Delta_k(E)``.

    One witness per base tuple that has a match at every scale; the first
    match (lowest tuple index) is reported for each scale. A scale equal to 1
    adds nothing and is dropped; repeated scales are rejected.
    """
    scales = [float(s) for s in scales]
    if any(s <= 0 for s in scales):
        raise InvalidInputError("scales must be positive")
    if len(set(scales)) != len(scales):
        raise InvalidInputError("scales must be pairwise distinct")
    scales = [s for s in scales if s != 1.0]
    table = _TupleTable(ps, k, max_tuples)
    indexes = [_DirectionIndex(table.vectors, s, float(tol)) for s in scales]
    witnesses = []
    examined = 0
    for i in range(len(table.vectors)):
        hits = []
        for index in indexes:
            cand = index.candidates(i)
            examined += cand.size
            found = index.matches(i, cand)
            if found.size == 0:
                break
            hits.append(int(found[0]))
        else:
            x = table.config(i)
            vx = table.vectors[i]
            others, trs, scl, res = [], [], [], 0.0
            ok = True
            for s, j in zip(scales, hits):
                y = table.config(j)
                vy = table.vectors[j]
                scale = float(np.linalg.norm(vy) / np.linalg.norm(vx)) if np.any(vx > 0) else s
                tr, good = _witness_transform(x, y, scale, tol, k, ps.d, float(np.max(vy, initial=0.0)))
                if not good:
                    ok = False
                    break
                others.append(y)
                trs.append(tr)
                scl.append(scale)
                res = max(res, tr.residual if tr is not None else float(np.max(np.abs(vy - s * vx))))
            if ok:
                witnesses.append(SimilarityWitness(x, others, scl, trs, res, tuple(table.tuples[i]),
                                                   [tuple(table.tuples[j]) for j in hits]))
        if budget is not None and examined >= budget:
            break
    return witnesses


def pinned_search(ps: PointSet, pin, r: float, tol: float = 0.0):
    """Pairs ``(y, z)`` with ``| |pin - z| - r |pin - y| | <= tol``.

    ``y`` and ``z`` range over points other than ``pin`` and differ from each
    other (by index). Returned as a list of coordinate-array pairs, ordered by
    the indices of ``y`` then ``z``.
    """
    if not r > 0:
        raise InvalidInputError("r must be positive")
    p = ps.index_of(pin)
    dist = np.linalg.norm(ps.points - ps.points[p], axis=1)
    others = np.array([i for i in range(len(ps)) if i != p], dtype=np.intp)
    if others.size < 2:
        return []
    order = others[np.argsort(dist[others], kind="stable")]
    sd = dist[order]
    out = []
    for y in others:
        target = r * dist[y]
        lo = np.searchsorted(sd, target - tol, side="left")
        hi = np.searchsorted(sd, target + tol, side="right")
        for z in order[lo:hi]:
            if z != y and abs(dist[z] - target) <= tol:
                out.append((int(y), int(z)))
    out.sort()
    return [(ps.points[y], ps.points[z]) for y, z in out]
