"""Configuration vectors, similarity tests and transform recovery.

A configuration is an ordered ``(k+1, d)`` array of points. Its distance
vector lists ``|x^i - x^j|`` over an edge order: all pairs ``i < j`` in
lexicographic order when ``k <= d``, and a fixed generically rigid edge set
of size ``d(k+1) - C(d+1, 2)`` when ``k > d``.

Vertex indices are 0-based throughout.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from ._errors import DegenerateInputError, InvalidInputError

__all__ = [
    "ABS_FLOOR",
    "DistanceVector",
    "SimilarityTransform",
    "as_config",
    "edge_order",
    "canonical_edge_set",
    "independent_edge_count",
    "distance_vector",
    "batch_distance_vectors",
    "similarity_ratio",
    "recover_transform",
    "apply_similarity",
    "span_dimension",
]

#: absolute floor added to every relative tolerance
ABS_FLOOR = 1e-12

_RANK_RTOL = 1e-10


@dataclass(frozen=True)
class DistanceVector:
    """Distances of one configuration, indexed by ``edges``."""

    entries: np.ndarray
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.shape != (len(self.edges),):
            raise InvalidInputError("entries and edge order differ in length")
        if np.any(entries < 0):
            raise InvalidInputError("distance entries must be nonnegative")
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.edges)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True)
class SimilarityTransform:
    """The map ``x -> scale * rotation @ (x + translation)``.

    ``rotation`` is any element of O(d); reflections are allowed.
    """

    scale: float
    rotation: np.ndarray
    translation: np.ndarray
    residual: float = 0.0

    def __post_init__(self):
        if not self.scale > 0:
            raise InvalidInputError("similarity scale must be positive")
        rot = np.asarray(self.rotation, dtype=float)
        d = rot.shape[0]
        if rot.shape != (d, d) or not np.allclose(rot.T @ rot, np.eye(d), atol=1e-12, rtol=0):
            raise InvalidInputError("rotation is not orthogonal")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float))

    def apply(self, points):
        points = np.asarray(points, dtype=float)
        return self.scale * (points + self.translation) @ self.rotation.T


def as_config(points) -> np.ndarray:
    """Validate and return a configuration as a float ``(k+1, d)`` array."""
    try:
        arr = np.array(points, dtype=float)
    except ValueError as exc:
        raise InvalidInputError(f"points have inconsistent dimensions: {exc}") from None
    if arr.ndim == 1:
        # a bare list of scalars is a configuration on the line
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] < 1:
        raise InvalidInputError(f"expected (k+1, d) points with k >= 1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("configuration contains non-finite coordinates")
    return arr


def independent_edge_count(d: int, k: int) -> int:
    """Length of the distance vector for ``k+1`` points in ``R^d``.

    ``k(k+1)/2`` for ``k <= d``; otherwise ``d(k+1) - C(d+1, 2)``.
    """
    if d < 1 or k < 1:
        raise InvalidInputError("need d >= 1 and k >= 1")
    if k <= d:
        return k * (k + 1) // 2
    return d * (k + 1) - comb(d + 1, 2)


def canonical_edge_set(d: int, k: int) -> list[tuple[int, int]]:
    """Fixed maximally independent edge set used when ``k > d``.

    Vertex ``j`` is joined to its ``min(j, d)`` immediate predecessors
    (0-based), which is the trilateration pattern: the first ``d+1`` vertices
    form a complete simplex and each later vertex is pinned by ``d``
    distances. For ``k <= d`` this is the complete edge set.
    """
    if d < 1 or k < 1:
        raise InvalidInputError("need d >= 1 and k >= 1")
    edges = [(i, j) for j in range(1, k + 1) for i in range(max(0, j - d), j)]
    return sorted(edges)


def edge_order(d: int, k: int) -> tuple[tuple[int, int], ...]:
    """Edge order of the distance vector for ``(k, d)``."""
    if k <= d:
        return tuple(itertools.combinations(range(k + 1), 2))
    return tuple(canonical_edge_set(d, k))


def distance_vector(config) -> DistanceVector:
    """Distance vector of one configuration."""
    x = as_config(config)
    k, d = x.shape[0] - 1, x.shape[1]
    edges = edge_order(d, k)
    i, j = np.array(edges).T
    return DistanceVector(np.linalg.norm(x[i] - x[j], axis=1), edges)


def batch_distance_vectors(points, tuples, edges=None) -> np.ndarray:
    """Distance vectors for many index tuples at once.

    Parameters
    ----------
    points : (n, d) array
    tuples : (T, k+1) integer array of point indices
    edges : edge order; defaults to ``edge_order(d, k)``

    Returns
    -------
    (T, m) array
    """
    points = np.asarray(points, dtype=float)
    tuples = np.asarray(tuples, dtype=np.intp)
    if edges is None:
        edges = edge_order(points.shape[1], tuples.shape[1] - 1)
    out = np.empty((tuples.shape[0], len(edges)))
    for col, (i, j) in enumerate(edges):
        diff = points[tuples[:, i]] - points[tuples[:, j]]
        out[:, col] = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return out


def similarity_ratio(t1, t2, tol: float = 1e-9):
    """Scale ``r`` with ``t2 ~= r * t1``, or ``None``.

    ``r = |t2| / |t1|`` is accepted when
    ``max|t2 - r t1| <= max(tol * max|t1|, ABS_FLOOR)``.
    """
    a = np.asarray(t1, dtype=float)
    b = np.asarray(t2, dtype=float)
    if a.shape != b.shape:
        raise InvalidInputError("distance vectors differ in length")
    na = np.linalg.norm(a)
    if na == 0:
        raise DegenerateInputError("scale is undefined against the zero vector")
    r = np.linalg.norm(b) / na
    if r == 0:
        return None
    if np.max(np.abs(b - r * a)) <= max(tol * np.max(np.abs(a)), ABS_FLOOR):
        return float(r)
    return None


def _align(x: np.ndarray, y: np.ndarray):
    """Least-squares ``(r, theta, tau)`` with ``y ~= r theta (x + tau)``."""
    xc, yc = x.mean(axis=0), y.mean(axis=0)
    X, Y = x - xc, y - yc
    d = x.shape[1]
    sx = np.sum(X * X)
    if sx == 0:
        if np.any(Y != 0):
            return None
        return 1.0, np.eye(d), yc - xc
    U, S, Vt = np.linalg.svd(Y.T @ X)
    theta = U @ Vt
    r = S.sum() / sx
    if not r > 0:
        return None
    tau = theta.T @ yc / r - xc
    return r, theta, tau


def apply_similarity(points, scale, rotation, translation):
    """``scale * rotation @ (x + translation)`` for each row ``x``."""
    points = np.asarray(points, dtype=float)
    return scale * (points + np.asarray(translation, dtype=float)) @ np.asarray(rotation).T


def recover_transform(x, y, tol: float = 1e-9, permute: bool = False):
    """Find ``(r, theta, tau)`` mapping ``x`` onto ``y`` point by point.

    Uses orthogonal Procrustes after removing centroids. Returns a
    :class:`SimilarityTransform` whose ``residual`` is the largest point-wise
    error, or ``None`` when that residual exceeds ``tol``.

    With ``permute=True`` (``k <= 3`` only) the points of ``y`` are also
    matched up to reordering and the best ordering is used; the returned
    transform then maps ``x`` onto the reordered ``y``.
    """
    x = as_config(x)
    y = as_config(y)
    if x.shape != y.shape:
        raise InvalidInputError(f"shape mismatch {x.shape} vs {y.shape}")
    if permute:
        if x.shape[0] > 4:
            raise InvalidInputError("permutation search is limited to k <= 3")
        orders = itertools.permutations(range(y.shape[0]))
    else:
        orders = [tuple(range(y.shape[0]))]

    best = None
    for order in orders:
        yp = y[list(order)]
        fit = _align(x, yp)
        if fit is None:
            continue
        r, theta, tau = fit
        residual = float(np.max(np.linalg.norm(yp - apply_similarity(x, r, theta, tau), axis=1)))
        if best is None or residual < best[3]:
            best = (r, theta, tau, residual)
    if best is None or best[3] > tol:
        return None
    r, theta, tau, residual = best
    # SVD output can drift from orthogonality by a few ulps
    q, rr = np.linalg.qr(theta)
    theta = q * np.sign(np.diag(rr))
    return SimilarityTransform(float(r), theta, tau, residual)


def span_dimension(config) -> int:
    """Numerical rank of ``x^j - x^0``; equals ``k`` iff the simplex is nondegenerate."""
    x = as_config(config)
    diffs = x[1:] - x[0]
    s = np.linalg.svd(diffs, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > _RANK_RTOL * s[0]))
