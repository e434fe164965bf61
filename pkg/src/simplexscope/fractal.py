"""Finite approximations of self-similar sets and their natural measures.

An :class:`IFS` is a list of contracting similarities
``x -> ratio * orthogonal @ x + offset``. :func:`generate_points` turns it into
a :class:`PointSet`, the weighted point cloud that stands in for a compact set
``E`` carrying a Frostman measure ``mu`` everywhere else in the package.

The open set condition is assumed, not checked; every preset satisfies it.
"""
from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from ._errors import DegenerateInputError, InvalidInputError, ResourceLimitError

__all__ = [
    "SimilarityMap",
    "IFS",
    "PointSet",
    "PRESETS",
    "preset",
    "similarity_dimension",
    "generate_points",
    "FrostmanReport",
    "frostman_surrogate",
    "box_dimension_estimate",
    "read_pointset_csv",
    "write_pointset_csv",
]

#: largest number of points a full-level expansion may produce
MAX_POINTS = 1 << 22


@dataclass(frozen=True)
class SimilarityMap:
    ratio: float
    orthogonal: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        if not 0 < self.ratio < 1:
            raise InvalidInputError(f"contraction ratio must lie in (0, 1), got {self.ratio}")
        q = np.atleast_2d(np.asarray(self.orthogonal, dtype=float))
        b = np.atleast_1d(np.asarray(self.offset, dtype=float))
        if q.shape != (b.size, b.size):
            raise InvalidInputError("orthogonal part and offset disagree on dimension")
        if not np.allclose(q.T @ q, np.eye(b.size), atol=1e-12, rtol=0):
            raise InvalidInputError("linear part is not orthogonal")
        object.__setattr__(self, "orthogonal", q)
        object.__setattr__(self, "offset", b)

    @property
    def matrix(self) -> np.ndarray:
        return self.ratio * self.orthogonal

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.matrix.T + self.offset

    def fixed_point(self) -> np.ndarray:
        d = self.offset.size
        return np.linalg.solve(np.eye(d) - self.matrix, self.offset)


@dataclass(frozen=True)
class IFS:
    """Iterated function system of similarities in ``R^d``."""

    maps: tuple[SimilarityMap, ...]
    name: str = ""

    def __post_init__(self):
        maps = tuple(self.maps)
        if len(maps) < 2:
            raise InvalidInputError("an IFS needs at least two maps")
        dims = {m.offset.size for m in maps}
        if len(dims) != 1:
            raise InvalidInputError("maps act on different dimensions")
        object.__setattr__(self, "maps", maps)

    @classmethod
    def from_offsets(cls, ratio, offsets, name=""):
        """Homotheties with a common ``ratio`` (or per-map ratios) and no rotation."""
        offsets = np.atleast_2d(np.asarray(offsets, dtype=float))
        if offsets.shape[0] == 1 and offsets.shape[1] > 1 and np.ndim(ratio) == 0:
            # a flat list of scalars means maps on the line
            offsets = offsets.T
        ratios = np.broadcast_to(np.asarray(ratio, dtype=float), (offsets.shape[0],))
        d = offsets.shape[1]
        return cls(tuple(SimilarityMap(float(r), np.eye(d), b) for r, b in zip(ratios, offsets)), name)

    @property
    def d(self) -> int:
        return self.maps[0].offset.size

    @property
    def ratios(self) -> np.ndarray:
        return np.array([m.ratio for m in self.maps])

    def natural_probabilities(self) -> np.ndarray:
        """``ratio_i ** s`` at the similarity dimension ``s``."""
        p = self.ratios ** similarity_dimension(self)
        return p / p.sum()

    def invariant_ball(self, center=None):
        """A closed ball ``(center, radius)`` mapped into itself by every map."""
        if center is None:
            center = np.mean([m.fixed_point() for m in self.maps], axis=0)
        center = np.asarray(center, dtype=float)
        radius = max(np.linalg.norm(m(center) - center) / (1 - m.ratio) for m in self.maps)
        return center, float(radius)


def _corner_offsets(d, ratio, corners):
    return [np.array(c, dtype=float) * (1 - ratio) for c in corners]


def _product_cantor(d, ratio=1 / 3):
    offsets = _corner_offsets(d, ratio, product((0, 1), repeat=d))
    return IFS.from_offsets(ratio, offsets)


def _carpet():
    offsets = [np.array([i, j]) / 3 for i in range(3) for j in range(3) if (i, j) != (1, 1)]
    return IFS.from_offsets(1 / 3, offsets)


def _vicsek():
    offsets = [np.array(c) / 3 for c in [(0, 0), (2, 0), (1, 1), (0, 2), (2, 2)]]
    return IFS.from_offsets(1 / 3, offsets)


def _sierpinski():
    offsets = [(0.0, 0.0), (0.5, 0.0), (0.25, math.sqrt(3) / 4)]
    return IFS.from_offsets(0.5, offsets)


PRESETS = {
    "cantor13": lambda: IFS.from_offsets(1 / 3, [[0.0], [2 / 3]]),
    "cantor13_prod2": lambda: _product_cantor(2),
    "cantor13_prod3": lambda: _product_cantor(3),
    "cantor14_prod2": lambda: _product_cantor(2, 1 / 4),
    "sierpinski": _sierpinski,
    "vicsek": _vicsek,
    "carpet": _carpet,
}


def preset(name: str) -> IFS:
    """Named IFS; see ``PRESETS`` for the available names."""
    try:
        ifs = PRESETS[name]()
    except KeyError:
        raise InvalidInputError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return IFS(ifs.maps, name)


@dataclass
class PointSet:
    """Weighted point cloud approximating ``(E, mu)``.

    Weights are positive and sum to one. ``provenance`` is a free-form record
    of how the set was produced.
    """

    points: np.ndarray
    weights: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.asarray(self.weights, dtype=float)
        if pts.ndim != 2 or w.shape != (pts.shape[0],):
            raise InvalidInputError("points must be (n, d) with one weight per point")
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("point set contains non-finite coordinates")
        if np.any(w <= 0):
            raise InvalidInputError("weights must be positive")
        if pts.shape[0] and abs(math.fsum(w) - 1) > 1e-12:
            raise InvalidInputError(f"weights sum to {math.fsum(w)!r}, not 1")
        self.points, self.weights = pts, w

    @classmethod
    def uniform(cls, points, provenance=None):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        n = pts.shape[0]
        return cls(pts, np.full(n, 1.0 / n) if n else np.empty(0), dict(provenance or {}))

    @classmethod
    def weighted(cls, points, weights, provenance=None):
        """Like the constructor, but normalizes ``weights`` first."""
        w = np.asarray(weights, dtype=float)
        return cls(points, w / math.fsum(w), dict(provenance or {}))

    def __len__(self):
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def diameter(self) -> float:
        if len(self) < 2:
            return 0.0
        from scipy.spatial import ConvexHull
        from scipy.spatial.distance import pdist

        pts = self.points
        if len(self) > 2000 and self.d >= 2:
            try:
                pts = pts[ConvexHull(pts).vertices]
            except Exception:  # flat or degenerate hull; fall back to all points
                pass
        return float(pdist(pts).max()) if len(pts) > 1 else 0.0

    def index_of(self, point, atol=1e-12) -> int:
        """Row index of ``point``; raises if absent."""
        p = np.atleast_1d(np.asarray(point, dtype=float))
        hits = np.flatnonzero(np.all(np.abs(self.points - p) <= atol, axis=1))
        if hits.size == 0:
            raise InvalidInputError(f"point {p.tolist()} is not in the point set")
        return int(hits[0])


def similarity_dimension(ifs: IFS) -> float:
    """Solution ``s`` of the Moran equation ``sum(ratio_i ** s) = 1``."""
    rho = ifs.ratios
    if np.all(rho == rho[0]):
        return math.log(len(rho)) / math.log(1 / rho[0])
    hi = math.log(len(rho)) / math.log(1 / rho.max()) + 1.0
    return brentq(lambda s: np.sum(rho ** s) - 1.0, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def _default_depth(ifs):
    return max(1, math.ceil(math.log(1e-13) / math.log(ifs.ratios.max())))


def generate_points(
    ifs: IFS,
    level: int | None = None,
    *,
    n: int | None = None,
    seed=None,
    depth: int | None = None,
    base=None,
    max_points: int = MAX_POINTS,
) -> PointSet:
    """Points of the attractor with its natural self-similar measure.

    Full mode (``level=L``): every code ``i_1 ... i_L`` in lexicographic order
    gives the point ``f_{i_1} o ... o f_{i_L}(base)`` with weight
    ``prod ratio_{i_j} ** s``. Random mode (``n=..., seed=...``): ``n``
    i.i.d. codes of length ``depth`` drawn with probabilities ``ratio_i ** s``,
    each point weighted ``1/n``.

    ``base`` defaults to the fixed point of the first map; the distance from
    any base point to the attractor shrinks like ``max(ratio) ** L``.
    """
    d = ifs.d
    base = ifs.maps[0].fixed_point() if base is None else np.atleast_1d(np.asarray(base, float))
    mats = np.stack([m.matrix for m in ifs.maps])
    offs = np.stack([m.offset for m in ifs.maps])
    probs = ifs.natural_probabilities()

    if level is not None and n is None:
        if level < 0:
            raise InvalidInputError("level must be nonnegative")
        if len(ifs.maps) ** level > max_points:
            raise ResourceLimitError(
                f"{len(ifs.maps)}**{level} points exceeds the cap of {max_points}"
            )
        pts = base[None, :]
        w = np.ones(1)
        for _ in range(level):
            # leading symbol is the outermost map, so it varies slowest
            pts = (np.einsum("mij,nj->mni", mats, pts) + offs[:, None, :]).reshape(-1, d)
            w = (probs[:, None] * w[None, :]).ravel()
        return PointSet(pts, w / math.fsum(w), {"ifs": ifs.name, "mode": "full", "level": level})

    if n is None or level is not None:
        raise InvalidInputError("pass exactly one of level= (full mode) or n= (random mode)")
    if seed is None:
        raise InvalidInputError("random mode requires a seed")
    if n < 1:
        raise InvalidInputError("n must be positive")
    depth = _default_depth(ifs) if depth is None else depth
    rng = np.random.default_rng(seed)
    codes = rng.choice(len(ifs.maps), size=(n, depth), p=probs)
    pts = np.broadcast_to(base, (n, d)).copy()
    for col in range(depth - 1, -1, -1):
        c = codes[:, col]
        pts = np.einsum("nij,nj->ni", mats[c], pts) + offs[c]
    prov = {"ifs": ifs.name, "mode": "random", "n": n, "depth": depth, "seed": seed}
    return PointSet(pts, np.full(n, 1.0 / n), prov)


@dataclass
class FrostmanReport:
    """Result of :func:`frostman_surrogate` with ``full_output=True``.

    ``profile[i]`` is the largest ``mu(B(x, r_i)) / r_i**s`` seen at radius
    ``radii[i]``. ``growth_exponent`` is the log-log slope of the profile
    against ``1/r``; a value above ``s/2`` (``growing``) indicates the
    ratio is still climbing at the finest radius, as for an atom.
    """

    value: float
    s: float
    radii: np.ndarray
    profile: np.ndarray
    growth_exponent: float
    growing: bool


def frostman_surrogate(ps: PointSet, s: float, radii, probes: int = 256, seed=0, full_output=False):
    """Finite-resolution estimate of the Frostman constant of ``ps`` at exponent ``s``.

    The maximum of ``mu(B(x, r)) / r**s`` over ``probes`` centers drawn from
    the support (all points when ``probes >= len(ps)``) and the given radii.
    Balls are closed.
    """
    radii = np.sort(np.atleast_1d(np.asarray(radii, dtype=float)))
    if s <= 0 or np.any(radii <= 0):
        raise InvalidInputError("s and radii must be positive")
    n = len(ps)
    if probes >= n:
        centers = ps.points
    else:
        rng = np.random.default_rng(seed)
        centers = ps.points[rng.choice(n, size=probes, replace=False)]

    tree = cKDTree(ps.points)
    profile = np.zeros(radii.size)
    for i, rad in enumerate(radii):
        # tiny slack so points exactly on the sphere count despite rounding
        balls = tree.query_ball_point(centers, rad * (1 + 1e-12))
        mass = max(math.fsum(ps.weights[b]) for b in balls)
        profile[i] = mass / rad ** s
    value = float(profile.max())
    if not full_output:
        return value
    if radii.size >= 2 and radii[-1] > radii[0]:
        slope = float(np.polyfit(np.log(1 / radii), np.log(profile), 1)[0])
    else:
        slope = 0.0
    return FrostmanReport(value, s, radii, profile, slope, slope > s / 2)


def box_dimension_estimate(ps: PointSet, scales) -> float:
    """Least-squares slope of ``log N(delta)`` against ``log(1/delta)``.

    ``N(delta)`` counts occupied grid cells of side ``delta``, the grid being
    anchored at the coordinate-wise minimum of the points. A set whose count
    never changes (a single point, say) has slope 0.
    """
    scales = np.asarray(scales, dtype=float)
    if scales.size < 3 or np.any(scales <= 0):
        raise InvalidInputError("need at least three positive scales")
    if np.unique(scales).size < 2:
        raise DegenerateInputError("scales must not all coincide")
    if scales.max() / scales.min() < 10 * (1 - 1e-12):
        raise InvalidInputError("scales must span at least one decade")
    if len(ps) == 0:
        raise DegenerateInputError("empty point set")
    shifted = ps.points - ps.points.min(axis=0)
    counts = np.array(
        [np.unique(np.floor(shifted / delta + 1e-9).astype(np.int64), axis=0).shape[0] for delta in scales]
    )
    if np.all(counts == counts[0]):
        return 0.0
    return float(np.polyfit(np.log(1 / scales), np.log(counts), 1)[0])


def write_pointset_csv(ps: PointSet, path_or_buf) -> None:
    """Write ``ps`` as ``x_1,...,x_d,weight`` rows under a ``# d=<d>`` header."""
    lines = [f"# d={ps.d}"]
    for p, w in zip(ps.points, ps.weights):
        lines.append(",".join(repr(float(v)) for v in (*p, w)))
    text = "\n".join(lines) + "\n"
    if isinstance(path_or_buf, (str, os.PathLike)):
        with open(path_or_buf, "w") as fh:
            fh.write(text)
    else:
        path_or_buf.write(text)


def read_pointset_csv(path_or_buf, provenance=None) -> PointSet:
    """Inverse of :func:`write_pointset_csv`.

    Weights are renormalized so files written with fewer digits still load.
    """
    if isinstance(path_or_buf, (str, os.PathLike)):
        with open(path_or_buf) as fh:
            text = fh.read()
        provenance = provenance or {"file": os.fspath(path_or_buf)}
    else:
        text = path_or_buf.read()
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#") or "d=" not in lines[0]:
        raise InvalidInputError("missing '# d=<d>' header line")
    try:
        d = int(lines[0].split("d=", 1)[1].split()[0])
    except ValueError:
        raise InvalidInputError(f"bad header {lines[0]!r}") from None
    rows = [ln for ln in lines[1:] if not ln.startswith("#")]
    data = np.loadtxt(io.StringIO("\n".join(rows)), delimiter=",", ndmin=2) if rows else np.empty((0, d + 1))
    if data.shape[1] != d + 1:
        raise InvalidInputError(f"expected {d + 1} columns, found {data.shape[1]}")
    return PointSet.weighted(data[:, :d], data[:, d], provenance)
