"""Difference measures ``lambda_{r,theta}`` and their rotation-averaged norms.

``lambda_{r,theta}`` is the image of ``mu x mu`` under ``(u, v) -> u - r theta v``.
Its ``L^{k+1}`` norm, averaged over Haar-random ``theta`` in O(d), is estimated
by histogramming at cell size ``h``:

    F_h = mean over theta of  sum_cells (mass / h**d) ** (k+1) * h**d

For a finite point set ``lambda`` is atomic, so ``F_h`` grows like
``h**(-dk)`` once ``h`` is below the atom spacing; reports flag that regime.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ._errors import InvalidInputError
from .configmeasure import pair_count
from .fractal import PointSet
from .geometry import edge_order

__all__ = [
    "RotationSample",
    "EmpiricalLambda",
    "LambdaReport",
    "HoelderReport",
    "CompareRow",
    "haar_rotation",
    "haar_rotations",
    "lambda_pushforward",
    "lambda_Lk1_functional",
    "hoelder_check",
    "compare_sides",
    "cell_masses",
]


@dataclass(frozen=True)
class RotationSample:
    matrix: np.ndarray
    seed: object = None


def _haar_from_normals(z: np.ndarray) -> np.ndarray:
    # QR of a Gaussian matrix, with the signs of diag(R) absorbed into Q
    q, r = np.linalg.qr(z)
    signs = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    signs[signs == 0] = 1.0
    return q * signs[..., None, :]


def haar_rotation(d: int, seed) -> RotationSample:
    """One Haar-distributed element of O(d), deterministic in ``seed``."""
    if d < 2:
        raise InvalidInputError("Haar sampling needs d >= 2")
    z = np.random.default_rng(seed).standard_normal((d, d))
    return RotationSample(_haar_from_normals(z), seed)


def haar_rotations(d: int, n: int, seed) -> np.ndarray:
    """``n`` independent Haar elements of O(d) as an ``(n, d, d)`` array."""
    if d < 2:
        raise InvalidInputError("Haar sampling needs d >= 2")
    z = np.random.default_rng(seed).standard_normal((n, d, d))
    return _haar_from_normals(z)


def _as_matrix(rot, d):
    m = rot.matrix if isinstance(rot, RotationSample) else np.asarray(rot, dtype=float)
    if m.shape != (d, d):
        raise InvalidInputError(f"rotation must be {d}x{d}")
    return m


@dataclass
class EmpiricalLambda:
    atoms: np.ndarray
    weights: np.ndarray
    r: float
    rotation: np.ndarray

    @property
    def total_mass(self) -> float:
        return math.fsum(self.weights)


def _difference_atoms(points, weights, r, theta):
    img = r * points @ theta.T
    z = (points[:, None, :] - img[None, :, :]).reshape(-1, points.shape[1])
    w = np.outer(weights, weights).ravel()
    return z, w


def _merge_close(z, w, tol):
    if len(z) < 2:
        return z, w
    pairs = cKDTree(z).query_pairs(tol, p=np.inf, output_type="ndarray")
    n = len(z)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    ncomp, labels = connected_components(graph, directed=False)
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(labels, kind="stable")
    bounds = np.flatnonzero(np.diff(labels[order])) + 1
    masses = np.array([math.fsum(g) for g in np.split(w[order], bounds)])
    return z[first], masses


def lambda_pushforward(ps: PointSet, r: float, rot, merge_tol: float = 1e-12) -> EmpiricalLambda:
    """Atoms ``u - r theta v`` with mass ``mu(u) mu(v)``, near-coincident atoms merged."""
    if not r > 0:
        raise InvalidInputError("r must be positive")
    theta = _as_matrix(rot, ps.d)
    z, w = _difference_atoms(ps.points, ps.weights, float(r), theta)
    z, w = _merge_close(z, w, merge_tol)
    return EmpiricalLambda(z, w, float(r), theta)


def _cell_keys(z: np.ndarray, h: float) -> np.ndarray:
    """Integer label per row of ``z`` identifying its cell of ``h * Z^d``."""
    cells = np.floor(z / h).astype(np.int64)
    cells -= cells.min(axis=0)
    dims = cells.max(axis=0) + 1
    if np.prod(dims.astype(float)) < 2.0 ** 62:
        return np.ravel_multi_index(cells.T, dims)
    return np.unique(cells, axis=0, return_inverse=True)[1].ravel()


def _masses_from_keys(keys, w):
    top = int(keys.max()) + 1
    if top <= 4 * keys.size + 1024:
        p = np.bincount(keys, weights=w, minlength=top)
        return p[np.bincount(keys, minlength=top) > 0]
    _, inv = np.unique(keys, return_inverse=True)
    return np.bincount(inv, weights=w)


def cell_masses(z: np.ndarray, w: np.ndarray, h: float) -> np.ndarray:
    """Mass in each occupied cell of the grid ``h * Z^d``."""
    if len(z) == 0:
        return np.empty(0)
    return _masses_from_keys(_cell_keys(z, h), w)


def _single_location_cells(z, keys, tol=1e-12) -> bool:
    """True when the atoms in every cell sit at one location (within ``tol``)."""
    order = np.argsort(keys, kind="stable")
    k, zs = keys[order], z[order]
    starts = np.flatnonzero(np.r_[True, k[1:] != k[:-1]])
    spread = np.maximum.reduceat(zs, starts, axis=0) - np.minimum.reduceat(zs, starts, axis=0)
    return bool(np.all(spread <= tol))


@dataclass
class LambdaReport:
    """Histogram estimate of the rotation-averaged ``L^{k+1}`` functional.

    ``atomic`` is set when, for every sampled rotation, each occupied cell
    holds a single atom location: at this ``h`` the estimate only measures
    atom sizes and scales like ``h**(-dk)``.
    """

    value: float
    per_rotation: np.ndarray
    occupied_cells: np.ndarray
    total_mass: np.ndarray
    h: float
    k: int
    r: float
    atomic: bool

    @property
    def max_cells(self) -> int:
        return int(self.occupied_cells.max())


def _functional(ps, k, r, rotations, h):
    d = ps.d
    vals, cells, masses = [], [], []
    atomic = True
    for theta in rotations:
        z, w = _difference_atoms(ps.points, ps.weights, r, theta)
        keys = _cell_keys(z, h)
        p = _masses_from_keys(keys, w)
        vals.append(math.fsum(p ** (k + 1)) * h ** (-d * k))
        cells.append(len(p))
        masses.append(math.fsum(p))
        if atomic:
            atomic = _single_location_cells(z, keys)
    return np.array(vals), np.array(cells), np.array(masses), atomic


def lambda_Lk1_functional(ps: PointSet, k: int, r: float, n_rotations: int, h: float, seed,
                          full_output: bool = False):
    """Estimate ``mean_theta integral lambda_{r,theta}^{k+1}`` at resolution ``h``."""
    if not h > 0:
        raise InvalidInputError("cell size h must be positive")
    if not r > 0:
        raise InvalidInputError("r must be positive")
    if n_rotations < 1:
        raise InvalidInputError("need at least one rotation")
    rotations = haar_rotations(ps.d, n_rotations, seed)
    vals, cells, masses, atomic = _functional(ps, k, float(r), rotations, float(h))
    value = math.fsum(vals) / n_rotations
    if not full_output:
        return value
    return LambdaReport(value, vals, cells, masses, float(h), k, float(r), atomic)


@dataclass
class HoelderReport:
    """Outcome of :func:`hoelder_check`.

    ``floor`` is ``mass**(k+1) / (max_cells * h**d)**k``: Hölder's inequality
    with the support measure taken as the largest occupied area seen.
    ``count_floor = mass**(k+1) / max_cells**k`` drops the cell volume; it is
    the weaker of the two floors exactly when ``h <= 1``.
    """

    functional: float
    floor: float
    passed: bool
    max_cells: int
    h: float
    k: int
    r: float
    count_floor: float = 0.0

    @property
    def ratio(self) -> float:
        return self.functional / self.floor


def hoelder_check(ps: PointSet, k: int, r: float, n_rotations: int, h: float, seed) -> HoelderReport:
    """Check the discrete Hölder lower bound on the histogram functional.

    Per rotation ``sum p**(k+1) >= (sum p)**(k+1) / M**k`` for ``M`` occupied
    cells, so the average is at least the floor built from the largest ``M``.
    """
    rep = lambda_Lk1_functional(ps, k, r, n_rotations, h, seed, full_output=True)
    mass = float(np.min(rep.total_mass))
    floor = mass ** (k + 1) / (rep.max_cells * h ** ps.d) ** k
    return HoelderReport(rep.value, floor, rep.value >= (1 - 1e-9) * floor, rep.max_cells, float(h), k, float(r),
                         mass ** (k + 1) / rep.max_cells ** k)


@dataclass
class CompareRow:
    eps: float
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs


def compare_sides(ps: PointSet, k: int, r: float, eps_grid, n_rotations: int, seed,
                  mode="exhaustive") -> list[CompareRow]:
    """Both sides of the similar-pair count identity at each ``eps``.

    ``lhs = eps**(-m) * pair_count(ps, ps, k, r, eps)`` with ``m`` the
    number of edges, and ``rhs`` is :func:`lambda_Lk1_functional` at
    ``h = eps``. Their ratio should stay bounded above and below as
    ``eps`` shrinks.
    """
    eps_grid = [float(e) for e in eps_grid]
    if any(e <= 0 for e in eps_grid):
        raise InvalidInputError("eps values must be positive")
    m = len(edge_order(ps.d, k))
    rows = []
    for eps in eps_grid:
        lhs = pair_count(ps, ps, k, r, eps, mode) * eps ** (-m)
        rhs = lambda_Lk1_functional(ps, k, r, n_rotations, eps, seed)
        rows.append(CompareRow(eps, lhs, rhs))
    return rows
