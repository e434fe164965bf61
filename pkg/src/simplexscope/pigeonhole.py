"""A measure-theoretic pigeonhole principle on finite probability spaces.

Among ``N(c, n)`` events of probability at least ``c`` some ``n`` share an
intersection of positive probability. This module gives explicit values for
the constants, a constructive search that follows the inductive argument, and
a verifier that cross-checks that search against a direct test.

On a finite space with positive point masses an intersection has positive
measure exactly when some atom lies in all the sets, so "``n`` of the sets
meet" is equivalent to "some atom belongs to at least ``n`` sets". The
verifier uses that characterisation as its independent check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._errors import InvalidInputError

__all__ = [
    "FiniteProbSpace",
    "SetFamily",
    "PairResult",
    "LemmaReport",
    "f_iter",
    "p_constant",
    "n_bound",
    "extract_pair",
    "lemma_witness",
    "max_multiplicity",
    "verify_lemma",
    "pairwise_disjoint_family",
]

_THRESHOLD = 0.6
_GUARD = 1e-12
_MEASURE_TOL = 1e-12


@dataclass(frozen=True)
class FiniteProbSpace:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0 or np.any(w <= 0):
            raise InvalidInputError("weights must be a nonempty vector of positive masses")
        if abs(math.fsum(w) - 1) > 1e-12:
            raise InvalidInputError("weights must sum to 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, size: int):
        return cls(np.full(size, 1.0 / size))

    @property
    def size(self) -> int:
        return self.weights.size

    def measure(self, sets) -> np.ndarray:
        """Measure of each row of a boolean ``(N, M)`` membership matrix."""
        return np.asarray(sets, dtype=float) @ self.weights


@dataclass
class SetFamily:
    """Events as rows of a boolean membership matrix over ``space``."""

    sets: np.ndarray
    space: FiniteProbSpace

    def __post_init__(self):
        s = np.asarray(self.sets, dtype=bool)
        if s.ndim != 2 or s.shape[1] != self.space.size:
            raise InvalidInputError("each set must be a membership row over the whole space")
        self.sets = s

    @classmethod
    def from_bitsets(cls, bitsets, space: FiniteProbSpace):
        bitsets = [int(b) for b in bitsets]
        if any(b < 0 or b >> space.size for b in bitsets):
            raise InvalidInputError(f"bit sets must be subsets of {space.size} atoms")
        rows = [[(b >> i) & 1 for i in range(space.size)] for b in bitsets]
        return cls(np.array(rows, dtype=bool).reshape(len(rows), space.size), space)

    @classmethod
    def from_indices(cls, index_lists, space: FiniteProbSpace):
        rows = np.zeros((len(index_lists), space.size), dtype=bool)
        for row, idx in zip(rows, index_lists):
            row[list(idx)] = True
        return cls(rows, space)

    def __len__(self):
        return self.sets.shape[0]

    def measures(self) -> np.ndarray:
        return self.space.measure(self.sets)

    def to_bitsets(self) -> list[int]:
        powers = 1 << np.arange(self.space.size, dtype=object)
        return [int(np.sum(powers[row])) for row in self.sets]


def _f(c):
    return 2 * c - c ** 3 / 3


def f_iter(c: float) -> float:
    """``2c - c^3/3``, the measure lower bound for a union of two sets of
    measure ``c`` that overlap in less than ``c^3/3``."""
    if not 0 < c < 1:
        raise InvalidInputError("c must lie in (0, 1)")
    return _f(c)


def _check_c(c):
    if not 0 < float(c) < 1:
        raise InvalidInputError("c must lie in (0, 1)")


def p_constant(c: float) -> int:
    """Explicit ``P_c``: more than ``P_c`` sets of measure ``>= c`` contain a
    pair meeting in measure ``>= c^3/3``.

    ``P_c = 2 ** (K + 1)`` where ``K`` counts the applications of
    :func:`f_iter` needed to reach ``3/5``. Pairing ``2N`` bad sets gives
    ``N`` bad sets at level ``f(c)``, and two sets of measure ``>= 3/5``
    always meet in at least ``2c - 1 >= c^3/3``.
    """
    _check_c(c)
    x = float(c)
    K = 0
    while x < _THRESHOLD - _GUARD:
        x = _f(x)
        K += 1
    return 2 ** (K + 1)


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, float):
        # the decimal the caller typed, so 0.3 means 3/10
        return Fraction(repr(c))
    return Fraction(c)


def n_bound(c, n: int) -> int:
    """``N(c, n)``: any ``N(c, n)`` sets of measure ``>= c`` include ``n``
    whose common intersection has positive measure.

    ``N(c, 1) = 1``, ``N(c, 2) = ceil(1/c)`` and
    ``N(c, n+1) = 2 N(c^3/3, n) + P_c``. Arithmetic is exact in rationals;
    a float ``c`` is read as its shortest decimal representation.

    The ``n = 2`` value is sharp only up to equality: when ``1/c`` is an
    integer, ``1/c`` disjoint sets of measure exactly ``c`` exist.
    """
    _check_c(c)
    if n < 1:
        raise InvalidInputError("n must be at least 1")
    c = _as_fraction(c)
    if n == 1:
        return 1
    if n == 2:
        return math.ceil(1 / c)
    return 2 * n_bound(c ** 3 / 3, n - 1) + p_constant(float(c))


@dataclass
class PairResult:
    i: int
    j: int
    measure: float
    threshold: float
    guaranteed: bool

    @property
    def meets_threshold(self) -> bool:
        return self.measure >= self.threshold - _MEASURE_TOL


def _intersections(sets: np.ndarray, weights: np.ndarray) -> np.ndarray:
    a = sets.astype(float)
    return (a * weights) @ a.T


def extract_pair(family: SetFamily, c: float) -> PairResult | None:
    """The pair of sets with the largest intersection, judged against ``c^3/3``.

    ``guaranteed`` records whether the family is larger than ``P_c``, in
    which case the threshold must be met. Returns ``None`` for fewer than
    two sets.
    """
    _check_c(c)
    m = family.measures()
    if np.any(m < c - _MEASURE_TOL):
        raise InvalidInputError(f"a set has measure {m.min():.6g} < c = {c}")
    if len(family) < 2:
        return None
    inter = _intersections(family.sets, family.space.weights)
    np.fill_diagonal(inter, -np.inf)
    i, j = np.unravel_index(np.argmax(inter), inter.shape)
    i, j = sorted((int(i), int(j)))
    return PairResult(i, j, float(inter[i, j]), c ** 3 / 3, len(family) > p_constant(c))


def max_multiplicity(sets: np.ndarray) -> int:
    """Largest number of sets sharing a single atom."""
    if sets.shape[0] == 0:
        return 0
    return int(sets.sum(axis=0).max())


def lemma_witness(sets: np.ndarray, weights: np.ndarray, c, n: int):
    """Indices of ``n`` sets with positive-measure common intersection, found
    by the inductive pairing argument, or ``None`` if the pairing stalls.

    For ``n >= 3`` sets are paired greedily into intersections of measure
    ``>= c^3/3`` until ``N(c^3/3, n-1)`` pairs exist, the search recurses on
    those intersections, and any ``n`` of the ``2(n-1)`` sets behind the
    result are returned. ``sets`` needs at least ``N(c, n)`` rows.
    """
    sets = np.asarray(sets, dtype=bool)
    N = sets.shape[0]
    if n == 1:
        return [0] if N else None
    if n == 2:
        if N < 2:
            return None
        inter = _intersections(sets, weights)
        np.fill_diagonal(inter, 0.0)
        i, j = np.unravel_index(np.argmax(inter), inter.shape)
        if inter[i, j] <= 0:
            return None
        return sorted((int(i), int(j)))

    c = _as_fraction(c)
    c_next = c ** 3 / 3
    need = n_bound(c_next, n - 1)
    good = _intersections(sets, weights) >= float(c_next) - _MEASURE_TOL
    np.fill_diagonal(good, False)
    alive = np.ones(N, dtype=bool)
    pairs = []
    for i in range(N):
        if len(pairs) == need:
            break
        if not alive[i]:
            continue
        partners = np.flatnonzero(good[i] & alive)
        if partners.size:
            j = int(partners[0])
            alive[i] = alive[j] = False
            pairs.append((i, j))
    if len(pairs) < need:
        return None
    merged = np.array([sets[i] & sets[j] for i, j in pairs])
    inner = lemma_witness(merged, weights, c_next, n - 1)
    if inner is None:
        return None
    members = sorted(idx for p in inner for idx in pairs[p])
    return members[:n]


@dataclass
class LemmaReport:
    """Outcome of :func:`verify_lemma`.

    ``counterexamples`` counts families with no ``n`` sets meeting in
    positive measure, excluding ``boundary_cases``: families in which every
    set has measure exactly ``c``, where the ``n = 2`` bound is known to be
    sharp only up to equality. ``constructive_failures`` counts families on
    which :func:`lemma_witness` returned nothing although a witness exists.
    ``examples`` holds up to ten offending families as bit sets.

    In exhaustive mode only families in which no atom lies in ``n`` sets
    are ever completed, so ``families_checked`` counts those candidates and
    ``search_nodes`` the partial families visited.
    """

    c: float
    n: int
    family_size: int
    space_size: int
    families_checked: int = 0
    counterexamples: int = 0
    boundary_cases: int = 0
    constructive_failures: int = 0
    min_intersection: float = math.inf
    skipped: str | None = None
    search_nodes: int = 0
    examples: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        if not math.isfinite(out["min_intersection"]):
            out["min_intersection"] = None
        return out


def _min_count(weights, c):
    """Fewest atoms (heaviest first) whose mass reaches ``c``."""
    cum = np.cumsum(np.sort(weights)[::-1])
    hits = np.flatnonzero(cum >= c - _MEASURE_TOL)
    return int(hits[0]) + 1 if hits.size else None


def _random_family(rng, weights, c, N):
    M = weights.size
    perms = np.argsort(rng.random((N, M)), axis=1)
    cum = np.cumsum(weights[perms], axis=1)
    stop = np.argmax(cum >= c - _MEASURE_TOL, axis=1)
    ranks = np.arange(M)[None, :]
    sets = np.zeros((N, M), dtype=bool)
    np.put_along_axis(sets, perms, ranks <= stop[:, None], axis=1)
    extra = rng.random((N, 1)) * 0.3
    sets |= rng.random((N, M)) < extra
    return sets


def _packed_family(rng, weights, c, N):
    # minimal sets laid end to end around a shuffled cycle: overlaps are as
    # small as the counting allows
    M = weights.size
    order = rng.permutation(M)
    w = weights[order]
    sets = np.zeros((N, M), dtype=bool)
    start = 0
    for row in sets:
        mass, pos = 0.0, start
        while mass < c - _MEASURE_TOL:
            row[order[pos % M]] = True
            mass += w[pos % M]
            pos += 1
        start = pos % M
    return sets


def _record(report, sets, weights, c, n):
    report.families_checked += 1
    witness = lemma_witness(sets, weights, c, n)
    exists = max_multiplicity(sets) >= n
    if witness is not None:
        common = np.logical_and.reduce(sets[witness], axis=0)
        meas = float(weights @ common)
        report.min_intersection = min(report.min_intersection, meas)
        if meas <= 0:
            report.constructive_failures += 1
    elif exists:
        report.constructive_failures += 1
    if not exists:
        m = sets.astype(float) @ weights
        boundary = bool(np.all(np.abs(m - c) <= _MEASURE_TOL))
        if boundary:
            report.boundary_cases += 1
        else:
            report.counterexamples += 1
        if len(report.examples) < 10:
            powers = 1 << np.arange(weights.size, dtype=object)
            report.examples.append({"boundary": boundary,
                                    "bitsets": [int(np.sum(powers[row])) for row in sets]})


class _Budget(Exception):
    pass


def _exhaustive(report, weights, c, n, N, max_nodes):
    M = weights.size
    masks, meas = [], []
    for b in range(1, 1 << M):
        mm = math.fsum(weights[i] for i in range(M) if b >> i & 1)
        if mm >= c - _MEASURE_TOL:
            masks.append(b)
            meas.append(mm)
    if len(masks) < N:
        report.skipped = f"only {len(masks)} distinct sets of measure >= c; need {N}"
        return
    order = np.argsort(meas, kind="stable")
    masks = [masks[i] for i in order]
    meas = [meas[i] for i in order]
    min_meas = meas[0]
    nodes = 0

    def capacity(cover):
        # mass still available before some atom would reach n memberships
        return math.fsum(weights[a] * (n - 1 - sum(cover[j] >> a & 1 for j in range(n - 1)))
                         for a in range(M))

    def search(start, cover, chosen):
        nonlocal nodes
        nodes += 1
        if nodes > max_nodes:
            raise _Budget
        if len(chosen) == N:
            rows = np.array([[(b >> i) & 1 for i in range(M)] for b in chosen], dtype=bool)
            _record(report, rows, weights, c, n)
            return
        if capacity(cover) < (N - len(chosen)) * min_meas - _MEASURE_TOL:
            return
        full = cover[n - 2] if n >= 2 else (1 << M) - 1
        for idx in range(start, len(masks)):
            b = masks[idx]
            if b & full:
                continue
            new = list(cover)
            for j in range(n - 2, 0, -1):
                new[j] |= cover[j - 1] & b
            if n >= 2:
                new[0] |= b
            search(idx + 1, new, chosen + [b])

    try:
        search(0, [0] * max(n - 1, 1), [])
    except _Budget:
        report.skipped = f"exhaustive search exceeded {max_nodes} nodes"
    report.search_nodes = nodes


def verify_lemma(space: FiniteProbSpace, c: float, n: int, trials: int = 1000, seed=0,
                 adversarial: bool = True, exhaustive: bool = False,
                 max_nodes: int = 2_000_000) -> LemmaReport:
    """Test the pigeonhole bound on families of size ``n_bound(c, n)``.

    Randomized mode draws ``trials`` families (alternating with packed,
    nearly disjoint families when ``adversarial``), each trial with its own
    generator seeded by ``(seed, trial)``. Exhaustive mode instead searches
    every family of distinct sets that could be a counterexample, so every
    counterexample on ``space`` is recorded; the search prunes with the
    counting bound ``sum of measures <= (n - 1)``, and is capped at
    ``max_nodes``.
    """
    _check_c(c)
    if n < 1:
        raise InvalidInputError("n must be at least 1")
    N = n_bound(c, n)
    report = LemmaReport(float(c), n, N, space.size)
    w = space.weights
    if _min_count(w, c) is None:
        report.skipped = "no set reaches measure c"
        return report
    if n == 1:
        report.families_checked = 1
        report.min_intersection = c
        return report
    if exhaustive:
        if space.size > 20:
            raise InvalidInputError("exhaustive verification is limited to spaces of at most 20 atoms")
        _exhaustive(report, w, c, n, N, max_nodes)
        return report
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), t]))
        if adversarial and t % 2 == 1:
            sets = _packed_family(rng, w, c, N)
        else:
            sets = _random_family(rng, w, c, N)
        _record(report, sets, w, c, n)
    return report


def pairwise_disjoint_family(space: FiniteProbSpace, c: float, count: int) -> SetFamily:
    """``count`` disjoint sets of measure ``>= c`` carved from consecutive atoms."""
    rows = []
    pos = 0
    w = space.weights
    for _ in range(count):
        row = np.zeros(space.size, dtype=bool)
        mass = 0.0
        while mass < c - _MEASURE_TOL:
            if pos >= space.size:
                raise InvalidInputError("space too small for that many disjoint sets")
            row[pos] = True
            mass += w[pos]
            pos += 1
        rows.append(row)
    return SetFamily(np.array(rows), space)
