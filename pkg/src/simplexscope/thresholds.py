"""Registry of published dimension thresholds for the k-simplex problem.

``threshold_lookup(k, d)`` returns the smallest Hausdorff dimension known to
force the ``k``-simplex configuration set of a compact ``E`` in ``R^d`` to
have positive Lebesgue measure. Values are exact rationals.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from ._errors import InvalidInputError

__all__ = ["ThresholdEntry", "threshold_lookup", "registry_table"]


@dataclass(frozen=True)
class ThresholdEntry:
    """One registry row.

    ``formula`` is the closed form the value came from; ``source`` is a
    short tag naming the line of results it belongs to.
    """

    k: int
    d: int
    bound: Fraction
    formula: str
    source: str

    def to_dict(self) -> dict:
        return {"k": self.k, "d": self.d, "bound": str(self.bound), "value": float(self.bound),
                "formula": self.formula, "source": self.source}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ThresholdEntry":
        try:
            return cls(int(data["k"]), int(data["d"]), Fraction(data["bound"]), str(data["formula"]),
                       str(data["source"]))
        except (KeyError, ValueError, TypeError) as exc:
            raise InvalidInputError(f"malformed threshold entry: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "ThresholdEntry":
        return cls.from_dict(json.loads(text))


def threshold_lookup(k: int, d: int) -> ThresholdEntry:
    """Best published threshold for ``(k, d)``, ``d >= 2``, ``k >= 1``."""
    if d < 2 or k < 1:
        raise InvalidInputError("thresholds are tabulated for d >= 2 and k >= 1")
    if k == 1:
        if d == 2:
            return ThresholdEntry(k, d, Fraction(5, 4), "5/4", "distances-plane")
        if d == 3:
            return ThresholdEntry(k, d, Fraction(9, 5), "9/5", "distances-space")
        return ThresholdEntry(k, d, Fraction(d * d, 2 * d - 1), "d^2/(2d-1)", "distances-high-dim")
    if k > d:
        return ThresholdEntry(k, d, d - Fraction(1, k + 1), "d - 1/(k+1)", "simplices-k-gt-d")
    if (k, d) == (2, 2):
        return ThresholdEntry(k, d, Fraction(8, 5), "8/5", "triangles-plane")
    half = Fraction(d + k + 1, 2)
    group = Fraction(d * k + 1, k + 1)
    if group <= half:
        return ThresholdEntry(k, d, group, "(dk+1)/(k+1)", "simplices-group-action")
    return ThresholdEntry(k, d, half, "(d+k+1)/2", "simplices-fourier")


def registry_table(d_max: int = 6, k_max: int = 8) -> list[ThresholdEntry]:
    """All entries for ``2 <= d <= d_max`` and ``1 <= k <= k_max``."""
    return [threshold_lookup(k, d) for d in range(2, d_max + 1) for k in range(1, k_max + 1)]
