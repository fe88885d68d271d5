"""Bernoulli estimates, Wilson intervals and CI-aware inequality verdicts."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

Z95 = 1.959963984540054


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    lo = max(0.0, centre - half)
    hi = min(1.0, centre + half)
    # Wilson's centre can sit a hair off p at the extremes; keep lo <= p <= hi
    return (0.0 if successes == 0 else min(lo, p)), (1.0 if successes == trials else max(hi, p))


@dataclass(frozen=True)
class BernoulliEstimate:
    successes: int
    trials: int
    point: float
    ci_lo: float
    ci_hi: float
    seed: Optional[dict] = None

    @classmethod
    def from_counts(cls, successes: int, trials: int, seed: Optional[dict] = None) -> "BernoulliEstimate":
        if trials <= 0:
            raise ValueError("a Bernoulli estimate needs at least one trial")
        lo, hi = wilson_interval(successes, trials)
        return cls(int(successes), int(trials), successes / trials, lo, hi, seed)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class MeanEstimate:
    mean: float
    ci_lo: float
    ci_hi: float
    n: int

    @classmethod
    def from_samples(cls, xs) -> "MeanEstimate":
        xs = list(xs)
        n = len(xs)
        if n == 0:
            raise ValueError("no samples")
        m = sum(xs) / n
        var = sum((x - m) ** 2 for x in xs) / (n - 1) if n > 1 else 0.0
        half = Z95 * math.sqrt(var / n)
        return cls(m, m - half, m + half, n)

    def to_dict(self):
        return asdict(self)


def verdict(lhs_point: float, lhs_lo: float, rhs_point: float, rhs_hi: float) -> str:
    """Label ``lhs <= rhs`` using the conservative interval sides.

    ``violated`` only when the lower end of the left side clears the upper
    end of the right side; ``inconclusive`` when point estimates disagree but
    intervals overlap.
    """
    if lhs_lo > rhs_hi:
        return "violated"
    if lhs_point > rhs_point:
        return "inconclusive"
    return "consistent"


def jsonable(obj):
    """Recursively convert to JSON-safe values; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if hasattr(obj, "numerator") and not isinstance(obj, (int, bool)):
        return float(obj)
    return obj
