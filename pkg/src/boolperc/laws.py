"""Radius distributions for Boolean-model grains.

Each law knows its exact tails and moments, and can sample either
unconditionally, conditionally on ``rho >= t`` (used when thinning grains by
reach), or size-biased by ``rho**p`` (used by the planar slice sampler).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np


class RadiusLaw:
    kind: str = ""

    # P[rho > t]
    def tail(self, t):
        raise NotImplementedError

    # P[rho >= t]; differs from tail() only at atoms
    def tail_ge(self, t):
        raise NotImplementedError

    def moment(self, k: float) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def sample_at_least(self, rng: np.random.Generator, t: np.ndarray) -> np.ndarray:
        """One radius per entry of ``t``, drawn from the law conditioned on ``rho >= t``."""
        raise NotImplementedError

    def sample_size_biased(self, rng: np.random.Generator, n: int, power: float = 1.0) -> np.ndarray:
        """Draw from the law reweighted by ``rho**power``."""
        raise NotImplementedError

    def scaled(self, s: float) -> "RadiusLaw":
        raise NotImplementedError

    @property
    def sup(self) -> float:
        """Right end of the support (``inf`` when unbounded)."""
        return math.inf

    @property
    def zero_mass(self) -> float:
        return 0.0

    def breakpoints(self) -> tuple[float, ...]:
        """Points where the tail function is not smooth."""
        return ()

    def typical(self) -> float:
        """A characteristic length, used to size grids and shells."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        d.update(asdict(self))
        return d


def _vec(fn, t):
    arr = np.asarray(t, dtype=float)
    out = fn(arr)
    return float(out) if arr.ndim == 0 else out


@dataclass(frozen=True)
class Fixed(RadiusLaw):
    r0: float
    kind = "fixed"

    def __post_init__(self):
        if not (self.r0 >= 0 and math.isfinite(self.r0)):
            raise ValueError("fixed radius r0 must be finite and >= 0")

    def tail(self, t):
        return _vec(lambda a: np.where(a < self.r0, 1.0, 0.0), t)

    def tail_ge(self, t):
        return _vec(lambda a: np.where(a <= self.r0, 1.0, 0.0), t)

    def moment(self, k):
        return 1.0 if k == 0 else self.r0 ** k

    def sample(self, rng, n):
        return np.full(n, self.r0)

    def sample_at_least(self, rng, t):
        return np.full(np.shape(t), self.r0)

    def sample_size_biased(self, rng, n, power=1.0):
        return np.full(n, self.r0)

    def scaled(self, s):
        return Fixed(self.r0 * s)

    @property
    def sup(self):
        return self.r0

    @property
    def zero_mass(self):
        return 1.0 if self.r0 == 0 else 0.0

    def breakpoints(self):
        return (self.r0,)

    def typical(self):
        return self.r0


@dataclass(frozen=True)
class Uniform(RadiusLaw):
    a: float
    b: float
    kind = "uniform"

    def __post_init__(self):
        if not (0 <= self.a < self.b < math.inf):
            raise ValueError("uniform law needs 0 <= a < b < inf")

    def tail(self, t):
        return _vec(lambda x: np.clip((self.b - x) / (self.b - self.a), 0.0, 1.0), t)

    tail_ge = tail

    def moment(self, k):
        if k == 0:
            return 1.0
        return (self.b ** (k + 1) - self.a ** (k + 1)) / ((k + 1) * (self.b - self.a))

    def sample(self, rng, n):
        return rng.uniform(self.a, self.b, n)

    def sample_at_least(self, rng, t):
        lo = np.maximum(np.asarray(t, dtype=float), self.a)
        return lo + (self.b - lo) * rng.random(lo.shape)

    def sample_size_biased(self, rng, n, power=1.0):
        p1 = power + 1.0
        u = rng.random(n)
        return (self.a ** p1 + u * (self.b ** p1 - self.a ** p1)) ** (1.0 / p1)

    def scaled(self, s):
        return Uniform(self.a * s, self.b * s)

    @property
    def sup(self):
        return self.b

    def breakpoints(self):
        return (self.a, self.b)

    def typical(self):
        return 0.5 * (self.a + self.b)


@dataclass(frozen=True)
class Exponential(RadiusLaw):
    mean: float
    kind = "exponential"

    def __post_init__(self):
        if not (0 < self.mean < math.inf):
            raise ValueError("exponential mean must be positive and finite")

    def tail(self, t):
        return _vec(lambda x: np.exp(-np.maximum(x, 0.0) / self.mean), t)

    tail_ge = tail

    def moment(self, k):
        return self.mean ** k * math.gamma(k + 1)

    def sample(self, rng, n):
        return rng.exponential(self.mean, n)

    def sample_at_least(self, rng, t):
        lo = np.maximum(np.asarray(t, dtype=float), 0.0)
        return lo + rng.exponential(self.mean, lo.shape)

    def sample_size_biased(self, rng, n, power=1.0):
        return rng.gamma(power + 1.0, self.mean, n)

    def scaled(self, s):
        return Exponential(self.mean * s)

    def typical(self):
        return self.mean


@dataclass(frozen=True)
class Pareto(RadiusLaw):
    """Pareto law with ``P[rho > t] = (x_min / t)**tau`` for ``t >= x_min``."""

    tau: float
    x_min: float = 1.0
    kind = "pareto"

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError("pareto tail exponent tau must be > 0")
        if not (0 < self.x_min < math.inf):
            raise ValueError("pareto scale x_min must be > 0")

    def tail(self, t):
        return _vec(lambda x: np.where(x < self.x_min, 1.0,
                                       (self.x_min / np.maximum(x, self.x_min)) ** self.tau), t)

    tail_ge = tail

    def moment(self, k):
        if k == 0:
            return 1.0
        if k >= self.tau:
            return math.inf
        return self.tau * self.x_min ** k / (self.tau - k)

    def sample(self, rng, n):
        return self.x_min * rng.random(n) ** (-1.0 / self.tau)

    def sample_at_least(self, rng, t):
        lo = np.maximum(np.asarray(t, dtype=float), self.x_min)
        return lo * rng.random(lo.shape) ** (-1.0 / self.tau)

    def sample_size_biased(self, rng, n, power=1.0):
        if self.tau <= power:
            raise ValueError(f"size-biased pareto needs tau > {power}")
        return self.x_min * rng.random(n) ** (-1.0 / (self.tau - power))

    def scaled(self, s):
        return Pareto(self.tau, self.x_min * s)

    def breakpoints(self):
        return (self.x_min,)

    def typical(self):
        return self.x_min


@dataclass(frozen=True)
class ZeroAtom(RadiusLaw):
    """Mixture putting mass ``p0`` at radius zero and ``1 - p0`` on ``inner``."""

    p0: float
    inner: RadiusLaw
    kind = "zero_atom"

    def __post_init__(self):
        if not (0 <= self.p0 < 1):
            raise ValueError("zero-atom mass p0 must lie in [0, 1)")

    def tail(self, t):
        return _vec(lambda x: np.where(x < 0, 1.0, (1 - self.p0) * self.inner.tail(x)), t)

    def tail_ge(self, t):
        return _vec(lambda x: np.where(x <= 0, 1.0, (1 - self.p0) * self.inner.tail_ge(x)), t)

    def moment(self, k):
        if k == 0:
            return 1.0
        return (1 - self.p0) * self.inner.moment(k)

    def sample(self, rng, n):
        keep = rng.random(n) >= self.p0
        out = np.zeros(n)
        out[keep] = self.inner.sample(rng, int(keep.sum()))
        return out

    def sample_at_least(self, rng, t):
        t = np.asarray(t, dtype=float)
        out = self.inner.sample_at_least(rng, t)
        # at t <= 0 the conditioning is vacuous, so the atom survives
        free = t <= 0
        if free.any():
            out[free] = self.sample(rng, int(free.sum()))
        return out

    def sample_size_biased(self, rng, n, power=1.0):
        return self.inner.sample_size_biased(rng, n, power)

    def scaled(self, s):
        return ZeroAtom(self.p0, self.inner.scaled(s))

    @property
    def sup(self):
        return self.inner.sup

    @property
    def zero_mass(self):
        return self.p0 + (1 - self.p0) * self.inner.zero_mass

    def breakpoints(self):
        return self.inner.breakpoints()

    def typical(self):
        return self.inner.typical()

    def to_dict(self):
        return {"kind": self.kind, "p0": self.p0, "inner": self.inner.to_dict()}


_KINDS = {"fixed": Fixed, "uniform": Uniform, "exponential": Exponential,
          "pareto": Pareto, "zero_atom": ZeroAtom}


class LawSpecError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def law_from_dict(spec: dict, field: str = "law") -> RadiusLaw:
    """Build a law from its config form, e.g. ``{"kind": "pareto", "tau": 3}``."""
    if isinstance(spec, RadiusLaw):
        return spec
    if not isinstance(spec, dict):
        raise LawSpecError(field, "expected a mapping with a 'kind' key")
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in _KINDS:
        raise LawSpecError(f"{field}.kind", f"unknown law kind {kind!r}; choose from {sorted(_KINDS)}")
    if kind == "zero_atom":
        if "inner" not in spec:
            raise LawSpecError(f"{field}.inner", "missing")
        spec["inner"] = law_from_dict(spec["inner"], f"{field}.inner")
    cls = _KINDS[kind]
    try:
        for key, val in spec.items():
            if key != "inner":
                spec[key] = float(val)
        return cls(**spec)
    except TypeError as exc:
        raise LawSpecError(field, f"bad parameters for {kind}: {exc}") from None
    except ValueError as exc:
        bad = next(iter(spec), "?")
        for name in spec:
            if name in str(exc):
                bad = name
                break
        raise LawSpecError(f"{field}.{bad}", str(exc)) from None
