"""Points, directions and projections.

Reals are plain float vectors (numpy arrays or sequences). Dyadic points carry
exact integer mantissas so that grid and toy-machine code stays bit-exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ContractViolation

NORM_TOL = 1e-12


def ceil_precision(r) -> int:
    """Round a precision parameter up to the next integer (0 stays 0)."""
    if r < 0:
        raise ContractViolation(f"precision must be nonnegative, got {r}")
    return int(math.ceil(r))


def as_fractions(x) -> tuple[Fraction, ...]:
    """Exact rational view of a real vector (floats are dyadic, so this is lossless)."""
    if isinstance(x, DyadicPoint):
        return x.to_fractions()
    if isinstance(x, (int, float, Fraction)):
        x = (x,)
    return tuple(Fraction(v) if not isinstance(v, Fraction) else v for v in x)


@dataclass(frozen=True, eq=False)
class DyadicPoint:
    """The point (m_1 2^-r, ..., m_n 2^-r).

    Equality and hashing use the reduced form, so ``DyadicPoint((2,), 1)`` and
    ``DyadicPoint((1,), 0)`` are the same point.
    """

    mantissas: tuple[int, ...]
    precision: int

    def __post_init__(self):
        if self.precision < 0:
            raise ContractViolation("precision must be >= 0")
        if len(self.mantissas) == 0:
            raise ContractViolation("a point needs at least one coordinate")
        object.__setattr__(self, "mantissas", tuple(int(m) for m in self.mantissas))

    @property
    def dimension(self) -> int:
        return len(self.mantissas)

    def reduced(self) -> DyadicPoint:
        m, r = list(self.mantissas), self.precision
        while r > 0 and all(v % 2 == 0 for v in m):
            m = [v // 2 for v in m]
            r -= 1
        return DyadicPoint(tuple(m), r)

    def at_precision(self, r: int) -> DyadicPoint:
        """Same point written over a finer grid (r must not lose bits)."""
        red = self.reduced()
        if r < red.precision:
            raise ContractViolation(f"cannot write {self} exactly at precision {r}")
        shift = r - red.precision
        return DyadicPoint(tuple(v << shift for v in red.mantissas), r)

    def _key(self):
        red = self.reduced()
        return red.mantissas, red.precision

    def __eq__(self, other):
        if not isinstance(other, DyadicPoint):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"DyadicPoint({self.mantissas}, r={self.precision})"

    def to_fractions(self) -> tuple[Fraction, ...]:
        den = 1 << self.precision
        return tuple(Fraction(m, den) for m in self.mantissas)

    def to_array(self) -> np.ndarray:
        return np.array([math.ldexp(m, -self.precision) for m in self.mantissas])

    def concat(self, other: DyadicPoint) -> DyadicPoint:
        r = max(self.precision, other.precision)
        a, b = self.at_precision(r), other.at_precision(r)
        return DyadicPoint(a.mantissas + b.mantissas, r)

    @classmethod
    def from_real(cls, x, r: int, rounding: str = "nearest") -> DyadicPoint:
        """Grid point at precision r, by exact rounding of each coordinate."""
        scale = 1 << r
        out = []
        for v in as_fractions(x):
            s = v * scale
            if rounding == "floor":
                out.append(math.floor(s))
            elif rounding == "nearest":
                out.append(math.floor(s + Fraction(1, 2)))
            else:
                raise ValueError(f"unknown rounding {rounding!r}")
        return cls(tuple(out), r)

    def sq_dist_below(self, x, r: int) -> bool:
        """Exact test of ||self - x|| < 2^-r."""
        xs = as_fractions(x)
        if len(xs) != self.dimension:
            raise ContractViolation("dimension mismatch")
        d2 = sum((p - v) ** 2 for p, v in zip(self.to_fractions(), xs))
        return d2 < Fraction(1, 1 << (2 * r))


@dataclass(frozen=True)
class Direction:
    """A unit vector e in S^{n-1}."""

    components: tuple[float, ...]

    def __post_init__(self):
        comps = tuple(float(c) for c in self.components)
        object.__setattr__(self, "components", comps)
        norm = math.sqrt(math.fsum(c * c for c in comps))
        if abs(norm - 1.0) > NORM_TOL:
            raise ContractViolation(f"direction is not unit length (norm={norm!r})")

    @classmethod
    def from_vector(cls, v: Sequence[float]) -> Direction:
        arr = np.asarray(v, dtype=float)
        norm = np.linalg.norm(arr)
        if norm == 0:
            raise ContractViolation("cannot normalize the zero vector")
        return cls(tuple(arr / norm))

    @property
    def dimension(self) -> int:
        return len(self.components)

    def as_array(self) -> np.ndarray:
        return np.array(self.components)

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)


def _vec(x) -> np.ndarray:
    if isinstance(x, DyadicPoint):
        return x.to_array()
    if isinstance(x, Direction):
        return x.as_array()
    return np.atleast_1d(np.asarray(x, dtype=float))


def dot(e, x) -> float:
    """Projection coordinate e . x of x onto the line through e."""
    ev, xv = _vec(e), _vec(x)
    if ev.shape != xv.shape:
        raise ContractViolation(f"dimension mismatch: {ev.shape} vs {xv.shape}")
    return math.fsum(ev * xv)


def log_distance(z, w) -> float:
    """-log2 ||z - w||; +inf when the points coincide."""
    zv, wv = _vec(z), _vec(w)
    if zv.shape != wv.shape:
        raise ContractViolation("dimension mismatch")
    d = float(np.linalg.norm(zv - wv))
    if d == 0.0:
        return math.inf
    return -math.log2(d)


def nearest_on_level_set(p, e, q: float) -> np.ndarray:
    """Closest point w to p with e . w = q, namely p + (q - e.p) e."""
    pv, ev = _vec(p), _vec(e)
    if pv.shape != ev.shape:
        raise ContractViolation("dimension mismatch")
    return pv + (q - dot(ev, pv)) * ev


def sample_direction(n: int, seed=None) -> Direction:
    """Uniform direction on S^{n-1} (normalized standard Gaussian vector)."""
    if n < 2:
        raise ContractViolation("directions are sampled for n >= 2")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    while True:
        g = rng.standard_normal(n)
        norm = np.linalg.norm(g)
        if norm > 1e-9:
            return Direction.from_vector(g / norm)
