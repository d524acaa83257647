"""Recovering a direction coordinate from two points on one level set.

Given approximations q, p of points z, w with e.z = e.w, and the coordinates
of e other than the two selected ones, one coordinate of e solves a quadratic
whose coefficients are built from q - p.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .constants import Constants, load_constants
from .errors import ContractViolation, DegenerateInstance
from .geometry import Direction, log_distance

LEVEL_TOL = 1e-12
DISC_TOL = 1e-12


class InconsistentApproximation(DegenerateInstance):
    """The approximations are too far off for the quadratic to have real roots."""


@dataclass(frozen=True)
class RecoveryInstance:
    """z, w on one level set of e, with r-approximations q of z and p of w.

    d approximates e itself (full length n); only the coordinates other than
    the selected pair (i, j) are read.
    """

    z: tuple
    w: tuple
    e: Direction
    r: int
    q: tuple
    p: tuple
    d: tuple

    def __post_init__(self):
        for name in ("z", "w", "q", "p", "d"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        n = len(self.z)
        if any(len(getattr(self, k)) != n for k in ("w", "q", "p", "d")) or self.e.dimension != n:
            raise ContractViolation("instance vectors must share one dimension")
        ev = self.e.as_array()
        if abs(float(ev @ (np.array(self.z) - np.array(self.w)))) > LEVEL_TOL:
            raise ContractViolation("z and w are not on a common level set")
        h = 2.0**-self.r * (1 + 1e-9)
        if np.linalg.norm(np.subtract(self.q, self.z)) > h or np.linalg.norm(np.subtract(self.p, self.w)) > h:
            raise ContractViolation("q, p must be r-approximations of z, w")

    @property
    def n(self) -> int:
        return len(self.z)

    @property
    def t(self) -> float:
        return log_distance(self.z, self.w)


def select_indices(z, w, e, tol: float = LEVEL_TOL) -> tuple[int, int]:
    """0-based (i, j): i maximizes |z_i - w_i| (lowest index on ties); j != i has a nonzero
    gap and (z_j - w_j) e_j of the opposite sign to (z_i - w_i) e_i, preferring the
    largest |(z_j - w_j) e_j|."""
    zv, wv = np.asarray(z, dtype=float), np.asarray(w, dtype=float)
    ev = np.asarray(tuple(e), dtype=float)
    if not zv.shape == wv.shape == ev.shape:
        raise ContractViolation("dimension mismatch")
    D = zv - wv
    if not np.any(D):
        raise ContractViolation("z = w: no index pair exists")
    if abs(float(ev @ D)) > tol * max(1.0, float(np.abs(D).max())):
        raise ContractViolation("e.(z - w) is not zero")
    i = int(np.argmax(np.abs(D)))
    prod = D * ev
    scale = float(np.abs(D).max())
    zero = tol * scale

    def sgn(v):
        return 0 if abs(v) <= zero else (1 if v > 0 else -1)

    si = sgn(prod[i])
    best = None
    for j in range(len(D)):
        if j == i or abs(D[j]) <= zero:
            continue
        sj = sgn(prod[j])
        if sj == si or sj == 0:
            continue
        if best is None or abs(prod[j]) > abs(prod[best]):
            best = j
    if best is None:
        raise DegenerateInstance("no coordinate j with an opposite-signed gap")
    return i, best


def permutation(n: int, i: int, j: int) -> list[int]:
    return [i, j] + [k for k in range(n) if k not in (i, j)]


def quadratic_coefficients(q, p, d) -> tuple[float, float, float]:
    """a', b', c' for the permuted approximations (the selected pair first)."""
    q, p, d = (np.asarray(v, dtype=float) for v in (q, p, d))
    if len(d) != len(q) - 2:
        raise ContractViolation("d must hold the n - 2 remaining coordinates")
    S = float(np.dot(p[2:] - q[2:], d)) if len(d) else 0.0
    g1 = q[0] - p[0]
    a = g1 * g1 + (p[1] - q[1]) ** 2
    b = 2 * (p[1] - q[1]) * S
    c = S * S + g1 * g1 * (float(np.dot(d, d)) - 1.0)
    return a, b, c


def recover_e2(q, p, d, h: int) -> float:
    """(-b' + (-1)^h sqrt(b'^2 - 4a'c')) / (2a'); h = 0 takes the + root."""
    if h not in (0, 1):
        raise ContractViolation("h must be 0 or 1")
    if float(np.asarray(q, dtype=float)[0]) == float(np.asarray(p, dtype=float)[0]):
        raise DegenerateInstance("q_1 = p_1")
    a, b, c = quadratic_coefficients(q, p, d)
    if a == 0:
        raise DegenerateInstance("a' = 0")
    disc = b * b - 4 * a * c
    if disc < 0:
        if disc < -DISC_TOL:
            raise InconsistentApproximation(f"discriminant {disc:.3e} is negative")
        disc = 0.0
    root = math.sqrt(disc)
    return (-b + (root if h == 0 else -root)) / (2 * a)


@dataclass
class RecoveryReport:
    n: int
    r: int
    t: float
    i: int
    j: int
    h: int
    estimate: float
    truth: float
    error: float
    bound: float
    alpha: float
    passed: bool
    uninformative: bool

    def to_dict(self) -> dict:
        return asdict(self)


def verify_direction_recovery(inst: RecoveryInstance, constants: Optional[Constants] = None,
                              alpha: Optional[float] = None) -> RecoveryReport:
    t = inst.t
    if not (math.isfinite(t) and 0 < t <= inst.r):
        raise ContractViolation(f"need t in (0, r], got t={t}")
    if alpha is None:
        alpha = (constants or load_constants()).alpha_for(inst.n)
    i, j = select_indices(inst.z, inst.w, inst.e)
    perm = permutation(inst.n, i, j)
    q = np.asarray(inst.q)[perm]
    p = np.asarray(inst.p)[perm]
    d = np.asarray(inst.d)[perm[2:]]
    truth = inst.e.components[j]
    h = 0 if truth >= 0 else 1
    est = recover_e2(q, p, d, h)
    err = abs(est - truth)
    bound = 2.0 ** (-inst.r + t + alpha)
    return RecoveryReport(inst.n, inst.r, t, i, j, h, est, truth, err, bound, float(alpha), err <= bound, bound >= 1)


def random_instance(n: int, r: int, t: float, rng: np.random.Generator) -> RecoveryInstance:
    """z uniform in [-1, 1]^n, e uniform, w = z - D with D orthogonal to e and ||D|| = 2^-t.

    q and p are independent perturbations of z and w of size below 2^-(r+1),
    written on the 2^-(r+2) grid; d is e on the 2^-min(nr, 52) grid.
    """
    from .geometry import sample_direction

    e = sample_direction(n, rng)
    ev = e.as_array()
    z = rng.uniform(-1, 1, n)
    g = rng.standard_normal(n)
    g -= (g @ ev) * ev
    g /= np.linalg.norm(g)
    w = z - g * 2.0**-t
    # remove the rounding residue of e.(z - w)
    w = w + (ev @ (z - w)) * ev

    def approx(x):
        u = rng.standard_normal(n)
        u *= rng.uniform(0, 2.0 ** -(r + 1)) / np.linalg.norm(u)
        scale = 2.0 ** (r + 2)
        return np.round((x + u) * scale) / scale

    dscale = 2.0 ** min(n * r, 52)
    d = np.round(ev * dscale) / dscale
    return RecoveryInstance(tuple(z), tuple(w), e, r, tuple(approx(z)), tuple(approx(w)), tuple(d))


def exact_instance(n: int, t: float, rng: np.random.Generator, r: int = 30) -> RecoveryInstance:
    inst = random_instance(n, r, t, rng)
    return RecoveryInstance(inst.z, inst.w, inst.e, r, inst.z, inst.w, inst.e.components)
