"""Checks of the projection lemmas inside a toy universe.

Everything here is exhaustive: hypotheses are verified by scanning every
producible point, and the slack terms come from the frozen constants file.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Optional

import numpy as np

from ..constants import Constants, load_constants
from ..errors import ContractViolation
from ..geometry import Direction, DyadicPoint, as_fractions, ceil_precision, nearest_on_level_set
from .complexity import ComplexityTable, Entry, conditional_K_r_s, joint_K_r, relative_K_r

_TINY = 1e-12


def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


def exact_dot(e, x) -> Fraction:
    ev, xv = as_fractions(tuple(e)), as_fractions(x)
    if len(ev) != len(xv):
        raise ContractViolation("dimension mismatch")
    return sum((a * b for a, b in zip(ev, xv)), Fraction(0))


def _norm(x) -> float:
    return float(np.linalg.norm([float(v) for v in x]))


# ---------------------------------------------------------------------------
# clamping


@dataclass(frozen=True)
class ClampedComplexity:
    """K^D: the complexity of z at precisions t <= r capped at ceil(eta r); all else unchanged."""

    table: ComplexityTable
    z: tuple
    eta: Fraction
    r: int
    cap: int
    vacuous: bool

    def K_t(self, x, t) -> Optional[int]:
        base = self.table.K_r(x, t)
        if ceil_precision(t) <= self.r and as_fractions(x) == self.z:
            return self.cap if base is None else min(self.cap, base)
        return base

    def conditional(self, y, t, s=None) -> Optional[int]:
        """K^D_{t,r}(y | z), equal to the unclamped value."""
        return conditional_K_r_s(self.table, y, t, self.z, self.r if s is None else s)


def clamp_oracle(table: ComplexityTable, z, eta, r) -> ClampedComplexity:
    eta = _frac(eta)
    if not 0 < eta < 1:
        raise ContractViolation("eta must lie in (0, 1)")
    r = ceil_precision(r)
    cap = math.ceil(eta * r)
    base = table.K_r(z, r)
    vacuous = base is not None and eta * r > base
    return ClampedComplexity(table, as_fractions(z), eta, r, cap, vacuous)


# ---------------------------------------------------------------------------
# the search machine of the point lemma


def recover_point(table: ComplexityTable, q, e, s, budget, hint=None) -> Optional[Entry]:
    """First program (by length, then lexicographically) of length <= budget whose output p
    satisfies |e.p - q| < 2^-s, and ||p - hint|| < 1/2 when a hint is given."""
    s = ceil_precision(s)
    limit = math.floor(_frac(budget))
    ev = tuple(e)
    n = len(ev)
    idx = table._by_dim.get(n)
    if idx is None or limit <= 0:
        return None
    qf = _frac(q)
    thr = Fraction(1, 1 << s)
    ks = np.array([en.K for en in idx.entries])
    proj = idx.coords @ np.array(ev, dtype=float)
    mask = (ks <= limit) & (np.abs(proj - float(qf)) < float(thr) * (1 + 1e-9) + 1e-300)
    if hint is not None:
        hv = np.array([float(v) for v in as_fractions(hint)])
        mask &= np.sum((idx.coords - hv) ** 2, axis=1) < 0.25 * (1 + 1e-9)
    for i in np.flatnonzero(mask):
        en = idx.entries[i]
        if abs(exact_dot(ev, en.point.to_fractions()) - qf) >= thr:
            continue
        if hint is not None and not en.point.sq_dist_below(hint, 1):
            continue
        return en
    return None


# ---------------------------------------------------------------------------
# point lemma


@dataclass
class PointLemmaReport:
    n: int
    r: int
    eta: float
    eps: float
    delta: float
    degenerate: bool = False
    precondition_r: bool = False
    K_r_z: Optional[int] = None
    witness_program: Optional[str] = None
    hyp_i: Optional[bool] = None
    hyp_ii: Optional[bool] = None
    violation: Optional[dict] = None
    asserted: bool = False
    K_r_ez: Optional[int] = None
    rhs: Optional[float] = None
    C1: Optional[float] = None
    conclusion: Optional[bool] = None
    # smallest constant that would make this instance hold
    required_C1: Optional[float] = None
    recovery: dict = field(default_factory=dict)

    @property
    def hypotheses(self) -> bool:
        return bool(self.precondition_r and self.hyp_i and self.hyp_ii and not self.degenerate)

    def to_dict(self) -> dict:
        return asdict(self)


def _level_set_cover(table: ComplexityTable, zs, e, r):
    """(entry, d_max) for every producible p within 2^-r of the level set of z.

    p covers the w with ||p - w|| < 2^-r on the line e.w = e.z; the most
    demanding of them is the one farthest from z, at distance
    ||w* - z|| + sqrt(4^-r - rho^2) with w* the foot of p and rho = |e.p - e.z|.
    Points whose covered w all lie within 2^-r of z (so t > r) are skipped.
    """
    n = len(zs)
    idx = table._by_dim.get(n)
    if idx is None:
        return
    ev = np.array(e, dtype=float)
    zf = np.array([float(v) for v in zs])
    ez = exact_dot(e, zs)
    h = 2.0**-r
    rho = np.abs(idx.coords @ ev - float(ez))
    for i in np.flatnonzero(rho < h * (1 + 1e-9)):
        en = idx.entries[i]
        exact_rho = abs(exact_dot(e, en.point.to_fractions()) - ez)
        if exact_rho >= Fraction(1, 1 << r):
            continue
        foot = nearest_on_level_set(en.point.to_array(), ev, float(ez))
        reach = math.sqrt(max(h * h - float(exact_rho) ** 2, 0.0))
        d_max = min(float(np.linalg.norm(foot - zf)) + reach, 1.0)
        if d_max >= h:
            yield en, d_max


def level_set_violation(table: ComplexityTable, z, e, r, eta, eps, delta) -> Optional[dict]:
    """A producible p showing that some w on the level set of z breaks hypothesis (ii)."""
    eta, eps, delta = float(eta), float(eps), float(delta)
    for en, d_max in _level_set_cover(table, as_fractions(z), tuple(e), r):
        threshold = (eta - eps) * r + delta * (r + math.log2(d_max))
        if en.K < threshold:
            return {
                "point": [float(v) for v in en.point.to_fractions()],
                "K": en.K,
                "program": en.program,
                "distance": d_max,
                "threshold": threshold,
            }
    return None


def level_set_margin(table: ComplexityTable, z, e, r, delta) -> float:
    """Largest eta - eps for which hypothesis (ii) holds (inf when nothing constrains it)."""
    delta = float(delta)
    worst = math.inf
    for en, d_max in _level_set_cover(table, as_fractions(z), tuple(e), r):
        worst = min(worst, (en.K - delta * (r + math.log2(d_max))) / r)
    return worst


def lemma_parameters(table: ComplexityTable, z, e, r, delta, grid: int = 64) -> Optional[tuple[Fraction, Fraction]]:
    """Rational (eta, eps) on a 1/grid lattice making both hypotheses hold, with eps as small as possible.

    eta + eps is set to K_r(z)/r rounded up and eta - eps to the level-set
    margin rounded down (one lattice step of safety). None when no positive
    eta and eps exist.
    """
    K = table.K_r(z, r)
    if K is None:
        return None
    r = ceil_precision(r)
    top = Fraction(math.ceil(Fraction(K, r) * grid), grid)
    margin = level_set_margin(table, z, e, r, delta)
    low = top if math.isinf(margin) else Fraction(math.floor(margin * grid) - 1, grid)
    low = min(low, top - Fraction(2, grid))
    eta, eps = (top + low) / 2, (top - low) / 2
    if eta <= 0 or eps <= 0:
        return None
    return eta, eps


def verify_point_lemma(table: ComplexityTable, z, e, r, eta, eps, delta,
                       constants: Optional[Constants] = None) -> PointLemmaReport:
    """Check both hypotheses exhaustively, then the lower bound on K_r(e.z) when they hold."""
    consts = constants or load_constants()
    zs = as_fractions(z)
    n = len(zs)
    e = tuple(e)
    if len(e) != n:
        raise ContractViolation("direction and point dimensions differ")
    r = ceil_precision(r)
    eta, eps = _frac(eta), _frac(eps)
    rep = PointLemmaReport(n, r, float(eta), float(eps), float(delta))
    if float(delta) <= _TINY and eps > 0:
        rep.degenerate = True
        return rep
    rep.precondition_r = r >= math.log2(2 * _norm(zs) + 5) + 1
    best = table.best_in_ball(zs, r)
    if best is not None:
        rep.K_r_z, rep.witness_program = best.K, best.program
    rep.hyp_i = best is not None and best.K <= (eta + eps) * r
    rep.violation = level_set_violation(table, zs, e, r, eta, eps, delta)
    rep.hyp_ii = rep.violation is None
    ez = exact_dot(e, zs)
    ez_entry = table.best_in_ball((ez,), r)
    rep.K_r_ez = None if ez_entry is None else ez_entry.K
    rep.C1 = consts.C1(r)
    if rep.K_r_z is not None:
        rep.rhs = rep.K_r_z - float(n * eps / Fraction(delta)) * r - rep.C1
        if rep.K_r_ez is not None:
            rep.required_C1 = rep.K_r_z - float(n * eps / Fraction(delta)) * r - rep.K_r_ez
    if not rep.hypotheses:
        return rep
    rep.asserted = True
    rep.conclusion = rep.K_r_ez is None or rep.K_r_ez >= rep.rhs
    rep.recovery = recovery_round_trip(table, zs, e, r, eta + eps, ez_entry, consts)
    return rep


def recovery_round_trip(table: ComplexityTable, zs, e, r, rate, ez_entry: Optional[Entry],
                        consts: Constants) -> dict:
    """Run the search machine the way the proof does and check the level-set guarantee.

    The projection estimate q is the witness of K_r(e.z), so a program for
    the K_r(z) witness p satisfies |e.p - q| < 2^(1-r); the search therefore
    runs at s = r - 1. The hint comes from K_2(z), so the guard ball of
    radius 1/2 around it contains that witness.
    """
    ez = exact_dot(e, zs)
    q = ez if ez_entry is None else ez_entry.point.to_fractions()[0]
    s = r - 1
    hint_entry = table.best_in_ball(zs, 2)
    hint = None if hint_entry is None else hint_entry.point.to_fractions()
    budget = rate * r
    found = recover_point(table, q, e, s, budget, hint)
    out = {"q": float(q), "s": s, "budget": float(budget), "hint": None if hint is None else [float(v) for v in hint]}
    if found is None:
        out.update(point=None, ok=False)
        return out
    p = found.point.to_array()
    w = nearest_on_level_set(p, np.array(e, dtype=float), float(ez))
    gap = float(np.linalg.norm(p - w))
    bound = 2.0 ** (consts.gamma - s)
    out.update(point=[float(v) for v in p], program=found.program, K=found.K, level_set_gap=gap,
               gap_bound=bound, ok=bool(gap <= bound and found.K <= budget))
    return out


# ---------------------------------------------------------------------------
# symmetry of information


@dataclass
class SymmetryReport:
    r: int
    s: int
    K_x_given_y: Optional[int]
    K_y: Optional[int]
    K_xy: Optional[int]
    K_rs_x_given_x: Optional[int]
    K_s_x: Optional[int]
    K_r_x: Optional[int]
    chain_gap: Optional[float]
    precision_gap: Optional[float]
    chain_bound: float
    precision_bound: float

    @property
    def defined(self) -> bool:
        return self.chain_gap is not None and self.precision_gap is not None

    @property
    def holds(self) -> bool:
        return self.defined and self.chain_gap <= self.chain_bound and self.precision_gap <= self.precision_bound

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(defined=self.defined, holds=self.holds)
        return d


def verify_symmetry_of_information(table: ComplexityTable, x, y, r, s,
                                   constants: Optional[Constants] = None) -> SymmetryReport:
    """|K_r(x|y) + K_r(y) - K_r(x,y)| and |K_{r,s}(x|x) + K_s(x) - K_r(x)| against frozen log bounds."""
    consts = constants or load_constants()
    r, s = ceil_precision(r), ceil_precision(s)
    if s > r:
        raise ContractViolation("need s <= r")
    kxy_cond = conditional_K_r_s(table, x, r, y, r)
    ky = table.K_r(y, r)
    kxy = joint_K_r(table, x, y, r)
    kxx = conditional_K_r_s(table, x, r, x, s)
    ksx = table.K_r(x, s)
    krx = table.K_r(x, r)
    chain = None if None in (kxy_cond, ky, kxy) else float(abs(kxy_cond + ky - kxy))
    prec = None if None in (kxx, ksx, krx) else float(abs(kxx + ksx - krx))
    return SymmetryReport(r, s, kxy_cond, ky, kxy, kxx, ksx, krx, chain, prec, consts.c_sym(r), consts.c_sym2(r))


# ---------------------------------------------------------------------------
# projection bound


@dataclass
class ProjectionBoundReport:
    n: int
    r: int
    eta: float
    eps: float
    condition1: bool
    condition1_failures: list
    K_r_z: Optional[int]
    K_A_r_z: Optional[int]
    condition2: bool
    clamp: dict
    lemma_parameters: dict
    lhs: Optional[int]
    rhs: float
    C2: float
    vacuous: bool
    asserted: bool
    conclusion: Optional[bool]

    def to_dict(self) -> dict:
        return asdict(self)


def _remaining_oracle(e, i, j, r) -> Optional[DyadicPoint]:
    rest = [v for k, v in enumerate(e) if k not in (i, j)]
    return DyadicPoint.from_real(rest, r) if rest else None


def verify_projection_bound(table: ComplexityTable, z, e, eta, eps, r, oracle_point: Optional[DyadicPoint] = None,
                            constants: Optional[Constants] = None) -> ProjectionBoundReport:
    """Check the two conditions exactly and the resulting lower bound on K^A_r(e.z).

    Condition 1 asks K_s(e), relative to the other coordinates of e, to be at
    least s - log2 s for s <= r; an empty ball counts as more than any
    program length. Condition 2 compares K^A_r(z) with K_r(z).
    """
    consts = constants or load_constants()
    eta, eps = _frac(eta), _frac(eps)
    if not 0 < eta < 1:
        raise ContractViolation("eta must lie in (0, 1)")
    zs = as_fractions(z)
    e = tuple(e)
    n = len(zs)
    r = ceil_precision(r)
    big = table.machine.max_length + 1
    failures = []
    for s in range(1, r + 1):
        need = s - math.log2(s)
        for i, j in combinations(range(n), 2):
            k = relative_K_r(table, e, s, _remaining_oracle(e, i, j, s))
            k = big if k is None else k
            if k < need:
                failures.append({"s": s, "i": i, "j": j, "K": k, "need": need})
    cond1 = not failures
    k_z = table.K_r(zs, r)
    k_az = relative_K_r(table, zs, r, oracle_point)
    if k_z is None:
        cond2 = True
    else:
        cond2 = (big if k_az is None else k_az) >= k_z - eps * r
    cl = clamp_oracle(table, zs, eta, r)
    clamp = {"cap": cl.cap, "K_D_r_z": cl.K_t(zs, r), "vacuous": cl.vacuous}
    params = {"eta": float(eta), "eps": float(2 * eps), "delta": float(1 - eta)}
    ez = exact_dot(e, zs)
    lhs = relative_K_r(table, (ez,), r, oracle_point)
    C2 = consts.C2(r)
    rhs = float(eta * r - eps * r - (2 * n * eps / (1 - eta)) * r) - C2
    asserted = cond1 and cond2
    conclusion = (lhs is None or lhs >= rhs) if asserted else None
    return ProjectionBoundReport(n, r, float(eta), float(eps), cond1, failures, k_z, k_az, cond2, clamp, params,
                                 lhs, rhs, C2, rhs <= 0, asserted, conclusion)
