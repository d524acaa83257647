"""Exact complexities over a ToyMachine by exhaustive enumeration."""
from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from ..errors import BudgetExceeded, ContractViolation
from ..geometry import DyadicPoint, as_fractions, ceil_precision
from .machine import (
    MAX_LENGTH,
    ToyMachine,
    encode_literal,
    encode_oracle_program,
    encode_planted,
    gamma_code,
    literal_length,
    oracle_for,
    oracle_header,
)

# relative float slack before the exact distance test
_PREFILTER = 1 + 1e-9


@dataclass(frozen=True)
class Entry:
    point: DyadicPoint
    K: int
    program: str


@dataclass
class _DimIndex:
    entries: list[Entry]
    coords: np.ndarray


@dataclass
class ComplexityTable:
    """Shortest program length for every point the machine can produce."""

    machine: ToyMachine
    oracle: Optional[str]
    entries: dict[DyadicPoint, Entry]
    _by_dim: dict[int, _DimIndex] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        groups: dict[int, list[Entry]] = {}
        for e in self.entries.values():
            groups.setdefault(e.point.dimension, []).append(e)
        for n, es in groups.items():
            es.sort(key=lambda e: (e.K, e.program))
            coords = np.array([e.point.to_array() for e in es]).reshape(len(es), n)
            self._by_dim[n] = _DimIndex(es, coords)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, p: DyadicPoint):
        return p in self.entries

    def K(self, p: DyadicPoint) -> Optional[int]:
        e = self.entries.get(p)
        return None if e is None else e.K

    def programs(self, max_length: Optional[int] = None) -> list[Entry]:
        """Entries in enumeration order: by length, then lexicographically by program."""
        out = sorted(self.entries.values(), key=lambda e: (e.K, e.program))
        if max_length is not None:
            out = [e for e in out if e.K <= max_length]
        return out

    def in_ball(self, x, r) -> Iterable[Entry]:
        """Entries p with ||p - x|| < 2^-r, in (K, program) order."""
        xs = as_fractions(x)
        idx = self._by_dim.get(len(xs))
        if idx is None:
            return
        r = ceil_precision(r)
        xf = np.array([float(v) for v in xs])
        d2 = np.sum((idx.coords - xf) ** 2, axis=1)
        lim = 4.0**-r * _PREFILTER + 1e-300
        for i in np.flatnonzero(d2 <= lim):
            e = idx.entries[i]
            if e.point.sq_dist_below(xs, r):
                yield e

    def best_in_ball(self, x, r) -> Optional[Entry]:
        return next(iter(self.in_ball(x, r)), None)

    def K_r(self, x, r) -> Optional[int]:
        e = self.best_in_ball(x, r)
        return None if e is None else e.K

    def to_csv(self, path) -> None:
        width = max((p.dimension for p in self.entries), default=0)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["program_bits", "length"] + [f"point_{i}" for i in range(width)])
            for e in self.programs():
                coords = [repr(float(v)) for v in e.point.to_fractions()]
                w.writerow([e.program, e.K] + coords + [""] * (width - len(coords)))


# ---------------------------------------------------------------------------
# enumeration


def _literal_stratum(args) -> list[tuple[int, str, DyadicPoint]]:
    n, r, max_dim = args
    length = literal_length(n, r)
    half = 1 << r
    out = []
    for ms in itertools.product(range(-half, half), repeat=n):
        if r > 0 and all(m % 2 == 0 for m in ms):
            continue  # same point as a shorter literal
        p = DyadicPoint(ms, r)
        out.append((length, encode_literal(p, max_dim), p))
    return out


def oracle_shapes(n_q: int, max_length: int) -> list[tuple[int, int, int]]:
    """(length, shift, width) of every oracle-program header family fitting the budget."""
    shapes = []
    for negative in (False, True):
        k = 0
        while 3 + len(gamma_code(k + 1)) + 1 <= max_length:
            w = 0
            while True:
                length = 3 + len(gamma_code(k + 1)) + len(gamma_code(w + 1)) + n_q * w
                if length > max_length:
                    break
                shapes.append((length, -(k + 1) if negative else k, w))
                w += 1
            k += 1
    shapes.sort(key=lambda s: (s[0], oracle_header(s[1], s[2])))
    return shapes


def _oracle_stratum(args) -> list[tuple[int, str, DyadicPoint]]:
    machine, oracle = args
    q = machine.oracle_point(oracle)
    out = []
    for length, shift, w in oracle_shapes(q.dimension, machine.max_length):
        precision = q.precision + shift
        if precision < 0:
            continue
        base = [m << shift if shift >= 0 else m >> -shift for m in q.mantissas]
        rng = range(-(1 << (w - 1)), 1 << (w - 1)) if w else range(1)
        for offs in itertools.product(rng, repeat=q.dimension):
            p = DyadicPoint(tuple(b + o for b, o in zip(base, offs)), precision)
            out.append((length, encode_oracle_program(shift, w, offs), p))
    return out


def _planted_stratum(args) -> list[tuple[int, str, DyadicPoint]]:
    machine = args
    out = []
    for i, p in enumerate(machine.planted):
        bits = encode_planted(i)
        if len(bits) <= machine.max_length:
            out.append((len(bits), bits, p))
    return out


def _run_stratum(job):
    kind, args = job
    return {"literal": _literal_stratum, "oracle": _oracle_stratum, "planted": _planted_stratum}[kind](args)


def exact_K(machine: ToyMachine, oracle: Optional[str] = None, workers: int = 1) -> ComplexityTable:
    """Table of K(p) for every producible point, built stratum by stratum.

    Strata (literal programs of one shape, oracle programs, planted programs)
    are independent; they may run in a process pool and are merged in a fixed
    order keeping the (length, program) minimum per point, so the table does
    not depend on the number of workers.
    """
    if machine.max_length > MAX_LENGTH:
        raise BudgetExceeded("enumeration length", machine.max_length, MAX_LENGTH)
    jobs = []
    for n in range(1, machine.max_dim + 1):
        r = 0
        while literal_length(n, r) <= machine.max_length:
            jobs.append(("literal", (n, r, machine.max_dim)))
            r += 1
    if machine.planted:
        jobs.append(("planted", machine))
    if machine.oracle_point(oracle) is not None:
        jobs.append(("oracle", (machine, oracle)))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_stratum, jobs))
    else:
        results = [_run_stratum(j) for j in jobs]
    best: dict[DyadicPoint, tuple[int, str]] = {}
    for chunk in results:
        for length, bits, p in chunk:
            key = p.reduced()
            cur = best.get(key)
            if cur is None or (length, bits) < cur:
                best[key] = (length, bits)
    entries = {p: Entry(p, k, bits) for p, (k, bits) in best.items()}
    return ComplexityTable(machine, oracle, entries)


def all_strings(max_length: int) -> Iterable[str]:
    for length in range(1, max_length + 1):
        for v in range(1 << length):
            yield format(v, f"0{length}b")


def scan_table(machine: ToyMachine, oracle: Optional[str] = None, max_length: Optional[int] = None) -> dict[DyadicPoint, int]:
    """Independent K table: decode every bit string up to max_length."""
    L = machine.max_length if max_length is None else max_length
    out: dict[DyadicPoint, int] = {}
    for bits in all_strings(L):
        p = machine.decode(bits, oracle)
        if p is not None:
            key = p.reduced()
            if key not in out:
                out[key] = len(bits)
    return out


@dataclass(frozen=True)
class CodeCheck:
    halting: int
    prefix_free: bool
    kraft_sum: Fraction
    violation: Optional[tuple[str, str]] = None


def check_code(machine: ToyMachine, oracle: Optional[str] = None, max_length: Optional[int] = None) -> CodeCheck:
    """Exhaustive prefix-freeness and Kraft check over all strings up to max_length."""
    L = machine.max_length if max_length is None else max_length
    halting = [b for b in all_strings(L) if machine.decode(b, oracle) is not None]
    hs = set(halting)
    violation = None
    for b in halting:
        for i in range(1, len(b)):
            if b[:i] in hs:
                violation = (b[:i], b)
                break
        if violation:
            break
    kraft = sum((Fraction(1, 1 << len(b)) for b in halting), Fraction(0))
    return CodeCheck(len(halting), violation is None, kraft, violation)


# ---------------------------------------------------------------------------
# ball complexities


def K_r(table: ComplexityTable, x, r) -> Optional[int]:
    """min K(p) over producible p with ||p - x|| < 2^-r; None when the ball is empty."""
    return table.K_r(x, r)


def joint_K_r(table: ComplexityTable, x, y, r) -> Optional[int]:
    """K_r of the pair (x, y) as a point of R^{m+n}."""
    return table.K_r(as_fractions(x) + as_fractions(y), r)


def _nearest_in_box(t: Fraction, lo: int, hi: int) -> int:
    m = math.floor(t + Fraction(1, 2))
    return min(max(m, lo), hi)


def oracle_witness(machine: ToyMachine, x, r, q: DyadicPoint, cap: Optional[int] = None) -> Optional[tuple[int, str]]:
    """Shortest oracle program (given q) whose output lies in B_{2^-r}(x).

    Each header fixes an output precision P and a box of mantissas around
    floor(q_m 2^j); the best mantissa in the box is the clamped nearest one
    per coordinate, so each header needs a single exact distance test.
    """
    xs = as_fractions(x)
    q = q.reduced()
    if len(xs) != q.dimension:
        return None
    r = ceil_precision(r)
    limit = machine.max_length if cap is None else min(cap, machine.max_length)
    bound = Fraction(1, 1 << (2 * r))
    for length, shift, w in oracle_shapes(q.dimension, limit):
        P = q.precision + shift
        if P < 0:
            continue
        base = [m << shift if shift >= 0 else m >> -shift for m in q.mantissas]
        lo, hi = (-(1 << (w - 1)), (1 << (w - 1)) - 1) if w else (0, 0)
        scale = 1 << P
        ms = [_nearest_in_box(v * scale, b + lo, b + hi) for v, b in zip(xs, base)]
        d2 = sum((Fraction(m, scale) - v) ** 2 for m, v in zip(ms, xs))
        if d2 < bound:
            offs = [m - b for m, b in zip(ms, base)]
            return length, encode_oracle_program(shift, w, offs)
    return None


def relative_K_r(table: ComplexityTable, x, r, oracle_point: Optional[DyadicPoint]) -> Optional[int]:
    """K^A_r(x) where the oracle A describes oracle_point (None: no oracle)."""
    base = table.K_r(x, r)
    if oracle_point is None:
        return base
    hit = oracle_witness(table.machine, x, r, oracle_point, cap=base)
    if hit is None:
        return base
    return hit[0] if base is None else min(base, hit[0])


def conditional_K_r_s(table: ComplexityTable, x, r, y, s) -> Optional[int]:
    """max over producible q in B_{2^-s}(y) of min over p in B_{2^-r}(x) of K(p | q).

    None when either ball holds no producible point (the value is undefined)
    or when some q leaves the x-ball unreachable.
    """
    base = table.K_r(x, r)
    worst = None
    found_q = False
    for entry in table.in_ball(y, s):
        found_q = True
        hit = oracle_witness(table.machine, x, r, entry.point, cap=None if base is None else base - 1)
        if hit is None:
            if base is None:
                return None
            return base  # no q can do worse than ignoring the oracle
        val = hit[0]
        worst = val if worst is None else max(worst, val)
    if not found_q:
        return None
    return worst


def conditional_bruteforce(table: ComplexityTable, x, r, y, s) -> Optional[int]:
    """Same quantity by a literal double loop over relativized tables (small universes only)."""
    worst = None
    found_q = False
    for entry in table.in_ball(y, s):
        found_q = True
        rel = exact_K(table.machine, oracle_for(entry.point, table.machine.max_dim))
        val = rel.K_r(x, r)
        if val is None:
            return None
        worst = val if worst is None else max(worst, val)
    return worst if found_q else None


def ball_monotone_profile(table: ComplexityTable, x, rs: Sequence[int]) -> list[Optional[int]]:
    return [table.K_r(x, r) for r in rs]
