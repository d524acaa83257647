"""Compression-based complexity estimates and effective-dimension proxies.

Two in-repo estimators share one interface:

* ``lzdp`` (default): optimal parse of the bit string into literal runs and
  back-references (LZ77-style copies, overlap allowed), found by dynamic
  programming. Token costs are a 1-bit tag plus Elias-delta codes:
  literal run of length L costs 1 + delta(L) + L, a copy of length L from
  distance d costs 1 + delta(L) + delta(d). The estimate is the cost of the
  cheapest parse; the string length is taken as known to the decoder.
* ``lz78``: incremental-dictionary parse (each phrase is a previously seen
  phrase plus one bit), estimate = c (log2 c + 1) for c phrases.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ContractViolation

MAX_BITS = 4096 * 4
SCHEMES = ("interleaved", "concatenated")
ESTIMATORS = ("lzdp", "lz78")
DEFAULT_ESTIMATOR = "lzdp"


def profile_precisions(r_max: int = 4096, r_min_exp: float = 5.0, step: float = 0.2) -> list[int]:
    """Geometric precisions round(2^(5 + 0.2k)) up to r_max."""
    out = []
    k = 0
    while True:
        r = int(round(2 ** (r_min_exp + step * k)))
        if r > r_max:
            break
        if not out or r != out[-1]:
            out.append(r)
        k += 1
    return out


@dataclass(frozen=True)
class BitEncoding:
    bits: str
    scheme: str
    precision: int
    dimension: int

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ContractViolation(f"unknown scheme {self.scheme!r}")
        if len(self.bits) != self.dimension * self.precision:
            raise ContractViolation("encoding length must equal n * r")

    def __len__(self):
        return len(self.bits)


def _exact(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


def encode_point_bits(x, r: int, box: Optional[Sequence[tuple]] = None,
                      scheme: str = "interleaved") -> BitEncoding:
    """First r bits of each coordinate, after mapping the box [lo, hi) onto [0, 1)."""
    if not 0 <= r <= MAX_BITS:
        raise ContractViolation(f"precision must be in [0, {MAX_BITS}]")
    if scheme not in SCHEMES:
        raise ContractViolation(f"unknown scheme {scheme!r}")
    xs = [_exact(v) for v in (x if isinstance(x, (tuple, list, np.ndarray)) else (x,))]
    n = len(xs)
    box = box or [(0, 1)] * n
    if len(box) != n:
        raise ContractViolation("box must have one interval per coordinate")
    rows = []
    top = (1 << r) - 1
    for v, (lo, hi) in zip(xs, box):
        lo, hi = _exact(lo), _exact(hi)
        if hi <= lo or not lo <= v <= hi:
            raise ContractViolation(f"coordinate {float(v)} outside box [{float(lo)}, {float(hi)}]")
        m = min(math.floor((v - lo) / (hi - lo) * (1 << r)), top) if r else 0
        rows.append(format(m, f"0{r}b") if r else "")
    if scheme == "interleaved":
        bits = "".join("".join(row[k] for row in rows) for k in range(r))
    else:
        bits = "".join(rows)
    return BitEncoding(bits, scheme, r, n)


def delta_length(k):
    """Length of the Elias delta code of k >= 1 (vectorized over integer arrays)."""
    k = np.asarray(k, dtype=np.int64)
    if np.any(k < 1):
        raise ContractViolation("Elias delta encodes k >= 1")
    nbits = np.frexp(k.astype(np.float64))[1]  # floor(log2 k) + 1
    lbits = np.frexp(nbits.astype(np.float64))[1]
    out = (nbits - 1) + 2 * (lbits - 1) + 1
    return int(out) if out.ndim == 0 else out


def _as_array(bits: str) -> np.ndarray:
    if set(bits) - {"0", "1"}:
        raise ContractViolation("bits must be '0'/'1'")
    return np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - 48


@dataclass(frozen=True)
class Token:
    kind: str  # "literal" | "copy"
    start: int
    length: int
    distance: int = 0

    def cost(self) -> int:
        if self.kind == "literal":
            return 1 + delta_length(self.length) + self.length
        return 1 + delta_length(self.length) + delta_length(self.distance)


def optimal_parse(bits: str) -> tuple[int, list[Token]]:
    """Cheapest literal/copy parse; returns (cost, tokens)."""
    b = _as_array(bits)
    n = len(b)
    if n == 0:
        return 0, []
    INF = np.iinfo(np.int64).max // 4
    cost = np.full(n + 1, INF, dtype=np.int64)
    cost[n] = 0
    step = np.zeros(n, dtype=np.int64)
    dist = np.zeros(n, dtype=np.int64)
    lengths = np.arange(1, n + 1, dtype=np.int64)
    lit_add = 1 + delta_length(lengths) + lengths
    lcp = np.zeros(n + 1, dtype=np.int64)  # lcp[d]: match length of suffix j against suffix j - d
    for j in range(n - 1, -1, -1):
        m = n - j
        lit = lit_add[:m] + cost[j + 1:]
        best_l = int(np.argmin(lit))
        best, bl, bd = int(lit[best_l]), best_l + 1, 0
        if j:
            eq = b[j - 1::-1] == b[j]
            lcp[1:j + 1] = np.where(eq, lcp[1:j + 1] + 1, 0)
            pm = np.maximum.accumulate(lcp[1:j + 1])
            top = int(pm[-1])
            if top:
                L = lengths[:top]
                d = np.searchsorted(pm, L, side="left") + 1
                cand = 1 + delta_length(L) + delta_length(d) + cost[j + L]
                k = int(np.argmin(cand))
                if int(cand[k]) < best:
                    best, bl, bd = int(cand[k]), k + 1, int(d[k])
        cost[j] = best
        step[j] = bl
        dist[j] = bd
    tokens = []
    j = 0
    while j < n:
        L, d = int(step[j]), int(dist[j])
        tokens.append(Token("copy" if d else "literal", j, L, d))
        j += L
    return int(cost[0]), tokens


def decode_tokens(tokens: Sequence[Token], literal_bits: str) -> str:
    """Rebuild the string from a parse (literal content passed separately)."""
    out = []
    for t in tokens:
        if t.kind == "literal":
            out.extend(literal_bits[t.start:t.start + t.length])
        else:
            for _ in range(t.length):
                out.append(out[-t.distance])
    return "".join(out)


def lz78_phrases(bits: str) -> int:
    seen = {""}
    count = 0
    cur = ""
    for ch in bits:
        cur += ch
        if cur not in seen:
            seen.add(cur)
            count += 1
            cur = ""
    return count + (1 if cur else 0)


def dictionary_complexity(bits: str, estimator: str = DEFAULT_ESTIMATOR) -> float:
    """Estimated description length of a bit string, in bits."""
    if estimator == "lzdp":
        return float(optimal_parse(bits)[0])
    if estimator == "lz78":
        c = lz78_phrases(bits)
        return 0.0 if c == 0 else c * (math.log2(c) + 1)
    raise ContractViolation(f"unknown estimator {estimator!r}")


@dataclass
class ComplexityProfile:
    rs: list
    ks: list
    dimension: int
    estimator: str = DEFAULT_ESTIMATOR
    label: str = ""

    def __post_init__(self):
        if len(self.rs) != len(self.ks):
            raise ContractViolation("rs and ks must have equal length")
        if any(b <= a for a, b in zip(self.rs, self.rs[1:])):
            raise ContractViolation("precisions must be strictly increasing")
        if any(k < 0 for k in self.ks):
            raise ContractViolation("complexity estimates are nonnegative")

    def densities(self) -> np.ndarray:
        return np.asarray(self.ks, float) / (np.asarray(self.rs, float) * self.dimension)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "k_r"])
        for r, k in zip(self.rs, self.ks):
            w.writerow([r, repr(float(k))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, dimension: int = 1, estimator: str = DEFAULT_ESTIMATOR) -> ComplexityProfile:
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls([int(r["r"]) for r in rows], [float(r["k_r"]) for r in rows], dimension, estimator)


def complexity_profile(source: Callable[[int], BitEncoding], rs: Optional[Sequence[int]] = None,
                       estimator: str = DEFAULT_ESTIMATOR, header: str = "", label: str = "") -> ComplexityProfile:
    """k_r = dictionary_complexity(header + encoding at precision r) for each r."""
    rs = list(rs or profile_precisions())
    ks, n = [], None
    for r in rs:
        enc = source(r)
        n = enc.dimension
        ks.append(dictionary_complexity(header + enc.bits, estimator))
    return ComplexityProfile(rs, ks, n or 1, estimator, label)


def effective_dim(profile: ComplexityProfile, mode: str = "liminf", tail: float = 0.5, min_tail: int = 8) -> float:
    """Tail-window min (liminf) or max (limsup) of k_r / (n r)."""
    dens = profile.densities()
    k = max(int(math.ceil(len(dens) * tail)), 0)
    window = dens[len(dens) - k:]
    if len(window) < min_tail:
        raise ContractViolation(f"tail window has {len(window)} samples, need {min_tail}")
    if mode == "liminf":
        return float(window.min())
    if mode == "limsup":
        return float(window.max())
    raise ContractViolation(f"unknown mode {mode!r}")


# point sources -----------------------------------------------------------

def rational_source(num: Sequence[int], den: int, box=None, scheme: str = "interleaved"):
    x = tuple(Fraction(a, den) for a in num)
    return lambda r: encode_point_bits(x, r, box, scheme)


def random_source(n: int, seed, max_bits: int = 4096, scheme: str = "interleaved"):
    """Point with max_bits + 64 seeded random bits per coordinate."""
    rng = np.random.default_rng(seed)
    width = max_bits + 64
    x = tuple(Fraction(int("".join(map(str, rng.integers(0, 2, width))), 2), 1 << width) for _ in range(n))
    return lambda r: encode_point_bits(x, r, None, scheme)


def fractal_source(ifs, seed, max_bits: int = 4096, scheme: str = "interleaved"):
    """A point of the attractor picked by a seeded random address.

    Maps are read as exact rationals (ratio via limit_denominator), so this
    source is meant for homothety IFSs with rational data.
    """
    from .fractals import bounding_ball

    if not all(m.is_homothety for m in ifs.maps):
        raise ContractViolation("fractal_source needs homothety maps")
    rng = np.random.default_rng(seed)
    ratios = [Fraction(m.ratio).limit_denominator(10**6) for m in ifs.maps]
    trans = [tuple(Fraction(t).limit_denominator(10**6) for t in m.translation) for m in ifs.maps]
    cmax = max(ratios)
    depth = int(math.ceil((max_bits + 16) / -math.log2(cmax)))
    n = len(trans[0])
    x = [Fraction(0)] * n
    scale = Fraction(1)
    for a in rng.integers(0, len(ifs.maps), depth):
        x = [xi + scale * ti for xi, ti in zip(x, trans[a])]
        scale *= ratios[a]
    c, R = bounding_ball(ifs)
    box = [(Fraction(ci - R - 1).limit_denominator(1 << 20), Fraction(ci + R + 1).limit_denominator(1 << 20))
           for ci in c]
    return lambda r: encode_point_bits(tuple(x), r, box, scheme)
