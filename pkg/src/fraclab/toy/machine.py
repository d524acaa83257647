"""A small prefix-free decoder standing in for a universal machine.

Programs are bit strings (``str`` of '0'/'1'). Every program is parsed by
self-delimiting fields, and a program only halts when the parse ends exactly
at its last bit, so no halting program is a proper prefix of another.

Formats (gamma(k) is the Elias gamma code of k >= 1)::

    0  gamma(n) gamma(r+1) <n blocks of r+1 bits>      literal point
    10 s gamma(k+1) gamma(w+1) <n_q blocks of w bits>   shift/offset of the oracle point
    11 gamma(i+1)                                       i-th planted point

A literal block is an (r+1)-bit two's-complement integer m, so the literal
point has coordinates m 2^-r in [-1, 1). The oracle, when present, is itself
the literal encoding of a point q at precision r_q; the oracle program outputs
floor(q_m 2^j) + o at precision r_q + j, with j = k for s = 0 and
j = -(k+1) for s = 1, and o the w-bit two's-complement offsets.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

from ..errors import BudgetExceeded, ContractViolation
from ..geometry import DyadicPoint

MAX_LENGTH = 24
DEFAULT_MAX_DIM = 4


def gamma_code(k: int) -> str:
    if k < 1:
        raise ContractViolation(f"Elias gamma encodes k >= 1, got {k}")
    b = bin(k)[2:]
    return "0" * (len(b) - 1) + b


def read_gamma(bits: str, pos: int) -> Optional[tuple[int, int]]:
    z = 0
    while pos + z < len(bits) and bits[pos + z] == "0":
        z += 1
    end = pos + 2 * z + 1
    if end > len(bits):
        return None
    return int(bits[pos + z:end], 2), end


def _twos(chunk: str) -> int:
    v = int(chunk, 2)
    return v - (1 << len(chunk)) if chunk[0] == "1" else v


def _to_twos(m: int, width: int) -> str:
    if not -(1 << (width - 1)) <= m < (1 << (width - 1)):
        raise ContractViolation(f"{m} does not fit in {width}-bit two's complement")
    return format(m % (1 << width), f"0{width}b")


def read_literal(bits: str, pos: int, max_dim: int) -> Optional[tuple[DyadicPoint, int]]:
    """Parse gamma(n) gamma(r+1) mantissas starting at pos (after the opcode)."""
    head = read_gamma(bits, pos)
    if head is None:
        return None
    n, pos = head
    if n > max_dim:
        return None
    head = read_gamma(bits, pos)
    if head is None:
        return None
    width, pos = head
    end = pos + n * width
    if end > len(bits):
        return None
    ms = tuple(_twos(bits[pos + i * width: pos + (i + 1) * width]) for i in range(n))
    return DyadicPoint(ms, width - 1), end


def encode_literal(point: DyadicPoint, max_dim: int = DEFAULT_MAX_DIM) -> str:
    """Shortest literal program for a point (written at its reduced precision)."""
    p = point.reduced()
    if p.dimension > max_dim:
        raise ContractViolation(f"dimension {p.dimension} exceeds the machine limit {max_dim}")
    width = p.precision + 1
    return "0" + gamma_code(p.dimension) + gamma_code(width) + "".join(_to_twos(m, width) for m in p.mantissas)


def literal_length(n: int, r: int) -> int:
    return 1 + len(gamma_code(n)) + len(gamma_code(r + 1)) + n * (r + 1)


def oracle_header(shift: int, width: int) -> str:
    sign, k = ("0", shift) if shift >= 0 else ("1", -shift - 1)
    return "10" + sign + gamma_code(k + 1) + gamma_code(width + 1)


def encode_oracle_program(shift: int, width: int, offsets: Sequence[int]) -> str:
    body = "".join(_to_twos(o, width) for o in offsets) if width else ""
    if not width and any(offsets):
        raise ContractViolation("zero-width offsets must all be 0")
    return oracle_header(shift, width) + body


def encode_planted(i: int) -> str:
    return "11" + gamma_code(i + 1)


COPY_PROGRAM = encode_oracle_program(0, 0, ())


@lru_cache(maxsize=4096)
def _parse_oracle(oracle: str, max_dim: int) -> Optional[DyadicPoint]:
    if not oracle or oracle[0] != "0":
        return None
    res = read_literal(oracle, 1, max_dim)
    if res is None or res[1] != len(oracle):
        return None
    return res[0]


@dataclass(frozen=True)
class ToyProgram:
    bits: str
    max_length: int = MAX_LENGTH

    def __post_init__(self):
        if set(self.bits) - {"0", "1"}:
            raise ContractViolation("program bits must be '0'/'1'")
        if len(self.bits) > self.max_length:
            raise BudgetExceeded("program length", len(self.bits), self.max_length)

    def __len__(self):
        return len(self.bits)


@dataclass(frozen=True)
class ToyMachine:
    max_length: int = 16
    max_dim: int = DEFAULT_MAX_DIM
    planted: tuple[DyadicPoint, ...] = field(default=())

    def __post_init__(self):
        if self.max_length > MAX_LENGTH:
            raise BudgetExceeded("toy machine program length", self.max_length, MAX_LENGTH)
        if self.max_length < 1 or self.max_dim < 1:
            raise ContractViolation("max_length and max_dim must be positive")
        object.__setattr__(self, "planted", tuple(self.planted))

    def oracle_point(self, oracle: Optional[str]) -> Optional[DyadicPoint]:
        return None if oracle is None else _parse_oracle(oracle, self.max_dim)

    def decode(self, program, oracle: Optional[str] = None) -> Optional[DyadicPoint]:
        """Output point, or None when the program does not halt."""
        bits = program.bits if isinstance(program, ToyProgram) else program
        if not bits or len(bits) > self.max_length:
            return None
        if bits[0] == "0":
            res = read_literal(bits, 1, self.max_dim)
            if res is None or res[1] != len(bits):
                return None
            return res[0]
        if len(bits) < 2:
            return None
        if bits[1] == "1":
            res = read_gamma(bits, 2)
            if res is None or res[1] != len(bits) or res[0] > len(self.planted):
                return None
            return self.planted[res[0] - 1]
        return self._decode_oracle(bits, oracle)

    def _decode_oracle(self, bits: str, oracle: Optional[str]) -> Optional[DyadicPoint]:
        if len(bits) < 3:
            return None
        negative = bits[2] == "1"
        res = read_gamma(bits, 3)
        if res is None:
            return None
        k1, pos = res
        res = read_gamma(bits, pos)
        if res is None:
            return None
        w1, pos = res
        q = self.oracle_point(oracle)
        if q is None:
            return None
        n, width = q.dimension, w1 - 1
        if pos + n * width != len(bits):
            return None
        shift = -k1 if negative else k1 - 1
        precision = q.precision + shift
        if precision < 0:
            return None
        offsets = [_twos(bits[pos + i * width: pos + (i + 1) * width]) if width else 0 for i in range(n)]
        base = [m << shift if shift >= 0 else m >> -shift for m in q.mantissas]
        return DyadicPoint(tuple(b + o for b, o in zip(base, offsets)), precision)


def oracle_for(point: DyadicPoint, max_dim: int = DEFAULT_MAX_DIM) -> str:
    """Oracle side input describing a point (its literal encoding)."""
    return encode_literal(point, max_dim)
