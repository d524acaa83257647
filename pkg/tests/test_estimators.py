from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclab.errors import ContractViolation
from fraclab.estimators import (
    ComplexityProfile,
    Token,
    complexity_profile,
    decode_tokens,
    delta_length,
    dictionary_complexity,
    effective_dim,
    encode_point_bits,
    lz78_phrases,
    optimal_parse,
    profile_precisions,
    random_source,
    rational_source,
)

bitstrings = st.text("01", min_size=0, max_size=40)


def elias_delta(k: int) -> str:
    """Reference Elias delta code, built from its definition."""
    nb = k.bit_length()
    lb = nb.bit_length()
    return "0" * (lb - 1) + format(nb, "b") + format(k, "b")[1:]


def brute_cost(bits: str) -> int:
    """Optimal parse cost by plain recursion over every token choice."""

    @lru_cache(maxsize=None)
    def best(j):
        if j == len(bits):
            return 0
        out = min(1 + len(elias_delta(L)) + L + best(j + L) for L in range(1, len(bits) - j + 1))
        for d in range(1, j + 1):
            L = 0
            while j + L < len(bits) and bits[j + L] == bits[j + L - d]:
                L += 1
                out = min(out, 1 + len(elias_delta(L)) + len(elias_delta(d)) + best(j + L))
        return out

    return best(0)


def test_delta_length_matches_reference():
    ks = np.arange(1, 2000)
    assert list(delta_length(ks)) == [len(elias_delta(int(k))) for k in ks]
    assert delta_length(1) == 1
    with pytest.raises(ContractViolation):
        delta_length(0)


def test_encoding_examples():
    assert encode_point_bits(0, 8).bits == "00000000"
    assert encode_point_bits((Fraction(1, 2), Fraction(1, 4)), 2).bits == "1001"
    assert encode_point_bits((Fraction(1, 2), Fraction(1, 4)), 2, scheme="concatenated").bits == "1001"
    assert encode_point_bits((Fraction(3, 4), Fraction(1, 4)), 2, scheme="concatenated").bits == "1101"
    assert encode_point_bits((Fraction(3, 4), Fraction(1, 4)), 2).bits == "1011"
    # the closed top edge maps to the last cell
    assert encode_point_bits(1, 4).bits == "1111"
    assert encode_point_bits(0.0, 4, box=[(-1, 1)]).bits == "1000"
    with pytest.raises(ContractViolation):
        encode_point_bits(1.5, 4)
    with pytest.raises(ContractViolation):
        encode_point_bits(0.5, 4, scheme="zigzag")


@settings(max_examples=100, deadline=None)
@given(st.fractions(0, 1), st.fractions(0, 1), st.integers(0, 40), st.integers(0, 40))
def test_encoding_prefix_property(a, b, r, s):
    lo, hi = sorted((r, s))
    assert encode_point_bits((a, b), hi).bits.startswith(encode_point_bits((a, b), lo).bits)


def test_parse_cost_examples():
    assert dictionary_complexity("0" * 64) <= 40
    rng = np.random.default_rng(5)
    noise = "".join(map(str, rng.integers(0, 2, 64)))
    assert dictionary_complexity(noise) >= 48
    assert dictionary_complexity("") == 0.0
    with pytest.raises(ContractViolation):
        dictionary_complexity("0101", "gzip")


@settings(max_examples=150, deadline=None)
@given(st.text("01", min_size=0, max_size=14))
def test_parse_is_optimal_against_bruteforce(bits):
    assert optimal_parse(bits)[0] == brute_cost(bits)


@settings(max_examples=150, deadline=None)
@given(bitstrings)
def test_parse_decodes_and_costs_add_up(bits):
    cost, tokens = optimal_parse(bits)
    assert decode_tokens(tokens, bits) == bits
    assert cost == sum(t.cost() for t in tokens)


@settings(max_examples=150, deadline=None)
@given(bitstrings, bitstrings)
def test_subadditivity(a, b):
    # parses concatenate: copies inside b still point into b
    assert dictionary_complexity(a + b) <= dictionary_complexity(a) + dictionary_complexity(b)


def test_header_changes_cost_by_a_bounded_amount():
    src = random_source(1, 3, max_bits=512)
    header = "1011001110001111"
    lit = Token("literal", 0, 16).cost()
    for r in (64, 256, 512):
        bits = src(r).bits
        assert dictionary_complexity(header + bits) <= dictionary_complexity(bits) + lit
        assert dictionary_complexity(bits) <= dictionary_complexity(header + bits) + 1


def test_lz78_hand_example():
    # phrases 0 | 00 | 000 | 0000
    assert lz78_phrases("0000000000") == 4
    assert lz78_phrases("0000000") == 4  # the trailing 0 is a repeated, unfinished phrase
    assert lz78_phrases("") == 0
    assert dictionary_complexity("0000000000", "lz78") == pytest.approx(4 * 3)


def test_profile_precisions():
    rs = profile_precisions()
    assert rs[0] == 32 and rs[-1] == 4096
    assert all(b > a for a, b in zip(rs, rs[1:]))
    assert len(rs) == 36


def test_profile_csv_round_trip():
    prof = complexity_profile(rational_source((1,), 3), rs=[32, 64, 128], label="third")
    text = prof.to_csv()
    assert text.splitlines()[0] == "r,k_r"
    back = ComplexityProfile.from_csv(text)
    assert back.rs == prof.rs and back.ks == prof.ks
    with pytest.raises(ContractViolation):
        ComplexityProfile([2, 1], [1.0, 1.0], 1)


def test_effective_dim_modes():
    prof = ComplexityProfile(list(range(1, 21)), [r * (0.5 + 0.1 * (r % 2)) for r in range(1, 21)], 1)
    lo = effective_dim(prof, "liminf")
    hi = effective_dim(prof, "limsup")
    assert lo == pytest.approx(0.5) and hi == pytest.approx(0.6)
    with pytest.raises(ContractViolation):
        effective_dim(prof, "median")
    with pytest.raises(ContractViolation):
        effective_dim(ComplexityProfile([1, 2], [1.0, 2.0], 1))


def test_rational_versus_random_ordering():
    rs = [256, 512, 1024, 2048]
    rat = complexity_profile(rational_source((2, 5), 7), rs).densities()
    rnd = complexity_profile(random_source(2, 11, max_bits=2048), rs).densities()
    assert np.all(rat < 0.2) and np.all(rnd > 0.9)
    assert np.all(rat < rnd)
