import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclab.errors import ContractViolation
from fraclab.geometry import (
    Direction,
    DyadicPoint,
    ceil_precision,
    dot,
    log_distance,
    nearest_on_level_set,
    sample_direction,
)

coord = st.floats(-100, 100, allow_nan=False)
vec2 = st.tuples(coord, coord)
vec3 = st.tuples(coord, coord, coord)


def test_dyadic_point_equality_normalizes_precision():
    assert DyadicPoint((2, -4), 3) == DyadicPoint((1, -2), 2)
    assert hash(DyadicPoint((4,), 2)) == hash(DyadicPoint((1,), 0))
    assert DyadicPoint((1,), 1) != DyadicPoint((1,), 2)
    assert DyadicPoint((3, 5), 4).dimension == 2


def test_dyadic_point_round_trip_and_concat():
    p = DyadicPoint.from_real((0.3, -0.7), 5)
    assert p.mantissas == (10, -22)
    assert p.to_fractions() == (Fraction(10, 32), Fraction(-22, 32))
    q = p.concat(DyadicPoint((1,), 1))
    assert q.dimension == 3 and q.to_fractions()[2] == Fraction(1, 2)
    with pytest.raises(ContractViolation):
        DyadicPoint((1,), 3).at_precision(2)


def test_sq_dist_below_is_exact():
    p = DyadicPoint((1,), 2)  # 0.25
    assert p.sq_dist_below((0.5 - 2**-40,), 2)
    assert not p.sq_dist_below((0.5,), 2)  # distance exactly 2^-2 is not inside the open ball


def test_ceil_precision():
    assert ceil_precision(3) == 3
    assert ceil_precision(3.2) == 4
    assert ceil_precision(0) == 0
    with pytest.raises(ContractViolation):
        ceil_precision(-1)


def test_direction_requires_unit_norm():
    Direction((0.6, 0.8))
    with pytest.raises(ContractViolation):
        Direction((1.0, 1.0))
    e = Direction.from_vector((3, 4))
    assert e.components == pytest.approx((0.6, 0.8))
    with pytest.raises(ContractViolation):
        Direction.from_vector((0, 0))


def test_dot_examples():
    assert dot(Direction((1.0, 0.0)), (0.5, 0.7)) == 0.5
    # 3/5 * 5 + 4/5 * 5 = 3 + 4
    assert dot(Direction((0.6, 0.8)), (5, 5)) == pytest.approx(7.0, abs=1e-12)
    s = 1 / math.sqrt(2)
    for c in (-3.0, 0.0, 2.5):
        assert dot(Direction((s, -s)), (c, c)) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ContractViolation):
        dot(Direction((1.0, 0.0)), (1, 2, 3))


def test_log_distance_examples():
    assert log_distance((0, 0), (0, 1)) == 0
    assert log_distance((0, 0), (0, 2**-5)) == 5
    assert log_distance((0.3, 0.1), (0.3, 0.1)) == math.inf


def test_nearest_on_level_set_examples():
    e = Direction((1.0, 0.0))
    assert np.allclose(nearest_on_level_set((0, 0), e, 0.25), (0.25, 0))
    s = 1 / math.sqrt(2)
    # p - (e.p) e = (1,1) - sqrt2 (s, s)
    assert np.allclose(nearest_on_level_set((1, 1), Direction((s, s)), 0.0), (0, 0), atol=1e-15)
    p = np.array([0.3, -0.2])
    e = Direction.from_vector((1, 2))
    assert np.allclose(nearest_on_level_set(p, e, dot(e, p)), p)


def test_sample_direction_deterministic_and_unbiased():
    assert sample_direction(3, 42) == sample_direction(3, 42)
    rng = np.random.default_rng(7)
    samples = np.array([sample_direction(2, rng).components for _ in range(10_000)])
    assert np.all(np.abs(samples.mean(axis=0)) < 0.05)
    assert np.all(np.abs(np.linalg.norm(samples, axis=1) - 1) <= 1e-12)
    with pytest.raises(ContractViolation):
        sample_direction(1, 0)


@settings(max_examples=200, deadline=None)
@given(vec2, vec2, st.integers(0, 2**32 - 1))
def test_projection_is_1_lipschitz(x, y, seed):
    e = sample_direction(2, seed)
    assert abs(dot(e, x) - dot(e, y)) <= np.linalg.norm(np.subtract(x, y)) + 1e-9


@settings(max_examples=200, deadline=None)
@given(vec3, st.floats(-50, 50), st.integers(0, 2**32 - 1))
def test_nearest_on_level_set_properties(p, q, seed):
    e = sample_direction(3, seed)
    w = nearest_on_level_set(p, e, q)
    scale = 1 + max(abs(v) for v in p) + abs(q)
    assert abs(dot(e, w) - q) <= 1e-12 * scale * 10
    assert np.linalg.norm(np.subtract(p, w)) <= abs(q - dot(e, p)) + 1e-12 * scale * 10


@settings(max_examples=200, deadline=None)
@given(vec2, vec2, vec2)
def test_log_distance_symmetric_and_translation_invariant(z, w, v):
    d = log_distance(z, w)
    assert d == log_distance(w, z)
    zv, wv = np.array(z) + v, np.array(w) + v
    if math.isfinite(d) and np.linalg.norm(np.subtract(z, w)) > 1e-3:
        assert log_distance(zv, wv) == pytest.approx(d, abs=1e-6)
