import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclab.dimension import (
    CountSeries,
    DimensionEstimate,
    box_dimension,
    projection_dimension,
    projection_series,
    set_dimension,
)
from fraclab.errors import ContractViolation
from fraclab.fractals import lookup
from fraclab.geometry import Direction, sample_direction

RS = tuple(range(8, 21))


def test_full_square_series_slope_two():
    est = box_dimension(CountSeries(RS, tuple(2 ** (2 * r) for r in RS), 2), (8, 20))
    assert est.slope == pytest.approx(2.0, abs=1e-12)
    assert est.rms == pytest.approx(0.0, abs=1e-9)


def test_constant_series_slope_zero():
    for mode in ("ls", "liminf", "limsup"):
        assert box_dimension(CountSeries(RS, (1,) * len(RS)), (8, 20), mode).slope == 0.0


def test_window_too_small():
    with pytest.raises(ContractViolation):
        box_dimension(CountSeries((8, 9, 10), (1, 2, 4)), (8, 10))
    with pytest.raises(ContractViolation):
        box_dimension(CountSeries(RS, tuple(2**r for r in RS)), (8, 20), "median")


def test_series_invariants():
    with pytest.raises(ContractViolation):
        CountSeries((3, 2), (1, 1))
    with pytest.raises(ContractViolation):
        CountSeries((1, 2), (0, 1))
    with pytest.raises(ContractViolation):
        CountSeries((1,), (64,), dimension=1)


def test_cantor_box_dimension():
    est = set_dimension(lookup("cantor3"), (8, 20))
    assert abs(est.slope - math.log(2) / math.log(3)) <= 0.05


def test_estimate_json_round_trip():
    est = DimensionEstimate(0.5, 1.0, 0.01, 8, 20, "ls")
    text = est.to_json()
    assert set(__import__("json").loads(text)) == {"slope", "intercept", "rms", "r_min", "r_max", "mode"}
    assert DimensionEstimate.from_json(text) == est


def test_square_projection_is_one():
    for seed in range(3):
        est = projection_dimension(lookup("square"), sample_direction(2, seed), (8, 20))
        assert est.slope == pytest.approx(1.0, abs=0.02)


def test_fourcorner_axis_projection():
    assert projection_dimension(lookup("fourcorner"), Direction((1.0, 0.0)), (8, 20)).slope == pytest.approx(0.5, abs=0.05)


def test_projected_and_composed_agree():
    e = sample_direction(2, 11)
    a = projection_dimension(lookup("sierpinski"), e, (6, 11), method="projected")
    b = projection_dimension(lookup("sierpinski"), e, (6, 11), method="composed")
    assert a.slope == pytest.approx(b.slope, abs=0.05)


def test_projection_dimension_below_set_dimension():
    for name in ("cantor3_line", "fourcorner", "sierpinski"):
        ifs = lookup(name)
        s = set_dimension(ifs, (8, 18)).slope
        for seed in range(3):
            p = projection_dimension(ifs, sample_direction(2, seed), (8, 18)).slope
            assert p <= min(1.0, s) + 0.05


def test_line_cantor_along_its_normal_is_a_point():
    est = projection_dimension(lookup("cantor3_line"), Direction((0.0, 1.0)), (8, 20))
    assert est.slope < 0.05


def test_direction_dimension_checked():
    with pytest.raises(ContractViolation):
        projection_series(lookup("cantor3"), Direction((1.0, 0.0)))


counts = st.lists(st.integers(0, 3), min_size=13, max_size=13)


def _series(steps):
    c, out = 1, []
    for d in steps:
        c = c * 2**d if d < 3 else c + 1
        out.append(c)
    return CountSeries(RS, tuple(out))


@settings(max_examples=200, deadline=None)
@given(counts)
def test_mode_ordering(steps):
    s = _series(steps)
    lo = box_dimension(s, (8, 20), "liminf").slope
    mid = box_dimension(s, (8, 20), "ls").slope
    hi = box_dimension(s, (8, 20), "limsup").slope
    assert lo <= mid + 1e-12 and mid <= hi + 1e-12


@settings(max_examples=100, deadline=None)
@given(counts, st.integers(0, 10))
def test_slope_invariant_under_constant_shift(steps, k):
    s = _series(steps)
    shifted = CountSeries(s.rs, tuple(c * 2**k for c in s.counts))
    for mode in ("ls", "liminf", "limsup"):
        assert box_dimension(shifted, (8, 20), mode).slope == pytest.approx(box_dimension(s, (8, 20), mode).slope, abs=1e-9)
