import math
from fractions import Fraction

import pytest

from fraclab.errors import ContractViolation
from fraclab.geometry import Direction, DyadicPoint
from fraclab.harness import point_lemma_instances
from fraclab.toy.complexity import exact_K
from fraclab.toy.lemmas import (
    clamp_oracle,
    exact_dot,
    lemma_parameters,
    recover_point,
    verify_point_lemma,
    verify_projection_bound,
    verify_symmetry_of_information,
)
from fraclab.toy.machine import ToyMachine, encode_planted

AXIS = Direction((1.0, 0.0))
DIAG = Direction((0.6, 0.8))


def test_exact_dot():
    assert exact_dot((0.6, 0.8), (1, 1)) == Fraction(0.6) + Fraction(0.8)
    with pytest.raises(ContractViolation):
        exact_dot((1.0,), (1, 2))


def test_clamp_caps_only_at_z(table16):
    z = (0.3,)
    r = 4
    base = table16.K_r(z, r)
    cl = clamp_oracle(table16, z, Fraction(1, 4), r)
    assert cl.cap == 1
    assert cl.K_t(z, r) == min(1, base)
    # other points and finer precisions keep their complexity
    assert cl.K_t((-0.3,), r) == table16.K_r((-0.3,), r)
    assert cl.K_t(z, r + 1) == table16.K_r(z, r + 1)
    assert not cl.vacuous
    with pytest.raises(ContractViolation):
        clamp_oracle(table16, z, 1, r)


def test_clamp_cap_values(table16):
    # cap is ceil(eta r): a large eta leaves K alone, a small one lowers it
    z = (0.3,)
    k = table16.K_r(z, 3)
    big = clamp_oracle(table16, z, Fraction(15, 16), 3)
    assert big.cap == 3 and big.K_t(z, 3) == min(3, k)
    assert all(clamp_oracle(table16, z, Fraction(1, 2), 3).K_t(z, t) <= clamp_oracle(table16, z, Fraction(3, 4), 3).K_t(z, t)
               for t in range(0, 4))


def test_clamp_vacuous_when_cap_exceeds_K(table16):
    # the origin is cheap, so any cap at moderate eta r is above its complexity
    cl = clamp_oracle(table16, (0.0,), Fraction(7, 8), 8)
    assert cl.vacuous and cl.K_t((0.0,), 8) == table16.K_r((0.0,), 8)


def test_recover_point_budget_and_hint(table22):
    e = AXIS
    assert recover_point(table22, 0.25, e, 3, 0) is None
    found = recover_point(table22, Fraction(1, 4), e, 3, 22)
    assert found is not None
    assert abs(exact_dot(e, found.point.to_fractions()) - Fraction(1, 4)) < Fraction(1, 8)
    # the hint keeps the search inside a ball of radius 1/2
    hinted = recover_point(table22, Fraction(1, 4), e, 3, 22, hint=(0.25, 0.75))
    assert hinted is not None and hinted.point.sq_dist_below((0.25, 0.75), 1)
    # first by length: nothing shorter reaches the same projection
    shorter = recover_point(table22, Fraction(1, 4), e, 3, found.K - 1)
    assert shorter is None


def test_degenerate_delta_guard(table22):
    rep = verify_point_lemma(table22, (0.1, 0.2), AXIS, 4, Fraction(1, 2), Fraction(1, 8), 0)
    assert rep.degenerate and not rep.asserted and rep.conclusion is None


def test_seeded_point_lemma_instances_hold(table22, constants):
    insts = point_lemma_instances(10, 0, table22)
    assert len(insts) == 10
    for z, e, r, delta, eta, eps in insts:
        rep = verify_point_lemma(table22, z, e, r, eta, eps, delta, constants)
        assert rep.hypotheses and rep.asserted
        assert rep.conclusion
        assert rep.recovery["ok"]
        assert rep.recovery["level_set_gap"] <= 2.0 ** (constants.gamma - rep.recovery["s"])


def test_planted_point_breaks_hypothesis_ii(table22, constants):
    z, e, r, delta, eta, eps = point_lemma_instances(1, 0, table22)[0]
    # plant a dyadic point on the level set of z, far from z, with a 2-bit program
    ez = exact_dot(e, z)
    ev = e.components
    far = tuple(float(ez) * c - 0.5 * s for c, s in zip(ev, (-ev[1], ev[0])))
    p = DyadicPoint.from_real(far, r + 4)
    planted = exact_K(ToyMachine(22, planted=(p,)))
    assert planted.K(p) == len(encode_planted(0))
    rep = verify_point_lemma(planted, z, e, r, eta, eps, delta, constants)
    assert rep.hyp_ii is False and rep.violation is not None
    assert rep.violation["K"] == len(encode_planted(0))
    assert not rep.asserted and rep.conclusion is None


def test_lemma_parameters_are_consistent(table22):
    z, e, r = (0.3, -0.2), DIAG, 5
    par = lemma_parameters(table22, z, e, r, Fraction(1))
    assert par is not None
    eta, eps = par
    assert 0 < eps and 0 < eta
    assert table22.K_r(z, r) <= (eta + eps) * r


def test_symmetry_examples(table16, constants):
    rep = verify_symmetry_of_information(table16, (0.3,), (-0.4,), 3, 2, constants)
    assert rep.defined and rep.holds
    assert rep.chain_bound == constants.c_sym(3)
    with pytest.raises(ContractViolation):
        verify_symmetry_of_information(table16, (0.3,), (0.3,), 2, 3, constants)


def test_symmetry_copy_case(table16, constants):
    # K_r(x | x) at equal precision is at most the copy program
    rep = verify_symmetry_of_information(table16, (0.3,), (0.3,), 3, 3, constants)
    assert rep.K_rs_x_given_x <= 5 and rep.holds


def test_projection_bound_vacuous_and_revealing(table22, constants):
    z, e, r = (0.3, -0.2), DIAG, 4
    rep = verify_projection_bound(table22, z, e, Fraction(1, 2), Fraction(1, 64), r, None, constants)
    assert rep.condition1 and rep.condition2 and rep.asserted and rep.conclusion
    assert rep.vacuous == (rep.rhs <= 0)
    # an oracle that hands over z makes condition 2 fail, so nothing is asserted
    reveal = verify_projection_bound(table22, z, e, Fraction(1, 2), Fraction(1, 64), r,
                                     DyadicPoint.from_real(z, r + 2), constants)
    assert not reveal.condition2 and not reveal.asserted and reveal.conclusion is None
    with pytest.raises(ContractViolation):
        verify_projection_bound(table22, z, e, 1, Fraction(1, 64), r, None, constants)


def test_projection_bound_condition1_holds_at_toy_scale(table22, constants):
    # even the axis direction costs a full literal, longer than s - log2 s at every s <= r
    rep = verify_projection_bound(table22, (0.3, -0.2), AXIS, Fraction(1, 2), Fraction(1, 64), 5, None, constants)
    assert rep.condition1 and not rep.condition1_failures
    assert math.isfinite(rep.rhs) and rep.lhs is not None
