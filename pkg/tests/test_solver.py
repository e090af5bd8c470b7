"""Exact bounded search and perturbative order-by-order construction."""

from fractions import Fraction as Frac

import pytest

from dyntwist.scalars import Scalar
from dyntwist.cartan import (
    mat_eq, q_factorial, rank2_cartan, sl2_cartan, spin_module,
    universal_action,
)
from dyntwist.dynops import COCYCLE_PATTERN_WEYL, dynamical_twist
from dyntwist.solver import SolverError, solve_exact, solve_perturbative

CARTAN = sl2_cartan()
CTX = CARTAN.ctx


def q_power(e) -> Scalar:
    return Scalar.q(CTX, e)


# -- exact search ----------------------------------------------------------------


def test_exact_level_one():
    res = solve_exact(CARTAN, levels=1)
    assert res.exponents == ((1,),)
    assert res.kappas[0] == q_power(-1) - q_power(1)
    assert res.tried == 1
    assert res.checks == {
        "cocycle(1/2,1/2,1/2)": True,
        "counit": True,
        "zero_weight": True,
        "braid": True,
    }


def test_exact_two_levels():
    res = solve_exact(CARTAN, levels=2)
    assert res.exponents == ((1,), (1, 3))
    kappa1 = q_power(-1) - q_power(1)
    kappa2 = kappa1 * kappa1 * q_power(-1) / q_factorial(CTX, 2)
    assert res.kappas[0] == kappa1
    assert res.kappas[1] == kappa2
    assert all(res.checks.values())
    assert "cocycle(1/2,1,1)" in res.checks


def test_exact_solution_is_translate_of_closed_form():
    # same family up to a constant shift of the dynamical variable:
    # substituting y -> q^(1/2) y in the closed form lands on the search's
    # smallest certified exponent profile
    res = solve_exact(CARTAN, levels=2)
    closed = dynamical_twist(CTX, levels=2)
    half = spin_module(CARTAN, Frac(1, 2))
    one = spin_module(CARTAN, 1)
    for v, w in ((half, one), (one, one)):
        got = universal_action(res.element, v, w)
        ref = universal_action(closed, v, w)
        shifted = [[e.shift((Frac(1),), Frac(1, 2)) for e in row] for row in ref]
        assert mat_eq(got, shifted)


def test_exact_fails_closed_on_tight_bound():
    with pytest.raises(SolverError, match="exponent bound"):
        solve_exact(CARTAN, levels=2, exponent_bound=1)


def test_exact_rejects_higher_rank():
    with pytest.raises(SolverError, match="rank-1"):
        solve_exact(rank2_cartan())


# -- perturbative construction ---------------------------------------------------


def test_perturbative_trivial_fixed_point():
    # the order-wise linear systems are homogeneous: with free directions
    # pinned to zero the series twist stays at the identity, which satisfies
    # every stage exactly
    res = solve_perturbative(CARTAN, order=4)
    assert res.degree == 2
    assert res.tables == {}
    assert res.counit_exact and res.zero_weight_exact


def test_perturbative_slots_and_deficiency():
    res = solve_perturbative(CARTAN, order=3)
    assert sorted(res.slots) == [
        (1, Frac(-2)), (1, Frac(-1)), (1, Frac(0))]
    # one free direction per polynomial degree: adding the same lambda^d
    # profile to every weight slot is invisible to each stage system
    assert res.free_directions == {1: 3, 2: 3, 3: 3}


def test_perturbative_mixed_spins():
    res = solve_perturbative(
        CARTAN, spins=(Frac(1, 2), Frac(1), Frac(1, 2)), order=3)
    assert sorted(res.slots) == [
        (1, Frac(-3)), (1, Frac(-2)), (1, Frac(-1)), (1, Frac(0)), (1, Frac(1))]
    # five slots but still one free direction per degree: the deficiency is
    # structural, not a per-slot artifact
    assert res.free_directions == {1: 3, 2: 3, 3: 3}
    assert res.tables == {}
    assert res.counit_exact and res.zero_weight_exact


def test_perturbative_alternate_shift_pattern():
    res = solve_perturbative(CARTAN, order=2, pattern=COCYCLE_PATTERN_WEYL)
    assert res.degree == 2
    assert res.tables == {}
    assert res.counit_exact and res.zero_weight_exact


def test_perturbative_rejects_higher_rank():
    with pytest.raises(SolverError, match="rank-1"):
        solve_perturbative(rank2_cartan())
