"""Classical layer: coth coefficients, bracket residual, first-order limits."""

from fractions import Fraction as Frac

import pytest

from dyntwist.scalars import PoleError, Scalar, ScalarError
from dyntwist.cartan import constant_r, mat_eye, sl2_cartan, spin_module
from dyntwist.dynops import dynamical_r, dynamical_twist
from dyntwist.classical import (
    ClassicalDynR, LieData, abelian_lie_data, alternated_cartan_tensor,
    cdybe_residual, classical_image, coth_r, linear_coefficient, match_scale,
    skew_linear_part, sl2_lie_data, tensor_sub, tensor_witness,
)

CARTAN = sl2_cartan()
CTX = CARTAN.ctx
HALF = spin_module(CARTAN, Frac(1, 2))
ONE = spin_module(CARTAN, 1)
DATA = sl2_lie_data(CTX)
TWIST = dynamical_twist(CTX)


def sc(text: str) -> Scalar:
    return Scalar.parse(CTX, text)


def unit() -> Scalar:
    return Scalar.one(CTX)


def coth_scalar(power: int) -> Scalar:
    num = Scalar.y(CTX, 0, power) + unit()
    den = Scalar.y(CTX, 0, power) - unit()
    return num / den


# -- structure data ----------------------------------------------------------


def test_sl2_data_passes_invariant_checks():
    assert DATA.labels == ("e", "f", "h")
    assert DATA.cartan == (2,)


def test_sl2_weights_under_frame_action():
    assert DATA.weight(0, 0) == 2
    assert DATA.weight(0, 1) == -2
    assert DATA.weight(0, 2) == 0


def test_bracket_lookup_is_antisymmetric():
    assert DATA.bracket(0, 1) == {2: Frac(1)}
    assert DATA.bracket(1, 0) == {2: Frac(-1)}
    assert DATA.bracket(0, 0) == {}


def test_broken_jacobi_is_rejected():
    with pytest.raises(ScalarError, match="Jacobi"):
        LieData(CTX, ("e", "f", "h"),
                {(0, 1): {2: Frac(1)}, (2, 0): {0: Frac(2)},
                 (2, 1): {1: Frac(-1)}},
                ((0, Frac(1), 0), (Frac(1), 0, 0), (0, 0, Frac(2))),
                (2,), ((0, 1, (2,)),))


def test_noninvariant_pairing_is_rejected():
    with pytest.raises(ScalarError, match="invariant"):
        LieData(CTX, ("e", "f", "h"),
                {(0, 1): {2: Frac(1)}, (2, 0): {0: Frac(2)},
                 (2, 1): {1: Frac(-2)}},
                ((0, Frac(1), 0), (Frac(1), 0, 0), (0, 0, Frac(1))),
                (2,), ((0, 1, (2,)),))


def test_abelian_data_has_no_roots():
    ab = abelian_lie_data(CTX)
    assert ab.roots == ()
    assert ab.labels == ("h",)


# -- coth coefficient family -------------------------------------------------


def test_coth_coefficient_on_raising_lowering_pair():
    r = coth_r(DATA)
    assert set(r.entries) == {(0, 1), (1, 0)}
    assert r.entries[(0, 1)].reduced().text() == "(1*y1^2 + 1) / (1*y1^2 + -1)"


def test_coth_entries_are_skew():
    r = coth_r(DATA)
    assert (r.entries[(0, 1)] + r.entries[(1, 0)]).is_zero()


def test_coth_is_odd_under_coordinate_inversion():
    forward = coth_scalar(2)
    backward = coth_scalar(-2)
    assert (forward + backward).reduced().is_zero()
    assert (coth_r(DATA).entries[(0, 1)] - forward).is_zero()


def test_coth_scale_multiplies_coefficient():
    r = coth_r(DATA, scale=2)
    assert (r.entries[(0, 1)] - coth_scalar(2).scale(2)).is_zero()


def test_coth_odd_pairing_power():
    r = coth_r(sl2_lie_data(CTX, scale=3), scale=2)
    assert r.entries[(0, 1)].reduced().text() == "(2*y1^3 + 2) / (1*y1^3 + -1)"


def test_coth_rejects_fractional_pairing_power():
    with pytest.raises(ScalarError, match="integral"):
        coth_r(sl2_lie_data(CTX, scale=Frac(1, 2)))


def test_abelian_coth_is_empty():
    assert coth_r(abelian_lie_data(CTX)).entries == {}


# -- skew and weight constraints on coefficient tables -----------------------


def test_nonskew_table_is_rejected():
    with pytest.raises(ScalarError, match="skew"):
        ClassicalDynR(DATA, {(0, 1): unit()})


def test_diagonal_entry_is_rejected():
    with pytest.raises(ScalarError, match="skew"):
        ClassicalDynR(DATA, {(0, 0): unit()})


def test_weight_moving_pair_is_rejected():
    with pytest.raises(ScalarError, match="weight"):
        ClassicalDynR(DATA, {(0, 2): unit(), (2, 0): unit().scale(-1)})


# -- dynamical bracket residual ----------------------------------------------


def test_calibrated_residual_is_the_invariant_alternation():
    res = cdybe_residual(coth_r(DATA))
    assert tensor_sub(res, alternated_cartan_tensor(DATA)) == {}
    key, text = tensor_witness(res)
    assert key == (0, 1, 2)
    assert text == "1"


def test_residual_coefficient_across_scalings():
    # residual = m*(m*(x+1)^2 - 2*s*x)/(x-1)^2 times the invariant alternation
    for m, s in ((1, 2), (1, 4), (2, 2), (3, 1)):
        data = sl2_lie_data(CTX, scale=s)
        got = cdybe_residual(coth_r(data, scale=m))
        x = Scalar.y(CTX, 0, s)
        coeff = ((x + unit()) * (x + unit()).scale(m) - x.scale(2 * s)).scale(m)
        coeff = coeff / ((x - unit()) * (x - unit()))
        want = {k: v * coeff for k, v in alternated_cartan_tensor(data).items()}
        assert tensor_sub(got, want) == {}


def test_rescaled_pairing_moves_the_residual():
    skewed = cdybe_residual(coth_r(sl2_lie_data(CTX, scale=4)))
    assert skewed != {}
    assert tensor_sub(skewed, alternated_cartan_tensor(DATA)) != {}


def test_abelian_residual_vanishes():
    assert cdybe_residual(coth_r(abelian_lie_data(CTX))) == {}


def test_alternation_support():
    w = alternated_cartan_tensor(DATA)
    assert set(w) == {(2, 0, 1), (2, 1, 0), (1, 2, 0),
                      (0, 2, 1), (0, 1, 2), (1, 0, 2)}
    assert w[(0, 1, 2)].text() == "1"
    assert (w[(2, 1, 0)] + w[(2, 0, 1)]).is_zero()


# -- first-order limits of quantum operators ---------------------------------


def test_first_order_of_plain_exponential():
    lin = linear_coefficient([[Scalar.q(CTX, 2)]])
    assert lin[0][0].reduced().text() == "2"


def test_identity_operator_has_zero_first_order():
    lin = linear_coefficient(mat_eye(CTX, 3))
    assert all(v.is_zero() for row in lin for v in row)


def test_nonunit_constant_term_is_rejected():
    with pytest.raises(ScalarError, match="identity"):
        linear_coefficient([[Scalar.y(CTX, 0, 1)]])


def test_pole_at_classical_point_is_reported():
    bad = unit() / (Scalar.q(CTX, 1) - unit())
    with pytest.raises(PoleError):
        linear_coefficient([[bad + unit()]])


def test_skew_extraction_needs_equal_legs():
    with pytest.raises(ScalarError, match="equal leg"):
        skew_linear_part(dynamical_r(TWIST, HALF, ONE), (2, 3))


def test_constant_solution_limit_matches_flat_wedge():
    skew = skew_linear_part(constant_r(HALF, HALF), (2, 2))
    flat = ClassicalDynR(DATA, {(0, 1): unit(), (1, 0): unit().scale(-1)})
    scale, bad = match_scale(skew, classical_image(flat, HALF, HALF))
    assert bad == []
    assert scale.reduced().text() == "-1"


def test_dynamical_solution_limit_matches_coth_family():
    skew = skew_linear_part(dynamical_r(TWIST, HALF, HALF), (2, 2))
    scale, bad = match_scale(skew, classical_image(coth_r(DATA), HALF, HALF))
    assert bad == []
    assert scale.reduced().text() == "1"


def test_dynamical_limit_holds_on_larger_equal_legs():
    skew = skew_linear_part(dynamical_r(TWIST, ONE, ONE), (3, 3))
    scale, bad = match_scale(skew, classical_image(coth_r(DATA), ONE, ONE))
    assert bad == []
    assert scale.reduced().text() == "1"


def test_image_rejects_unrepresentable_label():
    stub = LieData(CTX, ("z",), {}, ((Frac(0),),), (0,), (), check=False)
    with pytest.raises(ScalarError, match="representation"):
        classical_image(ClassicalDynR(stub, {}), HALF, HALF)
