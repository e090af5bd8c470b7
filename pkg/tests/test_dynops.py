"""Shifted embeddings, block inversion, dynamical R-matrix, residuals."""

from fractions import Fraction as Frac

import pytest

from dyntwist.scalars import Scalar, ScalarError
from dyntwist.cartan import (
    flip_matrix, mat_eq, mat_eye, mat_is_zero, mat_mul, mat_zero,
    sl2_cartan, spin_module, universal_action, weyl_transform,
)
from dyntwist.dynops import (
    BRAID_PATTERN, BRAID_PATTERN_WEYL, COCYCLE_PATTERN, COCYCLE_PATTERN_WEYL,
    block_invert, dynamical_r, dynamical_twist, first_nonzero, product_weights,
    residual_braid, residual_cocycle, residual_counit, shifted_embed,
    zero_weight_violations,
)

CARTAN = sl2_cartan()
CTX = CARTAN.ctx
HALF = spin_module(CARTAN, Frac(1, 2))
ONE = spin_module(CARTAN, 1)
TWIST = dynamical_twist(CTX)


def sc(text: str) -> Scalar:
    return Scalar.parse(CTX, text)


def q_power(e) -> Scalar:
    return Scalar.q(CTX, e)


def yy() -> Scalar:
    return Scalar.y(CTX, 0)


# -- the closed-form twist -----------------------------------------------------


def test_twist_level_one_coefficient():
    factor = TWIST.terms[1].factor
    got = factor.evaluate(CTX, (5,), (1,))  # first slot must be ignored
    y2 = yy() ** 2
    want = (q_power(-1) - q_power(1)) * y2 / (y2 - q_power(4))
    assert got == want


def test_twist_is_zero_weight():
    assert TWIST.is_zero_weight()
    f12 = universal_action(TWIST, HALF, ONE)
    assert zero_weight_violations(f12, product_weights((HALF, ONE))) == []


def test_twist_pair_matrix_frozen():
    f12 = universal_action(TWIST, HALF, HALF)
    y2 = yy() ** 2
    g = (q_power(-1) - q_power(1)) * y2 / (y2 - Scalar.one(CTX))
    expect = mat_eye(CTX, 4)
    expect[2][1] = g
    assert mat_eq(f12, expect)


def test_counit_on_both_legs():
    first, second = residual_counit(TWIST, ONE)
    assert mat_is_zero(first)
    assert mat_is_zero(second)


# -- block inversion -------------------------------------------------------------


def test_block_invert_roundtrip():
    f21 = universal_action(TWIST, HALF, ONE, flipped=True)
    weights = product_weights((HALF, ONE))
    inv = block_invert(f21, weights)
    assert mat_eq(mat_mul(inv, f21), mat_eye(CTX, 6))
    assert mat_eq(mat_mul(f21, inv), mat_eye(CTX, 6))


def test_block_invert_rejects_weight_moving():
    m = mat_zero(CTX, 4, 4)
    m[0][3] = Scalar.one(CTX)
    with pytest.raises(ScalarError, match="moves weight"):
        block_invert(m, product_weights((HALF, HALF)))


def test_block_invert_singular_witness():
    m = mat_zero(CTX, 4, 4)
    one = Scalar.one(CTX)
    m[0][0] = one
    m[3][3] = one
    m[1][1] = one
    m[1][2] = one  # second row of the zero-weight block vanishes
    with pytest.raises(ScalarError, match=r"weight \(0\)"):
        block_invert(m, product_weights((HALF, HALF)))


# -- dynamical R-matrix ------------------------------------------------------------


def test_dynamical_r_frozen_half_half():
    r = dynamical_r(TWIST, HALF, HALF)
    one = Scalar.one(CTX)
    y2 = yy() ** 2
    d = q_power(1) - q_power(-1)
    half = q_power(Frac(1, 2))
    denom = y2 - one
    expect = mat_zero(CTX, 4, 4)
    expect[0][0] = half
    expect[3][3] = half
    expect[2][2] = half.inverse()
    expect[1][1] = half.inverse() * (y2 - q_power(2)) * (y2 - q_power(-2)) \
        / (denom * denom)
    expect[2][1] = -(d * half.inverse()) / denom
    expect[1][2] = d * half.inverse() * y2 / denom
    assert mat_eq(r, expect)


def test_dynamical_r_zero_weight():
    r = dynamical_r(TWIST, HALF, ONE)
    assert zero_weight_violations(r, product_weights((HALF, ONE))) == []


def test_flip_relation():
    # swapping both legs equals rebuilding from the leg-swapped ingredients
    from dyntwist.cartan import constant_r
    r = dynamical_r(TWIST, HALF, HALF)
    p = flip_matrix(CTX, 2, 2)
    lhs = mat_mul(p, mat_mul(r, p))
    f12 = universal_action(TWIST, HALF, HALF)
    f21 = universal_action(TWIST, HALF, HALF, flipped=True)
    r21 = mat_mul(p, mat_mul(constant_r(HALF, HALF), p))
    weights = product_weights((HALF, HALF))
    rhs = mat_mul(block_invert(f12, weights), mat_mul(r21, f21))
    assert mat_eq(lhs, rhs)


# -- shifted embeddings ----------------------------------------------------------------


def test_shifted_embed_matches_manual_shift():
    pair = universal_action(TWIST, HALF, HALF)
    mods = (HALF, HALF, HALF)
    emb = shifted_embed(pair, mods, (0, 1), {2: Frac(1)})
    # spectator index 0 has weight +1: block entries shifted by q^(+1)
    g = pair[2][1]
    assert emb[2 * 2 + 0][1 * 2 + 0] == g.shift((Frac(1),), 1)
    assert emb[2 * 2 + 1][1 * 2 + 1] == g.shift((Frac(-1),), 1)


def test_shifted_embed_rejects_leg_shift():
    pair = universal_action(TWIST, HALF, HALF)
    with pytest.raises(ScalarError, match="spectator"):
        shifted_embed(pair, (HALF, HALF, HALF), (0, 1), {1: Frac(1)})


def test_shifted_embed_identity_consistency():
    pair = universal_action(TWIST, HALF, HALF)
    mods = (HALF, HALF)
    emb = shifted_embed(pair, mods, (0, 1))
    assert mat_eq(emb, pair)


# -- defining equations -----------------------------------------------------------------


def test_braid_equation_standard():
    res = residual_braid(TWIST, (HALF, HALF, HALF), BRAID_PATTERN)
    assert first_nonzero(res) is None


def test_braid_equation_needs_shifts():
    unshifted = (({}, {}, {}), ({}, {}, {}))
    res = residual_braid(TWIST, (HALF, HALF, HALF), unshifted)
    assert first_nonzero(res) is not None


def test_cocycle_equation_standard():
    res = residual_cocycle(TWIST, (HALF, HALF, HALF), COCYCLE_PATTERN)
    assert first_nonzero(res) is None


def test_cocycle_equation_mixed_spins():
    res = residual_cocycle(TWIST, (HALF, ONE, ONE), COCYCLE_PATTERN)
    assert first_nonzero(res) is None


def test_cocycle_detects_wrong_shift():
    res = residual_cocycle(TWIST, (HALF, HALF, HALF), ({2: Frac(1)}, {}))
    assert first_nonzero(res) is not None


def test_weyl_variant_cocycle():
    elem = weyl_transform(TWIST, CTX)
    res = residual_cocycle(elem, (HALF, HALF, HALF), COCYCLE_PATTERN_WEYL)
    assert first_nonzero(res) is None


def test_weyl_variant_braid():
    elem = weyl_transform(TWIST, CTX)
    res = residual_braid(elem, (HALF, HALF, HALF), BRAID_PATTERN_WEYL)
    assert first_nonzero(res) is None
