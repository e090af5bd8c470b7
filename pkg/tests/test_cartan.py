"""Weight modules, coproducts, universal elements, constant R-matrix."""

from fractions import Fraction as Frac

import pytest

from dyntwist.scalars import Context, Poly, Scalar, ScalarError
from dyntwist.cartan import (
    AffineExp, CartanFactor, MonoTemplate, UniversalElement, UniversalTerm,
    WeightModule, affine_const, constant_r, coproduct_action, counit_value,
    factor_from_scalar, flip_matrix, fused_module, identity_element,
    kron, mat_eq, mat_eye, mat_mul, mat_scale, mat_sub, mat_zero,
    q_factorial, q_int, rank2_cartan, sl2_cartan, spin_module, trivial_module,
    universal_action, weyl_transform,
)

CARTAN = sl2_cartan()
CTX = CARTAN.ctx


def sc(text: str) -> Scalar:
    return Scalar.parse(CTX, text)


def q_power(e) -> Scalar:
    return Scalar.q(CTX, e)


# -- q-integers ----------------------------------------------------------------


def test_q_int_values():
    assert q_int(CTX, 0).is_zero()
    assert q_int(CTX, 1) == Scalar.one(CTX)
    assert q_int(CTX, 2) == q_power(1) + q_power(-1)
    assert q_int(CTX, 2).text() == "(1*t^8 + 1) / (1*t^4)"
    # [3] = q^2 + 1 + q^-2
    assert q_int(CTX, 3) == sc("1*t^8 + 1 + 1*t^-8")
    # defining identity: (q - q^-1) [n] = q^n - q^-n
    for n in range(5):
        lhs = (q_power(1) - q_power(-1)) * q_int(CTX, n)
        assert lhs == q_power(n) - q_power(-n)


def test_q_factorial():
    assert q_factorial(CTX, 0) == Scalar.one(CTX)
    assert q_factorial(CTX, 3) == q_int(CTX, 2) * q_int(CTX, 3)


# -- spin modules ----------------------------------------------------------------


def test_spin_half_matrices():
    v = spin_module(CARTAN, Frac(1, 2))
    assert v.dim == 2
    assert v.weights == [(1,), (-1,)]
    assert v.chi == [1, -1]
    one, zero = Scalar.one(CTX), Scalar.zero(CTX)
    assert v.raise_mat == [[zero, one], [zero, zero]]
    assert v.lower_mat == [[zero, zero], [one, zero]]
    assert v.k_mat(1)[0][0] == q_power(1)
    assert v.k_mat(-1)[1][1] == q_power(1)


def test_spin_one_commutator():
    v = spin_module(CARTAN, 1)
    assert v.weights == [(2,), (0,), (-2,)]
    assert v.raise_mat[0][1] == q_int(CTX, 1)
    assert v.raise_mat[1][2] == q_int(CTX, 2)
    assert v.lower_mat[1][0] == q_int(CTX, 2)
    comm = mat_sub(mat_mul(v.raise_mat, v.lower_mat),
                   mat_mul(v.lower_mat, v.raise_mat))
    two = q_int(CTX, 2)
    for i in range(3):
        for j in range(3):
            expect = Scalar.zero(CTX)
            if i == j == 0:
                expect = two
            if i == j == 2:
                expect = -two
            assert comm[i][j] == expect


def test_bad_module_rejected():
    v = spin_module(CARTAN, Frac(1, 2))
    broken = [[Scalar.zero(CTX), Scalar.zero(CTX)],
              [Scalar.one(CTX).scale(2), Scalar.zero(CTX)]]
    with pytest.raises(ScalarError):
        WeightModule(CARTAN, v.weights, v.chi, v.raise_mat, broken)


def test_trivial_module():
    u = trivial_module(CARTAN)
    assert u.dim == 1
    assert u.weights == [(0,)]
    assert u.k_mat(1)[0][0] == Scalar.one(CTX)


def test_rank2_module():
    cartan = rank2_cartan()
    v = spin_module(cartan, Frac(1, 2))
    assert v.weights == [(1, Frac(-1, 2)), (-1, Frac(1, 2))]
    assert v.chi == [1, -1]
    w = spin_module(cartan, 1)
    assert w.weights[0] == (2, -1)


# -- coproduct -------------------------------------------------------------------


@pytest.mark.parametrize("spins", [(Frac(1, 2), Frac(1, 2)), (Frac(1, 2), 1)])
def test_coproduct_is_algebra_map(spins):
    v = spin_module(CARTAN, spins[0])
    w = spin_module(CARTAN, spins[1])
    de = coproduct_action("e", v, w)
    df = coproduct_action("f", v, w)
    dk = coproduct_action("k", v, w)
    dki = coproduct_action("k_inv", v, w)
    qdiff = q_power(1) - q_power(-1)
    comm = mat_sub(mat_mul(de, df), mat_mul(df, de))
    assert mat_eq(comm, mat_scale(mat_sub(dk, dki), qdiff.inverse()))
    assert mat_eq(mat_mul(dk, de), mat_scale(mat_mul(de, dk), q_power(2)))
    assert mat_eq(mat_mul(dk, df), mat_scale(mat_mul(df, dk), q_power(-2)))


def test_fused_module_weights():
    v = spin_module(CARTAN, Frac(1, 2))
    w = spin_module(CARTAN, 1)
    vw = fused_module(v, w)
    assert vw.dim == 6
    assert vw.weights[0] == (3,)            # v0 (x) w0
    assert vw.weights[4] == (-1,)           # v1 (x) w1
    assert vw.chi == [3, 1, -1, 1, -1, -3]
    # fused generators satisfy the defining relations too
    WeightModule(CARTAN, vw.weights, vw.chi, vw.raise_mat, vw.lower_mat)


def test_counit_values():
    assert counit_value(CTX, "e").is_zero()
    assert counit_value(CTX, "k") == Scalar.one(CTX)


# -- universal elements ------------------------------------------------------------


def nilpotent_rank_one() -> UniversalElement:
    """lowering (x) raising with constant coefficient q - q^-1."""
    coeff = q_power(1) - q_power(-1)
    return UniversalElement((UniversalTerm(1, 1, factor_from_scalar(CTX, coeff)),))


def test_identity_element_action():
    v = spin_module(CARTAN, Frac(1, 2))
    w = spin_module(CARTAN, 1)
    assert mat_eq(universal_action(identity_element(CTX), v, w),
                  mat_eye(CTX, 6))


def test_universal_action_matches_tail_of_r():
    v = spin_module(CARTAN, Frac(1, 2))
    tail = universal_action(nilpotent_rank_one(), v, v)
    cart = mat_zero(CTX, 4, 4)
    for a in range(2):
        for b in range(2):
            i = a * 2 + b
            cart[i][i] = q_power(Frac(v.weights[a][0] * v.weights[b][0], 2))
    built = mat_mul(cart, mat_add_eye(tail))
    assert mat_eq(built, constant_r(v, v))


def mat_add_eye(m: list) -> list:
    out = [row[:] for row in m]
    one = Scalar.one(CTX)
    for i in range(len(m)):
        out[i][i] = out[i][i] + one
    return out


def test_flipped_action_is_conjugate_by_swap():
    elem = nilpotent_rank_one()
    v = spin_module(CARTAN, Frac(1, 2))
    w = spin_module(CARTAN, 1)
    direct = universal_action(elem, w, v)          # acts on w (x) v
    p_wv = flip_matrix(CTX, w.dim, v.dim)          # w (x) v -> v (x) w
    p_vw = flip_matrix(CTX, v.dim, w.dim)
    conj = mat_mul(p_wv, mat_mul(direct, p_vw))
    assert mat_eq(conj, universal_action(elem, v, w, flipped=True))


def test_weight_dependent_factor():
    # y^2 / (y^2 - q^(2 nu + 2)), evaluated at integer weights
    num = (MonoTemplate(Frac(1), affine_const(CTX, 0), (2,)),)
    den = ((MonoTemplate(Frac(1), affine_const(CTX, 0), (2,)),
            MonoTemplate(Frac(-1),
                         AffineExp(Frac(8), (Frac(0),), (Frac(8),)), (0,))),)
    g = CartanFactor(num, den)
    got = g.evaluate(CTX, (3,), (1,))
    want = sc("1*y1^2") / (sc("1*y1^2") - q_power(4))
    assert got == want
    # first slot must not enter
    assert g.evaluate(CTX, (-5,), (1,)) == want


def test_weight_shift_template_matches_substitution():
    num = (MonoTemplate(Frac(1), affine_const(CTX, 0), (2,)),)
    den = ((MonoTemplate(Frac(1), affine_const(CTX, 0), (2,)),
            MonoTemplate(Frac(-1),
                         AffineExp(Frac(8), (Frac(0),), (Frac(8),)), (0,))),)
    g = CartanFactor(num, den)
    half = (Frac(1, 2),)
    shifted = g.weight_shift(CTX, half, half)
    for mu in (-2, 0, 2):
        for nu in (-1, 1, 3):
            direct = g.evaluate(CTX, (mu,), (nu,)).shift((Frac(mu + nu),),
                                                         Frac(1, 2))
            assert shifted.evaluate(CTX, (mu,), (nu,)) == direct


def test_weyl_transform_applies_half_shift():
    elem = UniversalElement((UniversalTerm(
        1, 1, CartanFactor((MonoTemplate(Frac(1), affine_const(CTX, 0), (1,)),),
                           ())),))
    out = weyl_transform(elem, CTX)
    got = out.terms[0].factor.evaluate(CTX, (1,), (1,))
    assert got == sc("1*t^4*y1")  # y -> q^((1+1)/2) y = q y


def test_fractional_exponent_rejected():
    mono = MonoTemplate(Frac(1), AffineExp(Frac(1, 3), (Frac(0),), (Frac(0),)),
                        (0,))
    with pytest.raises(ScalarError):
        mono.evaluate(CTX, (0,), (0,))


# -- constant R-matrix --------------------------------------------------------------


def test_constant_r_half_half_frozen():
    v = spin_module(CARTAN, Frac(1, 2))
    r = constant_r(v, v)
    qd = q_power(1) - q_power(-1)
    half = q_power(Frac(1, 2))
    expect = mat_zero(CTX, 4, 4)
    expect[0][0] = half
    expect[1][1] = half.inverse()
    expect[2][2] = half.inverse()
    expect[3][3] = half
    expect[2][1] = qd * half.inverse()
    assert mat_eq(r, expect)


@pytest.mark.parametrize("spins", [(Frac(1, 2), Frac(1, 2)),
                                   (Frac(1, 2), 1),
                                   (1, Frac(1, 2)),
                                   (1, 1)])
def test_constant_r_intertwines(spins):
    v = spin_module(CARTAN, spins[0])
    w = spin_module(CARTAN, spins[1])
    r = constant_r(v, w)
    p_vw = flip_matrix(CTX, v.dim, w.dim)
    p_wv = flip_matrix(CTX, w.dim, v.dim)
    for name in ("e", "f", "k"):
        lhs = mat_mul(r, coproduct_action(name, v, w))
        op = mat_mul(p_wv, mat_mul(coproduct_action(name, w, v), p_vw))
        rhs = mat_mul(op, r)
        assert mat_eq(lhs, rhs), name


def embed_outer(r: list, dv: int, dw: int, du: int) -> list:
    """Place a two-leg operator on legs 1 and 3 of a triple product."""
    ctx = r[0][0].ctx
    out = mat_zero(ctx, dv * dw * du, dv * dw * du)
    for a in range(dv):
        for ap in range(dv):
            for c in range(du):
                for cp in range(du):
                    x = r[ap * du + cp][a * du + c]
                    if x.is_zero():
                        continue
                    for b in range(dw):
                        out[(ap * dw + b) * du + cp][(a * dw + b) * du + c] = x
    return out


def test_constant_ybe_spin_half():
    v = spin_module(CARTAN, Frac(1, 2))
    r = constant_r(v, v)
    eye = mat_eye(CTX, 2)
    r12 = kron(r, eye)
    r23 = kron(eye, r)
    r13 = embed_outer(r, 2, 2, 2)
    lhs = mat_mul(r12, mat_mul(r13, r23))
    rhs = mat_mul(r23, mat_mul(r13, r12))
    assert mat_eq(lhs, rhs)


@pytest.mark.parametrize("spins", [(Frac(1, 2), Frac(1, 2), Frac(1, 2)),
                                   (Frac(1, 2), 1, Frac(1, 2))])
def test_hexagon_relations(spins):
    v = spin_module(CARTAN, spins[0])
    w = spin_module(CARTAN, spins[1])
    u = spin_module(CARTAN, spins[2])
    vw = fused_module(v, w)
    wu = fused_module(w, u)
    # first leg fused: R_{vw,u} = R13 R23
    lhs = constant_r(vw, u)
    r13 = embed_outer(constant_r(v, u), v.dim, w.dim, u.dim)
    r23 = kron(mat_eye(CTX, v.dim), constant_r(w, u))
    assert mat_eq(lhs, mat_mul(r13, r23))
    # second leg fused: R_{v,wu} = R13 R12
    lhs2 = constant_r(v, wu)
    r13b = embed_outer(constant_r(v, u), v.dim, w.dim, u.dim)
    r12 = kron(constant_r(v, w), mat_eye(CTX, u.dim))
    assert mat_eq(lhs2, mat_mul(r13b, r12))


def test_constant_r_rejects_higher_rank():
    cartan = rank2_cartan()
    v = spin_module(cartan, Frac(1, 2))
    with pytest.raises(ScalarError):
        constant_r(v, v)
