"""Dynamical operators on tensor products of weight modules.

A pair operator acts on two legs of a product while its torus argument is
shifted by the weights of spectator legs.  This module provides those
weight-shifted embeddings, exact blockwise inversion, the dynamical
R-matrix obtained by twisting the constant one, and residual matrices for
the dynamical Yang-Baxter and shifted-cocycle equations.
"""

from __future__ import annotations

import itertools
from fractions import Fraction as Frac

from .scalars import Context, Scalar, ScalarError
from .cartan import (
    CartanFactor, MonoTemplate, UniversalElement, UniversalTerm, WeightModule,
    affine_const, AffineExp, constant_r, factor_from_scalar, factor_one,
    fused_module, mat_eye, mat_mul, mat_sub, mat_zero, q_factorial,
    trivial_module, universal_action,
)

# shift patterns are triples of {spectator-slot: coefficient} dictionaries,
# one per factor, factors ordered legs (0,1), (0,2), (1,2) on each side
BRAID_PATTERN = (
    ({2: Frac(1)}, {}, {0: Frac(1)}),
    ({}, {1: Frac(1)}, {}),
)
BRAID_PATTERN_WEYL = (
    ({2: Frac(1, 2)}, {1: Frac(-1, 2)}, {0: Frac(1, 2)}),
    ({0: Frac(-1, 2)}, {1: Frac(1, 2)}, {2: Frac(-1, 2)}),
)

# left shift applies to the inner pair operator on legs (0,1), right to (1,2)
COCYCLE_PATTERN = ({2: Frac(-1)}, {})
COCYCLE_PATTERN_WEYL = ({2: Frac(-1, 2)}, {0: Frac(1, 2)})


def dynamical_twist(ctx: Context, levels: int = 4) -> UniversalElement:
    """Closed-form zero-weight twist with simple-pole torus coefficients.

    Level-n coefficient: k_n * y^(2n) / prod_{j=1..n} (y^2 - q^(2 nu + 2j))
    with k_n = (q^-1 - q)^n q^(-n(n-1)/2) / [n]!, nu the source weight of
    the raising leg.  Levels beyond a module's dimension act as zero.
    """
    if ctx.nvars != 1:
        raise ScalarError("the closed-form twist requires rank-1 Cartan data")
    terms = [UniversalTerm(0, 0, factor_one(ctx))]
    for n in range(1, levels + 1):
        kn = (Scalar.q(ctx, -1) - Scalar.q(ctx, 1)) ** n \
            * Scalar.q(ctx, Frac(-n * (n - 1), 2)) / q_factorial(ctx, n)
        base = factor_from_scalar(ctx, kn)
        num = tuple(m.mul(MonoTemplate(Frac(1), affine_const(ctx, 0), (2 * n,)))
                    for m in base.num)
        den = list(base.den)
        for j in range(1, n + 1):
            # y^2 - q^(2 nu + 2 j) as an evaluation template
            den.append((MonoTemplate(Frac(1), affine_const(ctx, 0), (2,)),
                        MonoTemplate(Frac(-1),
                                     AffineExp(Frac(4 * ctx.root * j),
                                               (Frac(0),),
                                               (Frac(4 * ctx.root),)),
                                     (0,))))
        terms.append(UniversalTerm(n, n, CartanFactor(num, tuple(den))))
    return UniversalElement(tuple(terms))


def reflected_twist(ctx: Context, levels: int = 4) -> UniversalElement:
    """Image of the closed-form twist under y -> 1/y, cleared to polynomial
    denominators.

    Level-n coefficient: k_n / prod_{j=1..n} (1 - q^(2 nu + 2 j) y^2) with
    the same k_n as dynamical_twist.  Satisfies the cocycle identity with
    the inner pair shifted by the opposite sign of the spectator weight.
    """
    if ctx.nvars != 1:
        raise ScalarError("the closed-form twist requires rank-1 Cartan data")
    terms = [UniversalTerm(0, 0, factor_one(ctx))]
    for n in range(1, levels + 1):
        kn = (Scalar.q(ctx, -1) - Scalar.q(ctx, 1)) ** n \
            * Scalar.q(ctx, Frac(-n * (n - 1), 2)) / q_factorial(ctx, n)
        base = factor_from_scalar(ctx, kn)
        den = list(base.den)
        for j in range(1, n + 1):
            # 1 - q^(2 nu + 2 j) y^2 as an evaluation template
            den.append((MonoTemplate(Frac(1), affine_const(ctx, 0), (0,)),
                        MonoTemplate(Frac(-1),
                                     AffineExp(Frac(4 * ctx.root * j),
                                               (Frac(0),),
                                               (Frac(4 * ctx.root),)),
                                     (2,))))
        terms.append(UniversalTerm(n, n, CartanFactor(base.num, tuple(den))))
    return UniversalElement(tuple(terms))


# -- multi-leg embeddings -----------------------------------------------------------


def product_weights(mods) -> list:
    """Total weight tuple of every basis vector of the ordered product."""
    nvars = mods[0].ctx.nvars
    out = []
    for idx in itertools.product(*(range(m.dim) for m in mods)):
        out.append(tuple(sum(m.weights[i][k] for m, i in zip(mods, idx))
                         for k in range(nvars)))
    return out


def shifted_embed(pair_mat: list, mods, legs: tuple, shifts=None) -> list:
    """Embed a two-leg operator into a product, torus argument shifted by
    spectator weights: y_k -> q^(sum_s c_s * w_s(h_k)) y_k per basis vector.

    shifts maps spectator slot index to its coefficient c_s.  Legs must be
    given in increasing order and may not carry a shift.
    """
    i, j = legs
    if not 0 <= i < j < len(mods):
        raise ScalarError("legs must be distinct ascending slot indices")
    shifts = dict(shifts or {})
    for slot in shifts:
        if slot == i or slot == j or not 0 <= slot < len(mods):
            raise ScalarError("shift slot %r must be a spectator" % slot)
    ctx = mods[0].ctx
    dims = [m.dim for m in mods]
    total = 1
    for d in dims:
        total *= d
    out = mat_zero(ctx, total, total)
    allidx = list(itertools.product(*(range(d) for d in dims)))
    pos = {t: n for n, t in enumerate(allidx)}
    zero_bump = (Frac(0),) * ctx.nvars
    cache = {zero_bump: pair_mat}

    def shifted_block(bump: tuple) -> list:
        if bump not in cache:
            cache[bump] = [[x if x.is_zero() else x.shift(bump, 1)
                            for x in row] for row in pair_mat]
        return cache[bump]

    for src in allidx:
        bump = zero_bump
        if shifts:
            bump = tuple(
                sum((c * mods[s].weights[src[s]][k] for s, c in shifts.items()),
                    Frac(0))
                for k in range(ctx.nvars))
        blk = shifted_block(bump)
        col = src[i] * dims[j] + src[j]
        for a in range(dims[i]):
            for b in range(dims[j]):
                v = blk[a * dims[j] + b][col]
                if v.is_zero():
                    continue
                tgt = list(src)
                tgt[i], tgt[j] = a, b
                row = pos[tuple(tgt)]
                out[row][pos[src]] = out[row][pos[src]] + v
    return out


# -- exact inversion ------------------------------------------------------------------


def zero_weight_violations(mat: list, weights: list) -> list:
    """Entries that move total weight; empty iff the operator is diagonal
    with respect to the weight grading."""
    bad = []
    for r in range(len(mat)):
        for c in range(len(mat[0])):
            if not mat[r][c].is_zero() and weights[r] != weights[c]:
                bad.append((r, c))
    return bad


def block_invert(mat: list, weights: list) -> list:
    """Exact inverse of a weight-preserving operator, block by block.

    Raises ScalarError when the operator moves weight or when some weight
    block is singular (the failing weight is reported).
    """
    bad = zero_weight_violations(mat, weights)
    if bad:
        r, c = bad[0]
        raise ScalarError("operator moves weight at entry (%d, %d)" % (r, c))
    n = len(mat)
    ctx = mat[0][0].ctx
    groups = {}
    for idx, w in enumerate(weights):
        groups.setdefault(w, []).append(idx)
    out = mat_zero(ctx, n, n)
    for w, idxs in groups.items():
        sub = [[mat[r][c] for c in idxs] for r in idxs]
        try:
            inv = _invert_dense(sub)
        except ZeroDivisionError:
            raise ScalarError("singular weight block at weight (%s)"
                              % ", ".join(str(x) for x in w))
        for a, r in enumerate(idxs):
            for b, c in enumerate(idxs):
                out[r][c] = inv[a][b]
    return out


def _invert_dense(a: list) -> list:
    m = len(a)
    ctx = a[0][0].ctx
    one, zero = Scalar.one(ctx), Scalar.zero(ctx)
    aug = [row[:] + [one if r == c else zero for c in range(m)]
           for r, row in enumerate(a)]
    for col in range(m):
        pivots = [r for r in range(col, m) if not aug[r][col].is_zero()]
        if not pivots:
            raise ZeroDivisionError
        # cheapest pivot keeps intermediate expressions small
        piv = min(pivots, key=lambda r: len(aug[r][col].num.terms)
                  + len(aug[r][col].den.terms))
        aug[col], aug[piv] = aug[piv], aug[col]
        inv_p = aug[col][col].inverse()
        aug[col] = [x * inv_p for x in aug[col]]
        for r in range(m):
            if r == col or aug[r][col].is_zero():
                continue
            f = aug[r][col]
            aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [[x.reduced() for x in row[m:]] for row in aug]


# -- dynamical R-matrix ----------------------------------------------------------------


def dynamical_r(elem: UniversalElement, v: WeightModule, w: WeightModule) -> list:
    """Twist the constant R-matrix: inverse of the leg-swapped twist, times
    the constant structure, times the twist."""
    f12 = universal_action(elem, v, w)
    f21 = universal_action(elem, v, w, flipped=True)
    weights = product_weights((v, w))
    return mat_mul(block_invert(f21, weights),
                   mat_mul(constant_r(v, w), f12))


# -- residual matrices -------------------------------------------------------------------


def residual_braid(elem: UniversalElement, mods, pattern=BRAID_PATTERN) -> list:
    """Difference of the two triple products of shifted dynamical R-matrices.

    pattern = (left, right); each side lists the shift dictionary for the
    factors on legs (0,1), (0,2), (1,2) in the order they are multiplied.
    """
    m1, m2, m3 = mods
    pair = {
        (0, 1): dynamical_r(elem, m1, m2),
        (0, 2): dynamical_r(elem, m1, m3),
        (1, 2): dynamical_r(elem, m2, m3),
    }
    left, right = pattern
    order_left = ((0, 1), (0, 2), (1, 2))
    order_right = ((1, 2), (0, 2), (0, 1))
    lhs = None
    for legs, sh in zip(order_left, left):
        m = shifted_embed(pair[legs], mods, legs, sh)
        lhs = m if lhs is None else mat_mul(lhs, m)
    rhs = None
    for legs, sh in zip(order_right, right):
        m = shifted_embed(pair[legs], mods, legs, sh)
        rhs = m if rhs is None else mat_mul(rhs, m)
    return mat_sub(lhs, rhs)


def residual_cocycle(elem: UniversalElement, mods,
                     pattern=COCYCLE_PATTERN) -> list:
    """Difference of the two coproduct-compatible twist compositions.

    Left: element on (fused first pair, third leg) times the inner twist
    with its torus argument shifted by the third-slot weights.  Right:
    element on (first leg, fused last pair) times the outer twist shifted
    by first-slot weights.  pattern supplies the two shift dictionaries.
    """
    m1, m2, m3 = mods
    left_shift, right_shift = pattern
    lhs = mat_mul(universal_action(elem, fused_module(m1, m2), m3),
                  shifted_embed(universal_action(elem, m1, m2), mods, (0, 1),
                                left_shift))
    rhs = mat_mul(universal_action(elem, m1, fused_module(m2, m3)),
                  shifted_embed(universal_action(elem, m2, m3), mods, (1, 2),
                                right_shift))
    return mat_sub(lhs, rhs)


def residual_counit(elem: UniversalElement, mod: WeightModule) -> tuple:
    """Both one-leg collapses minus the identity on the surviving leg."""
    unit = trivial_module(mod.cartan)
    eye = mat_eye(mod.ctx, mod.dim)
    first = mat_sub(universal_action(elem, unit, mod), eye)
    second = mat_sub(universal_action(elem, mod, unit), eye)
    return first, second


def first_nonzero(mat: list):
    """(row, col, value) of the first nonzero entry, or None."""
    for r, row in enumerate(mat):
        for c, x in enumerate(row):
            if not x.is_zero():
                return r, c, x
    return None
