"""Weight modules for the standard q-deformation of sl2.

Modules carry their weights as tuples of values mu(h_i) against a chosen
Cartan basis, one slot per torus coordinate y_i, plus the integer
sl2-eigenvalue chi = 2*spin used by the generator triple.  Everything is
exact: generator entries are q-integers in t, and the defining relations
are re-checked on every construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction as Frac

from .scalars import Context, Poly, Scalar, ScalarError

# -- dense matrices over Scalar ------------------------------------------------


def mat_zero(ctx: Context, rows: int, cols: int) -> list:
    z = Scalar.zero(ctx)
    return [[z for _ in range(cols)] for _ in range(rows)]


def mat_eye(ctx: Context, n: int) -> list:
    out = mat_zero(ctx, n, n)
    one = Scalar.one(ctx)
    for i in range(n):
        out[i][i] = one
    return out


def mat_add(a: list, b: list) -> list:
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_sub(a: list, b: list) -> list:
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_scale(a: list, s: Scalar) -> list:
    return [[x * s for x in row] for row in a]


def mat_mul(a: list, b: list) -> list:
    rows, inner, cols = len(a), len(b), len(b[0])
    zero = Scalar.zero(a[0][0].ctx)
    bt = [[b[k][j] for k in range(inner)] for j in range(cols)]
    out = []
    for i in range(rows):
        ra = a[i]
        row = []
        for j in range(cols):
            cb = bt[j]
            acc = None
            for k in range(inner):
                x = ra[k]
                if x.is_zero() or cb[k].is_zero():
                    continue
                p = x * cb[k]
                acc = p if acc is None else acc + p
            row.append(acc if acc is not None else zero)
        out.append(row)
    return out


def mat_pow(a: list, n: int) -> list:
    out = mat_eye(a[0][0].ctx, len(a))
    for _ in range(n):
        out = mat_mul(out, a)
    return out


def kron(a: list, b: list) -> list:
    ra, ca = len(a), len(a[0])
    rb, cb = len(b), len(b[0])
    out = mat_zero(a[0][0].ctx, ra * rb, ca * cb)
    for i in range(ra):
        for j in range(ca):
            x = a[i][j]
            if x.is_zero():
                continue
            for k in range(rb):
                for l in range(cb):
                    y = b[k][l]
                    if not y.is_zero():
                        out[i * rb + k][j * cb + l] = x * y
    return out


def mat_eq(a: list, b: list) -> bool:
    if len(a) != len(b) or len(a[0]) != len(b[0]):
        return False
    return all(x == y for ra, rb in zip(a, b) for x, y in zip(ra, rb))


def mat_is_zero(a: list) -> bool:
    return all(x.is_zero() for row in a for x in row)


def flip_matrix(ctx: Context, dim_v: int, dim_w: int) -> list:
    """Permutation sending basis index a*dim_w + b to b*dim_v + a."""
    out = mat_zero(ctx, dim_v * dim_w, dim_v * dim_w)
    one = Scalar.one(ctx)
    for a in range(dim_v):
        for b in range(dim_w):
            out[b * dim_v + a][a * dim_w + b] = one
    return out


# -- Cartan data ----------------------------------------------------------------


@dataclass(frozen=True)
class SimpleRoot:
    """One root: values alpha(h_i) and the dual pairings <<alpha, xi_i>>."""

    on_h: tuple
    on_dual: tuple


@dataclass(frozen=True)
class CartanData:
    ctx: Context
    pairing: tuple
    roots: tuple

    def __post_init__(self) -> None:
        k = self.ctx.nvars
        if len(self.pairing) != k or any(len(row) != k for row in self.pairing):
            raise ScalarError("pairing matrix must be rank x rank")
        for i in range(k):
            for j in range(k):
                if self.pairing[i][j] != self.pairing[j][i]:
                    raise ScalarError("pairing matrix must be symmetric")
        for root in self.roots:
            if len(root.on_h) != k or len(root.on_dual) != k:
                raise ScalarError("root data width must equal the rank")

    @property
    def rank(self) -> int:
        return self.ctx.nvars


def sl2_cartan(root: int = 2) -> CartanData:
    ctx = Context(nvars=1, root=root)
    return CartanData(ctx=ctx,
                      pairing=((Frac(2),),),
                      roots=(SimpleRoot(on_h=(Frac(2),), on_dual=(Frac(2),)),))


def rank2_cartan(root: int = 2) -> CartanData:
    """Rank-2 torus with one distinguished sl2 line: alpha = (2, -1)."""
    ctx = Context(nvars=2, root=root)
    pairing = ((Frac(2), Frac(-1)), (Frac(-1), Frac(2)))
    return CartanData(ctx=ctx,
                      pairing=pairing,
                      roots=(SimpleRoot(on_h=(Frac(2), Frac(-1)),
                                        on_dual=(Frac(2), Frac(-1))),))


# -- q-integers -----------------------------------------------------------------


def q_int(ctx: Context, n: int) -> Scalar:
    """[n]_q = (q^n - q^-n)/(q - q^-1) as a Laurent polynomial in t."""
    terms = {}
    for r in range(n):
        e = 2 * ctx.root * (n - 1 - 2 * r)
        terms[(e,) + (0,) * ctx.nvars] = Frac(1)
    return Scalar(Poly(ctx, terms))


def q_factorial(ctx: Context, n: int) -> Scalar:
    out = Scalar.one(ctx)
    for m in range(1, n + 1):
        out = out * q_int(ctx, m)
    return out


# -- modules ---------------------------------------------------------------------


class WeightModule:
    """Finite-dimensional weight module with a distinguished sl2 triple.

    weights[i]: tuple of mu(h_1..h_k) for basis vector i.
    chi[i]:     eigenvalue of the triple's own Cartan element (2 * spin label);
                the K-matrix of the triple is diag(q**chi).
    raise_mat / lower_mat: the triple's raising and lowering matrices.
    """

    def __init__(self, cartan: CartanData, weights, chi, raise_mat, lower_mat,
                 label: str = "", check: bool = True):
        self.cartan = cartan
        self.ctx = cartan.ctx
        self.weights = [tuple(Frac(w) for w in wt) for wt in weights]
        self.chi = [Frac(c) for c in chi]
        self.raise_mat = raise_mat
        self.lower_mat = lower_mat
        self.label = label or "module(dim=%d)" % len(self.weights)
        if check:
            _check_sl2(self)

    @property
    def dim(self) -> int:
        return len(self.weights)

    def k_mat(self, power: int = 1) -> list:
        ctx = self.ctx
        out = mat_zero(ctx, self.dim, self.dim)
        for i, c in enumerate(self.chi):
            out[i][i] = Scalar.q(ctx, c * power)
        return out

    def generator(self, name: str) -> list:
        if name == "e":
            return self.raise_mat
        if name == "f":
            return self.lower_mat
        if name == "k":
            return self.k_mat(1)
        if name == "k_inv":
            return self.k_mat(-1)
        raise ScalarError("unknown generator %r" % name)

    def __repr__(self) -> str:
        return "WeightModule(%s)" % self.label


def _check_sl2(mod: WeightModule) -> None:
    """The triple must satisfy the q-deformed commutation relations exactly."""
    ctx = mod.ctx
    e, f = mod.raise_mat, mod.lower_mat
    k, kinv = mod.k_mat(1), mod.k_mat(-1)
    qdiff = Scalar.q(ctx, 1) - Scalar.q(ctx, -1)
    lhs = mat_sub(mat_mul(e, f), mat_mul(f, e))
    rhs = mat_scale(mat_sub(k, kinv), qdiff.inverse())
    if not mat_eq(lhs, rhs):
        raise ScalarError("module %s violates [e,f] = (k - k^-1)/(q - q^-1)" % mod.label)
    qs = Scalar.q(ctx, 2)
    if not mat_eq(mat_mul(k, e), mat_scale(mat_mul(e, k), qs)):
        raise ScalarError("module %s violates k e k^-1 = q^2 e" % mod.label)
    if not mat_eq(mat_mul(k, f), mat_scale(mat_mul(f, k), qs.inverse())):
        raise ScalarError("module %s violates k f k^-1 = q^-2 f" % mod.label)
    for i, wt in enumerate(mod.weights):
        if len(wt) != ctx.nvars:
            raise ScalarError("weight width mismatch in %s" % mod.label)


def spin_module(cartan: CartanData, spin, root_index: int = 0,
                label: str = "") -> WeightModule:
    """Irreducible module of the given spin along one simple root."""
    two_j = Frac(spin) * 2
    if two_j.denominator != 1 or two_j < 0:
        raise ScalarError("spin must be a nonnegative half-integer")
    two_j = int(two_j)
    dim = two_j + 1
    ctx = cartan.ctx
    alpha = cartan.roots[root_index].on_h
    weights = []
    chi = []
    for i in range(dim):
        m = Frac(two_j - 2 * i, 2)  # spin label of basis vector i
        weights.append(tuple(m * a for a in alpha))
        chi.append(2 * m)
    raise_mat = mat_zero(ctx, dim, dim)
    lower_mat = mat_zero(ctx, dim, dim)
    for i in range(1, dim):
        raise_mat[i - 1][i] = q_int(ctx, i)
    for i in range(dim - 1):
        lower_mat[i + 1][i] = q_int(ctx, two_j - i)
    return WeightModule(cartan, weights, chi, raise_mat, lower_mat,
                        label=label or "spin-%s" % Frac(spin))


def trivial_module(cartan: CartanData) -> WeightModule:
    ctx = cartan.ctx
    z = [[Scalar.zero(ctx)]]
    return WeightModule(cartan, [(Frac(0),) * ctx.nvars], [Frac(0)],
                        [[Scalar.zero(ctx)]], [[Scalar.zero(ctx)]],
                        label="spin-0")


def coproduct_action(name: str, v: WeightModule, w: WeightModule) -> list:
    """Standard coproduct matrix of one generator on v (x) w."""
    ctx = v.ctx
    if name == "e":
        return mat_add(kron(v.raise_mat, mat_eye(ctx, w.dim)),
                       kron(v.k_mat(1), w.raise_mat))
    if name == "f":
        return mat_add(kron(v.lower_mat, w.k_mat(-1)),
                       kron(mat_eye(ctx, v.dim), w.lower_mat))
    if name == "k":
        return kron(v.k_mat(1), w.k_mat(1))
    if name == "k_inv":
        return kron(v.k_mat(-1), w.k_mat(-1))
    raise ScalarError("unknown generator %r" % name)


def counit_value(ctx: Context, name: str) -> Scalar:
    if name in ("e", "f"):
        return Scalar.zero(ctx)
    if name in ("k", "k_inv"):
        return Scalar.one(ctx)
    raise ScalarError("unknown generator %r" % name)


def fused_module(v: WeightModule, w: WeightModule) -> WeightModule:
    """v (x) w as a weight module, generators through the coproduct."""
    weights = []
    chi = []
    for a in range(v.dim):
        for b in range(w.dim):
            weights.append(tuple(x + y for x, y in zip(v.weights[a], w.weights[b])))
            chi.append(v.chi[a] + w.chi[b])
    return WeightModule(v.cartan, weights, chi,
                        coproduct_action("e", v, w),
                        coproduct_action("f", v, w),
                        label="%s(x)%s" % (v.label, w.label),
                        check=False)  # relations follow from the factors


# -- universal two-leg elements ---------------------------------------------------


@dataclass(frozen=True)
class AffineExp:
    """Exponent c0 + sum(mu_i * mu(h_i)) + sum(nu_i * nu(h_i))."""

    const: Frac
    mu: tuple
    nu: tuple

    def evaluate(self, mu_wt: tuple, nu_wt: tuple) -> Frac:
        total = Frac(self.const)
        for c, w in zip(self.mu, mu_wt):
            total += Frac(c) * Frac(w)
        for c, w in zip(self.nu, nu_wt):
            total += Frac(c) * Frac(w)
        return total

    def add_const(self, value) -> "AffineExp":
        return AffineExp(self.const + Frac(value), self.mu, self.nu)

    def add_weights(self, mu_bump: tuple, nu_bump: tuple) -> "AffineExp":
        return AffineExp(self.const,
                         tuple(a + Frac(b) for a, b in zip(self.mu, mu_bump)),
                         tuple(a + Frac(b) for a, b in zip(self.nu, nu_bump)))


def affine_const(ctx: Context, value) -> AffineExp:
    zeros = (Frac(0),) * ctx.nvars
    return AffineExp(Frac(value), zeros, zeros)


@dataclass(frozen=True)
class MonoTemplate:
    """coeff * t**t_exp * prod(y_i**y_exps[i]) with a weight-affine t_exp."""

    coeff: Frac
    t_exp: AffineExp
    y_exps: tuple

    def evaluate(self, ctx: Context, mu_wt: tuple, nu_wt: tuple) -> Poly:
        e = self.t_exp.evaluate(mu_wt, nu_wt)
        if e.denominator != 1:
            raise ScalarError(
                "weight-dependent t-exponent %s is fractional; enlarge root" % e)
        return Poly(ctx, {(int(e), *self.y_exps): Frac(self.coeff)})

    def mul(self, other: "MonoTemplate") -> "MonoTemplate":
        return MonoTemplate(self.coeff * other.coeff,
                            AffineExp(self.t_exp.const + other.t_exp.const,
                                      tuple(a + b for a, b in zip(self.t_exp.mu, other.t_exp.mu)),
                                      tuple(a + b for a, b in zip(self.t_exp.nu, other.t_exp.nu))),
                            tuple(a + b for a, b in zip(self.y_exps, other.y_exps)))

    def weight_shift(self, ctx: Context, mu_coef: tuple, nu_coef: tuple) -> "MonoTemplate":
        """Record the substitution y_i -> q**(mu_coef.mu + nu_coef.nu) y_i."""
        scale = 2 * ctx.root
        mu_bump = tuple(scale * Frac(c) * Frac(m, ctx.yroot)
                        for c, m in zip(mu_coef, self.y_exps))
        nu_bump = tuple(scale * Frac(c) * Frac(m, ctx.yroot)
                        for c, m in zip(nu_coef, self.y_exps))
        return MonoTemplate(self.coeff, self.t_exp.add_weights(mu_bump, nu_bump),
                            self.y_exps)


@dataclass(frozen=True)
class CartanFactor:
    """Weight-indexed scalar: numerator templates over denominator factors."""

    num: tuple
    den: tuple  # tuple of factors; each factor is a tuple of MonoTemplate

    def evaluate(self, ctx: Context, mu_wt: tuple, nu_wt: tuple) -> Scalar:
        num = Poly.zero(ctx)
        for mono in self.num:
            num = num + mono.evaluate(ctx, mu_wt, nu_wt)
        den = Poly.one(ctx)
        for factor in self.den:
            fp = Poly.zero(ctx)
            for mono in factor:
                fp = fp + mono.evaluate(ctx, mu_wt, nu_wt)
            den = den * fp
        return Scalar(num, den)

    def weight_shift(self, ctx: Context, mu_coef: tuple, nu_coef: tuple) -> "CartanFactor":
        return CartanFactor(
            tuple(m.weight_shift(ctx, mu_coef, nu_coef) for m in self.num),
            tuple(tuple(m.weight_shift(ctx, mu_coef, nu_coef) for m in factor)
                  for factor in self.den))

    def scale_templates(self, monos: tuple) -> "CartanFactor":
        """Multiply the numerator by a fixed template polynomial."""
        out = []
        for a in self.num:
            for b in monos:
                out.append(a.mul(b))
        return CartanFactor(tuple(out), self.den)


def factor_one(ctx: Context) -> CartanFactor:
    return CartanFactor((MonoTemplate(Frac(1), affine_const(ctx, 0),
                                      (0,) * ctx.nvars),), ())


def factor_from_scalar(ctx: Context, value: Scalar) -> CartanFactor:
    def poly_templates(p: Poly) -> tuple:
        return tuple(MonoTemplate(c, affine_const(ctx, e[0]), tuple(e[1:]))
                     for e, c in sorted(p.terms.items()))
    den = () if value.den == Poly.one(ctx) else (poly_templates(value.den),)
    return CartanFactor(poly_templates(value.num), den)


@dataclass(frozen=True)
class UniversalTerm:
    lower: int     # power of the lowering generator on the first leg
    upper: int     # power of the raising generator on the second leg
    factor: CartanFactor


@dataclass(frozen=True)
class UniversalElement:
    """Sum of (F**lower (x) E**upper) . diag(factor at source weights)."""

    terms: tuple

    def is_zero_weight(self) -> bool:
        return all(t.lower == t.upper for t in self.terms)

    def max_level(self) -> int:
        return max((max(t.lower, t.upper) for t in self.terms), default=0)


def identity_element(ctx: Context) -> UniversalElement:
    return UniversalElement((UniversalTerm(0, 0, factor_one(ctx)),))


def universal_action(elem: UniversalElement, v: WeightModule, w: WeightModule,
                     flipped: bool = False) -> list:
    """Matrix of the element on v (x) w.

    flipped=True places the element with its legs exchanged: lowering word on
    the second leg, raising word on the first, coefficient arguments swapped.
    """
    ctx = v.ctx
    out = mat_zero(ctx, v.dim * w.dim, v.dim * w.dim)
    lower_pows_v = {0: mat_eye(ctx, v.dim)}
    raise_pows_v = {0: mat_eye(ctx, v.dim)}
    lower_pows_w = {0: mat_eye(ctx, w.dim)}
    raise_pows_w = {0: mat_eye(ctx, w.dim)}

    def pow_of(cache: dict, mat: list, n: int) -> list:
        if n not in cache:
            cache[n] = mat_mul(pow_of(cache, mat, n - 1), mat)
        return cache[n]

    for term in elem.terms:
        if not flipped:
            mv = pow_of(lower_pows_v, v.lower_mat, term.lower)
            mw = pow_of(raise_pows_w, w.raise_mat, term.upper)
        else:
            mv = pow_of(raise_pows_v, v.raise_mat, term.upper)
            mw = pow_of(lower_pows_w, w.lower_mat, term.lower)
        if mat_is_zero(mv) or mat_is_zero(mw):
            continue
        for a in range(v.dim):
            for b in range(w.dim):
                if flipped:
                    coeff = term.factor.evaluate(ctx, w.weights[b], v.weights[a])
                else:
                    coeff = term.factor.evaluate(ctx, v.weights[a], w.weights[b])
                if coeff.is_zero():
                    continue
                src = a * w.dim + b
                for ap in range(v.dim):
                    x = mv[ap][a]
                    if x.is_zero():
                        continue
                    for bp in range(w.dim):
                        y = mw[bp][b]
                        if y.is_zero():
                            continue
                        dst = ap * w.dim + bp
                        out[dst][src] = out[dst][src] + x * y * coeff
    return out


def weyl_transform(elem: UniversalElement, ctx: Context) -> UniversalElement:
    """Symmetrized-ordering transform: evaluate every coefficient with its
    torus argument pre-shifted by half the combined leg weight."""
    half = (Frac(1, 2),) * ctx.nvars
    return UniversalElement(tuple(
        UniversalTerm(t.lower, t.upper, t.factor.weight_shift(ctx, half, half))
        for t in elem.terms))


# -- constant R-matrix -------------------------------------------------------------


def constant_r(v: WeightModule, w: WeightModule) -> list:
    """Quasitriangular structure on v (x) w for rank-1 Cartan data.

    Diagonal part acts as q**(mu*nu/2) on target weights; the nilpotent tail
    couples lowering on the first leg with raising on the second.
    """
    ctx = v.ctx
    if ctx.nvars != 1:
        raise ScalarError("constant R-matrix requires rank-1 Cartan data")
    qdiff = Scalar.q(ctx, 1) - Scalar.q(ctx, -1)
    nmax = min(v.dim, w.dim) - 1
    out = mat_zero(ctx, v.dim * w.dim, v.dim * w.dim)
    lower_pow = mat_eye(ctx, v.dim)
    raise_pow = mat_eye(ctx, w.dim)
    for n in range(nmax + 1):
        if n:
            lower_pow = mat_mul(lower_pow, v.lower_mat)
            raise_pow = mat_mul(raise_pow, w.raise_mat)
        coeff = qdiff ** n * Scalar.q(ctx, Frac(n * (n - 1), 2)) / q_factorial(ctx, n)
        for a in range(v.dim):
            for ap in range(v.dim):
                x = lower_pow[ap][a]
                if x.is_zero():
                    continue
                for b in range(w.dim):
                    for bp in range(w.dim):
                        y = raise_pow[bp][b]
                        if y.is_zero():
                            continue
                        cart = Scalar.q(ctx, v.weights[ap][0] * w.weights[bp][0] / 2)
                        out[ap * w.dim + bp][a * w.dim + b] = \
                            out[ap * w.dim + bp][a * w.dim + b] + x * y * coeff * cart
    return out
