"""Exact arithmetic for q-deformed weight calculus.

Everything downstream works over one scalar domain: rational functions in
a deformation variable t (with q = t**(2*root)) and exponential coordinates
y_1..y_k on a torus, all with Fraction coefficients.  Laurent exponents are
allowed in both t and the y_i.  The three operations that give the domain
its point are

  * shift(mu, c): the substitution y_i -> q**(c*mu_i) * y_i, realizing a
    lambda-translation by a weight,
  * derive(i): d/d(lambda_i) acting through y_i = e**(lambda_i),
  * series(n): expansion at t = e**(hbar/(2*root)) into a truncated
    hbar-series with y-rational coefficients.

No floating point anywhere; equality is decided by exact cross
multiplication.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

Frac = Fraction


class ScalarError(ValueError):
    """Base class for scalar-domain failures."""


class ShiftError(ScalarError):
    """A weight shift produced a fractional t-exponent."""


class PoleError(ScalarError):
    """Series expansion hit a denominator vanishing at t = 1."""


@dataclass(frozen=True)
class Context:
    """Variable bookkeeping shared by every scalar in one computation.

    nvars: number of torus coordinates y_i.
    root:  q = t**(2*root); root 2 keeps all q**(1/2)-powers integral in t.
    yroot: optional extra root degree for the y_i (exponent m stands for
           y_i**(m/yroot)); shipped fixtures keep this at 1.
    """

    nvars: int
    root: int = 2
    yroot: int = 1

    def __post_init__(self) -> None:
        if self.nvars < 0 or self.root < 1 or self.yroot < 1:
            raise ScalarError("invalid variable context")

    @property
    def width(self) -> int:
        return self.nvars + 1


def _grade(exps: tuple) -> tuple:
    return (sum(exps), exps)


class Poly:
    """Sparse Laurent polynomial: exponent tuple (t, y1..yk) -> Fraction."""

    __slots__ = ("ctx", "terms")

    def __init__(self, ctx: Context, terms: dict | None = None):
        self.ctx = ctx
        clean = {}
        if terms:
            for exps, coeff in terms.items():
                if coeff:
                    clean[exps] = coeff
        self.terms = clean

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, ctx: Context) -> "Poly":
        return cls(ctx)

    @classmethod
    def const(cls, ctx: Context, value) -> "Poly":
        value = Frac(value)
        if not value:
            return cls(ctx)
        return cls(ctx, {(0,) * ctx.width: value})

    @classmethod
    def one(cls, ctx: Context) -> "Poly":
        return cls.const(ctx, 1)

    @classmethod
    def monomial(cls, ctx: Context, texp: int, yexps: Iterable[int] = (), coeff=1) -> "Poly":
        yexps = tuple(yexps) or (0,) * ctx.nvars
        if len(yexps) != ctx.nvars:
            raise ScalarError("wrong number of y-exponents")
        coeff = Frac(coeff)
        if not coeff:
            return cls(ctx)
        return cls(ctx, {(texp, *yexps): coeff})

    @classmethod
    def t(cls, ctx: Context, power: int = 1) -> "Poly":
        return cls.monomial(ctx, power)

    @classmethod
    def y(cls, ctx: Context, i: int, power: int = 1) -> "Poly":
        exps = [0] * ctx.nvars
        exps[i] = power
        return cls.monomial(ctx, 0, exps)

    # -- ring structure -------------------------------------------------

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return isinstance(other, Poly) and self.ctx == other.ctx and self.terms == other.terms

    def __hash__(self):
        return hash((self.ctx, tuple(sorted(self.terms.items()))))

    def __neg__(self) -> "Poly":
        return Poly(self.ctx, {e: -c for e, c in self.terms.items()})

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return Poly(self.ctx, out)

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        if not self.terms or not other.terms:
            return Poly(self.ctx)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(e, 0) + c1 * c2
                if s:
                    out[e] = s
                else:
                    out.pop(e, None)
        return Poly(self.ctx, out)

    def scale(self, value) -> "Poly":
        value = Frac(value)
        if not value:
            return Poly(self.ctx)
        return Poly(self.ctx, {e: c * value for e, c in self.terms.items()})

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ScalarError("negative power of a polynomial")
        out = Poly.one(self.ctx)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- structure queries ----------------------------------------------

    def leading(self) -> tuple:
        """Graded-lex greatest exponent tuple (errors on zero)."""
        return max(self.terms, key=_grade)

    def leading_coeff(self) -> Frac:
        return self.terms[self.leading()]

    def min_exponents(self) -> tuple:
        return tuple(min(e[i] for e in self.terms) for i in range(self.ctx.width))

    def shift_exponents(self, offset: tuple) -> "Poly":
        return Poly(self.ctx, {tuple(a + b for a, b in zip(e, offset)): c
                               for e, c in self.terms.items()})

    def uses_t(self) -> bool:
        return any(e[0] for e in self.terms)

    def eval(self, tval, yvals) -> Frac:
        tval = Frac(tval)
        yvals = [Frac(v) for v in yvals]
        total = Frac(0)
        for exps, coeff in self.terms.items():
            term = coeff * tval ** exps[0]
            for v, m in zip(yvals, exps[1:]):
                term *= v ** m
            total += term
        return total

    # -- lambda-calculus operations ---------------------------------------

    def shift(self, mu: tuple, c) -> "Poly":
        """Substitute y_i -> q**(c*mu_i) y_i, i.e. t-exponent bookkeeping."""
        c = Frac(c)
        out = {}
        for exps, coeff in self.terms.items():
            bump = Frac(0)
            for mui, m in zip(mu, exps[1:]):
                bump += 2 * self.ctx.root * c * Frac(mui) * Frac(m, self.ctx.yroot)
            if bump.denominator != 1:
                raise ShiftError(
                    "weight shift needs t-exponent %s; enlarge the root degree "
                    "(currently %d) so that 2*root*c*mu*m is integral" % (bump, self.ctx.root))
            out[(exps[0] + int(bump), *exps[1:])] = coeff
        return Poly(self.ctx, out)

    def derive(self, i: int) -> "Poly":
        """d/d(lambda_i) with y_i = e**(lambda_i): multiply by the exponent."""
        out = {}
        for exps, coeff in self.terms.items():
            m = Frac(exps[1 + i], self.ctx.yroot)
            if m:
                s = out.get(exps, 0) + coeff * m
                if s:
                    out[exps] = s
        return Poly(self.ctx, out)

    # -- text form --------------------------------------------------------

    def text(self) -> str:
        if not self.terms:
            return "0"
        pieces = []
        for exps in sorted(self.terms, key=_grade, reverse=True):
            coeff = self.terms[exps]
            factors = [str(coeff)]
            if exps[0]:
                factors.append("t^%d" % exps[0])
            for i, m in enumerate(exps[1:]):
                if m:
                    factors.append("y%d^%d" % (i + 1, m))
            pieces.append("*".join(factors))
        return " + ".join(pieces)

    @classmethod
    def parse(cls, ctx: Context, text: str) -> "Poly":
        text = text.strip()
        if text == "0":
            return cls(ctx)
        terms = {}
        for piece in text.split(" + "):
            factors = piece.split("*")
            coeff = Frac(factors[0])
            exps = [0] * ctx.width
            for factor in factors[1:]:
                name, _, power = factor.partition("^")
                power = int(power) if power else 1
                if name == "t":
                    exps[0] += power
                elif name.startswith("y"):
                    idx = int(name[1:])
                    if not 1 <= idx <= ctx.nvars:
                        raise ScalarError("unknown variable %r" % name)
                    exps[idx] += power
                else:
                    raise ScalarError("unknown variable %r" % name)
            key = tuple(exps)
            terms[key] = terms.get(key, 0) + coeff
        return cls(ctx, terms)

    def __repr__(self) -> str:
        return "Poly(%s)" % self.text()


# -- polynomial gcd (used for canonical reduced forms) ----------------------

def _poly_div_exact(p: Poly, q: Poly) -> Poly | None:
    """Exact division p/q, or None when q does not divide p."""
    if p.is_zero():
        return Poly.zero(p.ctx)
    if q.is_zero():
        return None
    out = {}
    lead_q = q.leading()
    cq = q.terms[lead_q]
    rem = p
    while rem.terms:
        lead_r = rem.leading()
        exps = tuple(a - b for a, b in zip(lead_r, lead_q))
        if any(e < 0 for e in exps):
            return None
        coeff = rem.terms[lead_r] / cq
        out[exps] = coeff
        rem = rem - Poly(p.ctx, {exps: coeff}) * q
    return Poly(p.ctx, out)


def _max_degree(p: Poly, v: int) -> int:
    return max(e[v] for e in p.terms)


def _split_by_var(p: Poly, v: int) -> dict[int, Poly]:
    out: dict[int, dict] = {}
    for exps, coeff in p.terms.items():
        d = exps[v]
        reduced = exps[:v] + (0,) + exps[v + 1:]
        out.setdefault(d, {})[reduced] = coeff
    return {d: Poly(p.ctx, terms) for d, terms in out.items()}


def _join_by_var(ctx: Context, coeffs: dict[int, Poly], v: int) -> Poly:
    terms = {}
    for d, poly in coeffs.items():
        for exps, coeff in poly.terms.items():
            key = exps[:v] + (d,) + exps[v + 1:]
            terms[key] = terms.get(key, 0) + coeff
    return Poly(ctx, terms)


def poly_gcd(p: Poly, q: Poly) -> Poly:
    """Gcd of two Laurent polynomials, monic in graded-lex (monomial parts
    are stripped first, so the result is an honest polynomial)."""
    ctx = p.ctx
    if p.is_zero() and q.is_zero():
        return Poly.zero(ctx)
    if p.is_zero():
        return _monic(q.shift_exponents(tuple(-m for m in q.min_exponents())))
    if q.is_zero():
        return _monic(p.shift_exponents(tuple(-m for m in p.min_exponents())))
    p = p.shift_exponents(tuple(-m for m in p.min_exponents()))
    q = q.shift_exponents(tuple(-m for m in q.min_exponents()))
    g = _gcd_rec(p, q)
    g = g.shift_exponents(tuple(-m for m in g.min_exponents()))
    return _monic(g)


def _monic(p: Poly) -> Poly:
    if p.is_zero():
        return p
    return p.scale(1 / p.leading_coeff())


def _content_pp(poly: Poly, v: int) -> tuple[Poly, Poly]:
    """Content (gcd of v-coefficients) and primitive part in variable v."""
    parts = _split_by_var(poly, v)
    cont = Poly.zero(poly.ctx)
    for part in parts.values():
        cont = _gcd_rec(cont, part)
        if cont == Poly.one(poly.ctx):
            break
    cont = _monic(cont)
    pp = _poly_div_exact(poly, cont)
    return cont, pp


def _gcd_rec(p: Poly, q: Poly) -> Poly:
    if p.is_zero():
        return _monic(q)
    if q.is_zero():
        return _monic(p)
    mp, mq = p.min_exponents(), q.min_exponents()
    shared = tuple(min(a, b) for a, b in zip(mp, mq))
    p = p.shift_exponents(tuple(-m for m in mp))
    q = q.shift_exponents(tuple(-m for m in mq))
    core = _gcd_core(p, q)
    if any(shared):
        core = core.shift_exponents(shared)
    return core


def _gcd_core(p: Poly, q: Poly) -> Poly:
    active = [v for v in range(p.ctx.width)
              if _max_degree(p, v) > 0 or _max_degree(q, v) > 0]
    if not active:
        return Poly.one(p.ctx)
    if len(p.terms) == 1 or len(q.terms) == 1:
        # a stripped monomial is a unit here
        return Poly.one(p.ctx)
    heur = _heuristic_gcd(p, q, active)
    if heur is not None:
        return heur
    v = min(active, key=lambda w: max(_max_degree(p, w), _max_degree(q, w)))

    cp, a = _content_pp(p, v)
    cq, b = _content_pp(q, v)
    cont = _gcd_rec(cp, cq)
    if _max_degree(a, v) < _max_degree(b, v):
        a, b = b, a
    # one exact trial division catches the common planted-factor case
    if _poly_div_exact(a, b) is not None:
        return cont * _monic(b)

    # subresultant pseudo-remainder sequence (Collins), coefficients stay
    # divided by the predicted g*h^delta factors so they cannot balloon
    one = Poly.one(p.ctx)
    g, h = one, one
    while True:
        da, db = _max_degree(a, v), _max_degree(b, v)
        delta = da - db
        r = _prem(a, b, v, delta)
        if r.is_zero():
            break
        if _max_degree(r, v) == 0:
            return cont  # primitive parts are coprime in v
        divisor = g * h ** delta
        reduced = _poly_div_exact(r, divisor)
        if reduced is None:
            # exactness can fail after an earlier fallback; normalize the raw
            # remainder to integer-primitive form to keep coefficients small
            import math
            scale = Frac(math.lcm(*(c.denominator for c in r.terms.values())),
                         math.gcd(*(abs(c.numerator) for c in r.terms.values())) or 1)
            reduced = r.scale(scale)
        a, b = b, reduced
        g = _split_by_var(a, v)[_max_degree(a, v)]
        if delta == 0:
            pass
        elif delta == 1:
            h = g
        else:
            hd = _poly_div_exact(g ** delta, h ** (delta - 1))
            h = hd if hd is not None else g ** delta
    _, b = _content_pp(b, v)
    return cont * _monic(b)


def _prem(a: Poly, b: Poly, v: int, delta: int | None = None) -> Poly:
    """Pseudo-remainder of a by b in variable v."""
    da, db = _max_degree(a, v), _max_degree(b, v)
    if da < db:
        return a
    if delta is None:
        delta = da - db
    lb = _split_by_var(b, v)[db]
    rem = a
    steps = 0
    while rem.terms and _max_degree(rem, v) >= db:
        dr = _max_degree(rem, v)
        lr = _split_by_var(rem, v)[dr]
        shift = [0] * a.ctx.width
        shift[v] = dr - db
        rem = lb * rem - lr * b.shift_exponents(tuple(shift))
        steps += 1
    # pad so the total pseudo-factor is lb**(delta+1) as the PRS expects
    for _ in range(delta + 1 - steps):
        rem = lb * rem
    return rem


def _heuristic_gcd(p: Poly, q: Poly, active: list) -> Poly | None:
    """Evaluation/reconstruction gcd with an exact division certificate.

    Follows the classic integer-point heuristic: evaluate one variable at a
    large integer, recurse, lift the result back through balanced base-xi
    digits, and accept only candidates that divide both inputs exactly.
    Returns None when the point choices fail; caller falls back to the
    pseudo-remainder route.
    """
    import math

    def to_int(poly: Poly) -> dict:
        scale = math.lcm(*(c.denominator for c in poly.terms.values()))
        return {e: int(c * scale) for e, c in poly.terms.items()}

    got = _heu_rec(to_int(p), to_int(q), list(active), p.ctx.width)
    if got is None:
        return None
    return _monic(Poly(p.ctx, {e: Frac(c) for e, c in got.items()}))


def _int_content(terms: dict) -> int:
    import math
    return math.gcd(*(abs(c) for c in terms.values())) if terms else 0


def _int_div_exact(p: dict, q: dict, width: int) -> dict | None:
    if not p:
        return {}
    out = {}
    lead_q = max(q, key=_grade)
    cq = q[lead_q]
    rem = dict(p)
    while rem:
        lead_r = max(rem, key=_grade)
        exps = tuple(a - b for a, b in zip(lead_r, lead_q))
        if any(e < 0 for e in exps) or rem[lead_r] % cq:
            return None
        coeff = rem[lead_r] // cq
        out[exps] = coeff
        for eq, c in q.items():
            key = tuple(a + b for a, b in zip(exps, eq))
            s = rem.get(key, 0) - coeff * c
            if s:
                rem[key] = s
            else:
                rem.pop(key, None)
    return out


def _heu_rec(p: dict, q: dict, active: list, width: int, depth: int = 0) -> dict | None:
    import math
    if depth > 8:
        return None
    live = [v for v in active
            if any(e[v] for e in p) or any(e[v] for e in q)]
    if not live:
        g = math.gcd(_int_content(p), _int_content(q))
        return {(0,) * width: g} if g else {}
    # primitive inputs keep spurious integer content out of the lifted digits
    cp, cq = _int_content(p), _int_content(q)
    if cp > 1:
        p = {e: c // cp for e, c in p.items()}
    if cq > 1:
        q = {e: c // cq for e, c in q.items()}
    if len(p) == 1 or len(q) == 1:
        mono = tuple(min(min(e[v] for e in p), min(e[v] for e in q))
                     for v in range(width))
        return {mono: 1}
    v = min(live, key=lambda w: max(max(e[w] for e in p), max(e[w] for e in q)))
    norm = min(max(abs(c) for c in p.values()), max(abs(c) for c in q.values()))
    xi = 2 * norm + 2

    def eval_at(terms: dict) -> dict:
        out: dict = {}
        for exps, coeff in terms.items():
            key = exps[:v] + (0,) + exps[v + 1:]
            out[key] = out.get(key, 0) + coeff * xi ** exps[v]
        return {e: c for e, c in out.items() if c}

    for _ in range(6):
        gamma = _heu_rec(eval_at(p), eval_at(q), [w for w in live if w != v],
                         width, depth + 1)
        if gamma is not None:
            # balanced base-xi lift of gamma into powers of variable v
            g: dict = {}
            level = dict(gamma)
            i = 0
            while level and i <= max(max(e[v] for e in p), max(e[v] for e in q)):
                nxt: dict = {}
                for exps, coeff in level.items():
                    digit = coeff % xi
                    if digit > xi // 2:
                        digit -= xi
                    if digit:
                        g[exps[:v] + (i,) + exps[v + 1:]] = digit
                    rest = (coeff - digit) // xi
                    if rest:
                        nxt[exps] = rest
                level = nxt
                i += 1
            if not level and g:
                content = _int_content(g)
                g = {e: c // content for e, c in g.items()}
                if (_int_div_exact(p, g, width) is not None
                        and _int_div_exact(q, g, width) is not None):
                    return g
        xi = xi * 73794 // 27011 + 3
    return None


class Scalar:
    """Rational function num/den over the Laurent-polynomial ring.

    Construction normalizes cheaply (strip a common monomial, make the
    denominator graded-lex monic); full gcd reduction happens only on
    demand in reduced()/text(), keeping bulk arithmetic fast.
    """

    __slots__ = ("ctx", "num", "den")

    def __init__(self, num: Poly, den: Poly | None = None):
        ctx = num.ctx
        if den is None:
            den = Poly.one(ctx)
        if den.is_zero():
            raise ZeroDivisionError("scalar with zero denominator")
        if num.is_zero():
            den = Poly.one(ctx)
        else:
            drop = tuple(min(a, b) for a, b in
                         zip(num.min_exponents(), den.min_exponents()))
            if any(drop):
                neg = tuple(-d for d in drop)
                num = num.shift_exponents(neg)
                den = den.shift_exponents(neg)
            lead = den.leading_coeff()
            if lead != 1:
                num = num.scale(1 / lead)
                den = den.scale(1 / lead)
        self.ctx = ctx
        self.num = num
        self.den = den

    # -- constructors -----------------------------------------------------

    @classmethod
    def const(cls, ctx: Context, value) -> "Scalar":
        return cls(Poly.const(ctx, value))

    @classmethod
    def zero(cls, ctx: Context) -> "Scalar":
        return cls(Poly.zero(ctx))

    @classmethod
    def one(cls, ctx: Context) -> "Scalar":
        return cls(Poly.one(ctx))

    @classmethod
    def t(cls, ctx: Context, power: int = 1) -> "Scalar":
        return cls(Poly.t(ctx, power))

    @classmethod
    def q(cls, ctx: Context, power=1) -> "Scalar":
        """q**power with q = t**(2*root); power may be a half-integer as
        long as 2*root*power is integral."""
        e = 2 * ctx.root * Frac(power)
        if e.denominator != 1:
            raise ShiftError("q-power %s is not integral in t; enlarge root" % power)
        return cls(Poly.t(ctx, int(e)))

    @classmethod
    def y(cls, ctx: Context, i: int, power: int = 1) -> "Scalar":
        return cls(Poly.y(ctx, i, power))

    # -- predicates --------------------------------------------------------

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_one(self) -> bool:
        return self.num == self.den

    def __bool__(self) -> bool:
        return not self.is_zero()

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scalar):
            return NotImplemented
        if self.den == other.den:
            return self.num == other.num
        return self.num * other.den == other.num * self.den

    def __hash__(self):
        r = self.reduced()
        return hash((r.num, r.den))

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: "Scalar") -> "Scalar":
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.den == other.den:
            return Scalar(self.num + other.num, self.den)
        return Scalar(self.num * other.den + other.num * self.den,
                      self.den * other.den)

    def __neg__(self) -> "Scalar":
        return Scalar(-self.num, self.den)

    def __sub__(self, other: "Scalar") -> "Scalar":
        return self + (-other)

    def __mul__(self, other: "Scalar") -> "Scalar":
        if self.is_zero() or other.is_zero():
            return Scalar.zero(self.ctx)
        return Scalar(self.num * other.num, self.den * other.den)

    def __truediv__(self, other: "Scalar") -> "Scalar":
        return self * other.inverse()

    def __pow__(self, n: int) -> "Scalar":
        if n < 0:
            return self.inverse() ** (-n)
        return Scalar(self.num ** n, self.den ** n)

    def inverse(self) -> "Scalar":
        if self.is_zero():
            raise ZeroDivisionError("inverting zero scalar")
        return Scalar(self.den, self.num)

    def scale(self, value) -> "Scalar":
        return Scalar(self.num.scale(value), self.den)

    # -- lambda-calculus operations ------------------------------------------

    def shift(self, mu: tuple, c) -> "Scalar":
        return Scalar(self.num.shift(mu, c), self.den.shift(mu, c))

    def derive(self, i: int) -> "Scalar":
        # quotient rule; den**2 is normalized away again when it cancels
        return Scalar(self.num.derive(i) * self.den - self.num * self.den.derive(i),
                      self.den * self.den)

    def series(self, order: int) -> "HBarSeries":
        num = _poly_series(self.num, order)
        den = _poly_series(self.den, order)
        if den.coeffs[0].is_zero():
            raise PoleError("denominator %s vanishes at hbar = 0" % self.den.text())
        return num * den.inverse()

    def eval(self, tval, yvals) -> Frac:
        d = self.den.eval(tval, yvals)
        if not d:
            raise ZeroDivisionError("evaluation hit a pole")
        return self.num.eval(tval, yvals) / d

    # -- canonical form ---------------------------------------------------------

    def reduced(self) -> "Scalar":
        if self.num.is_zero() or self.den == Poly.one(self.ctx):
            return self
        g = poly_gcd(self.num, self.den)
        if g.is_zero() or g == Poly.one(self.ctx):
            return self
        num = _poly_div_exact(self.num, g)
        den = _poly_div_exact(self.den, g)
        if num is None or den is None:
            return self
        return Scalar(num, den)

    def text(self) -> str:
        r = self.reduced()
        if r.den == Poly.one(self.ctx):
            return r.num.text()
        return "(%s) / (%s)" % (r.num.text(), r.den.text())

    @classmethod
    def parse(cls, ctx: Context, text: str) -> "Scalar":
        text = text.strip()
        if text.startswith("(") and ") / (" in text and text.endswith(")"):
            left, _, right = text.partition(") / (")
            return cls(Poly.parse(ctx, left[1:]), Poly.parse(ctx, right[:-1]))
        return cls(Poly.parse(ctx, text))

    def __repr__(self) -> str:
        if self.den == Poly.one(self.ctx):
            return "Scalar(%s)" % self.num.text()
        return "Scalar((%s)/(%s))" % (self.num.text(), self.den.text())


def _poly_series(p: Poly, order: int) -> "HBarSeries":
    """Expand at t = e**(hbar/(2*root)); y-monomials pass through."""
    ctx = p.ctx
    coeffs = [Scalar.zero(ctx) for _ in range(order + 1)]
    for exps, coeff in p.terms.items():
        rate = Frac(exps[0], 2 * ctx.root)
        mono = Scalar(Poly(ctx, {(0, *exps[1:]): coeff}))
        fact = Frac(1)
        power = Frac(1)
        for n in range(order + 1):
            if n:
                power *= rate
                fact *= n
            if power:
                coeffs[n] = coeffs[n] + mono.scale(power / fact)
    return HBarSeries(ctx, order, coeffs)


class HBarSeries:
    """Truncated hbar-series with y-rational coefficients (t-free)."""

    __slots__ = ("ctx", "order", "coeffs")

    def __init__(self, ctx: Context, order: int, coeffs: list):
        if len(coeffs) != order + 1:
            raise ScalarError("series length mismatch")
        for c in coeffs:
            if c.num.uses_t() or c.den.uses_t():
                raise ScalarError("series coefficient still contains t")
        self.ctx = ctx
        self.order = order
        self.coeffs = list(coeffs)

    @classmethod
    def const(cls, ctx: Context, value, order: int) -> "HBarSeries":
        coeffs = [Scalar.zero(ctx) for _ in range(order + 1)]
        coeffs[0] = Scalar.const(ctx, value)
        return cls(ctx, order, coeffs)

    def __eq__(self, other) -> bool:
        return (isinstance(other, HBarSeries) and self.order == other.order
                and all(a == b for a, b in zip(self.coeffs, other.coeffs)))

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def __add__(self, other: "HBarSeries") -> "HBarSeries":
        n = min(self.order, other.order)
        return HBarSeries(self.ctx, n,
                          [a + b for a, b in zip(self.coeffs, other.coeffs)][:n + 1])

    def __neg__(self) -> "HBarSeries":
        return HBarSeries(self.ctx, self.order, [-c for c in self.coeffs])

    def __sub__(self, other: "HBarSeries") -> "HBarSeries":
        return self + (-other)

    def __mul__(self, other: "HBarSeries") -> "HBarSeries":
        n = min(self.order, other.order)
        out = [Scalar.zero(self.ctx) for _ in range(n + 1)]
        for i, a in enumerate(self.coeffs[:n + 1]):
            if a.is_zero():
                continue
            for j in range(n + 1 - i):
                b = other.coeffs[j]
                if not b.is_zero():
                    out[i + j] = out[i + j] + a * b
        return HBarSeries(self.ctx, n, out)

    def scale(self, value) -> "HBarSeries":
        return HBarSeries(self.ctx, self.order, [c.scale(value) for c in self.coeffs])

    def inverse(self) -> "HBarSeries":
        lead = self.coeffs[0]
        if lead.is_zero():
            raise PoleError("series not invertible: vanishes at hbar = 0")
        inv = [lead.inverse()]
        for n in range(1, self.order + 1):
            acc = Scalar.zero(self.ctx)
            for j in range(1, n + 1):
                if j < len(self.coeffs) and not self.coeffs[j].is_zero():
                    acc = acc + self.coeffs[j] * inv[n - j]
            inv.append(-(lead.inverse()) * acc)
        return HBarSeries(self.ctx, self.order, inv)

    def truncate(self, order: int) -> "HBarSeries":
        if order > self.order:
            raise ScalarError("cannot extend a truncated series")
        return HBarSeries(self.ctx, order, self.coeffs[:order + 1])

    def __repr__(self) -> str:
        parts = []
        for n, c in enumerate(self.coeffs):
            if not c.is_zero():
                parts.append("(%r)*hbar^%d" % (c, n))
        return "HBarSeries(%s)" % (" + ".join(parts) or "0")


# -- randomized helpers (tests use these as an independent cross-check) -----

def random_point(ctx: Context, rng: random.Random) -> tuple:
    tval = Frac(rng.randint(2, 40), rng.randint(41, 80))
    yvals = tuple(Frac(rng.randint(2, 40), rng.randint(41, 80))
                  for _ in range(ctx.nvars))
    return tval, yvals


def probably_equal(a: Scalar, b: Scalar, rng: random.Random, trials: int = 2) -> bool:
    for _ in range(trials):
        tval, yvals = random_point(a.ctx, rng)
        try:
            if a.eval(tval, yvals) != b.eval(tval, yvals):
                return False
        except ZeroDivisionError:
            continue
    return True
