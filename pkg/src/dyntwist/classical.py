"""Classical layer: the coth dynamical r-matrix over the exact coefficient
field, its structure-equation residual, and hbar-linearization of exact
R-matrices.

Lie data is a plain structure-constant table with an invariant pairing and
a marked Cartan frame; the frame indices line up with the torus coordinates
lambda_i, so derivatives in the alternation term know which basis leg they
pair with.
"""

from __future__ import annotations

import itertools
from fractions import Fraction as Frac

from .scalars import Context, Scalar, ScalarError
from .cartan import WeightModule, flip_matrix, mat_mul

# root entry: (raising index, lowering index, pairing exponents) with
# e^{<<alpha, lambda>>} = prod_i y_i^{exps[i]}


class LieData:
    """Finite-dimensional Lie algebra with structure constants, an
    invariant pairing, and a Cartan frame aligned with the coordinates."""

    def __init__(self, ctx: Context, labels, brackets, pairing, cartan,
                 roots, check: bool = True):
        self.ctx = ctx
        self.labels = tuple(labels)
        self.brackets = {key: {k: Frac(v) for k, v in val.items() if v}
                         for key, val in brackets.items()}
        self.pairing = tuple(tuple(Frac(v) for v in row) for row in pairing)
        self.cartan = tuple(cartan)
        self.roots = tuple(roots)
        if len(self.cartan) != ctx.nvars:
            raise ScalarError("Cartan frame size must match coordinate count")
        if check:
            _check_lie(self)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def bracket(self, i: int, j: int) -> dict:
        """[x_i, x_j] as a sparse coefficient map."""
        if (i, j) in self.brackets:
            return self.brackets[(i, j)]
        if (j, i) in self.brackets:
            return {k: -v for k, v in self.brackets[(j, i)].items()}
        return {}

    def weight(self, frame: int, i: int) -> Frac:
        """Eigenvalue of ad(h_frame) on basis vector i."""
        b = self.bracket(self.cartan[frame], i)
        if any(k != i for k in b):
            raise ScalarError("basis vector %d is not a weight vector" % i)
        return b.get(i, Frac(0))


def _check_lie(data: LieData) -> None:
    n = data.dim
    for i in range(n):
        for j in range(n):
            bij = data.bracket(i, j)
            bji = data.bracket(j, i)
            if {k: -v for k, v in bij.items()} != bji:
                raise ScalarError("bracket not antisymmetric at (%d,%d)" % (i, j))
    for i, j, k in itertools.product(range(n), repeat=3):
        acc = {}
        for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
            for m, v in data.bracket(a, b).items():
                for p, w in data.bracket(m, c).items():
                    acc[p] = acc.get(p, Frac(0)) + v * w
        if any(acc.values()):
            raise ScalarError("Jacobi fails on (%d,%d,%d)" % (i, j, k))
    for i, j, k in itertools.product(range(n), repeat=3):
        left = sum(data.pairing[m][k] * v
                   for m, v in data.bracket(i, j).items())
        right = sum(data.pairing[i][m] * v
                    for m, v in data.bracket(j, k).items())
        if left != right:
            raise ScalarError("pairing not invariant on (%d,%d,%d)" % (i, j, k))


def sl2_lie_data(ctx: Context, scale: int = 2, check: bool = True) -> LieData:
    """Rank-1 fixture: basis (e, f, h); the pairing exponent of the single
    positive root against the coordinate is `scale`."""
    brackets = {
        (0, 1): {2: Frac(1)},
        (2, 0): {0: Frac(2)},
        (2, 1): {1: Frac(-2)},
    }
    s = Frac(scale)
    pairing = ((Frac(0), s / 2, Frac(0)),
               (s / 2, Frac(0), Frac(0)),
               (Frac(0), Frac(0), s))
    return LieData(ctx, ("e", "f", "h"), brackets, pairing, (2,),
                   ((0, 1, (scale,)),), check=check)


def abelian_lie_data(ctx: Context) -> LieData:
    """One Cartan element, no roots."""
    return LieData(ctx, ("h",), {}, ((Frac(1),),), (0,) * ctx.nvars, ())


class ClassicalDynR:
    """Skew zero-weight element of g (x) g with exact function entries."""

    def __init__(self, data: LieData, entries: dict, check: bool = True):
        self.data = data
        self.entries = {k: v for k, v in entries.items() if not v.is_zero()}
        if check:
            for (a, b), v in self.entries.items():
                back = self.entries.get((b, a))
                if back is None or not (back + v).is_zero():
                    raise ScalarError("entry (%d,%d) is not skew" % (a, b))
                for frame in range(len(data.cartan)):
                    if data.weight(frame, a) + data.weight(frame, b):
                        raise ScalarError(
                            "entry (%d,%d) moves weight" % (a, b))

    def is_zero(self) -> bool:
        return not self.entries


def coth_r(data: LieData, scale=1) -> ClassicalDynR:
    """Sum over positive roots of (x_a + 1)/(x_a - 1) on the raising wedge
    lowering pair, x_a the pairing monomial of the root; `scale` rescales
    the root-vector normalization."""
    ctx = data.ctx
    entries = {}
    for plus, minus, exps in data.roots:
        for e in exps:
            if Frac(e).denominator != 1:
                raise ScalarError("root pairing exponent %s is not integral"
                                  % (e,))
        x = Scalar.one(ctx)
        for i, e in enumerate(exps):
            x = x * Scalar.y(ctx, i, int(e))
        coeff = ((x + Scalar.one(ctx)) / (x - Scalar.one(ctx))).scale(scale)
        entries[(plus, minus)] = entries.get((plus, minus),
                                             Scalar.zero(ctx)) + coeff
        entries[(minus, plus)] = entries.get((minus, plus),
                                             Scalar.zero(ctx)) - coeff
    return ClassicalDynR(data, entries)


def _tensor_add(acc: dict, key: tuple, val: Scalar) -> None:
    acc[key] = acc[key] + val if key in acc else val


def cdybe_residual(r: ClassicalDynR) -> dict:
    """Alternated derivative term plus the three pair brackets, as a sparse
    tensor over basis triples; empty means the equation holds."""
    data = r.data
    acc = {}
    for frame in range(data.ctx.nvars):
        h = data.cartan[frame]
        for (a, b), v in r.entries.items():
            dv = v.derive(frame)
            if dv.is_zero():
                continue
            _tensor_add(acc, (h, a, b), dv)
            _tensor_add(acc, (b, h, a), dv)
            _tensor_add(acc, (a, b, h), dv)
    for (a, b), v in r.entries.items():
        for (c, d), w in r.entries.items():
            vw = v * w
            for k, s in data.bracket(a, c).items():
                _tensor_add(acc, (k, b, d), vw.scale(s))
            for k, s in data.bracket(b, c).items():
                _tensor_add(acc, (a, k, d), vw.scale(s))
            for k, s in data.bracket(b, d).items():
                _tensor_add(acc, (a, c, k), vw.scale(s))
    return {k: v for k, v in acc.items() if not v.is_zero()}


def alternated_cartan_tensor(data: LieData) -> dict:
    """Signed alternation of h (x) e (x) f over the first root triple; the
    residual of the calibrated rank-1 fixture is exactly this tensor."""
    plus, minus, _ = data.roots[0]
    h = data.cartan[0]
    one = Scalar.one(data.ctx)
    out = {}
    for sign, key in (
            (1, (h, plus, minus)), (-1, (h, minus, plus)),
            (1, (minus, h, plus)), (-1, (plus, h, minus)),
            (1, (plus, minus, h)), (-1, (minus, plus, h))):
        out[key] = one.scale(sign)
    return out


def tensor_sub(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out[k] - v if k in out else v.scale(-1)
    return {k: v for k, v in out.items() if not v.is_zero()}


def tensor_witness(t: dict):
    """Smallest-key nonzero entry as (key, text), or None."""
    for k in sorted(t):
        return (k, t[k].reduced().text())
    return None


# -- hbar-linearization of exact operators ---------------------------------------


def linear_coefficient(mat: list) -> list:
    """First-order coefficient of an operator matrix whose zeroth order is
    the identity; raises if the constant term differs or an entry has a
    pole at the classical point."""
    ctx = mat[0][0].ctx
    n = len(mat)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            ser = mat[i][j].series(1)
            want = Scalar.one(ctx) if i == j else Scalar.zero(ctx)
            if not (ser.coeffs[0] - want).is_zero():
                raise ScalarError(
                    "constant term at (%d,%d) is not the identity" % (i, j))
            row.append(ser.coeffs[1])
        out.append(row)
    return out


def skew_linear_part(mat: list, dims: tuple) -> list:
    """Skew half of the first-order coefficient under leg swap."""
    if dims[0] != dims[1]:
        # swap conjugation only antisymmetrizes when both legs agree
        raise ScalarError("skew extraction needs equal leg dimensions")
    ctx = mat[0][0].ctx
    lin = linear_coefficient(mat)
    p = flip_matrix(ctx, *dims)
    swapped = mat_mul(p, mat_mul(lin, p))
    return [[(a - b).scale(Frac(1, 2)) for a, b in zip(ra, rb)]
            for ra, rb in zip(lin, swapped)]


def classical_image(r: ClassicalDynR, v: WeightModule, w: WeightModule) -> list:
    """Representation matrix of a classical element on two module legs; the
    module's triple matrices are evaluated at the classical point."""
    ctx = v.ctx
    ones = (Frac(1),) * ctx.nvars
    reps = []
    for mod in (v, w):
        table = {}
        for idx, label in enumerate(r.data.labels):
            if label == "e":
                table[idx] = [[x.eval(1, ones) for x in row]
                              for row in mod.raise_mat]
            elif label == "f":
                table[idx] = [[x.eval(1, ones) for x in row]
                              for row in mod.lower_mat]
            elif label == "h":
                table[idx] = [[mod.chi[i] if i == j else Frac(0)
                               for j in range(mod.dim)] for i in range(mod.dim)]
            else:
                raise ScalarError("no representation matrix for %r" % label)
        reps.append(table)
    n = v.dim * w.dim
    out = [[Scalar.zero(ctx) for _ in range(n)] for _ in range(n)]
    for (a, b), coeff in r.entries.items():
        ra, rb = reps[0][a], reps[1][b]
        for i, i2 in itertools.product(range(v.dim), repeat=2):
            if not ra[i2][i]:
                continue
            for j, j2 in itertools.product(range(w.dim), repeat=2):
                if not rb[j2][j]:
                    continue
                val = coeff.scale(ra[i2][i] * rb[j2][j])
                out[i2 * w.dim + j2][i * w.dim + j] = \
                    out[i2 * w.dim + j2][i * w.dim + j] + val
    return out


def match_scale(got: list, want: list):
    """Single calibration constant c with got = c * want, fitted on the
    first nonzero reference entry and enforced everywhere; returns
    (constant, mismatch witnesses)."""
    ctx = got[0][0].ctx
    const = None
    for i, row in enumerate(want):
        for j, x in enumerate(row):
            if not x.is_zero():
                const = got[i][j] / x
                break
        if const is not None:
            break
    if const is None:
        const = Scalar.one(ctx)
    bad = []
    for i, row in enumerate(want):
        for j, x in enumerate(row):
            diff = got[i][j] - const * x
            if not diff.is_zero():
                bad.append((i, j, diff.reduced().text()))
    return const, bad
