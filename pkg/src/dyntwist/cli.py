"""Command-line driver: load a fixture, run named verification suites, and
emit machine-readable reports with deterministic exit status.

Exit codes: 0 when every selected residual is exactly zero, 1 when any
residual is nonzero (or a solve fails), 2 for input or configuration errors.
The report is written to stdout, and to --out when given. Fan-out over
multiple workers is controlled by the DYNTWIST_WORKERS environment variable;
the default of 1 runs checks sequentially.
"""

import argparse
import itertools
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction as Frac

from . import __version__
from .scalars import PoleError, Scalar, ScalarError
from .cartan import (
    constant_r, kron, mat_eye, mat_mul, mat_sub, spin_module,
    universal_action, weyl_transform,
)
from .dynops import (
    BRAID_PATTERN, BRAID_PATTERN_WEYL, COCYCLE_PATTERN, COCYCLE_PATTERN_WEYL,
    dynamical_r, first_nonzero, residual_braid, residual_cocycle,
    residual_counit,
)
from .algebroid import (
    axiom_suite, coproduct_residual, counit_residuals, diff_mat_witness,
    dressing_residual,
)
from .classical import (
    cdybe_residual, classical_image, coth_r, match_scale, skew_linear_part,
    sl2_lie_data, tensor_witness,
)
from .solver import SolverError, solve_exact, solve_perturbative
from .fixtures import (
    Fixture, FixtureError, SUITE_NAMES, export_element_fixture, frac_text,
    load_fixture, validate_fixture,
)
from .reports import (
    SERIES_SCHEMA, build_report, canonical_json, check_row, content_digest,
    entry_witness, error_report,
)

GAUGE_NOTE = ("identity term normalized to one; non-identity terms carry "
              "matching lowering/raising powers with counit boundary values")


def _mat_witness(mat):
    pos = first_nonzero(mat)
    return None if pos is None else entry_witness(pos)


def _diff_witness(mat):
    pos = diff_mat_witness(mat)
    return None if pos is None else entry_witness(pos)


def _series_witness(mat):
    for i, row in enumerate(mat):
        for j, coeffs in enumerate(row):
            for k, c in enumerate(coeffs):
                if not c.is_zero():
                    return "entry (%d,%d) order %d: %s" % (i, j, k, c.text())
    return None


def _need_rank_one(fx: Fixture, suite: str):
    if fx.cartan.rank != 1:
        raise FixtureError("suite %r needs rank-1 Cartan data" % suite)


def _need_triple(fx: Fixture, suite: str):
    if len(fx.modules) != 3:
        raise FixtureError("suite %r needs three modules" % suite)


def _variant_element(fx: Fixture, variant: str):
    if variant == "weyl":
        return weyl_transform(fx.element, fx.cartan.ctx)
    return fx.element


def _scaled_pattern(pattern, factor: Frac):
    """Rescale every shift amount in a nested shift pattern."""
    out = []
    for side in pattern:
        if isinstance(side, dict):
            out.append({k: Frac(v) * factor for k, v in side.items()})
        else:
            out.append(tuple({k: Frac(v) * factor for k, v in d.items()}
                             for d in side))
    return tuple(out)


def _pattern_factor(fx: Fixture) -> Frac:
    """Shift orientation for the fixture's flow coupling; the stock patterns
    are written for coupling -2."""
    return Frac(fx.coupling) / -2


def _embed_outer(mat, du: int, dv: int, dw: int):
    """Place a two-leg matrix on legs one and three of a triple product."""
    ctx = mat[0][0].ctx
    zero = Scalar.zero(ctx)
    n = du * dv * dw
    out = [[zero for _ in range(n)] for _ in range(n)]
    for ap in range(du):
        for a in range(du):
            for cp in range(dw):
                for c in range(dw):
                    x = mat[ap * dw + cp][a * dw + c]
                    if x.is_zero():
                        continue
                    for b in range(dv):
                        out[(ap * dv + b) * dw + cp][(a * dv + b) * dw + c] = x
    return out


def _rows_ybe(fx: Fixture, variant: str, order: int) -> list:
    _need_rank_one(fx, "ybe")
    if variant != "normal":
        raise FixtureError("suite 'ybe' has no weyl variant")
    ctx = fx.cartan.ctx
    spins = (Frac(1, 2), Frac(1))
    mods = {s: spin_module(fx.cartan, s) for s in spins}
    rows = []
    for a, b, c in itertools.product(spins, repeat=3):
        u, v, w = mods[a], mods[b], mods[c]
        r12 = kron(constant_r(u, v), mat_eye(ctx, w.dim))
        r23 = kron(mat_eye(ctx, u.dim), constant_r(v, w))
        r13 = _embed_outer(constant_r(u, w), u.dim, v.dim, w.dim)
        res = mat_sub(mat_mul(r12, mat_mul(r13, r23)),
                      mat_mul(r23, mat_mul(r13, r12)))
        rows.append(check_row("ybe(%s,%s,%s)" % (a, b, c),
                              _mat_witness(res)))
    return rows


def _rows_qdybe(fx: Fixture, variant: str, order: int) -> list:
    _need_triple(fx, "qdybe")
    elem = _variant_element(fx, variant)
    stock = BRAID_PATTERN_WEYL if variant == "weyl" else BRAID_PATTERN
    pattern = _scaled_pattern(stock, _pattern_factor(fx))
    res = residual_braid(elem, fx.modules, pattern)
    return [check_row("qdybe", _mat_witness(res))]


def _rows_cocycle(fx: Fixture, variant: str, order: int) -> list:
    _need_triple(fx, "cocycle")
    elem = _variant_element(fx, variant)
    stock = COCYCLE_PATTERN_WEYL if variant == "weyl" else COCYCLE_PATTERN
    pattern = _scaled_pattern(stock, _pattern_factor(fx))
    rows = [check_row("cocycle",
                      _mat_witness(residual_cocycle(elem, fx.modules,
                                                    pattern)))]
    left, right = residual_counit(elem, fx.modules[1])
    rows.append(check_row("counit-left", _mat_witness(left)))
    rows.append(check_row("counit-right", _mat_witness(right)))
    balanced = elem.is_zero_weight()
    rows.append(check_row("zero-weight",
                          None if balanced else "unequal leg powers"))
    return rows


def _rows_twistor(fx: Fixture, variant: str, order: int) -> list:
    _need_triple(fx, "twistor")
    if variant != "normal":
        raise FixtureError("suite 'twistor' has no weyl variant")
    rows = [check_row("twistor-coproduct",
                      _diff_witness(coproduct_residual(
                          fx.element, fx.modules, fx.coupling)))]
    left, right = counit_residuals(fx.element, fx.modules[1], fx.coupling)
    rows.append(check_row("twistor-counit-left", _diff_witness(left)))
    rows.append(check_row("twistor-counit-right", _diff_witness(right)))
    return rows


def _rows_axioms(fx: Fixture, variant: str, order: int) -> list:
    _need_triple(fx, "axioms")
    if variant != "normal":
        raise FixtureError("suite 'axioms' has no weyl variant")
    rows = []
    for name, passed, witness in axiom_suite(fx.element, fx.modules,
                                             fx.coupling, order):
        rows.append(check_row(name, None if passed else witness))
    return rows


def _rows_prop33(fx: Fixture, variant: str, order: int) -> list:
    if variant != "normal":
        raise FixtureError("suite 'prop33' has no weyl variant")
    if len(fx.modules) < 2:
        raise FixtureError("suite 'prop33' needs two modules")
    v, w = fx.modules[0], fx.modules[1]
    rows = []
    for gen in ("e", "f", "k"):
        res = dressing_residual(fx.element, v, w, fx.coupling, gen, order)
        rows.append(check_row("dressing-%s@%d" % (gen, order),
                              _series_witness(res)))
    return rows


def _rows_classical(fx: Fixture, variant: str, order: int) -> list:
    _need_rank_one(fx, "classical")
    if variant != "normal":
        raise FixtureError("suite 'classical' has no weyl variant")
    ctx = fx.cartan.ctx
    mod = fx.modules[0]
    data = sl2_lie_data(ctx)
    r = coth_r(data)
    skew = skew_linear_part(dynamical_r(fx.element, mod, mod),
                            (mod.dim, mod.dim))
    _, mismatches = match_scale(skew, classical_image(r, mod, mod))
    witness = None if not mismatches else entry_witness(mismatches[0])
    rows = [check_row("classical-limit", witness)]
    residual = cdybe_residual(r)
    if residual:
        key, text = tensor_witness(residual)
        rows.append(check_row("classical-bracket",
                              "slot %s: %s" % (key, text)))
    else:
        rows.append(check_row("classical-bracket", None))
    return rows


SUITE_RUNNERS = {
    "ybe": _rows_ybe,
    "qdybe": _rows_qdybe,
    "cocycle": _rows_cocycle,
    "twistor": _rows_twistor,
    "axioms": _rows_axioms,
    "prop33": _rows_prop33,
    "classical": _rows_classical,
}


def _suite_task(payload) -> list:
    raw, name, suite, variant, order = payload
    fx = validate_fixture(raw, name=name)
    return SUITE_RUNNERS[suite](fx, variant, order)


def _worker_count() -> int:
    raw = os.environ.get("DYNTWIST_WORKERS", "1")
    try:
        count = int(raw)
    except ValueError:
        raise FixtureError("DYNTWIST_WORKERS must be an integer, got %r" % raw)
    if count < 1:
        raise FixtureError("DYNTWIST_WORKERS must be positive")
    return count


def _run_suites(fx: Fixture, suites: tuple, variant: str, order: int,
                timed: bool):
    rows = []
    timings = {} if timed else None
    workers = _worker_count()
    if workers > 1 and len(suites) > 1 and not timed:
        payloads = [(fx.raw, fx.name, s, variant, order) for s in suites]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for batch in pool.map(_suite_task, payloads):
                rows.extend(batch)
        return rows, None
    for suite in suites:
        start = time.monotonic()
        rows.extend(SUITE_RUNNERS[suite](fx, variant, order))
        if timed:
            timings[suite] = round(time.monotonic() - start, 6)
    return rows, timings


def _emit(document: dict, out_path) -> None:
    text = canonical_json(document)
    sys.stdout.write(text)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as handle:
            handle.write(text)


def cmd_verify(args) -> int:
    command = "verify " + args.suite
    try:
        fx = load_fixture(args.fixture)
        variant = args.variant or fx.variant
        order = args.order if args.order is not None else 3
        if args.suite == "all":
            suites = fx.suite
        else:
            suites = (args.suite,)
            if args.suite not in fx.suite and fx.raw.get("suite"):
                raise FixtureError(
                    "fixture %s does not select suite %r" % (fx.name,
                                                             args.suite))
        rows, timings = _run_suites(fx, suites, variant, order, args.timings)
        report = build_report(command, fx.name, content_digest(fx.raw), rows,
                              timings)
        _emit(report, args.out)
        return report["status"]
    except (FixtureError, ScalarError) as err:
        _emit(error_report(command, str(err)), args.out)
        return 2


def cmd_solve(args) -> int:
    command = "solve " + args.mode
    try:
        fx = load_fixture(args.fixture)
        params = dict(fx.solver)
        if args.order is not None:
            params["order"] = args.order
        if args.degree_cap is not None:
            params["degree_cap"] = args.degree_cap
        if args.mode == "exact":
            result = solve_exact(fx.cartan, levels=params["levels"],
                                 exponent_bound=params["exponent_bound"])
            provenance = {
                "tool": "dyntwist " + __version__,
                "gauge": GAUGE_NOTE,
                "checks": {k: bool(v) for k, v in sorted(result.checks.items())},
                "exponents": [list(map(int, e)) for e in result.exponents],
                "constants": [k.text() for k in result.kappas],
                "candidates_tried": result.tried,
            }
            document = export_element_fixture(fx, result.element, provenance)
        else:
            spins = tuple(Frac(len(m.chi) - 1, 2) for m in fx.modules)
            if len(spins) != 3:
                raise FixtureError("perturbative solve needs three modules")
            result = solve_perturbative(fx.cartan, spins=spins,
                                        order=params["order"],
                                        degree=params["degree"],
                                        degree_cap=params["degree_cap"])
            tables = {}
            for (level, ordk, weight), row in sorted(result.tables.items()):
                key = "%d/%d/%s" % (level, ordk, frac_text(weight))
                tables[key] = {str(d): frac_text(c)
                               for d, c in sorted(row.items())}
            document = {
                "schema": SERIES_SCHEMA,
                "tool": "dyntwist " + __version__,
                "command": command,
                "fixture": {"name": fx.name, "digest": content_digest(fx.raw)},
                "gauge": GAUGE_NOTE,
                "order": result.order,
                "degree": result.degree,
                "slots": ["%d/%s" % (lv, frac_text(wt))
                          for lv, wt in result.slots],
                "tables": tables,
                "free_directions": {str(k): v for k, v in
                                    sorted(result.free_directions.items())},
                "counit_exact": result.counit_exact,
                "zero_weight_exact": result.zero_weight_exact,
                "status": 0,
            }
        _emit(document, args.out)
        return 0
    except SolverError as err:
        sys.stderr.write("solve failed: %s\n" % err)
        return 1
    except (FixtureError, ScalarError) as err:
        sys.stderr.write("configuration error: %s\n" % err)
        return 2


def cmd_expand(args) -> int:
    command = "expand"
    try:
        fx = load_fixture(args.fixture)
        if len(fx.modules) < 2:
            raise FixtureError("expand needs two modules")
        order = args.order if args.order is not None else 3
        mat = universal_action(fx.element, fx.modules[0], fx.modules[1])
        entries = {}
        try:
            for i, row in enumerate(mat):
                for j, entry in enumerate(row):
                    coeffs = entry.series(order).coeffs
                    if any(not c.is_zero() for c in coeffs):
                        entries["%d,%d" % (i, j)] = [c.text() for c in coeffs]
        except PoleError as err:
            document = {
                "schema": SERIES_SCHEMA,
                "tool": "dyntwist " + __version__,
                "command": command,
                "fixture": {"name": fx.name, "digest": content_digest(fx.raw)},
                "order": order,
                "pole": str(err),
                "status": 1,
            }
            _emit(document, args.out)
            return 1
        document = {
            "schema": SERIES_SCHEMA,
            "tool": "dyntwist " + __version__,
            "command": command,
            "fixture": {"name": fx.name, "digest": content_digest(fx.raw)},
            "order": order,
            "entries": entries,
            "status": 0,
        }
        _emit(document, args.out)
        return 0
    except (FixtureError, ScalarError) as err:
        _emit(error_report(command, str(err)), args.out)
        return 2


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyntwist",
        description="exact residual checks for dynamical twists")
    parser.add_argument("--version", action="version",
                        version="dyntwist " + __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--fixture", default="sl2-half",
                        help="built-in fixture name or JSON file path")
    common.add_argument("--order", type=int, default=None,
                        help="truncation order for series-based checks")
    common.add_argument("--out", default=None,
                        help="also write the report to this file")

    verify = sub.add_parser("verify", parents=[common],
                            help="run a verification suite")
    verify.add_argument("suite", choices=SUITE_NAMES + ("all",))
    verify.add_argument("--variant", choices=("normal", "weyl"), default=None,
                        help="shift convention override")
    verify.add_argument("--timings", action="store_true",
                        help="include wall-clock timings in the report")
    verify.set_defaults(func=cmd_verify)

    solve = sub.add_parser("solve", parents=[common],
                           help="construct a twist and certify it")
    solve.add_argument("mode", choices=("exact", "perturbative"))
    solve.add_argument("--degree-cap", type=int, default=None,
                       help="polynomial degree cap for the staged solve")
    solve.set_defaults(func=cmd_solve)

    expand = sub.add_parser("expand", parents=[common],
                            help="series-expand the fixture element action")
    expand.set_defaults(func=cmd_expand)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
