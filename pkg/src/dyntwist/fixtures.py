"""Fixture files: validated descriptions of Cartan data, modules, universal
elements, and solver parameters.

A fixture is a JSON object. Validation is strict: every level rejects keys
outside its schema, so a typo fails loudly before any computation starts.
Built-in fixtures go through the same validation path as files.
"""

import json
from dataclasses import dataclass
from fractions import Fraction as Frac

from .scalars import ScalarError
from .cartan import (
    AffineExp, CartanData, CartanFactor, MonoTemplate, UniversalElement,
    UniversalTerm, WeightModule, identity_element, rank2_cartan, sl2_cartan,
    spin_module,
)
from .dynops import dynamical_twist, reflected_twist

FIXTURE_SCHEMA = "dyntwist-fixture-v1"

SUITE_NAMES = ("ybe", "qdybe", "cocycle", "twistor", "axioms", "prop33",
               "classical")

SOLVER_DEFAULTS = {"order": 6, "degree": 2, "degree_cap": 8,
                   "levels": 2, "exponent_bound": 6}


class FixtureError(ScalarError):
    """Raised for malformed fixture content; maps to configuration exit."""


def _check_keys(obj: dict, where: str, required: tuple, optional: tuple = ()):
    if not isinstance(obj, dict):
        raise FixtureError("%s must be an object" % where)
    for key in required:
        if key not in obj:
            raise FixtureError("%s is missing %r" % (where, key))
    for key in obj:
        if key not in required and key not in optional:
            raise FixtureError("%s has unknown field %r" % (where, key))


def parse_frac(value, where: str) -> Frac:
    if isinstance(value, bool):
        raise FixtureError("%s must be a rational, got a boolean" % where)
    if isinstance(value, int):
        return Frac(value)
    if isinstance(value, str):
        try:
            return Frac(value)
        except (ValueError, ZeroDivisionError):
            raise FixtureError("%s is not a rational: %r" % (where, value))
    raise FixtureError("%s must be an integer or a fraction string" % where)


def frac_text(value: Frac) -> str:
    return str(Frac(value))


def _parse_int(value, where: str, minimum=0) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise FixtureError("%s must be an integer" % where)
    if minimum is not None and value < minimum:
        raise FixtureError("%s must be at least %d" % (where, minimum))
    return value


# -- universal element serialization ------------------------------------------


def _affine_to_data(exp: AffineExp) -> dict:
    return {"const": frac_text(exp.const),
            "mu": [frac_text(c) for c in exp.mu],
            "nu": [frac_text(c) for c in exp.nu]}


def _affine_from_data(data, nvars: int, where: str) -> AffineExp:
    _check_keys(data, where, ("const", "mu", "nu"))
    mu, nu = data["mu"], data["nu"]
    if not isinstance(mu, list) or not isinstance(nu, list):
        raise FixtureError("%s weight rows must be arrays" % where)
    if len(mu) != nvars or len(nu) != nvars:
        raise FixtureError("%s weight rows must have length %d" % (where, nvars))
    return AffineExp(parse_frac(data["const"], where + ".const"),
                     tuple(parse_frac(c, where + ".mu") for c in mu),
                     tuple(parse_frac(c, where + ".nu") for c in nu))


def _mono_to_data(mono: MonoTemplate) -> dict:
    return {"coeff": frac_text(mono.coeff),
            "t": _affine_to_data(mono.t_exp),
            "y": list(mono.y_exps)}


def _mono_from_data(data, nvars: int, where: str) -> MonoTemplate:
    _check_keys(data, where, ("coeff", "t", "y"))
    y = data["y"]
    if not isinstance(y, list) or len(y) != nvars:
        raise FixtureError("%s.y must be an array of length %d" % (where, nvars))
    exps = tuple(_parse_int(e, where + ".y", minimum=None) for e in y)
    return MonoTemplate(parse_frac(data["coeff"], where + ".coeff"),
                        _affine_from_data(data["t"], nvars, where + ".t"), exps)


def _factor_to_data(factor: CartanFactor) -> dict:
    return {"num": [_mono_to_data(m) for m in factor.num],
            "den": [[_mono_to_data(m) for m in fac] for fac in factor.den]}


def _factor_from_data(data, nvars: int, where: str) -> CartanFactor:
    _check_keys(data, where, ("num", "den"))
    num, den = data["num"], data["den"]
    if not isinstance(num, list) or not num:
        raise FixtureError("%s.num must be a nonempty array" % where)
    if not isinstance(den, list):
        raise FixtureError("%s.den must be an array of factors" % where)
    for fac in den:
        if not isinstance(fac, list) or not fac:
            raise FixtureError("%s.den factors must be nonempty arrays" % where)
    return CartanFactor(
        tuple(_mono_from_data(m, nvars, where + ".num") for m in num),
        tuple(tuple(_mono_from_data(m, nvars, where + ".den") for m in fac)
              for fac in den))


def element_to_data(elem: UniversalElement) -> dict:
    return {"terms": [{"lower": t.lower, "upper": t.upper,
                       "factor": _factor_to_data(t.factor)}
                      for t in elem.terms]}


def _terms_from_data(terms, nvars: int, where: str) -> tuple:
    if not isinstance(terms, list) or not terms:
        raise FixtureError("%s must be a nonempty array" % where)
    out = []
    for i, item in enumerate(terms):
        spot = "%s[%d]" % (where, i)
        _check_keys(item, spot, ("lower", "upper", "factor"))
        out.append(UniversalTerm(
            _parse_int(item["lower"], spot + ".lower"),
            _parse_int(item["upper"], spot + ".upper"),
            _factor_from_data(item["factor"], nvars, spot + ".factor")))
    return tuple(out)


_FAMILIES = {"reflected": reflected_twist, "engine": dynamical_twist}


def _perturb(elem: UniversalElement, ctx, level: int) -> UniversalElement:
    """Multiply the coefficient of every term at the given level by (1 + y_1)."""
    bump = (MonoTemplate(Frac(1), AffineExp(Frac(0), (Frac(0),) * ctx.nvars,
                                            (Frac(0),) * ctx.nvars),
                         (0,) * ctx.nvars),
            MonoTemplate(Frac(1), AffineExp(Frac(0), (Frac(0),) * ctx.nvars,
                                            (Frac(0),) * ctx.nvars),
                         (1,) + (0,) * (ctx.nvars - 1)))
    hit = False
    terms = []
    for t in elem.terms:
        if t.lower == level:
            terms.append(UniversalTerm(t.lower, t.upper,
                                       t.factor.scale_templates(bump)))
            hit = True
        else:
            terms.append(t)
    if not hit:
        raise FixtureError("perturbation level %d has no term" % level)
    return UniversalElement(tuple(terms))


def element_from_data(data, ctx, where: str = "element") -> UniversalElement:
    _check_keys(data, where, (), ("family", "levels", "terms", "perturb_level"))
    family = data.get("family")
    terms = data.get("terms")
    if (family is None) == (terms is None):
        raise FixtureError("%s needs exactly one of 'family' or 'terms'" % where)
    if family is not None:
        if family == "identity":
            if "levels" in data:
                raise FixtureError("%s: identity family has no levels" % where)
            elem = identity_element(ctx)
        elif family in _FAMILIES:
            levels = _parse_int(data.get("levels", 4), where + ".levels", 1)
            elem = _FAMILIES[family](ctx, levels)
        else:
            raise FixtureError("%s.family unknown: %r" % (where, family))
    else:
        if "levels" in data:
            raise FixtureError("%s: explicit terms carry no levels" % where)
        elem = UniversalElement(_terms_from_data(terms, ctx.nvars,
                                                 where + ".terms"))
    if "perturb_level" in data:
        level = _parse_int(data["perturb_level"], where + ".perturb_level", 1)
        elem = _perturb(elem, ctx, level)
    return elem


# -- fixture objects -----------------------------------------------------------


@dataclass(frozen=True)
class Fixture:
    name: str
    raw: dict
    cartan: CartanData
    modules: tuple
    element: UniversalElement
    coupling: Frac
    variant: str
    suite: tuple
    solver: dict


def _cartan_from_data(data) -> CartanData:
    _check_keys(data, "cartan", ("rank",), ("root",))
    rank = _parse_int(data["rank"], "cartan.rank", 1)
    root = _parse_int(data.get("root", 2), "cartan.root", 1)
    if rank == 1:
        return sl2_cartan(root)
    if rank == 2:
        return rank2_cartan(root)
    raise FixtureError("cartan.rank must be 1 or 2")


def _module_from_data(data, cartan: CartanData, where: str) -> WeightModule:
    _check_keys(data, where, ("spin",), ("root",))
    spin = parse_frac(data["spin"], where + ".spin")
    if spin < 0 or (2 * spin).denominator != 1:
        raise FixtureError("%s.spin must be a non-negative half-integer" % where)
    index = _parse_int(data.get("root", 0), where + ".root")
    if index >= len(cartan.roots):
        raise FixtureError("%s.root out of range" % where)
    return spin_module(cartan, spin, index)


def _solver_from_data(data) -> dict:
    if data is None:
        return dict(SOLVER_DEFAULTS)
    _check_keys(data, "solver", (), tuple(SOLVER_DEFAULTS))
    out = dict(SOLVER_DEFAULTS)
    for key, value in data.items():
        out[key] = _parse_int(value, "solver." + key, minimum=0)
    return out


def validate_fixture(data, name: str = "") -> Fixture:
    _check_keys(data, "fixture", ("schema", "cartan", "modules", "element",
                                  "coupling"),
                ("name", "variant", "suite", "solver", "provenance"))
    if data["schema"] != FIXTURE_SCHEMA:
        raise FixtureError("unsupported schema %r" % (data["schema"],))
    cartan = _cartan_from_data(data["cartan"])
    mods = data["modules"]
    if not isinstance(mods, list) or len(mods) not in (2, 3):
        raise FixtureError("modules must list two or three module specs")
    modules = tuple(_module_from_data(m, cartan, "modules[%d]" % i)
                    for i, m in enumerate(mods))
    element = element_from_data(data["element"], cartan.ctx)
    coupling = parse_frac(data["coupling"], "coupling")
    variant = data.get("variant", "normal")
    if variant not in ("normal", "weyl"):
        raise FixtureError("variant must be 'normal' or 'weyl'")
    suite = data.get("suite", list(SUITE_NAMES))
    if not isinstance(suite, list) or not suite:
        raise FixtureError("suite must be a nonempty array")
    for item in suite:
        if item not in SUITE_NAMES:
            raise FixtureError("suite has unknown check %r" % (item,))
    if "provenance" in data and not isinstance(data["provenance"], dict):
        raise FixtureError("provenance must be an object")
    fixture_name = data.get("name", name) or "unnamed"
    if not isinstance(fixture_name, str):
        raise FixtureError("name must be a string")
    return Fixture(name=fixture_name, raw=data, cartan=cartan,
                   modules=modules, element=element, coupling=coupling,
                   variant=variant, suite=tuple(suite),
                   solver=_solver_from_data(data.get("solver")))


# -- built-in fixtures ---------------------------------------------------------

_SPIN_HALF = {"spin": "1/2"}
_SPIN_ONE = {"spin": "1"}

BUILTIN_FIXTURES = {
    "sl2-half": {
        "schema": FIXTURE_SCHEMA,
        "cartan": {"rank": 1},
        "modules": [_SPIN_HALF, _SPIN_HALF, _SPIN_HALF],
        "element": {"family": "reflected", "levels": 4},
        "coupling": "2",
    },
    "sl2-mixed": {
        "schema": FIXTURE_SCHEMA,
        "cartan": {"rank": 1},
        "modules": [_SPIN_HALF, _SPIN_ONE, _SPIN_HALF],
        "element": {"family": "reflected", "levels": 4},
        "coupling": "2",
    },
    "sl2-engine": {
        "schema": FIXTURE_SCHEMA,
        "cartan": {"rank": 1},
        "modules": [_SPIN_HALF, _SPIN_HALF, _SPIN_HALF],
        "element": {"family": "engine", "levels": 4},
        "coupling": "-2",
    },
    "sl2-weyl": {
        "schema": FIXTURE_SCHEMA,
        "cartan": {"rank": 1},
        "modules": [_SPIN_HALF, _SPIN_HALF, _SPIN_HALF],
        "element": {"family": "engine", "levels": 4},
        "coupling": "-2",
        "variant": "weyl",
        "suite": ["qdybe", "cocycle"],
    },
    "sl2-perturbed": {
        "schema": FIXTURE_SCHEMA,
        "cartan": {"rank": 1},
        "modules": [_SPIN_HALF, _SPIN_HALF, _SPIN_HALF],
        "element": {"family": "reflected", "levels": 4, "perturb_level": 1},
        "coupling": "2",
    },
    "rank2-flow": {
        "schema": FIXTURE_SCHEMA,
        "cartan": {"rank": 2},
        "modules": [_SPIN_HALF, _SPIN_ONE, _SPIN_HALF],
        "element": {"family": "identity"},
        "coupling": "2",
        "suite": ["twistor"],
    },
}


def load_fixture(ref: str) -> Fixture:
    """Resolve a built-in fixture name or a JSON file path."""
    if ref in BUILTIN_FIXTURES:
        return validate_fixture(BUILTIN_FIXTURES[ref], name=ref)
    try:
        with open(ref, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as err:
        raise FixtureError("cannot read fixture %r: %s" % (ref, err))
    except json.JSONDecodeError as err:
        raise FixtureError("fixture %r is not valid JSON: %s" % (ref, err))
    return validate_fixture(data, name=ref)


def export_element_fixture(fixture: Fixture, elem: UniversalElement,
                           provenance: dict) -> dict:
    """Fixture document for a solved element, loadable by load_fixture."""
    data = {
        "schema": FIXTURE_SCHEMA,
        "name": fixture.name + "/solved",
        "cartan": dict(fixture.raw["cartan"]),
        "modules": [dict(m) for m in fixture.raw["modules"]],
        "element": element_to_data(elem),
        "coupling": fixture.raw["coupling"],
        "provenance": provenance,
    }
    validate_fixture(data)
    return data
