"""JSON run configuration: schema, validation and construction of objects.

Indices inside sigma components are 1-based, as in the usual tensor
notation; everything else (coordinates, curve data) is positional.
"""
from __future__ import annotations

import json

import jsonschema
import numpy as np

from .builders import (
    CircleCurve,
    TwistProfile,
    build_cone,
    build_cylinder,
    build_from_profile,
    build_surface_legendre,
    build_twisted_legendre,
    legendre_curve,
)
from .functions import ScalarFunction
from .legendre import CurveState, LegendreCoefficients, standard_initial_frame


class ConfigError(ValueError):
    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


NUM = {"type": "number"}
POS = {"type": "number", "exclusiveMinimum": 0}
SF = {
    "oneOf": [
        NUM,
        {
            "type": "object",
            "properties": {
                "poly": {"type": "array", "items": NUM},
                "sin": {"type": "array", "items": {"type": "array", "items": NUM, "minItems": 3, "maxItems": 3}},
            },
            "additionalProperties": False,
        },
    ]
}
QUAT = {"type": "array", "items": NUM, "minItems": 4, "maxItems": 4}
HVEC = {"type": "array", "items": QUAT, "minItems": 1}
DOMAIN = {"type": "array", "items": {"type": "array", "items": NUM, "minItems": 2, "maxItems": 2}, "minItems": 1}
INIT = {
    "oneOf": [
        {"const": "standard"},
        {
            "type": "object",
            "properties": {"s": NUM, "z": HVEC, "zp": HVEC, "P": {"type": "array", "items": HVEC}, "accum": HVEC},
            "required": ["z", "zp"],
            "additionalProperties": False,
        },
    ]
}
LEGENDRE_KEYS = {"n": {"type": "integer"}, "alpha": SF, "beta": SF, "gamma": SF, "a": {"type": "array", "items": SF}}
PROFILE = {
    "type": "object",
    "properties": {
        "beta": SF,
        "alpha": {"type": "array", "items": SF, "minItems": 1},
        "ratios": {"type": "array", "items": SF, "minItems": 3, "maxItems": 3},
    },
    "required": ["beta", "alpha", "ratios"],
    "additionalProperties": False,
}
CURVE_SPEC = {
    "type": "object",
    "properties": {
        "circle": {
            "type": "object",
            "properties": {"u": HVEC, "v": HVEC},
            "required": ["u", "v"],
            "additionalProperties": False,
        },
        "legendre": {
            "type": "object",
            "properties": {"alpha": SF, "beta": SF, "gamma": SF, "step": POS},
            "additionalProperties": False,
        },
    },
    "minProperties": 1,
    "maxProperties": 1,
    "additionalProperties": False,
}

IMMERSION_COMMON = {"kind": {"enum": ["cylinder", "twisted_legendre", "surface_legendre", "profile", "cone"]},
                    "domain": DOMAIN,
                    "grid": {"oneOf": [{"type": "integer", "minimum": 2}, {"type": "array", "items": {"type": "integer", "minimum": 2}}]},
                    "grid_step": POS,
                    "f_min": POS}
KIND_KEYS = {
    "cylinder": ({"lambda": {"type": "array", "items": SF, "minItems": 3, "maxItems": 3},
                  "rulings": {"type": "array", "items": HVEC}, "D0": HVEC, "Dp0": HVEC}, ["lambda"]),
    "twisted_legendre": ({**LEGENDRE_KEYS, "b": SF, "init": INIT}, ["n", "b"]),
    "surface_legendre": ({"alpha": SF, "beta": SF, "gamma": SF, "b": SF, "init": INIT}, ["b"]),
    "profile": ({"profile": PROFILE, "init": INIT}, ["profile"]),
    "cone": ({"scale": {"oneOf": [SF, {"type": "array", "items": SF, "minItems": 4, "maxItems": 4}]},
              "curve": CURVE_SPEC, "quat_dim": {"type": "integer", "minimum": 1}}, ["scale", "curve"]),
}


def _immersion_schema():
    all_props = dict(IMMERSION_COMMON)
    for props, _ in KIND_KEYS.values():
        all_props.update(props)
    branches = []
    for kind, (props, req) in KIND_KEYS.items():
        allowed = sorted(set(IMMERSION_COMMON) | set(props))
        branches.append(
            {
                "if": {"properties": {"kind": {"const": kind}}, "required": ["kind"]},
                "then": {"required": req, "propertyNames": {"enum": allowed}},
            }
        )
    return {"type": "object", "properties": all_props, "required": ["kind", "domain"], "additionalProperties": False, "allOf": branches}


SCHEMA = {
    "type": "object",
    "properties": {
        "curve": {
            "type": "object",
            "properties": {**LEGENDRE_KEYS, "b": SF, "s_end": NUM, "step": POS, "init": INIT,
                           "tolerance": POS, "renormalize": {"type": "boolean"}},
            "required": ["n", "s_end", "step"],
            "additionalProperties": False,
        },
        "immersion": _immersion_schema(),
        "verify": {
            "type": "object",
            "properties": {
                "properties": {"type": "array", "items": {"type": "string"}},
                "tolerances": {"type": "object", "additionalProperties": POS},
                "fd_step": POS,
                "codazzi_step": POS,
                "points": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
                "margin": {"type": "number", "minimum": 0},
                "strict_paper_mode": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "structeq": {
            "type": "object",
            "properties": {
                "profile": PROFILE,
                "domain": DOMAIN,
                "points": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
                "fd_step": POS,
                "tolerances": {"type": "object", "additionalProperties": POS},
                "strict_paper_mode": {"type": "boolean"},
                "sigma": {
                    "type": "object",
                    "properties": {
                        "components": {
                            "type": "array",
                            "items": {
                                "type": "object",
                                "properties": {
                                    "i": {"type": "integer", "minimum": 1, "maximum": 3},
                                    "a": {"type": "integer", "minimum": 1},
                                    "b": {"type": "integer", "minimum": 1},
                                    "c": {"type": "integer", "minimum": 1},
                                    "fn": SF,
                                    "var": {"type": "integer", "minimum": 1},
                                },
                                "required": ["i", "a", "b", "c", "fn"],
                                "additionalProperties": False,
                            },
                        }
                    },
                    "required": ["components"],
                    "additionalProperties": False,
                },
            },
            "required": ["profile", "domain"],
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {"dir": {"type": "string"}, "points": {"type": "boolean"}, "derivatives": {"type": "boolean"}},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


def validate(config) -> None:
    """Raise ConfigError listing every schema violation with its path."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    problems = []
    for err in sorted(validator.iter_errors(config), key=lambda e: list(map(str, e.absolute_path))):
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        problems.append(f"{path}: {err.message}")
    if problems:
        raise ConfigError(problems)


def load(path) -> dict:
    try:
        with open(path) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    validate(config)
    return config


def _sf(data, default=0.0):
    return ScalarFunction.from_json(default if data is None else data)


def _hvec(data) -> np.ndarray:
    return np.asarray(data, float).reshape(-1)


def coefficients(section, n=None) -> LegendreCoefficients:
    n = section.get("n", 2) if n is None else n
    a = section.get("a", [0.0] * max(n - 2, 0))
    try:
        return LegendreCoefficients(
            _sf(section.get("alpha")), _sf(section.get("beta")), _sf(section.get("gamma")), tuple(_sf(f) for f in a), n
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def initial_state(data, n) -> CurveState:
    if data is None or data == "standard":
        return standard_initial_frame(n)
    P = tuple(_hvec(p) for p in data.get("P", []))
    acc = _hvec(data["accum"]) if "accum" in data else None
    state = CurveState(float(data.get("s", 0.0)), _hvec(data["z"]), _hvec(data["zp"]), P, acc)
    if state.n != n or len(P) != n - 2:
        raise ConfigError(f"initial state does not match n={n}")
    return state


def profile(data) -> TwistProfile:
    return TwistProfile(_sf(data["beta"]), tuple(_sf(a) for a in data["alpha"]), tuple(_sf(r) for r in data["ratios"]))


def build_immersion(section, strict: bool = False):
    kind = section["kind"]
    dom = section["domain"]
    step = section.get("grid_step", 1e-3)
    f_min = section.get("f_min", 1e-6)
    if kind == "cylinder":
        return build_cylinder(
            [_sf(l) for l in section["lambda"]],
            dom,
            rulings=[_hvec(r) for r in section["rulings"]] if "rulings" in section else None,
            D0=_hvec(section["D0"]) if "D0" in section else None,
            Dp0=_hvec(section["Dp0"]) if "Dp0" in section else None,
            grid_step=step,
        )
    if kind == "twisted_legendre":
        n = section["n"]
        return build_twisted_legendre(
            coefficients(section, n), _sf(section["b"]), dom, init=initial_state(section.get("init"), n),
            grid_step=step, f_min=f_min,
        )
    if kind == "surface_legendre":
        return build_surface_legendre(
            _sf(section["b"]), coefficients(section, 2), dom, init=initial_state(section.get("init"), 2), grid_step=step
        )
    if kind == "profile":
        prof = profile(section["profile"])
        return build_from_profile(
            prof, dom, init=initial_state(section.get("init"), prof.n), grid_step=step, strict=strict, f_min=f_min
        )
    if kind == "cone":
        sc = section["scale"]
        scale = [_sf(c) for c in sc] if isinstance(sc, list) else [_sf(sc)]
        quat_dim = section.get("quat_dim", 2)
        cspec = section["curve"]
        if "circle" in cspec:
            curve = CircleCurve(_hvec(cspec["circle"]["u"]), _hvec(cspec["circle"]["v"]))
            if curve.u.size != 4 * quat_dim or curve.v.size != 4 * quat_dim:
                raise ConfigError(f"circle vectors must lie in H^{quat_dim}")
        else:
            leg = cspec["legendre"]
            coeffs = LegendreCoefficients(_sf(leg.get("alpha")), _sf(leg.get("beta")), _sf(leg.get("gamma")), (), 2)
            lo, hi = dom[1]
            curve = legendre_curve(coeffs, lo, hi, leg.get("step", 1e-3))
            quat_dim = 2
        return build_cone(scale, curve, dom, quat_dim=quat_dim)
    raise ConfigError(f"unknown immersion kind {kind!r}")


def sigma_spec(section, prof):
    from .structeq import SigmaComponent, SigmaSpec

    if "sigma" not in section:
        return SigmaSpec.canonical(prof)
    comps = {}
    n = prof.n
    for c in section["sigma"]["components"]:
        key = (c["i"] - 1, c["a"] - 1, c["b"] - 1, c["c"] - 1)
        var = c.get("var", 1) - 1
        if max(key[1:]) >= n or var >= n:
            raise ConfigError(f"sigma component {c} out of range for n={n}")
        comps[key] = SigmaComponent(_sf(c["fn"]), var)
    try:
        return SigmaSpec(n, comps)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
