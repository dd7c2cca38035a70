"""JSON schemas for CLI input documents (draft 2020-12)."""

from __future__ import annotations

import jsonschema

from .errors import SchemaError

NUMBER = {"type": "number"}
NUMBERS = {"type": "array", "items": NUMBER}
INT_VEC = {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1}

FUNCTION = {
    "type": "object",
    "description": "expr | builtin | tabulated | sum | prod | pseudopoly | synth | spline | fv1 | tensor_fv | slice",
    "anyOf": [{"required": [k]} for k in (
        "expr", "builtin", "tabulated", "sum", "prod", "pseudopoly", "synth", "spline", "fv1",
        "tensor_fv", "slice")],
    "properties": {
        "expr": {"type": "string"},
        "builtin": {"type": "string"},
        "params": NUMBERS,
        "arity": {"type": "integer", "minimum": 1},
        "tabulated": {"type": "object", "required": ["nodes", "values"],
                      "properties": {"nodes": {"type": "array", "items": NUMBERS}, "values": NUMBERS}},
        "sum": {"type": "array", "minItems": 1,
                "items": {"type": "object", "required": ["f"], "properties": {"w": NUMBER}}},
    },
}

MEASURE = {
    "type": "object",
    "anyOf": [{"required": ["atoms"]}, {"required": ["uniform"]}, {"required": ["binomial"]}],
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "atoms": {"type": "array", "items": {
            "type": "object", "required": ["x", "w"],
            "properties": {"x": {"anyOf": [NUMBER, NUMBERS]}, "w": NUMBER}}},
        "uniform": {"type": "object", "required": ["a", "b"],
                    "properties": {"a": NUMBER, "b": NUMBER, "m": {"type": "integer", "minimum": 2},
                                   "panels": {"type": "integer", "minimum": 1}}},
        "binomial": {"type": "object", "required": ["n", "p"],
                     "properties": {"n": {"type": "integer", "minimum": 0},
                                    "p": {"type": "number", "minimum": 0, "maximum": 1}}},
    },
}

BOX = {
    "type": "object", "required": ["axes"],
    "properties": {"axes": {"type": "array", "minItems": 1, "items": {
        "type": "object", "required": ["lo", "hi"], "properties": {"lo": NUMBER, "hi": NUMBER}}}},
}

REPRESENTATION = {
    "type": "object", "required": ["n", "alpha"],
    "properties": {
        "n": INT_VEC,
        "alpha": NUMBERS,
        "W": {"anyOf": [{"type": "null"}, FUNCTION]},
        "parts": {"type": "object", "patternProperties": {"^[Lr]+$": MEASURE},
                  "additionalProperties": False},
        "mode": {"enum": ["canonical", "permissive"]},
    },
}

POINTS = {"type": "array", "items": NUMBERS}
RECTS = {"type": "array", "items": {"type": "array", "items": {
    "type": "array", "items": NUMBER, "minItems": 2, "maxItems": 2}}}


def _obj(required, **props):
    return {"type": "object", "required": list(required), "properties": props}


SCHEMAS = {
    "divdiff": _obj(["f", "nodes"], f=FUNCTION, nodes={"type": "array", "items": NUMBERS, "minItems": 1},
                    method={"enum": ["nested", "expanded", "both"]}, axis_order=INT_VEC, box=BOX),
    "certify": _obj(["f", "n", "box"], f=FUNCTION, n=INT_VEC, box=BOX,
                    sampler={"enum": ["random", "grid"]}, separation=NUMBER),
    "interpolate": _obj(["f", "nodes"], f=FUNCTION, nodes={"type": "array", "items": NUMBERS},
                        axis={"type": "integer", "minimum": 1}, probes=POINTS),
    "regularize": _obj(["f", "n", "nodes"], f=FUNCTION, n=INT_VEC,
                       nodes={"type": "array", "items": NUMBERS}, probes=POINTS, box=BOX),
    "order": _obj(["X", "Y", "n"], X=MEASURE, Y=MEASURE, n={"type": "integer", "minimum": 1},
                  u_grid_density={"type": "integer", "minimum": 0}),
    "box-order": {"type": "object", "required": ["n"], "oneOf": [
        {"required": ["factors"]}, {"required": ["PX", "PY"]}],
        "properties": {"n": INT_VEC, "factors": {"type": "array", "items": MEASURE, "minItems": 1},
                       "PX": MEASURE, "PY": MEASURE, "u_grid": POINTS}},
    "hh": _obj(["f", "a", "b"], f=FUNCTION, a=NUMBERS, b=NUMBERS, which={"enum": ["first", "second"]}),
    "jensen": _obj(["f", "marginals"], f=FUNCTION, marginals={"type": "array", "items": MEASURE, "minItems": 1}),
    "rasa": _obj(["mu", "nu", "n"], mu={"type": "array", "items": MEASURE, "minItems": 1},
                 nu={"type": "array", "items": MEASURE, "minItems": 1}, n=INT_VEC, A_grid=POINTS),
    "synth": _obj(["spec"], spec=REPRESENTATION, probes=POINTS, box=BOX),
    "extract-measure": {"type": "object", "required": ["spec"],
                        "anyOf": [{"required": ["edges"]}, {"required": ["probes"]}],
                        "properties": {"spec": REPRESENTATION, "edges": POINTS, "probes": RECTS}},
    "decompose": _obj(["f", "alpha"], f=FUNCTION, alpha={"anyOf": [NUMBER, NUMBERS]},
                      probes=POINTS, axis_order=INT_VEC),
    "strong": _obj(["f", "C", "n", "box"], f=FUNCTION, C={"type": "number", "minimum": 0}, n=INT_VEC,
                   box=BOX, sampler={"enum": ["random", "grid"]}),
}


def validate(command: str, doc) -> None:
    """Raise SchemaError naming the offending field path."""
    schema = SCHEMAS[command]
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = errors[0]
        path = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
        raise SchemaError(err.message, path)
