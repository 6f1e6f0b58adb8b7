"""JSON schemas for every CLI output document."""

from __future__ import annotations

import jsonschema

_num = {"type": "number"}
_nums = {"type": "array", "items": _num}
_num_or_null = {"type": ["number", "null"]}
_alpha = {"type": "array", "items": _num, "minItems": 1}
_profile = {"type": "string", "pattern": "^[HS]+$"}
_commit = {
    "type": "object",
    "required": ["s1", "response", "values", "n_pne"],
    "properties": {
        "s1": _num,
        "response": {"type": ["string", "null"]},
        "values": {"type": ["array", "null"], "items": _num},
        "n_pne": {"type": "integer", "minimum": 0},
    },
}

SOLVE = {
    "type": "object",
    "required": ["alpha", "prop", "variant", "shares", "rates", "residual"],
    "properties": {
        "alpha": _alpha,
        "prop": {"type": "string"},
        "variant": {"enum": ["appendix", "printed"]},
        "shares": _nums,
        "rates": _nums,
        "residual": _num,
    },
}

TABLE = {
    "type": "object",
    "required": ["alpha", "utilities"],
    "properties": {
        "alpha": _alpha,
        "variant": {"type": "string"},
        "utilities": {"type": "object", "additionalProperties": _nums},
    },
}

PNE = {
    "type": "object",
    "required": ["alpha", "pne"],
    "properties": {"alpha": _alpha, "pne": {"type": "array", "items": _profile}},
}

SSE = {
    "type": "object",
    "required": ["alpha", "mode", "best", "optimal", "no_pne_commitments"],
    "properties": {
        "alpha": _alpha,
        "mode": {"enum": ["sse", "pessimistic"]},
        "best": _commit,
        "optimal": {"type": "array", "items": _commit},
        "no_pne_commitments": _nums,
        "follower_gap": _num_or_null,
    },
}

COALITIONS = {
    "type": "object",
    "required": ["alpha", "victim", "coalitions"],
    "properties": {
        "alpha": _alpha,
        "victim": {"type": "integer", "minimum": 1},
        "coalitions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["members", "penalty"],
                "properties": {
                    "members": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                    "penalty": {"type": "number", "exclusiveMinimum": 0},
                },
            },
        },
    },
}

TYPE = {
    "type": "object",
    "required": ["alpha", "commitment_type"],
    "properties": {"alpha": _alpha, "commitment_type": {"enum": [0, 1, 2, 3]}},
}

THRESHOLD = {
    "type": "object",
    "required": ["miners", "eta", "welfare_ssm", "welfare_honest", "pareto"],
    "properties": {
        "miners": {"type": "integer", "minimum": 1},
        "eta": _num_or_null,
        "welfare_ssm": {"type": ["array", "null"], "items": _num},
        "welfare_honest": {"type": ["array", "null"], "items": _num},
        "gain_below": _num_or_null,
        "gain_above": _num_or_null,
        "pareto": {"type": ["boolean", "null"]},
    },
}

SIMULATE = {
    "type": "object",
    "required": ["alpha", "strategies", "blocks", "seed", "replicas", "mean", "ci95", "runs"],
    "properties": {
        "alpha": _alpha,
        "strategies": {"type": "array", "items": {"enum": ["honest", "sm", "ssm"]}},
        "blocks": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "replicas": {"type": "integer", "minimum": 1},
        "mean": _nums,
        "ci95": _nums,
        "runs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["counts", "shares"],
                "properties": {
                    "counts": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    "shares": _nums,
                },
            },
        },
    },
}

ALL = {
    "solve": SOLVE,
    "table": TABLE,
    "pne": PNE,
    "sse": SSE,
    "coalitions": COALITIONS,
    "type": TYPE,
    "threshold": THRESHOLD,
    "simulate": SIMULATE,
}


def validate(doc, name: str) -> None:
    jsonschema.validate(doc, ALL[name])
