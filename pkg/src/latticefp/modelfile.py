"""JSON model files (``schema_version`` 1).

::

    {"schema_version": 1, "dt": 1,
     "states": [{"id": "1"}, {"id": "2"}],
     "edges": [{"from": "1", "to": "2", "prob": 1.0,
                "dist": {"kind": "geometric", "params": {"p": 0.8}}}],
     "defaults": {"epsilon": 1e-6, "max_N": 16777216}}
"""
from __future__ import annotations

import json
from pathlib import Path

from .errors import ValidationError
from .lattice import DistributionSpec
from .smp import SmpModel, TransitionEdge

SCHEMA_VERSION = 1


def _require(obj, key, where):
    if key not in obj:
        raise ValidationError(f"{where}: missing required field {key!r}")
    return obj[key]


def parse_model(doc) -> tuple[SmpModel, dict]:
    """Validate a decoded model document; returns ``(model, defaults)``."""
    if not isinstance(doc, dict):
        raise ValidationError("model file must hold a JSON object")
    version = _require(doc, "schema_version", "model")
    if version != SCHEMA_VERSION:
        raise ValidationError(f"unsupported schema_version {version!r}")
    dt = _require(doc, "dt", "model")
    if not isinstance(dt, (int, float)) or isinstance(dt, bool) or not dt > 0:
        raise ValidationError(f"dt must be a positive number, got {dt!r}")
    states = []
    for i, s in enumerate(_require(doc, "states", "model")):
        if not isinstance(s, dict) or not isinstance(s.get("id"), str) or not s["id"]:
            raise ValidationError(f"states[{i}] needs a non-empty string 'id'")
        states.append(s["id"])
    edges = []
    for i, e in enumerate(_require(doc, "edges", "model")):
        where = f"edges[{i}]"
        if not isinstance(e, dict):
            raise ValidationError(f"{where} must be an object")
        prob = _require(e, "prob", where)
        if not isinstance(prob, (int, float)) or isinstance(prob, bool):
            raise ValidationError(f"{where}: prob must be a number")
        dist = DistributionSpec.from_json(_require(e, "dist", where))
        if dist.kind == "empirical" and "dt" not in e["dist"].get("params", {}):
            dist = DistributionSpec.empirical(dist.values, float(dt))
        edges.append(TransitionEdge(str(_require(e, "from", where)),
                                    str(_require(e, "to", where)), float(prob), dist))
    defaults = dict(doc.get("defaults") or {})
    unknown = set(defaults) - {"epsilon", "max_N"}
    if unknown:
        raise ValidationError(f"unknown defaults {sorted(unknown)}")
    return SmpModel(tuple(states), tuple(edges), float(dt)), defaults


def load_model(path) -> tuple[SmpModel, dict]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read model file {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    return parse_model(doc)


def model_to_json(model: SmpModel, defaults: dict | None = None) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "dt": model.dt,
        "states": [{"id": s} for s in model.states],
        "edges": [{"from": e.source, "to": e.target, "prob": e.prob, "dist": e.dist.to_json()}
                  for e in model.edges],
    }
    if defaults:
        doc["defaults"] = dict(defaults)
    return doc
