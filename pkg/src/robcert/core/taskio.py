"""Task files: JSON descriptions of (space, class, perturbation, distributions, hidden hypothesis).

Rationals are written as ``"p/q"`` strings. Points are names in a
``symbolic`` space, one rational on the ``line`` and a pair in the ``plane``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import jsonschema

from robcert.core.types import (
    Atom,
    Ball,
    DiscreteDistribution,
    FiniteClass,
    FiniteMap,
    Halfspace,
    HalfspaceFamily,
    Hypothesis,
    HypothesisClass,
    PerturbationType,
    Singleton,
    Tabular,
    Threshold,
    ThresholdFamily,
    format_point,
    format_rational,
    sorted_points,
)
from robcert.errors import DomainError

_RATIONAL = {"oneOf": [{"type": "string", "pattern": r"^-?\d+(/\d+)?$"}, {"type": "integer"}]}
_POINT = {"oneOf": [{"type": "string"}, {"type": "integer"}, {"type": "array", "items": _RATIONAL, "minItems": 2, "maxItems": 2}]}
_HYP = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "type": {"enum": ["tabular", "threshold", "halfspace", "singleton"]},
        "name": {"type": "string"},
        "ones": {"type": "array", "items": _POINT},
        "t": _RATIONAL,
        "upward": {"type": "boolean"},
        "w": {"type": "array", "items": _RATIONAL, "minItems": 2, "maxItems": 2},
        "b": _RATIONAL,
        "p": _POINT,
    },
}
_PERT = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["finite", "ball"]},
        "neighbors": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["x", "U"],
                "properties": {"x": _POINT, "U": {"type": "array", "items": _POINT}},
            },
        },
        "norm": {"enum": ["l1", "l2", "linf"]},
        "radius": _RATIONAL,
    },
}
TASK_SCHEMA = {
    "type": "object",
    "required": ["name", "space", "class", "perturbation"],
    "properties": {
        "name": {"type": "string"},
        "space": {"enum": ["symbolic", "line", "plane"]},
        "domain": {"type": "array", "items": _POINT},
        "class": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["finite", "thresholds", "halfspaces"]},
                "hypotheses": {"type": "array", "items": _HYP},
                "directions": {"type": "array", "items": {"type": "boolean"}},
            },
        },
        "perturbation": _PERT,
        "outer": _PERT,
        "distributions": {
            "type": "object",
            "additionalProperties": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["x", "y", "weight"],
                    "properties": {"x": _POINT, "y": {"enum": [0, 1]}, "weight": _RATIONAL},
                },
            },
        },
        "hidden": _HYP,
        "meta": {"type": "object"},
    },
    "additionalProperties": False,
}


@dataclass
class Task:
    name: str
    space: str
    H: HypothesisClass
    U: PerturbationType
    distributions: dict = field(default_factory=dict)
    V: PerturbationType | None = None
    hidden: Hypothesis | None = None
    domain: tuple = ()
    meta: dict = field(default_factory=dict)

    def distribution(self, name: str | None = None) -> DiscreteDistribution:
        if not self.distributions:
            raise DomainError(f"task {self.name} has no distribution")
        if name is None:
            name = sorted(self.distributions)[0]
        if name not in self.distributions:
            raise DomainError(f"task {self.name} has no distribution {name!r}")
        return self.distributions[name]


def _point(v, space: str):
    if space == "symbolic":
        if not isinstance(v, str):
            raise DomainError(f"symbolic points are strings, got {v!r}")
        return v
    if space == "line":
        if isinstance(v, list):
            raise DomainError(f"line points are single rationals, got {v!r}")
        return Fraction(v)
    if not isinstance(v, list):
        raise DomainError(f"plane points are pairs, got {v!r}")
    return (Fraction(v[0]), Fraction(v[1]))


def _hyp(d: dict, space: str, domain) -> Hypothesis:
    kind, name = d["type"], d.get("name")
    if kind == "tabular":
        if not domain:
            raise DomainError("tabular hypotheses need a task domain")
        return Tabular.from_ones(domain, [_point(p, space) for p in d.get("ones", [])], name=name)
    if kind == "threshold":
        return Threshold(Fraction(d["t"]), upward=d.get("upward", True), name=name)
    if kind == "halfspace":
        return Halfspace((Fraction(d["w"][0]), Fraction(d["w"][1])), Fraction(d["b"]), name=name)
    return Singleton(_point(d["p"], space), name=name)


def _pert(d: dict, space: str) -> PerturbationType:
    if d["kind"] == "ball":
        if "norm" not in d or "radius" not in d:
            raise DomainError("ball perturbations need norm and radius")
        return Ball(d["norm"], Fraction(d["radius"]))
    return FiniteMap({_point(e["x"], space): [_point(z, space) for z in e["U"]] for e in d.get("neighbors", [])})


def task_from_dict(data: dict) -> Task:
    try:
        jsonschema.validate(data, TASK_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise DomainError(f"invalid task: {exc.message}") from exc
    space = data["space"]
    domain = tuple(_point(p, space) for p in data.get("domain", []))
    c = data["class"]
    if c["kind"] == "finite":
        H = FiniteClass([_hyp(h, space, domain) for h in c.get("hypotheses", [])], domain=domain or None)
    elif c["kind"] == "thresholds":
        H = ThresholdFamily(tuple(c.get("directions", [True])))
    else:
        H = HalfspaceFamily()
    dists = {}
    for key, atoms in data.get("distributions", {}).items():
        try:
            dists[key] = DiscreteDistribution(
                [Atom(_point(a["x"], space), a["y"], Fraction(a["weight"])) for a in atoms]
            )
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"distribution {key!r}: {exc}") from exc
    return Task(
        name=data["name"],
        space=space,
        H=H,
        U=_pert(data["perturbation"], space),
        distributions=dists,
        V=_pert(data["outer"], space) if "outer" in data else None,
        hidden=_hyp(data["hidden"], space, domain) if "hidden" in data else None,
        domain=domain,
        meta=data.get("meta", {}),
    )


def load_task(path) -> Task:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise DomainError(f"task file {path} not found") from exc
    except json.JSONDecodeError as exc:
        raise DomainError(f"task file {path} is not valid JSON: {exc}") from exc
    return task_from_dict(data)


def _hyp_dict(h: Hypothesis) -> dict:
    out: dict = {}
    if isinstance(h, Tabular):
        out = {"type": "tabular", "ones": [format_point(p) for p in sorted_points(h.ones)]}
    elif isinstance(h, Threshold):
        out = {"type": "threshold", "t": format_rational(h.t), "upward": h.upward}
    elif isinstance(h, Halfspace):
        out = {"type": "halfspace", "w": [format_rational(c) for c in h.w], "b": format_rational(h.b)}
    elif isinstance(h, Singleton):
        out = {"type": "singleton", "p": format_point(h.p)}
    else:
        raise TypeError(f"cannot serialise {type(h).__name__}")
    if h.name:
        out["name"] = h.name
    return out


def _pert_dict(U: PerturbationType) -> dict:
    if isinstance(U, Ball):
        return {"kind": "ball", "norm": U.norm, "radius": format_rational(U.radius)}
    return {
        "kind": "finite",
        "neighbors": [{"x": format_point(x), "U": [format_point(z) for z in sorted_points(U(x))]} for x in sorted_points(U.keys)],
    }


def task_to_dict(task: Task) -> dict:
    out: dict = {"name": task.name, "space": task.space}
    if task.domain:
        out["domain"] = [format_point(p) for p in task.domain]
    if isinstance(task.H, FiniteClass):
        out["class"] = {"kind": "finite", "hypotheses": [_hyp_dict(h) for h in task.H]}
    elif isinstance(task.H, ThresholdFamily):
        out["class"] = {"kind": "thresholds", "directions": list(task.H.directions)}
    else:
        out["class"] = {"kind": "halfspaces"}
    out["perturbation"] = _pert_dict(task.U)
    if task.V is not None:
        out["outer"] = _pert_dict(task.V)
    out["distributions"] = {
        k: [{"x": format_point(a.x), "y": a.y, "weight": format_rational(a.weight)} for a in P.atoms]
        for k, P in task.distributions.items()
    }
    if task.hidden is not None:
        out["hidden"] = _hyp_dict(task.hidden)
    if task.meta:
        out["meta"] = task.meta
    return out


def dump_task(task: Task, path) -> None:
    Path(path).write_text(json.dumps(task_to_dict(task), indent=2) + "\n")
