"""Exact counterexample instances where error and margin weights cannot separate two distributions.

Each instance carries its expected facts as data. The facts are recomputed
with exact rationals when the instance is built, so drift between the
construction and the numbers quoted for it fails loudly.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from fractions import Fraction as F

from robcert.core.loss import hypothesis_sets, true_loss
from robcert.core.taskio import Task
from robcert.core.types import Atom, DiscreteDistribution, FiniteClass, FiniteMap, Tabular
from robcert.core.vc import vc_dimension
from robcert.errors import ConstructionFailure
from robcert.oracles import error_oracle, margin_oracle

DISTS = ("P1", "P2")


@dataclass(frozen=True)
class ConstructionInstance:
    name: str
    domain: tuple
    H: FiniteClass
    U: FiniteMap
    P1: DiscreteDistribution
    P2: DiscreteDistribution
    expected: dict = field(default_factory=dict)

    def __post_init__(self):
        for x in self.domain:
            if x not in self.U(x):
                raise ConstructionFailure(f"U({x}) must contain {x}")

    def dist(self, key: str) -> DiscreteDistribution:
        return {"P1": self.P1, "P2": self.P2}[key]


def compute_facts(ci: ConstructionInstance) -> dict:
    """Every named quantity an instance can assert, computed exactly."""
    facts = {}
    for h in ci.H:
        for key in DISTS:
            P = ci.dist(key)
            facts[f"error[{h.name},{key}]"] = error_oracle(P, h, ci.H)
            facts[f"margin[{h.name},{key}]"] = margin_oracle(P, ci.U, h, ci.H)
            facts[f"robust[{h.name},{key}]"] = true_loss(h, P, ci.U)
    for key in DISTS:
        losses = sorted(facts[f"robust[{h.name},{key}]"] for h in ci.H)
        facts[f"gap[{key}]"] = losses[1] - losses[0] if len(losses) > 1 else F(0)
        facts[f"argmin[{key}]"] = _argmin(ci, key, facts)
    facts["vc_h"] = vc_dimension(hypothesis_sets(ci.H, ci.domain), ci.domain)
    return facts


def _argmin(ci, key, facts) -> tuple:
    best = min(facts[f"robust[{h.name},{key}]"] for h in ci.H)
    return tuple(h.name for h in ci.H if facts[f"robust[{h.name},{key}]"] == best)


def _fmt(v):
    if isinstance(v, F):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, tuple):
        return list(v)
    return v


@dataclass
class IndistinguishabilityReport:
    name: str
    checks: list
    passed: bool

    @property
    def violations(self) -> list:
        return [c["fact"] for c in self.checks if not c["passed"]]

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "violations": self.violations, "checks": self.checks}


def verify_indistinguishability(ci: ConstructionInstance) -> IndistinguishabilityReport:
    """Oracle agreement across P1/P2, differing minimisers, and every expected fact, all exact."""
    facts = compute_facts(ci)
    checks = []

    def check(name, expected, actual):
        checks.append({"fact": name, "expected": _fmt(expected), "actual": _fmt(actual), "passed": expected == actual})

    for h in ci.H:
        for kind in ("error", "margin"):
            check(f"{kind}_agree[{h.name}]", facts[f"{kind}[{h.name},P1]"], facts[f"{kind}[{h.name},P2]"])
    checks.append(
        {
            "fact": "minimizers_differ",
            "expected": "disjoint",
            "actual": [list(facts["argmin[P1]"]), list(facts["argmin[P2]"])],
            "passed": not set(facts["argmin[P1]"]) & set(facts["argmin[P2]"]),
        }
    )
    for name, value in ci.expected.items():
        check(name, value, facts.get(name))
    return IndistinguishabilityReport(ci.name, checks, all(c["passed"] for c in checks))


def _checked(ci: ConstructionInstance) -> ConstructionInstance:
    report = verify_indistinguishability(ci)
    if not report.passed:
        raise ConstructionFailure(f"{ci.name}: facts violated: {', '.join(report.violations)}")
    return ci


def _dist(weights: dict, labels: dict | None = None) -> DiscreteDistribution:
    labels = labels or {}
    return DiscreteDistribution([Atom(x, labels.get(x, 0), w) for x, w in weights.items()])


_BASE_U = {
    "x1": ["x2"],
    "x2": ["x1", "x3"],
    "x3": ["x2"],
    "x4": ["x5"],
    "x5": ["x4", "x6"],
    "x6": ["x5"],
    "x7": [],
}
_P1_32 = {"x1": F(0), "x2": F(2, 6), "x3": F(0), "x4": F(1, 6), "x5": F(1, 6), "x6": F(1, 6), "x7": F(1, 6)}
_P2_32 = {"x1": F(1, 6), "x2": F(1, 6), "x3": F(1, 6), "x4": F(0), "x5": F(2, 6), "x6": F(0), "x7": F(1, 6)}


def build_seven_point() -> ConstructionInstance:
    """Seven points, two hypotheses, every label 0; error and margin weights are 1/3 everywhere."""
    domain = tuple(f"x{i}" for i in range(1, 8))
    h1 = Tabular.from_ones(domain, ["x2", "x3"], name="h1")
    h2 = Tabular.from_ones(domain, ["x5", "x6"], name="h2")
    expected = {}
    for h in ("h1", "h2"):
        for key in DISTS:
            expected[f"error[{h},{key}]"] = F(1, 3)
            expected[f"margin[{h},{key}]"] = F(1, 3)
    expected.update(
        {
            "robust[h1,P1]": F(2, 6),
            "robust[h2,P1]": F(3, 6),
            "robust[h1,P2]": F(3, 6),
            "robust[h2,P2]": F(2, 6),
            "argmin[P1]": ("h1",),
            "argmin[P2]": ("h2",),
            "gap[P1]": F(1, 6),
            "gap[P2]": F(1, 6),
            "vc_h": 1,
        }
    )
    ci = ConstructionInstance(
        "seven_point", domain, FiniteClass([h1, h2], domain), FiniteMap(_BASE_U), _dist(_P1_32), _dist(_P2_32), expected
    )
    return _checked(ci)


def build_eight_point() -> ConstructionInstance:
    """The seven-point instance plus a massless ``x8`` tied to ``x7``, with a 0/1-perfect and a margin-free member added.

    ``x8`` carries label 1 so that ``1{x = x8}`` is consistent with every
    sample, including ones containing the massless atom.
    """
    domain = tuple(f"x{i}" for i in range(1, 9))
    U = FiniteMap({**_BASE_U, "x7": ["x8"], "x8": ["x7"]})

    def halve(ws):
        out = {x: w / 2 for x, w in ws.items() if x != "x7"}
        out["x7"] = F(1, 2) + F(1, 12)
        out["x8"] = F(0)
        return out

    labels = {"x8": 1}
    H = FiniteClass(
        [
            Tabular.from_ones(domain, ["x2", "x3"], name="h1"),
            Tabular.from_ones(domain, ["x5", "x6"], name="h2"),
            Tabular.from_ones(domain, ["x8"], name="h_r"),
            Tabular.from_ones(domain, domain, name="h_c"),
        ],
        domain,
    )
    expected = {
        "error[h_r,P1]": F(0),
        "error[h_r,P2]": F(0),
        "margin[h_c,P1]": F(0),
        "margin[h_c,P2]": F(0),
        "robust[h_c,P1]": F(1),
        "robust[h_c,P2]": F(1),
        "margin[h_r,P1]": F(7, 12),
        "margin[h_r,P2]": F(7, 12),
        "robust[h1,P1]": F(2, 12),
        "robust[h2,P1]": F(3, 12),
        "robust[h1,P2]": F(3, 12),
        "robust[h2,P2]": F(2, 12),
        "argmin[P1]": ("h1",),
        "argmin[P2]": ("h2",),
        "gap[P1]": F(1, 12),
        "gap[P2]": F(1, 12),
        # {x2, x8} and {x2, x5} are both shattered by {h1, h2, h_r, h_c}
        "vc_h": 2,
    }
    ci = ConstructionInstance(
        "eight_point", domain, H, U, _dist(halve(_P1_32), labels), _dist(halve(_P2_32), labels), expected
    )
    return _checked(ci)


BUILDERS = {"seven_point": build_seven_point, "eight_point": build_eight_point}


def mutate_weight(ci: ConstructionInstance, key: str, src, dst, amount: F) -> ConstructionInstance:
    """Move ``amount`` of mass from ``src`` to ``dst`` in one distribution, without re-checking facts."""
    P = ci.dist(key)
    atoms = [Atom(a.x, a.y, a.weight - amount if a.x == src else a.weight + amount if a.x == dst else a.weight) for a in P.atoms]
    return dataclasses.replace(ci, **{key: DiscreteDistribution(atoms)})


def to_task(ci: ConstructionInstance, hidden: str | None = "h1") -> Task:
    return Task(
        name=ci.name,
        space="symbolic",
        H=ci.H,
        U=ci.U,
        distributions={"P1": ci.P1, "P2": ci.P2},
        hidden=ci.H.by_name(hidden) if hidden else None,
        domain=ci.domain,
        meta={"expected": {k: _fmt(v) for k, v in ci.expected.items()}},
    )
