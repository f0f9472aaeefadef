"""Query-bounded adversaries that search for adversarial points through a label oracle.

An adversary receives the sample points together with their labels under the
hidden hypothesis (the sample is labeled by ``h``) and may query the oracle.
It returns, for every attackable point, one of the points it queried that
carries the opposite label. Two concrete adversaries are provided:

* :class:`ThresholdEndpoints` for thresholds under intervals on the line:
  two queries per point, ``x - r`` and ``x + r``;
* :class:`FiniteExhaustive` for finite perturbation maps: queries all of
  ``U(x)``.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Sequence

from robcert.certify import WitnessSet
from robcert.core.loss import margin_membership, perturbation_contains
from robcert.core.types import (
    Ball,
    FiniteClass,
    FiniteMap,
    Hypothesis,
    Label,
    PerturbationType,
    Point,
    sorted_points,
)
from robcert.errors import (
    InadmissibleAttack,
    ProperViolation,
    UnsupportedCombination,
    WitnessValidationError,
)
from robcert.oracles import BudgetedLabelOracle, OracleReport


@dataclass
class AttackResult:
    """``perturbed`` holds ``(point, source index)`` pairs; ``per_source[i]`` the queries made for ``S[i]``."""

    perturbed: list
    queries: OracleReport
    per_source: tuple

    @property
    def points(self) -> list:
        return [p for p, _ in self.perturbed]

    @property
    def n_queries(self) -> int:
        return self.queries.queries_used


class _Recorder:
    """Forwards queries to the oracle while logging them for the current source."""

    def __init__(self, oracle):
        self.oracle = oracle
        self.log: list = []

    def __call__(self, z: Point) -> Label:
        y = self.oracle.query(z)
        self.log.append((z, y))
        return y


class Adversary:
    """Base class. Subclasses implement :meth:`attack_point`."""

    kind = "custom"
    adaptive = True

    def attack_point(self, query: Callable[[Point], Label], x: Point, U: PerturbationType, label: Label | None) -> list:
        raise NotImplementedError

    def planned_queries(self, x: Point, U: PerturbationType) -> list:
        """Query list for ``x``; only non-adaptive adversaries can answer without an oracle."""
        raise NotImplementedError(f"{type(self).__name__} is adaptive")

    def per_point_bound(self, U: PerturbationType) -> int | None:
        return None


class ThresholdEndpoints(Adversary):
    """Queries both endpoints of ``[x - r, x + r]``.

    A threshold is monotone, so the interval holds both labels iff the
    endpoint labels differ; the endpoint whose label differs from the sample
    label is returned.
    """

    kind = "threshold"
    adaptive = False

    def _radius(self, U):
        if not isinstance(U, Ball):
            raise UnsupportedCombination("threshold adversary needs an interval (ball) perturbation")
        return U.radius

    def planned_queries(self, x, U):
        r = self._radius(U)
        return [x - r, x + r]

    def attack_point(self, query, x, U, label):
        if label is None:
            raise ValueError("the threshold adversary needs the sample labels")
        out = []
        for z in self.planned_queries(x, U):
            if query(z) != label and not out:
                out.append(z)
        return out

    def per_point_bound(self, U):
        return 2


class FiniteExhaustive(Adversary):
    """Queries every point of ``U(x)`` (including ``x``) in point order."""

    kind = "exhaustive"
    adaptive = False

    def planned_queries(self, x, U):
        if not isinstance(U, FiniteMap):
            raise UnsupportedCombination("exhaustive adversary needs a finite perturbation map")
        return sorted_points(U(x))

    def attack_point(self, query, x, U, label):
        labels = {z: query(z) for z in self.planned_queries(x, U)}
        hx = labels[x]
        for z, y in labels.items():
            if y != hx:
                return [z]
        return []

    def per_point_bound(self, U):
        if not isinstance(U, FiniteMap):
            return None
        return max((len(U(x)) for x in U.keys), default=1)


class CallbackAdversary(Adversary):
    """Wraps ``fn(query, x, U, label) -> list of returned points``."""

    def __init__(self, fn, adaptive: bool = True, planned: Callable | None = None, kind: str = "custom"):
        self._fn = fn
        self._planned = planned
        self.adaptive = adaptive
        self.kind = kind

    def attack_point(self, query, x, U, label):
        return list(self._fn(query, x, U, label))

    def planned_queries(self, x, U):
        if self._planned is None:
            return super().planned_queries(x, U)
        return list(self._planned(x, U))


def attack(
    adv: Adversary,
    o: BudgetedLabelOracle,
    S_X: Sequence[Point],
    U: PerturbationType,
    labels: Sequence[Label] | None = None,
) -> AttackResult:
    """Run ``adv`` on every sample point and enforce properness.

    Every query must lie in the union of the perturbation sets of the sample,
    and every returned point must be one of the queries made for its source.
    """
    if labels is not None and len(labels) != len(S_X):
        raise ValueError("one label per sample point is required")
    start = o.used
    perturbed, per_source = [], []
    for i, x in enumerate(S_X):
        rec = _Recorder(o)
        out = adv.attack_point(rec, x, U, None if labels is None else labels[i])
        queried = [z for z, _ in rec.log]
        for z in queried:
            if not (perturbation_contains(U, x, z) or any(perturbation_contains(U, s, z) for s in S_X)):
                raise ProperViolation(f"query {z!r} lies outside every perturbation set")
        for z in out:
            if z not in queried or not perturbation_contains(U, x, z):
                raise ProperViolation(f"returned point {z!r} was not queried inside U({x!r})")
            perturbed.append((z, i))
        per_source.append(tuple(rec.log))
    report = OracleReport(o.used - start, o.report().transcript_hash)
    return AttackResult(perturbed, report, tuple(per_source))


def is_admissible_attack(S_prime, S: Sequence[Point], h: Hypothesis, U: PerturbationType) -> bool:
    """Brute-force check of both admissibility conditions.

    (i) every returned point is adversarial for some sample point;
    (ii) every sample point in the margin of ``h`` has an adversarial point in ``S_prime``.
    """
    if isinstance(S_prime, AttackResult):
        S_prime = S_prime.points
    S_prime = list(S_prime)

    def adversarial(z, x):
        return perturbation_contains(U, x, z) and h(z) != h(x)

    for z in S_prime:
        if not any(adversarial(z, x) for x in S):
            return False
    for x in S:
        if margin_membership(h, x, U) and not any(adversarial(z, x) for z in S_prime):
            return False
    return True


@dataclass
class QueryComplexityReport:
    counts: list
    max_by_size: dict
    slope: float
    bound: int | None
    efficient: bool
    per_instance_admissible: list = field(default_factory=list)

    def f(self, n: int) -> float:
        """Fitted linear query complexity."""
        return self.slope * n


def measure_query_complexity(adv: Adversary, instances, U: PerturbationType) -> QueryComplexityReport:
    """Attack every ``(S, h)`` instance with a fresh oracle and summarise queries per ``|S|``.

    Raises :class:`InadmissibleAttack` if any attack is not admissible.
    "Efficient" means the per-size maxima stay under ``c * n`` where ``c`` is
    the adversary's declared per-point bound, or the largest ratio seen on the
    smaller half of the sizes when no bound is declared.
    """
    counts = []
    buckets = defaultdict(int)
    for S, h in instances:
        o = BudgetedLabelOracle(h)
        res = attack(adv, o, S, U, labels=[h(x) for x in S])
        if not is_admissible_attack(res, S, h, U):
            raise InadmissibleAttack(f"attack on a sample of size {len(S)} is not admissible")
        counts.append((len(S), res.n_queries))
        buckets[len(S)] = max(buckets[len(S)], res.n_queries)
    sizes = sorted(buckets)
    if buckets.get(0, 0) > 0:
        efficient = False
    else:
        efficient = True
    ratios = {n: buckets[n] / n for n in sizes if n > 0}
    slope = max(ratios.values(), default=0.0)
    bound = adv.per_point_bound(U)
    if bound is not None:
        c = bound
    else:
        pos = [n for n in sizes if n > 0]
        head = pos[: max(1, len(pos) // 2)]
        c = max((ratios[n] for n in head), default=0.0)
    efficient = efficient and all(buckets[n] <= c * n for n in sizes if n > 0)
    return QueryComplexityReport(counts, dict(buckets), slope, bound, efficient)


def witness_from_nonadaptive(adv: Adversary, x: Point, U: PerturbationType, H: FiniteClass) -> WitnessSet:
    """``{x}`` plus the adversary's planned queries, validated against every ``h`` in ``H``."""
    if adv.adaptive:
        raise ValueError("witness sets need a non-adaptive adversary")
    queries = [z for z in adv.planned_queries(x, U) if perturbation_contains(U, x, z)]
    qs = tuple(sorted_points(set(queries) - {x}))
    w = WitnessSet(x, qs, qs)
    for h in H:
        if w.decide(w.restrict(h)) != margin_membership(h, x, U):
            raise WitnessValidationError(
                f"planned queries of {adv.kind} adversary do not decide the margin of {h.label()} at {x!r}"
            )
    return w
