"""Query-based robustness certification.

Three certifiers estimate the robust loss of a black-box hypothesis from a
labeled sample plus label queries:

* :func:`certify_witness` queries a precomputed witness set per sample point,
* :func:`certify_halfspace_l1` queries the four corners of an L1 ball,
* :func:`certify_tolerant_l2` queries a regular polygon sitting between the
  L2 balls of radius ``r`` and ``r(1+gamma)``.

:func:`build_witness_set` derives witness sets for finite classes under finite
perturbation maps from the inclusion-minimal neighbourhood traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from robcert.core.sampling import hoeffding_size
from robcert.core.types import (
    FiniteClass,
    FiniteMap,
    Label,
    Point,
    point_key,
    sorted_points,
    to_rational,
)
from robcert.oracles import BudgetedLabelOracle, OracleReport


@dataclass(frozen=True)
class WitnessSet:
    """Points whose labels decide margin membership of ``base`` for every class member.

    With ``h(base) = 0`` the base is in the margin iff some point of ``ones``
    is labeled 1; with ``h(base) = 1`` iff some point of ``zeros`` is labeled 0.
    """

    base: Point
    zeros: tuple
    ones: tuple

    @property
    def points(self) -> tuple:
        return tuple(sorted_points({self.base, *self.zeros, *self.ones}))

    def decide(self, labels: Mapping[Point, Label]) -> bool:
        if labels[self.base] == 0:
            return any(labels[p] == 1 for p in self.ones)
        return any(labels[p] == 0 for p in self.zeros)

    def restrict(self, h) -> dict:
        return {p: h(p) for p in self.points}


def _minimal_sets(sets) -> list[frozenset]:
    distinct = {s for s in sets if s}
    return [s for s in distinct if not any(t < s for t in distinct)]


def build_witness_set(H: FiniteClass, U: FiniteMap, x: Point) -> WitnessSet:
    """Witness set from the minima of the two neighbourhood-trace orders.

    Hypotheses are grouped by ``U(x) ∩ h`` (resp. ``U(x) \\ h``), empty traces
    are dropped, and one point (the smallest in point order) is taken from
    every inclusion-minimal trace.
    """
    if not isinstance(H, FiniteClass) or not isinstance(U, FiniteMap):
        raise TypeError("witness sets are built for finite classes under finite maps")
    nbhd = U(x)
    ones_traces = [frozenset(z for z in nbhd if h(z) == 1) for h in H]
    zeros_traces = [nbhd - t for t in ones_traces]
    pick = lambda s: min(s, key=point_key)  # noqa: E731
    w1 = sorted_points({pick(s) for s in _minimal_sets(ones_traces)})
    w0 = sorted_points({pick(s) for s in _minimal_sets(zeros_traces)})
    return WitnessSet(x, tuple(w0), tuple(w1))


@dataclass
class CertificationReport:
    estimate: Fraction
    m_used: int
    q_used: int
    budget: int
    mode: str
    params: dict = field(default_factory=dict)
    oracle: OracleReport | None = None
    flags: tuple = ()
    exact_sandwich: bool | None = None

    def __post_init__(self):
        if self.q_used > self.budget:
            raise AssertionError(f"used {self.q_used} queries over the declared budget {self.budget}")

    def as_dict(self) -> dict:
        return {
            "estimate": f"{self.estimate.numerator}/{self.estimate.denominator}",
            "estimate_float": float(self.estimate),
            "m_used": self.m_used,
            "q_used": self.q_used,
            "budget": self.budget,
            "mode": self.mode,
            "params": {k: (str(v) if isinstance(v, Fraction) else v) for k, v in self.params.items()},
            "transcript_hash": self.oracle.transcript_hash if self.oracle else None,
            "exact_sandwich": self.exact_sandwich,
        }


def _check_size(m: int, eps, delta) -> None:
    if eps is None:
        return
    need = hoeffding_size(float(eps), float(delta))
    if m < need:
        raise ValueError(f"sample of {m} points is below the Hoeffding size {need}")


def certify_witness(
    o: BudgetedLabelOracle,
    S_X: Sequence[Point],
    witness_fn: Callable[[Point], WitnessSet],
    labels_true: Sequence[Label],
    eps: float,
    delta: float,
) -> CertificationReport:
    """Flag a point if its queried label is wrong or its witness labels reveal a margin."""
    if len(S_X) != len(labels_true):
        raise ValueError("one true label per sample point is required")
    _check_size(len(S_X), eps, delta)
    start = o.used
    flags = []
    widest = 0
    for x, y in zip(S_X, labels_true):
        w = witness_fn(x)
        widest = max(widest, len(w.points))
        labels = {p: o.query(p) for p in w.points}
        flags.append(labels[x] != y or w.decide(labels))
    m = len(S_X)
    return CertificationReport(
        estimate=Fraction(sum(flags), m),
        m_used=m,
        q_used=o.used - start,
        budget=m * (1 + widest),
        mode="exact-witness",
        params={"eps": eps, "delta": delta},
        oracle=o.report(),
        flags=tuple(flags),
    )


def l1_corners(x: Point, r: Fraction) -> tuple:
    """Corners of the closed L1 ball, in the order up, right, left, down."""
    r = to_rational(r)
    return (
        (x[0], x[1] + r),
        (x[0] + r, x[1]),
        (x[0] - r, x[1]),
        (x[0], x[1] - r),
    )


def certify_halfspace_l1(
    o: BudgetedLabelOracle,
    S: Sequence[tuple[Point, Label]],
    r,
    eps: float | None = None,
    delta: float | None = None,
) -> CertificationReport:
    """Exactly five queries per point: the point and its four L1 corners.

    For a halfspace the corners are the extreme points of the ball, so a
    margin exists iff some corner label differs from the label at ``x``.
    """
    _check_size(len(S), eps, delta)
    r = to_rational(r)
    start = o.used
    flags = []
    for x, y in S:
        hx = o.query(x)
        flipped = False
        for c in l1_corners(x, r):
            if o.query(c) != hx:
                flipped = True
        flags.append(hx != y or flipped)
    m = len(S)
    return CertificationReport(
        estimate=Fraction(sum(flags), m) if m else Fraction(0),
        m_used=m,
        q_used=o.used - start,
        budget=5 * m,
        mode="l1",
        params={"r": r, "eps": eps, "delta": delta},
        oracle=o.report(),
        flags=tuple(flags),
    )


def tolerant_polygon_vertices(gamma) -> int:
    """``max(3, ceil(pi / arccos(1 / (1 + gamma))))``.

    A regular k-gon with circumradius ``1 + gamma`` then has apothem at least 1.
    """
    g = float(gamma)
    if not g > 0:
        raise ValueError("gamma must be positive")
    ratio = math.pi / math.acos(1.0 / (1.0 + g))
    # absorbs float noise at exact values such as gamma = 1 (ratio = 3)
    return max(3, math.ceil(ratio - 1e-9))


def rational_unit_vector(theta: float, max_den: int = 10**9) -> tuple[Fraction, Fraction]:
    """A rational point exactly on the unit circle, close to angle ``theta``.

    Uses the parametrisation ``((1-s^2)/(1+s^2), 2s/(1+s^2))`` with a rational
    approximation ``s`` of ``tan(theta/2)``.
    """
    theta = math.remainder(theta, 2 * math.pi)
    flip = abs(theta) > math.pi / 2
    if flip:
        theta = math.remainder(theta + math.pi, 2 * math.pi)
    s = Fraction(math.tan(theta / 2)).limit_denominator(max_den)
    d = 1 + s * s
    c, sn = (1 - s * s) / d, 2 * s / d
    return (-c, -sn) if flip else (c, sn)


def polygon_offsets(k: int, radius) -> tuple:
    """Vertices of the (rationalised) regular k-gon of circumradius ``radius``, vertex 0 at angle 0."""
    radius = to_rational(radius)
    out = []
    for j in range(k):
        c, s = rational_unit_vector(2 * math.pi * j / k)
        out.append((radius * c, radius * s))
    return tuple(out)


def polygon_contains_disk(offsets, r) -> bool:
    """Exact test that the convex polygon (CCW offsets around the origin) contains the closed disk of radius ``r``."""
    r2 = to_rational(r) ** 2
    k = len(offsets)
    for i in range(k):
        (ax, ay), (bx, by) = offsets[i], offsets[(i + 1) % k]
        cross = ax * by - ay * bx
        if cross <= 0:
            return False
        ex, ey = bx - ax, by - ay
        if cross * cross < r2 * (ex * ex + ey * ey):
            return False
    return True


def certify_tolerant_l2(
    o: BudgetedLabelOracle,
    S: Sequence[tuple[Point, Label]],
    r,
    gamma,
    eps: float | None = None,
    delta: float | None = None,
) -> CertificationReport:
    """Query each point and the ``k`` vertices of a polygon between the two L2 balls.

    ``exact_sandwich`` on the report records whether the rational polygon
    provably contains the radius-``r`` disk. It can fail only when ``gamma``
    leaves no slack for ``k`` (for example ``gamma = 1``, ``k = 3``), where
    no rational polygon has the exact shape.
    """
    _check_size(len(S), eps, delta)
    r = to_rational(r)
    gamma = to_rational(gamma)
    k = tolerant_polygon_vertices(gamma)
    offsets = polygon_offsets(k, r * (1 + gamma))
    start = o.used
    flags = []
    for x, y in S:
        hx = o.query(x)
        flipped = False
        for dx, dy in offsets:
            if o.query((x[0] + dx, x[1] + dy)) != hx:
                flipped = True
        flags.append(hx != y or flipped)
    m = len(S)
    return CertificationReport(
        estimate=Fraction(sum(flags), m) if m else Fraction(0),
        m_used=m,
        q_used=o.used - start,
        budget=m * (k + 1),
        mode="tolerant",
        params={"r": r, "gamma": gamma, "k": k, "eps": eps, "delta": delta},
        oracle=o.report(),
        flags=tuple(flags),
        exact_sandwich=polygon_contains_disk(offsets, r),
    )
