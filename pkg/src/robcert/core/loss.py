"""Binary and robust losses, the error/margin decomposition and exact expectations."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from robcert.core.types import (
    Ball,
    DiscreteDistribution,
    FiniteClass,
    FiniteMap,
    Halfspace,
    Hypothesis,
    Label,
    Point,
    PerturbationType,
    Singleton,
    Threshold,
    within_distance,
)
from robcert.errors import UnsupportedCombination


def binary_loss(h: Hypothesis, x: Point, y: Label) -> int:
    return int(h(x) != y)


def _halfspace_ball_margin(h: Halfspace, x, ball: Ball) -> bool:
    # w.z + b ranges over [g - r*||w||_*, g + r*||w||_*] on the closed ball.
    g = h.score(x)
    w0, w1 = abs(h.w[0]), abs(h.w[1])
    r = ball.radius
    if ball.norm == "l2":
        reach_sq = r * r * (w0 * w0 + w1 * w1)
        if g >= 0:
            # need g - reach < 0
            return g * g < reach_sq
        # need g + reach >= 0
        return g * g <= reach_sq
    dual = max(w0, w1) if ball.norm == "l1" else w0 + w1
    reach = r * dual
    return g - reach < 0 if g >= 0 else g + reach >= 0


def _threshold_ball_margin(h: Threshold, x, ball: Ball) -> bool:
    if isinstance(x, (str, tuple)):
        raise UnsupportedCombination("threshold margins need points on the line")
    # [x - r, x + r] holds points on both sides of t iff x - r < t <= x + r
    r = ball.radius
    return x - r < h.t <= x + r


def _singleton_ball_margin(h: Singleton, x, ball: Ball) -> bool:
    if x == h.p:
        return ball.radius > 0
    return within_distance(x, h.p, ball.norm, ball.radius)


def margin_membership(h: Hypothesis, x: Point, U: PerturbationType) -> bool:
    """True iff some ``z`` in ``U(x)`` has ``h(z) != h(x)``.

    Finite maps are scanned exhaustively for any hypothesis. Balls have closed
    form tests for thresholds, halfspaces and singletons.
    """
    if isinstance(U, FiniteMap):
        hx = h(x)
        return any(h(z) != hx for z in U(x))
    if isinstance(U, Ball):
        if isinstance(h, Threshold):
            return _threshold_ball_margin(h, x, U)
        if isinstance(h, Halfspace):
            return _halfspace_ball_margin(h, x, U)
        if isinstance(h, Singleton):
            return _singleton_ball_margin(h, x, U)
    raise UnsupportedCombination(
        f"no exact margin test for {type(h).__name__} under {type(U).__name__}"
    )


def robust_loss_point(h: Hypothesis, x: Point, y: Label, U: PerturbationType) -> int:
    if h(x) != y:
        return 1
    return int(margin_membership(h, x, U))


def true_loss(h: Hypothesis, P: DiscreteDistribution, U: PerturbationType | None = None) -> Fraction:
    """Exact ``P(err(h))``, or ``P(err(h) ∪ mar_U(h))`` when ``U`` is given."""
    total = Fraction(0)
    for a in P.atoms:
        if a.weight == 0:
            continue
        if U is None:
            lost = h(a.x) != a.y
        else:
            lost = robust_loss_point(h, a.x, a.y, U)
        if lost:
            total += a.weight
    return total


def empirical_robust_loss(h: Hypothesis, S: Sequence, U: PerturbationType) -> Fraction:
    if not S:
        raise ValueError("empirical loss of an empty sample is undefined")
    return Fraction(sum(robust_loss_point(h, x, y, U) for x, y in S), len(S))


def empirical_binary_loss(h: Hypothesis, S: Sequence) -> Fraction:
    if not S:
        raise ValueError("empirical loss of an empty sample is undefined")
    return Fraction(sum(h(x) != y for x, y in S), len(S))


def margin_set(h: Hypothesis, U: PerturbationType, domain: Iterable[Point]) -> frozenset:
    return frozenset(x for x in domain if margin_membership(h, x, U))


def margin_class_sets(H: FiniteClass, U: PerturbationType, domain: Iterable[Point]) -> list:
    """Distinct margin areas ``{x in domain : x in mar_U(h)}`` over ``h in H``, in class order."""
    if not isinstance(H, FiniteClass):
        raise TypeError("margin class enumeration needs a finite class")
    domain = tuple(domain)
    out, seen = [], set()
    for h in H:
        m = margin_set(h, U, domain)
        if m not in seen:
            seen.add(m)
            out.append(m)
    return out


def hypothesis_sets(H: FiniteClass, domain: Iterable[Point]) -> list:
    """Each hypothesis as the subset of ``domain`` it labels 1."""
    domain = tuple(domain)
    return [frozenset(x for x in domain if h(x) == 1) for h in H]


def perturbation_contains(U: PerturbationType, x: Point, z: Point) -> bool:
    """Exact membership test ``z in U(x)``."""
    if isinstance(U, FiniteMap):
        return z in U(x)
    if isinstance(U, Ball):
        return U.contains(x, z)
    raise UnsupportedCombination(f"no membership test for {type(U).__name__}")
