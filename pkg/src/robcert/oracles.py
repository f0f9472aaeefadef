"""Black-box label access and the idealised distribution oracles.

:class:`BudgetedLabelOracle` is the only channel certifiers and adversaries
use to look at a hidden hypothesis. The distribution oracles return exact
probability weights of error, margin and disagreement sets.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import IO, Callable

from robcert.core.loss import margin_membership
from robcert.core.types import (
    DiscreteDistribution,
    Hypothesis,
    HypothesisClass,
    Label,
    PerturbationType,
    Point,
    format_point,
)
from robcert.errors import BudgetExhausted, OutsideClass


@dataclass(frozen=True)
class OracleReport:
    queries_used: int
    transcript_hash: str


class BudgetedLabelOracle:
    """Counts, caps and records label queries to a hidden hypothesis.

    Single-owner mutable state: give every certifier or attack run its own
    oracle.
    """

    def __init__(self, h: Hypothesis | Callable[[Point], Label], budget: int | None = None):
        if budget is not None and budget < 0:
            raise ValueError("budget must be nonnegative")
        self._h = h
        self.budget = budget
        self.transcript: list[tuple[Point, Label]] = []

    @property
    def used(self) -> int:
        return len(self.transcript)

    @property
    def remaining(self) -> int | None:
        return None if self.budget is None else self.budget - self.used

    def query(self, x: Point) -> Label:
        if self.budget is not None and self.used >= self.budget:
            raise BudgetExhausted(f"query budget of {self.budget} exhausted")
        y = self._h(x)
        self.transcript.append((x, y))
        return y

    __call__ = query

    def report(self) -> OracleReport:
        return OracleReport(self.used, transcript_hash(self.transcript))

    def export_jsonl(self, fp: IO[str]) -> None:
        for line in transcript_lines(self.transcript):
            fp.write(line + "\n")


def transcript_lines(transcript) -> list[str]:
    """One compact JSON object ``{x, label, index}`` per query."""
    return [
        json.dumps({"x": format_point(x), "label": y, "index": i}, separators=(",", ":"))
        for i, (x, y) in enumerate(transcript)
    ]


def transcript_hash(transcript) -> str:
    h = hashlib.sha256()
    for line in transcript_lines(transcript):
        h.update(line.encode())
        h.update(b"\n")
    return h.hexdigest()


class ReplayOracle:
    """Answers queries from a fixed label sequence, in order.

    Used by decoders that re-simulate an adversary from stored label bits.
    """

    def __init__(self, answers):
        self._answers = list(answers)
        self.transcript: list[tuple[Point, Label]] = []

    @property
    def used(self) -> int:
        return len(self.transcript)

    def query(self, x: Point) -> Label:
        if self.used >= len(self._answers):
            raise BudgetExhausted("replay ran past the stored labels")
        y = self._answers[self.used]
        self.transcript.append((x, y))
        return y

    __call__ = query


# ---------------------------------------------------------------------------
# Distribution oracles


def _check_member(h: Hypothesis, hclass: HypothesisClass | None) -> None:
    if hclass is not None and h not in hclass:
        raise OutsideClass(f"{h.label()} is not in the declared class")


def error_oracle(P: DiscreteDistribution, h: Hypothesis, hclass: HypothesisClass | None = None) -> Fraction:
    """Exact ``P(err(h))``."""
    _check_member(h, hclass)
    return sum((a.weight for a in P.atoms if h(a.x) != a.y), Fraction(0))


def margin_oracle(
    P: DiscreteDistribution,
    U: PerturbationType,
    h: Hypothesis,
    hclass: HypothesisClass | None = None,
) -> Fraction:
    """Exact ``P_X(mar_U(h))``."""
    _check_member(h, hclass)
    return P.marginal_weight(lambda x: margin_membership(h, x, U))


def extended_margin_oracle(
    P: DiscreteDistribution,
    U: PerturbationType,
    h: Hypothesis,
    h_other: Hypothesis,
    hclass: HypothesisClass | None = None,
) -> tuple[Fraction, Fraction, Fraction]:
    """``(P(mar(h)), P(h Δ h'), P(mar(h) ∩ (h Δ h')))``, all exact."""
    _check_member(h, hclass)
    _check_member(h_other, hclass)
    mar = dis = both = Fraction(0)
    for a in P.atoms:
        if a.weight == 0:
            continue
        m = margin_membership(h, a.x, U)
        d = h(a.x) != h_other(a.x)
        if m:
            mar += a.weight
        if d:
            dis += a.weight
        if m and d:
            both += a.weight
    return mar, dis, both


class DistributionOracles:
    """Class-restricted bundle of the three distribution oracles for one ``(P, U)``."""

    def __init__(self, P: DiscreteDistribution, U: PerturbationType, hclass: HypothesisClass):
        self.P, self.U, self.hclass = P, U, hclass

    def error(self, h: Hypothesis) -> Fraction:
        return error_oracle(self.P, h, self.hclass)

    def margin(self, h: Hypothesis) -> Fraction:
        return margin_oracle(self.P, self.U, h, self.hclass)

    def extended(self, h: Hypothesis, h_other: Hypothesis):
        return extended_margin_oracle(self.P, self.U, h, h_other, self.hclass)
