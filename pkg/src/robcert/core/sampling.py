"""Seeded sampling from discrete distributions and sample-size calculators."""

from __future__ import annotations

import math
import random
from bisect import bisect_right
from fractions import Fraction
from itertools import accumulate

from robcert.core.types import DiscreteDistribution

_BITS = 62


def make_rng(seed) -> random.Random:
    if isinstance(seed, random.Random):
        return seed
    return random.Random(seed)


def _draw_indices(P: DiscreteDistribution, m: int, rng: random.Random) -> list[int]:
    # inverse CDF over exact cumulative weights; zero-weight atoms own empty intervals
    cumulative = list(accumulate(a.weight for a in P.atoms))
    scale = 1 << _BITS
    out = []
    for _ in range(m):
        u = Fraction(rng.getrandbits(_BITS), scale)
        out.append(bisect_right(cumulative, u))
    return out


def sample(P: DiscreteDistribution, m: int, seed=None) -> list:
    """``m`` iid labeled draws ``(x, y)``; deterministic given ``seed``."""
    if m < 1:
        raise ValueError("sample size must be at least 1")
    rng = make_rng(seed)
    return [(P.atoms[i].x, P.atoms[i].y) for i in _draw_indices(P, m, rng)]


def sample_unlabeled(P: DiscreteDistribution, m: int, seed=None) -> list:
    return [x for x, _ in sample(P, m, seed)]


def _check_eps_delta(eps: float, delta: float) -> None:
    if not (0 < eps < 1 and 0 < delta < 1):
        raise ValueError(f"eps and delta must lie in (0, 1), got {eps}, {delta}")


def hoeffding_size(eps: float, delta: float) -> int:
    """``ceil(ln(2/delta) / (2 eps^2))``."""
    _check_eps_delta(eps, delta)
    return math.ceil(math.log(2 / delta) / (2 * eps * eps))


def eps_net_size(d: int, eps: float, delta: float) -> int:
    """``ceil((8/eps) (d ln(16/eps) + ln(2/delta)))``."""
    _check_eps_delta(eps, delta)
    if d < 1:
        raise ValueError("VC dimension must be at least 1")
    return math.ceil((8 / eps) * (d * math.log(16 / eps) + math.log(2 / delta)))


def eps_approx_size(d: int, eps: float, delta: float) -> int:
    """``ceil((16/eps^2) (d ln(16/eps) + ln(2/delta)))``."""
    _check_eps_delta(eps, delta)
    if d < 1:
        raise ValueError("VC dimension must be at least 1")
    return math.ceil((16 / (eps * eps)) * (d * math.log(16 / eps) + math.log(2 / delta)))
