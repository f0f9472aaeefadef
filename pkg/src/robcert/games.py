"""Adaptive answering oracles that defeat any deterministic certifier.

Two games are played against a :class:`CertifierStrategy`:

``run_l2_game``
    Halfspaces under an L2 ball. A hypothesis is a dual point ``(a, b)``
    labeling ``z`` by ``1{a*z1 + b*z2 + 1 > 0}``. The hidden distribution is
    a point mass at the origin with label 1, so the robust loss of ``(a, b)``
    is 1 iff ``a^2 + b^2 >= 1``. The oracle keeps a convex cell of dual
    points consistent with every answer and that straddles the unit circle,
    so both loss values stay possible until the verdict.

``run_tolerant_singleton_game``
    Singletons ``1{x = p}`` under L2 balls ``U`` (radius ``r``) and ``V``
    (radius ``r(1+gamma)``) around a point mass at ``x0`` with label 0. The
    oracle answers 0 everywhere and places ``p`` at an unqueried point after
    the verdict.

All geometry is exact rational arithmetic.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence, Union

from robcert.core.loss import margin_membership
from robcert.core.types import Ball, Singleton, format_point, format_rational, to_rational
from robcert.errors import DomainError, InvariantViolation

BOX = Fraction(4)
MAX_GAME_QUERIES = 10_000

Vec = tuple  # (Fraction, Fraction)


# ---------------------------------------------------------------------------
# Exact planar geometry


def _cross(o: Vec, a: Vec, b: Vec) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def polygon_area(vertices: Sequence[Vec]) -> Fraction:
    """Signed shoelace area (positive for counter-clockwise order)."""
    n = len(vertices)
    s = Fraction(0)
    for i in range(n):
        (x0, y0), (x1, y1) = vertices[i], vertices[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return s / 2


def _norm2(p: Vec) -> Fraction:
    return p[0] * p[0] + p[1] * p[1]


@dataclass(frozen=True)
class Cell:
    """Convex polygon of dual points, stored as CCW vertices plus its defining halfplanes.

    Each halfplane ``(p, q, c, strict)`` reads ``p*a + q*b + c > 0`` (strict)
    or ``<= 0`` (not strict); the box sides are stored as non-strict.
    """

    vertices: tuple
    halfplanes: tuple = ()

    def __post_init__(self):
        if len(self.vertices) < 3 or polygon_area(self.vertices) <= 0:
            raise InvariantViolation("cell must have nonempty interior")

    @classmethod
    def box(cls, half: Fraction = BOX) -> "Cell":
        h = to_rational(half)
        verts = ((-h, -h), (h, -h), (h, h), (-h, h))
        sides = ((1, 0, -h, False), (-1, 0, -h, False), (0, 1, -h, False), (0, -1, -h, False))
        return cls(verts, sides)

    @property
    def area(self) -> Fraction:
        return polygon_area(self.vertices)

    def contains_interior(self, p: Vec) -> bool:
        n = len(self.vertices)
        return all(_cross(self.vertices[i], self.vertices[(i + 1) % n], p) > 0 for i in range(n))

    def centroid(self) -> Vec:
        """Vertex average; strictly interior for a convex polygon with nonempty interior."""
        n = len(self.vertices)
        return (sum(v[0] for v in self.vertices) / n, sum(v[1] for v in self.vertices) / n)


def dual_line(z) -> tuple:
    """Coefficients ``(z1, z2, 1)`` of the dual line ``z1*a + z2*b + 1 = 0``."""
    z1, z2 = to_rational(z[0]), to_rational(z[1])
    return (z1, z2, Fraction(1))


def _side(line, p: Vec) -> Fraction:
    return line[0] * p[0] + line[1] * p[1] + line[2]


def _clip(vertices, line, sign: int) -> list:
    # keep sign * f >= 0
    out = []
    n = len(vertices)
    for i in range(n):
        cur, nxt = vertices[i], vertices[(i + 1) % n]
        fc, fn = sign * _side(line, cur), sign * _side(line, nxt)
        if fc >= 0:
            out.append(cur)
        if (fc > 0 and fn < 0) or (fc < 0 and fn > 0):
            t = fc / (fc - fn)
            out.append((cur[0] + t * (nxt[0] - cur[0]), cur[1] + t * (nxt[1] - cur[1])))
    dedup = []
    for v in out:
        if not dedup or dedup[-1] != v:
            dedup.append(v)
    if len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    return dedup


def split_cell(c: Cell, line) -> tuple:
    """``(positive part, non-positive part)``; a part without interior is ``None``."""
    parts = []
    for sign, strict in ((1, True), (-1, False)):
        verts = _clip(c.vertices, line, sign)
        if len(verts) >= 3 and polygon_area(verts) > 0:
            hp = (line[0] * sign, line[1] * sign, line[2] * sign, strict)
            parts.append(Cell(tuple(verts), c.halfplanes + (hp,)))
        else:
            parts.append(None)
    return tuple(parts)


def _closest_point(c: Cell) -> Vec:
    origin = (Fraction(0), Fraction(0))
    n = len(c.vertices)
    if all(_cross(c.vertices[i], c.vertices[(i + 1) % n], origin) >= 0 for i in range(n)):
        return origin
    best = None
    for i in range(n):
        a, b = c.vertices[i], c.vertices[(i + 1) % n]
        d = (b[0] - a[0], b[1] - a[1])
        t = -(a[0] * d[0] + a[1] * d[1]) / _norm2(d)
        t = min(max(t, Fraction(0)), Fraction(1))
        p = (a[0] + t * d[0], a[1] + t * d[1])
        if best is None or _norm2(p) < _norm2(best):
            best = p
    return best


def min_norm2(c: Cell) -> Fraction:
    return _norm2(_closest_point(c))


def max_norm2(c: Cell) -> Fraction:
    return max(_norm2(v) for v in c.vertices)


def straddles_unit_circle(c: Cell) -> bool:
    """Interior holds dual points with ``a^2+b^2 < 1`` and with ``a^2+b^2 > 1``."""
    return min_norm2(c) < 1 < max_norm2(c)


def _circle_nearest_vertex(c: Cell) -> Vec:
    return min(c.vertices, key=lambda v: (abs(_norm2(v) - 1), v))


def _interior_point(c: Cell, inside: bool) -> Vec:
    """Interior point with norm^2 < 1 (``inside``) or > 1, moving from an extreme point toward the centroid."""
    g = c.centroid()
    t = _closest_point(c) if inside else max(c.vertices, key=lambda v: (_norm2(v), v))
    lam = Fraction(1, 2)
    for _ in range(400):
        p = (t[0] + lam * (g[0] - t[0]), t[1] + lam * (g[1] - t[1]))
        n2 = _norm2(p)
        if (n2 < 1) if inside else (n2 > 1):
            if not c.contains_interior(p):
                raise InvariantViolation("selected dual point left the cell interior")
            return p
        lam /= 2
    raise InvariantViolation("no interior dual point on the requested side of the unit circle")


# ---------------------------------------------------------------------------
# Strategies


@dataclass(frozen=True)
class NextQuery:
    point: object


@dataclass(frozen=True)
class Verdict:
    """``lossy=True`` claims robust loss 1 (high); ``False`` claims 0 (low)."""

    lossy: bool


Action = Union[NextQuery, Verdict]


@dataclass(frozen=True)
class CertifierStrategy:
    """Deterministic map from the transcript (tuple of ``(point, label)``) to the next action."""

    decide: Callable[[tuple], Action]
    max_queries: int = 50
    name: str = "custom"

    def __post_init__(self):
        if not 0 <= self.max_queries <= MAX_GAME_QUERIES:
            raise DomainError(f"max_queries must lie in [0, {MAX_GAME_QUERIES}]")


def script_strategy(queries: Sequence, lossy: bool) -> CertifierStrategy:
    """Fixed query list then a fixed verdict, regardless of answers."""
    qs = tuple(tuple(to_rational(c) for c in q) if isinstance(q, (tuple, list)) else to_rational(q) for q in queries)

    def decide(transcript):
        if len(transcript) < len(qs):
            return NextQuery(qs[len(transcript)])
        return Verdict(lossy)

    return CertifierStrategy(decide, max_queries=len(qs), name="script")


def random_strategy(
    seed, max_queries: int = 50, center=(0, 0), spread=3, denominators: int = 8
) -> CertifierStrategy:
    """Seeded deterministic strategy: each action is drawn from an RNG keyed by the seed and the answers so far.

    Query points are rationals with denominators up to ``denominators`` in
    the square of half-width ``spread`` around ``center``.
    """
    cx, cy = to_rational(center[0]), to_rational(center[1])
    spread = to_rational(spread)
    n_queries = random.Random(f"{seed}:length").randint(0, max_queries)

    def coord(rng):
        d = rng.randint(1, denominators)
        num = rng.randint(-int(spread * d), int(spread * d))
        return Fraction(num, d)

    def decide(transcript):
        bits = "".join(str(y) for _, y in transcript)
        rng = random.Random(f"{seed}:{bits}")
        if len(transcript) >= n_queries:
            return Verdict(rng.random() < 0.5)
        return NextQuery((cx + coord(rng), cy + coord(rng)))

    return CertifierStrategy(decide, max_queries=max_queries, name=f"random:{seed}")


def _next_action(strategy: CertifierStrategy, transcript: list) -> Action:
    act = strategy.decide(tuple(transcript))
    if isinstance(act, NextQuery) and len(transcript) >= strategy.max_queries:
        raise DomainError(f"strategy {strategy.name} exceeded its declared {strategy.max_queries} queries")
    if not isinstance(act, (NextQuery, Verdict)):
        raise TypeError(f"strategy returned {act!r}")
    return act


# ---------------------------------------------------------------------------
# Refutations


@dataclass
class Refutation:
    """A hypothesis consistent with every answer whose exact robust loss contradicts the verdict."""

    kind: str
    transcript: list
    verdict: Verdict
    hypothesis: tuple
    losses: dict
    params: dict = field(default_factory=dict)
    certificate: dict = field(default_factory=dict)

    def label(self, z) -> int:
        if self.kind == "l2":
            a, b = self.hypothesis
            return int(a * z[0] + b * z[1] + 1 > 0)
        return Singleton(self.hypothesis)(z)

    def verify(self) -> bool:
        """Replay every answer and recompute the losses exactly."""
        if any(self.label(z) != y for z, y in self.transcript):
            return False
        losses = _exact_losses(self.kind, self.hypothesis, self.params)
        if losses != self.losses:
            return False
        eps = Fraction(1, 2)
        claimed = Fraction(1) if self.verdict.lossy else Fraction(0)
        if self.kind == "l2":
            return abs(claimed - losses["robust"]) >= 1
        # tolerant contract: claimed must lie in [R^U - eps, R^V + eps]
        return claimed < losses["U"] - eps or claimed > losses["V"] + eps

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "verdict": {"lossy": self.verdict.lossy},
            "hypothesis": format_point(self.hypothesis),
            "losses": {k: format_rational(v) for k, v in self.losses.items()},
            "params": {k: format_rational(v) if isinstance(v, Fraction) else format_point(v) for k, v in self.params.items()},
            "transcript": [{"x": format_point(z), "label": y, "index": i} for i, (z, y) in enumerate(self.transcript)],
            "certificate": self.certificate,
            "verified": self.verify(),
        }


def _exact_losses(kind: str, hyp, params: dict) -> dict:
    if kind == "l2":
        a, b = hyp
        # origin, label 1: h(origin)=1 always; margin iff the line meets the closed unit ball
        return {"robust": Fraction(int(a * a + b * b >= 1))}
    x0 = params["x0"]
    h = Singleton(hyp)
    out = {}
    for key, radius in (("U", params["r"]), ("V", params["r"] * (1 + params["gamma"]))):
        lost = h(x0) != 0 or margin_membership(h, x0, Ball("l2", radius))
        out[key] = Fraction(int(lost))
    return out


# ---------------------------------------------------------------------------
# Games


def run_l2_game(strategy: CertifierStrategy) -> Refutation:
    """Answer queries from a straddling dual cell, then refute the verdict."""
    cell = Cell.box()
    if not straddles_unit_circle(cell):
        raise InvariantViolation("initial box must straddle the unit circle")
    transcript: list = []
    splits = 0
    while True:
        act = _next_action(strategy, transcript)
        if isinstance(act, Verdict):
            break
        z = (to_rational(act.point[0]), to_rational(act.point[1]))
        line = dual_line(z)
        if line[0] == 0 and line[1] == 0:
            transcript.append((z, 1))
            continue
        pos, neg = split_cell(cell, line)
        preferred_pos = _side(line, _circle_nearest_vertex(cell)) >= 0
        order = [(pos, 1), (neg, 0)] if preferred_pos else [(neg, 0), (pos, 1)]
        for part, y in order:
            if part is not None and straddles_unit_circle(part):
                cell = part
                break
        else:
            raise InvariantViolation(f"no straddling sub-cell after query {z!r}")
        if pos is not None and neg is not None:
            splits += 1
        transcript.append((z, y))
    p = _interior_point(cell, inside=act.lossy)
    ref = Refutation(
        kind="l2",
        transcript=transcript,
        verdict=act,
        hypothesis=p,
        losses=_exact_losses("l2", p, {}),
        certificate={
            "cell_vertices": [format_point(v) for v in cell.vertices],
            "splits": splits,
            "dual_norm2": format_rational(_norm2(p)),
        },
    )
    if not ref.verify():
        raise InvariantViolation("l2 refutation failed its own replay")
    return ref


def _offset(x0, d: Fraction):
    if isinstance(x0, tuple):
        return (x0[0] + d, x0[1])
    return x0 + d


def _free_inside(x0, r: Fraction, queried: set):
    n = 1
    while True:
        for j in range(1, 2**n, 2):
            p = _offset(x0, r * Fraction(j, 2**n))
            if p not in queried:
                return p
        n += 1


def _free_outside(x0, R: Fraction, r: Fraction, queried: set):
    k = 1
    while True:
        p = _offset(x0, R + r * k)
        if p not in queried:
            return p
        k += 1


def run_tolerant_singleton_game(strategy: CertifierStrategy, x0, r, gamma) -> Refutation:
    """Answer 0 to everything; place the singleton inside ``U(x0)`` or outside ``V(x0)`` against the verdict."""
    r, gamma = to_rational(r), to_rational(gamma)
    if r <= 0 or gamma <= 0:
        raise DomainError("r and gamma must be positive")
    if isinstance(x0, (tuple, list)):
        x0 = (to_rational(x0[0]), to_rational(x0[1]))
    else:
        x0 = to_rational(x0)
    transcript: list = []
    while True:
        act = _next_action(strategy, transcript)
        if isinstance(act, Verdict):
            break
        z = act.point
        z = (to_rational(z[0]), to_rational(z[1])) if isinstance(z, (tuple, list)) else to_rational(z)
        transcript.append((z, 0))
    queried = {z for z, _ in transcript} | {x0}
    R = r * (1 + gamma)
    p = _free_outside(x0, R, r, queried) if act.lossy else _free_inside(x0, r, queried)
    params = {"x0": x0, "r": r, "gamma": gamma}
    ref = Refutation(
        kind="tolerant",
        transcript=transcript,
        verdict=act,
        hypothesis=p,
        losses=_exact_losses("tolerant", p, params),
        params=params,
        certificate={"placement": "outside V" if act.lossy else "inside U"},
    )
    if not ref.verify():
        raise InvariantViolation("tolerant refutation failed its own replay")
    return ref
