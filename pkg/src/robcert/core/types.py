"""Domain model: points, hypotheses, classes, perturbation types, distributions.

Points are plain hashable values:

* symbolic points are ``str`` ids (abstract finite domains),
* points on the line are :class:`fractions.Fraction`,
* points in the plane are 2-tuples of ``Fraction``.

Everything here is immutable after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence, Tuple, Union

from robcert.errors import DomainError

Rational = Fraction
Point = Union[str, Fraction, Tuple[Fraction, Fraction]]
Label = int

NORMS = ("l1", "l2", "linf")


def to_rational(value) -> Fraction:
    """Exact rational from an int, Fraction, decimal/"p/q" string or float.

    Floats go through their shortest repr, so ``0.7`` becomes ``7/10``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational")


def as_point(value) -> Point:
    """Normalise user input into a point. Strings that do not parse as numbers are symbolic."""
    if isinstance(value, (tuple, list)):
        if len(value) == 1:
            return to_rational(value[0])
        if len(value) != 2:
            raise DomainError(f"only dimensions 1 and 2 are supported, got {len(value)}")
        return (to_rational(value[0]), to_rational(value[1]))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError:
            return value
    return to_rational(value)


def point_dim(p: Point) -> int:
    """0 for symbolic points, else the number of coordinates."""
    if isinstance(p, str):
        return 0
    if isinstance(p, tuple):
        return len(p)
    return 1


def point_key(p: Point):
    """Total order used for every deterministic tie-break ("lexicographic")."""
    if isinstance(p, str):
        return (0, p)
    if isinstance(p, tuple):
        return (2, p)
    return (1, p)


def sorted_points(points: Iterable[Point]) -> list:
    return sorted(points, key=point_key)


def format_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def format_point(p: Point):
    """JSON-friendly form of a point (rationals as "p/q" strings)."""
    if isinstance(p, str):
        return p
    if isinstance(p, tuple):
        return [format_rational(c) for c in p]
    return format_rational(p)


def check_domain_consistency(points: Iterable[Point]) -> int:
    """Return the common dimension of ``points``; mixing dimensions is an error."""
    dims = {point_dim(p) for p in points}
    if len(dims) > 1:
        raise DomainError(f"mixed point kinds in one domain (dimensions {sorted(dims)})")
    return dims.pop() if dims else 0


# ---------------------------------------------------------------------------
# Hypotheses


class Hypothesis:
    """A binary classifier ``h: X -> {0, 1}``. Subclasses are immutable."""

    name: str | None = None

    def __call__(self, x: Point) -> Label:  # pragma: no cover - abstract
        raise NotImplementedError

    def label(self) -> str:
        return self.name or repr(self)


class Tabular(Hypothesis):
    """Finite-domain label map. Total on its declared domain, undefined elsewhere."""

    __slots__ = ("_table", "name", "_hash")

    def __init__(self, table: Mapping[Point, int] | Iterable[tuple[Point, int]], name: str | None = None):
        items = dict(table.items() if isinstance(table, Mapping) else table)
        for x, y in items.items():
            if y not in (0, 1):
                raise ValueError(f"label of {x!r} must be 0 or 1, got {y!r}")
        check_domain_consistency(items)
        self._table = MappingProxyType(items)
        self.name = name
        self._hash = hash(frozenset(items.items()))

    @classmethod
    def from_ones(cls, domain: Iterable[Point], ones: Iterable[Point], name: str | None = None) -> "Tabular":
        ones = set(ones)
        domain = list(domain)
        missing = ones.difference(domain)
        if missing:
            raise DomainError(f"points {sorted_points(missing)} are not in the domain")
        return cls({x: int(x in ones) for x in domain}, name=name)

    @property
    def table(self) -> Mapping[Point, int]:
        return self._table

    @property
    def domain(self) -> frozenset:
        return frozenset(self._table)

    @property
    def ones(self) -> frozenset:
        return frozenset(x for x, y in self._table.items() if y == 1)

    def __call__(self, x: Point) -> Label:
        try:
            return self._table[x]
        except KeyError:
            raise DomainError(f"point {x!r} is outside the tabular domain") from None

    def __eq__(self, other) -> bool:
        return isinstance(other, Tabular) and self._table == other._table

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        if self.name:
            return f"Tabular({self.name})"
        return f"Tabular(ones={sorted_points(self.ones)!r})"


@dataclass(frozen=True)
class Threshold(Hypothesis):
    """``1{x >= t}`` when ``upward`` else ``1{x < t}``.

    ``t`` may be ``±math.inf`` (constant hypotheses used as search sentinels).
    """

    t: Union[Fraction, float]
    upward: bool = True
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if not isinstance(self.t, float):
            object.__setattr__(self, "t", to_rational(self.t))
        elif math.isfinite(self.t):
            object.__setattr__(self, "t", to_rational(self.t))

    def __call__(self, x: Point) -> Label:
        if isinstance(x, (str, tuple)):
            raise DomainError(f"threshold is defined on the line, got {x!r}")
        above = x >= self.t
        return int(above) if self.upward else int(not above)

    def label(self) -> str:
        if self.name:
            return self.name
        t = format_rational(self.t) if isinstance(self.t, Fraction) else str(self.t)
        return f"1{{x {'>=' if self.upward else '<'} {t}}}"


@dataclass(frozen=True)
class Halfspace(Hypothesis):
    """``1{w . x + b >= 0}`` in the plane."""

    w: Tuple[Fraction, Fraction]
    b: Fraction
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        w = (to_rational(self.w[0]), to_rational(self.w[1]))
        if w == (0, 0):
            raise ValueError("halfspace normal must be nonzero")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", to_rational(self.b))

    def score(self, x: Point) -> Fraction:
        if not isinstance(x, tuple) or len(x) != 2:
            raise DomainError(f"halfspace is defined on the plane, got {x!r}")
        return self.w[0] * x[0] + self.w[1] * x[1] + self.b

    def __call__(self, x: Point) -> Label:
        return int(self.score(x) >= 0)


@dataclass(frozen=True)
class Singleton(Hypothesis):
    """``1{x = p}``."""

    p: Point
    name: str | None = field(default=None, compare=False)

    def __call__(self, x: Point) -> Label:
        return int(x == self.p)


# ---------------------------------------------------------------------------
# Hypothesis classes


class HypothesisClass:
    def __contains__(self, h) -> bool:  # pragma: no cover - abstract
        raise NotImplementedError


class FiniteClass(HypothesisClass, Sequence):
    """Ordered, duplicate-free list of hypotheses.

    When ``domain`` is given, duplicates are judged extensionally on it.
    """

    def __init__(self, hypotheses: Iterable[Hypothesis], domain: Iterable[Point] | None = None):
        self._hyps = tuple(hypotheses)
        self.domain = None if domain is None else tuple(sorted_points(set(domain)))
        if self.domain is not None:
            seen = {}
            for h in self._hyps:
                sig = tuple(h(x) for x in self.domain)
                if sig in seen:
                    raise ValueError(
                        f"hypotheses {seen[sig].label()} and {h.label()} agree on the whole domain"
                    )
                seen[sig] = h
        elif len(set(self._hyps)) != len(self._hyps):
            raise ValueError("duplicate hypotheses in finite class")

    def __getitem__(self, i):
        return self._hyps[i]

    def __len__(self) -> int:
        return len(self._hyps)

    def __iter__(self) -> Iterator[Hypothesis]:
        return iter(self._hyps)

    def __contains__(self, h) -> bool:
        return h in self._hyps

    def by_name(self, name: str) -> Hypothesis:
        for h in self._hyps:
            if h.name == name:
                return h
        raise KeyError(name)

    def __repr__(self) -> str:
        return f"FiniteClass([{', '.join(h.label() for h in self._hyps)}])"


@dataclass(frozen=True)
class ThresholdFamily(HypothesisClass):
    """All thresholds on the line with the listed orientations."""

    directions: Tuple[bool, ...] = (True,)

    def __contains__(self, h) -> bool:
        return isinstance(h, Threshold) and h.upward in self.directions


@dataclass(frozen=True)
class HalfspaceFamily(HypothesisClass):
    def __contains__(self, h) -> bool:
        return isinstance(h, Halfspace)


# ---------------------------------------------------------------------------
# Perturbation types


class PerturbationType:
    pass


class FiniteMap(PerturbationType):
    """Explicit neighbourhoods. Every key is added to its own set; unknown points map to ``{x}``."""

    __slots__ = ("_map",)

    def __init__(self, neighbors: Mapping[Point, Iterable[Point]]):
        self._map = MappingProxyType(
            {x: frozenset(zs) | {x} for x, zs in neighbors.items()}
        )

    def __call__(self, x: Point) -> frozenset:
        return self._map.get(x, frozenset((x,)))

    @property
    def keys(self) -> frozenset:
        return frozenset(self._map)

    def items(self):
        return self._map.items()

    def points(self) -> frozenset:
        out = set(self._map)
        for zs in self._map.values():
            out |= zs
        return frozenset(out)

    def __eq__(self, other) -> bool:
        return isinstance(other, FiniteMap) and dict(self._map) == dict(other._map)

    def __hash__(self) -> int:
        return hash(frozenset(self._map.items()))

    def __repr__(self) -> str:
        return f"FiniteMap({len(self._map)} keys)"


def identity_map(domain: Iterable[Point]) -> FiniteMap:
    return FiniteMap({x: () for x in domain})


@dataclass(frozen=True)
class Ball(PerturbationType):
    """Closed ball ``{z : ||x - z|| <= radius}``."""

    norm: str
    radius: Fraction

    def __post_init__(self):
        if self.norm not in NORMS:
            raise ValueError(f"norm must be one of {NORMS}, got {self.norm!r}")
        r = to_rational(self.radius)
        if r < 0:
            raise ValueError("radius must be nonnegative")
        object.__setattr__(self, "radius", r)

    def contains(self, x: Point, z: Point) -> bool:
        return within_distance(x, z, self.norm, self.radius)


def within_distance(x: Point, z: Point, norm: str, r: Fraction) -> bool:
    """Exact test ``||x - z|| <= r`` (L2 compared through squares)."""
    if isinstance(x, tuple) != isinstance(z, tuple) or isinstance(x, str) or isinstance(z, str):
        raise DomainError(f"cannot measure distance between {x!r} and {z!r}")
    if not isinstance(x, tuple):
        return abs(x - z) <= r
    dx, dy = abs(x[0] - z[0]), abs(x[1] - z[1])
    if norm == "l1":
        return dx + dy <= r
    if norm == "linf":
        return max(dx, dy) <= r
    return dx * dx + dy * dy <= r * r


# Containment of 2-D unit balls: B_inner(r1) ⊆ B_outer(r2) iff test(r1, r2).
_BALL_CONTAINMENT = {
    ("l1", "l1"): lambda a, b: a <= b,
    ("l2", "l2"): lambda a, b: a <= b,
    ("linf", "linf"): lambda a, b: a <= b,
    ("l1", "l2"): lambda a, b: a <= b,
    ("l1", "linf"): lambda a, b: a <= b,
    ("l2", "linf"): lambda a, b: a <= b,
    ("l2", "l1"): lambda a, b: 2 * a * a <= b * b,
    ("linf", "l2"): lambda a, b: 2 * a * a <= b * b,
    ("linf", "l1"): lambda a, b: 2 * a <= b,
}


@dataclass(frozen=True)
class RestrictionPair(PerturbationType):
    """``(U, V)`` with ``U(x) ⊆ V(x)`` for all x; checked at construction."""

    inner: PerturbationType
    outer: PerturbationType

    def __post_init__(self):
        if not is_restriction(self.inner, self.outer):
            raise ValueError("inner perturbation type is not a restriction of the outer one")


def is_restriction(inner: PerturbationType, outer: PerturbationType) -> bool:
    """Exhaustive for finite maps, by radius comparison for balls (planar containment rules)."""
    if isinstance(inner, FiniteMap) and isinstance(outer, FiniteMap):
        return all(inner(x) <= outer(x) for x in inner.keys | outer.keys)
    if isinstance(inner, Ball) and isinstance(outer, Ball):
        return _BALL_CONTAINMENT[(inner.norm, outer.norm)](inner.radius, outer.radius)
    raise TypeError("restriction check needs two finite maps or two balls")


# ---------------------------------------------------------------------------
# Distributions and samples


@dataclass(frozen=True)
class Atom:
    x: Point
    y: Label
    weight: Fraction


class DiscreteDistribution:
    """Finite support of ``(point, label, weight)`` atoms with exact weights summing to 1.

    Zero-weight atoms are allowed; they declare domain points without mass.
    """

    __slots__ = ("atoms", "_index")

    def __init__(self, atoms: Iterable):
        parsed = []
        for a in atoms:
            if not isinstance(a, Atom):
                x, y, w = a
                a = Atom(x, int(y), to_rational(w))
            if a.y not in (0, 1):
                raise ValueError(f"label must be 0 or 1, got {a.y!r}")
            if a.weight < 0:
                raise ValueError(f"negative weight at {a.x!r}")
            parsed.append(a)
        if not parsed:
            raise ValueError("distribution needs at least one atom")
        total = sum((a.weight for a in parsed), Fraction(0))
        if total != 1:
            raise ValueError(f"weights sum to {total}, not 1")
        self._index = {}
        for i, a in enumerate(parsed):
            if a.x in self._index:
                raise ValueError(f"duplicate atom point {a.x!r}")
            self._index[a.x] = i
        check_domain_consistency(self._index)
        self.atoms = tuple(parsed)

    @classmethod
    def uniform(cls, points: Sequence[Point], labels: Sequence[int]) -> "DiscreteDistribution":
        w = Fraction(1, len(points))
        return cls((x, y, w) for x, y in zip(points, labels))

    @property
    def support(self) -> tuple:
        return tuple(a.x for a in self.atoms if a.weight > 0)

    @property
    def points(self) -> tuple:
        return tuple(a.x for a in self.atoms)

    def weight_of(self, x: Point) -> Fraction:
        i = self._index.get(x)
        return Fraction(0) if i is None else self.atoms[i].weight

    def label_of(self, x: Point) -> Label:
        return self.atoms[self._index[x]].y

    def marginal_weight(self, pred) -> Fraction:
        """Exact ``P_X({x : pred(x)})``."""
        return sum((a.weight for a in self.atoms if pred(a.x)), Fraction(0))

    def __len__(self) -> int:
        return len(self.atoms)

    def __repr__(self) -> str:
        return f"DiscreteDistribution({len(self.atoms)} atoms)"


LabeledSample = list  # list[tuple[Point, int]]; duplicates allowed
UnlabeledSample = list  # list[Point]
