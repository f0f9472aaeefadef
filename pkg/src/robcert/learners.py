"""Robust learners.

* ``erm_robust``: empirical robust risk minimisation over a finite class or
  over thresholds under an interval perturbation.
* ``ssl_margin_prune`` / ``ssl_unlabeled_prune``: version-space pruning with a
  margin oracle or with an unlabeled sample.
* ``extended_oracle_learner``: minimises the robust loss against a labeler
  chosen from the version space, using only extended-margin-oracle values.
* ``cluster_learner``: improper learner labeling whole perturbation clusters.
* ``compress_robust`` / ``decompress_robust`` / ``compression_learner``:
  robust proper compression driven by a perfect, proper, non-adaptive
  adversary and a proper non-robust compressor.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Protocol, Sequence

import networkx as nx

from robcert.adversary import Adversary, attack
from robcert.core.loss import (
    empirical_robust_loss,
    hypothesis_sets,
    margin_class_sets,
    margin_membership,
    perturbation_contains,
)
from robcert.core.sampling import eps_net_size
from robcert.core.types import (
    Ball,
    FiniteClass,
    FiniteMap,
    Hypothesis,
    Label,
    PerturbationType,
    Point,
    Tabular,
    Threshold,
    ThresholdFamily,
    point_key,
    sorted_points,
)
from robcert.core.vc import vc_dimension
from robcert.errors import (
    EmptyAfterPruning,
    HeterogeneousCluster,
    MalformedCompression,
    NotRealizable,
    ProperViolation,
    UnsupportedCombination,
)
from robcert.oracles import OracleReport, ReplayOracle, transcript_hash


def version_space(H: FiniteClass, S: Sequence[tuple[Point, Label]]) -> list:
    """Members of ``H`` with zero empirical binary loss on ``S``, in class order."""
    return [h for h in H if all(h(x) == y for x, y in S)]


# ---------------------------------------------------------------------------
# Robust ERM


def threshold_candidates(S_X: Iterable, r) -> list:
    """Midpoints between consecutive breakpoints ``{x - r, x, x + r}`` plus infinite sentinels.

    Robust loss of a threshold is constant on each interval between
    consecutive breakpoints, so this list reaches every achievable value.
    """
    bps = sorted({b for x in S_X for b in (x - r, x, x + r)})
    mids = [(a + b) / 2 for a, b in zip(bps, bps[1:])]
    return [-math.inf, *mids, math.inf]


def erm_robust(H, S: Sequence[tuple[Point, Label]], U: PerturbationType) -> Hypothesis:
    """A member of ``H`` minimising the empirical robust loss; ties go to the first candidate."""
    if not S:
        raise ValueError("robust ERM needs a nonempty sample")
    if isinstance(H, FiniteClass):
        if len(H) == 0:
            raise ValueError("empty hypothesis class")
        candidates: Iterable[Hypothesis] = H
    elif isinstance(H, ThresholdFamily):
        if not isinstance(U, Ball):
            raise UnsupportedCombination("threshold ERM needs an interval perturbation")
        ts = threshold_candidates([x for x, _ in S], U.radius)
        candidates = [Threshold(t, upward=d) for d in H.directions for t in ts]
    else:
        raise UnsupportedCombination(f"no ERM search for {type(H).__name__}")
    best, best_loss = None, None
    for h in candidates:
        loss = empirical_robust_loss(h, S, U)
        if best_loss is None or loss < best_loss:
            best, best_loss = h, loss
    return best


# ---------------------------------------------------------------------------
# Semi-supervised pruning


def ssl_margin_prune(H: FiniteClass, S, margin_oracle: Callable[[Hypothesis], Fraction]) -> Hypothesis:
    for h in version_space(H, S):
        if margin_oracle(h) == 0:
            return h
    raise EmptyAfterPruning("no version-space member has zero margin weight")


def ssl_unlabeled_prune(H: FiniteClass, S, T: Sequence[Point], U: PerturbationType) -> Hypothesis:
    for h in version_space(H, S):
        if not any(margin_membership(h, x, U) for x in T):
            return h
    raise EmptyAfterPruning("no version-space member avoids the unlabeled sample in its margin")


def ssl_sample_sizes(H: FiniteClass, U: PerturbationType, domain, eps: float, delta: float) -> dict:
    """Labeled and unlabeled sizes from the eps-net bound on ``VC(H)`` and ``VC`` of the margin class.

    VC dimensions below 1 are rounded up to 1 so the bound stays defined.
    """
    domain = tuple(domain)
    d_h = vc_dimension(hypothesis_sets(H, domain), domain)
    d_m = vc_dimension(margin_class_sets(H, U, domain), domain)
    return {
        "vc_h": d_h,
        "vc_margin": d_m,
        "m_labeled": eps_net_size(max(1, d_h), eps, delta),
        "m_unlabeled": eps_net_size(max(1, d_m), eps, delta),
    }


def extended_oracle_scores(H: FiniteClass, h_e: Hypothesis, ext_oracle) -> list:
    """``P(mar h) + P(h_e Δ h) - P(mar h ∩ (h_e Δ h))`` for every ``h``, in class order."""
    out = []
    for h in H:
        mar, dis, both = ext_oracle(h, h_e)
        out.append(mar + dis - both)
    return out


def extended_oracle_learner(H: FiniteClass, S, ext_oracle, h_e: Hypothesis | None = None) -> Hypothesis:
    if h_e is None:
        vs = version_space(H, S)
        if not vs:
            raise EmptyAfterPruning("empty version space")
        h_e = vs[0]
    scores = extended_oracle_scores(H, h_e, ext_oracle)
    return H[min(range(len(H)), key=lambda i: scores[i])]


# ---------------------------------------------------------------------------
# Cluster learner


def perturbation_clusters(supp: Iterable[Point], U: FiniteMap) -> list[frozenset]:
    """Connected components of the graph with edges ``x - x'`` for ``x`` in ``supp``, ``x'`` in ``U(x)``."""
    g = nx.Graph()
    for x in supp:
        g.add_node(x)
        for z in U(x):
            g.add_edge(x, z)
    comps = [frozenset(c) for c in nx.connected_components(g)]
    return sorted(comps, key=lambda c: point_key(min(c, key=point_key)))


def cluster_learner(H: FiniteClass, S, supp: Iterable[Point], U: FiniteMap) -> Tabular:
    """Label every cluster with the value a homogeneous version-space member takes on its support part."""
    if not isinstance(U, FiniteMap):
        raise UnsupportedCombination("cluster learner needs a finite perturbation map")
    supp = frozenset(supp) | {x for x, _ in S}
    clusters = perturbation_clusters(supp, U)
    for c in clusters:
        labels = {y for x, y in S if x in c}
        if len(labels) > 1:
            raise HeterogeneousCluster(f"sample labels disagree inside cluster {sorted_points(c)!r}")
    parts = [c & supp for c in clusters]
    chosen = None
    for h in version_space(H, S):
        if all(len({h(x) for x in p}) == 1 for p in parts):
            chosen = h
            break
    if chosen is None:
        raise EmptyAfterPruning("no version-space member is homogeneous on every cluster")
    table = {}
    for c, p in zip(clusters, parts):
        y = chosen(next(iter(p)))
        table.update({x: y for x in c})
    return Tabular(table, name=f"cluster({chosen.label()})")


# ---------------------------------------------------------------------------
# Proper compressors


class Compressor(Protocol):
    name: str

    def compress(self, T: Sequence[tuple[Point, Label]]) -> list: ...

    def decompress(self, kept: Sequence[tuple[Point, Label]]) -> Hypothesis: ...


class ThresholdCompressor:
    """Keeps the largest 0-labeled and the smallest 1-labeled point of an upward-threshold sample."""

    name = "threshold"

    def compress(self, T):
        zeros = [x for x, y in T if y == 0]
        ones = [x for x, y in T if y == 1]
        if zeros and ones and max(zeros) >= min(ones):
            raise NotRealizable("sample is not realizable by an upward threshold")
        kept = []
        if zeros:
            kept.append((max(zeros), 0))
        if ones:
            kept.append((min(ones), 1))
        return kept

    def decompress(self, kept):
        zeros = [x for x, y in kept if y == 0]
        ones = [x for x, y in kept if y == 1]
        if len(zeros) > 1 or len(ones) > 1:
            raise MalformedCompression("threshold compression keeps at most one point per label")
        if zeros and ones:
            if zeros[0] >= ones[0]:
                raise MalformedCompression("kept points are not separable")
            return Threshold((zeros[0] + ones[0]) / 2)
        if ones:
            return Threshold(ones[0] - 1)
        if zeros:
            return Threshold(zeros[0] + 1)
        return Threshold(0)


class FiniteClassCompressor:
    """Greedy compressor: add a point the current first-consistent member gets wrong until it fits all of ``T``."""

    name = "finite"

    def __init__(self, H: FiniteClass):
        self.H = H

    def _first_consistent(self, kept):
        for h in self.H:
            if all(h(x) == y for x, y in kept):
                return h
        return None

    def compress(self, T):
        kept: list = []
        while True:
            h = self._first_consistent(kept)
            if h is None:
                raise NotRealizable("sample is not realizable by the finite class")
            bad = [(x, y) for x, y in T if h(x) != y]
            if not bad:
                return kept
            kept.append(min(bad, key=lambda p: point_key(p[0])))

    def decompress(self, kept):
        h = self._first_consistent(kept)
        if h is None:
            raise MalformedCompression("no class member fits the kept points")
        return h


# ---------------------------------------------------------------------------
# Robust compression


@dataclass(frozen=True)
class CompressedEntry:
    """A kept point of ``S`` (``rank is None``) or a source in ``S`` plus the rank and labels of its queries."""

    point: Point
    label: Label
    rank: int | None = None
    neighbor_labels: tuple = ()

    @property
    def has_side_info(self) -> bool:
        return self.rank is not None


@dataclass
class CompressedSet:
    entries: list
    U: PerturbationType
    adversary: str
    compressor: str
    meta: dict = field(default_factory=dict)

    def side_info_bits(self) -> int:
        bits = 0
        for e in self.entries:
            if e.has_side_info:
                bits += len(e.neighbor_labels) + max(1, (len(e.neighbor_labels) - 1).bit_length())
        return bits


class PropagatedOracle:
    """Labels a query with the label of the sample points whose perturbation set holds it.

    Stands in for the labeler under robust realizability, where every point of
    ``U(x)`` carries the label of ``x``.
    """

    def __init__(self, S: Sequence[tuple[Point, Label]], U: PerturbationType):
        self.S = list(S)
        self.U = U
        self.transcript: list = []
        self._line = isinstance(U, Ball) and all(not isinstance(x, (str, tuple)) for x, _ in self.S)
        if self._line:
            self.S.sort(key=lambda p: p[0])
            self._xs = [x for x, _ in self.S]

    @property
    def used(self) -> int:
        return len(self.transcript)

    def _covering(self, z):
        if self._line:
            r = self.U.radius
            lo, hi = bisect_left(self._xs, z - r), bisect_right(self._xs, z + r)
            return self.S[lo:hi]
        return [(x, y) for x, y in self.S if perturbation_contains(self.U, x, z)]

    def query(self, z: Point) -> Label:
        labels = {y for _, y in self._covering(z)}
        if len(labels) != 1:
            raise NotRealizable(f"query {z!r} is not covered by a unique sample label")
        y = labels.pop()
        self.transcript.append((z, y))
        return y

    __call__ = query

    def report(self) -> OracleReport:
        return OracleReport(self.used, transcript_hash(self.transcript))


def compress_robust(S, o, adv: Adversary, compressor: Compressor, U: PerturbationType) -> CompressedSet:
    """Compress ``S`` together with the adversary's labeled queries, rewriting query points as source + rank."""
    if adv.adaptive:
        raise ValueError("robust compression needs a non-adaptive adversary")
    S = list(S)
    S_X = [x for x, _ in S]
    res = attack(adv, o, S_X, U, labels=[y for _, y in S])
    T = dict(S)
    for log in res.per_source:
        for z, y in log:
            T.setdefault(z, y)
    kept = compressor.compress(sorted(T.items(), key=lambda p: point_key(p[0])))
    in_sample = dict(S)
    entries = []
    for z, y in kept:
        if z in in_sample:
            entries.append(CompressedEntry(z, y))
            continue
        for i, log in enumerate(res.per_source):
            pts = [q for q, _ in log]
            if z in pts:
                entries.append(CompressedEntry(S_X[i], S[i][1], pts.index(z), tuple(b for _, b in log)))
                break
        else:
            raise ProperViolation(f"kept point {z!r} has no source in the sample")
    return CompressedSet(entries, U, adv.kind, compressor.name, {"m": len(S), "T": len(T)})


def decompress_robust(cs: CompressedSet, adv: Adversary, compressor: Compressor) -> Hypothesis:
    """Re-run the adversary on stored label bits to recover kept query points, then decode."""
    if adv.kind != cs.adversary:
        raise MalformedCompression(f"compressed with {cs.adversary}, decoding with {adv.kind}")
    kept = []
    for e in cs.entries:
        if not e.has_side_info:
            kept.append((e.point, e.label))
            continue
        replay = ReplayOracle(e.neighbor_labels)
        try:
            adv.attack_point(replay.query, e.point, cs.U, e.label)
        except Exception as exc:
            raise MalformedCompression(f"replay failed at source {e.point!r}: {exc}") from exc
        if replay.used != len(e.neighbor_labels) or not 0 <= e.rank < replay.used:
            raise MalformedCompression(f"side information of source {e.point!r} does not match the replay")
        kept.append(replay.transcript[e.rank])
    return compressor.decompress(kept)


def compression_learner(S, U: PerturbationType, adv: Adversary, compressor: Compressor) -> Hypothesis:
    """Compress with labels propagated from the sample, then decompress."""
    S = list(S)
    cs = compress_robust(S, PropagatedOracle(S, U), adv, compressor, U)
    h = decompress_robust(cs, adv, compressor)
    if S and empirical_robust_loss(h, S, U) != 0:
        raise NotRealizable("sample is not robustly realizable")
    return h

