import random
from fractions import Fraction as F

import pytest

from _gen import cluster_task, finite_instance, random_threshold_task, robustly_realizable_task
from robcert.adversary import FiniteExhaustive, ThresholdEndpoints
from robcert.constructions import build_seven_point, build_eight_point
from robcert.core import (
    Ball,
    FiniteClass,
    FiniteMap,
    Tabular,
    Threshold,
    ThresholdFamily,
    empirical_robust_loss,
    margin_set,
)
from robcert.errors import EmptyAfterPruning, HeterogeneousCluster, MalformedCompression, NotRealizable
from robcert.learners import (
    CompressedEntry,
    CompressedSet,
    FiniteClassCompressor,
    PropagatedOracle,
    ThresholdCompressor,
    cluster_learner,
    compress_robust,
    compression_learner,
    decompress_robust,
    erm_robust,
    extended_oracle_learner,
    extended_oracle_scores,
    perturbation_clusters,
    ssl_margin_prune,
    ssl_sample_sizes,
    ssl_unlabeled_prune,
    threshold_candidates,
    version_space,
)
from robcert.oracles import BudgetedLabelOracle, extended_margin_oracle, margin_oracle


class TestERM:
    def test_seven_point_instance(self):
        ci = build_seven_point()
        S = [(a.x, a.y) for a in ci.P1.atoms]
        assert erm_robust(ci.H, S, ci.U).label() == "h1"

    def test_thresholds_match_a_fine_grid(self):
        rng = random.Random(21)
        for _ in range(150):
            h, r, S = random_threshold_task(rng, max_m=12)
            if rng.random() < 0.5:
                S = [(x, 1 - y) if rng.random() < 0.2 else (x, y) for x, y in S]
            U = Ball("l2", r)
            got = erm_robust(ThresholdFamily(), S, U)
            grid = sorted({b for x, _ in S for b in (x - r, x, x + r)})
            brute = min(empirical_robust_loss(Threshold(t), S, U) for t in grid + [F(-99), F(99)])
            assert empirical_robust_loss(got, S, U) <= brute

    def test_candidates_and_guards(self):
        ts = threshold_candidates([F(0)], F(1))
        assert ts[1:-1] == [F(-1, 2), F(1, 2)]
        with pytest.raises(ValueError):
            erm_robust(FiniteClass([Tabular({"a": 0})]), [], FiniteMap({}))


class TestSemiSupervised:
    def test_pruning_can_empty_the_class(self):
        ci = build_seven_point()
        S = [(a.x, a.y) for a in ci.P1.atoms]
        with pytest.raises(EmptyAfterPruning):
            ssl_margin_prune(ci.H, S, lambda h: margin_oracle(ci.P1, ci.U, h))

    def test_realizable_instances(self):
        rng = random.Random(22)
        for _ in range(100):
            domain, H, U, P, target = robustly_realizable_task(rng)
            S = [(a.x, a.y) for a in P.atoms if a.weight > 0]
            h = ssl_margin_prune(H, S, lambda g: margin_oracle(P, U, g))
            assert empirical_robust_loss(h, S, U) == 0
            g = ssl_unlabeled_prune(H, S, list(P.support), U)
            assert not margin_set(g, U, P.support)

    def test_sizes(self):
        ci = build_seven_point()
        sizes = ssl_sample_sizes(ci.H, ci.U, ci.domain, 0.1, 0.1)
        assert sizes["vc_h"] >= 1 and sizes["m_labeled"] >= 646


class TestExtendedOracle:
    def test_score_is_union_weight(self):
        ci = build_eight_point()
        he = ci.H.by_name("h_r")
        ext = lambda h, g: extended_margin_oracle(ci.P1, ci.U, h, g)  # noqa: E731
        for h, s in zip(ci.H, extended_oracle_scores(ci.H, he, ext)):
            bad = margin_set(h, ci.U, ci.domain) | {x for x in ci.domain if h(x) != he(x)}
            assert s == sum((ci.P1.weight_of(x) for x in bad), F(0))

    def test_learner_defaults_to_first_consistent(self):
        ci = build_eight_point()
        S = [(a.x, a.y) for a in ci.P1.atoms if a.weight > 0]
        ext = lambda h, g: extended_margin_oracle(ci.P1, ci.U, h, g)  # noqa: E731
        assert extended_oracle_learner(ci.H, S, ext) == extended_oracle_learner(ci.H, S, ext, version_space(ci.H, S)[0])


class TestClusters:
    def test_two_clusters(self):
        dom = ["a", "b", "c", "d"]
        U = FiniteMap({"a": ["b"], "c": ["d"]})
        assert perturbation_clusters(dom, U) == [frozenset("ab"), frozenset("cd")]
        H = FiniteClass([Tabular.from_ones(dom, ["c"]), Tabular.from_ones(dom, ["c", "d"])])
        h = cluster_learner(H, [("a", 0), ("c", 1)], dom, U)
        assert h == Tabular.from_ones(dom, ["c", "d"])

    def test_heterogeneous(self):
        dom = ["a", "b"]
        H = FiniteClass([Tabular.from_ones(dom, ["a"])])
        with pytest.raises(HeterogeneousCluster):
            cluster_learner(H, [("a", 1), ("b", 0)], dom, FiniteMap({"a": ["b"]}))

    def test_random_cluster_tasks(self):
        rng = random.Random(23)
        for _ in range(100):
            domain, H, U, P, supp = cluster_task(rng)
            S = [(a.x, a.y) for a in P.atoms]
            h = cluster_learner(H, S, supp, U)
            assert empirical_robust_loss(h, S, U) == 0


class TestCompressors:
    def test_threshold_examples(self):
        c = ThresholdCompressor()
        assert c.compress([(F(1), 0), (F(2), 0), (F(5), 1), (F(7), 1)]) == [(F(2), 0), (F(5), 1)]
        assert c.decompress([(F(2), 0), (F(5), 1)]) == Threshold(F(7, 2))
        assert c.decompress([(F(5), 1)]) == Threshold(F(4))
        assert c.decompress([(F(2), 0)]) == Threshold(F(3))
        with pytest.raises(NotRealizable):
            c.compress([(F(3), 0), (F(2), 1)])
        with pytest.raises(MalformedCompression):
            c.decompress([(F(1), 0), (F(2), 0)])
        with pytest.raises(MalformedCompression):
            c.decompress([(F(3), 0), (F(2), 1)])

    def test_finite_round_trip(self):
        rng = random.Random(24)
        for _ in range(200):
            domain, H, U = finite_instance(rng)
            h = H[rng.randrange(len(H))]
            T = [(x, h(x)) for x in domain]
            c = FiniteClassCompressor(H)
            g = c.decompress(c.compress(T))
            assert all(g(x) == y for x, y in T)


class TestRobustCompression:
    def test_hand_trace(self):
        r = F(1, 10)
        U = Ball("l2", r)
        S = [(F(2, 10), 0), (F(9, 10), 1)]
        h = Threshold(F(1, 2))
        cs = compress_robust(S, BudgetedLabelOracle(h), ThresholdEndpoints(), ThresholdCompressor(), U)
        assert [e.rank for e in cs.entries] == [1, 0]
        assert [e.neighbor_labels for e in cs.entries] == [(0, 0), (1, 1)]
        g = decompress_robust(cs, ThresholdEndpoints(), ThresholdCompressor())
        assert g == Threshold(F(55, 100))
        assert cs.side_info_bits() == 6

    def test_learner_on_random_thresholds(self):
        rng = random.Random(25)
        for _ in range(200):
            h, r, S = random_threshold_task(rng)
            U = Ball("l2", r)
            if empirical_robust_loss(h, S, U) != 0:
                continue
            g = compression_learner(S, U, ThresholdEndpoints(), ThresholdCompressor())
            assert empirical_robust_loss(g, S, U) == 0

    def test_finite_exhaustive(self):
        rng = random.Random(26)
        for _ in range(60):
            domain, H, U, P, target = robustly_realizable_task(rng)
            S = [(a.x, a.y) for a in P.atoms if a.weight > 0]
            g = compression_learner(S, U, FiniteExhaustive(), FiniteClassCompressor(H))
            assert empirical_robust_loss(g, S, U) == 0

    def test_propagated_oracle(self):
        o = PropagatedOracle([(F(0), 0), (F(1), 1)], Ball("l2", F(1, 10)))
        assert o.query(F(1, 20)) == 0 and o.query(F(21, 20)) == 1
        with pytest.raises(NotRealizable):
            o.query(F(1, 2))
        assert o.used == 2

    def test_tampered_side_info(self):
        U = Ball("l2", F(1, 10))
        bad = CompressedSet([CompressedEntry(F(0), 0, 5, (0, 0))], U, "threshold", "threshold")
        with pytest.raises(MalformedCompression):
            decompress_robust(bad, ThresholdEndpoints(), ThresholdCompressor())
        wrong = CompressedSet([], U, "exhaustive", "threshold")
        with pytest.raises(MalformedCompression):
            decompress_robust(wrong, ThresholdEndpoints(), ThresholdCompressor())
