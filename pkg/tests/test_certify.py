import math
import random
from fractions import Fraction as F

import pytest

from _gen import finite_instance
from robcert.certify import (
    CertificationReport,
    build_witness_set,
    certify_halfspace_l1,
    certify_tolerant_l2,
    certify_witness,
    l1_corners,
    polygon_contains_disk,
    polygon_offsets,
    rational_unit_vector,
    tolerant_polygon_vertices,
)
from robcert.constructions import build_seven_point
from robcert.core import (
    Ball,
    FiniteClass,
    Halfspace,
    Tabular,
    empirical_binary_loss,
    identity_map,
    margin_membership,
    sample,
    true_loss,
)
from robcert.oracles import BudgetedLabelOracle


class TestWitnessSets:
    def test_seven_point_instance(self):
        ci = build_seven_point()
        w = build_witness_set(ci.H, ci.U, "x2")
        assert set(w.points) <= {"x1", "x2", "x3"}
        assert w.decide(w.restrict(ci.H.by_name("h1")))
        assert not w.decide(w.restrict(ci.H.by_name("h2")))

    def test_constant_class(self):
        dom = ["a", "b", "c"]
        U = {"a": ["b", "c"]}
        from robcert.core import FiniteMap

        H = FiniteClass([Tabular.from_ones(dom, []), Tabular.from_ones(dom, dom)])
        w = build_witness_set(H, FiniteMap(U), "a")
        assert w.points == ("a",)
        assert not any(w.decide(w.restrict(h)) for h in H)

    def test_single_hypothesis_is_small(self):
        rng = random.Random(5)
        for _ in range(100):
            domain, H, U = finite_instance(rng)
            one = FiniteClass([H[0]])
            for x in domain:
                assert len(build_witness_set(one, U, x).points) <= 3

    def test_soundness_exhaustive(self):
        rng = random.Random(6)
        for _ in range(300):
            domain, H, U = finite_instance(rng)
            for x in domain:
                w = build_witness_set(H, U, x)
                assert all(w.decide(w.restrict(h)) == margin_membership(h, x, U) for h in H)

    def test_rejects_infinite_inputs(self):
        with pytest.raises(TypeError):
            build_witness_set(FiniteClass([Tabular({"a": 0})]), Ball("l2", 1), "a")


class TestWitnessCertifier:
    def test_trial_contract(self):
        ci = build_seven_point()
        h1 = ci.H.by_name("h1")
        exact = true_loss(h1, ci.P1, ci.U)
        hits = 0
        for i in range(100):
            S = sample(ci.P1, 185, seed=f"w:{i}")
            rep = certify_witness(
                BudgetedLabelOracle(h1),
                [x for x, _ in S],
                lambda x: build_witness_set(ci.H, ci.U, x),
                [y for _, y in S],
                0.1,
                0.05,
            )
            assert rep.q_used <= rep.budget
            hits += abs(rep.estimate - exact) < F(1, 10)
        assert hits >= 95

    def test_identity_map_reduces_to_binary_loss(self):
        ci = build_seven_point()
        U = identity_map(ci.domain)
        h = ci.H.by_name("h2")
        S = sample(ci.P2, 200, seed=1)
        rep = certify_witness(
            BudgetedLabelOracle(h), [x for x, _ in S], lambda x: build_witness_set(ci.H, U, x), [y for _, y in S], 0.1, 0.05
        )
        assert rep.estimate == empirical_binary_loss(h, S)

    def test_sample_size_precondition(self):
        with pytest.raises(ValueError):
            certify_witness(BudgetedLabelOracle(lambda x: 0), ["a"], None, [0], 0.1, 0.05)

    def test_report_enforces_budget(self):
        with pytest.raises(AssertionError):
            CertificationReport(F(0), 1, 6, 5, "l1")


class TestL1:
    def test_examples(self):
        r = F(1, 10)
        h = Halfspace((1, 0), 0)
        rep = certify_halfspace_l1(BudgetedLabelOracle(h), [((r / 2, F(0)), 1)], r)
        assert rep.flags == (True,)
        rep = certify_halfspace_l1(BudgetedLabelOracle(h), [((F(1), F(0)), 1)], r)
        assert rep.flags == (False,) and rep.estimate == 0
        S = [((F(i), F(i)), 1) for i in range(7)]
        assert certify_halfspace_l1(BudgetedLabelOracle(h), S, r).q_used == 35

    def test_corner_order(self):
        assert l1_corners((F(0), F(0)), 1) == ((0, 1), (1, 0), (-1, 0), (0, -1))

    def test_corner_flag_equals_exact_margin(self):
        rng = random.Random(7)

        def q():
            return F(rng.randint(-40, 40), rng.randint(1, 8))

        for _ in range(10000):
            w = (q(), q())
            if w == (0, 0):
                continue
            h = Halfspace(w, q())
            r = F(rng.randint(0, 20), 8)
            x = (q(), q())
            U = Ball("l1", r)
            rep = certify_halfspace_l1(BudgetedLabelOracle(h), [(x, h(x))], r)
            assert rep.flags[0] == margin_membership(h, x, U)


class TestTolerant:
    def test_vertex_counts(self):
        assert tolerant_polygon_vertices(1) == 3
        assert tolerant_polygon_vertices(0.02) == 16
        ks = [tolerant_polygon_vertices(g / 100) for g in range(1, 300)]
        assert all(a >= b for a, b in zip(ks, ks[1:]))
        with pytest.raises(ValueError):
            tolerant_polygon_vertices(0)

    def test_rational_points_on_circle(self):
        for j in range(12):
            c, s = rational_unit_vector(2 * math.pi * j / 12)
            assert c * c + s * s == 1
            assert abs(float(c) - math.cos(2 * math.pi * j / 12)) < 1e-6

    def test_exact_containment(self):
        assert polygon_contains_disk(polygon_offsets(16, F(102, 100)), 1)
        assert polygon_contains_disk(polygon_offsets(4, F(3, 2)), 1)
        assert not polygon_contains_disk(polygon_offsets(3, F(19, 10)), 1)
        # gamma = 1 leaves no slack: the exact triangle touches the disk, the rational one cuts it
        assert not polygon_contains_disk(polygon_offsets(3, 2), 1)

    def test_examples_and_budget(self):
        r, gamma = F(1), F(1, 2)
        h = Halfspace((1, 0), 0)
        k = tolerant_polygon_vertices(gamma)
        far = ((F(2), F(0)), 1)
        near = ((F(1, 2), F(0)), 1)
        rep = certify_tolerant_l2(BudgetedLabelOracle(h), [far, near], r, gamma)
        assert rep.flags == (False, True)
        assert rep.q_used == 2 * (k + 1)
        assert rep.exact_sandwich

    def test_sandwich(self):
        rng = random.Random(8)

        def q():
            return F(rng.randint(-30, 30), rng.randint(1, 6))

        for _ in range(10000):
            w = (q(), q())
            if w == (0, 0):
                continue
            h = Halfspace(w, q())
            r = F(rng.randint(1, 12), 4)
            gamma = F(rng.randint(1, 20), 10)
            x = (q(), q())
            rep = certify_tolerant_l2(BudgetedLabelOracle(h), [(x, h(x))], r, gamma)
            if margin_membership(h, x, Ball("l2", r)):
                assert rep.flags[0]
            if not margin_membership(h, x, Ball("l2", r * (1 + gamma))):
                assert not rep.flags[0]
