import random
from fractions import Fraction as F

import pytest

from _gen import finite_instance, random_threshold_task
from robcert.adversary import (
    CallbackAdversary,
    FiniteExhaustive,
    ThresholdEndpoints,
    attack,
    is_admissible_attack,
    measure_query_complexity,
    witness_from_nonadaptive,
)
from robcert.constructions import build_seven_point
from robcert.core import Ball, FiniteClass, Tabular, Threshold, identity_map, margin_membership
from robcert.errors import InadmissibleAttack, ProperViolation, UnsupportedCombination, WitnessValidationError
from robcert.oracles import BudgetedLabelOracle

R = F(1, 10)


def test_threshold_example():
    h, U = Threshold(F(1, 2)), Ball("l2", R)
    res = attack(ThresholdEndpoints(), BudgetedLabelOracle(h), [F(45, 100)], U, labels=[0])
    assert [z for z, _ in res.per_source[0]] == [F(35, 100), F(55, 100)]
    assert res.points == [F(55, 100)]
    assert is_admissible_attack(res, [F(45, 100)], h, U)


def test_threshold_needs_labels_and_ball():
    with pytest.raises(ValueError):
        attack(ThresholdEndpoints(), BudgetedLabelOracle(Threshold(0)), [F(0)], Ball("l2", R))
    with pytest.raises(UnsupportedCombination):
        attack(ThresholdEndpoints(), BudgetedLabelOracle(Threshold(0)), ["a"], identity_map(["a"]), labels=[0])


def test_exhaustive_examples():
    ci = build_seven_point()
    h1 = ci.H.by_name("h1")
    res = attack(FiniteExhaustive(), BudgetedLabelOracle(h1), ["x1"], ci.U)
    assert res.points == ["x2"]
    res = attack(FiniteExhaustive(), BudgetedLabelOracle(h1), ["x7"], ci.U)
    assert res.points == []


def test_admissibility_conditions():
    h, U = Threshold(F(1, 2)), Ball("l2", R)
    assert is_admissible_attack([], [F(0)], h, U)
    assert not is_admissible_attack([], [F(45, 100)], h, U)
    assert not is_admissible_attack([F(0)], [F(45, 100)], h, U)


def test_properness_is_enforced():
    U = Ball("l2", R)
    far = CallbackAdversary(lambda q, x, U, y: [q(x + 1)])
    with pytest.raises(ProperViolation):
        attack(far, BudgetedLabelOracle(Threshold(0)), [F(0)], U)
    unqueried = CallbackAdversary(lambda q, x, U, y: [x + R])
    with pytest.raises(ProperViolation):
        attack(unqueried, BudgetedLabelOracle(Threshold(0)), [F(0)], U)


def test_query_complexity():
    rng = random.Random(1)
    U = Ball("l2", R)
    inst = []
    for n in range(0, 101, 5):
        h = Threshold(F(rng.randint(0, 100), 100))
        inst.append(([F(rng.randint(0, 100), 100) for _ in range(n)], h))
    rep = measure_query_complexity(ThresholdEndpoints(), inst, U)
    assert rep.efficient and rep.bound == 2
    assert all(q == 2 * n for n, q in rep.counts)
    assert rep.max_by_size[0] == 0


def test_query_complexity_exhaustive_and_failure():
    rng = random.Random(2)
    domain, H, U = finite_instance(rng)
    inst = [([rng.choice(domain) for _ in range(n)], H[0]) for n in range(1, 20)]
    rep = measure_query_complexity(FiniteExhaustive(), inst, U)
    c = max(len(U(x)) for x in domain)
    assert rep.efficient and all(q <= c * n for n, q in rep.counts)
    lazy = CallbackAdversary(lambda q, x, U, y: [])
    with pytest.raises(InadmissibleAttack):
        measure_query_complexity(lazy, [([F(45, 100)], Threshold(F(1, 2)))], Ball("l2", R))


def test_perfect_and_non_adaptive():
    rng = random.Random(3)
    for _ in range(200):
        h, r, S = random_threshold_task(rng)
        U = Ball("l2", r)
        S_X = [x for x, _ in S]
        a = attack(ThresholdEndpoints(), BudgetedLabelOracle(h), S_X, U, labels=[y for _, y in S])
        assert is_admissible_attack(a, S_X, h, U)
        g = Threshold(h.t + F(1, 7))
        b = attack(ThresholdEndpoints(), BudgetedLabelOracle(g), S_X, U, labels=[g(x) for x in S_X])
        assert [[z for z, _ in log] for log in a.per_source] == [[z for z, _ in log] for log in b.per_source]


def test_witness_from_threshold_adversary():
    panel = [F(i, 20) for i in range(21)]
    H = FiniteClass([Threshold(t) for t in panel + [F(2)]])
    U = Ball("l2", R)
    for x in panel:
        w = witness_from_nonadaptive(ThresholdEndpoints(), x, U, H)
        assert set(w.points) == {x - R, x, x + R}


def test_witness_from_exhaustive_adversary():
    rng = random.Random(4)
    for _ in range(100):
        domain, H, U = finite_instance(rng)
        for x in domain:
            w = witness_from_nonadaptive(FiniteExhaustive(), x, U, H)
            assert set(w.points) == set(U(x))
            for h in H:
                assert w.decide(w.restrict(h)) == margin_membership(h, x, U)
    w = witness_from_nonadaptive(FiniteExhaustive(), "a", identity_map(["a"]), FiniteClass([Tabular({"a": 1})]))
    assert w.points == ("a",)


def test_witness_validation_failure():
    half = CallbackAdversary(lambda q, x, U, y: [], adaptive=False, planned=lambda x, U: [x + U.radius])
    H = FiniteClass([Threshold(F(-1, 20)), Threshold(F(1, 20))])
    with pytest.raises(WitnessValidationError):
        witness_from_nonadaptive(half, F(0), Ball("l2", R), H)
    with pytest.raises(ValueError):
        witness_from_nonadaptive(CallbackAdversary(lambda *a: []), F(0), Ball("l2", R), H)
