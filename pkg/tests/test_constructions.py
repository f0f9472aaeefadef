import dataclasses
from fractions import Fraction as F

import pytest

from robcert.constructions import (
    BUILDERS,
    build_seven_point,
    build_eight_point,
    compute_facts,
    mutate_weight,
    to_task,
    verify_indistinguishability,
)
from robcert.core import FiniteMap, true_loss
from robcert.core.taskio import task_from_dict, task_to_dict
from robcert.errors import ConstructionFailure


@pytest.mark.parametrize("name", sorted(BUILDERS))
def test_builders_verify(name):
    rep = verify_indistinguishability(BUILDERS[name]())
    assert rep.passed and not rep.violations
    assert rep.as_dict()["passed"]


def test_seven_point_facts():
    facts = compute_facts(build_seven_point())
    assert facts["argmin[P1]"] == ("h1",) and facts["argmin[P2]"] == ("h2",)
    assert facts["gap[P1]"] > 0 and facts["gap[P2]"] > 0


def test_class_of_second_instance_has_vc_two():
    assert compute_facts(build_eight_point())["vc_h"] == 2


def test_mutation_names_the_broken_facts():
    ci = mutate_weight(build_seven_point(), "P2", "x7", "x5", F(1, 6))
    rep = verify_indistinguishability(ci)
    assert not rep.passed
    assert rep.violations
    assert all(isinstance(v, str) for v in rep.violations)


def test_missing_self_in_map():
    ci = build_seven_point()

    class Bad(FiniteMap):
        def __call__(self, x):
            return frozenset()

    with pytest.raises(ConstructionFailure):
        dataclasses.replace(ci, U=Bad({}))


@pytest.mark.parametrize("name", sorted(BUILDERS))
def test_task_export_round_trip(name):
    ci = BUILDERS[name]()
    task = to_task(ci)
    back = task_from_dict(task_to_dict(task))
    assert back.hidden == ci.H.by_name("h1")
    for key in ("P1", "P2"):
        for h in ci.H:
            assert true_loss(h, back.distributions[key], back.U) == true_loss(h, ci.dist(key), ci.U)
