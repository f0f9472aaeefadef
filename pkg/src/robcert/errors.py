"""Exception hierarchy.

Every error carries a module-qualified ``code`` so the CLI can report it and
map it to an exit status.
"""


class RobcertError(Exception):
    code = "robcert.Error"
    #: CLI exit status for this family of errors
    exit_status = 3


class DomainError(RobcertError, ValueError):
    """Point is outside the domain a hypothesis or perturbation is defined on."""

    code = "core.DomainError"
    exit_status = 2


class UnsupportedCombination(RobcertError, NotImplementedError):
    """No exact margin test exists for the given (hypothesis, perturbation) pair."""

    code = "core.UnsupportedCombination"
    exit_status = 2


class BudgetExhausted(RobcertError):
    code = "oracles.BudgetExhausted"


class OutsideClass(RobcertError):
    """A distribution oracle was asked about a hypothesis outside its class."""

    code = "oracles.OutsideClass"


class WitnessValidationError(RobcertError):
    code = "adversary.WitnessValidationError"


class InadmissibleAttack(RobcertError):
    code = "adversary.InadmissibleAttack"


class ProperViolation(RobcertError):
    code = "adversary.ProperViolation"


class EmptyAfterPruning(RobcertError):
    code = "learners.EmptyAfterPruning"


class HeterogeneousCluster(RobcertError):
    code = "learners.HeterogeneousCluster"


class NotRealizable(RobcertError):
    code = "learners.NotRealizable"


class MalformedCompression(RobcertError):
    code = "learners.MalformedCompression"


class ConstructionFailure(RobcertError):
    code = "constructions.ConstructionFailure"


class InvariantViolation(RobcertError, AssertionError):
    """An internal invariant failed. Always a bug in the engine."""

    code = "games.InvariantViolation"
    exit_status = 4
