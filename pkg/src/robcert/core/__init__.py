from robcert.core.loss import (
    binary_loss,
    empirical_binary_loss,
    empirical_robust_loss,
    hypothesis_sets,
    margin_class_sets,
    margin_membership,
    margin_set,
    perturbation_contains,
    robust_loss_point,
    true_loss,
)
from robcert.core.sampling import (
    eps_approx_size,
    eps_net_size,
    hoeffding_size,
    make_rng,
    sample,
    sample_unlabeled,
)
from robcert.core.types import (
    Atom,
    Ball,
    DiscreteDistribution,
    FiniteClass,
    FiniteMap,
    Halfspace,
    HalfspaceFamily,
    Hypothesis,
    HypothesisClass,
    Point,
    PerturbationType,
    RestrictionPair,
    Singleton,
    Tabular,
    Threshold,
    ThresholdFamily,
    as_point,
    format_point,
    format_rational,
    identity_map,
    is_restriction,
    point_key,
    sorted_points,
    to_rational,
)
from robcert.core.vc import shatters, vc_dimension

__all__ = [name for name in dir() if not name.startswith("_")]
