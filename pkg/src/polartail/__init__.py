"""Rare-tail probabilities of sums via L1-polar importance sampling."""
from .baselines import ak_estimate, cmc_estimate, tilt_estimate, tilt_solve
from .copulas import AMH, Clayton, Frank, GumbelHougaard, Independent, ProblemSpec
from .marginals import Exponential, Lognormal, Pareto, Weibull
from .polar import (
    ExactConditional,
    ExactSum,
    LightWeibullGaussian,
    LightWeibullProp1,
    OptimisticDep,
    OptimisticInd,
    SubexpDominant,
    optimistic_weights,
    polar_is_estimate,
    to_polar,
    from_polar,
)
from .results import EstimatorResult

__version__ = "0.1.0"

__all__ = [
    "ak_estimate", "cmc_estimate", "tilt_estimate", "tilt_solve",
    "AMH", "Clayton", "Frank", "GumbelHougaard", "Independent", "ProblemSpec",
    "Exponential", "Lognormal", "Pareto", "Weibull",
    "ExactConditional", "ExactSum", "LightWeibullGaussian", "LightWeibullProp1",
    "OptimisticDep", "OptimisticInd", "SubexpDominant", "optimistic_weights",
    "polar_is_estimate", "to_polar", "from_polar", "EstimatorResult",
]
