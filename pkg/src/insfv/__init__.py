"""Infinite-swapping Fleming-Viot particle methods for principal eigenvalues and QSDs."""

__version__ = "0.1.0"

from .core import (ConstructionError, GridPolicy, InvalidInputError, PeriodicBox, ProblemSpec, RngStream,
                   cosine_problem, gaussian_mixture_problem, load_problem, make_problem, wrap)
from .engines import (EnsembleState, EventRates, ParticlePair, WeightedTrajectory, event_rates, kill_clone,
                      simulate_finite_swap, simulate_ins, simulate_standard_fv)
from .estimators import (DensityTable, EigenEstimate, WeightedEmpirical, eigenvalue_estimate,
                         marginal_histogram, resample, total_variation, weighted_empirical)
from .jump import RateVector, consistency_report, one_step, transition_rates
from .oracle import GeneratorMatrix, build_generator, principal_eigenpair
from .swap import finite_swap_rate, implied_potential, inf_swap_weight

__all__ = [
    "ConstructionError", "DensityTable", "EigenEstimate", "EnsembleState", "EventRates", "GeneratorMatrix",
    "GridPolicy", "InvalidInputError", "ParticlePair", "PeriodicBox", "ProblemSpec", "RateVector", "RngStream",
    "WeightedEmpirical", "WeightedTrajectory", "build_generator", "consistency_report", "cosine_problem",
    "eigenvalue_estimate", "event_rates", "finite_swap_rate", "gaussian_mixture_problem", "implied_potential",
    "inf_swap_weight", "kill_clone", "load_problem", "make_problem", "marginal_histogram", "one_step",
    "principal_eigenpair", "resample", "simulate_finite_swap", "simulate_ins", "simulate_standard_fv",
    "total_variation", "transition_rates", "weighted_empirical", "wrap",
]
