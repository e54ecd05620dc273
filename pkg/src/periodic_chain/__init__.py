"""Two-state Markov chains with time-periodic transition rates."""

from .discrete import DiscreteChain, discrete_monodromy, mean_transitions_discrete, stationary_discrete
from .flow import ResolutionWarning
from .genfun import ConditioningError, FloquetSpectrum, floquet_spectrum, genfun_evolve, genfun_monodromy
from .montecarlo import MonteCarloWarning, ResourceCapError, ensemble_stats, sample_path
from .pspm import (DegenerateInputError, DistributionState, Pspm, convergence_rate_estimate,
                   evolve_distribution, mean_transitions, occupation_minus, pspm_at,
                   second_floquet_exponent)
from .rates import RateSpec, SpecError, eval_rates, integrate_rates, load_spec, rate_bounds
from .resonance import (HalfPeriodParams, asymptotic_period, constant_trace_mean, half_period_mean,
                        leading_order_period, quality_measure, tune_constant_trace, tune_half_period)

__version__ = "0.1.0"

__all__ = [
    "RateSpec", "SpecError", "eval_rates", "integrate_rates", "rate_bounds", "load_spec",
    "Pspm", "pspm_at", "mean_transitions", "occupation_minus", "second_floquet_exponent",
    "DistributionState", "evolve_distribution", "convergence_rate_estimate", "DegenerateInputError",
    "DiscreteChain", "stationary_discrete", "mean_transitions_discrete", "discrete_monodromy",
    "FloquetSpectrum", "floquet_spectrum", "genfun_monodromy", "genfun_evolve", "ConditioningError",
    "sample_path", "ensemble_stats", "ResourceCapError", "MonteCarloWarning", "ResolutionWarning",
    "HalfPeriodParams", "half_period_mean", "tune_half_period", "asymptotic_period",
    "leading_order_period", "quality_measure", "constant_trace_mean", "tune_constant_trace",
]
