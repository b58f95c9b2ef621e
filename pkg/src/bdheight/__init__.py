"""Busy-period height of a finite birth-and-death chain.

The chain on {0..N} has birth rate (N - i) nu and death rate i mu in
state i.  This package computes the exact distribution and moments of
the height H (the maximum state reached during one excursion above 0),
its growth constants and limit behaviour, numerically certifies the
finite-N inequalities behind the limits, cross-checks everything against
an independent first-passage solver, and validates the lot with a
reproducible Monte Carlo sampler.
"""

__version__ = "0.1.0"

from .errors import BDHeightError, CapacityError, ParameterError, SimulationAbort
from .model import (
    ModelParams,
    StationaryLaw,
    jump_down_prob,
    jump_up_prob,
    jump_up_probs,
    make_params,
    stationary_pmf,
)
from .exactdist import (
    HeightDistribution,
    RationalHeightDistribution,
    exact_rational_distribution,
    height_distribution,
    log_r_term,
    moments,
    survival,
)
from .oracle import (
    FirstPassageSystem,
    conditional_ascent_probs,
    first_passage_prob,
    height_dist_oracle,
    solve_first_passage_system,
)
from .asymptotics import (
    AlphaSolution,
    BoundConstants,
    BoundReport,
    bound_constants,
    check_mean_bounds,
    check_peak_ratio_bounds,
    concentration_mass,
    concentration_window,
    convergence_table,
    height_fraction_limit,
    solve_alpha,
    stirling_ratio,
    variance_limit,
    wlln_tail_mass,
)
from .simulate import (
    FULL_CTMC,
    JUMP_CHAIN,
    LADDER,
    SimulationConfig,
    SimulationSummary,
    dkw_epsilon,
    estimate_mean_excursion_steps,
    run_batch,
    sample_excursion_ctmc,
    sample_height,
)

__all__ = [
    "__version__",
    "BDHeightError", "CapacityError", "ParameterError", "SimulationAbort",
    "ModelParams", "StationaryLaw", "make_params", "stationary_pmf",
    "jump_up_prob", "jump_down_prob", "jump_up_probs",
    "HeightDistribution", "RationalHeightDistribution", "height_distribution",
    "survival", "moments", "log_r_term", "exact_rational_distribution",
    "FirstPassageSystem", "first_passage_prob", "solve_first_passage_system",
    "height_dist_oracle", "conditional_ascent_probs",
    "AlphaSolution", "BoundConstants", "BoundReport", "solve_alpha",
    "height_fraction_limit", "variance_limit", "bound_constants",
    "check_peak_ratio_bounds", "check_mean_bounds", "stirling_ratio",
    "convergence_table", "concentration_window", "concentration_mass",
    "wlln_tail_mass",
    "LADDER", "JUMP_CHAIN", "FULL_CTMC",
    "SimulationConfig", "SimulationSummary", "run_batch",
    "sample_height", "sample_excursion_ctmc", "dkw_epsilon",
    "estimate_mean_excursion_steps",
]
