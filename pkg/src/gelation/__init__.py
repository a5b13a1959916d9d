"""Exact and Monte Carlo component statistics of sparse Erdos-Renyi graphs
through a conditioned compound Poisson representation."""

from .duality import DualityPair, borel_moments, borel_weights, conjugate, parametrize, solve_duality
from .connectivity import MuTable, mu_exact, mu_graph, mu_sandwich_check
from .ensemble import JumpLaw, choose_theta, ensemble_moments, jump_law, moment_limits
from .panjer import (
    CompoundSumTable,
    ConditionalEnsemble,
    compound_pmf,
    conditional_count_pmf,
    conditional_ensemble,
    conditional_max_pmf,
    conditional_N_pmf,
    hit_probability_identity,
    knbeta_ratio,
    ratio_identity_fra,
)
from .exactgraph import brute_force_law, law_by_partitions
from .rates import QuadraticRate, empirical_rates, grand_rates, ldp_rate, ldp_thresholds, mdp_rate
from .simulate import ComponentStats, MomentAccumulator, clt_constants_check, sample_graph_stats

__version__ = "0.1.0"
