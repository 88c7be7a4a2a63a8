"""Meta-analysis of genetic association studies under the additive model."""

from .bias_study import (
    DENSITIES,
    BiasReport,
    MixtureDensity,
    Scenario,
    appendix_fixture,
    perturb_study_params,
    run_scenario,
    sample_standardized,
)
from .effects import (
    AdditiveEffect,
    PairEffect,
    StudySummary,
    cohens_d_variance,
    combine_pairs,
    crude_beta,
    crude_effect,
    hedges_j,
    pooled_sd,
)
from .odds_recovery import (
    CandidateTable,
    CombinedOR,
    MergedTable,
    ORRecord,
    combine_reported_ors,
    combined_or,
    expand_indicators,
    recover_tables,
    se_from_ci,
    select_pairing,
)
from .pooling import MetaResult, pool_random_effects
from .simulate import (
    SimConfig,
    SimDraw,
    SimStats,
    additive_regression,
    sim_effect,
    simulate_study,
    simulate_study_once,
)

__version__ = "0.1.0"

__all__ = [
    "AdditiveEffect",
    "BiasReport",
    "CandidateTable",
    "CombinedOR",
    "DENSITIES",
    "MergedTable",
    "MetaResult",
    "MixtureDensity",
    "ORRecord",
    "PairEffect",
    "Scenario",
    "SimConfig",
    "SimDraw",
    "SimStats",
    "StudySummary",
    "additive_regression",
    "appendix_fixture",
    "cohens_d_variance",
    "combine_pairs",
    "combine_reported_ors",
    "combined_or",
    "crude_beta",
    "crude_effect",
    "expand_indicators",
    "hedges_j",
    "perturb_study_params",
    "pool_random_effects",
    "pooled_sd",
    "recover_tables",
    "run_scenario",
    "sample_standardized",
    "se_from_ci",
    "select_pairing",
    "sim_effect",
    "simulate_study",
    "simulate_study_once",
]
