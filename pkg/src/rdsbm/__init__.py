"""Random-walk sampling of stochastic block models and de-biased estimation.

Simulates the exploration of step graphons by a random walk, completes the
visited chain into a sample graph, and estimates the block-model
parameters from that sample by several strategies: the walk-aware maximum
likelihood (explicit score system, numerical maximizer), SAEM when the
labels are latent, and corrections of the classical estimator for the
walk's sampling bias.
"""
from .graphon import (
    BiasedProfile,
    ClassPartition,
    SbmParams,
    biased_profile,
    check_connected,
    gamma_cdf,
    gamma_inverse,
    graphon_eval,
)
from .sampler import (
    CountStats,
    EmpiricalCdf,
    RdsSample,
    complete_graph,
    count_stats,
    load_sample,
    sample_from_document,
    sample_to_document,
    save_sample,
    simulate_walk,
)
from .metrics import (
    EmpiricalGraphon,
    Motif,
    MotifDensity,
    MOTIF_BACKEND,
    build_empirical_graphon,
    connected_motifs,
    dsub_truncated,
    motif_density_graph,
    motif_density_step_graphon,
)
from .mle import (
    Estimate,
    METHOD_TAGS,
    classical_estimator,
    log_likelihood_classical,
    log_likelihood_rds,
    mle_complete,
    score_residual_rds,
)
from .saem import (
    PinnedProposal,
    SaemData,
    SaemState,
    ThresholdProposal,
    VariationalParams,
    VariationalProposal,
    saem_classical_with_threshold,
    saem_rds,
    saem_step,
    step_size,
    variational_fixed_point,
)
from .debias import (
    debias_algebraic_general,
    debias_algebraic_q2,
    debias_by_empirical_cdf,
)
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    align_labels,
    histogram_rows,
    load_config,
    parse_config,
    run_experiment,
    save_config,
    serialize_config,
)
from .errors import (
    EmptyClassError,
    EstimationError,
    NonConvergenceError,
    NoValidRootError,
)

__version__ = "0.1.0"
