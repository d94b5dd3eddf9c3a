"""Outcome-adaptive elastic-net variable selection for causal inference,
with propensity-score matching, ATT estimation, and a Monte Carlo
simulation harness."""

from .harness import (
    ExperimentConfig,
    MatchingOptions,
    MethodSummary,
    MonteCarloReport,
    ReplicationRecord,
    ingest_dataset,
    run_experiment,
    write_dataset_csv,
    write_report,
)
from .matching import (
    AttEstimate,
    MatchedSet,
    NoOverlapError,
    PropensityScores,
    auto_caliper,
    estimate_att,
    fit_propensity,
    match_nearest_neighbor,
)
from .pipeline import (
    Dataset,
    GridConfig,
    SelectionResult,
    outcome_adaptive_lasso,
    select_variables,
)
from .simulation import (
    OracleBenchmark,
    ScenarioSpec,
    builtin_scenario,
    derive_seed,
    generate,
    oracle_benchmark,
)
from .solvers import (
    AdaptiveWeights,
    CvResult,
    DesignMatrix,
    EnetFit,
    LogisticMle,
    OlsFit,
    PenaltySpec,
    compute_weights,
    cross_validate,
    expit,
    fit_enet_logistic,
    fit_logistic_mle,
    fit_ols,
    lambda_path,
    logit,
    mean_binomial_deviance,
    penalized_objective,
    standardize,
    unit_weights,
)

__version__ = "0.1.0"
