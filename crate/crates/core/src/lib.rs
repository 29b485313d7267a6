//! Simulator and analysis toolkit for community detection on
//! multi-view stochastic block models: correlated multi-graph
//! generation, exact and heuristic maximum-likelihood recovery,
//! divergence and error-bound evaluators, and Monte Carlo threshold
//! sweeps.

pub mod bounds;
pub mod cli;
pub mod divergence;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod model;
pub mod sampler;

pub use error::{Error, Result};
pub use model::{
    check_assumptions, make_bernoulli_sbm, make_identical_views, make_independent_views,
    AssumptionReport, DistributionOnHypercube, ModelKind, ModelSpec, MvsbmParams,
};
pub use divergence::{
    chernoff_t, geometric_tilt, kl, renyi_half, threshold_stat, DivergenceReport, TiltedPair,
};
pub use sampler::{
    sample_labeling, sample_tensor, sample_tensor_psi, AdjacencyTensor, Labeling, SeedSpec,
};
pub use estimators::{
    llr_matrix, ml_exact, ml_heuristic, recovery_metrics, score, EstimateResult, LlrMatrix,
    RecoveryMetrics,
};
pub use bounds::{
    estimate_lemma2_lhs, labeling_count_log, labeling_count_log_relaxed, lemma1_term,
    log_likelihood_ratio, ml_union_bound, psi_diagnostics, BoundReport, PsiDiagnostics,
};
pub use harness::{
    emit_csv, run_sweep, run_trials, sweep_csv, synthesize_point, wilson_interval,
    ExperimentConfig, Method, PointShape, PointSummary, SweepResult, TrialRecord,
};
