//! Productivity-factor selection: missing-data preprocessing, RReliefF
//! weighting, expert elicitation, hierarchical multi-criteria integration and
//! leave-one-out evaluation with analogy-based and set-reduction estimators.

pub mod data;
pub mod distance;
pub mod error;
pub mod estimators;
pub mod evaluation;
pub mod expert;
pub mod impute;
pub mod mcda;
pub mod pipeline;
pub mod relief;
pub mod stats;

pub use data::{
    load_dataset, normalize_numeric, parse_dataset, profile_missingness, prune_missing, Category, Dataset,
    FactorDescriptor, MissingnessProfile, ProjectRecord, PruneOutcome, PruneThresholds, Role, Scale, Schema, Value,
};
pub use error::{Error, Result};
pub use estimators::{knn_estimate, osr_estimate, EstimationQuery, EstimatorConfig, OsrConfig, OsrTrace, Prediction};
pub use evaluation::{anova_mre, compare_factor_sets, loocv, mre, summarize, AnovaResult, EstimateRecord, EvaluationReport, MetricsSummary};
pub use expert::{aggregate_expert_scores, kendall_w, Concordance, CriterionScores, ExpertRankingSet, Likert};
pub use impute::{knn_impute, ImputationConfig};
pub use mcda::{build_default_tree, evaluate, rank_alternatives, rebalance_weights, Alternative, McdaNode, PreferenceRanking};
pub use pipeline::{build_factor_sets, run_pipeline, FactorSets, RunManifest, SetRecipe};
pub use relief::{rrelieff, FactorSet, Provenance, ReliefConfig, WeightVector};
