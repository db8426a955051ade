//! Metrics, grouped cross-validation, classical baselines and the
//! benchmark harness that ties data, matrices and networks together.

mod baselines;
mod benchmark;
mod metrics;
mod split;

pub use baselines::{bivariate_fit_score, mutual_information, pearson, DEFAULT_FIT_DEGREE};
pub use benchmark::{
    baseline_scores, headline_metric, run_benchmark, score, train_models, Aggregate, BaselineScores,
    BenchmarkOutput, BenchmarkSetup, EvalConfig, EvalMode, EvalReport, FoldReport, Models, ReportConfig,
    ScoredPair,
};
pub use metrics::{accuracy, auroc, bidirectional_auroc, combine, mean_ovr_auroc, weighted_accuracy};
pub use split::{kfold_split, Fold};
