//! Linear SVM, stratified cross-validation, evaluation and significance
//! testing.

mod eval;
mod experiment;
mod folds;
pub mod gamma;
mod mcnemar;
mod svm;

use thiserror::Error;

use crate::features::FeatureError;
use crate::selection::SelectionError;

pub use self::eval::{evaluate, round1, ClassMetrics, Confusion, EvalReport};
pub use self::experiment::{
    compare_reports, prepare_corpus, results_tsv, run_experiment, train_fold, Comparison,
    CorpusSummary, ExperimentConfig, ExperimentReport, FoldModel, FoldSummary, GridResult,
    PreparedCorpus, REPORT_FORMAT,
};
pub use self::folds::{stratified_kfold, FoldAssignment};
pub use self::mcnemar::{mcnemar, mcnemar_from_counts, McNemarResult};
pub use self::svm::{
    predict, primal_objective, train_svm, Prediction, SolverConfig, SvmFit, SvmModel,
};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("cross-validation needs at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("no documents to assign to folds")]
    EmptyCell,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("feature space is empty")]
    NoFeatures,
    #[error("training data contains a single class")]
    SingleClass,
    #[error("model was trained on a different feature space")]
    SpaceMismatch,
    #[error("invalid parameter: {0}")]
    BadParam(String),
    #[error("model file line {line}: {message}")]
    BadModelFile { line: usize, message: String },
    #[error("experiments to compare differ: {0}")]
    Incomparable(String),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
}
