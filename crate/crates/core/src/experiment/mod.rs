//! Data model, splitting, training and the experiment harness.

mod bench;
mod data;
mod grid;
mod matrix;
mod split;
mod synthetic;
mod train;

use thiserror::Error;

use crate::features::FeatureError;
use crate::losses::LossError;
use crate::metrics::MetricsError;
use crate::nn::NnError;

pub use bench::{synth_bench, BenchReport, BenchRow, Tally, BENCH_CSV_HEADER};
pub use data::{
    attach_features, read_manifest, scale_labels, unscale_labels, write_manifest, ManifestRow,
    Utterance, LABEL_MAX, LABEL_MIN,
};
pub use grid::{grid_search_weights, select_best, weight_lattice, GridCell, GRID_MAX_EPOCHS};
pub use matrix::{matrix_csv, run_matrix, MatrixPart, MatrixRow, MATRIX_CSV_HEADER};
pub use split::{loso_split, DatasetSplit};
pub use synthetic::synthetic_corpus;
pub use train::{
    predict, sequence_batch, train, train_observed, EpochRecord, ExperimentResult, TrainConfig,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("label {0} outside [1, 5]")]
    LabelOutOfRange(f64),
    #[error("session {0} does not occur in the corpus")]
    UnknownSession(u32),
    #[error("no utterances outside the test session")]
    EmptyRemainder,
    #[error("empty {0} partition")]
    EmptySplit(&'static str),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("test utterance {0:?} reached a training batch")]
    TestLeak(String),
    #[error("utterance {0:?} has no feature vector")]
    MissingFeatures(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
