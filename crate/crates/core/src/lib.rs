//! # dser-core
//!
//! Dimensional speech emotion regression. The crate covers the whole path
//! from a waveform to an averaged-CCC score:
//!
//! ```text
//! WAV -> frames -> 34 pAA LLDs -> Mean+Std pooling (68 HSFs)
//!     -> batchnorm -> LSTM x3 -> dense-64 -> 3 tanh heads (V, A, D)
//!     -> MSE / MAE / CCC loss (weighted multitask total) -> RMSprop
//! ```
//!
//! - [`features`]: WAV loading, framing, pAA low-level descriptors, HSF pooling
//!   and feature CSV ingestion (the GeMAPS path).
//! - [`losses`]: MSE, MAE, CCC and CCC loss with analytic prediction gradients.
//! - [`metrics`]: corpus-level per-dimension CCC/MSE/MAE reports.
//! - [`nn`]: the stacked-LSTM multitask regressor with hand-written BPTT.
//! - [`experiment`]: label scaling, LOSO splits, training loop, weight grid
//!   search, the feature x loss result matrix, and a synthetic corpus.

pub mod experiment;
pub mod features;
pub mod losses;
pub mod metrics;
pub mod nn;

pub use experiment::{DatasetSplit, ExperimentError, ExperimentResult, TrainConfig, Utterance};
pub use features::{FeatureError, FeatureSet, FeatureVector, FrameSpec, LldMatrix, Waveform};
pub use losses::{BatchPair, LossKind, MomentSummary, MultitaskWeights};
pub use metrics::{EmotionTriple, EvaluationReport};
pub use nn::{Architecture, ModelParams};
