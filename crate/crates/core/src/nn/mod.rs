//! Stacked-LSTM multitask regressor.
//!
//! ```text
//! input (n, T, d)
//!   -> batch normalization over the feature axis (batch and time pooled)
//!   -> LSTM (returns sequences) -> LSTM (returns sequences) -> LSTM (last state)
//!   -> dense (linear, 64 by default)
//!   -> three 1-unit tanh heads: valence, arousal, dominance
//! ```
//!
//! Forward and backward are written out by hand in double precision;
//! backward unrolls through every time step and includes the batch-statistic
//! terms of batch normalization.

mod checkpoint;
mod model;
mod params;
mod rmsprop;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use checkpoint::{
    checkpoint_from_json, checkpoint_json, load_checkpoint, save_checkpoint,
    CHECKPOINT_FORMAT_VERSION,
};
pub use model::{backward, forward, ForwardCache, ForwardOutput};
pub use params::{
    init_params, Activation, BatchNormParams, DenseParams, Gate, LstmLayerParams, ModelParams,
};
pub use rmsprop::{rmsprop_step, RmspropState};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("zero-sized dimension in architecture: {0}")]
    ZeroDimension(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("backward needs a training-mode forward cache")]
    InferenceCache,
    #[error("forward cache was produced with different parameters")]
    StaleCache,
    #[error("shape mismatch between parameters and gradients/state")]
    ShapeMismatch,
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Layer widths of the regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub lstm_units: [usize; 3],
    pub dense_units: usize,
}

impl Architecture {
    pub const DEFAULT_LSTM_UNITS: [usize; 3] = [256, 256, 256];
    pub const DEFAULT_DENSE_UNITS: usize = 64;

    pub fn new(input_dim: usize, lstm_units: [usize; 3], dense_units: usize) -> Self {
        Self {
            input_dim,
            lstm_units,
            dense_units,
        }
    }

    /// Default widths for the given input dimension.
    pub fn with_input(input_dim: usize) -> Self {
        Self::new(
            input_dim,
            Self::DEFAULT_LSTM_UNITS,
            Self::DEFAULT_DENSE_UNITS,
        )
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.input_dim == 0 {
            return Err(NnError::ZeroDimension("input_dim".into()));
        }
        if let Some(i) = self.lstm_units.iter().position(|&u| u == 0) {
            return Err(NnError::ZeroDimension(format!("lstm_units[{i}]")));
        }
        if self.dense_units == 0 {
            return Err(NnError::ZeroDimension("dense_units".into()));
        }
        Ok(())
    }

    /// Input width of LSTM layer `layer`.
    pub fn lstm_input(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_dim
        } else {
            self.lstm_units[layer - 1]
        }
    }
}
