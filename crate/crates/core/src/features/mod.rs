//! Acoustic front end.
//!
//! The native path implements the 34 pAA low-level descriptors and pools them
//! into Mean+Std high-level statistical functions (68 values per utterance).
//! GeMAPS HSFs (46 values) are not computed here; they enter through
//! [`load_feature_csv`].

mod csv_io;
mod framing;
mod paa;
mod pool;
mod wav;

use std::path::PathBuf;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use csv_io::{load_feature_csv, load_feature_csv_any, read_feature_csv, write_feature_csv};
pub use framing::frame_signal;
pub use paa::{extract_paa_llds, spectral_entropy, PaaExtractor};
pub use pool::{pool_columns, pool_hsf};
pub use wav::load_wav;

/// Number of pAA low-level descriptors per frame.
pub const PAA_LLD_COUNT: usize = 34;
/// Number of GeMAPS low-level descriptors (ingested, never computed).
pub const GEMAPS_LLD_COUNT: usize = 23;

/// Column order of an [`LldMatrix`].
pub const PAA_DESCRIPTOR_NAMES: [&str; PAA_LLD_COUNT] = [
    "zcr",
    "energy",
    "energy_entropy",
    "spectral_centroid",
    "spectral_spread",
    "spectral_entropy",
    "spectral_flux",
    "spectral_rolloff",
    "mfcc_1",
    "mfcc_2",
    "mfcc_3",
    "mfcc_4",
    "mfcc_5",
    "mfcc_6",
    "mfcc_7",
    "mfcc_8",
    "mfcc_9",
    "mfcc_10",
    "mfcc_11",
    "mfcc_12",
    "mfcc_13",
    "chroma_1",
    "chroma_2",
    "chroma_3",
    "chroma_4",
    "chroma_5",
    "chroma_6",
    "chroma_7",
    "chroma_8",
    "chroma_9",
    "chroma_10",
    "chroma_11",
    "chroma_12",
    "chroma_deviation",
];

/// Errors raised by the feature front end.
#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
    #[error("unsupported audio encoding: {0}")]
    UnsupportedCodec(String),
    #[error("truncated audio chunk: {0}")]
    Truncated(String),
    #[error("malformed audio container: {0}")]
    Malformed(String),
    #[error("invalid waveform: {0}")]
    InvalidWaveform(String),
    #[error("invalid frame spec: {0}")]
    InvalidFrameSpec(String),
    #[error("signal of {len} samples is shorter than one frame ({frame_length})")]
    SignalTooShort { len: usize, frame_length: usize },
    #[error("cannot pool an empty LLD matrix")]
    EmptyMatrix,
    #[error("feature dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-numeric cell {value:?} at row {row}, column {column}")]
    NonNumeric {
        row: usize,
        column: usize,
        value: String,
    },
    #[error("duplicate utterance id {0:?}")]
    DuplicateId(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Mono audio with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, FeatureError> {
        if samples.is_empty() {
            return Err(FeatureError::InvalidWaveform("no samples".into()));
        }
        if sample_rate == 0 {
            return Err(FeatureError::InvalidWaveform("sample rate is zero".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(FeatureError::InvalidWaveform(format!(
                "sample {i} is not finite"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Multiplies every sample by `gain`.
    pub fn scaled(&self, gain: f64) -> Result<Self, FeatureError> {
        Self::new(
            self.samples.iter().map(|s| s * gain).collect(),
            self.sample_rate,
        )
    }
}

/// Frame length and hop, in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSpec {
    frame_length: usize,
    hop_length: usize,
}

impl FrameSpec {
    pub fn new(frame_length: usize, hop_length: usize) -> Result<Self, FeatureError> {
        if frame_length < 2 {
            return Err(FeatureError::InvalidFrameSpec(format!(
                "frame length {frame_length} < 2"
            )));
        }
        if hop_length == 0 || hop_length > frame_length {
            return Err(FeatureError::InvalidFrameSpec(format!(
                "hop {hop_length} must be in 1..={frame_length}"
            )));
        }
        Ok(Self {
            frame_length,
            hop_length,
        })
    }

    /// Frame and hop given in milliseconds at `sample_rate`.
    pub fn from_millis(sample_rate: u32, frame_ms: f64, hop_ms: f64) -> Result<Self, FeatureError> {
        let to_samples = |ms: f64| (ms * f64::from(sample_rate) / 1000.0).round() as usize;
        Self::new(to_samples(frame_ms), to_samples(hop_ms))
    }

    /// 50 ms frames with a 25 ms hop.
    pub fn default_for(sample_rate: u32) -> Result<Self, FeatureError> {
        Self::from_millis(sample_rate, 50.0, 25.0)
    }

    pub fn frame_length(&self) -> usize {
        self.frame_length
    }

    pub fn hop_length(&self) -> usize {
        self.hop_length
    }
}

/// Per-frame pAA descriptors, `frames x 34`, columns in
/// [`PAA_DESCRIPTOR_NAMES`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct LldMatrix {
    values: Array2<f64>,
}

impl LldMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self, FeatureError> {
        if values.ncols() != PAA_LLD_COUNT {
            return Err(FeatureError::DimensionMismatch {
                expected: PAA_LLD_COUNT,
                found: values.ncols(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FeatureError::InvalidWaveform(
                "descriptor matrix contains non-finite values".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn descriptor_names(&self) -> &'static [&'static str] {
        &PAA_DESCRIPTOR_NAMES
    }

    pub fn n_frames(&self) -> usize {
        self.values.nrows()
    }

    /// Column by descriptor name.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = PAA_DESCRIPTOR_NAMES.iter().position(|n| *n == name)?;
        Some(self.values.column(idx).to_vec())
    }
}

/// Which feature set a [`FeatureVector`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    Paa,
    Gemaps,
    Synthetic,
    External,
}

impl FeatureSet {
    /// Expected pooled length, when the set fixes one.
    pub fn expected_dim(self) -> Option<usize> {
        match self {
            FeatureSet::Paa => Some(2 * PAA_LLD_COUNT),
            FeatureSet::Gemaps => Some(2 * GEMAPS_LLD_COUNT),
            FeatureSet::Synthetic | FeatureSet::External => None,
        }
    }

    /// Tag for an ingested CSV of the given width.
    pub fn for_dim(dim: usize) -> Self {
        if dim == 2 * PAA_LLD_COUNT {
            FeatureSet::Paa
        } else if dim == 2 * GEMAPS_LLD_COUNT {
            FeatureSet::Gemaps
        } else {
            FeatureSet::External
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Paa => "pAA",
            FeatureSet::Gemaps => "GeMAPS",
            FeatureSet::Synthetic => "synthetic",
            FeatureSet::External => "external",
        }
    }
}

/// Pooled utterance-level features laid out as `[means.., stds..]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    values: Vec<f64>,
    source: FeatureSet,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, source: FeatureSet) -> Result<Self, FeatureError> {
        if let Some(expected) = source.expected_dim() {
            if values.len() != expected {
                return Err(FeatureError::DimensionMismatch {
                    expected,
                    found: values.len(),
                });
            }
        }
        if values.is_empty() {
            return Err(FeatureError::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FeatureError::InvalidWaveform(
                "feature vector contains non-finite values".into(),
            ));
        }
        Ok(Self { values, source })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source(&self) -> FeatureSet {
        self.source
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn means(&self) -> &[f64] {
        &self.values[..self.values.len() / 2]
    }

    pub fn stds(&self) -> &[f64] {
        &self.values[self.values.len() / 2..]
    }
}

/// Full native pipeline: framing, pAA LLDs, Mean+Std pooling.
pub fn extract_paa_hsf(w: &Waveform, spec: FrameSpec) -> Result<FeatureVector, FeatureError> {
    let llds = extract_paa_llds(w, spec)?;
    pool_hsf(&llds)
}
