//! Error- and correlation-based regression losses.
//!
//! All statistics are population statistics (divide by `n`). CCC is Lin's
//! concordance correlation coefficient:
//!
//! ```text
//! ccc = 2 cov(x, y) / (var(x) + var(y) + (mean(x) - mean(y))^2)
//! ```
//!
//! Degenerate inputs are total rather than errors: two constant series with
//! equal means score 1, and a constant series against anything else scores 0.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("prediction/label length mismatch: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("empty batch")]
    Empty,
    #[error("non-finite value in batch")]
    NonFinite,
    #[error("CCC gradient undefined: zero denominator")]
    UndefinedGradient,
}

/// Predictions `x` paired with gold labels `y`.
#[derive(Debug, Clone, Copy)]
pub struct BatchPair<'a> {
    x: &'a [f64],
    y: &'a [f64],
}

impl<'a> BatchPair<'a> {
    pub fn new(x: &'a [f64], y: &'a [f64]) -> Result<Self, LossError> {
        if x.len() != y.len() {
            return Err(LossError::LengthMismatch {
                x: x.len(),
                y: y.len(),
            });
        }
        if x.is_empty() {
            return Err(LossError::Empty);
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(LossError::NonFinite);
        }
        Ok(Self { x, y })
    }

    pub fn predictions(&self) -> &'a [f64] {
        self.x
    }

    pub fn labels(&self) -> &'a [f64] {
        self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// First and second population moments of a [`BatchPair`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSummary {
    pub mu_x: f64,
    pub mu_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub cov_xy: f64,
    /// `None` when either series is constant.
    pub rho_xy: Option<f64>,
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&a| a == v[0])
}

pub fn moments(b: &BatchPair<'_>) -> MomentSummary {
    let n = b.len() as f64;
    let mu_x = b.x.iter().sum::<f64>() / n;
    let mu_y = b.y.iter().sum::<f64>() / n;
    let x_const = is_constant(b.x);
    let y_const = is_constant(b.y);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in b.x.iter().zip(b.y) {
        let dx = xi - mu_x;
        let dy = yi - mu_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let var_x = if x_const { 0.0 } else { sxx / n };
    let var_y = if y_const { 0.0 } else { syy / n };
    let cov_xy = if x_const || y_const { 0.0 } else { sxy / n };
    let rho_xy =
        (!x_const && !y_const).then(|| (cov_xy / (var_x.sqrt() * var_y.sqrt())).clamp(-1.0, 1.0));
    MomentSummary {
        mu_x: if x_const { b.x[0] } else { mu_x },
        mu_y: if y_const { b.y[0] } else { mu_y },
        var_x,
        var_y,
        cov_xy,
        rho_xy,
    }
}

pub fn mse(b: &BatchPair<'_>) -> f64 {
    b.x.iter()
        .zip(b.y)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        / b.len() as f64
}

pub fn mae(b: &BatchPair<'_>) -> f64 {
    b.x.iter().zip(b.y).map(|(x, y)| (x - y).abs()).sum::<f64>() / b.len() as f64
}

pub fn ccc_from_moments(m: &MomentSummary) -> f64 {
    let denom = m.var_x + m.var_y + (m.mu_x - m.mu_y).powi(2);
    if denom == 0.0 {
        return 1.0;
    }
    if m.rho_xy.is_none() {
        return 0.0;
    }
    (2.0 * m.cov_xy / denom).clamp(-1.0, 1.0)
}

pub fn ccc(b: &BatchPair<'_>) -> f64 {
    ccc_from_moments(&moments(b))
}

/// `1 - ccc`, in `[0, 2]`.
pub fn ccc_loss(b: &BatchPair<'_>) -> f64 {
    1.0 - ccc(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LossKind {
    #[serde(rename = "mse")]
    Mse,
    #[serde(rename = "mae")]
    Mae,
    #[serde(rename = "ccc")]
    Cccl,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::Mse, LossKind::Mae, LossKind::Cccl];

    pub fn value(self, b: &BatchPair<'_>) -> f64 {
        match self {
            LossKind::Mse => mse(b),
            LossKind::Mae => mae(b),
            LossKind::Cccl => ccc_loss(b),
        }
    }

    /// Flag spelling used on the command line and in JSON configs.
    pub fn flag(self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::Mae => "mae",
            LossKind::Cccl => "ccc",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Mse => "MSE",
            LossKind::Mae => "MAE",
            LossKind::Cccl => "CCCL",
        })
    }
}

impl FromStr for LossKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(LossKind::Mse),
            "mae" => Ok(LossKind::Mae),
            "ccc" | "cccl" => Ok(LossKind::Cccl),
            other => Err(format!("unknown loss {other:?} (expected mse, mae or ccc)")),
        }
    }
}

/// `d loss / d x_i` for every prediction in the batch.
///
/// MAE uses the subgradient 0 where `x_i == y_i`.
pub fn loss_gradient(kind: LossKind, b: &BatchPair<'_>) -> Result<Vec<f64>, LossError> {
    let n = b.len() as f64;
    let pairs = b.x.iter().zip(b.y);
    match kind {
        LossKind::Mse => Ok(pairs.map(|(x, y)| 2.0 * (x - y) / n).collect()),
        LossKind::Mae => Ok(pairs
            .map(|(x, y)| {
                let d = x - y;
                if d > 0.0 {
                    1.0 / n
                } else if d < 0.0 {
                    -1.0 / n
                } else {
                    0.0
                }
            })
            .collect()),
        LossKind::Cccl => {
            let mu_x = b.x.iter().sum::<f64>() / n;
            let mu_y = b.y.iter().sum::<f64>() / n;
            let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
            for (&xi, &yi) in pairs.clone() {
                sxx += (xi - mu_x) * (xi - mu_x);
                syy += (yi - mu_y) * (yi - mu_y);
                sxy += (xi - mu_x) * (yi - mu_y);
            }
            let num = 2.0 * sxy / n;
            let den = (sxx + syy) / n + (mu_x - mu_y).powi(2);
            if den == 0.0 {
                return Err(LossError::UndefinedGradient);
            }
            // d num/dx_i = 2 (y_i - mu_y)/n ; d den/dx_i = 2 (x_i - mu_y)/n
            let den2 = den * den;
            Ok(pairs
                .map(|(x, y)| {
                    let d_num = 2.0 * (y - mu_y) / n;
                    let d_den = 2.0 * (x - mu_y) / n;
                    -(d_num * den - num * d_den) / den2
                })
                .collect())
        }
    }
}

/// Per-dimension weights of the multitask total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultitaskWeights {
    pub valence: f64,
    pub arousal: f64,
    pub dominance: f64,
}

impl MultitaskWeights {
    pub fn new(valence: f64, arousal: f64, dominance: f64) -> Self {
        Self {
            valence,
            arousal,
            dominance,
        }
    }

    /// Valence `alpha`, arousal `beta`, dominance `1 - alpha - beta`.
    pub fn from_alpha_beta(alpha: f64, beta: f64) -> Self {
        Self::new(alpha, beta, 1.0 - alpha - beta)
    }

    /// Unweighted sum.
    pub fn sum_form() -> Self {
        Self::new(1.0, 1.0, 1.0)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.valence, self.arousal, self.dominance]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|w| w.is_finite())
    }
}

impl Default for MultitaskWeights {
    fn default() -> Self {
        Self::new(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    }
}

pub fn multitask_total(l_v: f64, l_a: f64, l_d: f64, w: &MultitaskWeights) -> f64 {
    w.valence * l_v + w.arousal * l_a + w.dominance * l_d
}
