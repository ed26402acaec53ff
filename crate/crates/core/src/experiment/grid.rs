use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train, DatasetSplit, ExperimentError, TrainConfig};
use crate::losses::MultitaskWeights;

/// Epoch budget of each grid cell.
pub const GRID_MAX_EPOCHS: usize = 30;

/// `(alpha, beta)` on the 0.1 lattice with `alpha + beta <= 1`, ordered by
/// alpha then beta.
pub fn weight_lattice() -> Vec<(f64, f64)> {
    (0..=10u32)
        .flat_map(|i| (0..=10 - i).map(move |j| (f64::from(i) / 10.0, f64::from(j) / 10.0)))
        .collect()
}

/// One evaluated lattice point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub alpha: f64,
    pub beta: f64,
    /// Validation `ccc_mean`, or the training failure.
    pub outcome: Result<f64, String>,
}

/// Highest validation score; ties go to the smaller alpha, then the smaller
/// beta. Failed cells are skipped.
pub fn select_best(cells: &[GridCell]) -> Option<(f64, f64)> {
    let mut ordered: Vec<&GridCell> = cells.iter().collect();
    ordered.sort_by(|a, b| a.alpha.total_cmp(&b.alpha).then(a.beta.total_cmp(&b.beta)));
    let mut best: Option<(&GridCell, f64)> = None;
    for cell in ordered {
        if let Ok(score) = cell.outcome {
            if score.is_nan() {
                continue;
            }
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((cell, score));
            }
        }
    }
    best.map(|(c, _)| (c.alpha, c.beta))
}

/// Trains one model per lattice point (with the epoch budget capped at
/// [`GRID_MAX_EPOCHS`]) and picks the weights with the best validation
/// `ccc_mean`.
pub fn grid_search_weights(
    split: &DatasetSplit,
    base: &TrainConfig,
) -> Result<(MultitaskWeights, Vec<GridCell>), ExperimentError> {
    base.validate()?;
    let max_epochs = base.max_epochs.min(GRID_MAX_EPOCHS);
    let cells: Vec<GridCell> = weight_lattice()
        .into_par_iter()
        .map(|(alpha, beta)| {
            let cfg = TrainConfig {
                weights: MultitaskWeights::from_alpha_beta(alpha, beta),
                max_epochs,
                patience: base.patience.min(max_epochs),
                ..base.clone()
            };
            let outcome = train(split, &cfg)
                .map(|(_, res)| res.validation.ccc_mean)
                .map_err(|e| e.to_string());
            GridCell {
                alpha,
                beta,
                outcome,
            }
        })
        .collect();
    let (alpha, beta) = select_best(&cells)
        .ok_or_else(|| ExperimentError::InvalidConfig("every grid cell failed to train".into()))?;
    Ok((MultitaskWeights::from_alpha_beta(alpha, beta), cells))
}
