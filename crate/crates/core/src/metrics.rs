//! Corpus-level evaluation of valence/arousal/dominance predictions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::losses::{ccc, mae, mse, BatchPair, LossError};

/// Valence, arousal and dominance degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionTriple {
    pub valence: f64,
    pub arousal: f64,
    pub dominance: f64,
}

impl EmotionTriple {
    pub fn new(valence: f64, arousal: f64, dominance: f64) -> Self {
        Self {
            valence,
            arousal,
            dominance,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.valence, self.arousal, self.dominance]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(f(self.valence), f(self.arousal), f(self.dominance))
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("{pred} predictions for {gold} gold labels")]
    LengthMismatch { pred: usize, gold: usize },
    #[error("cannot evaluate an empty set")]
    Empty,
    #[error(transparent)]
    Loss(#[from] LossError),
}

/// Per-dimension CCC plus averaged CCC, MSE and MAE over a whole partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub ccc_v: f64,
    pub ccc_a: f64,
    pub ccc_d: f64,
    pub ccc_mean: f64,
    pub mse_mean: f64,
    pub mae_mean: f64,
}

pub const REPORT_CSV_HEADER: &str = "feature_set,loss,ccc_v,ccc_a,ccc_d,ccc_mean,mse_mean,mae_mean";

impl EvaluationReport {
    pub fn from_dimension_scores(ccc: [f64; 3], mse: [f64; 3], mae: [f64; 3]) -> Self {
        Self {
            ccc_v: ccc[0],
            ccc_a: ccc[1],
            ccc_d: ccc[2],
            ccc_mean: (ccc[0] + ccc[1] + ccc[2]) / 3.0,
            mse_mean: (mse[0] + mse[1] + mse[2]) / 3.0,
            mae_mean: (mae[0] + mae[1] + mae[2]) / 3.0,
        }
    }

    pub fn ccc(&self) -> [f64; 3] {
        [self.ccc_v, self.ccc_a, self.ccc_d]
    }

    /// Metric cells at three decimals, `ccc_v..mae_mean`.
    pub fn csv_cells(&self) -> String {
        format!(
            "{:.3},{:.3},{:.3},{:.3},{:.3},{:.3}",
            self.ccc_v, self.ccc_a, self.ccc_d, self.ccc_mean, self.mse_mean, self.mae_mean
        )
    }

    /// One row under [`REPORT_CSV_HEADER`].
    pub fn csv_row(&self, feature_set: &str, loss: &str) -> String {
        format!("{feature_set},{loss},{}", self.csv_cells())
    }
}

/// Splits triples into three per-dimension columns.
pub fn columns(triples: &[EmotionTriple]) -> [Vec<f64>; 3] {
    let mut out: [Vec<f64>; 3] = Default::default();
    for t in triples {
        for (col, v) in out.iter_mut().zip(t.as_array()) {
            col.push(v);
        }
    }
    out
}

/// Scores the full partition at once; nothing is averaged over batches.
pub fn evaluate(
    pred: &[EmotionTriple],
    gold: &[EmotionTriple],
) -> Result<EvaluationReport, MetricsError> {
    if pred.len() != gold.len() {
        return Err(MetricsError::LengthMismatch {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    if pred.is_empty() {
        return Err(MetricsError::Empty);
    }
    let p = columns(pred);
    let g = columns(gold);
    let mut c = [0.0; 3];
    let mut se = [0.0; 3];
    let mut ae = [0.0; 3];
    for dim in 0..3 {
        let b = BatchPair::new(&p[dim], &g[dim])?;
        c[dim] = ccc(&b);
        se[dim] = mse(&b);
        ae[dim] = mae(&b);
    }
    Ok(EvaluationReport::from_dimension_scores(c, se, ae))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triples(v: &[[f64; 3]]) -> Vec<EmotionTriple> {
        v.iter().copied().map(EmotionTriple::from_array).collect()
    }

    #[test]
    fn identity_is_perfect() {
        let g = triples(&[[0.1, 0.2, 0.3], [-0.5, 0.4, 0.0], [0.9, -0.9, 0.2]]);
        let r = evaluate(&g, &g).unwrap();
        assert_eq!(r.ccc(), [1.0; 3]);
        assert_eq!(r.ccc_mean, 1.0);
        assert_eq!(r.mse_mean, 0.0);
        assert_eq!(r.mae_mean, 0.0);
    }

    #[test]
    fn table_row_mean() {
        let r = EvaluationReport::from_dimension_scores([0.192, 0.553, 0.456], [0.0; 3], [0.0; 3]);
        assert!((r.ccc_mean - 0.400).abs() < 5e-4);
        assert_eq!(format!("{:.3}", r.ccc_mean), "0.400");
    }

    #[test]
    fn constant_predictions_score_zero() {
        let g = triples(&[[0.1, 0.2, 0.3], [-0.5, 0.4, 0.0], [0.9, -0.9, 0.2]]);
        let p = triples(&[[0.0; 3]; 3]);
        assert_eq!(evaluate(&p, &g).unwrap().ccc(), [0.0; 3]);
    }

    #[test]
    fn errors() {
        let g = triples(&[[0.1, 0.2, 0.3]]);
        assert!(matches!(
            evaluate(&[], &g),
            Err(MetricsError::LengthMismatch { pred: 0, gold: 1 })
        ));
        assert_eq!(evaluate(&[], &[]), Err(MetricsError::Empty));
    }

    #[test]
    fn csv_row_layout() {
        let r = EvaluationReport::from_dimension_scores([0.5, 0.25, 0.0], [0.1; 3], [0.2; 3]);
        assert_eq!(
            r.csv_row("pAA", "CCCL"),
            "pAA,CCCL,0.500,0.250,0.000,0.250,0.100,0.200"
        );
        assert_eq!(REPORT_CSV_HEADER.split(',').count(), 8);
    }
}
