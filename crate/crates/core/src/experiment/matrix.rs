use rayon::prelude::*;

use super::{loso_split, train, ExperimentResult, TrainConfig, Utterance};
use crate::losses::{LossKind, MultitaskWeights};

/// One (dataset, feature set) part of the result matrix.
#[derive(Debug, Clone)]
pub struct MatrixPart {
    pub dataset: String,
    pub feature_set: String,
    pub utterances: Vec<Utterance>,
    pub test_session: u32,
    pub val_fraction: f64,
    pub weights: MultitaskWeights,
}

#[derive(Debug, Clone)]
pub struct MatrixRow {
    pub dataset: String,
    pub feature_set: String,
    pub loss: LossKind,
    pub outcome: Result<ExperimentResult, String>,
}

pub const MATRIX_CSV_HEADER: &str =
    "dataset,feature_set,loss,ccc_v,ccc_a,ccc_d,ccc_mean,mse_mean,mae_mean,best,error";

/// Trains every (part, loss) cell. Rows come back in part order, then loss
/// order, whatever order the cells finish in. A failed cell is recorded and
/// the rest of the matrix still runs.
pub fn run_matrix(parts: &[MatrixPart], losses: &[LossKind], base: &TrainConfig) -> Vec<MatrixRow> {
    let cells: Vec<(usize, LossKind)> = (0..parts.len())
        .flat_map(|p| losses.iter().map(move |&l| (p, l)))
        .collect();
    cells
        .into_par_iter()
        .map(|(p, loss)| {
            let part = &parts[p];
            let cfg = TrainConfig {
                loss,
                weights: part.weights,
                ..base.clone()
            };
            let outcome = loso_split(
                &part.utterances,
                part.test_session,
                part.val_fraction,
                base.seed,
            )
            .and_then(|split| train(&split, &cfg))
            .map(|(_, res)| res)
            .map_err(|e| e.to_string());
            MatrixRow {
                dataset: part.dataset.clone(),
                feature_set: part.feature_set.clone(),
                loss,
                outcome,
            }
        })
        .collect()
}

/// Result-table CSV. `best` marks the highest `ccc_mean` within each
/// (dataset, feature set) part.
pub fn matrix_csv(rows: &[MatrixRow]) -> String {
    let part_best = |row: &MatrixRow| {
        rows.iter()
            .filter(|r| r.dataset == row.dataset && r.feature_set == row.feature_set)
            .filter_map(|r| r.outcome.as_ref().ok().map(|res| res.test.ccc_mean))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut out = String::from(MATRIX_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let prefix = format!("{},{},{}", row.dataset, row.feature_set, row.loss);
        match &row.outcome {
            Ok(res) => {
                let best = if res.test.ccc_mean == part_best(row) {
                    "*"
                } else {
                    ""
                };
                out.push_str(&format!("{prefix},{},{best},\n", res.test.csv_cells()));
            }
            Err(e) => {
                let msg = e.replace([',', '\n'], ";");
                out.push_str(&format!("{prefix},,,,,,,,{msg}\n"));
            }
        }
    }
    out
}
