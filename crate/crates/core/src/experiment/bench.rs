//! Loss-function comparison on synthetic corpora.

use std::cmp::Ordering;

use rayon::prelude::*;

use super::{loso_split, synthetic_corpus, train, ExperimentError, TrainConfig};
use crate::losses::LossKind;
use crate::metrics::EvaluationReport;

pub const BENCH_CORPUS_SIZE: usize = 500;
pub const BENCH_FEATURE_DIM: usize = 20;
pub const BENCH_TEST_SESSION: u32 = 5;
pub const BENCH_VAL_FRACTION: f64 = 0.2;

pub const BENCH_CSV_HEADER: &str = "kind,seed,loss,ccc_v,ccc_a,ccc_d,ccc_mean,mse_mean,mae_mean,\
wins_vs_mse,ties_vs_mse,losses_vs_mse,wins_vs_mae,ties_vs_mae,losses_vs_mae,error";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub seed: u64,
    pub loss: LossKind,
    pub outcome: Result<EvaluationReport, String>,
}

/// Head-to-head counts of CCCL against one baseline. A failed CCCL run counts
/// as a loss, a failed baseline run as a win.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
}

impl Tally {
    pub fn total(&self) -> usize {
        self.wins + self.ties + self.losses
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub base_seed: u64,
    pub rows: Vec<BenchRow>,
    pub vs_mse: Tally,
    pub vs_mae: Tally,
}

impl BenchReport {
    /// Mean test `ccc_mean` of `loss` over its successful repeats.
    pub fn mean_ccc(&self, loss: LossKind) -> Option<f64> {
        let scores: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.loss == loss)
            .filter_map(|r| r.outcome.as_ref().ok().map(|rep| rep.ccc_mean))
            .collect();
        (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64)
    }

    fn mean_report(&self, loss: LossKind) -> Option<EvaluationReport> {
        let reps: Vec<&EvaluationReport> = self
            .rows
            .iter()
            .filter(|r| r.loss == loss)
            .filter_map(|r| r.outcome.as_ref().ok())
            .collect();
        if reps.is_empty() {
            return None;
        }
        let n = reps.len() as f64;
        let avg = |f: fn(&EvaluationReport) -> f64| reps.iter().map(|r| f(r)).sum::<f64>() / n;
        Some(EvaluationReport::from_dimension_scores(
            [avg(|r| r.ccc_v), avg(|r| r.ccc_a), avg(|r| r.ccc_d)],
            [avg(|r| r.mse_mean); 3],
            [avg(|r| r.mae_mean); 3],
        ))
    }

    /// Per-run rows followed by one summary row holding CCCL's mean scores
    /// and the win/tie/loss tallies.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(BENCH_CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            match &row.outcome {
                Ok(rep) => out.push_str(&format!(
                    "result,{},{},{},,,,,,,\n",
                    row.seed,
                    row.loss,
                    rep.csv_cells()
                )),
                Err(e) => out.push_str(&format!(
                    "result,{},{},,,,,,,,,,,,,{}\n",
                    row.seed,
                    row.loss,
                    e.replace([',', '\n'], ";")
                )),
            }
        }
        let cells = self
            .mean_report(LossKind::Cccl)
            .map_or_else(|| ",,,,,".to_string(), |r| r.csv_cells());
        out.push_str(&format!(
            "summary,{},{},{cells},{},{},{},{},{},{},\n",
            self.base_seed,
            LossKind::Cccl,
            self.vs_mse.wins,
            self.vs_mse.ties,
            self.vs_mse.losses,
            self.vs_mae.wins,
            self.vs_mae.ties,
            self.vs_mae.losses,
        ));
        out
    }
}

fn compare(
    ccc: &Result<EvaluationReport, String>,
    other: &Result<EvaluationReport, String>,
    t: &mut Tally,
) {
    match (ccc, other) {
        (Ok(a), Ok(b)) => match a.ccc_mean.partial_cmp(&b.ccc_mean) {
            Some(Ordering::Greater) => t.wins += 1,
            Some(Ordering::Equal) => t.ties += 1,
            _ => t.losses += 1,
        },
        (Ok(_), Err(_)) => t.wins += 1,
        (Err(_), _) => t.losses += 1,
    }
}

/// For `repeats` consecutive seeds starting at `seed`: builds a
/// 500 x 20 synthetic corpus, holds out session 5, and trains one model per
/// loss on the same split. `base` supplies everything but the loss and seed.
pub fn synth_bench(
    seed: u64,
    repeats: usize,
    base: &TrainConfig,
) -> Result<BenchReport, ExperimentError> {
    if repeats == 0 {
        return Err(ExperimentError::InvalidConfig(
            "repeats must be >= 1".into(),
        ));
    }
    base.validate()?;
    let jobs: Vec<(u64, LossKind)> = (0..repeats as u64)
        .flat_map(|r| {
            LossKind::ALL
                .into_iter()
                .map(move |l| (seed.wrapping_add(r), l))
        })
        .collect();
    let rows: Vec<BenchRow> = jobs
        .into_par_iter()
        .map(|(run_seed, loss)| {
            let cfg = TrainConfig {
                loss,
                seed: run_seed,
                ..base.clone()
            };
            let outcome = synthetic_corpus(run_seed, BENCH_CORPUS_SIZE, BENCH_FEATURE_DIM)
                .and_then(|c| loso_split(&c, BENCH_TEST_SESSION, BENCH_VAL_FRACTION, run_seed))
                .and_then(|split| train(&split, &cfg))
                .map(|(_, res)| res.test)
                .map_err(|e| e.to_string());
            BenchRow {
                seed: run_seed,
                loss,
                outcome,
            }
        })
        .collect();

    let mut vs_mse = Tally::default();
    let mut vs_mae = Tally::default();
    for run in rows.chunks(LossKind::ALL.len()) {
        let get = |k: LossKind| {
            &run.iter()
                .find(|r| r.loss == k)
                .expect("all losses")
                .outcome
        };
        compare(get(LossKind::Cccl), get(LossKind::Mse), &mut vs_mse);
        compare(get(LossKind::Cccl), get(LossKind::Mae), &mut vs_mae);
    }
    Ok(BenchReport {
        base_seed: seed,
        rows,
        vs_mse,
        vs_mae,
    })
}
