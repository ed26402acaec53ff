use std::collections::HashSet;

use ndarray::{Array2, Array3};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetSplit, ExperimentError, Utterance};
use crate::losses::{
    loss_gradient, multitask_total, BatchPair, LossError, LossKind, MultitaskWeights,
};
use crate::metrics::{columns, evaluate, EmotionTriple, EvaluationReport};
use crate::nn::{
    backward, forward, init_params, rmsprop_step, Architecture, ModelParams, RmspropState,
};

/// Training hyperparameters. JSON configs use these field names; missing
/// fields take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub weights: MultitaskWeights,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub lstm_units: [usize; 3],
    pub dense_units: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: LossKind::Cccl,
            weights: MultitaskWeights::default(),
            batch_size: 32,
            max_epochs: 100,
            patience: 10,
            learning_rate: RmspropState::DEFAULT_LEARNING_RATE,
            seed: 0,
            lstm_units: Architecture::DEFAULT_LSTM_UNITS,
            dense_units: Architecture::DEFAULT_DENSE_UNITS,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::InvalidConfig(msg));
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be >= 1".into());
        }
        if self.patience > self.max_epochs {
            return bad(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate {} must be > 0", self.learning_rate));
        }
        if !self.weights.is_finite() {
            return bad("multitask weights must be finite".into());
        }
        if self.lstm_units.contains(&0) || self.dense_units == 0 {
            return bad("layer widths must be >= 1".into());
        }
        Ok(())
    }

    pub fn architecture(&self, input_dim: usize) -> Architecture {
        Architecture::new(input_dim, self.lstm_units, self.dense_units)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean multitask loss over the epoch's training batches.
    pub train_loss: f64,
    /// Multitask loss over the whole validation partition, inference mode.
    pub validation_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: TrainConfig,
    pub test: EvaluationReport,
    pub validation: EvaluationReport,
    pub history: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (lowest validation loss).
    pub best_epoch: usize,
}

/// Stacks utterances into an `n x 1 x d` batch (one HSF vector per sequence).
pub fn sequence_batch(utts: &[&Utterance]) -> Result<Array3<f64>, ExperimentError> {
    let d = utts
        .first()
        .map(|u| u.features.len())
        .ok_or(ExperimentError::EmptySplit("batch"))?;
    let mut x = Array3::zeros((utts.len(), 1, d));
    for (i, u) in utts.iter().enumerate() {
        if u.features.len() != d {
            return Err(ExperimentError::InvalidConfig(format!(
                "utterance {:?} has {} features, expected {d}",
                u.id,
                u.features.len()
            )));
        }
        for (j, v) in u.features.values().iter().enumerate() {
            x[[i, 0, j]] = *v;
        }
    }
    Ok(x)
}

fn gold_matrix(utts: &[&Utterance]) -> Array2<f64> {
    let mut y = Array2::zeros((utts.len(), 3));
    for (i, u) in utts.iter().enumerate() {
        for (k, v) in u.labels().as_array().into_iter().enumerate() {
            y[[i, k]] = v;
        }
    }
    y
}

const PREDICT_CHUNK: usize = 256;

/// Inference-mode predictions on the [-1, 1] scale.
pub fn predict(
    params: &ModelParams,
    utts: &[Utterance],
) -> Result<Vec<EmotionTriple>, ExperimentError> {
    let refs: Vec<&Utterance> = utts.iter().collect();
    let mut out = Vec::with_capacity(utts.len());
    for chunk in refs.chunks(PREDICT_CHUNK) {
        let x = sequence_batch(chunk)?;
        out.extend(forward(params, &x, false)?.triples());
    }
    Ok(out)
}

fn evaluate_on(
    params: &ModelParams,
    utts: &[Utterance],
) -> Result<EvaluationReport, ExperimentError> {
    let pred = predict(params, utts)?;
    let gold: Vec<EmotionTriple> = utts.iter().map(Utterance::labels).collect();
    Ok(evaluate(&pred, &gold)?)
}

/// Multitask loss of `kind` over whole partitions, per dimension.
fn partition_loss(
    kind: LossKind,
    weights: &MultitaskWeights,
    pred: &[EmotionTriple],
    gold: &[EmotionTriple],
) -> Result<f64, ExperimentError> {
    let p = columns(pred);
    let g = columns(gold);
    let mut l = [0.0; 3];
    for k in 0..3 {
        l[k] = kind.value(&BatchPair::new(&p[k], &g[k])?);
    }
    Ok(multitask_total(l[0], l[1], l[2], weights))
}

/// [`train_observed`] without a batch observer.
pub fn train(
    split: &DatasetSplit,
    cfg: &TrainConfig,
) -> Result<(ModelParams, ExperimentResult), ExperimentError> {
    train_observed(split, cfg, |_, _| {})
}

/// Mini-batch RMSprop training with early stopping on the validation loss.
///
/// `on_batch(epoch, ids)` sees the ids of every training batch before its
/// update. The returned parameters are those of the best validation epoch.
pub fn train_observed(
    split: &DatasetSplit,
    cfg: &TrainConfig,
    mut on_batch: impl FnMut(usize, &[&str]),
) -> Result<(ModelParams, ExperimentResult), ExperimentError> {
    cfg.validate()?;
    if split.train.is_empty() {
        return Err(ExperimentError::EmptySplit("train"));
    }
    if split.validation.is_empty() {
        return Err(ExperimentError::EmptySplit("validation"));
    }
    if split.test.is_empty() {
        return Err(ExperimentError::EmptySplit("test"));
    }
    let input_dim = split.feature_dim().expect("non-empty split");

    let mut params = init_params(&cfg.architecture(input_dim), cfg.seed)?;
    let mut optimizer = RmspropState::new(&params, cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5eed));
    let test_ids: HashSet<&str> = split.test.iter().map(|u| u.id.as_str()).collect();
    let val_gold: Vec<EmotionTriple> = split.validation.iter().map(Utterance::labels).collect();
    let weights = cfg.weights.as_array();

    let mut order: Vec<&Utterance> = split.train.iter().collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut wait = 0;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut batch_losses = Vec::with_capacity(order.len().div_ceil(cfg.batch_size));
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let ids: Vec<&str> = chunk.iter().map(|u| u.id.as_str()).collect();
            if let Some(id) = ids.iter().find(|id| test_ids.contains(*id)) {
                return Err(ExperimentError::TestLeak(id.to_string()));
            }
            on_batch(epoch, &ids);

            let x = sequence_batch(chunk)?;
            let y = gold_matrix(chunk);
            let out = forward(&params, &x, true)?;
            let mut per_dim = [0.0; 3];
            let mut dpred = Array2::zeros((chunk.len(), 3));
            for k in 0..3 {
                let pred = out.predictions.column(k).to_vec();
                let gold = y.column(k).to_vec();
                let pair = BatchPair::new(&pred, &gold)
                    .map_err(|_| ExperimentError::NonFiniteLoss { epoch, batch: b })?;
                per_dim[k] = cfg.loss.value(&pair);
                // both series constant and equal: CCC is at its maximum
                let grad = match loss_gradient(cfg.loss, &pair) {
                    Err(LossError::UndefinedGradient) => vec![0.0; chunk.len()],
                    other => other?,
                };
                for (i, g) in grad.into_iter().enumerate() {
                    dpred[[i, k]] = weights[k] * g;
                }
            }
            let total = multitask_total(per_dim[0], per_dim[1], per_dim[2], &cfg.weights);
            if !total.is_finite() {
                return Err(ExperimentError::NonFiniteLoss { epoch, batch: b });
            }
            batch_losses.push(total);

            let grads = backward(&params, &out.cache, dpred.view())?;
            params.update_running_stats(&out.cache)?;
            rmsprop_step(&mut params, &grads, &mut optimizer)?;
            if !params.is_finite() {
                return Err(ExperimentError::NonFiniteLoss { epoch, batch: b });
            }
        }

        let train_loss = batch_losses.iter().sum::<f64>() / batch_losses.len() as f64;
        let val_pred = predict(&params, &split.validation)?;
        let validation_loss = partition_loss(cfg.loss, &cfg.weights, &val_pred, &val_gold)?;
        if !validation_loss.is_finite() {
            return Err(ExperimentError::NonFiniteLoss {
                epoch,
                batch: batch_losses.len(),
            });
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            validation_loss,
        });

        let improved = best.as_ref().is_none_or(|(b, _, _)| validation_loss < *b);
        if improved {
            best = Some((validation_loss, epoch, params.clone()));
            wait = 0;
        } else {
            wait += 1;
            if wait >= cfg.patience {
                break;
            }
        }
    }

    let (_, best_epoch, best_params) = best.expect("at least one epoch ran");
    let test = evaluate_on(&best_params, &split.test)?;
    let validation = evaluate_on(&best_params, &split.validation)?;
    Ok((
        best_params,
        ExperimentResult {
            config: cfg.clone(),
            test,
            validation,
            history,
            best_epoch,
        },
    ))
}
