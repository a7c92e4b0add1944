//! Full-batch training, L² relative-error evaluation and repeated trials.

mod loss;
mod report;

pub use loss::{monte_carlo_rule, record_weights, rectangle_rule, trapezoid_rule, LossKind, Reduction};
pub use report::TrialReport;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{MIONet, MIONetConfig, PreparedBatch};
use crate::nn::{AdamConfig, AdamState, Parameters};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    /// Model initialization seed; trial `k` uses `seed + k`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub reduction: Reduction,
    #[serde(default)]
    pub loss: LossKind,
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
}

fn default_eval_every() -> usize {
    1000
}

impl TrainConfig {
    pub fn new(lr: f64, epochs: usize) -> Self {
        Self {
            lr,
            epochs,
            seed: 0,
            reduction: Reduction::Mean,
            loss: LossKind::Mse,
            eval_every: default_eval_every(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config("lr", "must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs", "must be at least 1"));
        }
        if self.eval_every == 0 {
            return Err(Error::config("eval_every", "must be at least 1"));
        }
        Ok(())
    }
}

/// Loss trace of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    /// Loss before each update, one entry per epoch.
    pub losses: Vec<f64>,
    /// `(epoch, loss)` at epoch 1, every `eval_every` epochs, and the last epoch.
    pub history: Vec<(usize, f64)>,
}

impl TrainOutcome {
    pub fn final_loss(&self) -> f64 {
        *self.losses.last().unwrap()
    }
}

/// Loss `Σ w_r (pred_r − s_r)²` and its gradient with respect to the predictions.
pub fn weighted_loss<T: Scalar>(preds: &[T], targets: &[T], weights: &[T]) -> (T, Vec<T>) {
    let two = T::of(2.0);
    let mut loss = T::zero();
    let grad = preds
        .iter()
        .zip(targets)
        .zip(weights)
        .map(|((&p, &s), &w)| {
            let r = p - s;
            loss += w * r * r;
            two * w * r
        })
        .collect();
    (loss, grad)
}

/// Loss and full parameter gradient of `model` on a prepared batch.
pub fn loss_and_gradient<T: Scalar>(
    model: &MIONet<T>,
    prep: &PreparedBatch<T>,
    targets: &[T],
    weights: &[T],
) -> Result<(T, crate::model::ModelGrads<T>)> {
    if targets.len() != prep.batch.len() || weights.len() != prep.batch.len() {
        return Err(Error::dim("targets per record", prep.batch.len(), targets.len().min(weights.len())));
    }
    let (preds, cache) = model.forward_batch(prep)?;
    let (loss, dpred) = weighted_loss(&preds, targets, weights);
    Ok((loss, model.backward_batch(prep, &cache, &dpred)?))
}

/// Runs `cfg.epochs` full-batch Adam steps in place.
pub fn train<T: Scalar>(
    model: &mut MIONet<T>,
    prep: &PreparedBatch<T>,
    targets: &[T],
    weights: &[T],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if prep.batch.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    let mut adam = AdamState::new(AdamConfig::with_lr(cfg.lr), model.param_count());
    let mut losses = Vec::with_capacity(cfg.epochs);
    let mut history = Vec::new();
    for epoch in 1..=cfg.epochs {
        let (loss, grads) = loss_and_gradient(model, prep, targets, weights)?;
        let loss = loss.as_f64();
        if !loss.is_finite() {
            return Err(Error::Training {
                epoch,
                message: format!("loss became {loss}"),
            });
        }
        losses.push(loss);
        if epoch == 1 || epoch % cfg.eval_every == 0 || epoch == cfg.epochs {
            history.push((epoch, loss));
        }
        adam.step(model, &grads)?;
    }
    Ok(TrainOutcome { losses, history })
}

/// Whether a single-branch model reads every input of a multi-input dataset at once.
pub fn concatenates_inputs(config: &MIONetConfig, data: &Dataset) -> bool {
    config.n() == 1 && data.header().n > 1
}

/// Binds `data` to `model`, concatenating inputs for single-branch models.
pub fn prepare<T: Scalar>(model: &MIONet<T>, data: &Dataset) -> Result<PreparedBatch<T>> {
    let concat = concatenates_inputs(model.config(), data);
    model.prepare(data.batch(concat)?)
}

/// Trains a freshly built model on `data`.
pub fn fit<T: Scalar>(config: &MIONetConfig, data: &Dataset, cfg: &TrainConfig) -> Result<(MIONet<T>, TrainOutcome)> {
    let mut model = MIONet::build(config.clone(), cfg.seed)?;
    let prep = prepare(&model, data)?;
    let weights: Vec<T> = record_weights(data.points(), data.pairs(), cfg.loss, cfg.reduction)?
        .into_iter()
        .map(T::of)
        .collect();
    let outcome = train(&mut model, &prep, &data.targets_as(), &weights, cfg)?;
    Ok((model, outcome))
}

/// Per-function L² relative errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// `None` for groups whose true values are all zero.
    pub per_group: Vec<Option<f64>>,
    pub excluded: Vec<u32>,
    pub mean: f64,
}

/// `‖pred − true‖₂ / ‖true‖₂` per group, averaged over groups with nonzero truth.
pub fn l2_relative_error(preds: &[f64], targets: &[f64], groups: &[u32]) -> Result<ErrorReport> {
    if preds.len() != targets.len() || groups.len() != targets.len() {
        return Err(Error::dim("records", targets.len(), preds.len().min(groups.len())));
    }
    let count = groups.iter().max().map_or(0, |&g| g as usize + 1);
    let mut num = vec![0.0; count];
    let mut den = vec![0.0; count];
    let mut seen = vec![false; count];
    for ((&p, &s), &g) in preds.iter().zip(targets).zip(groups) {
        num[g as usize] += (p - s) * (p - s);
        den[g as usize] += s * s;
        seen[g as usize] = true;
    }
    let mut excluded = Vec::new();
    let per_group: Vec<Option<f64>> = (0..count)
        .map(|g| {
            if seen[g] && den[g] > 0.0 {
                Some((num[g] / den[g]).sqrt())
            } else {
                if seen[g] {
                    excluded.push(g as u32);
                }
                None
            }
        })
        .collect();
    let valid: Vec<f64> = per_group.iter().flatten().copied().collect();
    if valid.is_empty() {
        return Err(Error::Data("no group has a nonzero true norm".into()));
    }
    let mean = valid.iter().sum::<f64>() / valid.len() as f64;
    Ok(ErrorReport {
        per_group,
        excluded,
        mean,
    })
}

/// Predictions of `model` for every record of `data`.
pub fn predict_dataset<T: Scalar>(model: &MIONet<T>, data: &Dataset) -> Result<Vec<f64>> {
    let prep = prepare(model, data)?;
    let (preds, _) = model.forward_batch(&prep)?;
    Ok(preds.into_iter().map(|p| p.as_f64()).collect())
}

pub fn evaluate<T: Scalar>(model: &MIONet<T>, data: &Dataset) -> Result<ErrorReport> {
    l2_relative_error(&predict_dataset(model, data)?, data.targets(), &data.groups())
}

/// `trials` independent runs with seeds `cfg.seed + k`; `on_trial` sees each trained model.
pub fn run_trials<T: Scalar>(
    label: &str,
    config: &MIONetConfig,
    cfg: &TrainConfig,
    train_data: &Dataset,
    test_data: &Dataset,
    trials: usize,
    mut on_trial: impl FnMut(usize, &MIONet<T>, &TrainOutcome) -> Result<()>,
) -> Result<TrialReport> {
    if trials == 0 {
        return Err(Error::config("trials", "must be at least 1"));
    }
    let mut seeds = Vec::new();
    let mut errors = Vec::new();
    let mut final_losses = Vec::new();
    let mut histories = Vec::new();
    for k in 0..trials {
        let mut run = cfg.clone();
        run.seed = cfg.seed.wrapping_add(k as u64);
        let (model, outcome) = fit::<T>(config, train_data, &run)?;
        let err = evaluate(&model, test_data)?;
        on_trial(k, &model, &outcome)?;
        seeds.push(run.seed);
        errors.push(err.mean);
        final_losses.push(outcome.final_loss());
        histories.push(outcome.history);
    }
    Ok(TrialReport::new(label, config.param_count(), seeds, errors, final_losses, histories))
}

#[cfg(test)]
mod tests;
