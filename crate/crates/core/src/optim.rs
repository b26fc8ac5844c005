//! Adam and the training loop.
//!
//! Each epoch shuffles the training pairs, walks them in minibatches, takes
//! one Adam step per batch and then projects every constrained weight group
//! back inside the max-norm ball. After the epoch the monitored loss is
//! measured in evaluation mode (validation pairs if any, else the training
//! pairs) including the L2 penalty. Training stops early once that loss has
//! not improved for `patience` epochs, and the best epoch's parameters are
//! returned.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{apply_max_norm, Mode, Param};
use crate::siamese::{batch_loss, pair_losses, LossConfig, ModelParams, SignaturePair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Learning-rate decay: step `t` uses `lr / (1 + decay·(t-1))`.
    pub decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_delta: f64,
    pub max_norm: f64,
    pub seed: u64,
    /// Share of training pairs held out to monitor early stopping.
    pub validation_fraction: f64,
    /// Swap the members of each pair at random every epoch. Pairs are built
    /// genuine-first, so without this one branch never sees a forgery and
    /// the two branches' batch statistics differ systematically.
    pub shuffle_members: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.004,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            decay: 0.0,
            batch_size: 36,
            max_epochs: 400,
            patience: 5,
            min_delta: 0.0,
            max_norm: 4.0,
            seed: 0,
            validation_fraction: 0.1,
            shuffle_members: true,
        }
    }
}

impl TrainConfig {
    /// `lr = 0` is accepted so a run can be checked for drift.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::config(m));
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return fail(format!("learning rate must be finite and >= 0, got {}", self.lr));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return fail(format!("{name} must lie in [0, 1), got {b}"));
            }
        }
        if !(self.epsilon > 0.0) || !(self.decay >= 0.0) || !(self.min_delta >= 0.0) {
            return fail("epsilon must be positive; decay and min_delta non-negative".into());
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return fail("batch size and epoch limit must be positive".into());
        }
        if !(self.max_norm > 0.0) {
            return fail(format!("max norm must be positive, got {}", self.max_norm));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return fail(format!("validation fraction must lie in [0, 1), got {}", self.validation_fraction));
        }
        Ok(())
    }
}

/// First and second moments per tensor plus the step count.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &[Param]) -> Self {
        let zeros: Vec<Vec<f64>> = params.iter().map(|p| vec![0.0; p.data.len()]).collect();
        Self { m: zeros.clone(), v: zeros, t: 0 }
    }
}

/// One bias-corrected Adam update followed by the max-norm projection.
/// Nothing is modified when a gradient is non-finite or misshapen.
pub fn adam_step(params: &mut [Param], grads: &[Vec<f64>], state: &mut AdamState, cfg: &TrainConfig) -> Result<()> {
    if grads.len() != params.len() || state.m.len() != params.len() {
        return Err(Error::Training(format!(
            "{} parameters, {} gradients, {} moment tensors",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for (p, g) in params.iter().zip(grads) {
        if g.len() != p.data.len() {
            return Err(Error::Training(format!("gradient for {} has {} entries, expected {}", p.name, g.len(), p.data.len())));
        }
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::Training(format!("non-finite gradient {} at {}[{i}]", g[i], p.name)));
        }
    }
    state.t += 1;
    let t = state.t as f64;
    let lr = cfg.lr / (1.0 + cfg.decay * (t - 1.0));
    let (c1, c2) = (1.0 - cfg.beta1.powf(t), 1.0 - cfg.beta2.powf(t));
    for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let (m, v) = (&mut state.m[k], &mut state.v[k]);
        for i in 0..g.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let (m_hat, v_hat) = (m[i] / c1, v[i] / c2);
            p.data[i] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    apply_max_norm(params, cfg.max_norm);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop,
}

/// An entry improves on the best so far when it is lower by more than
/// `min_delta`. Stop once the latest entry is `patience` or more entries
/// past the best and is not itself an improvement.
pub fn early_stop_check(history: &[f64], patience: usize, min_delta: f64) -> StopDecision {
    let Some(best) = best_index(history, min_delta) else {
        return StopDecision::Continue;
    };
    let last = history.len() - 1;
    if best != last && last - best >= patience {
        StopDecision::Stop
    } else {
        StopDecision::Continue
    }
}

/// Index of the last entry that counted as an improvement.
pub fn best_index(history: &[f64], min_delta: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in history.iter().enumerate() {
        match best {
            Some((_, b)) if !(v < b - min_delta) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// Counted from 1.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
}

impl TrainLog {
    /// Columns `epoch,train_loss,val_loss,seconds`; a missing validation
    /// loss is an empty field.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        w.write_record(["epoch", "train_loss", "val_loss", "seconds"])?;
        for r in &self.records {
            w.write_record([
                r.epoch.to_string(),
                r.train_loss.to_string(),
                r.val_loss.map(|v| v.to_string()).unwrap_or_default(),
                r.seconds.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("train log", e))
    }

    /// The log without wall-clock times, for comparing runs.
    pub fn losses(&self) -> Vec<(usize, f64, Option<f64>)> {
        self.records.iter().map(|r| (r.epoch, r.train_loss, r.val_loss)).collect()
    }
}

/// Passed to the step hook after each optimizer step.
#[derive(Debug)]
pub struct StepEvent<'a> {
    pub epoch: usize,
    /// Steps taken so far in the run.
    pub step: u64,
    pub batch_loss: f64,
    pub params: &'a ModelParams,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the best monitored epoch.
    pub params: ModelParams,
    pub log: TrainLog,
    pub best_epoch: usize,
    pub monitored: Vec<f64>,
    pub stopped_early: bool,
    pub steps: u64,
    pub train_pairs: usize,
    pub validation_pairs: usize,
}

pub fn train(
    params: ModelParams,
    pairs: &[SignaturePair],
    cfg: &TrainConfig,
    loss: &LossConfig,
) -> Result<TrainOutcome> {
    train_with_hook(params, pairs, cfg, loss, |_| Ok(()))
}

/// Minibatch boundaries. A trailing batch of one joins its predecessor
/// because batch norm needs two samples.
fn batch_ranges(n: usize, size: usize) -> Vec<std::ops::Range<usize>> {
    let mut out: Vec<_> = (0..n).step_by(size).map(|s| s..(s + size).min(n)).collect();
    if out.len() > 1 && out.last().is_some_and(|r| r.len() == 1) {
        let tail = out.pop().expect("checked non-empty");
        out.last_mut().expect("more than one batch").end = tail.end;
    }
    out
}

fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const SHUFFLE_STREAM: u64 = 0;
const DROPOUT_STREAM: u64 = 1;
const HOLDOUT_STREAM: u64 = 2;

/// Eval-mode mean pair loss plus the L2 penalty.
pub fn monitored_loss(params: &ModelParams, pairs: &[SignaturePair], loss: &LossConfig) -> Result<f64> {
    let losses = pair_losses(params, pairs, loss)?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64 + params.l2_penalty(loss.l2))
}

/// `train` with a callback after every optimizer step; an error from the
/// hook aborts the run.
pub fn train_with_hook(
    mut params: ModelParams,
    pairs: &[SignaturePair],
    cfg: &TrainConfig,
    loss: &LossConfig,
    mut hook: impl FnMut(&StepEvent<'_>) -> Result<()>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    loss.validate()?;
    params.validate()?;
    if pairs.len() < 2 {
        return Err(Error::Training(format!("need at least 2 training pairs, got {}", pairs.len())));
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut rng_stream(cfg.seed, HOLDOUT_STREAM));
    let n_val = ((pairs.len() as f64 * cfg.validation_fraction).round() as usize).min(pairs.len() - 2);
    let validation: Vec<SignaturePair> = order[..n_val].iter().map(|&i| pairs[i].clone()).collect();
    let mut fit_idx: Vec<usize> = order[n_val..].to_vec();
    fit_idx.sort_unstable();
    let fit: Vec<SignaturePair> = fit_idx.iter().map(|&i| pairs[i].clone()).collect();

    let mut shuffle_rng = rng_stream(cfg.seed, SHUFFLE_STREAM);
    let mut dropout_rng = rng_stream(cfg.seed, DROPOUT_STREAM);
    let mut adam = AdamState::new(&params.tensors);
    let mut log = TrainLog::default();
    let mut monitored = Vec::new();
    let mut best: Option<(usize, ModelParams)> = None;
    let mut stopped_early = false;
    let mut batch_order: Vec<usize> = (0..fit.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        let started = Instant::now();
        batch_order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for range in batch_ranges(fit.len(), cfg.batch_size) {
            let batch: Vec<SignaturePair> = batch_order[range]
                .iter()
                .map(|&i| {
                    if cfg.shuffle_members && shuffle_rng.random_bool(0.5) {
                        fit[i].swapped()
                    } else {
                        fit[i].clone()
                    }
                })
                .collect();
            let out = batch_loss(&params, &batch, loss, Mode::Train, &mut dropout_rng)?;
            if !out.loss.is_finite() {
                return Err(Error::Training(format!(
                    "loss diverged to {} in epoch {epoch}; last good epoch {}",
                    out.loss,
                    epoch - 1
                )));
            }
            adam_step(&mut params.tensors, &out.grads.0, &mut adam, cfg)
                .map_err(|e| Error::Training(format!("epoch {epoch}, step {}: {e}", adam.t + 1)))?;
            params.absorb_batch_stats(&out.batch_stats);
            loss_sum += out.loss * batch.len() as f64;
            hook(&StepEvent { epoch, step: adam.t, batch_loss: out.loss, params: &params })?;
        }
        let train_loss = loss_sum / fit.len() as f64;
        let (watched, val_loss) = if validation.is_empty() {
            (monitored_loss(&params, &fit, loss)?, None)
        } else {
            let v = monitored_loss(&params, &validation, loss)?;
            (v, Some(v))
        };
        if !watched.is_finite() {
            return Err(Error::Training(format!(
                "monitored loss diverged to {watched} in epoch {epoch}; last good epoch {}",
                epoch - 1
            )));
        }
        monitored.push(watched);
        log.records.push(EpochRecord { epoch, train_loss, val_loss, seconds: started.elapsed().as_secs_f64() });
        if best_index(&monitored, cfg.min_delta) == Some(monitored.len() - 1) {
            best = Some((epoch, params.clone()));
        }
        if early_stop_check(&monitored, cfg.patience, cfg.min_delta) == StopDecision::Stop {
            stopped_early = epoch < cfg.max_epochs;
            break;
        }
    }
    let (best_epoch, best_params) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        params: best_params,
        log,
        best_epoch,
        monitored,
        stopped_early,
        steps: adam.t,
        train_pairs: fit.len(),
        validation_pairs: validation.len(),
    })
}
