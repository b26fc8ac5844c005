use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::arch::{LossMode, HEAD_BIAS, HEAD_KERNEL};
use super::branch::{backward_branch, forward_branch};
use super::loss::{bce_head_loss, contrastive_loss, squared_distance, BCE_CLAMP};
use super::model::{Grads, ModelParams};
use crate::error::{Error, Result};
use crate::ingest::FeatureVector;
use crate::nn::Mode;

/// Two signatures and whether they come from the same genuine writer
/// (`y = 1`) or pair a genuine sample with a forgery (`y = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct SignaturePair {
    pub s1: Arc<FeatureVector>,
    pub s2: Arc<FeatureVector>,
    pub same_writer: bool,
}

impl SignaturePair {
    pub fn new(s1: Arc<FeatureVector>, s2: Arc<FeatureVector>, same_writer: bool) -> Result<Self> {
        if s1.values.len() != s2.values.len() {
            return Err(Error::config(format!(
                "pair members have lengths {} and {}",
                s1.values.len(),
                s2.values.len()
            )));
        }
        Ok(Self { s1, s2, same_writer })
    }

    pub fn y(&self) -> u8 {
        u8::from(self.same_writer)
    }

    pub fn swapped(&self) -> Self {
        Self {
            s1: self.s2.clone(),
            s2: self.s1.clone(),
            same_writer: self.same_writer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    pub mode: LossMode,
    pub margin: f64,
    /// Coefficient of the `Σ w²` penalty on kernels and biases.
    pub l2: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            mode: LossMode::Contrastive,
            margin: 1.0,
            l2: 0.03,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin > 0.0) || !self.margin.is_finite() {
            return Err(Error::config(format!("margin must be positive, got {}", self.margin)));
        }
        if !(self.l2 >= 0.0) {
            return Err(Error::config("l2 coefficient must be non-negative"));
        }
        Ok(())
    }
}

/// Batch statistics observed by batch norm, to be folded into the running
/// estimates by the caller. One entry per branch pass.
pub type BatchStats = Vec<(Vec<f64>, Vec<f64>)>;

#[derive(Debug, Clone)]
pub struct BatchLoss {
    /// `data_loss + reg_loss`.
    pub loss: f64,
    pub data_loss: f64,
    pub reg_loss: f64,
    pub grads: Grads,
    pub batch_stats: BatchStats,
    /// Distance to the nearest non-differentiable point (ReLU, pooling, hinge,
    /// `|·|`, clamp). Finite-difference checks resample when this is small.
    pub kink_margin: f64,
}

/// Mean pair loss over `pairs` plus the L2 penalty, with gradients
/// accumulated from both branches into the one shared parameter set.
/// Parameters, including running statistics, are left untouched.
pub fn batch_loss<R: Rng + ?Sized>(
    params: &ModelParams,
    pairs: &[SignaturePair],
    cfg: &LossConfig,
    mode: Mode,
    rng: &mut R,
) -> Result<BatchLoss> {
    if pairs.is_empty() {
        return Err(Error::Protocol("cannot compute the loss of an empty batch".into()));
    }
    cfg.validate()?;
    if cfg.mode != params.arch.head {
        return Err(Error::config(format!(
            "loss mode {:?} does not match the network head {:?}",
            cfg.mode, params.arch.head
        )));
    }
    let left: Vec<&[f64]> = pairs.iter().map(|p| p.s1.values.as_slice()).collect();
    let right: Vec<&[f64]> = pairs.iter().map(|p| p.s2.values.as_slice()).collect();
    let fwd_a = forward_branch(params, &left, mode, rng)?;
    let fwd_b = forward_branch(params, &right, mode, rng)?;

    let n = pairs.len() as f64;
    let mut data_loss = 0.0;
    let mut kink = fwd_a
        .kink_margin(params.arch.pool_size)
        .min(fwd_b.kink_margin(params.arch.pool_size));
    let mut d_a = Vec::with_capacity(pairs.len());
    let mut d_b = Vec::with_capacity(pairs.len());
    let mut head_w = vec![0.0; params.arch.embedding_dim];
    let mut head_b = 0.0;

    for ((pair, e1), e2) in pairs.iter().zip(&fwd_a.embeddings).zip(&fwd_b.embeddings) {
        match cfg.mode {
            LossMode::Contrastive => {
                let l = contrastive_loss(e1, e2, pair.same_writer, cfg.margin);
                if !pair.same_writer {
                    kink = kink.min((cfg.margin * cfg.margin - squared_distance(e1, e2)).abs());
                }
                data_loss += l.loss;
                d_a.push(l.d_e1.iter().map(|g| g / n).collect());
                d_b.push(l.d_e2.iter().map(|g| g / n).collect());
            }
            LossMode::Bce => {
                let w = params.get(HEAD_KERNEL);
                let b = params.get(HEAD_BIAS)[0];
                let l = bce_head_loss(e1, e2, w, b, pair.same_writer);
                for (x, y) in e1.iter().zip(e2) {
                    kink = kink.min((x - y).abs());
                }
                kink = kink.min((l.probability - BCE_CLAMP).abs().min((1.0 - BCE_CLAMP - l.probability).abs()));
                data_loss += l.loss;
                for (acc, g) in head_w.iter_mut().zip(&l.d_weights) {
                    *acc += g / n;
                }
                head_b += l.d_bias / n;
                d_a.push(l.d_e1.iter().map(|g| g / n).collect());
                d_b.push(l.d_e2.iter().map(|g| g / n).collect());
            }
        }
    }
    data_loss /= n;

    let mut grads = backward_branch(params, &fwd_a, &d_a)?;
    grads.add_assign(&backward_branch(params, &fwd_b, &d_b)?);
    if cfg.mode == LossMode::Bce {
        grads.0[HEAD_KERNEL]
            .iter_mut()
            .zip(&head_w)
            .for_each(|(g, h)| *g += h);
        grads.0[HEAD_BIAS][0] += head_b;
    }

    let reg_loss = params.l2_penalty(cfg.l2);
    for (g, p) in grads.0.iter_mut().zip(&params.tensors) {
        if p.role.is_regularized() {
            for (gi, w) in g.iter_mut().zip(&p.data) {
                *gi += 2.0 * cfg.l2 * w;
            }
        }
    }

    let batch_stats = [fwd_a.batch_stats(), fwd_b.batch_stats()]
        .into_iter()
        .flatten()
        .collect();
    Ok(BatchLoss {
        loss: data_loss + reg_loss,
        data_loss,
        reg_loss,
        grads,
        batch_stats,
        kink_margin: kink,
    })
}

/// Per-pair loss in evaluation mode, without regularization.
pub fn pair_losses(params: &ModelParams, pairs: &[SignaturePair], cfg: &LossConfig) -> Result<Vec<f64>> {
    let left: Vec<&[f64]> = pairs.iter().map(|p| p.s1.values.as_slice()).collect();
    let right: Vec<&[f64]> = pairs.iter().map(|p| p.s2.values.as_slice()).collect();
    let a = super::embed_all(params, &left)?;
    let b = super::embed_all(params, &right)?;
    Ok(pairs
        .iter()
        .zip(a.iter().zip(&b))
        .map(|(p, (e1, e2))| match cfg.mode {
            LossMode::Contrastive => contrastive_loss(&e1.values, &e2.values, p.same_writer, cfg.margin).loss,
            LossMode::Bce => {
                bce_head_loss(&e1.values, &e2.values, params.get(HEAD_KERNEL), params.get(HEAD_BIAS)[0], p.same_writer).loss
            }
        })
        .collect())
}
