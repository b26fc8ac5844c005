//! Forward and backward passes of one CNN branch over a batch of inputs.
//!
//! Layer order: conv+ReLU [+LRN] → pool → conv+ReLU [+LRN] → pool → dropout →
//! flatten → dense(sigmoid) → batch norm → dropout → dense [+LRN].
//! Batch norm couples the samples of a batch, so the pass is split into a
//! per-sample trunk (everything before batch norm), the batch-level
//! normalization, and a per-sample top.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::arch::*;
use super::model::{Grads, ModelParams};
use crate::error::{Error, Result};
use crate::nn::{
    self, batchnorm_backward_eval, batchnorm_backward_train, batchnorm_forward_eval,
    batchnorm_forward_train, conv1d_backward, conv1d_forward, dense_affine, dense_backward,
    dropout, dropout_backward, maxpool1d, maxpool1d_backward, Activation, BatchNormCache, Mode,
    Pooled, Tensor2,
};

/// Output of the embedding function for one signature.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub values: Vec<f64>,
}

struct TrunkCache {
    input: Tensor2,
    conv1_pre: Tensor2,
    conv1_act: Tensor2,
    pool1: Pooled,
    conv2_pre: Tensor2,
    conv2_act: Tensor2,
    pool2: Pooled,
    drop1_mask: Vec<f64>,
    flat: Vec<f64>,
    dense1_pre: Vec<f64>,
    dense1_out: Vec<f64>,
}

struct TopCache {
    drop2_mask: Vec<f64>,
    drop2_out: Vec<f64>,
    dense2_pre: Vec<f64>,
    dense2_out: Vec<f64>,
}

/// Everything the backward pass of a branch needs.
pub struct BranchForward {
    mode: Mode,
    trunks: Vec<TrunkCache>,
    bn_cache: Option<BatchNormCache>,
    tops: Vec<TopCache>,
    pub embeddings: Vec<Vec<f64>>,
}

impl BranchForward {
    /// Batch mean and unbiased variance seen by batch norm (training only).
    pub fn batch_stats(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        self.bn_cache
            .as_ref()
            .map(|c| (c.batch_mean.clone(), c.batch_var_unbiased.clone()))
    }

    /// Distance of the current point from the nearest non-differentiable
    /// point of the branch: a ReLU input at zero or a pooling window whose
    /// positive winner is tied with its runner-up.
    pub fn kink_margin(&self, pool_size: usize) -> f64 {
        let mut margin = f64::INFINITY;
        for t in &self.trunks {
            for pre in [&t.conv1_pre, &t.conv2_pre] {
                for v in pre.data() {
                    margin = margin.min(v.abs());
                }
            }
            for act in [&t.conv1_act, &t.conv2_act] {
                margin = margin.min(positive_window_gap(act, pool_size));
            }
        }
        margin
    }
}

fn positive_window_gap(x: &Tensor2, pool_size: usize) -> f64 {
    let len = x.length();
    let mut gap = f64::INFINITY;
    for c in 0..x.channels() {
        let row = x.row(c);
        for start in (0..len).step_by(pool_size) {
            let mut w: Vec<f64> = row[start..(start + pool_size).min(len)].to_vec();
            if w.len() < 2 {
                continue;
            }
            w.sort_by(|a, b| b.total_cmp(a));
            if w[0] > 0.0 {
                gap = gap.min(w[0] - w[1]);
            }
        }
    }
    gap
}

fn relu_tensor(pre: &Tensor2) -> Tensor2 {
    let mut out = pre.clone();
    out.data_mut().iter_mut().for_each(|v| *v = nn::relu(*v));
    out
}

fn relu_backward(pre: &Tensor2, upstream: &Tensor2) -> Tensor2 {
    let mut out = upstream.clone();
    for (g, &x) in out.data_mut().iter_mut().zip(pre.data()) {
        *g *= nn::relu_grad(x);
    }
    out
}

fn trunk_forward(params: &ModelParams, x: &[f64], mode: Mode, seed: u64) -> Result<TrunkCache> {
    let arch = &params.arch;
    let lrn_conv = arch.lrn_placement == LrnPlacement::AfterEachConv;
    let input = Tensor2::from_row(x.to_vec())?;

    let conv1_pre = conv1d_forward(&input, params.get(CONV1_KERNEL), params.get(CONV1_BIAS), arch.kernel_width)?;
    let conv1_act = relu_tensor(&conv1_pre);
    let pool1 = if lrn_conv {
        maxpool1d(&arch.lrn.forward_channels(&conv1_act), arch.pool_size)?
    } else {
        maxpool1d(&conv1_act, arch.pool_size)?
    };

    let conv2_pre = conv1d_forward(&pool1.output, params.get(CONV2_KERNEL), params.get(CONV2_BIAS), arch.kernel_width)?;
    let conv2_act = relu_tensor(&conv2_pre);
    let pool2 = if lrn_conv {
        maxpool1d(&arch.lrn.forward_channels(&conv2_act), arch.pool_size)?
    } else {
        maxpool1d(&conv2_act, arch.pool_size)?
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (flat, drop1_mask) = dropout(pool2.output.data(), arch.dropout_rate, mode, &mut rng)?;
    let dense1_pre = dense_affine(&flat, params.get(DENSE1_KERNEL), params.get(DENSE1_BIAS))?;
    let dense1_out = Activation::Sigmoid.forward(&dense1_pre);
    Ok(TrunkCache {
        input,
        conv1_pre,
        conv1_act,
        pool1,
        conv2_pre,
        conv2_act,
        pool2,
        drop1_mask,
        flat,
        dense1_pre,
        dense1_out,
    })
}

fn top_forward(params: &ModelParams, bn_out: &[f64], mode: Mode, seed: u64) -> Result<(TopCache, Vec<f64>)> {
    let arch = &params.arch;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (drop2_out, drop2_mask) = dropout(bn_out, arch.dropout_rate, mode, &mut rng)?;
    let dense2_pre = dense_affine(&drop2_out, params.get(DENSE2_KERNEL), params.get(DENSE2_BIAS))?;
    let dense2_out = arch.embedding_activation.forward(&dense2_pre);
    let embedding = if arch.lrn_placement == LrnPlacement::AfterEmbedding {
        arch.lrn.forward_vector(&dense2_out)
    } else {
        dense2_out.clone()
    };
    Ok((
        TopCache {
            drop2_mask,
            drop2_out,
            dense2_pre,
            dense2_out,
        },
        embedding,
    ))
}

/// Runs one branch over `inputs`. In training mode the batch must hold at
/// least two samples and `rng` drives the dropout masks; in evaluation mode
/// `rng` is not touched.
pub fn forward_branch<R: Rng + ?Sized>(
    params: &ModelParams,
    inputs: &[&[f64]],
    mode: Mode,
    rng: &mut R,
) -> Result<BranchForward> {
    let arch = &params.arch;
    if let Some(bad) = inputs.iter().find(|x| x.len() != arch.input_length) {
        return Err(Error::config(format!(
            "input has length {}, network expects {}",
            bad.len(),
            arch.input_length
        )));
    }
    // two dropout seeds per sample, drawn in sample order
    let seeds: Vec<(u64, u64)> = match mode {
        Mode::Train => inputs.iter().map(|_| (rng.random(), rng.random())).collect(),
        Mode::Eval => vec![(0, 0); inputs.len()],
    };
    let trunks: Vec<TrunkCache> = inputs
        .par_iter()
        .zip(seeds.par_iter())
        .map(|(x, s)| trunk_forward(params, x, mode, s.0))
        .collect::<Result<_>>()?;

    let gamma = params.get(BN_GAMMA);
    let beta = params.get(BN_BETA);
    let (bn_out, bn_cache) = match mode {
        Mode::Train => {
            let batch: Vec<Vec<f64>> = trunks.iter().map(|t| t.dense1_out.clone()).collect();
            let (out, cache) = batchnorm_forward_train(&batch, gamma, beta, arch.batch_norm())?;
            (out, Some(cache))
        }
        Mode::Eval => (
            trunks
                .iter()
                .map(|t| {
                    batchnorm_forward_eval(
                        &t.dense1_out,
                        gamma,
                        beta,
                        &params.running_mean,
                        &params.running_var,
                        arch.batch_norm(),
                    )
                })
                .collect(),
            None,
        ),
    };

    let (tops, embeddings): (Vec<TopCache>, Vec<Vec<f64>>) = bn_out
        .par_iter()
        .zip(seeds.par_iter())
        .map(|(b, s)| top_forward(params, b, mode, s.1))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();

    Ok(BranchForward {
        mode,
        trunks,
        bn_cache,
        tops,
        embeddings,
    })
}

/// Backpropagates per-sample embedding gradients through the branch and
/// sums the parameter gradients over the batch in sample order.
pub fn backward_branch(
    params: &ModelParams,
    fwd: &BranchForward,
    d_embeddings: &[Vec<f64>],
) -> Result<Grads> {
    let arch = &params.arch;
    if d_embeddings.len() != fwd.embeddings.len() {
        return Err(Error::config("one embedding gradient per sample is required"));
    }

    // top: embedding → batch-norm output
    let tops: Vec<(Vec<f64>, nn::DenseGrads)> = fwd
        .tops
        .par_iter()
        .zip(d_embeddings.par_iter())
        .map(|(top, d_emb)| {
            let d_out = if arch.lrn_placement == LrnPlacement::AfterEmbedding {
                arch.lrn.backward_vector(&top.dense2_out, d_emb)
            } else {
                d_emb.clone()
            };
            let d_pre = arch
                .embedding_activation
                .backward(&top.dense2_pre, &top.dense2_out, &d_out);
            let g = dense_backward(&top.drop2_out, params.get(DENSE2_KERNEL), params.get(DENSE2_BIAS), &d_pre)?;
            Ok((dropout_backward(&top.drop2_mask, &g.input), g))
        })
        .collect::<Result<_>>()?;

    let mut total = Grads::zeros_like(params);
    for (_, g) in &tops {
        add(&mut total.0[DENSE2_KERNEL], &g.weights);
        add(&mut total.0[DENSE2_BIAS], &g.bias);
    }

    let gamma = params.get(BN_GAMMA);
    let d_bn_out: Vec<Vec<f64>> = tops.into_iter().map(|(d, _)| d).collect();
    let d_dense1_out: Vec<Vec<f64>> = match (fwd.mode, &fwd.bn_cache) {
        (Mode::Train, Some(cache)) => {
            let g = batchnorm_backward_train(&d_bn_out, cache, gamma);
            add(&mut total.0[BN_GAMMA], &g.gamma);
            add(&mut total.0[BN_BETA], &g.beta);
            g.input
        }
        _ => {
            let mut out = Vec::with_capacity(d_bn_out.len());
            for (t, d) in fwd.trunks.iter().zip(&d_bn_out) {
                let (dx, dg, db) = batchnorm_backward_eval(
                    &t.dense1_out,
                    d,
                    gamma,
                    &params.running_mean,
                    &params.running_var,
                    arch.batch_norm(),
                );
                add(&mut total.0[BN_GAMMA], &dg);
                add(&mut total.0[BN_BETA], &db);
                out.push(dx);
            }
            out
        }
    };

    let trunk_grads: Vec<[Vec<f64>; 6]> = fwd
        .trunks
        .par_iter()
        .zip(d_dense1_out.par_iter())
        .map(|(t, d)| trunk_backward(params, t, d))
        .collect::<Result<_>>()?;
    for g in &trunk_grads {
        for (slot, values) in g.iter().enumerate() {
            add(&mut total.0[slot], values);
        }
    }
    Ok(total)
}

fn add(acc: &mut [f64], values: &[f64]) {
    for (a, v) in acc.iter_mut().zip(values) {
        *a += v;
    }
}

/// Gradients for tensors `CONV1_KERNEL..=DENSE1_BIAS`, in that order.
fn trunk_backward(params: &ModelParams, t: &TrunkCache, d_dense1_out: &[f64]) -> Result<[Vec<f64>; 6]> {
    let arch = &params.arch;
    let lrn_conv = arch.lrn_placement == LrnPlacement::AfterEachConv;
    let c = arch.conv_channels;
    let (len1, len2) = arch.pooled_lengths();

    let d_pre = Activation::Sigmoid.backward(&t.dense1_pre, &t.dense1_out, d_dense1_out);
    let g_dense1 = dense_backward(&t.flat, params.get(DENSE1_KERNEL), params.get(DENSE1_BIAS), &d_pre)?;
    let d_pool2 = Tensor2::new(c, len2, dropout_backward(&t.drop1_mask, &g_dense1.input))?;
    let mut d_conv2 = maxpool1d_backward(c, len1, &t.pool2.argmax, &d_pool2)?;
    if lrn_conv {
        d_conv2 = arch.lrn.backward_channels(&t.conv2_act, &d_conv2);
    }
    let d_conv2_pre = relu_backward(&t.conv2_pre, &d_conv2);
    let g_conv2 = conv1d_backward(&t.pool1.output, params.get(CONV2_KERNEL), params.get(CONV2_BIAS), arch.kernel_width, &d_conv2_pre)?;

    let mut d_conv1 = maxpool1d_backward(c, arch.input_length, &t.pool1.argmax, &g_conv2.input)?;
    if lrn_conv {
        d_conv1 = arch.lrn.backward_channels(&t.conv1_act, &d_conv1);
    }
    let d_conv1_pre = relu_backward(&t.conv1_pre, &d_conv1);
    let g_conv1 = conv1d_backward(&t.input, params.get(CONV1_KERNEL), params.get(CONV1_BIAS), arch.kernel_width, &d_conv1_pre)?;

    Ok([
        g_conv1.kernel,
        g_conv1.bias,
        g_conv2.kernel,
        g_conv2.bias,
        g_dense1.weights,
        g_dense1.bias,
    ])
}

/// Embeds a single signature. Training mode needs batch statistics, so a
/// lone sample can only be embedded in evaluation mode.
pub fn embed<R: Rng + ?Sized>(
    params: &ModelParams,
    x: &[f64],
    mode: Mode,
    rng: &mut R,
) -> Result<Embedding> {
    let fwd = forward_branch(params, &[x], mode, rng)?;
    Ok(Embedding {
        values: fwd.embeddings.into_iter().next().expect("one input"),
    })
}

/// Evaluation-mode embeddings for many signatures.
pub fn embed_all(params: &ModelParams, inputs: &[&[f64]]) -> Result<Vec<Embedding>> {
    let mut unused = ChaCha8Rng::seed_from_u64(0);
    let fwd = forward_branch(params, inputs, Mode::Eval, &mut unused)?;
    Ok(fwd
        .embeddings
        .into_iter()
        .map(|values| Embedding { values })
        .collect())
}
