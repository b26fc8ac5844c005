#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use osvnet::ingest::{write_svc_trajectory, FeatureVector, Label, PenSample, PenState, SignatureTrajectory};
use osvnet::nn::{InitSpec, Mode};
use osvnet::siamese::{batch_loss, init_params, ArchSpec, LossConfig, ModelParams, SignaturePair};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Small network used for finite-difference checks.
pub fn tiny_arch() -> ArchSpec {
    ArchSpec { input_length: 8, conv_channels: 4, embedding_dim: 4, ..ArchSpec::default() }
}

pub fn random_pairs(n: usize, len: usize, seed: u64) -> Vec<SignaturePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vector = |i: usize| {
        let values: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut rng)).collect();
        Arc::new(FeatureVector { writer_id: "w".into(), sample_id: format!("s{i}"), label: Label::Genuine, values })
    };
    (0..n).map(|i| SignaturePair::new(vector(2 * i), vector(2 * i + 1), i % 2 == 0).unwrap()).collect()
}

pub struct GradCheck {
    /// Worst `|analytic - numeric| / max(|analytic|, |numeric|, floor)`.
    pub max_rel_err: f64,
    pub worst: String,
    pub kink_margin: f64,
    pub checked: usize,
}

pub const REL_FLOOR: f64 = 1e-5;
const STEP: f64 = 1e-5;

fn loss_at(params: &ModelParams, pairs: &[SignaturePair], cfg: &LossConfig, dropout_seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
    batch_loss(params, pairs, cfg, Mode::Train, &mut rng).unwrap().loss
}

/// Central differences over every parameter entry against the analytic
/// gradient of `batch_loss` in training mode, dropout masks held fixed.
pub fn check_gradients(arch: &ArchSpec, cfg: &LossConfig, seed: u64, n_pairs: usize) -> GradCheck {
    let arch = ArchSpec { head: cfg.mode, ..arch.clone() };
    let params = init_params(&arch, InitSpec::uniform(-0.5, 0.5, seed)).unwrap();
    let pairs = random_pairs(n_pairs, arch.input_length, seed ^ 0x9e37);
    let dropout_seed = seed.wrapping_mul(31) + 7;
    let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
    let analytic = batch_loss(&params, &pairs, cfg, Mode::Train, &mut rng).unwrap();
    let mut worst = (0.0, String::new());
    let mut checked = 0;
    for (t, tensor) in params.tensors.iter().enumerate() {
        for i in 0..tensor.data.len() {
            let mut plus = params.clone();
            plus.tensors[t].data[i] += STEP;
            let mut minus = params.clone();
            minus.tensors[t].data[i] -= STEP;
            let numeric = (loss_at(&plus, &pairs, cfg, dropout_seed) - loss_at(&minus, &pairs, cfg, dropout_seed)) / (2.0 * STEP);
            let a = analytic.grads.0[t][i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
            checked += 1;
            if rel > worst.0 {
                worst = (rel, format!("{}[{i}]: analytic {a:e}, numeric {numeric:e}", tensor.name));
            }
        }
    }
    GradCheck { max_rel_err: worst.0, worst: worst.1, kink_margin: analytic.kink_margin, checked }
}

/// Runs `check_gradients` on `seeds` seeds whose kink margin is at least
/// `1e-3`, skipping and replacing the others. Returns per-seed results.
pub fn check_many(arch: &ArchSpec, cfg: &LossConfig, seeds: usize) -> Vec<(u64, GradCheck)> {
    let mut out = Vec::new();
    let mut seed = 0;
    while out.len() < seeds {
        let r = check_gradients(arch, cfg, seed, 4);
        if r.kink_margin >= 1e-3 {
            out.push((seed, r));
        }
        seed += 1;
        assert!(seed < 50 * seeds as u64, "too many seeds land near a kink");
    }
    out
}

/// A looping stroke whose shape depends on writer and sample.
pub fn stroke(writer: i64, sample: i64) -> SignatureTrajectory {
    let samples = (0..60)
        .map(|i| {
            let a = i as f64 / 6.0;
            PenSample {
                x: (400.0 * a.cos() + 30.0 * (writer as f64) * a + sample as f64) as i64,
                y: (250.0 * (a * (1.0 + writer as f64 / 10.0)).sin()) as i64,
                t: i * 10,
                pen: if i % 17 == 16 { PenState::Up } else { PenState::Down },
                azimuth: 900 + (i * 7 + sample) % 360,
                altitude: 450 + i % 30,
                pressure: 200 + (i * writer) % 500,
            }
        })
        .collect();
    SignatureTrajectory { writer_id: String::new(), sample_id: String::new(), label: Label::Genuine, samples }
}

pub fn write_svc_dir(dir: &Path, writers: i64, per_writer: i64) {
    for w in 1..=writers {
        for s in 1..=per_writer {
            std::fs::write(dir.join(format!("U{w}S{s}.TXT")), write_svc_trajectory(&stroke(w, s))).unwrap();
        }
    }
}
