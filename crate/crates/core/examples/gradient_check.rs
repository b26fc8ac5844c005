//! Compares the hand-derived gradient of a small twin network against
//! central finite differences, one parameter tensor at a time.

use std::error::Error;
use std::sync::Arc;

use osvnet::ingest::{FeatureVector, Label};
use osvnet::nn::{InitSpec, Mode};
use osvnet::siamese::{batch_loss, init_params, ArchSpec, LossConfig, SignaturePair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run() -> Result<(), Box<dyn Error>> {
    let arch = ArchSpec { input_length: 8, conv_channels: 4, embedding_dim: 4, ..ArchSpec::default() };
    let params = init_params(&arch, InitSpec::uniform(-0.5, 0.5, 3))?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut vector = |id: usize| {
        let values = (0..arch.input_length).map(|_| rng.random_range(-1.0..1.0)).collect();
        Arc::new(FeatureVector { writer_id: "w".into(), sample_id: id.to_string(), label: Label::Genuine, values })
    };
    let pairs = vec![
        SignaturePair::new(vector(0), vector(1), true)?,
        SignaturePair::new(vector(2), vector(3), false)?,
    ];
    let cfg = LossConfig::default();
    // the same seed reproduces the same dropout masks on every evaluation
    let loss_at = |p: &osvnet::siamese::ModelParams| {
        batch_loss(p, &pairs, &cfg, Mode::Train, &mut ChaCha8Rng::seed_from_u64(9)).map(|b| b.loss)
    };
    let analytic = batch_loss(&params, &pairs, &cfg, Mode::Train, &mut ChaCha8Rng::seed_from_u64(9))?;
    println!("loss {:.6}", analytic.loss);

    let h = 1e-5;
    for (t, tensor) in params.tensors.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for i in 0..tensor.data.len() {
            let (mut up, mut down) = (params.clone(), params.clone());
            up.tensors[t].data[i] += h;
            down.tensors[t].data[i] -= h;
            let numeric = (loss_at(&up)? - loss_at(&down)?) / (2.0 * h);
            let a = analytic.grads.0[t][i];
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-5));
        }
        println!("{:<14} {:>4} entries  worst relative error {worst:.2e}", tensor.name, tensor.data.len());
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run()
}
