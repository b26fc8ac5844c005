//! Saves a trained model, loads it back and shows that a damaged file is
//! refused.

use std::error::Error;

use osvnet::checkpoint::{load_checkpoint, Checkpoint};
use osvnet::ingest::SynthSpec;
use osvnet::pipeline::{cmd_train, RunConfig};
use osvnet::protocol::SplitSpec;

pub fn run() -> Result<(), Box<dyn Error>> {
    let out = tempfile::tempdir()?;
    let mut cfg = RunConfig {
        synth: SynthSpec { writers: 4, genuine_per_writer: 5, forgery_per_writer: 5, feature_length: 20, ..SynthSpec::default() },
        split: SplitSpec::with_k(2),
        output_dir: out.path().to_path_buf(),
        ..RunConfig::default()
    };
    cfg.train.max_epochs = 2;
    let report = cmd_train(&cfg)?;

    let loaded = load_checkpoint(&report.checkpoint_path)?;
    println!("{} tensors, identical after reload: {}", loaded.params.tensors.len(), loaded == report.checkpoint);
    println!("summary: {}", serde_json::to_string(&loaded.summary)?);

    let mut bytes = std::fs::read(&report.checkpoint_path)?;
    let middle = bytes.len() / 2;
    bytes[middle] ^= 0x40;
    match Checkpoint::from_bytes(&bytes) {
        Ok(_) => println!("corruption went unnoticed"),
        Err(e) => println!("flipped one bit: {e}"),
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run()
}
