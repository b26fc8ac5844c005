//! One-shot verification: the metric is learned from a single writer and
//! applied to everyone else. Compared with training on half the writers,
//! with and without forgeries among the test pairs.

use std::error::Error;

use osvnet::ingest::SynthSpec;
use osvnet::pipeline::{cmd_sweep, RunConfig};
use osvnet::protocol::TestMode;

pub fn run() -> Result<(), Box<dyn Error>> {
    let out = tempfile::tempdir()?;
    for mode in [TestMode::WithForgery, TestMode::GenuineOnly] {
        let mut cfg = RunConfig {
            synth: SynthSpec { writers: 10, genuine_per_writer: 10, forgery_per_writer: 10, ..SynthSpec::default() },
            output_dir: out.path().to_path_buf(),
            ..RunConfig::default()
        };
        cfg.split.test_mode = mode;
        cfg.train.max_epochs = 20;
        for row in cmd_sweep(&cfg, &[5, 1])? {
            let acc = row.report.as_ref().map_or(f64::NAN, |r| r.accuracy);
            let (train, test) = row.pairs.map_or((0, 0), |p| (p.0, p.2));
            println!("{mode:?} K={}: {train} training pairs, {test} test pairs, accuracy {acc:.3}", row.k);
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run()
}
