//! Trains the twin network on a synthetic corpus and scores writers it has
//! never seen.

use std::error::Error;

use osvnet::ingest::SynthSpec;
use osvnet::pipeline::{cmd_eval, cmd_train, EvalSide, RunConfig};
use osvnet::protocol::SplitSpec;

pub fn run() -> Result<(), Box<dyn Error>> {
    let out = tempfile::tempdir()?;
    let mut cfg = RunConfig {
        synth: SynthSpec { writers: 12, separation: 10.0, ..SynthSpec::default() },
        split: SplitSpec::with_k(8),
        output_dir: out.path().to_path_buf(),
        ..RunConfig::default()
    };
    cfg.train.max_epochs = 30;

    let report = cmd_train(&cfg)?;
    for r in &report.outcome.log.records {
        println!("epoch {:>2}  train {:.4}  validation {:.4}", r.epoch, r.train_loss, r.val_loss.unwrap_or(f64::NAN));
    }
    println!("best epoch {}, training accuracy {:.3}", report.outcome.best_epoch, report.train_accuracy_fixed);

    let eval = cmd_eval(&cfg, &report.checkpoint_path, EvalSide::Test)?;
    println!(
        "unseen writers: {} pairs, accuracy {:.3}, AUC {:.3}",
        eval.n_pairs,
        eval.accuracy,
        eval.auc.unwrap_or(f64::NAN)
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run()
}
