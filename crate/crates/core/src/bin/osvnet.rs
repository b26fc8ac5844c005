use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use osvnet::pipeline::{self, ConfigOverrides, EvalSide};

#[derive(Parser)]
#[command(name = "osvnet", version, about = "Writer-independent online signature verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Global features from a directory of SVC trajectory files.
    Extract {
        #[arg(long)]
        raw: PathBuf,
        #[arg(long, default_value = "svc47")]
        recipe: String,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value_t = 20)]
        genuine_per_writer: usize,
    },
    /// Writes a synthetic feature corpus.
    Synth {
        #[arg(long)]
        csv: PathBuf,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Writes the train and test pair lists of a split.
    Pairs {
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Trains a model and writes its checkpoint, log and manifest.
    Train {
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Scores one side of a split with a saved model.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// train or test.
        #[arg(long, default_value = "test", value_parser = parse_side)]
        side: EvalSide,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Trains and evaluates once per training-writer count.
    Sweep {
        /// Comma-separated K values.
        #[arg(long, value_delimiter = ',', required = true)]
        ks: Vec<usize>,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
}

fn parse_side(s: &str) -> Result<EvalSide, String> {
    match s {
        "train" => Ok(EvalSide::Train),
        "test" => Ok(EvalSide::Test),
        other => Err(format!("expected train or test, got {other}")),
    }
}

fn run(cli: Cli) -> osvnet::Result<bool> {
    match cli.command {
        Command::Extract { raw, recipe, csv, genuine_per_writer } => {
            let report = pipeline::cmd_extract(&raw, &recipe, &csv, genuine_per_writer)?;
            for (path, err) in &report.failures {
                eprintln!("{}: {err}", path.display());
            }
            println!("{} rows written to {}", report.rows, csv.display());
            Ok(report.failures.is_empty())
        }
        Command::Synth { csv, overrides } => {
            let cfg = overrides.resolve()?;
            let ds = pipeline::cmd_synth(&cfg.synth, &csv)?;
            println!("{} writers, {} signatures written to {}", ds.writer_count(), ds.genuine_count() + ds.forgery_count(), csv.display());
            Ok(true)
        }
        Command::Pairs { overrides } => {
            let cfg = overrides.resolve()?;
            let r = pipeline::cmd_pairs(&cfg)?;
            println!(
                "train {} pairs ({} genuine), test {} pairs ({} genuine)",
                r.train_pairs, r.train_genuine_pairs, r.test_pairs, r.test_genuine_pairs
            );
            Ok(true)
        }
        Command::Train { overrides } => {
            let cfg = overrides.resolve()?;
            let r = pipeline::cmd_train(&cfg)?;
            println!(
                "{} epochs, best {} (monitored loss {:.6}); train accuracy {:.4} at threshold {}",
                r.checkpoint.summary.epochs_run,
                r.checkpoint.summary.best_epoch,
                r.checkpoint.summary.best_monitored_loss,
                r.train_accuracy_fixed,
                cfg.threshold
            );
            if let (Some(t), Some(a)) = (r.checkpoint.calibrated_threshold, r.train_accuracy_calibrated) {
                println!("calibrated threshold {t:.6}: train accuracy {a:.4}");
            }
            println!("checkpoint: {}", r.checkpoint_path.display());
            Ok(true)
        }
        Command::Eval { checkpoint, side, overrides } => {
            let cfg = overrides.resolve()?;
            let r = pipeline::cmd_eval(&cfg, &checkpoint, side)?;
            let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
            println!(
                "{} pairs ({} genuine): accuracy {:.4} at {} threshold {}, auc {}, eer {}",
                r.n_pairs, r.n_genuine_pairs, r.accuracy, r.threshold_source, r.threshold, opt(r.auc), opt(r.eer)
            );
            Ok(true)
        }
        Command::Sweep { ks, overrides } => {
            let cfg = overrides.resolve()?;
            let rows = pipeline::cmd_sweep(&cfg, &ks)?;
            let mut ok = true;
            for row in &rows {
                match (&row.report, &row.error) {
                    (_, Some(e)) => {
                        ok = false;
                        eprintln!("K={}: {e}", row.k);
                    }
                    (Some(r), None) => println!("K={}: accuracy {:.4}", row.k, r.accuracy),
                    (None, None) => {}
                }
            }
            println!("table: {}", cfg.output_dir.join("sweep.csv").display());
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
