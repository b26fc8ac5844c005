//! ROC curve, AUC, equal error rate and threshold calibration for a handful
//! of scored pairs. Lower scores mean "same writer".

use std::error::Error;

use osvnet::eval::{accuracy_at, calibrate_threshold, eer, roc_auc, EvalReport, ScoredPair, ThresholdSource};

pub fn run() -> Result<(), Box<dyn Error>> {
    let genuine = [0.05, 0.12, 0.2, 0.31, 0.44, 0.62];
    let forged = [0.38, 0.55, 0.71, 0.8, 0.93, 1.2];
    let scored: Vec<ScoredPair> = genuine
        .iter()
        .map(|&s| ScoredPair::new(s, true))
        .chain(forged.iter().map(|&s| ScoredPair::new(s, false)))
        .collect();

    let (roc, auc) = roc_auc(&scored)?;
    println!("{:>10} {:>6} {:>6}", "threshold", "fpr", "tpr");
    for p in &roc {
        println!("{:>10.3} {:>6.3} {:>6.3}", p.threshold, p.fpr, p.tpr);
    }
    println!("AUC {auc:.4}, EER {:.4}", eer(&roc)?);

    let t = calibrate_threshold(&scored)?;
    println!("accuracy at 0.5: {:.3}; at calibrated {t:.3}: {:.3}", accuracy_at(&scored, 0.5)?, accuracy_at(&scored, t)?);

    let report = EvalReport::from_scores(&scored, t, ThresholdSource::Calibrated)?;
    report.write_json(std::io::stdout())?;
    println!();
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run()
}
