use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{extract_directory, RunConfig, VERSION};
use crate::checkpoint::{load_checkpoint, save_checkpoint, sha256_hex, Checkpoint, TrainingSummary};
use crate::error::{Error, Result};
use crate::eval::{
    accuracy_at, calibrate_threshold, score_pairs, write_roc_csv, EvalReport, ThresholdSource,
};
use crate::features::FeatureRecipe;
use crate::ingest::{synth_dataset, write_feature_csv, write_feature_rows, write_norm_stats, Dataset, NormStats, SynthSpec};
use crate::optim::{train_with_hook, StepEvent, TrainOutcome};
use crate::protocol::{build_split, Split, SplitSpec, TestMode};
use crate::siamese::init_params;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug)]
pub struct ExtractReport {
    pub rows: usize,
    /// Files that could not be read, with the reason.
    pub failures: Vec<(PathBuf, Error)>,
}

/// Writes one feature row per readable trajectory in `raw_dir`. Files that
/// fail are reported and skipped.
pub fn cmd_extract(raw_dir: &Path, recipe: &str, out_csv: &Path, genuine_per_writer: usize) -> Result<ExtractReport> {
    let recipe = FeatureRecipe::named(recipe)?;
    let ex = extract_directory(raw_dir, &recipe, genuine_per_writer)?;
    write_feature_rows(create(out_csv)?, recipe.target_length, &ex.vectors)?;
    Ok(ExtractReport { rows: ex.vectors.len(), failures: ex.failures })
}

pub fn cmd_synth(spec: &SynthSpec, out_csv: &Path) -> Result<Dataset> {
    let ds = synth_dataset(spec)?;
    write_feature_csv(create(out_csv)?, &ds)?;
    Ok(ds)
}

/// Dataset with normalization fitted on the training writers, and the split.
struct Prepared {
    dataset: Dataset,
    norm: NormStats,
    split: Split,
    spec: SplitSpec,
}

fn prepare(cfg: &RunConfig, raw: &Dataset, norm: Option<NormStats>) -> Result<Prepared> {
    let spec = cfg.split_spec();
    let norm = match norm {
        Some(n) => n,
        None if cfg.normalize => NormStats::fit(raw, &spec.select_writers(raw)?)?,
        None => NormStats::identity(raw.feature_length),
    };
    let dataset = norm.apply(raw)?;
    let split = build_split(&dataset, &spec)?;
    Ok(Prepared { dataset, norm, split, spec })
}

#[derive(Debug, Clone, Serialize)]
pub struct PairsReport {
    pub train_pairs: usize,
    pub train_genuine_pairs: usize,
    pub test_pairs: usize,
    pub test_genuine_pairs: usize,
}

/// Writes `train_pairs.csv` and `test_pairs.csv` for the configured split.
pub fn cmd_pairs(cfg: &RunConfig) -> Result<PairsReport> {
    cfg.validate()?;
    let ds = cfg.load_dataset()?;
    let split = build_split(&ds, &cfg.split_spec())?;
    split.train.write_csv(create(&cfg.output_dir.join("train_pairs.csv"))?)?;
    split.test.write_csv(create(&cfg.output_dir.join("test_pairs.csv"))?)?;
    Ok(PairsReport {
        train_pairs: split.train.len(),
        train_genuine_pairs: split.train.genuine_count(),
        test_pairs: split.test.len(),
        test_genuine_pairs: split.test.genuine_count(),
    })
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub checkpoint: Checkpoint,
    pub outcome: TrainOutcome,
    pub pairs: PairsReport,
    pub train_accuracy_fixed: f64,
    pub train_accuracy_calibrated: Option<f64>,
    pub checkpoint_path: PathBuf,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'a str,
    config: &'a RunConfig,
    dataset: &'a str,
    feature_length: usize,
    train_writers: &'a [String],
    test_writers: &'a [String],
    pairs: &'a PairsReport,
    summary: &'a TrainingSummary,
    calibrated_threshold: Option<f64>,
    train_accuracy_fixed: f64,
    train_accuracy_calibrated: Option<f64>,
    checkpoint_sha256: String,
}

/// Trains on the split's training pairs; the checkpoint keeps the best
/// monitored epoch and a threshold calibrated on the training pairs.
fn fit(cfg: &RunConfig, prep: &Prepared, hook: impl FnMut(&StepEvent<'_>) -> Result<()>) -> Result<(Checkpoint, TrainOutcome, f64, Option<f64>)> {
    let arch = cfg.network(prep.dataset.feature_length);
    let params = init_params(&arch, cfg.init_spec())?;
    let outcome = train_with_hook(params, &prep.split.train.pairs, &cfg.train_config(), &cfg.loss, hook)?;
    let scores = score_pairs(&outcome.params, &prep.split.train.pairs, &cfg.loss)?;
    let calibrated = calibrate_threshold(&scores).ok();
    let fixed = accuracy_at(&scores, cfg.threshold)?;
    let calibrated_acc = calibrated.map(|t| accuracy_at(&scores, t)).transpose()?;
    let checkpoint = Checkpoint {
        params: outcome.params.clone(),
        norm: prep.norm.clone(),
        loss: cfg.loss,
        calibrated_threshold: calibrated,
        summary: TrainingSummary::from_outcome(&outcome, &prep.dataset.name, cfg.seed),
    };
    Ok((checkpoint, outcome, fixed, calibrated_acc))
}

fn pair_counts(split: &Split) -> PairsReport {
    PairsReport {
        train_pairs: split.train.len(),
        train_genuine_pairs: split.train.genuine_count(),
        test_pairs: split.test.len(),
        test_genuine_pairs: split.test.genuine_count(),
    }
}

pub fn cmd_train(cfg: &RunConfig) -> Result<TrainReport> {
    cmd_train_with_hook(cfg, |_| Ok(()))
}

/// Writes `checkpoint.osvn`, `trainlog.csv`, `normstats.csv` and
/// `manifest.json` under the output directory.
pub fn cmd_train_with_hook(cfg: &RunConfig, hook: impl FnMut(&StepEvent<'_>) -> Result<()>) -> Result<TrainReport> {
    cfg.validate()?;
    let raw = cfg.load_dataset()?;
    let prep = prepare(cfg, &raw, None)?;
    let (checkpoint, outcome, train_accuracy_fixed, train_accuracy_calibrated) = fit(cfg, &prep, hook)?;
    let out = &cfg.output_dir;
    let checkpoint_path = out.join("checkpoint.osvn");
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    save_checkpoint(&checkpoint_path, &checkpoint)?;
    outcome.log.write_csv(create(&out.join("trainlog.csv"))?)?;
    write_norm_stats(create(&out.join("normstats.csv"))?, &prep.norm)?;
    let pairs = pair_counts(&prep.split);
    let bytes = std::fs::read(&checkpoint_path).map_err(|e| Error::io(&checkpoint_path, e))?;
    write_json(
        &out.join("manifest.json"),
        &Manifest {
            version: VERSION,
            config: cfg,
            dataset: &prep.dataset.name,
            feature_length: prep.dataset.feature_length,
            train_writers: &prep.split.train.writers,
            test_writers: &prep.split.test.writers,
            pairs: &pairs,
            summary: &checkpoint.summary,
            calibrated_threshold: checkpoint.calibrated_threshold,
            train_accuracy_fixed,
            train_accuracy_calibrated,
            checkpoint_sha256: sha256_hex(&bytes),
        },
    )?;
    Ok(TrainReport { checkpoint, outcome, pairs, train_accuracy_fixed, train_accuracy_calibrated, checkpoint_path })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalSide {
    Train,
    #[default]
    Test,
}

fn threshold_for(cfg: &RunConfig, calibrated: Option<f64>) -> Result<(f64, ThresholdSource)> {
    if cfg.calibrate {
        let t = calibrated.ok_or_else(|| Error::config("no calibrated threshold available (training pairs had one label)"))?;
        Ok((t, ThresholdSource::Calibrated))
    } else {
        Ok((cfg.threshold, ThresholdSource::Fixed))
    }
}

/// Scores one side of the configured split with a saved model and writes
/// `report.json` and `roc.csv`.
pub fn cmd_eval(cfg: &RunConfig, checkpoint: &Path, side: EvalSide) -> Result<EvalReport> {
    cfg.validate()?;
    let ckpt = load_checkpoint(checkpoint)?;
    let raw = cfg.load_dataset()?;
    let expected = ckpt.params.arch.input_length;
    if raw.feature_length != expected {
        return Err(Error::config(format!(
            "checkpoint expects {expected} features per signature but the dataset has {}",
            raw.feature_length
        )));
    }
    let prep = prepare(cfg, &raw, Some(ckpt.norm.clone()))?;
    let pairs = match side {
        EvalSide::Train => &prep.split.train,
        EvalSide::Test => &prep.split.test,
    };
    let scored = score_pairs(&ckpt.params, &pairs.pairs, &ckpt.loss)?;
    let (threshold, source) = threshold_for(cfg, ckpt.calibrated_threshold)?;
    let report = EvalReport::from_scores(&scored, threshold, source)?;
    report.write_json(create(&cfg.output_dir.join("report.json"))?)?;
    write_roc_csv(create(&cfg.output_dir.join("roc.csv"))?, &report.roc)?;
    Ok(report)
}

pub const SWEEP_CSV_HEADER: [&str; 16] = [
    "k",
    "test_writers",
    "test_mode",
    "train_pairs",
    "train_genuine_pairs",
    "test_pairs",
    "test_genuine_pairs",
    "epochs_run",
    "best_epoch",
    "threshold",
    "threshold_source",
    "accuracy",
    "auc",
    "eer",
    "status",
    "error",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub k: usize,
    pub test_writers: usize,
    pub test_mode: TestMode,
    pub pairs: Option<(usize, usize, usize, usize)>,
    pub epochs_run: Option<usize>,
    pub best_epoch: Option<usize>,
    pub report: Option<EvalReport>,
    pub error: Option<String>,
}

impl SweepRow {
    fn fields(&self) -> Vec<String> {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let r = self.report.as_ref();
        let mode = match self.test_mode {
            TestMode::WithForgery => "with_forgery",
            TestMode::GenuineOnly => "genuine_only",
        };
        let (tp, tg, sp, sg) = match self.pairs {
            Some((a, b, c, d)) => (a.to_string(), b.to_string(), c.to_string(), d.to_string()),
            None => Default::default(),
        };
        vec![
            self.k.to_string(),
            self.test_writers.to_string(),
            mode.into(),
            tp,
            tg,
            sp,
            sg,
            opt(self.epochs_run.map(|v| v.to_string())),
            opt(self.best_epoch.map(|v| v.to_string())),
            opt(r.map(|r| r.threshold.to_string())),
            opt(r.map(|r| r.threshold_source.to_string())),
            opt(r.map(|r| r.accuracy.to_string())),
            opt(r.and_then(|r| r.auc).map(|v| v.to_string())),
            opt(r.and_then(|r| r.eer).map(|v| v.to_string())),
            if self.error.is_some() { "error".into() } else { "ok".into() },
            self.error.clone().unwrap_or_default(),
        ]
    }
}

fn sweep_point(cfg: &RunConfig, raw: &Dataset, row: &mut SweepRow) -> Result<()> {
    let prep = prepare(cfg, raw, None)?;
    let counts = pair_counts(&prep.split);
    row.pairs = Some((counts.train_pairs, counts.train_genuine_pairs, counts.test_pairs, counts.test_genuine_pairs));
    let (checkpoint, outcome, _, _) = fit(cfg, &prep, |_| Ok(()))?;
    row.epochs_run = Some(outcome.log.records.len());
    row.best_epoch = Some(outcome.best_epoch);
    let scored = score_pairs(&checkpoint.params, &prep.split.test.pairs, &cfg.loss)?;
    let (threshold, source) = threshold_for(cfg, checkpoint.calibrated_threshold)?;
    row.report = Some(EvalReport::from_scores(&scored, threshold, source)?);
    debug_assert_eq!(prep.spec.k, row.k);
    Ok(())
}

/// Trains from scratch and evaluates on the unseen writers for each `K`,
/// writing one `sweep.csv` row per value. A failing `K` is recorded in its
/// row and the sweep moves on.
pub fn cmd_sweep(cfg: &RunConfig, ks: &[usize]) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let raw = cfg.load_dataset()?;
    let m = cfg.split.total_writers(&raw);
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let mut point = cfg.clone();
        point.split.k = k;
        let mut row = SweepRow {
            k,
            test_writers: m.saturating_sub(k),
            test_mode: cfg.split.test_mode,
            pairs: None,
            epochs_run: None,
            best_epoch: None,
            report: None,
            error: None,
        };
        if let Err(e) = sweep_point(&point, &raw, &mut row) {
            row.error = Some(e.to_string());
        }
        rows.push(row);
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create(&cfg.output_dir.join("sweep.csv"))?);
    w.write_record(SWEEP_CSV_HEADER)?;
    for row in &rows {
        w.write_record(row.fields())?;
    }
    w.flush().map_err(|e| Error::io(cfg.output_dir.join("sweep.csv"), e))?;
    Ok(rows)
}
