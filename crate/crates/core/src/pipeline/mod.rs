//! End-to-end runs: configuration, data loading and the commands behind the
//! `osvnet` binary.
//!
//! A [`RunConfig`] is plain JSON; every field has a default, and command-line
//! flags override individual fields (see [`ConfigOverrides`]). The top-level
//! `seed` drives initialization, pair balancing, validation hold-out,
//! shuffling and dropout. The network input length always comes from the
//! data.

mod commands;
mod overrides;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_globals, FeatureRecipe};
use crate::ingest::{read_feature_csv_file, read_svc_file, svc_file_identity, synth_dataset, Dataset, FeatureVector, SynthSpec};
use crate::nn::{InitScheme, InitSpec};
use crate::optim::TrainConfig;
use crate::protocol::SplitSpec;
use crate::siamese::{ArchSpec, LossConfig};

pub use commands::{
    cmd_eval, cmd_extract, cmd_pairs, cmd_sweep, cmd_synth, cmd_train, cmd_train_with_hook, EvalSide,
    ExtractReport, PairsReport, SweepRow, TrainReport, SWEEP_CSV_HEADER,
};
pub use overrides::ConfigOverrides;

/// Version string recorded in run manifests.
pub const VERSION: &str = concat!("osvnet-v", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// A directory of SVC-2004 `U<w>S<s>.TXT` trajectory files.
    SvcRaw,
    /// A feature CSV as written by `extract` or `synth`.
    FeatureCsv,
    /// Generated from the `synth` section.
    #[default]
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset_kind: DatasetKind,
    pub dataset_path: Option<PathBuf>,
    /// Feature recipe for raw trajectories.
    pub recipe: String,
    /// Raw sample numbers up to this are genuine, the rest forgeries.
    pub genuine_per_writer: usize,
    pub synth: SynthSpec,
    pub arch: ArchSpec,
    pub init: InitScheme,
    pub train: TrainConfig,
    pub split: SplitSpec,
    pub loss: LossConfig,
    /// Standardize features with statistics of the training writers.
    pub normalize: bool,
    /// Evaluate at the training-set optimal threshold instead of `threshold`.
    pub calibrate: bool,
    pub threshold: f64,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset_kind: DatasetKind::Synthetic,
            dataset_path: None,
            recipe: "svc47".into(),
            genuine_per_writer: 20,
            synth: SynthSpec::default(),
            arch: ArchSpec::default(),
            init: InitSpec::default().scheme,
            train: TrainConfig::default(),
            split: SplitSpec::default(),
            loss: LossConfig::default(),
            normalize: true,
            calibrate: false,
            threshold: crate::eval::DEFAULT_THRESHOLD,
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Checks everything that can be checked before loading data.
    pub fn validate(&self) -> Result<()> {
        match (self.dataset_kind, &self.dataset_path) {
            (DatasetKind::Synthetic, _) => {}
            (_, None) => return Err(Error::config(format!("dataset kind {:?} needs dataset_path", self.dataset_kind))),
            (_, Some(p)) if !p.exists() => {
                return Err(Error::config(format!("dataset path {} does not exist", p.display())))
            }
            _ => {}
        }
        if self.dataset_kind == DatasetKind::SvcRaw {
            FeatureRecipe::named(&self.recipe)?;
        }
        self.train.validate()?;
        self.loss.validate()?;
        self.network(self.arch.input_length).validate()?;
        if !self.threshold.is_finite() {
            return Err(Error::config("threshold must be finite"));
        }
        Ok(())
    }

    /// Architecture for inputs of `input_length`, with the head matching the loss.
    pub fn network(&self, input_length: usize) -> ArchSpec {
        ArchSpec { input_length, head: self.loss.mode, ..self.arch.clone() }
    }

    pub fn init_spec(&self) -> InitSpec {
        InitSpec { scheme: self.init, seed: self.seed }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: self.seed, ..self.train.clone() }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec { seed: self.seed, ..self.split.clone() }
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        let path = || self.dataset_path.as_deref().ok_or_else(|| Error::config("dataset_path is not set"));
        match self.dataset_kind {
            DatasetKind::Synthetic => synth_dataset(&self.synth),
            DatasetKind::FeatureCsv => read_feature_csv_file(path()?),
            DatasetKind::SvcRaw => {
                let recipe = FeatureRecipe::named(&self.recipe)?;
                let ex = extract_directory(path()?, &recipe, self.genuine_per_writer)?;
                if let Some((file, err)) = ex.failures.first() {
                    return Err(Error::Feature(format!(
                        "{} of {} files failed, first {}: {err}",
                        ex.failures.len(),
                        ex.failures.len() + ex.vectors.len(),
                        file.display()
                    )));
                }
                let name = path()?.file_name().and_then(|n| n.to_str()).unwrap_or("svc").to_string();
                Dataset::from_vectors(name, recipe.target_length, ex.vectors)
            }
        }
    }
}

/// Feature vectors from a trajectory directory, plus the files that failed.
#[derive(Debug)]
pub struct Extraction {
    /// Ordered by writer, then sample.
    pub vectors: Vec<FeatureVector>,
    pub failures: Vec<(PathBuf, Error)>,
}

fn natural_key(id: &str) -> (usize, String) {
    (id.len(), id.to_string())
}

/// Extracts global features from every `.txt` file in `dir`.
pub fn extract_directory(dir: &Path, recipe: &FeatureRecipe, genuine_per_writer: usize) -> Result<Extraction> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("txt")))
        .collect();
    let key = |p: &PathBuf| {
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        match svc_file_identity(name, genuine_per_writer) {
            Some((w, s, _)) => (natural_key(&w), natural_key(&s), name.to_string()),
            None => ((usize::MAX, String::new()), (0, String::new()), name.to_string()),
        }
    };
    files.sort_by_cached_key(key);
    let results: Vec<Result<FeatureVector>> = files
        .par_iter()
        .map(|p| read_svc_file(p, genuine_per_writer).and_then(|t| extract_globals(&t, recipe)))
        .collect();
    let mut vectors = Vec::new();
    let mut failures = Vec::new();
    for (path, r) in files.into_iter().zip(results) {
        match r {
            Ok(v) => vectors.push(v),
            Err(e) => failures.push((path, e)),
        }
    }
    Ok(Extraction { vectors, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_hyperparameters() {
        let c = RunConfig::default();
        assert_eq!(c.train.lr, 0.004);
        assert_eq!(c.train.batch_size, 36);
        assert_eq!(c.train.max_epochs, 400);
        assert_eq!(c.train.patience, 5);
        assert_eq!(c.loss.margin, 1.0);
        assert_eq!(c.loss.l2, 0.03);
        assert_eq!(c.arch.conv_channels, 16);
        assert_eq!(c.arch.embedding_dim, 36);
        assert_eq!(c.threshold, 0.5);
        c.validate().unwrap();
    }

    #[test]
    fn json_round_trip_and_partial_files() {
        let c = RunConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
        let partial = RunConfig::from_json(r#"{"seed": 9, "train": {"max_epochs": 3}}"#).unwrap();
        assert_eq!(partial.seed, 9);
        assert_eq!(partial.train.max_epochs, 3);
        assert_eq!(partial.train.lr, 0.004);
        assert!(RunConfig::from_json(r#"{"sead": 9}"#).is_err());
    }

    #[test]
    fn missing_paths_fail_validation() {
        let c = RunConfig { dataset_kind: DatasetKind::FeatureCsv, ..RunConfig::default() };
        assert!(c.validate().is_err());
        let c = RunConfig { dataset_path: Some("/no/such/file.csv".into()), ..c };
        assert!(c.validate().unwrap_err().to_string().contains("/no/such/file.csv"));
    }

    #[test]
    fn seed_reaches_every_stage() {
        let c = RunConfig { seed: 77, ..RunConfig::default() };
        assert_eq!(c.train_config().seed, 77);
        assert_eq!(c.split_spec().seed, 77);
        assert_eq!(c.init_spec().seed, 77);
    }
}
