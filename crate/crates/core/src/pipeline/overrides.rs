use std::path::PathBuf;

use serde::de::DeserializeOwned;

use super::{DatasetKind, RunConfig};
use crate::error::Result;
use crate::protocol::{ForgeryScheme, Selection, TestMode};
use crate::siamese::{LossMode, LrnPlacement};

/// Parses a snake_case enum name the way the JSON config spells it.
fn snake<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

/// Command-line flags layered over a JSON config file (or the defaults).
#[derive(Debug, Clone, Default, clap::Args)]
pub struct ConfigOverrides {
    /// JSON run configuration; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// svc_raw, feature_csv or synthetic.
    #[arg(long, value_parser = snake::<DatasetKind>)]
    pub dataset_kind: Option<DatasetKind>,
    /// Trajectory directory or feature CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// svc47 or generic100.
    #[arg(long)]
    pub recipe: Option<String>,
    #[arg(long)]
    pub genuine_per_writer: Option<usize>,

    #[arg(long)]
    pub synth_writers: Option<usize>,
    #[arg(long)]
    pub synth_genuine: Option<usize>,
    #[arg(long)]
    pub synth_forgery: Option<usize>,
    #[arg(long)]
    pub synth_length: Option<usize>,
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long)]
    pub synth_seed: Option<u64>,

    /// Training writers.
    #[arg(long)]
    pub k: Option<usize>,
    /// Writers used in total, from the front of the dataset.
    #[arg(long)]
    pub m: Option<usize>,
    /// Pick the K training writers at random with this seed instead of the first K.
    #[arg(long)]
    pub selection_seed: Option<u64>,
    /// with_forgery or genuine_only.
    #[arg(long, value_parser = snake::<TestMode>)]
    pub test_mode: Option<TestMode>,
    /// Leave genuine-forgery pairs out of training as well.
    #[arg(long)]
    pub train_genuine_only: bool,
    #[arg(long)]
    pub no_balance: bool,
    /// index_skip or full_cross.
    #[arg(long, value_parser = snake::<ForgeryScheme>)]
    pub scheme: Option<ForgeryScheme>,

    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub validation_fraction: Option<f64>,
    #[arg(long)]
    pub min_delta: Option<f64>,

    /// contrastive or bce.
    #[arg(long, value_parser = snake::<LossMode>)]
    pub loss: Option<LossMode>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    /// after_embedding, after_each_conv or off.
    #[arg(long, value_parser = snake::<LrnPlacement>)]
    pub lrn: Option<LrnPlacement>,

    #[arg(long)]
    pub no_normalize: bool,
    /// Use the threshold calibrated on the training pairs.
    #[arg(long)]
    pub calibrate: bool,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ConfigOverrides {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$flag.clone() { c.$($field).+ = v; })*
            };
        }
        set!(
            dataset_kind => dataset_kind,
            recipe => recipe,
            genuine_per_writer => genuine_per_writer,
            synth_writers => synth.writers,
            synth_genuine => synth.genuine_per_writer,
            synth_forgery => synth.forgery_per_writer,
            synth_length => synth.feature_length,
            separation => synth.separation,
            synth_seed => synth.seed,
            k => split.k,
            m => split.m,
            test_mode => split.test_mode,
            scheme => split.scheme,
            epochs => train.max_epochs,
            patience => train.patience,
            lr => train.lr,
            batch_size => train.batch_size,
            validation_fraction => train.validation_fraction,
            min_delta => train.min_delta,
            loss => loss.mode,
            margin => loss.margin,
            l2 => loss.l2,
            lrn => arch.lrn_placement,
            threshold => threshold,
            seed => seed,
            out => output_dir,
        );
        if let Some(p) = &self.data {
            c.dataset_path = Some(p.clone());
            if self.dataset_kind.is_none() && c.dataset_kind == DatasetKind::Synthetic {
                c.dataset_kind = if p.is_dir() { DatasetKind::SvcRaw } else { DatasetKind::FeatureCsv };
            }
        }
        if let Some(seed) = self.selection_seed {
            c.split.selection = Selection::SeededRandom { seed };
        }
        c.split.train_genuine_only |= self.train_genuine_only;
        c.split.balance &= !self.no_balance;
        c.normalize &= !self.no_normalize;
        c.calibrate |= self.calibrate;
        Ok(c)
    }
}
