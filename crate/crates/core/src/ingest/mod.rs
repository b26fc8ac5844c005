//! Signature data in and out: SVC-2004 trajectory files, feature-vector CSVs,
//! synthetic corpora and z-score normalization.

mod feature_csv;
mod normalize;
mod svc;
mod synth;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use feature_csv::{load_feature_csv, read_feature_csv_file, write_feature_csv, write_feature_rows};
pub use normalize::{normalize, read_norm_stats, write_norm_stats, NormStats};
pub use svc::{
    parse_svc_trajectory, read_svc_file, svc_file_identity, write_svc_trajectory, PenSample,
    PenState, SignatureTrajectory,
};
pub use synth::{synth_dataset, SynthSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Genuine,
    Forgery,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Genuine => "genuine",
            Label::Forgery => "forgery",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "genuine" => Ok(Label::Genuine),
            "forgery" => Ok(Label::Forgery),
            other => Err(format!("unknown label {other:?} (expected genuine or forgery)")),
        }
    }
}

/// Global features of one signature.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub writer_id: String,
    pub sample_id: String,
    pub label: Label,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WriterSamples {
    pub writer_id: String,
    pub genuine: Vec<Arc<FeatureVector>>,
    pub forgery: Vec<Arc<FeatureVector>>,
}

/// A corpus of feature vectors grouped by writer, in first-seen writer order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub feature_length: usize,
    pub writers: Vec<WriterSamples>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, feature_length: usize) -> Self {
        Self {
            name: name.into(),
            feature_length,
            writers: Vec::new(),
        }
    }

    /// Builds a dataset from vectors in any order; writers keep the order in
    /// which they first appear.
    pub fn from_vectors(
        name: impl Into<String>,
        feature_length: usize,
        vectors: impl IntoIterator<Item = FeatureVector>,
    ) -> Result<Self> {
        let mut ds = Self::new(name, feature_length);
        let mut index: HashMap<String, usize> = HashMap::new();
        for v in vectors {
            ds.check_vector(&v)?;
            let slot = *index.entry(v.writer_id.clone()).or_insert_with(|| {
                ds.writers.push(WriterSamples {
                    writer_id: v.writer_id.clone(),
                    genuine: Vec::new(),
                    forgery: Vec::new(),
                });
                ds.writers.len() - 1
            });
            let w = &mut ds.writers[slot];
            match v.label {
                Label::Genuine => w.genuine.push(Arc::new(v)),
                Label::Forgery => w.forgery.push(Arc::new(v)),
            }
        }
        Ok(ds)
    }

    fn check_vector(&self, v: &FeatureVector) -> Result<()> {
        if v.values.len() != self.feature_length {
            return Err(Error::config(format!(
                "vector {}/{} has {} features, dataset expects {}",
                v.writer_id,
                v.sample_id,
                v.values.len(),
                self.feature_length
            )));
        }
        if v.values.iter().any(|x| !x.is_finite()) {
            return Err(Error::config(format!(
                "vector {}/{} contains non-finite values",
                v.writer_id, v.sample_id
            )));
        }
        Ok(())
    }

    pub fn writer_count(&self) -> usize {
        self.writers.len()
    }

    pub fn genuine_count(&self) -> usize {
        self.writers.iter().map(|w| w.genuine.len()).sum()
    }

    pub fn forgery_count(&self) -> usize {
        self.writers.iter().map(|w| w.forgery.len()).sum()
    }

    /// All vectors, writer by writer, genuine before forgery.
    pub fn vectors(&self) -> impl Iterator<Item = &Arc<FeatureVector>> {
        self.writers
            .iter()
            .flat_map(|w| w.genuine.iter().chain(w.forgery.iter()))
    }

    pub fn writer_index(&self, writer_id: &str) -> Option<usize> {
        self.writers.iter().position(|w| w.writer_id == writer_id)
    }

    /// New dataset restricted to the given writer indices, in that order.
    pub fn subset(&self, writer_indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            feature_length: self.feature_length,
            writers: writer_indices.iter().map(|&i| self.writers[i].clone()).collect(),
        }
    }

    /// Same dataset with every vector transformed by `f`.
    pub fn map_values(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Dataset {
        let mut convert = |v: &Arc<FeatureVector>| {
            Arc::new(FeatureVector {
                values: f(&v.values),
                ..(**v).clone()
            })
        };
        Dataset {
            name: self.name.clone(),
            feature_length: self.feature_length,
            writers: self
                .writers
                .iter()
                .map(|w| WriterSamples {
                    writer_id: w.writer_id.clone(),
                    genuine: w.genuine.iter().map(&mut convert).collect(),
                    forgery: w.forgery.iter().map(&mut convert).collect(),
                })
                .collect(),
        }
    }
}
