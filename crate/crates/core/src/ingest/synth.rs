//! Synthetic writer corpora.
//!
//! Every writer gets a prototype drawn from `N(0, 2²)` per feature. Genuine
//! samples are the prototype plus unit Gaussian noise. Forgeries add the same
//! offset to every feature, scaled so the shift has length `separation`,
//! before the noise. This mimics skilled forgeries that are uniformly slower
//! or heavier than the original. With `separation = 0` genuine and forged
//! samples are identically distributed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, FeatureVector, Label};
use crate::error::{Error, Result};

const PROTOTYPE_SCALE: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub writers: usize,
    pub genuine_per_writer: usize,
    pub forgery_per_writer: usize,
    pub feature_length: usize,
    pub separation: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            writers: 20,
            genuine_per_writer: 20,
            forgery_per_writer: 20,
            feature_length: 47,
            separation: 10.0,
            seed: 0,
        }
    }
}

pub fn synth_dataset(spec: &SynthSpec) -> Result<Dataset> {
    if !(spec.separation >= 0.0) || !spec.separation.is_finite() {
        return Err(Error::config(format!("separation must be >= 0, got {}", spec.separation)));
    }
    if spec.feature_length == 0 {
        return Err(Error::config("feature length must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let offset = spec.separation / (spec.feature_length as f64).sqrt();

    let mut vectors = Vec::new();
    for w in 0..spec.writers {
        let writer_id = format!("w{:03}", w + 1);
        let prototype: Vec<f64> = (0..spec.feature_length)
            .map(|_| PROTOTYPE_SCALE * normal())
            .collect();
        for s in 0..spec.genuine_per_writer {
            vectors.push(FeatureVector {
                writer_id: writer_id.clone(),
                sample_id: format!("g{:02}", s + 1),
                label: Label::Genuine,
                values: prototype.iter().map(|p| p + normal()).collect(),
            });
        }
        for s in 0..spec.forgery_per_writer {
            vectors.push(FeatureVector {
                writer_id: writer_id.clone(),
                sample_id: format!("f{:02}", s + 1),
                label: Label::Forgery,
                values: prototype
                    .iter()
                    .map(|p| p + offset + normal())
                    .collect(),
            });
        }
    }
    Dataset::from_vectors(format!("synthetic-{}", spec.seed), spec.feature_length, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let spec = SynthSpec { writers: 3, ..SynthSpec::default() };
        assert_eq!(synth_dataset(&spec).unwrap(), synth_dataset(&spec).unwrap());
        let other = SynthSpec { seed: 1, ..spec.clone() };
        assert_ne!(synth_dataset(&spec).unwrap(), synth_dataset(&other).unwrap());
    }

    #[test]
    fn counts_and_ids() {
        let ds = synth_dataset(&SynthSpec { writers: 4, genuine_per_writer: 5, forgery_per_writer: 3, ..SynthSpec::default() }).unwrap();
        assert_eq!(ds.writer_count(), 4);
        assert_eq!(ds.genuine_count(), 20);
        assert_eq!(ds.forgery_count(), 12);
        assert_eq!(ds.writers[3].writer_id, "w004");
    }

    #[test]
    fn negative_separation_rejected() {
        assert!(synth_dataset(&SynthSpec { separation: -1.0, ..SynthSpec::default() }).is_err());
    }

    /// Leave-one-out nearest-mean classification of genuine versus forged
    /// samples within each writer. Chance level is 0.5.
    fn nearest_mean_accuracy(ds: &Dataset) -> f64 {
        let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
        let mean_without = |vs: &[std::sync::Arc<FeatureVector>], skip: Option<usize>| -> Vec<f64> {
            let mut m = vec![0.0; ds.feature_length];
            let n = vs.len() - usize::from(skip.is_some());
            for (k, v) in vs.iter().enumerate() {
                if Some(k) != skip {
                    m.iter_mut().zip(&v.values).for_each(|(a, b)| *a += b / n as f64);
                }
            }
            m
        };
        let (mut correct, mut total) = (0usize, 0usize);
        for w in &ds.writers {
            for (k, v) in w.genuine.iter().enumerate() {
                let (g, f) = (mean_without(&w.genuine, Some(k)), mean_without(&w.forgery, None));
                correct += usize::from(dist(&v.values, &g) < dist(&v.values, &f));
                total += 1;
            }
            for (k, v) in w.forgery.iter().enumerate() {
                let (g, f) = (mean_without(&w.genuine, None), mean_without(&w.forgery, Some(k)));
                correct += usize::from(dist(&v.values, &f) < dist(&v.values, &g));
                total += 1;
            }
        }
        correct as f64 / total as f64
    }

    #[test]
    fn well_separated_corpus_is_easy_for_a_baseline() {
        let ds = synth_dataset(&SynthSpec { writers: 20, separation: 10.0, seed: 5, ..SynthSpec::default() }).unwrap();
        let acc = nearest_mean_accuracy(&ds);
        assert!(acc >= 0.99, "baseline accuracy {acc}");
    }

    #[test]
    fn zero_separation_is_indistinguishable_for_the_baseline() {
        let ds = synth_dataset(&SynthSpec { writers: 20, separation: 0.0, seed: 5, ..SynthSpec::default() }).unwrap();
        let acc = nearest_mean_accuracy(&ds);
        assert!((0.4..0.6).contains(&acc), "baseline accuracy {acc}");
    }
}
