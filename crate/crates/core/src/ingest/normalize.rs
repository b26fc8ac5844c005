//! Per-feature z-scoring fit on training writers only.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

pub const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    /// Population mean and standard deviation of every feature over all
    /// samples (genuine and forged) of the listed writers.
    pub fn fit(dataset: &Dataset, writer_indices: &[usize]) -> Result<Self> {
        let len = dataset.feature_length;
        let rows: Vec<&[f64]> = writer_indices
            .iter()
            .flat_map(|&i| {
                let w = &dataset.writers[i];
                w.genuine.iter().chain(&w.forgery).map(|v| v.values.as_slice())
            })
            .collect();
        if rows.is_empty() {
            return Err(Error::config("normalization needs at least one training sample"));
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; len];
        for r in &rows {
            for (m, x) in mean.iter_mut().zip(*r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; len];
        for r in &rows {
            for ((v, x), m) in var.iter_mut().zip(*r).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var.iter().map(|v| (v / n).sqrt().max(STD_FLOOR)).collect();
        Ok(Self { mean, std })
    }

    pub fn identity(len: usize) -> Self {
        Self {
            mean: vec![0.0; len],
            std: vec![1.0; len],
        }
    }

    pub fn transform(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        if self.mean.len() != dataset.feature_length {
            return Err(Error::config(format!(
                "normalization statistics cover {} features, dataset has {}",
                self.mean.len(),
                dataset.feature_length
            )));
        }
        Ok(dataset.map_values(|v| self.transform(v)))
    }
}

/// Fits statistics on `train_writers` and applies them to the whole dataset.
pub fn normalize(dataset: &Dataset, train_writers: &[usize]) -> Result<(Dataset, NormStats)> {
    let stats = NormStats::fit(dataset, train_writers)?;
    Ok((stats.apply(dataset)?, stats))
}

/// `feature,mean,std` CSV, features numbered from 1.
pub fn write_norm_stats<W: Write>(writer: W, stats: &NormStats) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    wtr.write_record(["feature", "mean", "std"])?;
    for (i, (m, s)) in stats.mean.iter().zip(&stats.std).enumerate() {
        wtr.write_record([format!("{}", i + 1), format!("{m:?}"), format!("{s:?}")])?;
    }
    wtr.flush().map_err(|e| Error::io("<norm stats>", e))?;
    Ok(())
}

pub fn read_norm_stats<R: Read>(reader: R) -> Result<NormStats> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut stats = NormStats { mean: Vec::new(), std: Vec::new() };
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != 3 {
            return Err(Error::parse_row(line, "expected feature,mean,std"));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::parse_row(line, format!("{s:?} is not a number")));
        stats.mean.push(num(&rec[1])?);
        stats.std.push(num(&rec[2])?);
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{synth_dataset, SynthSpec};

    fn column(ds: &Dataset, writers: &[usize], j: usize) -> Vec<f64> {
        writers
            .iter()
            .flat_map(|&i| ds.writers[i].genuine.iter().chain(&ds.writers[i].forgery))
            .map(|v| v.values[j])
            .collect()
    }

    fn mean_std(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        (m, (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt())
    }

    #[test]
    fn training_subset_is_standardized() {
        let ds = synth_dataset(&SynthSpec { writers: 6, feature_length: 5, ..SynthSpec::default() }).unwrap();
        let train = [0, 1, 2, 3];
        let (norm, _) = normalize(&ds, &train).unwrap();
        for j in 0..5 {
            let (m, s) = mean_std(&column(&norm, &train, j));
            assert!(m.abs() < 1e-6 && (s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let ds = synth_dataset(&SynthSpec { writers: 3, feature_length: 3, ..SynthSpec::default() })
            .unwrap()
            .map_values(|v| vec![v[0], 7.0, v[2]]);
        let (norm, stats) = normalize(&ds, &[0, 1]).unwrap();
        assert_eq!(stats.std[1], STD_FLOOR);
        assert!(norm.vectors().all(|v| v.values[1] == 0.0));
    }

    #[test]
    fn stats_ignore_test_writers() {
        let ds = synth_dataset(&SynthSpec { writers: 8, feature_length: 4, ..SynthSpec::default() }).unwrap();
        let a = NormStats::fit(&ds, &[0, 1, 2]).unwrap();
        let fewer = ds.subset(&[0, 1, 2, 5]);
        let b = NormStats::fit(&fewer, &[0, 1, 2]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn applying_twice_is_not_idempotent() {
        let ds = synth_dataset(&SynthSpec { writers: 6, feature_length: 4, seed: 3, ..SynthSpec::default() }).unwrap();
        let (once, stats) = normalize(&ds, &[0, 1, 2]).unwrap();
        let twice = stats.apply(&once).unwrap();
        let test = [3, 4, 5];
        let (m1, _) = mean_std(&column(&once, &test, 0));
        let (m2, _) = mean_std(&column(&twice, &test, 0));
        assert!((m1 - m2).abs() > 1e-3);
        // refitting on already-normalized training data is a fixed point
        let (_, refit) = normalize(&once, &[0, 1, 2]).unwrap();
        assert!(refit.mean.iter().all(|m| m.abs() < 1e-9));
        assert!(refit.std.iter().all(|s| (s - 1.0).abs() < 1e-9));
    }

    #[test]
    fn csv_round_trip() {
        let stats = NormStats { mean: vec![0.1, -2.5], std: vec![1.0, 1e-8] };
        let mut buf = Vec::new();
        write_norm_stats(&mut buf, &stats).unwrap();
        assert_eq!(read_norm_stats(buf.as_slice()).unwrap(), stats);
    }
}
