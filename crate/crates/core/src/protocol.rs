//! Pair generation and writer-independent train/test splits.
//!
//! Each writer contributes genuine–genuine pairs (label 1) and
//! genuine–forgery pairs (label 0). A split assigns `K` of the first `M`
//! writers to training and the rest to testing, so the two sides never share
//! a writer.

use std::collections::BTreeSet;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Dataset, WriterSamples};
use crate::siamese::SignaturePair;

/// How forgeries are paired with a writer's genuine samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForgeryScheme {
    /// Genuine `i` with every forgery `j != i`: `n(n-1)` pairs for `n` of each.
    #[default]
    IndexSkip,
    /// Every genuine with every forgery.
    FullCross,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Selection {
    #[default]
    FirstK,
    SeededRandom { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMode {
    #[default]
    WithForgery,
    GenuineOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    /// Training writers.
    pub k: usize,
    /// Writers taken from the front of the dataset; 0 means all of them.
    pub m: usize,
    pub selection: Selection,
    pub test_mode: TestMode,
    /// Drop the genuine–forgery pairs from training as well as testing.
    pub train_genuine_only: bool,
    pub balance: bool,
    pub scheme: ForgeryScheme,
    /// Seeds the balancing subsample.
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            k: 1,
            m: 0,
            selection: Selection::FirstK,
            test_mode: TestMode::WithForgery,
            train_genuine_only: false,
            balance: true,
            scheme: ForgeryScheme::IndexSkip,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn with_k(k: usize) -> Self {
        Self { k, ..Self::default() }
    }

    /// Total writers this spec uses from `dataset`.
    pub fn total_writers(&self, dataset: &Dataset) -> usize {
        if self.m == 0 {
            dataset.writer_count()
        } else {
            self.m
        }
    }

    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        let m = self.total_writers(dataset);
        if m > dataset.writer_count() {
            return Err(Error::Protocol(format!(
                "M = {m} but the dataset has {} writers",
                dataset.writer_count()
            )));
        }
        if self.k < 1 || self.k + 1 > m {
            return Err(Error::Protocol(format!("K must be in 1..={}, got {}", m.saturating_sub(1), self.k)));
        }
        Ok(())
    }

    /// Indices of the training writers, in dataset order.
    pub fn select_writers(&self, dataset: &Dataset) -> Result<Vec<usize>> {
        self.validate(dataset)?;
        let m = self.total_writers(dataset);
        let mut chosen: Vec<usize> = (0..m).collect();
        if let Selection::SeededRandom { seed } = self.selection {
            chosen.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        chosen.truncate(self.k);
        chosen.sort_unstable();
        Ok(chosen)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    GenuineGenuine,
    GenuineForgery,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairProvenance {
    pub writer1: String,
    pub sample1: String,
    pub writer2: String,
    pub sample2: String,
    pub kind: PairKind,
}

#[derive(Debug, Clone, Default)]
pub struct PairSet {
    pub pairs: Vec<SignaturePair>,
    /// Writer ids this side was built from, in dataset order.
    pub writers: Vec<String>,
}

impl PairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn genuine_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.same_writer).count()
    }

    pub fn forgery_count(&self) -> usize {
        self.len() - self.genuine_count()
    }

    pub fn provenance(&self) -> impl Iterator<Item = PairProvenance> + '_ {
        self.pairs.iter().map(|p| PairProvenance {
            writer1: p.s1.writer_id.clone(),
            sample1: p.s1.sample_id.clone(),
            writer2: p.s2.writer_id.clone(),
            sample2: p.s2.sample_id.clone(),
            kind: if p.same_writer { PairKind::GenuineGenuine } else { PairKind::GenuineForgery },
        })
    }

    /// Writer ids referenced by any pair member.
    pub fn referenced_writers(&self) -> BTreeSet<&str> {
        self.pairs
            .iter()
            .flat_map(|p| [p.s1.writer_id.as_str(), p.s2.writer_id.as_str()])
            .collect()
    }

    /// Columns `writer1,sample1,writer2,sample2,label`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        w.write_record(["writer1", "sample1", "writer2", "sample2", "label"])?;
        for p in &self.pairs {
            w.write_record([
                p.s1.writer_id.as_str(),
                p.s1.sample_id.as_str(),
                p.s2.writer_id.as_str(),
                p.s2.sample_id.as_str(),
                if p.same_writer { "1" } else { "0" },
            ])?;
        }
        w.flush().map_err(|e| Error::io("pair csv", e))?;
        Ok(())
    }
}

/// All unordered pairs of a writer's genuine samples.
pub fn genuine_pairs(writer: &WriterSamples) -> Result<Vec<SignaturePair>> {
    let g = &writer.genuine;
    if g.len() < 2 {
        return Err(Error::Protocol(format!(
            "writer {} has {} genuine samples, need at least 2",
            writer.writer_id,
            g.len()
        )));
    }
    let mut out = Vec::with_capacity(g.len() * (g.len() - 1) / 2);
    for i in 0..g.len() {
        for j in i + 1..g.len() {
            out.push(SignaturePair::new(g[i].clone(), g[j].clone(), true)?);
        }
    }
    Ok(out)
}

pub fn forgery_pairs(writer: &WriterSamples, scheme: ForgeryScheme) -> Result<Vec<SignaturePair>> {
    let (g, f) = (&writer.genuine, &writer.forgery);
    if g.is_empty() || f.is_empty() {
        return Err(Error::Protocol(format!(
            "writer {} needs genuine and forged samples, has {} and {}",
            writer.writer_id,
            g.len(),
            f.len()
        )));
    }
    let mut out = Vec::with_capacity(g.len() * f.len());
    for (i, gi) in g.iter().enumerate() {
        for (j, fj) in f.iter().enumerate() {
            if scheme == ForgeryScheme::IndexSkip && i == j {
                continue;
            }
            out.push(SignaturePair::new(gi.clone(), fj.clone(), false)?);
        }
    }
    Ok(out)
}

/// Subsamples the larger label group to the size of the smaller one,
/// keeping the survivors in generation order.
fn balance(mut genuine: Vec<SignaturePair>, mut forged: Vec<SignaturePair>, rng: &mut ChaCha8Rng) -> Vec<SignaturePair> {
    let keep = genuine.len().min(forged.len());
    let shrink = |v: &mut Vec<SignaturePair>, rng: &mut ChaCha8Rng| {
        if v.len() > keep {
            let mut idx = rand::seq::index::sample(rng, v.len(), keep).into_vec();
            idx.sort_unstable();
            *v = idx.into_iter().map(|i| v[i].clone()).collect();
        }
    };
    shrink(&mut genuine, rng);
    shrink(&mut forged, rng);
    genuine.extend(forged);
    genuine
}

fn writer_pairs(
    writer: &WriterSamples,
    include_forgery: bool,
    spec: &SplitSpec,
    stream: u64,
) -> Result<Vec<SignaturePair>> {
    let genuine = genuine_pairs(writer)?;
    if !include_forgery {
        return Ok(genuine);
    }
    let forged = forgery_pairs(writer, spec.scheme)?;
    if !spec.balance {
        return Ok(genuine.into_iter().chain(forged).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(stream);
    Ok(balance(genuine, forged, &mut rng))
}

fn side(dataset: &Dataset, writers: &[usize], include_forgery: bool, spec: &SplitSpec) -> Result<PairSet> {
    let per_writer: Vec<Vec<SignaturePair>> = writers
        .par_iter()
        .map(|&w| writer_pairs(&dataset.writers[w], include_forgery, spec, w as u64))
        .collect::<Result<_>>()?;
    Ok(PairSet {
        pairs: per_writer.into_iter().flatten().collect(),
        writers: writers.iter().map(|&w| dataset.writers[w].writer_id.clone()).collect(),
    })
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: PairSet,
    pub test: PairSet,
    pub train_writers: Vec<usize>,
    pub test_writers: Vec<usize>,
}

pub fn build_split(dataset: &Dataset, spec: &SplitSpec) -> Result<Split> {
    let train_writers = spec.select_writers(dataset)?;
    let test_writers: Vec<usize> = (0..spec.total_writers(dataset))
        .filter(|w| train_writers.binary_search(w).is_err())
        .collect();
    let train = side(dataset, &train_writers, !spec.train_genuine_only, spec)?;
    let test = side(dataset, &test_writers, spec.test_mode == TestMode::WithForgery, spec)?;
    debug_assert!(verify_writer_disjointness(&train, &test));
    Ok(Split { train, test, train_writers, test_writers })
}

/// True iff no writer id is referenced by both sets.
pub fn verify_writer_disjointness(train: &PairSet, test: &PairSet) -> bool {
    let a = train.referenced_writers();
    test.referenced_writers().is_disjoint(&a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{synth_dataset, SynthSpec};
    use proptest::prelude::*;

    fn corpus(writers: usize, genuine: usize, forgery: usize) -> Dataset {
        synth_dataset(&SynthSpec {
            writers,
            genuine_per_writer: genuine,
            forgery_per_writer: forgery,
            feature_length: 2,
            ..SynthSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn per_writer_counts() {
        let mcyt = corpus(1, 25, 25);
        assert_eq!(genuine_pairs(&mcyt.writers[0]).unwrap().len(), 300);
        assert_eq!(forgery_pairs(&mcyt.writers[0], ForgeryScheme::IndexSkip).unwrap().len(), 600);
        assert_eq!(forgery_pairs(&mcyt.writers[0], ForgeryScheme::FullCross).unwrap().len(), 625);
        let svc = corpus(1, 20, 20);
        assert_eq!(genuine_pairs(&svc.writers[0]).unwrap().len(), 190);
        assert_eq!(forgery_pairs(&svc.writers[0], ForgeryScheme::IndexSkip).unwrap().len(), 380);
        assert_eq!(genuine_pairs(&corpus(1, 2, 1).writers[0]).unwrap().len(), 1);
        assert_eq!(forgery_pairs(&corpus(1, 1, 1).writers[0], ForgeryScheme::FullCross).unwrap().len(), 1);
    }

    #[test]
    fn too_few_samples_rejected() {
        assert!(matches!(genuine_pairs(&corpus(1, 1, 1).writers[0]), Err(Error::Protocol(_))));
        assert!(matches!(forgery_pairs(&corpus(1, 2, 0).writers[0], ForgeryScheme::FullCross), Err(Error::Protocol(_))));
    }

    #[test]
    fn pair_counts_match_enumeration() {
        for n in 2..=30 {
            let ds = corpus(1, n, n);
            let w = &ds.writers[0];
            let mut unordered = 0;
            let mut skip = 0;
            for i in 0..n {
                for j in 0..n {
                    unordered += usize::from(i < j);
                    skip += usize::from(i != j);
                }
            }
            let g = genuine_pairs(w).unwrap();
            assert_eq!(g.len(), unordered);
            assert_eq!(forgery_pairs(w, ForgeryScheme::IndexSkip).unwrap().len(), skip);
            let distinct: BTreeSet<_> = g.iter().map(|p| (p.s1.sample_id.clone(), p.s2.sample_id.clone())).collect();
            assert_eq!(distinct.len(), unordered);
            assert!(g.iter().all(|p| p.s1.sample_id != p.s2.sample_id && p.same_writer));
        }
    }

    #[test]
    fn mcyt_shaped_split_counts() {
        let ds = corpus(100, 25, 25);
        let s = build_split(&ds, &SplitSpec::with_k(95)).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (57000, 3000));
        assert_eq!(s.train.genuine_count(), s.train.forgery_count());

        let spec = SplitSpec { test_mode: TestMode::GenuineOnly, ..SplitSpec::with_k(95) };
        let s = build_split(&ds, &spec).unwrap();
        assert_eq!((s.train.genuine_count(), s.test.len()), (28500, 1500));
        assert_eq!(s.test.forgery_count(), 0);
        assert_eq!(s.train.len(), 57000);

        let s = build_split(&ds, &SplitSpec::with_k(1)).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (600, 59400));

        let s = build_split(&ds, &SplitSpec::with_k(50)).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (30000, 30000));
    }

    #[test]
    fn train_genuine_only_flag() {
        let ds = corpus(4, 5, 5);
        let spec = SplitSpec { train_genuine_only: true, ..SplitSpec::with_k(2) };
        let s = build_split(&ds, &spec).unwrap();
        assert_eq!(s.train.forgery_count(), 0);
        assert_eq!(s.train.len(), 20);
    }

    #[test]
    fn unbalanced_keeps_everything() {
        let ds = corpus(3, 5, 5);
        let spec = SplitSpec { balance: false, ..SplitSpec::with_k(1) };
        let s = build_split(&ds, &spec).unwrap();
        assert_eq!(s.train.len(), 10 + 20);
    }

    #[test]
    fn invalid_k_rejected() {
        let ds = corpus(5, 3, 3);
        for k in [0, 5, 6] {
            assert!(matches!(build_split(&ds, &SplitSpec::with_k(k)), Err(Error::Protocol(_))));
        }
        let spec = SplitSpec { m: 9, ..SplitSpec::with_k(1) };
        assert!(build_split(&ds, &spec).is_err());
        let spec = SplitSpec { m: 3, ..SplitSpec::with_k(2) };
        assert_eq!(build_split(&ds, &spec).unwrap().test_writers, vec![2]);
    }

    #[test]
    fn selection_is_stable() {
        let ds = corpus(10, 3, 3);
        assert_eq!(SplitSpec::with_k(3).select_writers(&ds).unwrap(), vec![0, 1, 2]);
        let spec = SplitSpec { selection: Selection::SeededRandom { seed: 7 }, ..SplitSpec::with_k(4) };
        let a = spec.select_writers(&ds).unwrap();
        assert_eq!(a, spec.select_writers(&ds).unwrap());
        assert_eq!(a.len(), 4);
        let other = SplitSpec { selection: Selection::SeededRandom { seed: 8 }, ..spec.clone() };
        let b = other.select_writers(&ds).unwrap();
        assert_ne!(a, b, "different seeds happened to agree; pick another");
    }

    #[test]
    fn overlap_detected() {
        let ds = corpus(3, 3, 3);
        let s = build_split(&ds, &SplitSpec::with_k(2)).unwrap();
        assert!(verify_writer_disjointness(&s.train, &s.test));
        assert!(!verify_writer_disjointness(&s.train, &s.train));
    }

    #[test]
    fn csv_export() {
        let ds = corpus(2, 2, 2);
        let s = build_split(&ds, &SplitSpec::with_k(1)).unwrap();
        let mut buf = Vec::new();
        s.train.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "writer1,sample1,writer2,sample2,label");
        assert_eq!(lines[1], "w001,g01,w001,g02,1");
        assert_eq!(lines.len(), 1 + s.train.len());
        assert_eq!(s.train.provenance().filter(|p| p.kind == PairKind::GenuineForgery).count(), 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn random_splits_are_disjoint_and_balanced(
            writers in 2usize..8,
            genuine in 2usize..6,
            forgery in 1usize..6,
            k_frac in 0.0f64..1.0,
            seed in any::<u64>(),
            random_selection in any::<bool>(),
            genuine_only in any::<bool>(),
            full_cross in any::<bool>(),
        ) {
            let ds = synth_dataset(&SynthSpec {
                writers, genuine_per_writer: genuine, forgery_per_writer: forgery,
                feature_length: 1, seed, ..SynthSpec::default()
            }).unwrap();
            let k = 1 + ((writers - 1) as f64 * k_frac) as usize;
            let k = k.min(writers - 1);
            let spec = SplitSpec {
                k,
                selection: if random_selection { Selection::SeededRandom { seed } } else { Selection::FirstK },
                test_mode: if genuine_only { TestMode::GenuineOnly } else { TestMode::WithForgery },
                scheme: if full_cross { ForgeryScheme::FullCross } else { ForgeryScheme::IndexSkip },
                seed,
                ..SplitSpec::default()
            };
            let s = build_split(&ds, &spec).unwrap();
            prop_assert!(verify_writer_disjointness(&s.train, &s.test));
            prop_assert_eq!(s.train.genuine_count(), s.train.forgery_count());
            if !genuine_only {
                prop_assert_eq!(s.test.genuine_count(), s.test.forgery_count());
            }
            let train_ids: BTreeSet<&str> = s.train.writers.iter().map(String::as_str).collect();
            prop_assert!(s.train.referenced_writers().is_subset(&train_ids));
        }
    }
}
