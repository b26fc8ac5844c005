//! Pair scoring and verification metrics.
//!
//! Scores are oriented so that lower means more alike: the embedding
//! distance for the contrastive model, `1 - p(same writer)` for the
//! classifier head. A pair is accepted as genuine when its score is strictly
//! below the threshold.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::FeatureVector;
use crate::siamese::{
    bce_head_probability, embed_all, pair_distance, LossConfig, LossMode, ModelParams, SignaturePair, HEAD_BIAS,
    HEAD_KERNEL,
};

/// Half the unit contrastive margin.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub score: f64,
    pub same_writer: bool,
}

impl ScoredPair {
    pub fn new(score: f64, same_writer: bool) -> Self {
        Self { score, same_writer }
    }
}

/// Evaluation-mode scores, one per pair in input order. Each distinct
/// signature is embedded once however many pairs it appears in.
pub fn score_pairs(params: &ModelParams, pairs: &[SignaturePair], cfg: &LossConfig) -> Result<Vec<ScoredPair>> {
    if cfg.mode != params.arch.head {
        return Err(Error::config(format!(
            "loss mode {:?} does not match the model head {:?}",
            cfg.mode, params.arch.head
        )));
    }
    let mut slot: HashMap<*const FeatureVector, usize> = HashMap::new();
    let mut unique: Vec<&[f64]> = Vec::new();
    let mut members: Vec<(usize, usize)> = Vec::with_capacity(pairs.len());
    for p in pairs {
        let mut index = |v: &'_ Arc<FeatureVector>| -> usize {
            let next = slot.len();
            *slot.entry(Arc::as_ptr(v)).or_insert(next)
        };
        let (a, b) = (index(&p.s1), index(&p.s2));
        for (i, v) in [(a, &p.s1), (b, &p.s2)] {
            if i == unique.len() {
                unique.push(v.values.as_slice());
            }
        }
        members.push((a, b));
    }
    let embeddings = embed_all(params, &unique)?;
    let mut out = Vec::with_capacity(pairs.len());
    for (p, (a, b)) in pairs.iter().zip(members) {
        let (e1, e2) = (&embeddings[a].values, &embeddings[b].values);
        let score = match cfg.mode {
            LossMode::Contrastive => pair_distance(e1, e2),
            LossMode::Bce => {
                1.0 - bce_head_probability(e1, e2, params.get(HEAD_KERNEL), params.get(HEAD_BIAS)[0])
            }
        };
        if !score.is_finite() {
            return Err(Error::Evaluation(format!(
                "non-finite score for {}/{} vs {}/{}",
                p.s1.writer_id, p.s1.sample_id, p.s2.writer_id, p.s2.sample_id
            )));
        }
        out.push(ScoredPair::new(score, p.same_writer));
    }
    Ok(out)
}

pub fn accuracy_at(scored: &[ScoredPair], threshold: f64) -> Result<f64> {
    if scored.is_empty() {
        return Err(Error::Evaluation("no scored pairs".into()));
    }
    if !threshold.is_finite() {
        return Err(Error::Evaluation(format!("threshold {threshold} is not finite")));
    }
    let correct = scored.iter().filter(|s| (s.score < threshold) == s.same_writer).count();
    Ok(correct as f64 / scored.len() as f64)
}

/// Unique scores in ascending order with the number of genuine and forged
/// pairs at each.
fn score_levels(scored: &[ScoredPair]) -> Vec<(f64, usize, usize)> {
    let mut sorted: Vec<&ScoredPair> = scored.iter().collect();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score));
    let mut levels: Vec<(f64, usize, usize)> = Vec::new();
    for s in sorted {
        match levels.last_mut() {
            Some(last) if last.0 == s.score => {}
            _ => levels.push((s.score, 0, 0)),
        }
        let last = levels.last_mut().expect("pushed above");
        if s.same_writer {
            last.1 += 1;
        } else {
            last.2 += 1;
        }
    }
    levels
}

/// Thresholds separating consecutive score levels: the lowest score (accepts
/// nothing), each midpoint, and one value above the highest (accepts all).
fn candidate_thresholds(levels: &[(f64, usize, usize)]) -> Vec<f64> {
    let mut out = Vec::with_capacity(levels.len() + 1);
    out.push(levels[0].0);
    for w in levels.windows(2) {
        let (a, b) = (w[0].0, w[1].0);
        let mid = a + (b - a) / 2.0;
        // adjacent floats can round the midpoint onto `a`
        out.push(if mid > a { mid } else { b });
    }
    let top = levels[levels.len() - 1].0;
    out.push(top + top.abs().max(1.0));
    out
}

fn require_both_labels(scored: &[ScoredPair]) -> Result<(usize, usize)> {
    let pos = scored.iter().filter(|s| s.same_writer).count();
    let neg = scored.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Evaluation(format!(
            "need both genuine and forged pairs, have {pos} and {neg}"
        )));
    }
    Ok((pos, neg))
}

/// The threshold with the best accuracy on `scored`; the smallest such
/// candidate wins ties.
pub fn calibrate_threshold(scored: &[ScoredPair]) -> Result<f64> {
    let (_, neg) = require_both_labels(scored)?;
    let levels = score_levels(scored);
    let thresholds = candidate_thresholds(&levels);
    // correct = genuine below the threshold + forged at or above it
    let (mut below_pos, mut below_neg) = (0usize, 0usize);
    let mut best = (0usize, thresholds[0]);
    for (i, &t) in thresholds.iter().enumerate() {
        if i > 0 {
            below_pos += levels[i - 1].1;
            below_neg += levels[i - 1].2;
        }
        let correct = below_pos + (neg - below_neg);
        if correct > best.0 {
            best = (correct, t);
        }
    }
    Ok(best.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// ROC from (0,0) to (1,1) with the trapezoidal area under it. Tied scores
/// move both rates in one step, so each tie counts one half.
pub fn roc_auc(scored: &[ScoredPair]) -> Result<(Vec<RocPoint>, f64)> {
    let (pos, neg) = require_both_labels(scored)?;
    let levels = score_levels(scored);
    let thresholds = candidate_thresholds(&levels);
    let mut roc = Vec::with_capacity(thresholds.len());
    let (mut tp, mut fp) = (0usize, 0usize);
    for (i, &t) in thresholds.iter().enumerate() {
        if i > 0 {
            tp += levels[i - 1].1;
            fp += levels[i - 1].2;
        }
        roc.push(RocPoint { fpr: fp as f64 / neg as f64, tpr: tp as f64 / pos as f64, threshold: t });
    }
    // integrate in counts and divide once to keep the sum exact
    let mut twice_area = 0u128;
    let (mut tp, mut prev_tp) = (0u128, 0u128);
    for &(_, p, n) in &levels {
        tp += p as u128;
        twice_area += n as u128 * (tp + prev_tp);
        prev_tp = tp;
    }
    let auc = twice_area as f64 / (2.0 * pos as f64 * neg as f64);
    Ok((roc, auc))
}

/// The error rate where false accepts equal false rejects, interpolated
/// linearly between the bracketing ROC points.
pub fn eer(roc: &[RocPoint]) -> Result<f64> {
    // h = fpr - (1 - tpr) rises from -1 to 1 along the curve
    let h = |p: &RocPoint| p.fpr + p.tpr - 1.0;
    for w in roc.windows(2) {
        let (a, b) = (h(&w[0]), h(&w[1]));
        if a == 0.0 {
            return Ok(w[0].fpr);
        }
        if a < 0.0 && b >= 0.0 {
            let lambda = -a / (b - a);
            return Ok(w[0].fpr + lambda * (w[1].fpr - w[0].fpr));
        }
    }
    match roc.last() {
        Some(p) if h(p) == 0.0 => Ok(p.fpr),
        _ => Err(Error::Evaluation("ROC does not cross the equal-error line".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSource {
    Fixed,
    Calibrated,
}

impl std::fmt::Display for ThresholdSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Fixed => "fixed",
            Self::Calibrated => "calibrated",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_pairs: usize,
    pub n_genuine_pairs: usize,
    pub n_forgery_pairs: usize,
    pub threshold: f64,
    pub threshold_source: ThresholdSource,
    pub accuracy: f64,
    /// Absent when only one label is present.
    pub auc: Option<f64>,
    pub eer: Option<f64>,
    pub mean_genuine_score: Option<f64>,
    pub mean_forgery_score: Option<f64>,
    pub roc: Vec<RocPoint>,
}

pub const REPORT_CSV_HEADER: [&str; 8] = [
    "n_pairs",
    "n_genuine_pairs",
    "n_forgery_pairs",
    "threshold",
    "threshold_source",
    "accuracy",
    "auc",
    "eer",
];

impl EvalReport {
    pub fn from_scores(scored: &[ScoredPair], threshold: f64, threshold_source: ThresholdSource) -> Result<Self> {
        let accuracy = accuracy_at(scored, threshold)?;
        let n_genuine_pairs = scored.iter().filter(|s| s.same_writer).count();
        let n_forgery_pairs = scored.len() - n_genuine_pairs;
        let (roc, auc, eer) = if n_genuine_pairs > 0 && n_forgery_pairs > 0 {
            let (roc, auc) = roc_auc(scored)?;
            let e = eer(&roc)?;
            (roc, Some(auc), Some(e))
        } else {
            (Vec::new(), None, None)
        };
        let mean_of = |genuine: bool, n: usize| {
            (n > 0).then(|| {
                scored.iter().filter(|s| s.same_writer == genuine).map(|s| s.score).sum::<f64>() / n as f64
            })
        };
        Ok(Self {
            n_pairs: scored.len(),
            n_genuine_pairs,
            n_forgery_pairs,
            threshold,
            threshold_source,
            accuracy,
            auc,
            eer,
            mean_genuine_score: mean_of(true, n_genuine_pairs),
            mean_forgery_score: mean_of(false, n_forgery_pairs),
            roc,
        })
    }

    /// Values in `REPORT_CSV_HEADER` order; absent metrics are empty.
    pub fn csv_fields(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            self.n_pairs.to_string(),
            self.n_genuine_pairs.to_string(),
            self.n_forgery_pairs.to_string(),
            self.threshold.to_string(),
            self.threshold_source.to_string(),
            self.accuracy.to_string(),
            opt(self.auc),
            opt(self.eer),
        ]
    }

    pub fn write_json<W: Write>(&self, mut writer: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut writer, self)?;
        writeln!(writer).map_err(|e| Error::io("report json", e))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        w.write_record(REPORT_CSV_HEADER)?;
        w.write_record(self.csv_fields())?;
        w.flush().map_err(|e| Error::io("report csv", e))
    }
}

/// Columns `fpr,tpr,threshold`.
pub fn write_roc_csv<W: Write>(writer: W, roc: &[RocPoint]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(["fpr", "tpr", "threshold"])?;
    for p in roc {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| Error::io("roc csv", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairs(v: &[(f64, u8)]) -> Vec<ScoredPair> {
        v.iter().map(|&(s, y)| ScoredPair::new(s, y == 1)).collect()
    }

    /// Probability that a genuine pair scores lower than a forged one, ties
    /// counted one half, by direct enumeration.
    fn mann_whitney(scored: &[ScoredPair]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for p in scored.iter().filter(|s| s.same_writer) {
            for n in scored.iter().filter(|s| !s.same_writer) {
                den += 1.0;
                num += if p.score < n.score {
                    1.0
                } else if p.score == n.score {
                    0.5
                } else {
                    0.0
                };
            }
        }
        num / den
    }

    /// Best accuracy over every candidate threshold, by direct counting.
    fn scan_oracle(scored: &[ScoredPair]) -> (f64, f64) {
        let mut scores: Vec<f64> = scored.iter().map(|s| s.score).collect();
        scores.sort_by(f64::total_cmp);
        scores.dedup();
        let mut candidates = vec![scores[0]];
        candidates.extend(scores.windows(2).map(|w| (w[0] + w[1]) / 2.0));
        let top = scores[scores.len() - 1];
        candidates.push(top + top.abs().max(1.0));
        let mut best = (-1.0, f64::NAN);
        for t in candidates {
            let acc = accuracy_at(scored, t).unwrap();
            if acc > best.0 {
                best = (acc, t);
            }
        }
        best
    }

    #[test]
    fn accuracy_hand_counts() {
        let s = pairs(&[(0.1, 1), (0.2, 1), (0.8, 0), (0.9, 0)]);
        assert_eq!(accuracy_at(&s, 0.5).unwrap(), 1.0);
        assert_eq!(accuracy_at(&s, 0.15).unwrap(), 0.75);
        let all_same = pairs(&[(0.0, 1), (0.0, 1)]);
        assert_eq!(accuracy_at(&all_same, 0.5).unwrap(), 1.0);
        assert_eq!(accuracy_at(&all_same, -1.0).unwrap(), 0.0);
        assert!(accuracy_at(&[], 0.5).is_err());
        assert!(accuracy_at(&s, f64::NAN).is_err());
    }

    #[test]
    fn separated_scores() {
        let s = pairs(&[(0.1, 1), (0.2, 1), (0.8, 0), (0.9, 0)]);
        let t = calibrate_threshold(&s).unwrap();
        assert!(t > 0.2 && t < 0.8);
        assert_eq!(accuracy_at(&s, t).unwrap(), 1.0);
        let (roc, auc) = roc_auc(&s).unwrap();
        assert_eq!(auc, 1.0);
        assert_eq!(eer(&roc).unwrap(), 0.0);
    }

    #[test]
    fn label_independent_scores() {
        let s = pairs(&[(0.3, 1), (0.3, 0), (0.3, 0), (0.3, 1), (0.3, 0)]);
        let (roc, auc) = roc_auc(&s).unwrap();
        assert_eq!(auc, 0.5);
        assert_eq!(eer(&roc).unwrap(), 0.5);
        let t = calibrate_threshold(&s).unwrap();
        assert_eq!(accuracy_at(&s, t).unwrap(), 0.6);
    }

    #[test]
    fn roc_endpoints() {
        let s = pairs(&[(0.4, 1), (0.1, 0), (0.7, 1), (0.2, 0)]);
        let (roc, _) = roc_auc(&s).unwrap();
        assert_eq!((roc[0].fpr, roc[0].tpr), (0.0, 0.0));
        let last = roc.last().unwrap();
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
    }

    #[test]
    fn eer_interpolates_between_points() {
        let roc = [
            RocPoint { fpr: 0.0, tpr: 0.0, threshold: 0.0 },
            RocPoint { fpr: 0.2, tpr: 0.6, threshold: 1.0 },
            RocPoint { fpr: 0.6, tpr: 1.0, threshold: 2.0 },
        ];
        // h runs -0.2 -> 0.6 over the second segment: lambda = 0.25
        assert!((eer(&roc).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn single_label_rejected() {
        let s = pairs(&[(0.1, 1), (0.2, 1)]);
        assert!(roc_auc(&s).is_err());
        assert!(calibrate_threshold(&s).is_err());
        let report = EvalReport::from_scores(&s, DEFAULT_THRESHOLD, ThresholdSource::Fixed).unwrap();
        assert_eq!(report.auc, None);
        assert_eq!(report.n_forgery_pairs, 0);
    }

    #[test]
    fn exports() {
        let s = pairs(&[(0.1, 1), (0.2, 1), (0.8, 0), (0.9, 0)]);
        let report = EvalReport::from_scores(&s, DEFAULT_THRESHOLD, ThresholdSource::Fixed).unwrap();
        let mut csv = Vec::new();
        report.write_csv(&mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert_eq!(csv.lines().nth(1).unwrap(), "4,2,2,0.5,fixed,1,1,0");
        let mut json = Vec::new();
        report.write_json(&mut json).unwrap();
        let back: EvalReport = serde_json::from_slice(&json).unwrap();
        assert_eq!(back, report);
        let mut roc = Vec::new();
        write_roc_csv(&mut roc, &report.roc).unwrap();
        let roc = String::from_utf8(roc).unwrap();
        assert_eq!(roc.lines().next().unwrap(), "fpr,tpr,threshold");
        assert_eq!(roc.lines().count(), 1 + report.roc.len());
    }

    fn instance() -> impl Strategy<Value = Vec<ScoredPair>> {
        (1usize..200, any::<bool>()).prop_flat_map(|(n, coarse)| {
            let score = if coarse { (0u8..6).prop_map(f64::from).boxed() } else { (0.0f64..2.0).boxed() };
            prop::collection::vec((score, any::<bool>()), n + 1).prop_map(|v| {
                let mut v: Vec<ScoredPair> = v.into_iter().map(|(s, y)| ScoredPair::new(s, y)).collect();
                // force both labels
                v[0].same_writer = true;
                let last = v.len() - 1;
                v[last].same_writer = false;
                v
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn auc_is_mann_whitney(s in instance()) {
            let (roc, auc) = roc_auc(&s).unwrap();
            prop_assert!((auc - mann_whitney(&s)).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&auc));
            let trapezoid: f64 = roc.windows(2).map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0).sum();
            prop_assert!((trapezoid - auc).abs() <= 1e-12);
            for w in roc.windows(2) {
                prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
            }
        }

        #[test]
        fn calibration_matches_scan(s in instance()) {
            let t = calibrate_threshold(&s).unwrap();
            let (best, oracle_t) = scan_oracle(&s);
            prop_assert_eq!(accuracy_at(&s, t).unwrap(), best);
            prop_assert!(t <= oracle_t + 1e-12);
        }

        #[test]
        fn monotone_transform_invariance(s in instance()) {
            let moved: Vec<ScoredPair> = s.iter().map(|p| ScoredPair::new(3.0 * p.score.exp() + 1.0, p.same_writer)).collect();
            let (ra, a) = roc_auc(&s).unwrap();
            let (rb, b) = roc_auc(&moved).unwrap();
            prop_assert_eq!(a, b);
            prop_assert_eq!(eer(&ra).unwrap(), eer(&rb).unwrap());
            let rates = |r: &[RocPoint]| r.iter().map(|p| (p.fpr, p.tpr)).collect::<Vec<_>>();
            prop_assert_eq!(rates(&ra), rates(&rb));
        }

        #[test]
        fn eer_lies_between_rates(s in instance()) {
            let (roc, _) = roc_auc(&s).unwrap();
            let e = eer(&roc).unwrap();
            prop_assert!((0.0..=1.0).contains(&e));
        }
    }
}
