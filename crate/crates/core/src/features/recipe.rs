//! Global feature recipes.
//!
//! A recipe lists per-sample channels, the statistics taken over each
//! channel, and whole-signature extras. The vector is laid out channel-major
//! (every statistic of the first channel, then the second, ...) followed by
//! the extras, all in declaration order.
//!
//! Statistics run over every sample after duplicate timestamps are dropped.
//! `std` is the population standard deviation and `median` averages the two
//! middle values for even counts. The azimuth channel is an angle in degrees:
//! its `mean` and `std` are circular (`atan2` of the mean sine/cosine, and
//! `sqrt(-2 ln R)` in degrees); the other azimuth statistics use raw values.
//!
//! Extras:
//! - `duration`: last minus first timestamp, seconds
//! - `pen_down_ratio`: fraction of samples with the pen down
//! - `stroke_count`: number of maximal pen-down runs
//! - `path_length`: length of the polyline between consecutive pen-down samples
//! - `width`, `height`: extent of x and y
//! - `aspect_ratio`: width / height, height floored at one device unit
//! - `sample_count`: number of samples
//! - `pen_up_duration`: seconds spent in intervals that start pen-up
//! - `straightness`: first-to-last distance over path length (0 for a zero path)
//! - `max_speed_time`, `max_pressure_time`: time of the maximum as a fraction of the duration
//!
//! Two recipes ship by name:
//! - `svc47`: `speed, accel_mag, pressure, azimuth, altitude` × all 8 statistics,
//!   then `duration, pen_down_ratio, stroke_count, path_length, aspect_ratio,
//!   straightness, max_speed_time` (5 × 8 + 7 = 47)
//! - `generic100`: all 11 channels × all 8 statistics, then `duration,
//!   pen_down_ratio, stroke_count, path_length, aspect_ratio, width, height,
//!   sample_count, pen_up_duration, straightness, max_speed_time,
//!   max_pressure_time` (11 × 8 + 12 = 100)
//!
//! These are engineering stand-ins for corpus feature sets that are not
//! publicly enumerated; results obtained with them are substitute-feature
//! results.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::kinematics::{derive_kinematics, Kinematics};
use crate::error::{Error, Result};
use crate::ingest::{FeatureVector, SignatureTrajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    X,
    Y,
    Pressure,
    Azimuth,
    Altitude,
    Vx,
    Vy,
    Speed,
    Ax,
    Ay,
    AccelMag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Min,
    Max,
    Mean,
    Std,
    Median,
    Range,
    First,
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extra {
    Duration,
    PenDownRatio,
    StrokeCount,
    PathLength,
    AspectRatio,
    Width,
    Height,
    SampleCount,
    PenUpDuration,
    Straightness,
    MaxSpeedTime,
    MaxPressureTime,
}

const ALL_STATS: [Statistic; 8] = [
    Statistic::Min,
    Statistic::Max,
    Statistic::Mean,
    Statistic::Std,
    Statistic::Median,
    Statistic::Range,
    Statistic::First,
    Statistic::Last,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecipe {
    pub name: String,
    pub channels: Vec<Channel>,
    pub statistics: Vec<Statistic>,
    pub extras: Vec<Extra>,
    pub target_length: usize,
}

impl FeatureRecipe {
    /// Validates the length arithmetic and rejects duplicates.
    pub fn new(
        name: impl Into<String>,
        channels: Vec<Channel>,
        statistics: Vec<Statistic>,
        extras: Vec<Extra>,
        target_length: usize,
    ) -> Result<Self> {
        let recipe = Self {
            name: name.into(),
            channels,
            statistics,
            extras,
            target_length,
        };
        recipe.validate()?;
        Ok(recipe)
    }

    pub fn validate(&self) -> Result<()> {
        let produced = self.channels.len() * self.statistics.len() + self.extras.len();
        if produced != self.target_length || produced == 0 {
            return Err(Error::Feature(format!(
                "recipe {:?} yields {} × {} + {} = {produced} features but declares {}",
                self.name,
                self.channels.len(),
                self.statistics.len(),
                self.extras.len(),
                self.target_length
            )));
        }
        let unique = |n: usize, m: usize| n == m;
        if !unique(self.channels.iter().collect::<HashSet<_>>().len(), self.channels.len())
            || !unique(self.statistics.iter().collect::<HashSet<_>>().len(), self.statistics.len())
            || !unique(self.extras.iter().collect::<HashSet<_>>().len(), self.extras.len())
        {
            return Err(Error::Feature(format!("recipe {:?} lists an entry twice", self.name)));
        }
        Ok(())
    }

    pub fn svc47() -> Self {
        use Channel::*;
        use Extra::*;
        Self::new(
            "svc47",
            vec![Speed, AccelMag, Pressure, Azimuth, Altitude],
            ALL_STATS.to_vec(),
            vec![Duration, PenDownRatio, StrokeCount, PathLength, AspectRatio, Straightness, MaxSpeedTime],
            47,
        )
        .expect("svc47 arithmetic")
    }

    pub fn generic100() -> Self {
        use Channel::*;
        use Extra::*;
        Self::new(
            "generic100",
            vec![X, Y, Pressure, Azimuth, Altitude, Vx, Vy, Speed, Ax, Ay, AccelMag],
            ALL_STATS.to_vec(),
            vec![
                Duration,
                PenDownRatio,
                StrokeCount,
                PathLength,
                AspectRatio,
                Width,
                Height,
                SampleCount,
                PenUpDuration,
                Straightness,
                MaxSpeedTime,
                MaxPressureTime,
            ],
            100,
        )
        .expect("generic100 arithmetic")
    }

    pub fn named(name: &str) -> Result<Self> {
        match name {
            "svc47" => Ok(Self::svc47()),
            "generic100" => Ok(Self::generic100()),
            other => Err(Error::Feature(format!(
                "unknown recipe {other:?} (built in: svc47, generic100)"
            ))),
        }
    }

    /// Parses a JSON recipe description and validates it.
    pub fn from_json(text: &str) -> Result<Self> {
        let recipe: Self = serde_json::from_str(text)?;
        recipe.validate()?;
        Ok(recipe)
    }

    /// Column names in output order, e.g. `speed_max` or `duration`.
    pub fn feature_names(&self) -> Vec<String> {
        let json_name = |v: serde_json::Value| v.as_str().unwrap_or_default().to_string();
        let mut names = Vec::with_capacity(self.target_length);
        for c in &self.channels {
            for s in &self.statistics {
                names.push(format!(
                    "{}_{}",
                    json_name(serde_json::to_value(c).unwrap_or_default()),
                    json_name(serde_json::to_value(s).unwrap_or_default())
                ));
            }
        }
        for e in &self.extras {
            names.push(json_name(serde_json::to_value(e).unwrap_or_default()));
        }
        names
    }
}

fn channel(k: &Kinematics, c: Channel) -> &[f64] {
    match c {
        Channel::X => &k.x,
        Channel::Y => &k.y,
        Channel::Pressure => &k.pressure,
        Channel::Azimuth => &k.azimuth,
        Channel::Altitude => &k.altitude,
        Channel::Vx => &k.vx,
        Channel::Vy => &k.vy,
        Channel::Speed => &k.speed,
        Channel::Ax => &k.ax,
        Channel::Ay => &k.ay,
        Channel::AccelMag => &k.accel_mag,
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn std(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn circular_mean_std_degrees(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let (s, c) = v.iter().fold((0.0, 0.0), |(s, c), a| {
        let r = a.to_radians();
        (s + r.sin(), c + r.cos())
    });
    let (s, c) = (s / n, c / n);
    let mean = s.atan2(c).to_degrees().rem_euclid(360.0);
    let r = s.hypot(c).min(1.0);
    let std = if r <= 0.0 {
        f64::MAX.sqrt()
    } else {
        (-2.0 * r.ln()).max(0.0).sqrt().to_degrees()
    };
    (mean, std)
}

fn statistic(values: &[f64], stat: Statistic, circular: bool) -> f64 {
    let min = || values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = || values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    match stat {
        Statistic::Min => min(),
        Statistic::Max => max(),
        Statistic::Mean if circular => circular_mean_std_degrees(values).0,
        Statistic::Mean => mean(values),
        Statistic::Std if circular => circular_mean_std_degrees(values).1,
        Statistic::Std => std(values),
        Statistic::Median => median(values),
        Statistic::Range => max() - min(),
        Statistic::First => values[0],
        Statistic::Last => values[values.len() - 1],
    }
}

fn argmax_time_fraction(values: &[f64], k: &Kinematics) -> f64 {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    let duration = k.t[k.t.len() - 1] - k.t[0];
    (k.t[best] - k.t[0]) / duration
}

fn extra(k: &Kinematics, e: Extra) -> f64 {
    let n = k.t.len();
    let path_length = || -> f64 {
        (1..n)
            .filter(|&i| k.pen_down[i] && k.pen_down[i - 1])
            .map(|i| (k.x[i] - k.x[i - 1]).hypot(k.y[i] - k.y[i - 1]))
            .sum()
    };
    let extent = |v: &[f64]| statistic(v, Statistic::Range, false);
    match e {
        Extra::Duration => k.t[n - 1] - k.t[0],
        Extra::PenDownRatio => k.pen_down.iter().filter(|&&d| d).count() as f64 / n as f64,
        Extra::StrokeCount => (0..n)
            .filter(|&i| k.pen_down[i] && (i == 0 || !k.pen_down[i - 1]))
            .count() as f64,
        Extra::PathLength => path_length(),
        Extra::AspectRatio => extent(&k.x) / extent(&k.y).max(1.0),
        Extra::Width => extent(&k.x),
        Extra::Height => extent(&k.y),
        Extra::SampleCount => n as f64,
        Extra::PenUpDuration => (1..n)
            .filter(|&i| !k.pen_down[i - 1])
            .map(|i| k.t[i] - k.t[i - 1])
            .sum(),
        Extra::Straightness => {
            let p = path_length();
            if p > 0.0 {
                (k.x[n - 1] - k.x[0]).hypot(k.y[n - 1] - k.y[0]) / p
            } else {
                0.0
            }
        }
        Extra::MaxSpeedTime => argmax_time_fraction(&k.speed, k),
        Extra::MaxPressureTime => argmax_time_fraction(&k.pressure, k),
    }
}

/// Global feature vector of one trajectory.
pub fn extract_globals(traj: &SignatureTrajectory, recipe: &FeatureRecipe) -> Result<FeatureVector> {
    recipe.validate()?;
    let k = derive_kinematics(traj)?;
    let mut values = Vec::with_capacity(recipe.target_length);
    for &c in &recipe.channels {
        let data = channel(&k, c);
        for &s in &recipe.statistics {
            values.push(statistic(data, s, c == Channel::Azimuth));
        }
    }
    for &e in &recipe.extras {
        values.push(extra(&k, e));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Feature(format!(
            "{}/{}: feature {} is not finite",
            traj.writer_id,
            traj.sample_id,
            recipe.feature_names()[i]
        )));
    }
    Ok(FeatureVector {
        writer_id: traj.writer_id.clone(),
        sample_id: traj.sample_id.clone(),
        label: traj.label,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Label, PenSample, PenState};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_traj(seed: u64, n: usize) -> SignatureTrajectory {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = 0;
        let (mut x, mut y) = (1000i64, 1000i64);
        let samples = (0..n)
            .map(|i| {
                t += rng.random_range(5..15);
                x += rng.random_range(-20..20);
                y += rng.random_range(-20..20);
                PenSample {
                    x,
                    y,
                    t,
                    pen: if i % 17 == 16 { PenState::Up } else { PenState::Down },
                    azimuth: rng.random_range(0..360),
                    altitude: rng.random_range(30..90),
                    pressure: rng.random_range(0..1024),
                }
            })
            .collect();
        SignatureTrajectory { writer_id: "U01".into(), sample_id: "S01".into(), label: Label::Genuine, samples }
    }

    #[test]
    fn recipes_have_declared_lengths() {
        assert_eq!(FeatureRecipe::svc47().feature_names().len(), 47);
        assert_eq!(FeatureRecipe::generic100().feature_names().len(), 100);
        assert_eq!(FeatureRecipe::svc47().feature_names()[1], "speed_max");
        assert!(FeatureRecipe::named("mcyt").is_err());
    }

    #[test]
    fn malformed_recipes_rejected() {
        assert!(FeatureRecipe::new("bad", vec![Channel::X], vec![Statistic::Min], vec![], 2).is_err());
        assert!(FeatureRecipe::new("dup", vec![Channel::X, Channel::X], vec![Statistic::Min], vec![], 2).is_err());
        let json = r#"{"name":"tiny","channels":["speed"],"statistics":["max","mean"],"extras":["duration"],"target_length":3}"#;
        assert_eq!(FeatureRecipe::from_json(json).unwrap().target_length, 3);
        let json = r#"{"name":"tiny","channels":["speed"],"statistics":["max"],"extras":[],"target_length":3}"#;
        assert!(FeatureRecipe::from_json(json).is_err());
    }

    #[test]
    fn svc_recipe_length() {
        let v = extract_globals(&random_traj(1, 120), &FeatureRecipe::svc47()).unwrap();
        assert_eq!(v.values.len(), 47);
        assert_eq!(v.writer_id, "U01");
    }

    #[test]
    fn constant_pressure_statistics() {
        let mut t = random_traj(2, 50);
        t.samples.iter_mut().for_each(|s| s.pressure = 333);
        let r = FeatureRecipe::new("p", vec![Channel::Pressure], vec![Statistic::Mean, Statistic::Std], vec![], 2).unwrap();
        let v = extract_globals(&t, &r).unwrap();
        assert_eq!(v.values, vec![333.0, 0.0]);
    }

    #[test]
    fn deterministic() {
        let t = random_traj(3, 80);
        let r = FeatureRecipe::generic100();
        assert_eq!(extract_globals(&t, &r).unwrap(), extract_globals(&t, &r).unwrap());
    }

    #[test]
    fn translation_only_moves_position_location_statistics() {
        let r = FeatureRecipe::generic100();
        let names = r.feature_names();
        let t = random_traj(4, 150);
        let mut moved = t.clone();
        moved.samples.iter_mut().for_each(|s| {
            s.x += 500;
            s.y += 300;
        });
        let a = extract_globals(&t, &r).unwrap().values;
        let b = extract_globals(&moved, &r).unwrap().values;
        for ((name, va), vb) in names.iter().zip(&a).zip(&b) {
            let offset = match name.split_once('_') {
                Some(("x", stat)) | Some(("y", stat)) if matches!(stat, "min" | "max" | "mean" | "median" | "first" | "last") => {
                    if name.starts_with('x') { 500.0 } else { 300.0 }
                }
                _ => 0.0,
            };
            assert!((vb - va - offset).abs() <= 1e-9 * va.abs().max(1.0), "{name}: {va} -> {vb}");
        }
    }

    #[test]
    fn time_reversal_flips_mean_vx_keeps_speed() {
        // symmetric there-and-back path so reversal maps the sampling onto itself
        let pts: Vec<i64> = (0..=20).map(|i| 10 * i * i).collect();
        let mk = |xs: &[i64]| SignatureTrajectory {
            writer_id: "w".into(),
            sample_id: "s".into(),
            label: Label::Genuine,
            samples: xs
                .iter()
                .enumerate()
                .map(|(i, &x)| PenSample { x, y: 0, t: 10 * i as i64, pen: PenState::Down, azimuth: 0, altitude: 0, pressure: 1 })
                .collect(),
        };
        let forward = mk(&pts);
        let reversed: Vec<i64> = pts.iter().rev().copied().collect();
        let backward = mk(&reversed);
        let r = FeatureRecipe::generic100();
        let names = r.feature_names();
        let a = extract_globals(&forward, &r).unwrap().values;
        let b = extract_globals(&backward, &r).unwrap().values;
        let at = |name: &str| names.iter().position(|n| n == name).unwrap();
        assert!((a[at("vx_mean")] + b[at("vx_mean")]).abs() < 1e-9);
        assert!(a[at("vx_mean")] > 0.0);
        for stat in ["min", "max", "mean", "std", "median", "range"] {
            let i = at(&format!("speed_{stat}"));
            assert!((a[i] - b[i]).abs() < 1e-9 * a[i].abs().max(1.0), "speed_{stat}");
        }
    }

    #[test]
    fn circular_azimuth_wraps() {
        let (m, s) = circular_mean_std_degrees(&[350.0, 10.0]);
        assert!(m.min(360.0 - m) < 1e-9);
        assert!(s > 0.0 && s < 15.0);
        let (m, s) = circular_mean_std_degrees(&[90.0, 90.0]);
        assert!((m - 90.0).abs() < 1e-9 && s.abs() < 1e-6);
    }

    #[test]
    fn degenerate_trajectory_propagates() {
        let t = random_traj(5, 2);
        assert!(matches!(extract_globals(&t, &FeatureRecipe::svc47()), Err(Error::Feature(_))));
    }
}
