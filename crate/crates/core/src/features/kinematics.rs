//! Per-sample velocity and acceleration of a pen trajectory.
//!
//! Derivatives use second-order finite differences on the (possibly uneven)
//! time grid: central in the interior, one-sided three-point at both ends.
//! Time is converted from milliseconds to seconds, so velocities are in
//! device units per second.

use crate::error::{Error, Result};
use crate::ingest::{PenState, SignatureTrajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct Kinematics {
    /// Seconds, strictly increasing.
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub pressure: Vec<f64>,
    pub azimuth: Vec<f64>,
    pub altitude: Vec<f64>,
    pub pen_down: Vec<bool>,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
    pub speed: Vec<f64>,
    pub ax: Vec<f64>,
    pub ay: Vec<f64>,
    pub accel_mag: Vec<f64>,
}

/// Derivative of `f` sampled at strictly increasing `t` (at least 3 points).
pub fn gradient(f: &[f64], t: &[f64]) -> Vec<f64> {
    let n = f.len();
    debug_assert!(n >= 3 && t.len() == n);
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        let hs = t[i] - t[i - 1];
        let hd = t[i + 1] - t[i];
        // difference form so constant signals give exactly zero
        out[i] = (hs * hs * (f[i + 1] - f[i]) - hd * hd * (f[i - 1] - f[i])) / (hs * hd * (hd + hs));
    }
    let (h1, h2) = (t[1] - t[0], t[2] - t[1]);
    out[0] = (h1 + h2) / (h1 * h2) * (f[1] - f[0]) - h1 / (h2 * (h1 + h2)) * (f[2] - f[0]);
    let (h1, h2) = (t[n - 2] - t[n - 3], t[n - 1] - t[n - 2]);
    out[n - 1] = h2 / (h1 * (h1 + h2)) * (f[n - 3] - f[n - 1]) - (h1 + h2) / (h1 * h2) * (f[n - 2] - f[n - 1]);
    out
}

pub fn derive_kinematics(traj: &SignatureTrajectory) -> Result<Kinematics> {
    let mut k = Kinematics {
        t: Vec::new(),
        x: Vec::new(),
        y: Vec::new(),
        pressure: Vec::new(),
        azimuth: Vec::new(),
        altitude: Vec::new(),
        pen_down: Vec::new(),
        vx: Vec::new(),
        vy: Vec::new(),
        speed: Vec::new(),
        ax: Vec::new(),
        ay: Vec::new(),
        accel_mag: Vec::new(),
    };
    let mut last_t: Option<i64> = None;
    for s in &traj.samples {
        // repeated timestamps: keep the first sample
        if last_t == Some(s.t) {
            continue;
        }
        if matches!(last_t, Some(prev) if s.t < prev) {
            return Err(Error::Feature(format!(
                "{}/{}: timestamps decrease",
                traj.writer_id, traj.sample_id
            )));
        }
        last_t = Some(s.t);
        k.t.push(s.t as f64 / 1000.0);
        k.x.push(s.x as f64);
        k.y.push(s.y as f64);
        k.pressure.push(s.pressure as f64);
        k.azimuth.push(s.azimuth as f64);
        k.altitude.push(s.altitude as f64);
        k.pen_down.push(s.pen == PenState::Down);
    }
    if k.t.len() < 3 {
        return Err(Error::Feature(format!(
            "{}/{}: need at least 3 distinct timestamps, found {}",
            traj.writer_id,
            traj.sample_id,
            k.t.len()
        )));
    }
    k.vx = gradient(&k.x, &k.t);
    k.vy = gradient(&k.y, &k.t);
    k.speed = k.vx.iter().zip(&k.vy).map(|(a, b)| a.hypot(*b)).collect();
    k.ax = gradient(&k.vx, &k.t);
    k.ay = gradient(&k.vy, &k.t);
    k.accel_mag = k.ax.iter().zip(&k.ay).map(|(a, b)| a.hypot(*b)).collect();
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Label, PenSample};

    pub(crate) fn trajectory(points: &[(i64, i64, i64)]) -> SignatureTrajectory {
        SignatureTrajectory {
            writer_id: "w".into(),
            sample_id: "s".into(),
            label: Label::Genuine,
            samples: points
                .iter()
                .map(|&(t, x, y)| PenSample { x, y, t, pen: PenState::Down, azimuth: 0, altitude: 0, pressure: 100 })
                .collect(),
        }
    }

    #[test]
    fn uniform_motion() {
        // x advances one unit per second
        let pts: Vec<_> = (0..10).map(|i| (i * 1000, i, 5)).collect();
        let k = derive_kinematics(&trajectory(&pts)).unwrap();
        for i in 1..9 {
            assert!((k.vx[i] - 1.0).abs() < 1e-9);
            assert!(k.ax[i].abs() < 1e-9);
            assert!(k.vy[i].abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_pen() {
        let pts: Vec<_> = (0..6).map(|i| (i * 10, 42, -7)).collect();
        let k = derive_kinematics(&trajectory(&pts)).unwrap();
        assert!(k.speed.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn parabola_has_constant_acceleration() {
        let pts: Vec<_> = (0..=10).map(|i| (i * 1000, i * i, 0)).collect();
        let k = derive_kinematics(&trajectory(&pts)).unwrap();
        for i in 1..10 {
            assert!((k.ax[i] - 2.0).abs() < 1e-6, "ax[{i}] = {}", k.ax[i]);
        }
    }

    #[test]
    fn uneven_spacing_is_exact_for_quadratics() {
        let t = [0.0, 0.1, 0.35, 0.4, 0.9];
        let f: Vec<f64> = t.iter().map(|s| 3.0 * s * s - s + 2.0).collect();
        for (g, s) in gradient(&f, &t).iter().zip(t) {
            assert!((g - (6.0 * s - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn duplicate_timestamps_collapse_and_degenerate_input_fails() {
        let k = derive_kinematics(&trajectory(&[(0, 0, 0), (0, 9, 9), (10, 1, 0), (20, 2, 0)])).unwrap();
        assert_eq!(k.x, vec![0.0, 1.0, 2.0]);
        assert!(matches!(
            derive_kinematics(&trajectory(&[(0, 0, 0), (0, 1, 0), (5, 1, 0)])),
            Err(Error::Feature(_))
        ));
    }
}
