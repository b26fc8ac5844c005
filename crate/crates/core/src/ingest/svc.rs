//! SVC-2004 trajectory files: a point count on the first line, then one
//! `x y timestamp button azimuth altitude pressure` line per point.

use std::fmt::Write as _;
use std::path::Path;

use super::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenState {
    Down,
    Up,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PenSample {
    pub x: i64,
    pub y: i64,
    /// Milliseconds.
    pub t: i64,
    pub pen: PenState,
    pub azimuth: i64,
    pub altitude: i64,
    pub pressure: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignatureTrajectory {
    pub writer_id: String,
    pub sample_id: String,
    pub label: Label,
    pub samples: Vec<PenSample>,
}

fn field(token: Option<&str>, line: usize, name: &str) -> Result<i64> {
    let tok = token.ok_or_else(|| Error::parse_line(line, format!("missing {name}")))?;
    if let Ok(v) = tok.parse::<i64>() {
        return Ok(v);
    }
    // some exports write integral values as "300.0"
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() && v.fract() == 0.0 && v.abs() < 9.0e15 => Ok(v as i64),
        _ => Err(Error::parse_line(line, format!("{name} {tok:?} is not an integer"))),
    }
}

/// Parses one trajectory. Identity fields are left empty for the caller.
pub fn parse_svc_trajectory(text: &str) -> Result<SignatureTrajectory> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (header_line, header) = lines
        .by_ref()
        .find(|(_, l)| !l.is_empty())
        .ok_or_else(|| Error::parse_line(1, "empty trajectory file"))?;
    let count: usize = header
        .parse()
        .map_err(|_| Error::parse_line(header_line, format!("point count {header:?} is not a non-negative integer")))?;

    let mut samples = Vec::with_capacity(count);
    let mut last_line = header_line;
    for (line, text) in lines {
        if text.is_empty() {
            continue;
        }
        if samples.len() == count {
            return Err(Error::parse_line(line, format!("more points than the declared {count}")));
        }
        let mut tok = text.split_whitespace();
        let x = field(tok.next(), line, "x")?;
        let y = field(tok.next(), line, "y")?;
        let t = field(tok.next(), line, "timestamp")?;
        let button = field(tok.next(), line, "button status")?;
        let azimuth = field(tok.next(), line, "azimuth")?;
        let altitude = field(tok.next(), line, "altitude")?;
        let pressure = field(tok.next(), line, "pressure")?;
        if tok.next().is_some() {
            return Err(Error::parse_line(line, "more than 7 fields"));
        }
        if let Some(prev) = samples.last().map(|s: &PenSample| s.t) {
            if t < prev {
                return Err(Error::parse_line(line, format!("timestamp {t} goes back in time (previous {prev})")));
            }
        }
        samples.push(PenSample {
            x,
            y,
            t,
            pen: if button != 0 { PenState::Down } else { PenState::Up },
            azimuth,
            altitude,
            pressure,
        });
        last_line = line;
    }
    if samples.len() < count {
        return Err(Error::parse_line(
            last_line + 1,
            format!("header declares {count} points but only {} are present", samples.len()),
        ));
    }
    if samples.len() < 2 {
        return Err(Error::parse_line(header_line, "a trajectory needs at least 2 points"));
    }
    Ok(SignatureTrajectory {
        writer_id: String::new(),
        sample_id: String::new(),
        label: Label::Genuine,
        samples,
    })
}

pub fn write_svc_trajectory(traj: &SignatureTrajectory) -> String {
    let mut out = format!("{}\n", traj.samples.len());
    for s in &traj.samples {
        let button = u8::from(s.pen == PenState::Down);
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {}",
            s.x, s.y, s.t, button, s.azimuth, s.altitude, s.pressure
        );
    }
    out
}

/// Writer, sample and label from an SVC file name such as `U12S23.TXT`.
/// Samples numbered above `genuine_per_writer` are skilled forgeries.
pub fn svc_file_identity(file_name: &str, genuine_per_writer: usize) -> Option<(String, String, Label)> {
    let stem = file_name.split('.').next()?.to_ascii_uppercase();
    let rest = stem.strip_prefix('U')?;
    let (writer, sample) = rest.split_once('S')?;
    let w: usize = writer.parse().ok()?;
    let s: usize = sample.parse().ok()?;
    let label = if s <= genuine_per_writer {
        Label::Genuine
    } else {
        Label::Forgery
    };
    Some((format!("U{w:02}"), format!("S{s:02}"), label))
}

/// Reads and parses one SVC file, filling identity from its name.
pub fn read_svc_file(path: &Path, genuine_per_writer: usize) -> Result<SignatureTrajectory> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut traj = parse_svc_trajectory(&text)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let (w, s, label) = svc_file_identity(name, genuine_per_writer).ok_or_else(|| {
        Error::config(format!("{} does not follow the U<writer>S<sample> naming", path.display()))
    })?;
    traj.writer_id = w;
    traj.sample_id = s;
    traj.label = label;
    Ok(traj)
}
