//! Binary model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! b"OSVN" | u32 version | u32 header length | JSON header | f64 blobs | SHA-256
//! ```
//!
//! The header names every blob and its shape in file order; blob payloads
//! are raw IEEE-754 doubles so parameters reload bit-for-bit. The trailing
//! digest covers every byte before it. The version is checked before the
//! digest so a newer file is reported as such rather than as corruption.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::NormStats;
use crate::nn::{Param, ParamRole};
use crate::optim::{TrainLog, TrainOutcome};
use crate::siamese::{ArchSpec, LossConfig, ModelParams};

pub const MAGIC: &[u8; 4] = b"OSVN";
pub const FORMAT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

/// What the stored parameters came out of.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub dataset: String,
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub steps: u64,
    pub best_monitored_loss: f64,
    pub train_pairs: usize,
    pub validation_pairs: usize,
    /// SHA-256 of the per-epoch losses, wall-clock times excluded.
    pub log_digest: String,
}

impl TrainingSummary {
    pub fn from_outcome(outcome: &TrainOutcome, dataset: &str, seed: u64) -> Self {
        Self {
            dataset: dataset.to_string(),
            seed,
            epochs_run: outcome.log.records.len(),
            best_epoch: outcome.best_epoch,
            steps: outcome.steps,
            best_monitored_loss: outcome.monitored[outcome.best_epoch - 1],
            train_pairs: outcome.train_pairs,
            validation_pairs: outcome.validation_pairs,
            log_digest: loss_digest(&outcome.log),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn loss_digest(log: &TrainLog) -> String {
    let mut h = Sha256::new();
    for (epoch, train, val) in log.losses() {
        h.update((epoch as u64).to_le_bytes());
        h.update(train.to_le_bytes());
        h.update(val.unwrap_or(f64::NAN).to_le_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub norm: NormStats,
    pub loss: LossConfig,
    /// Training-set optimal threshold, when one was computed.
    pub calibrated_threshold: Option<f64>,
    pub summary: TrainingSummary,
}

#[derive(Debug, Serialize, Deserialize)]
struct BlobEntry {
    name: String,
    shape: Vec<usize>,
    role: Option<ParamRole>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    arch: ArchSpec,
    loss: LossConfig,
    calibrated_threshold: Option<f64>,
    summary: TrainingSummary,
    blobs: Vec<BlobEntry>,
}

const RUNNING_MEAN: &str = "bn.running_mean";
const RUNNING_VAR: &str = "bn.running_var";
const NORM_MEAN: &str = "input.mean";
const NORM_STD: &str = "input.std";

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.params.validate()?;
        let mut blobs: Vec<(BlobEntry, &[f64])> = self
            .params
            .tensors
            .iter()
            .map(|p| (BlobEntry { name: p.name.clone(), shape: p.shape.clone(), role: Some(p.role) }, p.data.as_slice()))
            .collect();
        for (name, data) in [
            (RUNNING_MEAN, &self.params.running_mean),
            (RUNNING_VAR, &self.params.running_var),
            (NORM_MEAN, &self.norm.mean),
            (NORM_STD, &self.norm.std),
        ] {
            blobs.push((BlobEntry { name: name.into(), shape: vec![data.len()], role: None }, data.as_slice()));
        }
        let (entries, payloads): (Vec<BlobEntry>, Vec<&[f64]>) = blobs.into_iter().unzip();
        let header = serde_json::to_vec(&Header {
            arch: self.params.arch.clone(),
            loss: self.loss,
            calibrated_threshold: self.calibrated_threshold,
            summary: self.summary.clone(),
            blobs: entries,
        })?;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&u32::try_from(header.len()).map_err(|_| Error::Checkpoint("header too large".into()))?.to_le_bytes());
        out.extend_from_slice(&header);
        for data in payloads {
            for v in data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..4] != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(Error::CheckpointVersion { found: version, expected: FORMAT_VERSION });
        }
        if bytes.len() < 12 + DIGEST_LEN {
            return Err(Error::Checkpoint("checksum missing: file truncated".into()));
        }
        let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::Checkpoint("checksum mismatch: file truncated or corrupted".into()));
        }
        let header_len = u32::from_le_bytes(body[8..12].try_into().expect("4 bytes")) as usize;
        let header_bytes = body
            .get(12..12 + header_len)
            .ok_or_else(|| Error::Checkpoint("header runs past the end of the file".into()))?;
        let header: Header = serde_json::from_slice(header_bytes)?;
        let mut cursor = &body[12 + header_len..];
        let mut tensors = Vec::new();
        let mut extra = std::collections::HashMap::new();
        for entry in header.blobs {
            let n: usize = entry.shape.iter().product();
            if cursor.len() < 8 * n {
                return Err(Error::Checkpoint(format!("blob {} runs past the end of the file", entry.name)));
            }
            let (chunk, rest) = cursor.split_at(8 * n);
            cursor = rest;
            let data: Vec<f64> = chunk.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
            match entry.role {
                Some(role) => tensors.push(Param { name: entry.name, shape: entry.shape, role, data }),
                None => {
                    extra.insert(entry.name, data);
                }
            }
        }
        if !cursor.is_empty() {
            return Err(Error::Checkpoint(format!("{} unexpected trailing bytes", cursor.len())));
        }
        let mut take = |name: &str| {
            extra.remove(name).ok_or_else(|| Error::Checkpoint(format!("blob {name} missing")))
        };
        let params = ModelParams {
            arch: header.arch,
            tensors,
            running_mean: take(RUNNING_MEAN)?,
            running_var: take(RUNNING_VAR)?,
        };
        let norm = NormStats { mean: take(NORM_MEAN)?, std: take(NORM_STD)? };
        params.validate()?;
        if norm.mean.len() != params.arch.input_length || norm.std.len() != params.arch.input_length {
            return Err(Error::Checkpoint("normalization statistics do not match the input length".into()));
        }
        Ok(Self { params, norm, loss: header.loss, calibrated_threshold: header.calibrated_threshold, summary: header.summary })
    }
}

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    std::fs::write(path, checkpoint.to_bytes()?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}
