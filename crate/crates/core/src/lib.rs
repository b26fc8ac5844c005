//! Writer-independent online signature verification.
//!
//! A twin one-dimensional CNN with shared weights embeds fixed-length global
//! feature vectors of two signatures; a contrastive loss pulls genuine pairs
//! together and pushes genuine/forgery pairs beyond a margin. The crate covers
//! the full path from raw pen trajectories to ROC reports:
//!
//! - [`ingest`]: SVC-2004 trajectory files, feature CSVs, synthetic corpora, z-scoring
//! - [`features`]: kinematics and global feature recipes
//! - [`nn`]: layers with hand-written backward passes
//! - [`siamese`]: the branch network, pair losses and batch gradients
//! - [`optim`]: Adam, early stopping and the training loop
//! - [`protocol`]: pair generation and writer-disjoint K-of-M splits
//! - [`eval`]: accuracy, ROC, AUC and EER
//! - [`checkpoint`]: versioned binary model files
//! - [`pipeline`]: the commands behind the `osvnet` binary

pub mod checkpoint;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod nn;
pub mod optim;
pub mod pipeline;
pub mod protocol;
pub mod siamese;

pub use error::{Error, Result};
