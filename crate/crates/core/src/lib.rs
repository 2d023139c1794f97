//! Climate correlation networks from gridded daily anomaly fields.
//!
//! The pipeline: load or synthesise a daily field ([`ingest`], [`synth`]),
//! remove the daily climatology, build per-year positive and negative link
//! weights from delayed cross-covariance ([`netbuild`]), calibrate thresholds
//! on year-shuffled surrogates, and summarise or export the resulting
//! networks ([`analysis`], [`export`]).

pub mod analysis;
pub mod cli;
pub mod error;
pub mod export;
pub mod grid;
pub mod ingest;
pub mod netbuild;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
