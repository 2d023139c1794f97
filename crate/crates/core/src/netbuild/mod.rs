//! Network construction: per-year delayed cross-covariance over all valid
//! node pairs, link weights, year-shuffled surrogates, thresholds and top-K
//! selection.

mod engine;
mod io;
mod surrogate;
mod threshold;
mod types;
mod xcov;

pub use engine::{build_link_weights, build_surrogate_link_weights, pair_curve};
pub use io::{
    decode_weights, edges_to_csv, encode_weights, load_edges, load_weights, round_to_stored,
    store_edges, store_weights, ALW_HEADER_LEN, ALW_MAGIC, ALW_RECORD_LEN,
};
pub use surrogate::{shuffle_years, year_permutation};
pub use threshold::{
    apply_threshold, estimate_threshold, quantile_sorted, top_k, top_k_pooled, ThresholdConfig,
    ThresholdMode,
};
pub use types::{
    CrossCovCurve, DelayRange, Edge, LinkWeightSet, PairWeight, Polarity, YearNetwork,
    FLAG_COINCIDENT, FLAG_UNDEFINED,
};
pub use xcov::{cross_covariance, cross_covariance_f64, link_weights, LinkWeights, STD_EPSILON};
