//! The all-pairs sweep for one year.
//!
//! Valid nodes are centred once per year; pairs are then streamed row by row
//! (`m` fixed, `n > m`) across the rayon pool. Each row owns one curve buffer,
//! so memory beyond the returned weights is `O(workers * curve length)`.

use rayon::prelude::*;

use super::surrogate::year_permutation;
use super::types::{CrossCovCurve, DelayRange, LinkWeightSet, PairWeight, FLAG_COINCIDENT};
use super::xcov::{centered, curve_centered, weights_unchecked};
use crate::error::{Error, Result};
use crate::grid::NodeMask;
use crate::ingest::AnomalyField;

/// Link weights for every pair of valid nodes in `year`. Nodes with a missing
/// day in that year are dropped from `mask` first.
pub fn build_link_weights(
    field: &AnomalyField,
    year: i32,
    mask: &NodeMask,
    delays: DelayRange,
) -> Result<LinkWeightSet> {
    sweep(field, year, mask, delays, None)
}

/// Weights of a year-shuffled field produced by
/// [`shuffle_years`](super::shuffle_years) with `seed`. Pairs whose two nodes
/// drew the same source year for this slot are flagged coincident and drop
/// out of thresholds and networks.
pub fn build_surrogate_link_weights(
    shuffled: &AnomalyField,
    seed: u64,
    year: i32,
    mask: &NodeMask,
    delays: DelayRange,
) -> Result<LinkWeightSet> {
    let slot = shuffled.year_index(year)?;
    let n_years = shuffled.n_years();
    let source_year: Vec<usize> = (0..shuffled.node_count())
        .into_par_iter()
        .map(|node| year_permutation(seed, node as u64, n_years)[slot])
        .collect();
    sweep(shuffled, year, mask, delays, Some(&source_year))
}

fn sweep(
    field: &AnomalyField,
    year: i32,
    mask: &NodeMask,
    delays: DelayRange,
    source_year: Option<&[usize]>,
) -> Result<LinkWeightSet> {
    let yi = field.year_index(year)?;
    let node_count = field.node_count();
    if mask.len() != node_count {
        return Err(Error::invalid(format!(
            "mask covers {} nodes, field has {node_count}",
            mask.len()
        )));
    }
    if delays.tau_max() == 0 {
        return Err(Error::invalid(
            "tau_max must be at least 1 so the curve has a standard deviation",
        ));
    }
    let complete = field.complete_nodes(yi);
    let effective = NodeMask::new(
        mask.as_slice()
            .iter()
            .zip(complete.as_slice())
            .map(|(&a, &b)| a && b)
            .collect(),
    );
    let nodes = effective.valid_nodes();
    let series: Vec<Vec<f64>> = nodes
        .par_iter()
        .map(|&node| centered(&field.year_series(yi, node)))
        .collect();
    let tau_max = delays.tau_max() as usize;

    let pairs: Vec<PairWeight> = (0..nodes.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut buf = vec![0f64; delays.len()];
            let (series, nodes) = (&series, &nodes);
            (i + 1..nodes.len()).map(move |j| {
                curve_centered(&series[i], &series[j], tau_max, &mut buf);
                let extra = match source_year {
                    Some(src) if src[nodes[i]] == src[nodes[j]] => FLAG_COINCIDENT,
                    _ => 0,
                };
                weights_unchecked(&buf).into_pair(nodes[i] as u32, nodes[j] as u32, extra)
            })
        })
        .collect();

    Ok(LinkWeightSet {
        year,
        node_count: node_count as u32,
        delays,
        mask: effective,
        pairs,
    })
}

/// The cross-covariance curve of one node pair in one year.
pub fn pair_curve(
    field: &AnomalyField,
    year: i32,
    m: usize,
    n: usize,
    delays: DelayRange,
) -> Result<CrossCovCurve> {
    let yi = field.year_index(year)?;
    for node in [m, n] {
        if node >= field.node_count() {
            return Err(Error::Range {
                what: "node id",
                value: node as i64,
                expected: format!("0..{}", field.node_count()),
            });
        }
    }
    let values = super::xcov::cross_covariance(
        &field.year_series(yi, m),
        &field.year_series(yi, n),
        delays,
    )?;
    Ok(CrossCovCurve {
        m: m as u32,
        n: n as u32,
        year,
        delays,
        values,
    })
}
