//! Year-block surrogates: each node's years are permuted independently while
//! the days inside every year keep their order.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::ingest::{AnomalyField, DailyField, DAYS_PER_YEAR};
use crate::rng::{stream, Domain};

/// Source year index for every output year slot of `node`: slot `y` of the
/// shuffled series holds original year `perm[y]`.
pub fn year_permutation(seed: u64, node: u64, n_years: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n_years).collect();
    perm.shuffle(&mut stream(seed, Domain::YearShuffle, node));
    perm
}

pub fn shuffle_years(field: &AnomalyField, seed: u64) -> AnomalyField {
    let nc = field.node_count();
    let n_years = field.n_years();
    let perms: Vec<Vec<usize>> = (0..nc)
        .into_par_iter()
        .map(|node| year_permutation(seed, node as u64, n_years))
        .collect();
    let src = field.values();
    let mut out = vec![0f32; src.len()];
    out.par_chunks_mut(nc).enumerate().for_each(|(row, dst)| {
        let (slot, day) = (row / DAYS_PER_YEAR, row % DAYS_PER_YEAR);
        for (node, v) in dst.iter_mut().enumerate() {
            *v = src[field.offset(perms[node][slot], day, node)];
        }
    });
    AnomalyField::from_precomputed(
        DailyField::new(*field.grid(), field.year_first(), field.year_last(), out)
            .expect("same extent as the input"),
    )
}
