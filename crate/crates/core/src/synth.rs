//! Synthetic daily fields with planted, delayed node-to-node couplings, and
//! synthetic annual event counts.

use std::ops::RangeInclusive;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::ingest::{AnnualSeries, DailyField, DAYS_PER_YEAR};
use crate::rng::{stream, Domain};

/// `target(d) = coupling * source(d - delay) + noise_sigma * z(d)` inside each
/// year; days whose source day falls outside the year get zero signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantSpec {
    pub source: usize,
    pub target: usize,
    pub delay: i32,
    pub coupling: f64,
    pub noise_sigma: f64,
}

impl PlantSpec {
    fn validate(&self, node_count: usize) -> Result<()> {
        for node in [self.source, self.target] {
            if node >= node_count {
                return Err(Error::invalid(format!(
                    "plant node {node} outside grid of {node_count} nodes"
                )));
            }
        }
        if self.source == self.target {
            return Err(Error::invalid("plant source and target must differ"));
        }
        if !(-1.0..=1.0).contains(&self.coupling) {
            return Err(Error::invalid(format!("coupling {} outside [-1, 1]", self.coupling)));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::invalid("plant noise sigma must be non-negative"));
        }
        if self.delay.unsigned_abs() as usize >= DAYS_PER_YEAR {
            return Err(Error::invalid(format!("plant delay {} too long", self.delay)));
        }
        Ok(())
    }
}

/// Independent `N(0, base_sigma^2)` noise on every node, then each plant
/// applied in order, overwriting its target. Every node and every plant draws
/// from its own keyed stream, so output depends only on `seed`.
pub fn generate_field(
    grid: &GridSpec,
    years: RangeInclusive<i32>,
    plants: &[PlantSpec],
    base_sigma: f64,
    seed: u64,
) -> Result<DailyField> {
    grid.validate()?;
    if !(base_sigma > 0.0 && base_sigma.is_finite()) {
        return Err(Error::invalid("base sigma must be positive"));
    }
    let (first, last) = (*years.start(), *years.end());
    if last < first {
        return Err(Error::invalid("empty year range"));
    }
    let nc = grid.node_count();
    for p in plants {
        p.validate(nc)?;
    }
    let n_years = (last - first + 1) as usize;
    let len = n_years * DAYS_PER_YEAR;

    let mut series: Vec<Vec<f32>> = (0..nc)
        .into_par_iter()
        .map(|node| {
            let mut rng = stream(seed, Domain::SynthNoise, node as u64);
            (0..len)
                .map(|_| (base_sigma * rng.sample::<f64, _>(StandardNormal)) as f32)
                .collect()
        })
        .collect();

    for (i, p) in plants.iter().enumerate() {
        let mut rng = stream(seed, Domain::SynthPlant, i as u64);
        let src = &series[p.source];
        let target: Vec<f32> = (0..len)
            .map(|t| {
                let (year, day) = (t / DAYS_PER_YEAR, (t % DAYS_PER_YEAR) as i32);
                let from = day - p.delay;
                let signal = if (0..DAYS_PER_YEAR as i32).contains(&from) {
                    p.coupling * src[year * DAYS_PER_YEAR + from as usize] as f64
                } else {
                    0.0
                };
                let z: f64 = rng.sample(StandardNormal);
                (signal + p.noise_sigma * z) as f32
            })
            .collect();
        series[p.target] = target;
    }

    let mut values = vec![0f32; len * nc];
    values.par_chunks_mut(nc).enumerate().for_each(|(t, row)| {
        for (node, v) in row.iter_mut().enumerate() {
            *v = series[node][t];
        }
    });
    DailyField::new(*grid, first, last, values)
}

/// Non-negative integer counts: `round(start + trend * i + noise_sigma * z)`
/// for the `i`-th year, clamped at zero.
pub fn generate_annual_events(
    years: RangeInclusive<i32>,
    start: f64,
    trend: f64,
    noise_sigma: f64,
    seed: u64,
) -> AnnualSeries {
    let mut rng = stream(seed, Domain::AnnualEvents, 0);
    years
        .enumerate()
        .map(|(i, year)| {
            let z: f64 = rng.sample(StandardNormal);
            let v = (start + trend * i as f64 + noise_sigma * z).round().max(0.0);
            (year, v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::pearson;

    fn grid() -> GridSpec {
        GridSpec::regular(6, 6).unwrap()
    }

    #[test]
    fn deterministic_in_seed_and_pool() {
        let plants = [PlantSpec { source: 1, target: 7, delay: 2, coupling: 0.9, noise_sigma: 0.1 }];
        let a = generate_field(&grid(), 2000..=2001, &plants, 1.0, 5).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| generate_field(&grid(), 2000..=2001, &plants, 1.0, 5).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, generate_field(&grid(), 2000..=2001, &plants, 1.0, 6).unwrap());
    }

    #[test]
    fn perfect_copy() {
        let plants = [PlantSpec { source: 3, target: 10, delay: 0, coupling: 1.0, noise_sigma: 0.0 }];
        let f = generate_field(&grid(), 1990..=1991, &plants, 2.0, 1).unwrap();
        assert_eq!(f.node_series(3), f.node_series(10));
    }

    #[test]
    fn shifted_copy_is_zero_filled() {
        let plants = [PlantSpec { source: 0, target: 1, delay: 2, coupling: 0.5, noise_sigma: 0.0 }];
        let f = generate_field(&grid(), 1990..=1991, &plants, 1.0, 3).unwrap();
        for y in 0..2 {
            assert_eq!(f.get(y, 0, 1), 0.0);
            assert_eq!(f.get(y, 1, 1), 0.0);
            for d in 2..365 {
                assert_eq!(f.get(y, d, 1), (0.5 * f.get(y, d - 2, 0) as f64) as f32);
            }
        }
    }

    #[test]
    fn rejects_bad_plants() {
        let bad = |p: PlantSpec| generate_field(&grid(), 2000..=2000, &[p], 1.0, 0).is_err();
        let ok = PlantSpec { source: 0, target: 1, delay: 1, coupling: 0.5, noise_sigma: 0.0 };
        assert!(!bad(ok));
        assert!(bad(PlantSpec { target: 36, ..ok }));
        assert!(bad(PlantSpec { target: 0, ..ok }));
        assert!(bad(PlantSpec { coupling: 1.5, ..ok }));
        assert!(bad(PlantSpec { noise_sigma: -1.0, ..ok }));
        assert!(generate_field(&grid(), 2000..=2000, &[], 0.0, 0).is_err());
    }

    #[test]
    fn annual_event_examples() {
        let flat = generate_annual_events(2000..=2004, 7.0, 0.0, 0.0, 1);
        assert!(flat.values().all(|v| v == 7.0));
        let ramp = generate_annual_events(2000..=2004, 5.0, 1.0, 0.0, 1);
        assert_eq!(ramp.values().collect::<Vec<_>>(), vec![5.0, 6.0, 7.0, 8.0, 9.0]);
        let index: AnnualSeries = ramp.years().map(|y| (y, (y - 2000) as f64)).collect();
        assert!((pearson(&ramp, &index).unwrap() - 1.0).abs() < 1e-12);
        let noisy = generate_annual_events(1950..=2010, 3.0, 0.2, 2.0, 9);
        assert!(noisy.values().all(|v| v >= 0.0 && v.fract() == 0.0));
        assert_eq!(noisy, generate_annual_events(1950..=2010, 3.0, 0.2, 2.0, 9));
    }
}
