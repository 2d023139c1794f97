use std::ops::{Deref, RangeInclusive};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, NodeMask};

/// Fixed calendar length; leap days are dropped before data reaches this crate.
pub const DAYS_PER_YEAR: usize = 365;

/// Missing-value sentinel: the most negative finite `f32`.
pub const MISSING: f32 = f32::MIN;

#[inline]
pub fn is_missing(v: f32) -> bool {
    v == MISSING
}

/// Dense `(year, day, node)` tensor of daily values on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyField {
    grid: GridSpec,
    year_first: i32,
    year_last: i32,
    values: Vec<f32>,
}

impl DailyField {
    pub fn new(grid: GridSpec, year_first: i32, year_last: i32, values: Vec<f32>) -> Result<Self> {
        grid.validate()?;
        if year_last < year_first {
            return Err(Error::invalid(format!(
                "year range {year_first}..={year_last} is empty"
            )));
        }
        let n_years = (year_last as i64 - year_first as i64 + 1) as usize;
        let expected = n_years * DAYS_PER_YEAR * grid.node_count();
        if values.len() != expected {
            return Err(Error::invalid(format!(
                "field extent mismatch: {} values, expected {n_years} x {DAYS_PER_YEAR} x {}",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(DailyField {
            grid,
            year_first,
            year_last,
            values,
        })
    }

    pub fn filled(grid: GridSpec, years: RangeInclusive<i32>, value: f32) -> Result<Self> {
        let (first, last) = (*years.start(), *years.end());
        let n_years = (last as i64 - first as i64 + 1).max(0) as usize;
        DailyField::new(
            grid,
            first,
            last,
            vec![value; n_years * DAYS_PER_YEAR * grid.node_count()],
        )
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn year_first(&self) -> i32 {
        self.year_first
    }

    pub fn year_last(&self) -> i32 {
        self.year_last
    }

    pub fn years(&self) -> RangeInclusive<i32> {
        self.year_first..=self.year_last
    }

    pub fn n_years(&self) -> usize {
        (self.year_last - self.year_first + 1) as usize
    }

    pub fn node_count(&self) -> usize {
        self.grid.node_count()
    }

    pub fn year_index(&self, year: i32) -> Result<usize> {
        if !self.years().contains(&year) {
            return Err(Error::Range {
                what: "year",
                value: year as i64,
                expected: format!("{}..={}", self.year_first, self.year_last),
            });
        }
        Ok((year - self.year_first) as usize)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f32] {
        &mut self.values
    }

    #[inline]
    pub fn offset(&self, year_index: usize, day: usize, node: usize) -> usize {
        (year_index * DAYS_PER_YEAR + day) * self.grid.node_count() + node
    }

    #[inline]
    pub fn get(&self, year_index: usize, day: usize, node: usize) -> f32 {
        self.values[self.offset(year_index, day, node)]
    }

    #[inline]
    pub fn set(&mut self, year_index: usize, day: usize, node: usize, value: f32) {
        let i = self.offset(year_index, day, node);
        self.values[i] = value;
    }

    /// One node's 365 values for one year.
    pub fn year_series(&self, year_index: usize, node: usize) -> Vec<f32> {
        (0..DAYS_PER_YEAR)
            .map(|d| self.get(year_index, d, node))
            .collect()
    }

    /// One node's values over all years, `n_years * 365` long.
    pub fn node_series(&self, node: usize) -> Vec<f32> {
        let nc = self.grid.node_count();
        self.values.iter().skip(node).step_by(nc).copied().collect()
    }

    /// Nodes with no missing day in the given year.
    pub fn complete_nodes(&self, year_index: usize) -> NodeMask {
        let nc = self.grid.node_count();
        let start = self.offset(year_index, 0, 0);
        let mut valid = vec![true; nc];
        for row in self.values[start..start + DAYS_PER_YEAR * nc].chunks_exact(nc) {
            for (v, &x) in valid.iter_mut().zip(row) {
                *v &= !is_missing(x);
            }
        }
        NodeMask::new(valid)
    }

    pub(crate) fn same_shape(&self, other: &DailyField) -> bool {
        self.grid == other.grid
            && self.year_first == other.year_first
            && self.year_last == other.year_last
    }
}

/// A daily field whose per-(day, node) climatology has been removed.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyField(DailyField);

impl AnomalyField {
    /// Wraps a field that already holds anomalies (e.g. one loaded from disk).
    pub fn from_precomputed(field: DailyField) -> Self {
        AnomalyField(field)
    }

    pub fn into_inner(self) -> DailyField {
        self.0
    }
}

impl Deref for AnomalyField {
    type Target = DailyField;

    fn deref(&self) -> &DailyField {
        &self.0
    }
}

/// Horizontal wind speed `sqrt(u^2 + v^2)`; missing where either input is.
pub fn wind_speed(u: &DailyField, v: &DailyField) -> Result<DailyField> {
    if !u.same_shape(v) {
        return Err(Error::invalid(
            "wind components differ in grid or year range",
        ));
    }
    let values = u
        .values
        .par_iter()
        .zip(v.values.par_iter())
        .map(|(&a, &b)| {
            if is_missing(a) || is_missing(b) {
                MISSING
            } else {
                (a as f64).hypot(b as f64) as f32
            }
        })
        .collect();
    Ok(DailyField { values, ..u.clone_header() })
}

impl DailyField {
    fn clone_header(&self) -> DailyField {
        DailyField {
            grid: self.grid,
            year_first: self.year_first,
            year_last: self.year_last,
            values: Vec::new(),
        }
    }
}

/// Subtracts, for every calendar day and node, the mean over all years of that
/// day's value. Missing entries are skipped in the mean and stay missing.
pub fn compute_anomaly(field: &DailyField) -> Result<AnomalyField> {
    let n_years = field.n_years();
    if n_years < 2 {
        return Err(Error::invalid("anomaly requires ≥ 2 years"));
    }
    let nc = field.node_count();
    let mut out = field.clone();
    let mut sum = vec![0f64; nc];
    let mut count = vec![0u32; nc];
    for day in 0..DAYS_PER_YEAR {
        sum.iter_mut().for_each(|s| *s = 0.0);
        count.iter_mut().for_each(|c| *c = 0);
        for y in 0..n_years {
            let start = field.offset(y, day, 0);
            for (node, &x) in field.values[start..start + nc].iter().enumerate() {
                if !is_missing(x) {
                    sum[node] += x as f64;
                    count[node] += 1;
                }
            }
        }
        let mean: Vec<f64> = sum
            .iter()
            .zip(&count)
            .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
            .collect();
        for y in 0..n_years {
            let start = field.offset(y, day, 0);
            for (node, x) in out.values[start..start + nc].iter_mut().enumerate() {
                if !is_missing(*x) {
                    *x = (*x as f64 - mean[node]) as f32;
                }
            }
        }
    }
    Ok(AnomalyField(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tiny_grid(nodes: usize) -> GridSpec {
        GridSpec::regular(1, nodes).unwrap()
    }

    #[test]
    fn extent_is_checked() {
        let g = tiny_grid(4);
        assert!(DailyField::new(g, 2000, 2001, vec![0.0; 2 * 365 * 4]).is_ok());
        assert!(DailyField::new(g, 2000, 2001, vec![0.0; 2 * 365 * 4 - 1]).is_err());
        assert!(DailyField::new(g, 2001, 2000, vec![]).is_err());
    }

    #[test]
    fn wind_speed_examples() {
        let g = tiny_grid(3);
        let mut u = DailyField::filled(g, 2000..=2000, 0.0).unwrap();
        let mut v = u.clone();
        for d in 0..365 {
            u.set(0, d, 0, 3.0);
            v.set(0, d, 0, 4.0);
            u.set(0, d, 2, -3.0);
            v.set(0, d, 2, 4.0);
        }
        u.set(0, 7, 1, MISSING);
        let w = wind_speed(&u, &v).unwrap();
        assert_eq!(w.get(0, 0, 0), 5.0);
        assert_eq!(w.get(0, 0, 1), 0.0);
        assert_eq!(w.get(0, 0, 2), 5.0);
        assert!(is_missing(w.get(0, 7, 1)));

        let other = DailyField::filled(g, 2000..=2001, 0.0).unwrap();
        assert!(wind_speed(&u, &other).is_err());
    }

    #[test]
    fn anomaly_needs_two_years() {
        let f = DailyField::filled(tiny_grid(1), 1990..=1990, 1.0).unwrap();
        let err = compute_anomaly(&f).unwrap_err();
        assert!(err.to_string().contains("anomaly requires ≥ 2 years"));
    }

    #[test]
    fn anomaly_hand_cases() {
        let mut f = DailyField::filled(tiny_grid(2), 2000..=2001, 7.0).unwrap();
        f.set(0, 10, 1, 2.0);
        f.set(1, 10, 1, 4.0);
        let a = compute_anomaly(&f).unwrap();
        assert_eq!(a.get(0, 10, 1), -1.0);
        assert_eq!(a.get(1, 10, 1), 1.0);
        // constant climatology
        assert_eq!(a.get(0, 3, 0), 0.0);
        assert_eq!(a.get(1, 3, 0), 0.0);
    }

    #[test]
    fn anomaly_skips_missing() {
        let mut f = DailyField::filled(tiny_grid(1), 2000..=2002, 1.0).unwrap();
        f.set(0, 0, 0, 4.0);
        f.set(1, 0, 0, MISSING);
        f.set(2, 0, 0, 2.0);
        let a = compute_anomaly(&f).unwrap();
        assert_eq!(a.get(0, 0, 0), 1.0);
        assert!(is_missing(a.get(1, 0, 0)));
        assert_eq!(a.get(2, 0, 0), -1.0);
    }

    #[test]
    fn complete_nodes_drops_gappy_nodes() {
        let mut f = DailyField::filled(tiny_grid(3), 2000..=2001, 1.0).unwrap();
        f.set(1, 200, 2, MISSING);
        assert_eq!(f.complete_nodes(0).effective_size(), 3);
        assert_eq!(f.complete_nodes(1).valid_nodes(), vec![0, 1]);
    }

    fn random_field(years: usize, nodes: usize, seed: u64) -> DailyField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values = (0..years * 365 * nodes)
            .map(|_| rng.random_range(-50.0f32..50.0))
            .collect();
        DailyField::new(tiny_grid(nodes), 1950, 1950 + years as i32 - 1, values).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn anomaly_is_idempotent(seed in any::<u64>(), years in 2usize..6) {
            let f = random_field(years, 3, seed);
            let a = compute_anomaly(&f).unwrap();
            let b = compute_anomaly(&a).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x - y).abs() <= 1e-4);
            }
        }

        #[test]
        fn anomaly_ignores_climatology_offset(seed in any::<u64>(), offset in -100f32..100.0) {
            let f = random_field(3, 2, seed);
            let mut shifted = f.clone();
            for y in 0..3 {
                for d in 0..365 {
                    for n in 0..2 {
                        let v = shifted.get(y, d, n) + offset * (d as f32 / 365.0 + n as f32);
                        shifted.set(y, d, n, v);
                    }
                }
            }
            let a = compute_anomaly(&f).unwrap();
            let b = compute_anomaly(&shifted).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x - y).abs() <= 1e-4, "{} vs {}", x, y);
            }
        }

        #[test]
        fn wind_speed_is_non_negative(seed in any::<u64>()) {
            let u = random_field(1, 2, seed);
            let v = random_field(1, 2, seed ^ 0xABCD);
            let w = wind_speed(&u, &v).unwrap();
            prop_assert!(w.values().iter().all(|&x| x >= 0.0));
        }
    }
}
