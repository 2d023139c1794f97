//! Delayed cross-covariance of two daily series and the link weights
//! derived from it.
//!
//! Floating-point order is part of the contract so that an independent
//! implementation can reproduce results bit for bit:
//!
//! * series means are `f64` sums over days in ascending order, divided by 365;
//! * each `C(tau)` is an `f64` sum over `d` ascending of
//!   `(a_m[d] - mean_m) * (a_n[d + tau] - mean_n)`, divided by the number of
//!   overlapping days (the series are truncated at the year edges);
//! * curve statistics accumulate `C(0)` first, then `C(-t) + C(t)` for
//!   `t = 1..=tau_max`, which makes them independent of the pair orientation.

use super::types::{CrossCovCurve, DelayRange, PairWeight, FLAG_UNDEFINED};
use crate::error::{Error, Result};
use crate::ingest::{is_missing, DAYS_PER_YEAR};

/// Standard deviations below this mark a curve as degenerate.
pub const STD_EPSILON: f64 = 1e-12;

pub(crate) fn centered(series: &[f32]) -> Vec<f64> {
    let mut sum = 0f64;
    for &x in series {
        sum += x as f64;
    }
    let mean = sum / series.len() as f64;
    series.iter().map(|&x| x as f64 - mean).collect()
}

/// Fills `out` (length `2 * tau_max + 1`) with the cross-covariance of two
/// centred series.
pub(crate) fn curve_centered(cm: &[f64], cn: &[f64], tau_max: usize, out: &mut [f64]) {
    let len = cm.len();
    debug_assert_eq!(cn.len(), len);
    debug_assert_eq!(out.len(), 2 * tau_max + 1);
    debug_assert!(tau_max < len);
    out.iter_mut().for_each(|v| *v = 0.0);

    // k indexes the delay tau = k - tau_max; every accumulator only ever sees
    // its terms in ascending d.
    let edge = |d: usize, out: &mut [f64]| {
        let k_lo = tau_max.saturating_sub(d);
        let k_hi = (len - 1 - d + tau_max).min(2 * tau_max);
        let x = cm[d];
        for k in k_lo..=k_hi {
            out[k] += x * cn[d + k - tau_max];
        }
    };
    let interior_end = len.saturating_sub(tau_max).max(tau_max);
    for d in 0..tau_max.min(len) {
        edge(d, out);
    }
    for d in tau_max..interior_end {
        let x = cm[d];
        let window = &cn[d - tau_max..=d + tau_max];
        for (acc, &y) in out.iter_mut().zip(window) {
            *acc += x * y;
        }
    }
    for d in interior_end..len {
        edge(d, out);
    }
    for (k, v) in out.iter_mut().enumerate() {
        let overlap = len - k.abs_diff(tau_max);
        *v /= overlap as f64;
    }
}

/// Cross-covariance of node `m`'s series with node `n`'s over the delay grid.
/// A positive delay pairs `a_m[d]` with `a_n[d + tau]`, i.e. `n` lagging `m`.
pub fn cross_covariance(a_m: &[f32], a_n: &[f32], delays: DelayRange) -> Result<Vec<f64>> {
    for (name, s) in [("a_m", a_m), ("a_n", a_n)] {
        if s.len() != DAYS_PER_YEAR {
            return Err(Error::invalid(format!(
                "{name} has {} days, expected {DAYS_PER_YEAR}",
                s.len()
            )));
        }
        if s.iter().any(|&x| is_missing(x)) {
            return Err(Error::invalid(format!("{name} contains missing values")));
        }
    }
    cross_covariance_f64(&f64_series(a_m), &f64_series(a_n), delays)
}

/// As [`cross_covariance`] for series already in `f64`.
pub fn cross_covariance_f64(a_m: &[f64], a_n: &[f64], delays: DelayRange) -> Result<Vec<f64>> {
    if a_m.len() != a_n.len() || a_m.is_empty() {
        return Err(Error::invalid("series lengths differ or are empty"));
    }
    let tau_max = delays.tau_max() as usize;
    if tau_max >= a_m.len() {
        return Err(Error::invalid(format!(
            "tau_max {tau_max} must be below the series length {}",
            a_m.len()
        )));
    }
    let cm = centered_f64(a_m);
    let cn = centered_f64(a_n);
    let mut out = vec![0.0; delays.len()];
    curve_centered(&cm, &cn, tau_max, &mut out);
    Ok(out)
}

fn f64_series(s: &[f32]) -> Vec<f64> {
    s.iter().map(|&x| x as f64).collect()
}

fn centered_f64(series: &[f64]) -> Vec<f64> {
    let mut sum = 0f64;
    for &x in series {
        sum += x;
    }
    let mean = sum / series.len() as f64;
    series.iter().map(|&x| x - mean).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkWeights {
    pub positive: f64,
    pub negative: f64,
    pub tau_positive: i16,
    pub tau_negative: i16,
    pub defined: bool,
}

/// Standardised prominence of the curve's maximum and minimum:
/// `P = (max - mean) / std`, `N = (mean - min) / std`, with the sample
/// standard deviation over the delay grid. Extremum ties go to the smallest
/// `|tau|`, then to the negative delay.
pub fn link_weights(curve: &CrossCovCurve) -> Result<LinkWeights> {
    if curve.values.len() != curve.delays.len() {
        return Err(Error::invalid("curve length does not match its delay range"));
    }
    link_weights_slice(&curve.values)
}

pub(crate) fn link_weights_slice(values: &[f64]) -> Result<LinkWeights> {
    let len = values.len();
    if len < 3 || len.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "curve needs an odd length of at least 3, got {len}"
        )));
    }
    Ok(weights_unchecked(values))
}

#[inline]
pub(crate) fn weights_unchecked(values: &[f64]) -> LinkWeights {
    let t = values.len() / 2;
    let mut sum = values[t];
    for i in 1..=t {
        sum += values[t - i] + values[t + i];
    }
    let mean = sum / values.len() as f64;
    let sq = |v: f64| (v - mean) * (v - mean);
    let mut ss = sq(values[t]);
    for i in 1..=t {
        ss += sq(values[t - i]) + sq(values[t + i]);
    }
    let std = (ss / (values.len() - 1) as f64).sqrt();
    if !(std >= STD_EPSILON) {
        return LinkWeights {
            positive: 0.0,
            negative: 0.0,
            tau_positive: 0,
            tau_negative: 0,
            defined: false,
        };
    }

    let (mut max, mut min) = (values[t], values[t]);
    let (mut arg_max, mut arg_min) = (0i32, 0i32);
    for i in 1..=t {
        for tau in [-(i as i32), i as i32] {
            let v = values[(t as i32 + tau) as usize];
            if v > max {
                max = v;
                arg_max = tau;
            }
            if v < min {
                min = v;
                arg_min = tau;
            }
        }
    }
    LinkWeights {
        positive: (max - mean) / std,
        negative: (mean - min) / std,
        tau_positive: arg_max as i16,
        tau_negative: arg_min as i16,
        defined: true,
    }
}

impl LinkWeights {
    pub(crate) fn into_pair(self, m: u32, n: u32, extra_flags: u8) -> PairWeight {
        PairWeight {
            m,
            n,
            positive: self.positive,
            negative: self.negative,
            tau_positive: self.tau_positive,
            tau_negative: self.tau_negative,
            flags: if self.defined { 0 } else { FLAG_UNDEFINED } | extra_flags,
        }
    }
}
