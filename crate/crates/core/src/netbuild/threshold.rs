use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use super::types::{Edge, LinkWeightSet, PairWeight, Polarity, YearNetwork};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMode {
    /// Largest defined surrogate weight.
    SurrogateMax,
    /// Empirical quantile of the surrogate weights, `q` in (0, 1].
    SurrogateQuantile(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdConfig {
    pub mode: ThresholdMode,
    /// Fixed threshold that bypasses the surrogate estimate.
    pub value_override: Option<f64>,
}

impl ThresholdConfig {
    pub fn surrogate_max() -> Self {
        ThresholdConfig {
            mode: ThresholdMode::SurrogateMax,
            value_override: None,
        }
    }

    pub fn quantile(q: f64) -> Result<Self> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::invalid(format!("quantile {q} outside (0, 1]")));
        }
        Ok(ThresholdConfig {
            mode: ThresholdMode::SurrogateQuantile(q),
            value_override: None,
        })
    }

    pub fn fixed(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::invalid("threshold override must be finite"));
        }
        Ok(ThresholdConfig {
            mode: ThresholdMode::SurrogateMax,
            value_override: Some(value),
        })
    }

    pub fn needs_surrogate(&self) -> bool {
        self.value_override.is_none()
    }
}

/// `surrogate-max`, `quantile:<q>` or `value:<x>`.
impl FromStr for ThresholdConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "surrogate-max" || s == "max" {
            return Ok(ThresholdConfig::surrogate_max());
        }
        let bad = || Error::invalid(format!("bad threshold spec {s:?}"));
        match s.split_once(':') {
            Some(("quantile", q)) => ThresholdConfig::quantile(q.parse().map_err(|_| bad())?),
            Some(("value", v)) => ThresholdConfig::fixed(v.parse().map_err(|_| bad())?),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for ThresholdConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.value_override, self.mode) {
            (Some(v), _) => write!(f, "value:{v}"),
            (None, ThresholdMode::SurrogateMax) => f.write_str("surrogate-max"),
            (None, ThresholdMode::SurrogateQuantile(q)) => write!(f, "quantile:{q}"),
        }
    }
}

/// Threshold for one polarity from surrogate weights pooled over `sets`.
pub fn estimate_threshold(
    sets: &[LinkWeightSet],
    polarity: Polarity,
    config: &ThresholdConfig,
) -> Result<f64> {
    if let Some(v) = config.value_override {
        return Ok(v);
    }
    let mut weights: Vec<f64> = sets
        .iter()
        .flat_map(|s| s.defined_weights(polarity))
        .collect();
    if weights.is_empty() {
        return Err(Error::invalid(format!(
            "no defined {polarity} surrogate weights to estimate a threshold from"
        )));
    }
    match config.mode {
        ThresholdMode::SurrogateMax => Ok(weights.iter().copied().fold(f64::MIN, f64::max)),
        ThresholdMode::SurrogateQuantile(q) => {
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::invalid(format!("quantile {q} outside (0, 1]")));
            }
            weights.sort_by(f64::total_cmp);
            Ok(quantile_sorted(&weights, q))
        }
    }
}

/// Linear interpolation between order statistics at rank `(n - 1) * q`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Keeps the pairs whose defined weight is strictly above `threshold`.
pub fn apply_threshold(weights: &LinkWeightSet, polarity: Polarity, threshold: f64) -> YearNetwork {
    YearNetwork {
        year: weights.year,
        polarity,
        edges: weights
            .pairs
            .iter()
            .filter_map(|p| {
                p.weight(polarity)
                    .filter(|&w| w > threshold)
                    .map(|w| edge(p, polarity, w))
            })
            .collect(),
    }
}

fn edge(p: &PairWeight, polarity: Polarity, weight: f64) -> Edge {
    Edge {
        m: p.m,
        n: p.n,
        weight,
        tau: p.tau(polarity),
    }
}

/// Heavier first; ties by smaller `(m, n)`.
fn heavier_first(a: (f64, u32, u32), b: (f64, u32, u32)) -> Ordering {
    b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2)))
}

/// The `k` heaviest defined links of one year (all of them if fewer).
pub fn top_k(weights: &LinkWeightSet, polarity: Polarity, k: usize) -> YearNetwork {
    let mut picked: Vec<&PairWeight> = weights
        .pairs
        .iter()
        .filter(|p| p.weight(polarity).is_some())
        .collect();
    let key = |p: &PairWeight| (p.weight(polarity).expect("filtered"), p.m, p.n);
    if picked.len() > k {
        if k == 0 {
            picked.clear();
        } else {
            picked.select_nth_unstable_by(k - 1, |a, b| heavier_first(key(a), key(b)));
            picked.truncate(k);
        }
    }
    picked.sort_by_key(|p| (p.m, p.n));
    YearNetwork {
        year: weights.year,
        polarity,
        edges: picked
            .into_iter()
            .map(|p| edge(p, polarity, key(p).0))
            .collect(),
    }
}

/// The `k` heaviest links pooled over all years under one global cut,
/// returned as one network per input set. Ties at the cut go to the smaller
/// `(m, n)`, then the earlier year.
pub fn top_k_pooled(sets: &[LinkWeightSet], polarity: Polarity, k: usize) -> Vec<YearNetwork> {
    let mut all: Vec<(f64, u32, u32, i32, usize, i16)> = sets
        .iter()
        .enumerate()
        .flat_map(|(si, s)| {
            s.pairs.iter().filter_map(move |p| {
                p.weight(polarity)
                    .map(|w| (w, p.m, p.n, s.year, si, p.tau(polarity)))
            })
        })
        .collect();
    let cmp = |a: &(f64, u32, u32, i32, usize, i16), b: &(f64, u32, u32, i32, usize, i16)| {
        heavier_first((a.0, a.1, a.2), (b.0, b.1, b.2)).then(a.3.cmp(&b.3))
    };
    if all.len() > k {
        if k == 0 {
            all.clear();
        } else {
            all.select_nth_unstable_by(k - 1, cmp);
            all.truncate(k);
        }
    }
    let mut nets: Vec<YearNetwork> = sets
        .iter()
        .map(|s| YearNetwork::empty(s.year, polarity))
        .collect();
    for (w, m, n, _, si, tau) in all {
        nets[si].edges.push(Edge { m, n, weight: w, tau });
    }
    for net in &mut nets {
        net.edges.sort_by_key(|e| (e.m, e.n));
    }
    nets
}
