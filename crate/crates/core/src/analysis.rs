//! Network summaries: links per year, pooled heaviest-K trends, delay and
//! weight histograms, and correlation of annual series.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ingest::AnnualSeries;
use crate::netbuild::{top_k_pooled, Edge, LinkWeightSet, Polarity, YearNetwork};

/// Edge count of each network keyed by its year.
pub fn links_per_year(networks: &[YearNetwork]) -> Result<AnnualSeries> {
    check_polarity(networks)?;
    AnnualSeries::try_from_pairs(networks.iter().map(|n| (n.year, n.len() as f64)))
}

fn check_polarity(networks: &[YearNetwork]) -> Result<()> {
    if let Some(first) = networks.first() {
        if networks.iter().any(|n| n.polarity != first.polarity) {
            return Err(Error::invalid("networks mix positive and negative polarity"));
        }
    }
    Ok(())
}

/// For each `k`, keeps the `k` heaviest links pooled over all years and
/// counts the survivors per year. Saturates when fewer than `k` weights
/// are defined.
pub fn heaviest_links_per_year(
    sets: &[LinkWeightSet],
    polarity: Polarity,
    k_values: &[usize],
) -> Result<BTreeMap<usize, AnnualSeries>> {
    if k_values.is_empty() {
        return Err(Error::invalid("k_values must not be empty"));
    }
    let mut years: Vec<i32> = sets.iter().map(|s| s.year).collect();
    years.sort_unstable();
    if years.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("duplicate year in weight sets"));
    }
    k_values
        .iter()
        .map(|&k| {
            let nets = top_k_pooled(sets, polarity, k);
            Ok((k, links_per_year(&nets)?))
        })
        .collect()
}

/// Heaviest-K trends computed from already thresholded networks; equivalent
/// to [`heaviest_links_per_year`] while `k` does not exceed the pooled edge
/// count.
pub fn heaviest_links_in_networks(
    networks: &[YearNetwork],
    k_values: &[usize],
) -> Result<BTreeMap<usize, AnnualSeries>> {
    if k_values.is_empty() {
        return Err(Error::invalid("k_values must not be empty"));
    }
    check_polarity(networks)?;
    let base = links_per_year(networks)?;
    let mut pooled: Vec<(f64, u32, u32, i32)> = networks
        .iter()
        .flat_map(|n| n.edges.iter().map(move |e| (e.weight, e.m, e.n, n.year)))
        .collect();
    pooled.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then((a.1, a.2).cmp(&(b.1, b.2)))
            .then(a.3.cmp(&b.3))
    });
    Ok(k_values
        .iter()
        .map(|&k| {
            let mut series: AnnualSeries = base.years().map(|y| (y, 0.0)).collect();
            for &(_, _, _, year) in pooled.iter().take(k) {
                let v = series.get(year).unwrap_or(0.0);
                series.insert(year, v + 1.0);
            }
            (k, series)
        })
        .collect())
}

/// Link counts per delay in days.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DelayHistogram(pub BTreeMap<i32, usize>);

impl DelayHistogram {
    pub fn total(&self) -> usize {
        self.0.values().sum()
    }

    /// Delays with a non-zero count.
    pub fn support(&self) -> Vec<i32> {
        self.0
            .iter()
            .filter_map(|(&tau, &c)| (c > 0).then_some(tau))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,count\n");
        for (tau, count) in &self.0 {
            out.push_str(&format!("{tau},{count}\n"));
        }
        out
    }
}

/// Counts edges per delay over one or more networks; every delay between the
/// smallest and largest observed one gets a row, zero or not.
pub fn delay_histogram<'a>(networks: impl IntoIterator<Item = &'a YearNetwork>) -> DelayHistogram {
    let mut counts = BTreeMap::new();
    for e in networks.into_iter().flat_map(|n| n.edges.iter()) {
        *counts.entry(e.tau as i32).or_insert(0) += 1;
    }
    if let (Some(&lo), Some(&hi)) = (counts.keys().next(), counts.keys().next_back()) {
        for tau in lo..=hi {
            counts.entry(tau).or_insert(0);
        }
    }
    DelayHistogram(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistogramLabel {
    Regular,
    Surrogate,
}

impl HistogramLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            HistogramLabel::Regular => "regular",
            HistogramLabel::Surrogate => "surrogate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightHistogram {
    /// `counts.len() + 1` uniformly spaced edges starting at 0.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub label: HistogramLabel,
}

impl WeightHistogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{},{c}\n", self.edges[i], self.edges[i + 1]));
        }
        out
    }
}

/// Uniform histogram of the defined weights of one polarity, pooled over
/// `sets`. Bins start at 0 and extend until the largest weight is covered.
pub fn weight_histogram(
    sets: &[LinkWeightSet],
    polarity: Polarity,
    bin_width: f64,
    label: HistogramLabel,
) -> Result<WeightHistogram> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::invalid(format!("bin width {bin_width} must be positive")));
    }
    let weights: Vec<f64> = sets.iter().flat_map(|s| s.defined_weights(polarity)).collect();
    let max = weights.iter().copied().fold(0.0f64, f64::max);
    let n_bins = (max / bin_width).floor() as usize + 1;
    let mut counts = vec![0usize; n_bins];
    for w in weights {
        let bin = ((w.max(0.0) / bin_width).floor() as usize).min(n_bins - 1);
        counts[bin] += 1;
    }
    Ok(WeightHistogram {
        edges: (0..=n_bins).map(|i| i as f64 * bin_width).collect(),
        counts,
        label,
    })
}

/// Pearson product-moment correlation over the years both series share.
/// The `n - 1` normalisation of the two standard deviations cancels.
pub fn pearson(a: &AnnualSeries, b: &AnnualSeries) -> Result<f64> {
    pearson_pairs(&aligned(a, b, 0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaggedCorrelation {
    pub r: f64,
    /// `b` is read `lag` years after `a`: `a(y)` pairs with `b(y + lag)`.
    pub lag: i32,
}

/// The lag in `[-max_lag, max_lag]` with the largest `|r|`. Ties go to the
/// smaller `|lag|`, then to the negative lag. Lags with fewer than two shared
/// years or a constant side are skipped.
pub fn best_lagged_pearson(
    a: &AnnualSeries,
    b: &AnnualSeries,
    max_lag: u32,
) -> Result<LaggedCorrelation> {
    let max_lag = max_lag as i32;
    let mut best: Option<LaggedCorrelation> = None;
    let lags = std::iter::once(0).chain((1..=max_lag).flat_map(|l| [-l, l]));
    for lag in lags {
        let Ok(r) = pearson_pairs(&aligned(a, b, lag)) else {
            continue;
        };
        if best.is_none_or(|cur| r.abs() > cur.r.abs()) {
            best = Some(LaggedCorrelation { r, lag });
        }
    }
    best.ok_or_else(|| {
        Error::invalid(format!(
            "no lag within ±{max_lag} years gives at least two overlapping, non-constant years"
        ))
    })
}

fn aligned(a: &AnnualSeries, b: &AnnualSeries, lag: i32) -> Vec<(f64, f64)> {
    a.iter()
        .filter_map(|(y, x)| b.get(y + lag).map(|v| (x, v)))
        .collect()
}

fn pearson_pairs(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(Error::invalid(format!(
            "correlation needs at least 2 overlapping years, found {}",
            pairs.len()
        )));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::UndefinedCorrelation(
            "a series is constant over the overlapping years".into(),
        ));
    }
    // sqrt of the product keeps r(x, x) at exactly 1.
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Edges of all networks, for callers that need a flat pooled view.
pub fn pooled_edges(networks: &[YearNetwork]) -> impl Iterator<Item = (i32, &Edge)> {
    networks
        .iter()
        .flat_map(|n| n.edges.iter().map(move |e| (n.year, e)))
}
