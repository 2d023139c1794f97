use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::NodeMask;
use crate::ingest::DAYS_PER_YEAR;

/// Symmetric integer delay grid `[-tau_max, +tau_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DelayRange {
    tau_max: u16,
}

impl DelayRange {
    pub const DEFAULT_TAU_MAX: u16 = 10;

    pub fn new(tau_max: u16) -> Result<Self> {
        if tau_max as usize >= DAYS_PER_YEAR {
            return Err(Error::invalid(format!(
                "tau_max {tau_max} must be below {DAYS_PER_YEAR}"
            )));
        }
        Ok(DelayRange { tau_max })
    }

    pub fn tau_max(&self) -> u16 {
        self.tau_max
    }

    pub fn len(&self) -> usize {
        2 * self.tau_max as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn delays(&self) -> impl Iterator<Item = i32> {
        let t = self.tau_max as i32;
        -t..=t
    }
}

impl Default for DelayRange {
    fn default() -> Self {
        DelayRange {
            tau_max: Self::DEFAULT_TAU_MAX,
        }
    }
}

/// Cross-covariance of one node pair over the delay grid, index 0 holding
/// delay `-tau_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCovCurve {
    pub m: u32,
    pub n: u32,
    pub year: i32,
    pub delays: DelayRange,
    pub values: Vec<f64>,
}

impl CrossCovCurve {
    pub fn at(&self, tau: i32) -> Option<f64> {
        let idx = tau + self.delays.tau_max() as i32;
        usize::try_from(idx).ok().and_then(|i| self.values.get(i).copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub const BOTH: [Polarity; 2] = [Polarity::Positive, Polarity::Negative];

    pub fn short(&self) -> &'static str {
        match self {
            Polarity::Positive => "pos",
            Polarity::Negative => "neg",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        })
    }
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" | "pos" | "+" => Ok(Polarity::Positive),
            "negative" | "neg" | "-" => Ok(Polarity::Negative),
            other => Err(Error::invalid(format!("unknown polarity {other:?}"))),
        }
    }
}

/// The curve's standard deviation fell below the degeneracy epsilon.
pub const FLAG_UNDEFINED: u8 = 0b01;
/// Surrogate slot in which both nodes drew the same source year, so the
/// pair still carries its real dependence.
pub const FLAG_COINCIDENT: u8 = 0b10;

/// Link weights for one unordered pair `m < n`. Both weights are stored as
/// non-negative magnitudes; the delays are in the `(m, n)` orientation, where
/// a positive delay means `n` lags `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairWeight {
    pub m: u32,
    pub n: u32,
    pub positive: f64,
    pub negative: f64,
    pub tau_positive: i16,
    pub tau_negative: i16,
    pub flags: u8,
}

impl PairWeight {
    pub fn is_defined(&self) -> bool {
        self.flags == 0
    }

    /// `None` for undefined or coincident pairs.
    pub fn weight(&self, polarity: Polarity) -> Option<f64> {
        if !self.is_defined() {
            return None;
        }
        Some(match polarity {
            Polarity::Positive => self.positive,
            Polarity::Negative => self.negative,
        })
    }

    pub fn tau(&self, polarity: Polarity) -> i16 {
        match polarity {
            Polarity::Positive => self.tau_positive,
            Polarity::Negative => self.tau_negative,
        }
    }
}

/// All pair weights of one year, pairs in ascending `(m, n)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkWeightSet {
    pub year: i32,
    pub node_count: u32,
    pub delays: DelayRange,
    pub mask: NodeMask,
    pub pairs: Vec<PairWeight>,
}

impl LinkWeightSet {
    pub fn defined_weights(&self, polarity: Polarity) -> impl Iterator<Item = f64> + '_ {
        self.pairs.iter().filter_map(move |p| p.weight(polarity))
    }

    pub fn defined_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.is_defined()).count()
    }

    pub fn find(&self, m: u32, n: u32) -> Option<&PairWeight> {
        let key = (m.min(n), m.max(n));
        self.pairs
            .binary_search_by(|p| (p.m, p.n).cmp(&key))
            .ok()
            .map(|i| &self.pairs[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub m: u32,
    pub n: u32,
    pub weight: f64,
    pub tau: i16,
}

/// Thresholded links of one year and polarity, edges in ascending `(m, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct YearNetwork {
    pub year: i32,
    pub polarity: Polarity,
    pub edges: Vec<Edge>,
}

impl YearNetwork {
    pub fn empty(year: i32, polarity: Polarity) -> Self {
        YearNetwork {
            year,
            polarity,
            edges: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, m: u32, n: u32) -> bool {
        self.edges
            .binary_search_by(|e| (e.m, e.n).cmp(&(m, n)))
            .is_ok()
    }
}
