//! `RunConfig` and its `key = value` text form.
//!
//! ```text
//! # wind speed from two components
//! metric = wind
//! input = u.agf, v.agf
//! years = 1990-1999
//! tau_max = 10
//! threshold = surrogate-max
//! surrogate = true
//! k_values = 200, 100, 50
//! output = out/wind
//! ```

use std::fmt;
use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::netbuild::{DelayRange, ThresholdConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    /// Raw daily values; the anomaly is computed before building.
    Raw,
    /// Already an anomaly field.
    Anomaly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdScope {
    Pooled,
    PerYear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub metric: String,
    /// One field, or the `u` and `v` components of a wind field.
    pub inputs: Vec<PathBuf>,
    pub input_kind: InputKind,
    pub mask: Option<PathBuf>,
    /// Defaults to every year of the input.
    pub years: Option<RangeInclusive<i32>>,
    pub tau_max: u16,
    pub threshold: ThresholdConfig,
    pub threshold_scope: ThresholdScope,
    pub surrogate: bool,
    pub seed: Option<u64>,
    pub k_values: Vec<usize>,
    pub bin_width: f64,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            metric: "field".into(),
            inputs: Vec::new(),
            input_kind: InputKind::Raw,
            mask: None,
            years: None,
            tau_max: DelayRange::DEFAULT_TAU_MAX,
            threshold: ThresholdConfig::surrogate_max(),
            threshold_scope: ThresholdScope::Pooled,
            surrogate: false,
            seed: None,
            k_values: vec![200, 100, 50],
            bin_width: 0.25,
            output: PathBuf::from("out"),
        }
    }
}

pub fn parse_years(s: &str) -> Result<RangeInclusive<i32>> {
    let bad = || Error::invalid(format!("bad year range {s:?}, expected FIRST-LAST"));
    let s = s.trim();
    let (a, b) = match s.split_once(['-', ':']) {
        Some((a, b)) if !a.is_empty() => (a, b),
        _ => (s, s),
    };
    let first: i32 = a.trim().parse().map_err(|_| bad())?;
    let last: i32 = b.trim().parse().map_err(|_| bad())?;
    if last < first {
        return Err(bad());
    }
    Ok(first..=last)
}

pub fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::invalid(format!("bad {what} {t:?}"))))
        .collect()
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(Error::invalid(format!("bad boolean {other:?}"))),
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "metric" => self.metric = v.to_string(),
            "input" | "inputs" => {
                self.inputs = v
                    .split(',')
                    .map(str::trim)
                    .filter(|p| !p.is_empty())
                    .map(PathBuf::from)
                    .collect()
            }
            "input_kind" => {
                self.input_kind = match v {
                    "raw" => InputKind::Raw,
                    "anomaly" => InputKind::Anomaly,
                    other => return Err(Error::invalid(format!("bad input_kind {other:?}"))),
                }
            }
            "mask" => self.mask = (!v.is_empty()).then(|| PathBuf::from(v)),
            "years" => self.years = if v.is_empty() { None } else { Some(parse_years(v)?) },
            "tau_max" => {
                self.tau_max = v
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad tau_max {v:?}")))?
            }
            "threshold" => self.threshold = v.parse()?,
            "threshold_scope" => {
                self.threshold_scope = match v {
                    "pooled" => ThresholdScope::Pooled,
                    "per-year" | "per_year" => ThresholdScope::PerYear,
                    other => return Err(Error::invalid(format!("bad threshold_scope {other:?}"))),
                }
            }
            "surrogate" => self.surrogate = parse_bool(v)?,
            "seed" => {
                self.seed = if v.is_empty() {
                    None
                } else {
                    Some(v.parse().map_err(|_| Error::invalid(format!("bad seed {v:?}")))?)
                }
            }
            "k_values" => self.k_values = parse_list(v, "k value")?,
            "bin_width" => {
                self.bin_width = v
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad bin_width {v:?}")))?
            }
            "output" => self.output = PathBuf::from(v),
            other => return Err(Error::invalid(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn parse(text: &str, loc: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = format!("{loc}:{}", i + 1);
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(at.clone(), "expected `key = value`"))?;
            cfg.set(k, v).map_err(|e| match e {
                Error::InvalidInput(msg) => Error::parse(at.clone(), msg),
                other => other,
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text, &path.display().to_string())
    }

    /// Every key with its value, in a fixed order; parsing these back gives
    /// the same config.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let join = |it: Vec<String>| it.join(",");
        vec![
            ("metric", self.metric.clone()),
            ("input", join(self.inputs.iter().map(|p| p.display().to_string()).collect())),
            (
                "input_kind",
                match self.input_kind {
                    InputKind::Raw => "raw",
                    InputKind::Anomaly => "anomaly",
                }
                .into(),
            ),
            ("mask", self.mask.as_ref().map_or(String::new(), |p| p.display().to_string())),
            (
                "years",
                self.years
                    .as_ref()
                    .map_or(String::new(), |r| format!("{}-{}", r.start(), r.end())),
            ),
            ("tau_max", self.tau_max.to_string()),
            ("threshold", self.threshold.to_string()),
            (
                "threshold_scope",
                match self.threshold_scope {
                    ThresholdScope::Pooled => "pooled",
                    ThresholdScope::PerYear => "per-year",
                }
                .into(),
            ),
            ("surrogate", self.surrogate.to_string()),
            ("seed", self.seed.map_or(String::new(), |s| s.to_string())),
            ("k_values", join(self.k_values.iter().map(|k| k.to_string()).collect())),
            ("bin_width", self.bin_width.to_string()),
            ("output", self.output.display().to_string()),
        ]
    }

    /// Missing paths are I/O errors; everything else is a validation error.
    pub fn validate(&self) -> Result<()> {
        match self.inputs.len() {
            1 | 2 => {}
            0 => return Err(Error::invalid("no input field given")),
            n => return Err(Error::invalid(format!("expected 1 or 2 inputs, got {n}"))),
        }
        for p in self.inputs.iter().chain(&self.mask) {
            if !p.exists() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
                ));
            }
        }
        if self.tau_max == 0 {
            return Err(Error::invalid(
                "tau_max must be at least 1: a single-delay curve has no standard deviation",
            ));
        }
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return Err(Error::invalid("k_values must be non-empty and positive"));
        }
        if self.k_values.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::invalid("k_values must be strictly descending"));
        }
        if !(self.bin_width > 0.0 && self.bin_width.is_finite()) {
            return Err(Error::invalid("bin_width must be positive"));
        }
        if self.threshold.needs_surrogate() && !self.surrogate {
            return Err(Error::invalid(format!(
                "threshold {} needs surrogate networks; enable surrogate or give value:<x>",
                self.threshold
            )));
        }
        Ok(())
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.pairs() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let text = "# comment\nmetric = wind\ninput = a.agf, b.agf\nyears = 1990-1995\n\
                    tau_max = 7\nthreshold = quantile:0.99\nthreshold_scope = per-year\n\
                    surrogate = yes\nseed = 17\nk_values = 20,10\noutput = o\n";
        let cfg = RunConfig::parse(text, "t").unwrap();
        assert_eq!(cfg.inputs.len(), 2);
        assert_eq!(cfg.years, Some(1990..=1995));
        assert_eq!(cfg.threshold_scope, ThresholdScope::PerYear);
        assert_eq!(cfg.seed, Some(17));
        assert_eq!(RunConfig::parse(&cfg.to_string(), "t").unwrap(), cfg);
    }

    #[test]
    fn bad_lines_are_parse_errors() {
        assert_eq!(RunConfig::parse("metric wind", "t").unwrap_err().exit_code(), 2);
        assert_eq!(RunConfig::parse("colour = red", "t").unwrap_err().exit_code(), 2);
        assert_eq!(RunConfig::parse("tau_max = -1", "t").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn validation() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("f.agf");
        fs::write(&input, b"").unwrap();
        let ok = RunConfig {
            inputs: vec![input],
            surrogate: true,
            ..RunConfig::default()
        };
        ok.validate().unwrap();
        let zero = RunConfig { tau_max: 0, ..ok.clone() };
        assert_eq!(zero.validate().unwrap_err().exit_code(), 1);
        let missing = RunConfig { inputs: vec![dir.path().join("nope")], ..ok.clone() };
        assert_eq!(missing.validate().unwrap_err().exit_code(), 2);
        let unsorted = RunConfig { k_values: vec![50, 100], ..ok.clone() };
        assert!(unsorted.validate().is_err());
        let no_sur = RunConfig { surrogate: false, ..ok.clone() };
        assert!(no_sur.validate().is_err());
        let fixed = RunConfig { threshold: ThresholdConfig::fixed(3.0).unwrap(), ..no_sur };
        fixed.validate().unwrap();
    }

    #[test]
    fn year_ranges() {
        assert_eq!(parse_years("1990-1999").unwrap(), 1990..=1999);
        assert_eq!(parse_years("2001").unwrap(), 2001..=2001);
        assert!(parse_years("1999-1990").is_err());
        assert!(parse_years("x").is_err());
    }
}
