use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::csv_error;

/// Values keyed by calendar year, iterated in increasing year order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnualSeries(BTreeMap<i32, f64>);

impl AnnualSeries {
    pub fn new() -> Self {
        AnnualSeries::default()
    }

    /// Errors on a repeated year.
    pub fn try_from_pairs(pairs: impl IntoIterator<Item = (i32, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (year, value) in pairs {
            if map.insert(year, value).is_some() {
                return Err(Error::invalid(format!("duplicate year {year}")));
            }
        }
        Ok(AnnualSeries(map))
    }

    pub fn insert(&mut self, year: i32, value: f64) -> Option<f64> {
        self.0.insert(year, value)
    }

    pub fn get(&self, year: i32) -> Option<f64> {
        self.0.get(&year).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.0.iter().map(|(&y, &v)| (y, v))
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        self.0.keys().copied()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.values().copied()
    }

    pub fn sum(&self) -> f64 {
        self.0.values().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("year,value\n");
        for (y, v) in self.iter() {
            out.push_str(&format!("{y},{v}\n"));
        }
        out
    }
}

impl FromIterator<(i32, f64)> for AnnualSeries {
    /// Later entries overwrite earlier ones for the same year.
    fn from_iter<I: IntoIterator<Item = (i32, f64)>>(iter: I) -> Self {
        AnnualSeries(iter.into_iter().collect())
    }
}

pub fn load_annual_series(path: &Path) -> Result<AnnualSeries> {
    let loc = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::parse(loc.clone(), format!("{other:?}")),
        })?;
    let headers = rdr.headers().map_err(|e| csv_error(&loc, e))?;
    if headers.len() != 2 || &headers[0] != "year" || &headers[1] != "value" {
        return Err(Error::parse(format!("{loc}:1"), "expected header `year,value`"));
    }
    let mut series = AnnualSeries::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(&loc, e))?;
        let at = format!("{loc}:{}", rec.position().map_or(0, |p| p.line()));
        let year: i32 = rec[0]
            .parse()
            .map_err(|_| Error::parse(at.clone(), format!("bad year {:?}", &rec[0])))?;
        let value: f64 = rec[1]
            .parse()
            .map_err(|_| Error::parse(at.clone(), format!("non-numeric value {:?}", &rec[1])))?;
        if series.insert(year, value).is_some() {
            return Err(Error::parse(at, format!("duplicate year {year}")));
        }
    }
    Ok(series)
}

pub fn store_annual_series(series: &AnnualSeries, path: &Path) -> Result<()> {
    fs::write(path, series.to_csv()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load_str(text: &str) -> Result<AnnualSeries> {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        fs::write(&p, text).unwrap();
        load_annual_series(&p)
    }

    #[test]
    fn parses_and_sorts() {
        let s = load_str("year,value\n1999,11\n1998,14\n").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.years().collect::<Vec<_>>(), vec![1998, 1999]);
        assert_eq!(s.get(1998), Some(14.0));
    }

    #[test]
    fn rejects_duplicates_and_junk() {
        let err = load_str("year,value\n1998,14\n1998,9\n").unwrap_err();
        assert!(err.to_string().contains("duplicate year 1998"));
        assert!(matches!(load_str("year,value\n1998,lots\n"), Err(Error::Parse { .. })));
        assert!(load_str("yr,value\n").is_err());
    }

    #[test]
    fn empty_body_is_valid() {
        assert!(load_str("year,value\n").unwrap().is_empty());
    }

    #[test]
    fn round_trip() {
        let s = AnnualSeries::try_from_pairs([(2001, 1.25), (2000, -3.0)]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        store_annual_series(&s, &p).unwrap();
        assert_eq!(load_annual_series(&p).unwrap(), s);
        assert!(AnnualSeries::try_from_pairs([(1, 1.0), (1, 2.0)]).is_err());
    }
}
