//! Regular latitude/longitude grids, node indexing and validity masks.
//!
//! Rows run north to south starting at `lat_origin`; columns run east from
//! `lon_origin` and wrap at 360°. A node id is `lat_index * n_lon + lon_index`.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::DailyField;

const SPAN_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n_lat: usize,
    pub n_lon: usize,
    pub lat_step: f64,
    pub lon_step: f64,
    pub lat_origin: f64,
    pub lon_origin: f64,
}

impl GridSpec {
    pub fn new(
        n_lat: usize,
        n_lon: usize,
        lat_step: f64,
        lon_step: f64,
        lat_origin: f64,
        lon_origin: f64,
    ) -> Result<Self> {
        let grid = GridSpec {
            n_lat,
            n_lon,
            lat_step,
            lon_step,
            lat_origin,
            lon_origin,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// The 73 x 96 global grid at 2.5° x 3.75°, pole-inclusive rows.
    pub fn global_2p5x3p75() -> Self {
        GridSpec {
            n_lat: 73,
            n_lon: 96,
            lat_step: 2.5,
            lon_step: 3.75,
            lat_origin: 90.0,
            lon_origin: 0.0,
        }
    }

    /// A pole-anchored grid with `n_lat` rows spanning at most 180° and
    /// `n_lon` evenly spaced columns covering the full circle.
    pub fn regular(n_lat: usize, n_lon: usize) -> Result<Self> {
        if n_lat == 0 || n_lon == 0 {
            return Err(Error::invalid("grid needs at least one row and column"));
        }
        let lat_step = if n_lat > 1 {
            180.0 / (n_lat - 1) as f64
        } else {
            1.0
        };
        GridSpec::new(n_lat, n_lon, lat_step, 360.0 / n_lon as f64, 90.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_lat == 0 || self.n_lon == 0 {
            return Err(Error::invalid("grid needs at least one row and column"));
        }
        let finite = [
            self.lat_step,
            self.lon_step,
            self.lat_origin,
            self.lon_origin,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite || self.lat_step <= 0.0 || self.lon_step <= 0.0 {
            return Err(Error::invalid("grid steps must be finite and positive"));
        }
        if (self.n_lat - 1) as f64 * self.lat_step > 180.0 + SPAN_EPS {
            return Err(Error::invalid("latitude span exceeds 180 degrees"));
        }
        if self.n_lon as f64 * self.lon_step > 360.0 + SPAN_EPS {
            return Err(Error::invalid("longitude span exceeds 360 degrees"));
        }
        let south = self.lat_origin - (self.n_lat - 1) as f64 * self.lat_step;
        if self.lat_origin > 90.0 + SPAN_EPS || south < -90.0 - SPAN_EPS {
            return Err(Error::invalid("latitude rows leave [-90, 90]"));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.n_lat * self.n_lon
    }

    pub fn node_index(&self, lat_index: usize, lon_index: usize) -> Result<usize> {
        if lat_index >= self.n_lat {
            return Err(Error::Range {
                what: "latitude index",
                value: lat_index as i64,
                expected: format!("0..{}", self.n_lat),
            });
        }
        if lon_index >= self.n_lon {
            return Err(Error::Range {
                what: "longitude index",
                value: lon_index as i64,
                expected: format!("0..{}", self.n_lon),
            });
        }
        Ok(lat_index * self.n_lon + lon_index)
    }

    pub fn node_coords(&self, node: usize) -> Result<(usize, usize)> {
        if node >= self.node_count() {
            return Err(Error::Range {
                what: "node id",
                value: node as i64,
                expected: format!("0..{}", self.node_count()),
            });
        }
        Ok((node / self.n_lon, node % self.n_lon))
    }

    pub fn lat_of_row(&self, lat_index: usize) -> f64 {
        self.lat_origin - lat_index as f64 * self.lat_step
    }

    /// Longitude of a column in [0, 360).
    pub fn lon_of_col(&self, lon_index: usize) -> f64 {
        (self.lon_origin + lon_index as f64 * self.lon_step).rem_euclid(360.0)
    }

    /// `(lat, lon)` of a node centre in degrees, longitude in [0, 360).
    pub fn node_lat_lon(&self, node: usize) -> Result<(f64, f64)> {
        let (i, j) = self.node_coords(node)?;
        Ok((self.lat_of_row(i), self.lon_of_col(j)))
    }
}

/// Central angle between two points on the unit sphere (haversine form).
pub fn great_circle_distance(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dphi = p2 - p1;
    let dlambda = (lon2 - lon1).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * h.sqrt().min(1.0).asin()
}

/// For every node of `target`, the id of the nearest `source` node centre.
/// Ties go to the smallest source id.
pub fn nearest_source_nodes(source: &GridSpec, target: &GridSpec) -> Result<Vec<usize>> {
    if source.node_count() == 0 {
        return Err(Error::invalid("empty source grid"));
    }
    let src: Vec<(f64, f64)> = (0..source.node_count())
        .map(|id| source.node_lat_lon(id).expect("id in range"))
        .collect();
    Ok((0..target.node_count())
        .into_par_iter()
        .map(|t| {
            let (lat, lon) = target.node_lat_lon(t).expect("id in range");
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (id, &(slat, slon)) in src.iter().enumerate() {
                let d = great_circle_distance(lat, lon, slat, slon);
                if d < best_d {
                    best_d = d;
                    best = id;
                }
            }
            best
        })
        .collect())
}

/// Nearest-neighbour resampling of a daily field onto another grid.
pub fn regrid_nearest(field: &DailyField, target: &GridSpec) -> Result<DailyField> {
    target.validate()?;
    let lookup = nearest_source_nodes(field.grid(), target)?;
    let src_nodes = field.grid().node_count();
    let dst_nodes = target.node_count();
    let steps = field.n_years() * crate::ingest::DAYS_PER_YEAR;
    let mut values = Vec::with_capacity(steps * dst_nodes);
    for row in field.values().chunks_exact(src_nodes).take(steps) {
        values.extend(lookup.iter().map(|&s| row[s]));
    }
    DailyField::new(*target, field.year_first(), field.year_last(), values)
}

/// Per-node validity flags; `true` marks a node that takes part in networks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeMask {
    valid: Vec<bool>,
}

impl NodeMask {
    pub fn new(valid: Vec<bool>) -> Self {
        NodeMask { valid }
    }

    pub fn all(node_count: usize) -> Self {
        NodeMask {
            valid: vec![true; node_count],
        }
    }

    pub fn from_nodes(node_count: usize, nodes: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut valid = vec![false; node_count];
        for n in nodes {
            *valid.get_mut(n).ok_or(Error::Range {
                what: "node id",
                value: n as i64,
                expected: format!("0..{node_count}"),
            })? = true;
        }
        Ok(NodeMask { valid })
    }

    pub fn len(&self) -> usize {
        self.valid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valid.is_empty()
    }

    pub fn is_valid(&self, node: usize) -> bool {
        self.valid.get(node).copied().unwrap_or(false)
    }

    pub fn set(&mut self, node: usize, valid: bool) {
        self.valid[node] = valid;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.valid
    }

    pub fn effective_size(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Valid node ids in ascending order.
    pub fn valid_nodes(&self) -> Vec<usize> {
        self.valid
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| v.then_some(i))
            .collect()
    }

    pub fn pair_count(&self) -> u64 {
        pair_count(self.effective_size() as u64)
    }

    pub fn load_csv(path: &Path, node_count: usize) -> Result<Self> {
        let loc = path.display().to_string();
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_error(&loc, e))?;
        let headers = rdr.headers().map_err(|e| csv_error(&loc, e))?.clone();
        if headers.len() != 2 || &headers[0] != "node_id" || &headers[1] != "valid" {
            return Err(Error::parse(
                format!("{loc}:1"),
                "expected header `node_id,valid`",
            ));
        }
        let mut valid = vec![None; node_count];
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_error(&loc, e))?;
            let line = rec.position().map_or(0, |p| p.line());
            let at = || format!("{loc}:{line}");
            let id: usize = rec[0]
                .parse()
                .map_err(|_| Error::parse(at(), format!("bad node id {:?}", &rec[0])))?;
            let flag = match &rec[1] {
                "0" => false,
                "1" => true,
                other => return Err(Error::parse(at(), format!("valid must be 0 or 1, got {other:?}"))),
            };
            let slot = valid
                .get_mut(id)
                .ok_or_else(|| Error::parse(at(), format!("node id {id} >= {node_count}")))?;
            if slot.replace(flag).is_some() {
                return Err(Error::parse(at(), format!("duplicate node id {id}")));
            }
        }
        let valid = valid
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| Error::parse(loc.clone(), format!("missing row for node {i}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(NodeMask { valid })
    }

    pub fn store_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::with_capacity(16 + self.valid.len() * 8);
        out.push_str("node_id,valid\n");
        for (i, &v) in self.valid.iter().enumerate() {
            out.push_str(&format!("{i},{}\n", u8::from(v)));
        }
        fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

/// Number of unordered pairs among `k` nodes.
pub fn pair_count(k: u64) -> u64 {
    if k < 2 {
        0
    } else {
        k * (k - 1) / 2
    }
}

pub(crate) fn csv_error(loc: &str, e: csv::Error) -> Error {
    let at = match e.position() {
        Some(p) => format!("{loc}:{}", p.line()),
        None => loc.to_string(),
    };
    Error::parse(at, e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn node_index_examples() {
        let g = GridSpec::global_2p5x3p75();
        assert_eq!(g.node_count(), 7008);
        assert_eq!(g.node_index(0, 0).unwrap(), 0);
        assert_eq!(g.node_index(72, 95).unwrap(), 7007);
        assert_eq!(g.node_index(1, 0).unwrap(), 96);
        assert!(matches!(g.node_index(73, 0), Err(Error::Range { .. })));
        assert!(matches!(g.node_index(0, 96), Err(Error::Range { .. })));
        assert!(g.node_coords(7008).is_err());
    }

    #[test]
    fn global_grid_is_pole_inclusive() {
        let g = GridSpec::global_2p5x3p75();
        g.validate().unwrap();
        assert_eq!(g.lat_of_row(0), 90.0);
        assert_eq!(g.lat_of_row(72), -90.0);
        assert_eq!(g.lon_of_col(95), 356.25);
    }

    #[test]
    fn rejects_oversized_grids() {
        assert!(GridSpec::new(74, 96, 2.5, 3.75, 90.0, 0.0).is_err());
        assert!(GridSpec::new(73, 97, 2.5, 3.75, 90.0, 0.0).is_err());
        assert!(GridSpec::new(0, 1, 1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn pair_count_examples() {
        assert_eq!(NodeMask::all(7008).pair_count(), 24_552_528);
        assert_eq!(pair_count(1330), 883_785);
        assert_eq!(pair_count(1619), 1_309_771);
        assert_eq!(NodeMask::from_nodes(5, [3]).unwrap().pair_count(), 0);
    }

    #[test]
    fn pair_count_matches_enumeration() {
        for k in 0..=100u64 {
            let mut brute = 0u64;
            for i in 0..k {
                for j in 0..k {
                    if i < j {
                        brute += 1;
                    }
                }
            }
            assert_eq!(pair_count(k), brute, "k = {k}");
        }
    }

    #[test]
    fn nearest_wraps_longitude() {
        // Source columns at 350° and 0° (origin 350, step 10, two columns).
        let src = GridSpec::new(1, 2, 1.0, 10.0, 0.0, 350.0).unwrap();
        assert_eq!(src.lon_of_col(0), 350.0);
        assert_eq!(src.lon_of_col(1), 0.0);
        let at = |lon: f64| GridSpec::new(1, 1, 1.0, 1.0, 0.0, lon).unwrap();
        // 359° is 1° from 0° across the seam and 9° from 350°.
        assert_eq!(nearest_source_nodes(&src, &at(359.0)).unwrap(), vec![1]);
        assert_eq!(nearest_source_nodes(&src, &at(354.0)).unwrap(), vec![0]);
        // Exactly half way: smallest id wins.
        assert_eq!(nearest_source_nodes(&src, &at(355.0)).unwrap(), vec![0]);
    }

    #[test]
    fn haversine_basics() {
        assert!(great_circle_distance(10.0, 20.0, 10.0, 20.0).abs() < 1e-15);
        let d = great_circle_distance(0.0, 0.0, 0.0, 90.0);
        assert!((d - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let wrap = great_circle_distance(0.0, 359.0, 0.0, 0.0);
        assert!((wrap - 1f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn mask_csv_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mask.csv");
        let m = NodeMask::from_nodes(4, [0, 2]).unwrap();
        m.store_csv(&p).unwrap();
        assert_eq!(NodeMask::load_csv(&p, 4).unwrap(), m);
        assert!(NodeMask::load_csv(&p, 5).is_err());
        fs::write(&p, "node_id,valid\n0,1\n0,0\n").unwrap();
        assert!(matches!(NodeMask::load_csv(&p, 1), Err(Error::Parse { .. })));
        fs::write(&p, "id,valid\n0,1\n").unwrap();
        assert!(NodeMask::load_csv(&p, 1).is_err());
    }

    proptest! {
        #[test]
        fn node_index_inverts_node_coords(n_lat in 1usize..80, n_lon in 1usize..100, seed in any::<u32>()) {
            let g = GridSpec::regular(n_lat, n_lon).unwrap();
            let id = seed as usize % g.node_count();
            let (i, j) = g.node_coords(id).unwrap();
            prop_assert_eq!(g.node_index(i, j).unwrap(), id);
        }
    }
}
