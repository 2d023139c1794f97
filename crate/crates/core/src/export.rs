//! GeoJSON link maps and per-node degree tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::netbuild::{Edge, YearNetwork};

#[derive(Debug, Clone)]
pub struct LinkMap<'a> {
    pub grid: &'a GridSpec,
    pub network: &'a YearNetwork,
    pub metric: &'a str,
}

/// Longitude in [-180, 180).
pub fn signed_lon(lon: f64) -> f64 {
    (lon + 180.0).rem_euclid(360.0) - 180.0
}

/// Straight segments from `(lon1, lat1)` to `(lon2, lat2)` along the shorter
/// way round, split in two where that way crosses the antimeridian.
pub fn split_segment(lon1: f64, lat1: f64, lon2: f64, lat2: f64) -> Vec<[[f64; 2]; 2]> {
    let (a, b) = (signed_lon(lon1), signed_lon(lon2));
    let d = b - a;
    if d.abs() <= 180.0 {
        return vec![[[a, lat1], [b, lat2]]];
    }
    // Crossing eastwards (d < -180) meets +180 first; westwards meets -180.
    let (unwrapped, seam) = if d < 0.0 { (b + 360.0, 180.0) } else { (b - 360.0, -180.0) };
    let f = (seam - a) / (unwrapped - a);
    let lat_x = lat1 + f * (lat2 - lat1);
    vec![[[a, lat1], [seam, lat_x]], [[-seam, lat_x], [b, lat2]]]
}

fn endpoint(grid: &GridSpec, node: u32) -> Result<(f64, f64)> {
    grid.node_lat_lon(node as usize)
        .map_err(|_| Error::invalid(format!("edge endpoint {node} is not a grid node")))
}

pub fn geojson(map: &LinkMap<'_>) -> Result<Value> {
    let mut features = Vec::with_capacity(map.network.len());
    for e in &map.network.edges {
        let (lat_m, lon_m) = endpoint(map.grid, e.m)?;
        let (lat_n, lon_n) = endpoint(map.grid, e.n)?;
        let parts = split_segment(lon_m, lat_m, lon_n, lat_n);
        let n_parts = parts.len();
        for (i, seg) in parts.into_iter().enumerate() {
            features.push(json!({
                "type": "Feature",
                "geometry": { "type": "LineString", "coordinates": seg },
                "properties": properties(map, e, i, n_parts),
            }));
        }
    }
    Ok(json!({ "type": "FeatureCollection", "features": features }))
}

fn properties(map: &LinkMap<'_>, e: &Edge, part: usize, parts: usize) -> Value {
    json!({
        "m": e.m,
        "n": e.n,
        "weight": e.weight,
        "tau": e.tau,
        "year": map.network.year,
        "polarity": map.network.polarity.to_string(),
        "metric": map.metric,
        "part": part,
        "parts": parts,
    })
}

pub fn export_geojson(map: &LinkMap<'_>, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&geojson(map)?).expect("JSON values serialise");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// `node_id,lat,lon,degree` for nodes with at least one edge, by degree
/// descending then node id.
pub fn node_degree_csv(network: &YearNetwork, grid: &GridSpec) -> Result<String> {
    let mut degree: BTreeMap<u32, usize> = BTreeMap::new();
    for e in &network.edges {
        *degree.entry(e.m).or_default() += 1;
        *degree.entry(e.n).or_default() += 1;
    }
    let mut rows: Vec<(u32, usize)> = degree.into_iter().collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut out = String::from("node_id,lat,lon,degree\n");
    for (node, deg) in rows {
        let (lat, lon) = endpoint(grid, node)?;
        out.push_str(&format!("{node},{lat},{},{deg}\n", signed_lon(lon)));
    }
    Ok(out)
}

pub fn export_node_degree_csv(network: &YearNetwork, grid: &GridSpec, path: &Path) -> Result<()> {
    let text = node_degree_csv(network, grid)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
