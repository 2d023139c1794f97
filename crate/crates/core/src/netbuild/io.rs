//! `ALW1` weight files and CSV edge lists.
//!
//! `ALW1` layout, little-endian: magic, `i32 year`, `u32 node_count`,
//! `u16 tau_max`, then one 21-byte record per pair in ascending `(m, n)`:
//! `u32 m, u32 n, f32 P, f32 N, i16 tau_P, i16 tau_N, u8 flags`.
//! Weights are narrowed to `f32` on disk. The node mask is not stored; it is
//! rebuilt as the set of nodes that appear in some pair.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::types::{DelayRange, Edge, LinkWeightSet, PairWeight, Polarity, YearNetwork};
use crate::error::{Error, Result};
use crate::grid::{csv_error, pair_count, NodeMask};

pub const ALW_MAGIC: &[u8; 4] = b"ALW1";
pub const ALW_HEADER_LEN: usize = 4 + 4 + 4 + 2;
pub const ALW_RECORD_LEN: usize = 4 + 4 + 4 + 4 + 2 + 2 + 1;

pub fn encode_weights(set: &LinkWeightSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(ALW_HEADER_LEN + ALW_RECORD_LEN * set.pairs.len());
    out.extend_from_slice(ALW_MAGIC);
    out.extend_from_slice(&set.year.to_le_bytes());
    out.extend_from_slice(&set.node_count.to_le_bytes());
    out.extend_from_slice(&set.delays.tau_max().to_le_bytes());
    for p in &set.pairs {
        out.extend_from_slice(&p.m.to_le_bytes());
        out.extend_from_slice(&p.n.to_le_bytes());
        out.extend_from_slice(&(p.positive as f32).to_le_bytes());
        out.extend_from_slice(&(p.negative as f32).to_le_bytes());
        out.extend_from_slice(&p.tau_positive.to_le_bytes());
        out.extend_from_slice(&p.tau_negative.to_le_bytes());
        out.push(p.flags);
    }
    out
}

pub fn decode_weights(bytes: &[u8], loc: &str) -> Result<LinkWeightSet> {
    let at = |offset: usize| format!("{loc} byte {offset}");
    if bytes.len() < 4 || &bytes[..4] != ALW_MAGIC {
        return Err(Error::parse(at(0), "bad magic"));
    }
    if bytes.len() < ALW_HEADER_LEN {
        return Err(Error::parse(at(bytes.len()), "truncated header"));
    }
    let year = i32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    let node_count = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    let tau_max = u16::from_le_bytes(bytes[12..14].try_into().expect("2 bytes"));
    let delays = DelayRange::new(tau_max).map_err(|e| Error::parse(at(12), e.to_string()))?;
    let body = &bytes[ALW_HEADER_LEN..];
    if !body.len().is_multiple_of(ALW_RECORD_LEN) {
        let whole = body.len() / ALW_RECORD_LEN * ALW_RECORD_LEN;
        return Err(Error::parse(
            at(ALW_HEADER_LEN + whole),
            "truncated pair record",
        ));
    }
    let mut pairs = Vec::with_capacity(body.len() / ALW_RECORD_LEN);
    let mut nodes = BTreeSet::new();
    for (i, r) in body.chunks_exact(ALW_RECORD_LEN).enumerate() {
        let offset = ALW_HEADER_LEN + i * ALW_RECORD_LEN;
        let u32_at = |o: usize| u32::from_le_bytes(r[o..o + 4].try_into().expect("4 bytes"));
        let f32_at = |o: usize| f32::from_le_bytes(r[o..o + 4].try_into().expect("4 bytes"));
        let i16_at = |o: usize| i16::from_le_bytes(r[o..o + 2].try_into().expect("2 bytes"));
        let p = PairWeight {
            m: u32_at(0),
            n: u32_at(4),
            positive: f32_at(8) as f64,
            negative: f32_at(12) as f64,
            tau_positive: i16_at(16),
            tau_negative: i16_at(18),
            flags: r[20],
        };
        if p.m >= p.n || p.n >= node_count {
            return Err(Error::parse(
                at(offset),
                format!("invalid pair ({}, {}) for {node_count} nodes", p.m, p.n),
            ));
        }
        if let Some(prev) = pairs.last().map(|q: &PairWeight| (q.m, q.n)) {
            if prev >= (p.m, p.n) {
                return Err(Error::parse(at(offset), "pairs not in ascending order"));
            }
        }
        nodes.insert(p.m as usize);
        nodes.insert(p.n as usize);
        pairs.push(p);
    }
    if pairs.len() as u64 != pair_count(nodes.len() as u64) {
        return Err(Error::parse(
            loc.to_string(),
            format!(
                "{} pairs do not cover all pairs of {} nodes",
                pairs.len(),
                nodes.len()
            ),
        ));
    }
    let mask = NodeMask::from_nodes(node_count as usize, nodes)?;
    Ok(LinkWeightSet {
        year,
        node_count,
        delays,
        mask,
        pairs,
    })
}

/// Rounds the weights to the precision they have on disk, so that results
/// computed before and after a store/load round trip agree.
pub fn round_to_stored(set: &mut LinkWeightSet) {
    for p in &mut set.pairs {
        p.positive = p.positive as f32 as f64;
        p.negative = p.negative as f32 as f64;
    }
}

pub fn store_weights(set: &LinkWeightSet, path: &Path) -> Result<()> {
    fs::write(path, encode_weights(set)).map_err(|e| Error::io(path, e))
}

pub fn load_weights(path: &Path) -> Result<LinkWeightSet> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_weights(&bytes, &path.display().to_string())
}

pub fn edges_to_csv(network: &YearNetwork) -> String {
    let mut out = String::from("m,n,weight,tau\n");
    for e in &network.edges {
        out.push_str(&format!("{},{},{},{}\n", e.m, e.n, e.weight, e.tau));
    }
    out
}

pub fn store_edges(network: &YearNetwork, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(edges_to_csv(network).as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Reads an edge list; the year and polarity are not part of the file.
pub fn load_edges(path: &Path, year: i32, polarity: Polarity) -> Result<YearNetwork> {
    let loc = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::parse(loc.clone(), format!("{other:?}")),
        })?;
    let headers = rdr.headers().map_err(|e| csv_error(&loc, e))?;
    if headers != vec!["m", "n", "weight", "tau"] {
        return Err(Error::parse(format!("{loc}:1"), "expected header `m,n,weight,tau`"));
    }
    let mut edges = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(&loc, e))?;
        let at = format!("{loc}:{}", rec.position().map_or(0, |p| p.line()));
        let field = |i: usize| rec.get(i).unwrap_or("");
        let bad = |what: &str| Error::parse(at.clone(), format!("bad {what} in {:?}", rec.as_slice()));
        let e = Edge {
            m: field(0).parse().map_err(|_| bad("m"))?,
            n: field(1).parse().map_err(|_| bad("n"))?,
            weight: field(2).parse().map_err(|_| bad("weight"))?,
            tau: field(3).parse().map_err(|_| bad("tau"))?,
        };
        if e.m >= e.n {
            return Err(Error::parse(at, format!("edge ({}, {}) must have m < n", e.m, e.n)));
        }
        edges.push(e);
    }
    edges.sort_by_key(|e| (e.m, e.n));
    if edges.windows(2).any(|w| (w[0].m, w[0].n) == (w[1].m, w[1].n)) {
        return Err(Error::parse(loc, "duplicate edge"));
    }
    Ok(YearNetwork {
        year,
        polarity,
        edges,
    })
}
