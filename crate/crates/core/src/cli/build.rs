//! The `build` pipeline and its manifest.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use super::config::{InputKind, RunConfig, ThresholdScope};
use crate::analysis::{
    delay_histogram, heaviest_links_per_year, links_per_year, weight_histogram, HistogramLabel,
};
use crate::error::{Error, Result};
use crate::grid::NodeMask;
use crate::ingest::{compute_anomaly, load_field, store_annual_series, wind_speed, AnomalyField, FieldFormat};
use crate::netbuild::{
    apply_threshold, build_link_weights, build_surrogate_link_weights, estimate_threshold,
    round_to_stored, shuffle_years, store_edges, store_weights, DelayRange, LinkWeightSet, Polarity,
    YearNetwork,
};

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn load_input(cfg: &RunConfig) -> Result<AnomalyField> {
    let load = |p: &PathBuf| load_field(p, FieldFormat::from_path(p));
    let field = match cfg.inputs.as_slice() {
        [single] => load(single)?,
        [u, v] => wind_speed(&load(u)?, &load(v)?)?,
        _ => return Err(Error::invalid("expected 1 or 2 inputs")),
    };
    match cfg.input_kind {
        InputKind::Raw => compute_anomaly(&field),
        InputKind::Anomaly => Ok(AnomalyField::from_precomputed(field)),
    }
}

/// Files written so far, relative to the output directory.
struct Outputs {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn path(&mut self, rel: impl AsRef<Path>) -> Result<PathBuf> {
        let rel = rel.as_ref().to_path_buf();
        let full = self.root.join(&rel);
        if let Some(parent) = full.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        self.written.push(rel);
        Ok(full)
    }

    fn text(&mut self, rel: impl AsRef<Path>, text: &str) -> Result<()> {
        let p = self.path(rel)?;
        fs::write(&p, text).map_err(|e| Error::io(&p, e))
    }
}

/// Runs the pipeline with an already resolved seed and returns the manifest.
pub fn run_build(cfg: &RunConfig, seed: u64) -> Result<Value> {
    cfg.validate()?;
    let delays = DelayRange::new(cfg.tau_max)?;
    let field = load_input(cfg)?;
    let mask = match &cfg.mask {
        Some(p) => NodeMask::load_csv(p, field.node_count())?,
        None => NodeMask::all(field.node_count()),
    };
    let years = cfg.years.clone().unwrap_or(field.years());
    for y in [*years.start(), *years.end()] {
        field.year_index(y)?;
    }

    let mut out = Outputs { root: cfg.output.clone(), written: Vec::new() };
    fs::create_dir_all(&out.root).map_err(|e| Error::io(&out.root, e))?;

    let mut regular = Vec::new();
    for year in years.clone() {
        let mut set = build_link_weights(&field, year, &mask, delays)?;
        round_to_stored(&mut set);
        store_weights(&set, &out.path(format!("weights/regular_{year}.alw"))?)?;
        regular.push(set);
    }
    let mut surrogate = Vec::new();
    if cfg.surrogate {
        let shuffled = shuffle_years(&field, seed);
        for year in years.clone() {
            let mut set = build_surrogate_link_weights(&shuffled, seed, year, &mask, delays)?;
            round_to_stored(&mut set);
            store_weights(&set, &out.path(format!("weights/surrogate_{year}.alw"))?)?;
            surrogate.push(set);
        }
    }

    let mut thresholds = String::from("polarity,year,threshold\n");
    for pol in Polarity::BOTH {
        let tag = pol.short();
        let nets: Vec<YearNetwork> = match cfg.threshold_scope {
            ThresholdScope::Pooled => {
                let t = estimate_threshold(&surrogate, pol, &cfg.threshold)?;
                thresholds.push_str(&format!("{pol},all,{t}\n"));
                regular.iter().map(|s| apply_threshold(s, pol, t)).collect()
            }
            ThresholdScope::PerYear => regular
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let t = estimate_threshold(
                        surrogate.get(i..i + 1).unwrap_or(&[]),
                        pol,
                        &cfg.threshold,
                    )?;
                    thresholds.push_str(&format!("{pol},{},{t}\n", s.year));
                    Ok(apply_threshold(s, pol, t))
                })
                .collect::<Result<_>>()?,
        };
        for net in &nets {
            store_edges(net, &out.path(format!("edges/{tag}_{}.csv", net.year))?)?;
        }
        write_summaries(&mut out, cfg, pol, &regular, &surrogate, &nets)?;
    }
    out.text("thresholds.csv", &thresholds)?;

    let manifest = manifest(cfg, seed, &out.root, &out.written)?;
    let text = serde_json::to_string_pretty(&manifest).expect("JSON values serialise") + "\n";
    let p = out.root.join(MANIFEST);
    fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
    Ok(manifest)
}

fn write_summaries(
    out: &mut Outputs,
    cfg: &RunConfig,
    pol: Polarity,
    regular: &[LinkWeightSet],
    surrogate: &[LinkWeightSet],
    nets: &[YearNetwork],
) -> Result<()> {
    let tag = pol.short();
    let hist = weight_histogram(regular, pol, cfg.bin_width, HistogramLabel::Regular)?;
    out.text(format!("histograms/weights_{tag}_regular.csv"), &hist.to_csv())?;
    if !surrogate.is_empty() {
        let hist = weight_histogram(surrogate, pol, cfg.bin_width, HistogramLabel::Surrogate)?;
        out.text(format!("histograms/weights_{tag}_surrogate.csv"), &hist.to_csv())?;
    }
    store_annual_series(&links_per_year(nets)?, &out.path(format!("links_per_year_{tag}.csv"))?)?;
    out.text(format!("delays_{tag}.csv"), &delay_histogram(nets).to_csv())?;
    for (k, series) in heaviest_links_per_year(regular, pol, &cfg.k_values)? {
        store_annual_series(&series, &out.path(format!("heaviest_{k}_{tag}.csv"))?)?;
    }
    Ok(())
}

fn manifest(cfg: &RunConfig, seed: u64, root: &Path, written: &[PathBuf]) -> Result<Value> {
    let mut config = Map::new();
    for (k, v) in cfg.pairs() {
        config.insert(k.to_string(), Value::String(v));
    }
    config.insert("seed".into(), Value::String(seed.to_string()));
    let inputs = cfg
        .inputs
        .iter()
        .chain(&cfg.mask)
        .map(|p| Ok(json!({ "path": p.display().to_string(), "sha256": sha256_file(p)? })))
        .collect::<Result<Vec<_>>>()?;
    let mut files: Vec<&PathBuf> = written.iter().collect();
    files.sort();
    let outputs = files
        .par_iter()
        .map(|rel| {
            let path = rel.to_string_lossy().replace('\\', "/");
            Ok(json!({ "path": path, "sha256": sha256_file(&root.join(rel))? }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({
        "tool": "climnet",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "config": config,
        "inputs": inputs,
        "outputs": outputs,
    }))
}
