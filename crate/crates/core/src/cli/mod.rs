//! Command-line front end.
//!
//! Every pipeline stage is its own subcommand. All randomness comes from the
//! global `--seed`; without one a seed is drawn, printed to stderr, and
//! recorded wherever the command writes provenance.

mod build;
pub mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use build::{run_build, sha256_file, MANIFEST};
pub use config::{InputKind, RunConfig, ThresholdScope};

use crate::analysis::{
    best_lagged_pearson, delay_histogram, heaviest_links_in_networks, links_per_year, pearson,
};
use crate::error::{Error, Result};
use crate::export::{export_geojson, export_node_degree_csv, LinkMap};
use crate::grid::GridSpec;
use crate::ingest::{
    compute_anomaly, load_annual_series, load_field, store_annual_series, store_field,
    AnnualSeries, FieldFormat,
};
use crate::netbuild::{
    apply_threshold, estimate_threshold, load_edges, load_weights, store_edges, top_k, top_k_pooled,
    LinkWeightSet, Polarity, ThresholdConfig, YearNetwork,
};
use crate::synth::{generate_annual_events, generate_field, PlantSpec};

#[derive(Debug, Parser)]
#[command(name = "climnet", version, about = "Per-year climate correlation networks")]
pub struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// `key = value` run configuration; command-line options win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Subtract the per-day climatology from a field.
    Anomaly {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write a synthetic field with planted couplings.
    Synth(SynthArgs),
    /// Regular and surrogate weights, thresholds, networks and summaries.
    Build(BuildArgs),
    /// Estimate thresholds from surrogate weights and apply them.
    Threshold(ThresholdArgs),
    /// Keep the K heaviest links.
    Topk(TopkArgs),
    /// Summaries of edge lists and their correlation with an event series.
    Analyze(AnalyzeArgs),
    /// GeoJSON link map and node degree table of one edge list.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Grid as `ROWSxCOLS`, pole to pole and all the way round.
    #[arg(long, default_value = "6x6")]
    pub grid: String,
    #[arg(long, default_value = "2000-2004")]
    pub years: String,
    /// `source:target:delay:coupling:noise`, repeatable.
    #[arg(long = "plant")]
    pub plants: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    pub base_sigma: f64,
    #[arg(long)]
    pub output: PathBuf,
    /// Also write a synthetic annual event series here.
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    pub events_start: f64,
    #[arg(long, default_value_t = 0.0)]
    pub events_trend: f64,
    #[arg(long, default_value_t = 2.0)]
    pub events_noise: f64,
}

#[derive(Debug, Args, Default)]
pub struct BuildArgs {
    /// Input field(s); two inputs are read as wind components.
    #[arg(long = "input")]
    pub inputs: Vec<PathBuf>,
    /// Inputs are already anomalies.
    #[arg(long)]
    pub anomaly_input: bool,
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub years: Option<String>,
    #[arg(long)]
    pub tau_max: Option<u16>,
    /// `surrogate-max`, `quantile:Q` or `value:X`.
    #[arg(long)]
    pub threshold: Option<String>,
    /// Estimate one threshold per year instead of pooling years.
    #[arg(long)]
    pub per_year: bool,
    /// Build surrogate networks.
    #[arg(long)]
    pub surrogate: bool,
    /// Comma-separated, descending.
    #[arg(long)]
    pub k_values: Option<String>,
    #[arg(long)]
    pub bin_width: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long = "surrogate", num_args = 1..)]
    pub surrogate: Vec<PathBuf>,
    /// Regular weight files to threshold.
    #[arg(long = "regular", num_args = 1..)]
    pub regular: Vec<PathBuf>,
    #[arg(long, default_value = "surrogate-max")]
    pub mode: String,
    #[arg(long)]
    pub per_year: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TopkArgs {
    #[arg(long = "weights", num_args = 1.., required = true)]
    pub weights: Vec<PathBuf>,
    #[arg(long)]
    pub k: usize,
    /// `pos`, `neg` or `both`.
    #[arg(long, default_value = "both")]
    pub polarity: String,
    /// Cut each year separately instead of one pooled cut.
    #[arg(long)]
    pub per_year: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Edge lists named `<pos|neg>_<year>.csv`.
    #[arg(long = "edges", num_args = 1.., required = true)]
    pub edges: Vec<PathBuf>,
    /// Annual series `year,value` to correlate with.
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long, default_value = "200,100,50")]
    pub k_values: String,
    #[arg(long, default_value_t = 2)]
    pub max_lag: u32,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Edge list named `<pos|neg>_<year>.csv`.
    #[arg(long)]
    pub edges: PathBuf,
    /// Grid as `ROWSxCOLS`.
    #[arg(long, conflicts_with = "field")]
    pub grid: Option<String>,
    /// Take the grid from this field file.
    #[arg(long)]
    pub field: Option<PathBuf>,
    #[arg(long, default_value = "field")]
    pub metric: String,
    #[arg(long)]
    pub geojson: Option<PathBuf>,
    #[arg(long)]
    pub degree: Option<PathBuf>,
}

/// Parses `argv` and runs the command.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    execute(cli)
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(|| dispatch(&cli)),
        None => dispatch(&cli),
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    })
}

fn dispatch(cli: &Cli) -> Result<()> {
    let file_cfg = cli.config.as_deref().map(RunConfig::load).transpose()?;
    match &cli.command {
        Command::Anomaly { input, output } => {
            let field = load_field(input, FieldFormat::from_path(input))?;
            let anomaly = compute_anomaly(&field)?;
            store_field(&anomaly, output, FieldFormat::from_path(output))
        }
        Command::Synth(a) => synth(a, cli.seed.or(file_cfg.and_then(|c| c.seed))),
        Command::Build(a) => {
            let cfg = build_config(file_cfg.unwrap_or_default(), a, cli.seed)?;
            let seed = resolve_seed(cfg.seed);
            let manifest = run_build(&cfg, seed)?;
            let outputs = manifest["outputs"].as_array().map_or(0, Vec::len);
            println!("wrote {outputs} files and {} to {}", MANIFEST, cfg.output.display());
            Ok(())
        }
        Command::Threshold(a) => threshold(a),
        Command::Topk(a) => topk(a),
        Command::Analyze(a) => analyze(a),
        Command::Export(a) => export(a),
    }
}

pub fn build_config(mut cfg: RunConfig, a: &BuildArgs, seed: Option<u64>) -> Result<RunConfig> {
    if !a.inputs.is_empty() {
        cfg.inputs = a.inputs.clone();
    }
    if a.anomaly_input {
        cfg.input_kind = InputKind::Anomaly;
    }
    if let Some(m) = &a.metric {
        cfg.metric = m.clone();
    }
    if let Some(m) = &a.mask {
        cfg.mask = Some(m.clone());
    }
    if let Some(y) = &a.years {
        cfg.years = Some(config::parse_years(y)?);
    }
    if let Some(t) = a.tau_max {
        cfg.tau_max = t;
    }
    if let Some(t) = &a.threshold {
        cfg.threshold = t.parse()?;
    }
    if a.per_year {
        cfg.threshold_scope = ThresholdScope::PerYear;
    }
    if a.surrogate {
        cfg.surrogate = true;
    }
    if let Some(k) = &a.k_values {
        cfg.k_values = config::parse_list(k, "k value")?;
    }
    if let Some(w) = a.bin_width {
        cfg.bin_width = w;
    }
    if let Some(o) = &a.output {
        cfg.output = o.clone();
    }
    if seed.is_some() {
        cfg.seed = seed;
    }
    Ok(cfg)
}

pub fn parse_grid(s: &str) -> Result<GridSpec> {
    let bad = || Error::invalid(format!("bad grid {s:?}, expected ROWSxCOLS"));
    let (r, c) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    GridSpec::regular(r.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?)
}

pub fn parse_plant(s: &str) -> Result<PlantSpec> {
    let bad = || Error::invalid(format!("bad plant {s:?}, expected source:target:delay:coupling:noise"));
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let [src, tgt, delay, coupling, noise] = parts.as_slice() else {
        return Err(bad());
    };
    Ok(PlantSpec {
        source: src.parse().map_err(|_| bad())?,
        target: tgt.parse().map_err(|_| bad())?,
        delay: delay.parse().map_err(|_| bad())?,
        coupling: coupling.parse().map_err(|_| bad())?,
        noise_sigma: noise.parse().map_err(|_| bad())?,
    })
}

fn synth(a: &SynthArgs, seed: Option<u64>) -> Result<()> {
    let seed = resolve_seed(seed);
    let grid = parse_grid(&a.grid)?;
    let years = config::parse_years(&a.years)?;
    let plants = a.plants.iter().map(|p| parse_plant(p)).collect::<Result<Vec<_>>>()?;
    let field = generate_field(&grid, years.clone(), &plants, a.base_sigma, seed)?;
    store_field(&field, &a.output, FieldFormat::from_path(&a.output))?;
    if let Some(path) = &a.events {
        let events = generate_annual_events(years, a.events_start, a.events_trend, a.events_noise, seed);
        store_annual_series(&events, path)?;
    }
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn load_all(paths: &[PathBuf]) -> Result<Vec<LinkWeightSet>> {
    let mut sets = paths.iter().map(|p| load_weights(p)).collect::<Result<Vec<_>>>()?;
    sets.sort_by_key(|s| s.year);
    if sets.windows(2).any(|w| w[0].year == w[1].year) {
        return Err(Error::invalid("two weight files for the same year"));
    }
    Ok(sets)
}

fn polarities(s: &str) -> Result<Vec<Polarity>> {
    if s == "both" {
        Ok(Polarity::BOTH.to_vec())
    } else {
        Ok(vec![s.parse()?])
    }
}

fn store_networks(nets: &[YearNetwork], dir: &Path) -> Result<()> {
    for net in nets {
        store_edges(net, &dir.join(format!("{}_{}.csv", net.polarity.short(), net.year)))?;
    }
    Ok(())
}

fn threshold(a: &ThresholdArgs) -> Result<()> {
    let cfg: ThresholdConfig = a.mode.parse()?;
    if cfg.needs_surrogate() && a.surrogate.is_empty() {
        return Err(Error::invalid(format!("threshold {cfg} needs --surrogate weight files")));
    }
    let surrogate = load_all(&a.surrogate)?;
    let regular = load_all(&a.regular)?;
    create_dir(&a.out_dir)?;
    let mut table = String::from("polarity,year,threshold\n");
    for pol in Polarity::BOTH {
        if a.per_year {
            let years: Vec<i32> = if regular.is_empty() {
                surrogate.iter().map(|s| s.year).collect()
            } else {
                regular.iter().map(|s| s.year).collect()
            };
            for year in years {
                let sur: Vec<LinkWeightSet> =
                    surrogate.iter().filter(|s| s.year == year).cloned().collect();
                if cfg.needs_surrogate() && sur.is_empty() {
                    return Err(Error::invalid(format!("no surrogate weights for {year}")));
                }
                let t = estimate_threshold(&sur, pol, &cfg)?;
                table.push_str(&format!("{pol},{year},{t}\n"));
                if let Some(reg) = regular.iter().find(|s| s.year == year) {
                    store_networks(&[apply_threshold(reg, pol, t)], &a.out_dir)?;
                }
            }
        } else {
            let t = estimate_threshold(&surrogate, pol, &cfg)?;
            table.push_str(&format!("{pol},all,{t}\n"));
            let nets: Vec<_> = regular.iter().map(|s| apply_threshold(s, pol, t)).collect();
            store_networks(&nets, &a.out_dir)?;
        }
    }
    print!("{table}");
    let p = a.out_dir.join("thresholds.csv");
    fs::write(&p, table).map_err(|e| Error::io(&p, e))
}

fn topk(a: &TopkArgs) -> Result<()> {
    let sets = load_all(&a.weights)?;
    create_dir(&a.out_dir)?;
    for pol in polarities(&a.polarity)? {
        let nets = if a.per_year {
            sets.iter().map(|s| top_k(s, pol, a.k)).collect()
        } else {
            top_k_pooled(&sets, pol, a.k)
        };
        store_networks(&nets, &a.out_dir)?;
    }
    Ok(())
}

/// Polarity and year from an edge-list file name such as `pos_1998.csv`.
pub fn edge_file_key(path: &Path) -> Result<(Polarity, i32)> {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    let bad = || {
        Error::invalid(format!(
            "cannot read polarity and year from {}; expected <pos|neg>_<year>.csv",
            path.display()
        ))
    };
    let (pol, year) = stem.rsplit_once('_').ok_or_else(bad)?;
    let pol = pol.rsplit('_').next().unwrap_or(pol);
    Ok((pol.parse().map_err(|_| bad())?, year.parse().map_err(|_| bad())?))
}

fn analyze(a: &AnalyzeArgs) -> Result<()> {
    let k_values: Vec<usize> = config::parse_list(&a.k_values, "k value")?;
    let mut by_pol: BTreeMap<Polarity, Vec<YearNetwork>> = BTreeMap::new();
    for p in &a.edges {
        let (pol, year) = edge_file_key(p)?;
        by_pol.entry(pol).or_default().push(load_edges(p, year, pol)?);
    }
    let events = a.events.as_deref().map(load_annual_series).transpose()?;
    create_dir(&a.out_dir)?;
    let mut report = String::from("series,events,kind,lag,r\n");
    for (pol, mut nets) in by_pol {
        nets.sort_by_key(|n| n.year);
        let tag = pol.short();
        let mut series: Vec<(String, AnnualSeries)> =
            vec![(format!("links_per_year_{tag}"), links_per_year(&nets)?)];
        for (k, s) in heaviest_links_in_networks(&nets, &k_values)?.into_iter().rev() {
            series.push((format!("heaviest_{k}_{tag}"), s));
        }
        for (name, s) in &series {
            store_annual_series(s, &a.out_dir.join(format!("{name}.csv")))?;
        }
        let p = a.out_dir.join(format!("delays_{tag}.csv"));
        fs::write(&p, delay_histogram(&nets).to_csv()).map_err(|e| Error::io(&p, e))?;
        if let (Some(ev), Some(evp)) = (&events, &a.events) {
            let ev_name = evp.file_stem().map_or("events".into(), |s| s.to_string_lossy());
            for (name, s) in &series {
                let r = pearson(s, ev)?;
                report.push_str(&format!("{name},{ev_name},pearson,0,{r}\n"));
                let best = best_lagged_pearson(s, ev, a.max_lag)?;
                report.push_str(&format!("{name},{ev_name},best_lag,{},{}\n", best.lag, best.r));
            }
        }
    }
    if events.is_some() {
        let p = a.out_dir.join("correlation.csv");
        print!("{report}");
        fs::write(&p, report).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

fn export(a: &ExportArgs) -> Result<()> {
    let grid = match (&a.grid, &a.field) {
        (Some(g), _) => parse_grid(g)?,
        (None, Some(f)) => *load_field(f, FieldFormat::from_path(f))?.grid(),
        (None, None) => GridSpec::global_2p5x3p75(),
    };
    let (pol, year) = edge_file_key(&a.edges)?;
    let network = load_edges(&a.edges, year, pol)?;
    if let Some(p) = &a.geojson {
        export_geojson(&LinkMap { grid: &grid, network: &network, metric: &a.metric }, p)?;
    }
    if let Some(p) = &a.degree {
        export_node_degree_csv(&network, &grid, p)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_file_names() {
        assert_eq!(edge_file_key(Path::new("x/pos_1998.csv")).unwrap(), (Polarity::Positive, 1998));
        assert_eq!(edge_file_key(Path::new("top_neg_2001.csv")).unwrap(), (Polarity::Negative, 2001));
        assert!(edge_file_key(Path::new("edges.csv")).is_err());
    }

    #[test]
    fn plant_and_grid_strings() {
        let p = parse_plant("8:21:2:0.9:0.1").unwrap();
        assert_eq!((p.source, p.target, p.delay), (8, 21, 2));
        assert!(parse_plant("1:2:3").is_err());
        assert_eq!(parse_grid("73x96").unwrap(), GridSpec::global_2p5x3p75());
        assert!(parse_grid("73").is_err());
    }
}
