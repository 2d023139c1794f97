use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use climnet::grid::GridSpec;
use climnet::ingest::{store_field, DailyField, FieldFormat};
use serde_json::Value;

fn climnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_climnet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, grid: &str, years: &str, plants: &[&str], seed: &str) -> PathBuf {
    let path = dir.join("field.agf");
    let mut args = vec!["--seed", seed, "synth", "--grid", grid, "--years", years, "--output", s(&path)];
    for p in plants {
        args.extend(["--plant", p]);
    }
    let out = climnet(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn anomaly_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = climnet(&["anomaly", "--input", s(&dir.path().join("nope.agf")), "--output", "x.agf"]);
    assert_eq!(code(&missing), 2);
    assert!(!missing.stderr.is_empty());

    let one_year = dir.path().join("one.csv");
    let f = DailyField::filled(GridSpec::regular(2, 2).unwrap(), 2000..=2000, 1.0).unwrap();
    store_field(&f, &one_year, FieldFormat::Csv).unwrap();
    let out = climnet(&["anomaly", "--input", s(&one_year), "--output", s(&dir.path().join("a.agf"))]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("anomaly requires ≥ 2 years"));

    let field = synth(dir.path(), "3x4", "2000-2002", &[], "1");
    let anomaly = dir.path().join("anomaly.csv");
    assert_eq!(code(&climnet(&["anomaly", "--input", s(&field), "--output", s(&anomaly)])), 0);
    assert!(fs::read_to_string(&anomaly).unwrap().starts_with("#AGF-CSV,v1,"));
}

#[test]
fn build_is_complete_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let field = synth(dir.path(), "12x12", "1990-1999", &["10:50:1:0.8:0.2"], "3");
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let run = |out: &Path, threads: &str| {
        climnet(&[
            "--seed", "11", "--threads", threads, "build", "--input", s(&field), "--tau-max", "10",
            "--surrogate", "--output", s(out),
        ])
    };
    let first = run(&out_a, "1");
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    let m = manifest(&out_a);
    assert_eq!(m["seed"], 11);
    let outputs = m["outputs"].as_array().unwrap();
    let weights: Vec<&str> = outputs
        .iter()
        .map(|o| o["path"].as_str().unwrap())
        .filter(|p| p.ends_with(".alw"))
        .collect();
    assert_eq!(weights.len(), 2 * 10);
    for year in 1990..=1999 {
        assert!(weights.contains(&format!("weights/regular_{year}.alw").as_str()));
        assert!(weights.contains(&format!("weights/surrogate_{year}.alw").as_str()));
    }
    for file in ["thresholds.csv", "links_per_year_pos.csv", "delays_neg.csv", "heaviest_50_pos.csv"] {
        assert!(out_a.join(file).exists(), "{file}");
    }

    let before = fs::read(out_a.join("manifest.json")).unwrap();
    assert_eq!(code(&run(&out_a, "1")), 0);
    assert_eq!(fs::read(out_a.join("manifest.json")).unwrap(), before);

    assert_eq!(code(&run(&out_b, "3")), 0);
    assert_eq!(manifest(&out_b)["outputs"], m["outputs"]);
}

#[test]
fn build_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let field = synth(dir.path(), "3x3", "2000-2002", &[], "2");
    let out = dir.path().join("o");
    let zero = climnet(&["--seed", "1", "build", "--input", s(&field), "--tau-max", "0", "--surrogate", "--output", s(&out)]);
    assert_eq!(code(&zero), 1);
    let no_surrogate = climnet(&["--seed", "1", "build", "--input", s(&field), "--output", s(&out)]);
    assert_eq!(code(&no_surrogate), 1);
    let missing = climnet(&["build", "--input", s(&dir.path().join("none.agf")), "--surrogate", "--output", s(&out)]);
    assert_eq!(code(&missing), 2);
}

#[test]
fn config_file_drives_build_and_omitted_seed_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let field = synth(dir.path(), "4x4", "2000-2003", &[], "5");
    let out = dir.path().join("run");
    let cfg = dir.path().join("run.conf");
    fs::write(
        &cfg,
        format!(
            "metric = test\ninput = {}\ntau_max = 3\nthreshold = value:2.5\nthreshold_scope = per-year\n\
             k_values = 20, 10\noutput = {}\n",
            field.display(),
            out.display()
        ),
    )
    .unwrap();
    let res = climnet(&["--config", s(&cfg), "build"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(String::from_utf8_lossy(&res.stderr).contains("seed: "));
    let m = manifest(&out);
    assert_eq!(m["config"]["metric"], "test");
    assert_eq!(m["config"]["seed"], m["seed"].to_string());
    let thresholds = fs::read_to_string(out.join("thresholds.csv")).unwrap();
    assert!(thresholds.contains("positive,2001,2.5"));
    assert!(out.join("heaviest_20_neg.csv").exists());
    assert!(!out.join("weights/surrogate_2000.alw").exists());

    let bad = dir.path().join("bad.conf");
    fs::write(&bad, "tau_max = lots\n").unwrap();
    assert_eq!(code(&climnet(&["--config", s(&bad), "build"])), 2);
}

#[test]
fn downstream_commands() {
    let dir = tempfile::tempdir().unwrap();
    let field = synth(dir.path(), "6x8", "2000-2004", &["3:20:1:0.9:0.1", "30:31:0:0.9:0.1"], "7");
    let built = dir.path().join("built");
    let res = climnet(&["--seed", "4", "build", "--input", s(&field), "--tau-max", "5", "--surrogate", "--output", s(&built)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let w = |kind: &str, y: i32| built.join(format!("weights/{kind}_{y}.alw"));

    // threshold
    let th = dir.path().join("th");
    let mut args = vec!["threshold".to_string(), "--mode".into(), "surrogate-max".into()];
    args.push("--surrogate".into());
    args.extend((2000..=2004).map(|y| w("surrogate", y).display().to_string()));
    args.push("--regular".into());
    args.extend((2000..=2004).map(|y| w("regular", y).display().to_string()));
    args.extend(["--out-dir".into(), th.display().to_string()]);
    let res = climnet(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    for y in 2000..=2004 {
        assert_eq!(
            fs::read(th.join(format!("pos_{y}.csv"))).unwrap(),
            fs::read(built.join(format!("edges/pos_{y}.csv"))).unwrap()
        );
    }

    // topk
    let tk = dir.path().join("tk");
    let mut args = vec!["topk".to_string(), "--k".into(), "7".into(), "--polarity".into(), "pos".into()];
    args.push("--weights".into());
    args.extend((2000..=2004).map(|y| w("regular", y).display().to_string()));
    args.extend(["--out-dir".into(), tk.display().to_string()]);
    assert_eq!(code(&climnet(&args.iter().map(String::as_str).collect::<Vec<_>>())), 0);
    let total: usize = (2000..=2004)
        .map(|y| fs::read_to_string(tk.join(format!("pos_{y}.csv"))).unwrap().lines().count() - 1)
        .sum();
    assert_eq!(total, 7);

    // analyze: self-correlation and the three heaviest-K series
    let an = dir.path().join("an");
    let mut edges: Vec<String> =
        (2000..=2004).map(|y| built.join(format!("edges/pos_{y}.csv")).display().to_string()).collect();
    let mut args = vec!["analyze".to_string(), "--out-dir".into(), an.display().to_string(), "--edges".into()];
    args.append(&mut edges.clone());
    assert_eq!(code(&climnet(&args.iter().map(String::as_str).collect::<Vec<_>>())), 0);
    for k in [200, 100, 50] {
        assert!(an.join(format!("heaviest_{k}_pos.csv")).exists());
    }
    let events = dir.path().join("events.csv");
    let counts = fs::read_to_string(an.join("links_per_year_pos.csv")).unwrap();
    fs::write(&events, &counts).unwrap();
    args.extend(["--events".into(), events.display().to_string()]);
    let res = climnet(&args.iter().map(String::as_str).collect::<Vec<_>>());
    let report = fs::read_to_string(an.join("correlation.csv"));
    let distinct: std::collections::BTreeSet<_> = counts.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().to_string()).collect();
    if distinct.len() > 1 {
        assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
        let report = report.unwrap();
        let row = report.lines().find(|l| l.starts_with("links_per_year_pos,events,pearson,")).unwrap();
        assert_eq!(row.rsplit(',').next().unwrap().parse::<f64>().unwrap(), 1.0);
    } else {
        assert_eq!(code(&res), 1);
    }

    let disjoint = dir.path().join("old.csv");
    fs::write(&disjoint, "year,value\n1900,1\n1901,2\n1902,5\n").unwrap();
    let last = args.len() - 1;
    args[last] = disjoint.display().to_string();
    let res = climnet(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code(&res), 1);
    assert!(String::from_utf8_lossy(&res.stderr).contains("overlapping"));

    // export
    let geo = dir.path().join("map.geojson");
    let deg = dir.path().join("deg.csv");
    edges.truncate(1);
    let res = climnet(&[
        "export", "--edges", &edges[0], "--grid", "6x8", "--metric", "synthetic", "--geojson", s(&geo),
        "--degree", s(&deg),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&geo).unwrap()).unwrap();
    assert_eq!(v["type"], "FeatureCollection");
    assert!(fs::read_to_string(&deg).unwrap().starts_with("node_id,lat,lon,degree\n"));
}
