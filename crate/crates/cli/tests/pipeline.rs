//! End-to-end exercises of the staged pipeline on a coarse grid, plus the
//! error-surface contract of the configuration loader.

use std::fs;
use std::path::{Path, PathBuf};

use swsynth_cli::commands;
use swsynth_cli::config::RunConfig;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn coarse_config(dir: &Path) -> PathBuf {
    let mut cfg = RunConfig::load(&config_path("linear3.toml")).unwrap();
    cfg.domain.grid_step = vec![0.5, 0.5];
    cfg.abstraction.refine_pitch = Some(0.0625);
    // realign the second obstacle with the coarse grid
    for r in cfg.regions.iter_mut() {
        if r.label == "Obs" && r.lower == vec![0.5, 0.75] {
            r.lower = vec![0.5, 0.5];
            r.upper = vec![1.0, 1.0];
        }
    }
    let path = dir.join("coarse.toml");
    fs::write(&path, toml::to_string(&cfg).unwrap()).unwrap();
    path
}

#[test]
fn staged_pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    let cfg = coarse_config(base);
    let data = base.join("data.csv");
    let learned = base.join("learned.json");
    let imdp = base.join("imdp.json");
    let result = base.join("result.json");
    let heatmap = base.join("heatmap.csv");
    let dfa_table = base.join("dfa.txt");
    let report = base.join("report.json");
    let traces = base.join("traces");

    commands::gen_data("linear3", 80, 3, &data).unwrap();
    commands::learn(&cfg, Some(&data), Some(&learned)).unwrap();
    commands::abstract_system(&cfg, Some(&learned), Some(&imdp), None).unwrap();
    commands::synthesize(
        &cfg,
        Some(&imdp),
        Some(&result),
        Some(&heatmap),
        Some(&dfa_table),
    )
    .unwrap();
    commands::validate(
        &cfg,
        "linear3",
        Some(&result),
        "yes:3",
        Some(120),
        Some(5),
        Some(&report),
        Some(&traces),
    )
    .unwrap();
    commands::sweep_eta(&cfg, Some(&learned), "0.75,0.99", &base.join("sweep")).unwrap();

    // explicit cell-index selection works too
    commands::validate(
        &cfg,
        "linear3",
        Some(&result),
        "0,5",
        Some(30),
        Some(5),
        Some(&base.join("report_idx.json")),
        None,
    )
    .unwrap();

    // artifact sanity
    let heat = fs::read_to_string(&heatmap).unwrap();
    assert!(heat.starts_with("x1,x2,lower,upper,upper_opt,gap,class"));
    assert_eq!(heat.lines().count(), 64 + 1);
    let table = fs::read_to_string(&dfa_table).unwrap();
    assert!(table.contains("ap Des Obs"));
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rep["cells"].as_array().unwrap().len(), 3);
    assert!(traces.read_dir().unwrap().count() >= 1);
    let sweep = fs::read_to_string(base.join("sweep/sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 3);
}

#[test]
fn gen_data_is_seed_deterministic_and_supports_empty() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    commands::gen_data("linear3", 25, 11, &a).unwrap();
    commands::gen_data("linear3", 25, 11, &b).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let empty = dir.path().join("empty.csv");
    commands::gen_data("nonlin4", 0, 1, &empty).unwrap();
    assert_eq!(fs::read_to_string(&empty).unwrap(), "u,x1,x2,xp1,xp2\n");
}

#[test]
fn unknown_config_keys_are_rejected_with_a_config_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let mut text = fs::read_to_string(config_path("linear3.toml")).unwrap();
    text.push_str("\n[abstraction]\nnonexistent_knob = 3\n");
    fs::write(&path, text).unwrap();
    let err = RunConfig::load(&path).unwrap_err();
    assert_eq!(err.code, 2);

    // formula atoms must come from the declared labels
    let mut cfg = RunConfig::load(&config_path("linear3.toml")).unwrap();
    cfg.formula.text = "F Nowhere".into();
    let bad_formula = dir.path().join("bad_formula.toml");
    fs::write(&bad_formula, toml::to_string(&cfg).unwrap()).unwrap();
    let data = dir.path().join("d.csv");
    commands::gen_data("linear3", 10, 1, &data).unwrap();
    let learned = dir.path().join("l.json");
    let coarse = coarse_config(dir.path());
    commands::learn(&coarse, Some(&data), Some(&learned)).unwrap();
    let imdp = dir.path().join("i.json");
    commands::abstract_system(&coarse, Some(&learned), Some(&imdp), None).unwrap();
    // reuse the abstraction, but synthesize with the undeclared atom
    let mut bad = RunConfig::load(&coarse).unwrap();
    bad.formula.text = "F Nowhere".into();
    let bad_path = dir.path().join("bad2.toml");
    fs::write(&bad_path, toml::to_string(&bad).unwrap()).unwrap();
    let err = commands::synthesize(
        &bad_path,
        Some(&imdp),
        Some(&dir.path().join("r.json")),
        None,
        None,
    )
    .unwrap_err();
    assert_eq!(err.code, 2);
    assert!(err.message.contains("Nowhere"));
}

#[test]
fn learn_fails_loudly_on_a_missing_mode() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    // only modes 1 and 2 present, config declares three
    fs::write(
        &data,
        "u,x1,x2,xp1,xp2\n1,0.1,0.2,0.0,0.1\n2,0.4,0.1,0.2,0.0\n1,0.0,0.0,0.1,0.1\n",
    )
    .unwrap();
    let cfg = coarse_config(dir.path());
    let err = commands::learn(&cfg, Some(&data), Some(&dir.path().join("l.json"))).unwrap_err();
    assert!(err.message.contains("mode 3"), "message: {}", err.message);
}
