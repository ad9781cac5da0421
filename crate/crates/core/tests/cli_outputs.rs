use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use proptest::prelude::*;
use vpmac::cli::output::{SUMMARY_HEADER, TABLE_HEADER, TRACE_HEADER};
use vpmac::cli::{execute, main_with_args, preset, Cli, Job, RunConfig};
use vpmac::mac::{FeedbackMode, StepSchedule};
use vpmac::sim::{EventAction, ScheduledEvent};

const CONFIG: &str = r#"
schema = 1
name = "small"
seeds = 2

[scenario]
horizon = 500
initial_users = 4
initial_p = 0.0
seed = 77
utility_ema_weight = 0.01
mode = "two_step"
events = [{ slot = 200, action = { join = 2 } }, { slot = 400, action = { leave = 3 } }]

[scenario.channel]
kind = "threshold_fading"
states = [{ probability = 0.3, capacity = 4 }, { probability = 0.7, capacity = 6 }]

[scenario.design]
source = "derive"
epsilon_v = 0.01
b_margin = 0.01
utility = { kind = "energy_weighted_throughput", energy_cost = 0.3 }

[scenario.schedule]
kind = "constant"
alpha = 0.05

[scenario.estimator]
initial_value = 1.0
kind = { kind = "ema", weight = 0.01 }
"#;

fn invoke(args: &[&str]) -> (Vec<PathBuf>, String) {
    let cli = Cli::try_parse_from(std::iter::once("vpmac").chain(args.iter().copied())).unwrap();
    let mut out = Vec::new();
    let files = execute(&cli, &mut out).unwrap();
    (files, String::from_utf8(out).unwrap())
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.toml");
    fs::write(&path, CONFIG).unwrap();
    path
}

#[test]
fn trace_rows_follow_stride() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("out");
    for stride in [1u64, 7, 500, 1000] {
        let (files, stdout) = invoke(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--stride",
            &stride.to_string(),
        ]);
        assert!(stdout.contains("small"));
        let csv_path = &files[0];
        let text = fs::read_to_string(csv_path).unwrap();
        assert_eq!(
            text.lines().count() as u64,
            500u64.div_ceil(stride) + 1,
            "stride {stride}"
        );
        let (header, rows) = read_csv(csv_path);
        assert_eq!(header, TRACE_HEADER);
        assert_eq!(rows[0][0], "1");
        let meta = read_json(&files[1]);
        assert_eq!(meta["schema_version"], 1);
        assert_eq!(meta["stride"], stride);
        assert_eq!(meta["stage_boundaries"], serde_json::json!([200, 400]));
        assert!(meta["leave_policy"].as_str().unwrap().contains("random"));
    }
}

#[test]
fn sweep_writes_summary_with_seed_count_and_spread() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("sweep");
    let (files, stdout) = invoke(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seeds",
        "3",
    ]);
    assert!(stdout.contains("3 seeds"));
    for seed in 77..80 {
        assert!(out.join(format!("small_seed{seed}.csv")).exists());
        assert!(out.join(format!("small_seed{seed}.meta.json")).exists());
    }
    let summary = out.join("small_summary.csv");
    assert!(files.contains(&summary));
    let (header, rows) = read_csv(&summary);
    assert_eq!(header, SUMMARY_HEADER);
    assert!(header.contains(&"n_seeds".to_string()) && header.contains(&"std".to_string()));
    assert_eq!(rows.len(), 3);
    for row in &rows {
        assert_eq!(row[1], "3");
        assert_eq!(row[6], "77");
        let std: f64 = row[3].parse().unwrap();
        assert!(std >= 0.0 && std.is_finite());
    }
    let (series_header, series) = read_csv(&out.join("small_summary_series.csv"));
    assert_eq!(series_header[0], "slot");
    assert_eq!(series.len(), 500);
    let meta = read_json(&out.join("small_summary.meta.json"));
    assert_eq!(meta["n_seeds"], 3);
    assert_eq!(meta["schema_version"], 1);
}

#[test]
fn sweep_defaults_to_configured_seed_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("o");
    invoke(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let (_, rows) = read_csv(&out.join("small_summary.csv"));
    assert_eq!(rows[0][1], "2");
}

#[test]
fn ex1_table_output() {
    let dir = tempfile::tempdir().unwrap();
    let (files, _) = invoke(&[
        "table",
        "--preset",
        "ex1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let (header, rows) = read_csv(&files[0]);
    assert_eq!(
        header.join(","),
        "K,p_opt,p_star,p_baseline,U_opt,U_star,U_baseline"
    );
    assert_eq!(header, TABLE_HEADER);
    assert_eq!(rows.len(), 30);
    let k8 = &rows[7];
    assert_eq!(k8[0], "8");
    let p_opt: f64 = k8[1].parse().unwrap();
    let p_star: f64 = k8[2].parse().unwrap();
    assert!((p_opt - 0.125).abs() < 1e-6);
    assert!((p_star - 1.0 / 9.01).abs() < 1e-8);
    // nine significant digits
    let digits = k8[2]
        .trim_start_matches("0.")
        .trim_start_matches('0')
        .replace(['e', '-'], "");
    assert!(digits.len() <= 9, "{}", k8[2]);
    let meta = read_json(&files[1]);
    assert_eq!(meta["schema_version"], 1);
    assert_eq!(meta["design"]["j_ev"], 0);
}

#[test]
fn table_from_config_uses_its_channel() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let (files, _) = invoke(&[
        "table",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let meta = read_json(&files[1]);
    assert_eq!(meta["design"]["j_ev"], 3);
    assert_eq!(read_csv(&files[0]).1.len(), 30);
}

#[test]
fn design_verb_prints_constants() {
    let (files, stdout) = invoke(&["design", "--preset", "ex2"]);
    assert!(files.is_empty());
    assert!(stdout.contains("j_ev = 3"), "{stdout}");
    assert!(stdout.contains("b = 1.01"), "{stdout}");
    let (_, stdout) = invoke(&["design", "--preset", "ex1"]);
    assert!(stdout.contains("x_star = 1"), "{stdout}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let ok = main_with_args(["vpmac", "table", "--preset", "ex2", "--out", out]);
    assert_eq!(ok, std::process::ExitCode::SUCCESS);
    for bad in [
        vec!["vpmac", "table", "--preset", "ex9", "--out", out],
        vec!["vpmac", "run", "--preset", "ex1", "--out", out],
        vec![
            "vpmac",
            "run",
            "--config",
            "/nonexistent/x.toml",
            "--out",
            out,
        ],
        vec!["vpmac", "run", "--out", out],
        vec!["vpmac", "frobnicate"],
    ] {
        assert_ne!(
            main_with_args(bad.clone()),
            std::process::ExitCode::SUCCESS,
            "{bad:?}"
        );
    }
}

#[test]
fn io_errors_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let cli = Cli::try_parse_from([
        "vpmac",
        "table",
        "--preset",
        "ex1",
        "--out",
        blocker.to_str().unwrap(),
    ])
    .unwrap();
    let err = execute(&cli, &mut Vec::new()).unwrap_err().to_string();
    assert!(err.contains(blocker.to_str().unwrap()), "{err}");
}

#[test]
fn presets_serialise_and_reparse() {
    for name in ["ex3", "ex4", "ex5"] {
        let Job::Run(cfg) = preset(name).unwrap() else {
            panic!("{name}")
        };
        let back = RunConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}

fn small_config() -> RunConfig {
    RunConfig::parse(CONFIG).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn config_round_trips(
        horizon in 10u64..100_000,
        seeds in 1usize..50,
        stride in 1u64..100,
        seed in 0u64..(i64::MAX as u64 - 100),
        alpha in 0.001f64..0.999,
        mode in 0usize..3,
        initial_p in 0.0f64..=1.0,
        join_at in 0.0f64..1.0,
        join in 1usize..20,
        diminishing in any::<bool>(),
    ) {
        let mut cfg = small_config();
        cfg.seeds = seeds;
        cfg.scenario.horizon = horizon;
        cfg.scenario.stride = stride;
        cfg.scenario.seed = seed;
        cfg.scenario.initial_p = initial_p;
        cfg.scenario.mode = [FeedbackMode::ReceiverContention, FeedbackMode::TwoStep, FeedbackMode::OneStep][mode];
        cfg.scenario.schedule = if diminishing {
            StepSchedule::Diminishing { a: alpha, c: 1.0 }
        } else {
            StepSchedule::Constant { alpha }
        };
        let slot = 1 + (join_at * (horizon - 1) as f64) as u64;
        cfg.scenario.events = vec![ScheduledEvent { slot, action: EventAction::Join(join) }];
        let text = cfg.to_toml().unwrap();
        let back = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn oversized_seed_rejected() {
    let mut cfg = small_config();
    cfg.scenario.seed = i64::MAX as u64;
    let err = cfg.validate().unwrap_err().to_string();
    assert!(err.contains("2^63"), "{err}");
}

#[test]
fn shipped_config_matches_preset() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/ex3.toml");
    let Job::Run(want) = preset("ex3").unwrap() else {
        unreachable!()
    };
    assert_eq!(RunConfig::load(&path).unwrap(), want);
}
