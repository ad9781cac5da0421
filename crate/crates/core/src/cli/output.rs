//! CSV and run-metadata writers.
//!
//! Every CSV gets a `<stem>.meta.json` sibling carrying the schema version,
//! the design constants and the reference values a plot needs.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::SCHEMA_VERSION;
use super::presets::TableJob;
use super::table::EquilibriumTableRow;
use crate::error::{Error, Result};
use crate::sim::{Aggregate, SimTrace, Stage, Summary, LEAVE_POLICY};
use crate::theory::MacDesign;

pub const TABLE_HEADER: [&str; 7] = [
    "K",
    "p_opt",
    "p_star",
    "p_baseline",
    "U_opt",
    "U_star",
    "U_baseline",
];

pub const TRACE_HEADER: [&str; 14] = [
    "slot",
    "active_users",
    "p_mean",
    "p_min",
    "p_max",
    "q_v_estimate",
    "q_k_mean",
    "q_k_min",
    "q_k_max",
    "virtual_success",
    "n_transmitted",
    "successes",
    "utility_sample",
    "utility_ema",
];

pub const SUMMARY_HEADER: [&str; 7] = [
    "metric",
    "n_seeds",
    "mean",
    "std",
    "min",
    "max",
    "first_seed",
];

pub const SERIES_HEADER: [&str; 7] = [
    "slot",
    "p_mean_mean",
    "p_mean_std",
    "q_v_mean",
    "q_v_std",
    "utility_ema_mean",
    "utility_ema_std",
];

/// Nine significant digits, shortest form.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    rounded.to_string()
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

fn write_meta(csv_path: &Path, meta: &impl Serialize) -> Result<PathBuf> {
    let path = meta_path(csv_path);
    let text = serde_json::to_string_pretty(meta).map_err(|e| io_err(&path, e))?;
    let mut f = File::create(&path).map_err(|e| io_err(&path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| io_err(&path, e))?;
    f.write_all(b"\n").map_err(|e| io_err(&path, e))?;
    Ok(path)
}

#[derive(Serialize)]
struct DesignMeta<'a> {
    x_star: f64,
    epsilon_v: f64,
    j_ev: usize,
    gamma_ev: f64,
    b: f64,
    p_max: f64,
    q_star_monotone: bool,
    full: &'a MacDesign,
}

impl<'a> From<&'a MacDesign> for DesignMeta<'a> {
    fn from(d: &'a MacDesign) -> Self {
        DesignMeta {
            x_star: d.x_star,
            epsilon_v: d.epsilon_v,
            j_ev: d.j_ev,
            gamma_ev: d.gamma_ev,
            b: d.b,
            p_max: d.p_max,
            q_star_monotone: d.q_star_monotone,
            full: d,
        }
    }
}

#[derive(Serialize)]
struct TableMeta<'a> {
    schema_version: u32,
    kind: &'static str,
    csv: String,
    columns: &'static [&'static str],
    job: &'a TableJob,
    design: DesignMeta<'a>,
}

pub fn emit_table(
    job: &TableJob,
    design: &MacDesign,
    rows: &[EquilibriumTableRow],
    path: &Path,
) -> Result<()> {
    write_csv(
        path,
        &TABLE_HEADER,
        rows.iter().map(|r| {
            [
                r.k.to_string(),
                fmt_sig(r.p_opt),
                fmt_sig(r.p_star),
                fmt_sig(r.p_baseline),
                fmt_sig(r.u_opt),
                fmt_sig(r.u_star),
                fmt_sig(r.u_baseline),
            ]
        }),
    )?;
    write_meta(
        path,
        &TableMeta {
            schema_version: SCHEMA_VERSION,
            kind: "equilibrium_table",
            csv: file_name(path),
            columns: &TABLE_HEADER,
            job,
            design: design.into(),
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct TraceMeta<'a> {
    schema_version: u32,
    kind: &'static str,
    csv: String,
    columns: &'static [&'static str],
    name: &'a str,
    seed: u64,
    horizon: u64,
    stride: u64,
    design: DesignMeta<'a>,
    /// Reference values for the final population.
    reference: &'a Summary,
    stages: &'a [Stage],
    stage_boundaries: Vec<u64>,
    leave_policy: &'static str,
    scenario: &'a crate::sim::Scenario,
}

pub fn emit_trace(name: &str, trace: &SimTrace, path: &Path) -> Result<()> {
    write_csv(
        path,
        &TRACE_HEADER,
        trace.records.iter().map(|r| {
            [
                r.slot.to_string(),
                r.active_users.to_string(),
                fmt_sig(r.p_mean),
                fmt_sig(r.p_min),
                fmt_sig(r.p_max),
                fmt_sig(r.q_v_estimate),
                fmt_sig(r.q_k_mean),
                fmt_sig(r.q_k_min),
                fmt_sig(r.q_k_max),
                u8::from(r.virtual_success).to_string(),
                r.n_transmitted.to_string(),
                r.successes.to_string(),
                fmt_sig(r.utility_sample),
                fmt_sig(r.utility_ema),
            ]
        }),
    )?;
    write_meta(
        path,
        &TraceMeta {
            schema_version: SCHEMA_VERSION,
            kind: "trace",
            csv: file_name(path),
            columns: &TRACE_HEADER,
            name,
            seed: trace.scenario.seed,
            horizon: trace.scenario.horizon,
            stride: trace.scenario.stride,
            design: (&trace.design).into(),
            reference: &trace.summary,
            stages: &trace.stages,
            stage_boundaries: trace.stages.iter().skip(1).map(|s| s.start_slot).collect(),
            leave_policy: LEAVE_POLICY,
            scenario: &trace.scenario,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct SummaryMeta<'a> {
    schema_version: u32,
    kind: &'static str,
    csv: String,
    series_csv: String,
    columns: &'static [&'static str],
    series_columns: &'static [&'static str],
    name: &'a str,
    n_seeds: usize,
    first_seed: u64,
    design: DesignMeta<'a>,
    stages: &'a [Stage],
    stage_boundaries: Vec<u64>,
    leave_policy: &'static str,
}

/// Writes the across-seed summary to `path` and the per-slot mean/std
/// series next to it as `<stem>_series.csv`.
pub fn emit_summary(name: &str, agg: &Aggregate, path: &Path) -> Result<PathBuf> {
    let stat_row = |metric: &str, s: &crate::sim::SeriesStat| {
        [
            metric.to_string(),
            agg.n_seeds.to_string(),
            fmt_sig(s.mean),
            fmt_sig(s.std),
            fmt_sig(s.min),
            fmt_sig(s.max),
            agg.first_seed.to_string(),
        ]
    };
    write_csv(
        path,
        &SUMMARY_HEADER,
        [
            stat_row("final_mean_p", &agg.final_mean_p),
            stat_row("final_utility_ema", &agg.final_utility_ema),
            stat_row("final_utility_ratio", &agg.final_utility_ratio),
        ],
    )?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("summary");
    let series_path = path.with_file_name(format!("{stem}_series.csv"));
    write_csv(
        &series_path,
        &SERIES_HEADER,
        agg.per_slot.iter().map(|r| {
            [
                r.slot.to_string(),
                fmt_sig(r.p_mean.mean),
                fmt_sig(r.p_mean.std),
                fmt_sig(r.q_v_estimate.mean),
                fmt_sig(r.q_v_estimate.std),
                fmt_sig(r.utility_ema.mean),
                fmt_sig(r.utility_ema.std),
            ]
        }),
    )?;
    let first = &agg.traces[0];
    write_meta(
        path,
        &SummaryMeta {
            schema_version: SCHEMA_VERSION,
            kind: "sweep_summary",
            csv: file_name(path),
            series_csv: file_name(&series_path),
            columns: &SUMMARY_HEADER,
            series_columns: &SERIES_HEADER,
            name,
            n_seeds: agg.n_seeds,
            first_seed: agg.first_seed,
            design: (&first.design).into(),
            stages: &first.stages,
            stage_boundaries: first.stages.iter().skip(1).map(|s| s.start_slot).collect(),
            leave_policy: LEAVE_POLICY,
        },
    )?;
    Ok(series_path)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}
