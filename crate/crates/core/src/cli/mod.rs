//! Command-line front end: scenario files, presets and CSV emission.
//!
//! Verbs: `design` prints the design constants, `table` writes an
//! equilibrium/baseline table, `run` simulates one seed and `sweep` runs
//! several seeds in parallel.

pub mod config;
pub mod output;
pub mod presets;
pub mod table;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{RunConfig, SCHEMA_VERSION};
pub use output::{emit_summary, emit_table, emit_trace, fmt_sig, meta_path};
pub use presets::{preset, Baseline, Job, TableJob, PRESET_NAMES};
pub use table::{equilibrium_table, EquilibriumTableRow};

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::sim::{run, run_many, DesignSource};
use crate::theory::MacDesign;

#[derive(Debug, Parser)]
#[command(
    name = "vpmac",
    version,
    about = "Virtual-packet contention MAC: design, tables and simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the design constants for a channel and utility.
    Design(CommonArgs),
    /// Write an equilibrium/baseline utility table.
    Table(CommonArgs),
    /// Simulate one seed and write its trace.
    Run(CommonArgs),
    /// Simulate several seeds and write per-seed traces plus a summary.
    Sweep(CommonArgs),
}

#[derive(Debug, Args, Clone)]
pub struct CommonArgs {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in experiment: ex1, ex2, ex3, ex4 or ex5.
    #[arg(long)]
    pub preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of seeds for `sweep`.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Record every k-th slot.
    #[arg(long)]
    pub stride: Option<u64>,
}

impl CommonArgs {
    fn job(&self) -> Result<Job> {
        match (&self.config, &self.preset) {
            (Some(path), None) => Ok(Job::Run(RunConfig::load(path)?)),
            (None, Some(name)) => preset(name),
            _ => Err(Error::Config(
                "pass exactly one of --config or --preset".into(),
            )),
        }
    }

    fn out_dir(&self, cfg_dir: Option<&str>) -> Result<PathBuf> {
        let dir = self
            .out
            .clone()
            .or_else(|| cfg_dir.map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(dir)
    }
}

/// Table job for a scenario file: its channel and derived design over
/// K = 1..30, compared against the idle-target baseline (or the collision
/// rule on a collision channel).
fn table_for_config(cfg: &RunConfig) -> Result<TableJob> {
    let DesignSource::Derive {
        utility,
        epsilon_v,
        b_margin,
    } = cfg.scenario.design
    else {
        return Err(Error::Config(
            "tables need a derived design (source = \"derive\")".into(),
        ));
    };
    let baseline = if cfg.scenario.channel == ChannelModel::Collision {
        Baseline::Hajek
    } else {
        Baseline::IdleTarget
    };
    Ok(TableJob {
        name: cfg.name.clone(),
        channel: cfg.scenario.channel.clone(),
        utility,
        epsilon_v,
        b_margin,
        k_min: 1,
        k_max: 30,
        baseline,
    })
}

fn print_design(out: &mut impl Write, name: &str, d: &MacDesign) -> Result<()> {
    let io = |e: std::io::Error| Error::Io {
        path: "<stdout>".into(),
        message: e.to_string(),
    };
    writeln!(out, "design {name}").map_err(io)?;
    for (key, value) in [
        ("x_star", fmt_sig(d.x_star)),
        ("epsilon_v", fmt_sig(d.epsilon_v)),
        ("j_ev", d.j_ev.to_string()),
        ("gamma_ev", fmt_sig(d.gamma_ev)),
        ("b", fmt_sig(d.b)),
        ("p_max", fmt_sig(d.p_max)),
        ("q_star_monotone", d.q_star_monotone.to_string()),
    ] {
        writeln!(out, "  {key} = {value}").map_err(io)?;
    }
    if !d.q_star_monotone {
        writeln!(out, "  warning: q_star is not monotone on [0, p_max]; own-success inversion uses grid search")
            .map_err(io)?;
    }
    Ok(())
}

/// Runs one CLI command, writing human-readable output to `out`. Returns
/// the files written.
pub fn execute(cli: &Cli, out: &mut impl Write) -> Result<Vec<PathBuf>> {
    match &cli.command {
        Command::Design(args) => {
            match args.job()? {
                Job::Table(job) => {
                    let (design, _) = equilibrium_table(&TableJob {
                        k_max: job.k_min,
                        ..job.clone()
                    })?;
                    print_design(out, &job.name, &design)?;
                }
                Job::Run(cfg) => print_design(out, &cfg.name, &cfg.validate()?)?,
            }
            Ok(vec![])
        }
        Command::Table(args) => {
            let (job, dir) = match args.job()? {
                Job::Table(job) => (job, args.out_dir(None)?),
                Job::Run(cfg) => (
                    table_for_config(&cfg)?,
                    args.out_dir(cfg.out_dir.as_deref())?,
                ),
            };
            let (design, rows) = equilibrium_table(&job)?;
            let path = dir.join(format!("{}_table.csv", job.name));
            emit_table(&job, &design, &rows, &path)?;
            Ok(vec![path.clone(), meta_path(&path)])
        }
        Command::Run(args) => {
            let cfg = run_config(args)?;
            let dir = args.out_dir(cfg.out_dir.as_deref())?;
            let trace = run(&cfg.scenario)?;
            let path = dir.join(format!("{}_trace.csv", cfg.name));
            emit_trace(&cfg.name, &trace, &path)?;
            report_summary(out, &cfg.name, &trace.summary)?;
            Ok(vec![path.clone(), meta_path(&path)])
        }
        Command::Sweep(args) => {
            let cfg = run_config(args)?;
            let dir = args.out_dir(cfg.out_dir.as_deref())?;
            let n = args.seeds.unwrap_or(cfg.seeds);
            let agg = run_many(&cfg.scenario, n)?;
            let mut written = Vec::new();
            for trace in &agg.traces {
                let path = dir.join(format!("{}_seed{}.csv", cfg.name, trace.scenario.seed));
                emit_trace(&cfg.name, trace, &path)?;
                written.push(path.clone());
                written.push(meta_path(&path));
            }
            let path = dir.join(format!("{}_summary.csv", cfg.name));
            let series = emit_summary(&cfg.name, &agg, &path)?;
            written.extend([path.clone(), meta_path(&path), series]);
            let io = |e: std::io::Error| Error::Io {
                path: "<stdout>".into(),
                message: e.to_string(),
            };
            writeln!(
                out,
                "{}: {} seeds, final mean p = {} (std {}), final utility EMA = {} (std {})",
                cfg.name,
                n,
                fmt_sig(agg.final_mean_p.mean),
                fmt_sig(agg.final_mean_p.std),
                fmt_sig(agg.final_utility_ema.mean),
                fmt_sig(agg.final_utility_ema.std),
            )
            .map_err(io)?;
            Ok(written)
        }
    }
}

fn run_config(args: &CommonArgs) -> Result<RunConfig> {
    let Job::Run(mut cfg) = args.job()? else {
        return Err(Error::Config(
            "ex1 and ex2 are analytic tables; use the `table` verb".into(),
        ));
    };
    if let Some(stride) = args.stride {
        cfg.scenario.stride = stride;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report_summary(out: &mut impl Write, name: &str, s: &crate::sim::Summary) -> Result<()> {
    writeln!(
        out,
        "{name}: K = {}, mean p (last {} slots) = {}, p* = {}, p_opt = {}, utility EMA = {} ({} of optimum)",
        s.final_users,
        s.window,
        fmt_sig(s.mean_p),
        fmt_sig(s.p_star),
        fmt_sig(s.p_opt),
        fmt_sig(s.final_utility_ema),
        fmt_sig(s.utility_ratio),
    )
    .map_err(|e| Error::Io { path: "<stdout>".into(), message: e.to_string() })
}

/// Parses arguments and runs; the exit code is nonzero on any error.
pub fn main_with_args<I, T>(args: I) -> std::process::ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return std::process::ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut stdout = std::io::stdout().lock();
    match execute(&cli, &mut stdout) {
        Ok(files) => {
            for f in files {
                let _ = writeln!(stdout, "wrote {}", display(&f));
            }
            std::process::ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::FAILURE
        }
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
