//! `ccmorph` command line: per-case morphometry pipeline, segmentation
//! evaluation and group statistics.
//!
//! Exit codes: 0 success, 1 a processing stage failed, 2 invalid input.

pub mod case;
pub mod config;
pub mod eval;
pub mod output;
pub mod stats_cmd;
pub mod svg;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use case::{load_batch, run_case, CaseSpec, CaseStatus, Goal, Template};
use config::RunConfig;
use output::OutDir;
use stats_cmd::StatsInput;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments, configuration or input files (exit 2).
    Input,
    /// A processing stage or output failed (exit 1).
    Internal,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunError {
    pub kind: ErrorKind,
    pub message: String,
}

impl RunError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Input,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Internal,
            message: message.into(),
        }
    }

    /// A computation stage rejected its data.
    pub fn stage(message: impl Into<String>) -> Self {
        Self::internal(message)
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Input => 2,
            ErrorKind::Internal => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for RunError {}

#[derive(Debug, Parser)]
#[command(
    name = "ccmorph",
    version,
    about = "Corpus callosum morphometry on the mid-sagittal plane"
)]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mid-sagittal plane only (plane.json).
    Midplane(CaseCommand),
    /// Plane, slab, mesh, intercallosal line and thickness profile.
    Thickness(CaseCommand),
    /// Thickness plus shape summary (summary.json).
    Metrics(CaseCommand),
    /// Thickness plus sub-segment areas (subsegments.csv).
    Subseg(CaseCommand),
    /// Every stage, including figures.
    Pipeline(CaseCommand),
    /// Dice and HD95 between a predicted and a reference segmentation.
    Eval(EvalArgs),
    /// Group comparison of thickness profiles and scalar measures.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set samples=50` or
    /// `--set solver.tolerance=1e-10` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Worker threads; falls back to the config value, then to one per core.
    #[arg(long, env = "CCMORPH_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CaseCommand {
    /// Batch file with `[[case]]` tables (id, labels, landmarks, plane, t1).
    #[arg(long, value_name = "FILE", conflicts_with_all = ["labels", "landmarks", "plane"])]
    pub cases: Option<PathBuf>,
    /// Label volume (NIfTI) of a single case.
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
    /// JSON file `{"ac": [x, y, z], "pc": [x, y, z]}` in world mm.
    #[arg(long, value_name = "FILE")]
    pub landmarks: Option<PathBuf>,
    /// JSON file `{"normal": [x, y, z], "offset": d}`; skips registration.
    #[arg(long, value_name = "FILE")]
    pub plane: Option<PathBuf>,
    /// Case id of a single case.
    #[arg(long, default_value = "case")]
    pub id: String,
    /// Template label volume for mid-sagittal registration.
    #[arg(long, value_name = "FILE", requires = "template_plane")]
    pub template: Option<PathBuf>,
    /// Mid-sagittal plane of the template (same JSON format as --plane).
    #[arg(long, value_name = "FILE", requires = "template")]
    pub template_plane: Option<PathBuf>,
    /// Output directory; batch cases go to `<out>/<id>`.
    #[arg(short, long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted segmentation (NIfTI).
    #[arg(long, value_name = "FILE")]
    pub pred: PathBuf,
    /// Reference segmentation (NIfTI).
    #[arg(long = "reference", value_name = "FILE")]
    pub reference: PathBuf,
    /// Foreground labels (comma separated); default: any non-zero voxel.
    #[arg(long, value_delimiter = ',')]
    pub labels: Vec<u32>,
    /// Also write the metrics to this JSON file.
    #[arg(short, long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Group table: case_id, group, age, sex, total_brain_volume, then one
    /// column per thickness position.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["covariates", "runs"], required_unless_present = "covariates")]
    pub table: Option<PathBuf>,
    /// Covariate table (the first five group-table columns).
    #[arg(long, value_name = "FILE", requires = "runs")]
    pub covariates: Option<PathBuf>,
    /// Pipeline output directory with one sub-directory per case id.
    #[arg(long, value_name = "DIR", requires = "covariates")]
    pub runs: Option<PathBuf>,
    /// Case output directory whose contour and midline draw the p-map.
    #[arg(long, value_name = "DIR")]
    pub template_case: Option<PathBuf>,
    #[arg(short, long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

fn resolve_config(args: &ConfigArgs) -> Result<RunConfig, RunError> {
    let mut cfg = RunConfig::resolve(args.config.as_deref(), &args.overrides)?;
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    Ok(cfg)
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, RunError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| RunError::internal(format!("thread pool: {e}")))
}

/// Runs `cases` on a bounded worker pool. Each case writes only into its own
/// directory, so the outputs do not depend on the worker count.
pub fn run_batch(
    cases: &[(CaseSpec, PathBuf)],
    cfg: &RunConfig,
    template: Option<&Template>,
    goal: Goal,
) -> Result<Vec<CaseStatus>, RunError> {
    Ok(pool(cfg.threads)?.install(|| {
        cases
            .par_iter()
            .map(|(c, dir)| run_case(c, dir, cfg, template, goal))
            .collect()
    }))
}

fn case_command(cmd: &CaseCommand, goal: Goal) -> Result<i32, RunError> {
    let cfg = resolve_config(&cmd.config)?;
    let template = match (&cmd.template, &cmd.template_plane) {
        (Some(l), Some(p)) => Some(Template::load(l, p)?),
        _ => None,
    };
    let cases: Vec<(CaseSpec, PathBuf)> = match &cmd.cases {
        Some(batch) => load_batch(batch)?
            .into_iter()
            .map(|c| {
                let dir = cmd.out.join(&c.id);
                (c, dir)
            })
            .collect(),
        None => {
            let labels = cmd
                .labels
                .clone()
                .ok_or_else(|| RunError::input("either --cases or --labels is required"))?;
            let landmarks = cmd
                .landmarks
                .clone()
                .ok_or_else(|| RunError::input("--landmarks is required"))?;
            let case = CaseSpec {
                id: cmd.id.clone(),
                labels,
                landmarks,
                plane: cmd.plane.clone(),
                t1: None,
            };
            vec![(case, cmd.out.clone())]
        }
    };
    let statuses = run_batch(&cases, &cfg, template.as_ref(), goal)?;
    for s in &statuses {
        match s.failed_stage {
            None => println!("{}: ok ({:.2} s)", s.case_id, s.total_seconds),
            Some(stage) => {
                let msg = s
                    .stages
                    .iter()
                    .find_map(|st| st.error.clone())
                    .unwrap_or_default();
                println!("{}: failed at {stage}: {msg}", s.case_id);
            }
        }
    }
    let codes: Vec<i32> = statuses.iter().map(|s| s.exit_code).collect();
    Ok(if codes.contains(&2) {
        2
    } else if codes.iter().any(|&c| c != 0) {
        1
    } else {
        0
    })
}

fn eval_command(args: &EvalArgs) -> Result<i32, RunError> {
    let cfg = resolve_config(&args.config)?;
    let labels = (!args.labels.is_empty()).then_some(&args.labels[..]);
    let report = eval::run_eval(&args.pred, &args.reference, labels, cfg.hd95)?;
    let text = serde_json::to_string_pretty(&report).expect("report serialises");
    println!("{text}");
    if let Some(path) = &args.out {
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
        if let Some(d) = dir {
            OutDir::create(d)?;
        }
        output::write_atomic(path, format!("{text}\n").as_bytes())
            .map_err(|e| RunError::internal(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(0)
}

fn stats_command(args: &StatsArgs) -> Result<i32, RunError> {
    let cfg = resolve_config(&args.config)?;
    let input = match (&args.table, &args.covariates, &args.runs) {
        (Some(t), _, _) => StatsInput::Table(t.clone()),
        (None, Some(c), Some(r)) => StatsInput::Runs {
            covariates: c.clone(),
            runs: r.clone(),
        },
        _ => return Err(RunError::input("give --table, or --covariates with --runs")),
    };
    let out = OutDir::create(&args.out)?;
    let report = stats_cmd::run_stats(&input, args.template_case.as_deref(), &out, &cfg)?;
    println!(
        "{} of {} positions with adjusted p < {}",
        report.significant,
        report.positions.len(),
        cfg.fdr_q
    );
    Ok(0)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Midplane(c) => case_command(c, Goal::Midplane),
        Command::Thickness(c) => case_command(c, Goal::Thickness),
        Command::Metrics(c) => case_command(c, Goal::Metrics),
        Command::Subseg(c) => case_command(c, Goal::Subseg),
        Command::Pipeline(c) => case_command(c, Goal::Full),
        Command::Eval(a) => eval_command(a),
        Command::Stats(a) => stats_command(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
