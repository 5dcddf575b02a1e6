use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pfm_experiments::config::{builtin, ExperimentConfig, OutputFormat, ScenarioKind};
use pfm_experiments::report::{emit_outputs, render_text};
use pfm_experiments::{run, ExperimentError};

const AFTER_HELP: &str = "\
EXIT CODES:
  0  success
  2  invalid arguments, config, or input file
  3  runtime failure (estimation, sampling or I/O)

MOMENT-TENSOR CSV (quake):
  UTF-8, '.' as decimal separator, comma-separated, header line exactly
    event_id,m11,m22,m33,m12,m13,m23,region
  one event per line; m.. are the six independent entries of the symmetric
  tensor; region may be empty. Example: data/region2_sample.csv.

Without --config each subcommand runs its built-in desk-scale config
(configs/table1.toml, table2.toml, quake.toml, bench.toml).
Set RUST_LOG=info for progress and warnings.";

#[derive(Parser)]
#[command(name = "pfm", version, about = "Projected Frobenius median experiments", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Planar shapes: EMedian, IMean, IMedian and MoM under contamination.
    ShapeSim(Common),
    /// Frames of axes: frame mean against frame median, with bootstrap regions.
    FrameSim(Common),
    /// Moment-tensor frames for one region, with the sub/cont edits.
    Quake(Common),
    /// Time the estimators.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment config.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the replicate count (bootstrap resamples for quake); 0 is a dry run.
    #[arg(long)]
    replicates: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Output formats, comma-separated: csv, json, svg.
    #[arg(long, value_delimiter = ',')]
    format: Vec<OutputFormat>,
    /// Use the replicate counts of the original study instead of desk scale.
    #[arg(long)]
    full_scale: bool,
}

fn prepare(kind: ScenarioKind, args: &Common) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => builtin(kind),
    };
    if cfg.scenario != kind {
        return Err(ExperimentError::Config(format!(
            "config describes scenario {:?}, but the subcommand expects {:?}",
            cfg.scenario, kind
        )));
    }
    if args.full_scale {
        cfg.replicates = kind.full_scale_replicates();
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.output.dir = o.clone();
    }
    if !args.format.is_empty() {
        cfg.output.formats = args.format.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(kind: ScenarioKind, args: &Common) -> Result<(), ExperimentError> {
    let cfg = prepare(kind, args)?;
    let report = run(&cfg)?;
    let written = emit_outputs(&report, &cfg.output.dir, &cfg.output.formats)?;
    if let Some(t) = report.tables.first() {
        print!("{}", render_text(t));
    }
    if !report.failures.is_empty() {
        eprintln!("{} replicate failures recorded", report.failures.len());
    }
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    eprintln!("finished in {:.1} s", report.timing.as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::ShapeSim(a) => (ScenarioKind::ShapeTable, a),
        Command::FrameSim(a) => (ScenarioKind::FrameTable, a),
        Command::Quake(a) => (ScenarioKind::Earthquake, a),
        Command::Bench(a) => (ScenarioKind::Bench, a),
    };
    match execute(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
