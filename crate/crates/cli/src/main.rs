use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rummage::sim::Method;
use rummage_cli::{cmd_correlate, cmd_export_field, cmd_run, parse_seeds, CliError, FieldKind, RunConfig};

#[derive(Parser)]
#[command(name = "rummage", version, about = "Run and analyse active pose-estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded episodes and write per-seed metrics plus a summary.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// rumi, info-only, reach-only or slide.
        #[arg(long, default_value = "rumi", value_parser = |s: &str| s.parse::<Method>().map_err(|e| e.to_string()))]
        method: Method,
        /// Seed list such as `0-9` or `1,3,5`.
        #[arg(long, default_value = "0")]
        seeds: String,
        /// Override the scenario's step count.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Write the info field of every step.
        #[arg(long)]
        export_fields: bool,
        /// Write a belief snapshot of every step.
        #[arg(long)]
        snapshots: bool,
        /// Write the planned action sequences.
        #[arg(long)]
        traces: bool,
    },
    /// Render a field rebuilt from a snapshot as SVG and CSV.
    ExportField {
        #[arg(long)]
        snapshot: PathBuf,
        /// info, p_free or reach.
        #[arg(long, default_value = "info", value_parser = FieldKind::parse)]
        field: FieldKind,
        /// z of the slice to draw; required for volumetric workspaces.
        #[arg(long)]
        slice_z: Option<f64>,
        /// Only cells at or above this percentile are drawn.
        #[arg(long, default_value_t = 90.0)]
        percentile: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Pearson correlation between NLL and pairwise Chamfer.
    Correlate {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { scenario, method, seeds, steps, out, export_fields, snapshots, traces } => {
            let seeds = parse_seeds(&seeds).map_err(CliError::Config)?;
            let n = seeds.len();
            let cfg = RunConfig { scenario, method, seeds, steps, out, export_fields, snapshots, traces };
            let successes = cmd_run(&cfg)?;
            println!("{method}: {successes}/{n} successful, results in {}", cfg.out.display());
        }
        Command::ExportField { snapshot, field, slice_z, percentile, out } => {
            let (svg, csv) = cmd_export_field(&snapshot, field, slice_z, percentile, &out)?;
            println!("wrote {} and {}", svg.display(), csv.display());
        }
        Command::Correlate { inputs } => print!("{}", cmd_correlate(&inputs)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rummage: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
