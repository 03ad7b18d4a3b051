use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use invasion_core::params::{load_config, ParameterSet};
use invasion_core::runner::{compare_runs, run, Manifest, RunOptions};

#[derive(Parser)]
#[command(name = "invasion", version, about = "Two-scale tumour invasion simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write snapshots, decision logs and a manifest.
    Run {
        /// Flat `key = value` config file; omitted keys take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (overrides `output_dir` from the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for the tile solves.
        #[arg(long)]
        threads: Option<usize>,
        /// Number of stages (overrides `n_stages`).
        #[arg(long)]
        stages: Option<usize>,
        /// Comma-separated snapshot stages (overrides `snapshot_stages`).
        #[arg(long, value_delimiter = ',')]
        snapshot_at: Option<Vec<usize>>,
        /// Also write PGM renders of c and v at each snapshot.
        #[arg(long)]
        pgm: bool,
    },
    /// Compare two run directories stage by stage.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Directory for comparison.txt and comparison.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the per-stage metrics table of a run directory.
    Metrics { dir: PathBuf },
}

fn run_command(
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    stages: Option<usize>,
    snapshot_at: Option<Vec<usize>>,
    pgm: bool,
) -> Result<()> {
    let mut params = match &config {
        Some(path) => load_config(path).with_context(|| format!("loading {}", path.display()))?,
        None => ParameterSet::default(),
    };
    if let Some(out) = out {
        params.output_dir = out;
    }
    if let Some(n) = stages {
        params.n_stages = n;
    }
    if let Some(list) = snapshot_at {
        params.snapshot_stages = list;
    }
    let mut opts = RunOptions::from_params(&params);
    opts.threads = threads;
    opts.pgm = pgm;
    let summary = run(&params, &opts).with_context(|| format!("run in {}", opts.out_dir.display()))?;
    let last = summary.manifest.metrics.last().context("run produced no metrics")?;
    println!(
        "{} stages, final area {:.6}, fingering {}, digest {}",
        summary.manifest.completed_stages,
        last.area,
        last.fingering.map_or("-".to_string(), |f| format!("{f:.6}")),
        summary.manifest.digest
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            threads,
            stages,
            snapshot_at,
            pgm,
        } => run_command(config, out, threads, stages, snapshot_at, pgm),
        Command::Compare { a, b, out } => (|| {
            let report = compare_runs(&a, &b)?;
            let text = report.to_text();
            print!("{text}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("comparison.txt"), &text)?;
                std::fs::write(dir.join("comparison.csv"), report.to_csv())?;
            }
            Ok(())
        })(),
        Command::Metrics { dir } => (|| {
            let manifest = Manifest::load(&dir).with_context(|| format!("reading manifest in {}", dir.display()))?;
            println!("stage,area,fingering,interior_cv,tiles,moved,repairs");
            for m in &manifest.metrics {
                println!(
                    "{},{:.6},{},{:.6},{},{},{}",
                    m.stage,
                    m.area,
                    m.fingering.map_or(String::new(), |f| format!("{f:.6}")),
                    m.interior_cv,
                    m.tiles,
                    m.moved,
                    m.repairs
                );
            }
            if !manifest.complete {
                eprintln!(
                    "run incomplete: {}",
                    manifest.error.as_deref().unwrap_or("unknown error")
                );
            }
            Ok(())
        })(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
