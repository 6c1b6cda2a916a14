use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ham_asclt::config::{Experiment, ExperimentConfig, Overrides};
use ham_asclt::output::{run, RunManifest, MANIFEST_FILE};
use ham_asclt::plot::emit_plot_data;

#[derive(Parser)]
#[command(name = "ham-asclt", version, about = "Hyperbolic Anderson model: spatial-average CLT and ASCLT experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic identity suite.
    Identities(RunArgs),
    /// Variance of spatial averages over a radius list and the fitted exponent.
    VarianceScan(RunArgs),
    /// KS distance of normalised spatial averages at one radius.
    Clt(RunArgs),
    /// Log-averaged empirical measures along single paths.
    Asclt(RunArgs),
    /// Classical i.i.d. ASCLT reference paths.
    OracleIid(RunArgs),
    /// One realisation of the field, optionally with the noise.
    Simulate(RunArgs),
    /// Plot tables from a finished run.
    PlotData {
        /// Manifest of the run, or the directory containing it.
        #[arg(long)]
        manifest: PathBuf,
        /// Where to write the tables; defaults to the manifest's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML or JSON configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of replications.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run_experiment(experiment: Experiment, args: RunArgs) -> ham_asclt::Result<()> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&Overrides {
        experiment: Some(experiment),
        seed: args.seed,
        replications: args.reps,
        threads: args.threads,
        output_dir: args.out,
    });
    let manifest = run(&cfg)?;
    for line in &manifest.summary {
        println!("{line}");
    }
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    for f in &manifest.failures {
        eprintln!("criterion not met: {f}");
    }
    println!("wrote {} files to {}", manifest.outputs.len() + 1, cfg.output_dir.display());
    Ok(())
}

fn plot_data(manifest: PathBuf, out: Option<PathBuf>) -> ham_asclt::Result<()> {
    let path = if manifest.is_dir() { manifest.join(MANIFEST_FILE) } else { manifest };
    let m = RunManifest::load(&path)?;
    let src = path.parent().map(PathBuf::from).unwrap_or_default();
    let dir = out.unwrap_or_else(|| src.clone());
    for p in emit_plot_data(&m, &src, &dir)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Identities(a) => run_experiment(Experiment::Identities, a),
        Command::VarianceScan(a) => run_experiment(Experiment::VarianceScan, a),
        Command::Clt(a) => run_experiment(Experiment::Clt, a),
        Command::Asclt(a) => run_experiment(Experiment::Asclt, a),
        Command::OracleIid(a) => run_experiment(Experiment::OracleIid, a),
        Command::Simulate(a) => run_experiment(Experiment::Simulate, a),
        Command::PlotData { manifest, out } => plot_data(manifest, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
