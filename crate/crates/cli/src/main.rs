use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use tamed_sde_cli::{run, Command, ExperimentConfig, Overrides, SchemeChoice};

/// Tamed Euler experiments: strong convergence, moments, increments,
/// explicit-Euler divergence and single-path simulation.
#[derive(Parser)]
#[command(name = "tamed-sde", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Strong L^p error table against a reference, with a log-log rate fit.
    Convergence(Flags),
    /// E[sup |X_n|^p] and sup E[|X_n|^p] for each n.
    Moments(Flags),
    /// Sub-grid increment moments for each n, with a log-log slope fit.
    Increments(Flags),
    /// Divergence fractions of explicit vs tamed Euler for each n.
    DivergeDemo(Flags),
    /// One trajectory on the grid of the first n.
    Simulate(Flags),
}

#[derive(Args)]
struct Flags {
    /// TOML experiment file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    /// Model parameter override, e.g. --param c=0.5 (repeatable).
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeChoice>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated step counts per unit time.
    #[arg(long, value_delimiter = ',')]
    n_values: Option<Vec<usize>>,
    #[arg(long)]
    fine_n: Option<usize>,
    /// Moment order.
    #[arg(short, long)]
    p: Option<f64>,
    /// Number of Monte Carlo paths (M).
    #[arg(long)]
    paths: Option<u64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let v: f64 = v.trim().parse().map_err(|e| format!("{v}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match cli.command {
        Cmd::Convergence(f) => (Command::Convergence, f),
        Cmd::Moments(f) => (Command::Moments, f),
        Cmd::Increments(f) => (Command::Increments, f),
        Cmd::DivergeDemo(f) => (Command::DivergeDemo, f),
        Cmd::Simulate(f) => (Command::Simulate, f),
    };
    let overrides = Overrides {
        model: flags.model,
        params: flags.params,
        scheme: flags.scheme,
        alpha: flags.alpha,
        n_values: flags.n_values,
        fine_n: flags.fine_n,
        p: flags.p,
        paths: flags.paths,
        horizon: flags.horizon,
        seed: flags.seed,
        output: flags.output,
        workers: flags.workers,
    };
    let text = match &flags.config {
        Some(path) => match std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
        },
        None => None,
    };
    let file = flags.config.as_deref().zip(text.as_deref());
    let cfg = match ExperimentConfig::load(command, file, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            println!("wrote {}", outcome.csv_path.display());
            if outcome.valid {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: some estimates are invalid; partial results were written");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
