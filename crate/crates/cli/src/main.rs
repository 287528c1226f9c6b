use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bai_core::allocation::solve_instance;
use bai_core::format::fmt_g;
use bai_core::harness::{DiagnosticsReport, ResultTable};
use bai_core::{complexity_measures, BanditInstance, Case, Engine, ExperimentConfig, Scenario};
use clap::{Parser, Subcommand, ValueEnum};

/// Fixed-budget best-arm identification laboratory.
///
/// Arms are numbered from 1 in all output.
#[derive(Parser)]
#[command(name = "bai", version, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the optimal allocation of an instance.
    Allocate(AllocateArgs),
    /// Run a Monte Carlo experiment and write misidentification rates as CSV.
    ///
    /// Set BAI_THREADS to cap the number of worker threads (0 or unset = auto).
    Simulate(RunArgs),
    /// Run the martingale diagnostics of RS strategies and write them as CSV.
    ///
    /// Set BAI_THREADS to cap the number of worker threads (0 or unset = auto).
    Diagnose(RunArgs),
    /// List the built-in scenarios and case recipes.
    Scenarios,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(clap::Args)]
struct AllocateArgs {
    /// Gaussian means, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., requires = "vars", conflicts_with = "probs")]
    means: Vec<f64>,
    /// Gaussian variances, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., requires = "means")]
    vars: Vec<f64>,
    /// Bernoulli success probabilities, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., required_unless_present = "means")]
    probs: Vec<f64>,
    /// Output format.
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Bisection tolerance on |F(y) - 1|.
    #[arg(long, default_value = "1e-12")]
    tol: f64,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

fn g6(x: f64) -> String {
    fmt_g(x, 6)
}

fn g10(x: f64) -> String {
    fmt_g(x, 10)
}

fn join(xs: &[f64], f: fn(f64) -> String, sep: &str) -> String {
    xs.iter().map(|&x| f(x)).collect::<Vec<_>>().join(sep)
}

fn allocate(args: &AllocateArgs) -> Result<()> {
    let instance = if args.probs.is_empty() {
        if args.means.len() != args.vars.len() {
            bail!(
                "--means has {} entries but --vars has {}",
                args.means.len(),
                args.vars.len()
            );
        }
        BanditInstance::gaussian(&args.means, &args.vars)?
    } else {
        BanditInstance::bernoulli(&args.probs)?
    };
    let sol = solve_instance(&instance, args.tol)?;
    let c = complexity_measures(&instance)?;
    let w = sol.allocation.weights();
    match args.format {
        Format::Text => {
            println!("best arm: {}", sol.best + 1);
            println!("w*: ({})", join(w, g6, ", "));
            println!("y*: {}", g6(sol.y_star));
            println!("Gamma*: {}", g6(sol.gamma_star));
            println!("H1: {}", g6(c.h1));
            println!("H2: {}", g6(c.h2));
            println!("Hsigma: {}", g6(c.h_sigma));
        }
        Format::Json => println!(
            "{{\"best_arm\":{},\"w\":[{}],\"y_star\":{},\"gamma_star\":{},\"H1\":{},\"H2\":{},\"Hsigma\":{}}}",
            sol.best + 1,
            join(w, g10, ","),
            g10(sol.y_star),
            g10(sol.gamma_star),
            g10(c.h1),
            g10(c.h2),
            g10(c.h_sigma)
        ),
    }
    Ok(())
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    ExperimentConfig::from_json(&text).with_context(|| format!("in {}", path.display()))
}

fn write_out(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn summarize_results(table: &ResultTable, config: &ExperimentConfig) {
    let last = *config.record_rounds.last().expect("validated schedule");
    for spec in &config.strategies {
        if let Some(r) = table.get(&spec.label, last) {
            println!(
                "{}: p_hat={} stderr={} at t={} over {} trials",
                r.strategy,
                g6(r.p_hat),
                g6(r.stderr),
                r.t,
                r.n
            );
        }
    }
}

fn summarize_diagnostics(report: &DiagnosticsReport) {
    for r in &report.rows {
        let censor = if r.emp_exponent.censored { ">=" } else { "" };
        println!(
            "{} T={}: V_hat={} shares=({}) xi_mean={} exponent={}{} gamma_star={}",
            r.strategy,
            r.t,
            g6(r.v_hat),
            join(&r.shares, g6, ","),
            g6(r.xi_mean),
            censor,
            g6(r.emp_exponent.value),
            g6(r.gamma_star)
        );
    }
}

fn simulate(args: &RunArgs) -> Result<()> {
    let config = load_config(&args.config)?;
    let engine = Engine::from_env()?;
    let table = engine.run_experiment(&config)?;
    write_out(&args.out, &table.to_csv())?;
    summarize_results(&table, &config);
    if config.diagnostics {
        summarize_diagnostics(&engine.estimate_v_t(&config)?);
    }
    Ok(())
}

fn diagnose(args: &RunArgs) -> Result<()> {
    let config = load_config(&args.config)?;
    let report = Engine::from_env()?.estimate_v_t(&config)?;
    write_out(&args.out, &report.to_csv())?;
    summarize_diagnostics(&report);
    Ok(())
}

fn scenarios() {
    for s in Scenario::ALL {
        let (m, v) = s.parameters();
        println!(
            "{}: Gaussian mu=({}) var=({})",
            s.id(),
            join(&m, g6, ","),
            join(&v, g6, ",")
        );
    }
    for c in Case::ALL {
        let name = match c {
            Case::Case2 | Case::Case4 => "mu2",
            Case::Case6 => "p2",
            _ => "Delta",
        };
        let ks: Vec<String> = c.benchmark_arm_counts().iter().map(|k| k.to_string()).collect();
        println!(
            "{}: {}; {} in {{{}}}; K in {{{}}}",
            c.id(),
            c.describe(),
            name,
            join(c.allowed_params(), g6, ","),
            ks.join(",")
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Allocate(a) => allocate(a),
        Command::Simulate(a) => simulate(a),
        Command::Diagnose(a) => diagnose(a),
        Command::Scenarios => {
            scenarios();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
