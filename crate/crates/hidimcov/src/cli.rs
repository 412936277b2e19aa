//! Subcommand front end: simulation, covariance estimation, analytic
//! asymptotics, trace confidence intervals, shrinkage, limit-model
//! sampling, Monte Carlo experiments and weight-family tooling.
//!
//! Every subcommand writes its artifacts atomically and prints a one-line
//! JSON summary to standard output. Exit codes: 0 success, 1 computation
//! (or failed mc assertion), 2 usage.

use crate::lrvest::KernelWindow;
use crate::mat::save_matrix_csv;
use crate::model::{ModelConfig, SeriesPanel};
use crate::weights::{coherence, near_orthogonal_family, WeightVector, WeightsFile};
use crate::{asymvar, covest, limit, lrvest, mc, shrink, weights, Error, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::path::{Path, PathBuf};

pub const WORKERS_ENV: &str = "HIDIMCOV_WORKERS";

#[derive(Parser)]
#[command(
    name = "hidimcov",
    about = "High-dimensional covariance inference for linear-process time series",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a linear-process panel from a scheme description
    Simulate(SimulateArgs),
    /// Sample covariance of a panel
    Cov(CovArgs),
    /// Analytic asymptotic variances (alpha^2, beta matrix, sigma_tr^2)
    Asymvar(AsymvarArgs),
    /// Confidence interval for the scaled trace norm
    TraceCi(TraceCiArgs),
    /// Shrinkage estimation toward mu I
    Shrink(ShrinkArgs),
    /// Limit-model construction and sampling
    #[command(subcommand)]
    Limit(LimitCommand),
    /// Monte Carlo experiments
    #[command(subcommand)]
    Mc(McCommand),
    /// Weight-family tooling
    #[command(subcommand)]
    Weights(WeightsCommand),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scheme + innovation JSON description
    #[arg(long)]
    scheme: PathBuf,
    /// Sample size
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Output panel (.csv for text, anything else binary HDCV)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CovArgs {
    /// Panel file (.csv or binary)
    #[arg(long)]
    panel: PathBuf,
    /// Optional output for the covariance matrix (.csv or binary)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AsymvarArgs {
    #[arg(long)]
    scheme: PathBuf,
    /// Optional weights file; first vector is v, second w (v = w if single)
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Lag horizon; defaults to the scheme truncation J
    #[arg(long)]
    l_max: Option<usize>,
    /// Output prefix: writes <prefix>.beta.csv and <prefix>.json
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TraceCiArgs {
    #[arg(long)]
    panel: PathBuf,
    #[arg(long, default_value = "bartlett")]
    kernel: String,
    /// Bandwidth m, or "auto" for ceil(n^(1/3))
    #[arg(long, default_value = "auto")]
    bandwidth: String,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
}

#[derive(Args)]
struct ShrinkArgs {
    #[arg(long)]
    panel: PathBuf,
    #[arg(long, default_value = "bartlett")]
    kernel: String,
    #[arg(long, default_value = "auto")]
    bandwidth: String,
    /// Weight mode: "estimate", "fixed:<w>", or "oracle:<scheme.json>"
    #[arg(long, default_value = "estimate")]
    weight: String,
    /// Output CSV for the shrunken matrix
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum LimitCommand {
    /// Assemble and persist a limit model
    Build(LimitBuildArgs),
    /// Sample endpoint values from a saved model
    Sample(LimitSampleArgs),
}

#[derive(Args)]
struct LimitBuildArgs {
    #[arg(long)]
    scheme: PathBuf,
    /// Weights file for the (v, w) pair; defaults to (e_0, e_0)
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, default_value = "two-block")]
    construction: String,
    /// Output prefix: writes <prefix>.json and <prefix>.cov.csv
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LimitSampleArgs {
    /// Model prefix as written by `limit build`
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    /// Comma-separated time grid in (0,1]; default "1.0"
    #[arg(long, default_value = "1.0")]
    grid: String,
    /// Output CSV of endpoint samples (one row per replication)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum McCommand {
    /// Run a configured experiment
    Run(McRunArgs),
}

#[derive(Args)]
struct McRunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.json (and reps.csv when configured)
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (overrides config and HIDIMCOV_WORKERS)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum WeightsCommand {
    /// Sample a nearly orthogonal family on the unit sphere
    NearOrth(NearOrthArgs),
    /// Report the coherence of a weights file
    Coherence(CoherenceArgs),
    /// Write a unit vector e_j
    Unit(UnitArgs),
}

#[derive(Args)]
struct NearOrthArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    m: usize,
    /// Coherence parameter A (pairwise |inner| <= A d^{-1/2})
    #[arg(long)]
    coherence: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = weights::DEFAULT_MAX_TRIES)]
    max_tries: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CoherenceArgs {
    #[arg(long)]
    weights: PathBuf,
}

#[derive(Args)]
struct UnitArgs {
    /// Coordinate index (0-based)
    #[arg(long)]
    index: usize,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    out: PathBuf,
}

/// Parse and execute; returns the process exit code.
pub fn dispatch<I>(argv: I) -> i32
where
    I: IntoIterator<Item = String>,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = err.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Cov(args) => cmd_cov(args),
        Command::Asymvar(args) => cmd_asymvar(args),
        Command::TraceCi(args) => cmd_trace_ci(args),
        Command::Shrink(args) => cmd_shrink(args),
        Command::Limit(LimitCommand::Build(args)) => cmd_limit_build(args),
        Command::Limit(LimitCommand::Sample(args)) => cmd_limit_sample(args),
        Command::Mc(McCommand::Run(args)) => cmd_mc_run(args),
        Command::Weights(WeightsCommand::NearOrth(args)) => cmd_weights_near_orth(args),
        Command::Weights(WeightsCommand::Coherence(args)) => cmd_weights_coherence(args),
        Command::Weights(WeightsCommand::Unit(args)) => cmd_weights_unit(args),
    }
}

fn parse_kernel(window: &str, bandwidth: &str, n: usize) -> Result<lrvest::KernelSpec> {
    let window: KernelWindow = window.parse()?;
    let bandwidth = if bandwidth == "auto" {
        lrvest::default_bandwidth(n)?
    } else {
        bandwidth
            .parse::<usize>()
            .map_err(|_| Error::InvalidParameter(format!("bad bandwidth '{bandwidth}'")))?
    };
    Ok(lrvest::KernelSpec { window, bandwidth })
}

fn load_pair(path: &Option<PathBuf>, d: usize) -> Result<(WeightVector, WeightVector)> {
    match path {
        None => {
            let e0 = WeightVector::unit(0, d)?;
            Ok((e0.clone(), e0))
        }
        Some(p) => {
            let vectors = WeightsFile::load(p)?.build()?;
            match vectors.len() {
                0 => Err(Error::EmptyInput("weights file")),
                1 => Ok((vectors[0].clone(), vectors[0].clone())),
                _ => Ok((vectors[0].clone(), vectors[1].clone())),
            }
        }
    }
}

fn print_summary(value: serde_json::Value) {
    println!("{value}");
}

fn cmd_simulate(args: SimulateArgs) -> Result<i32> {
    let cfg = ModelConfig::load(&args.scheme)?;
    let (scheme, innov) = cfg.build()?;
    let mut panel = scheme.simulate(&innov, args.n, args.seed)?;
    panel.set_scheme_digest(cfg.digest());
    match args.out.extension().and_then(|e| e.to_str()) {
        Some("csv") => panel.save_csv(&args.out)?,
        _ => panel.save_binary(&args.out)?,
    }
    print_summary(json!({
        "command": "simulate",
        "out": args.out,
        "n": panel.n(),
        "d": panel.dim(),
        "seed": args.seed,
        "scheme_digest": cfg.digest(),
    }));
    Ok(0)
}

fn cmd_cov(args: CovArgs) -> Result<i32> {
    let panel = SeriesPanel::load(&args.panel)?;
    let cov = covest::sample_cov(&panel)?;
    if let Some(out) = &args.out {
        match out.extension().and_then(|e| e.to_str()) {
            Some("csv") => save_matrix_csv(out, &cov.matrix)?,
            _ => crate::model::save_matrix_binary(out, &cov.matrix)?,
        }
    }
    print_summary(json!({
        "command": "cov",
        "n": panel.n(),
        "d": panel.dim(),
        "trace_star": covest::trace_star(&cov.matrix)?,
        "frobenius_star": covest::frobenius_star(&cov.matrix)?,
        "out": args.out,
    }));
    Ok(0)
}

fn cmd_asymvar(args: AsymvarArgs) -> Result<i32> {
    let cfg = ModelConfig::load(&args.scheme)?;
    let (scheme, innov) = cfg.build()?;
    let l_max = args.l_max.unwrap_or_else(|| scheme.truncation());
    let d = scheme.dim();
    let kernel = asymvar::beta_matrix(
        &scheme,
        &innov,
        &weights::WeightPairSet::unit_pairs(d)?,
        l_max,
    )?;
    let sigma_tr = asymvar::sigma_tr_sq(&kernel)?;
    let beta_path = args.out.with_extension("beta.csv");
    save_matrix_csv(&beta_path, &kernel.beta)?;

    let (v, w) = load_pair(&args.weights, d)?;
    let alpha = asymvar::alpha_sq(&scheme, &innov, &v, &w, l_max)?;
    let sidecar = json!({
        "scheme_digest": cfg.digest(),
        "d": d,
        "l_max": l_max,
        "pairs": "unit",
        "sigma_sq": innov.sigma_sq,
        "gamma4": innov.gamma4,
        "sigma_tr_sq": sigma_tr,
        "alpha_sq": alpha,
        "beta_csv": beta_path,
    });
    crate::util::write_atomic(
        &args.out.with_extension("json"),
        serde_json::to_string_pretty(&sidecar)?.as_bytes(),
    )?;
    print_summary(json!({
        "command": "asymvar",
        "sigma_tr_sq": sigma_tr,
        "alpha_sq": alpha,
        "out": args.out.with_extension("json"),
    }));
    Ok(0)
}

fn cmd_trace_ci(args: TraceCiArgs) -> Result<i32> {
    let panel = SeriesPanel::load(&args.panel)?;
    let kernel = parse_kernel(&args.kernel, &args.bandwidth, panel.n())?;
    let ci = lrvest::trace_ci(&panel, &kernel, args.level)?;
    print_summary(serde_json::to_value(&ci)?);
    Ok(0)
}

fn cmd_shrink(args: ShrinkArgs) -> Result<i32> {
    let panel = SeriesPanel::load(&args.panel)?;
    let kernel = parse_kernel(&args.kernel, &args.bandwidth, panel.n())?;
    let result = if args.weight == "estimate" {
        shrink::shrink_estimate(&panel, &kernel)?
    } else if let Some(rest) = args.weight.strip_prefix("fixed:") {
        let w: f64 = rest
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad fixed weight '{rest}'")))?;
        shrink::shrink_fixed(&panel, w)?
    } else if let Some(rest) = args.weight.strip_prefix("oracle:") {
        let cfg = ModelConfig::load(Path::new(rest))?;
        let (scheme, innov) = cfg.build()?;
        if scheme.dim() != panel.dim() {
            return Err(Error::DimensionMismatch {
                expected: panel.dim(),
                actual: scheme.dim(),
            });
        }
        let wstar = shrink::w_star_oracle(&scheme, &innov, panel.n())?;
        shrink::shrink_with_oracle(&panel, &wstar)?
    } else {
        return Err(Error::InvalidParameter(format!(
            "unknown weight mode '{}' (use estimate | fixed:<w> | oracle:<scheme.json>)",
            args.weight
        )));
    };
    if let Some(out) = &args.out {
        save_matrix_csv(out, &result.sigma_s)?;
    }
    print_summary(json!({
        "command": "shrink",
        "W_used": result.w_used,
        "raw_W": if result.raw_w.is_finite() { Some(result.raw_w) } else { None },
        "w_source": result.w_source,
        "mu_hat": result.mu_hat,
        "numerator": if result.numerator.is_finite() { Some(result.numerator) } else { None },
        "denominator": if result.denominator.is_finite() { Some(result.denominator) } else { None },
        "out": args.out,
    }));
    Ok(0)
}

fn cmd_limit_build(args: LimitBuildArgs) -> Result<i32> {
    let cfg = ModelConfig::load(&args.scheme)?;
    let (scheme, innov) = cfg.build()?;
    let construction = match args.construction.as_str() {
        "joint" => limit::Construction::Joint,
        "two-block" | "two_block" => limit::Construction::TwoBlock,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown construction '{other}' (use joint | two-block)"
            )))
        }
    };
    let (v, w) = load_pair(&args.weights, scheme.dim())?;
    let model = limit::build_limit_model(&scheme, &innov, &v, &w, construction)?;
    model.save(&args.out)?;
    print_summary(json!({
        "command": "limit build",
        "construction": construction,
        "d": model.d,
        "alpha_sq": model.alpha_sq,
        "vw_inner": model.vw_inner,
        "jitter": model.jitter,
        "out": args.out.with_extension("json"),
    }));
    Ok(0)
}

fn cmd_limit_sample(args: LimitSampleArgs) -> Result<i32> {
    let model = limit::LimitModel::load(&args.model)?;
    let grid: Vec<f64> = args
        .grid
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad grid point '{tok}'")))
        })
        .collect::<Result<_>>()?;
    let ens = limit::sample_paths(&model, &grid, args.reps, args.seed)?;
    let mut buf = String::new();
    let header: Vec<String> = (0..=model.d).map(|c| format!("x{c}")).collect();
    buf.push_str(&header.join(","));
    buf.push('\n');
    for r in 0..args.reps {
        let row: Vec<String> = ens
            .endpoint(r)
            .iter()
            .map(|x| format!("{x:.16e}"))
            .collect();
        buf.push_str(&row.join(","));
        buf.push('\n');
    }
    crate::util::write_atomic(&args.out, buf.as_bytes())?;
    print_summary(json!({
        "command": "limit sample",
        "reps": args.reps,
        "seed": args.seed,
        "dim": model.d + 1,
        "out": args.out,
    }));
    Ok(0)
}

fn cmd_mc_run(args: McRunArgs) -> Result<i32> {
    let mut config = mc::ExperimentConfig::load(&args.config)?;
    // precedence: flag, then environment, then config file
    let env_workers = std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|s| s.parse::<usize>().ok());
    if let Some(k) = args.workers.or(env_workers) {
        config.workers = Some(k);
    }
    let out = mc::run(&config)?;
    mc::write_outputs(&args.out, &out)?;
    print_summary(json!({
        "command": "mc run",
        "experiment": out.report.experiment,
        "pass": out.report.pass,
        "cells": out.report.cells.len(),
        "config_digest": out.report.config_digest,
        "out": args.out.join("report.json"),
    }));
    Ok(if out.report.pass { 0 } else { 1 })
}

fn cmd_weights_near_orth(args: NearOrthArgs) -> Result<i32> {
    let family = near_orthogonal_family(args.d, args.m, args.coherence, args.seed, args.max_tries)?;
    let coh = if family.len() >= 2 {
        coherence(&family)?
    } else {
        0.0
    };
    WeightsFile::from_vectors(&family).save(&args.out)?;
    print_summary(json!({
        "command": "weights near-orth",
        "d": args.d,
        "m": args.m,
        "coherence": coh,
        "threshold": args.coherence / (args.d as f64).sqrt(),
        "out": args.out,
    }));
    Ok(0)
}

fn cmd_weights_coherence(args: CoherenceArgs) -> Result<i32> {
    let vectors = WeightsFile::load(&args.weights)?.build()?;
    let coh = coherence(&vectors)?;
    print_summary(json!({
        "command": "weights coherence",
        "m": vectors.len(),
        "coherence": coh,
    }));
    Ok(0)
}

fn cmd_weights_unit(args: UnitArgs) -> Result<i32> {
    let v = WeightVector::unit(args.index, args.d)?;
    WeightsFile::from_vectors(std::slice::from_ref(&v)).save(&args.out)?;
    print_summary(json!({
        "command": "weights unit",
        "index": args.index,
        "d": args.d,
        "out": args.out,
    }));
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> i32 {
        dispatch(args.iter().map(|s| s.to_string()))
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(&["hidimcov", "no-such-command"]), 2);
        assert_eq!(run(&["hidimcov", "simulate"]), 2); // missing args
        assert_eq!(run(&["hidimcov", "simulate", "--bogus"]), 2);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run(&["hidimcov", "--help"]), 0);
    }

    #[test]
    fn computation_errors_exit_one() {
        // nonexistent panel file
        assert_eq!(
            run(&["hidimcov", "cov", "--panel", "/nonexistent/panel.bin"]),
            1
        );
    }
}
