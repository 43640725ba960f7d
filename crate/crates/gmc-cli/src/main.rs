//! `gmc` — CLI for the moment-adapted two-stage Monte Carlo estimator:
//! plan calculators, closed-form cost bounds, adversarial instances, and
//! the seeded experiment harness.
//!
//! Exit codes: 0 success, 1 computation error, 2 usage error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use gmc_core::bounds::{
    adversary_heavy, adversary_qnorm_pair, adversary_variance_pair, fixed_cost_lb, wald_lb,
    wor_lb_qnorm, wor_lb_variance,
};
use gmc_core::harness::{out_of_cone_demo, run_experiment, sprt_experiment, ExperimentConfig, Mode};
use gmc_core::tuner::{expected_cost_bound, plan_default, Accuracy};
use gmc_core::two_stage::{estimate_mean, integrate, RunRecord};
use gmc_core::{ConeSpec, Distribution};
use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "gmc",
    version,
    about = "Two-stage Monte Carlo mean estimation with guaranteed accuracy on cone classes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the stage plan for (p, q, K, eps, delta) as JSON
    Params(ParamsArgs),
    /// Estimate the mean of a modelled distribution
    Estimate(EstimateArgs),
    /// Monte Carlo integration of a named integrand over uniform [0, 1)
    Integrate(IntegrateArgs),
    /// Print the applicable cost lower bounds as JSON
    Bounds(BoundsArgs),
    /// Run a seeded experiment from a JSON config
    Experiment(ExperimentArgs),
    /// Construct an adversarial instance or pair
    Adversary(AdversaryArgs),
}

fn parse_p(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("invalid number {s:?}"))?;
    if v >= 1.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("p must be a finite number >= 1".into())
    }
}

fn parse_q(s: &str) -> Result<f64, String> {
    if matches!(s, "inf" | "Inf" | "infinity") {
        return Ok(f64::INFINITY);
    }
    let v: f64 = s.parse().map_err(|_| format!("invalid number {s:?}"))?;
    if v > 1.0 {
        Ok(v)
    } else {
        Err("q must exceed 1 (or be \"inf\")".into())
    }
}

fn parse_cap_k(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("invalid number {s:?}"))?;
    if v > 1.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("K must exceed 1".into())
    }
}

fn parse_eps(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("invalid number {s:?}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("eps must be a positive number".into())
    }
}

fn parse_delta_half(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("invalid number {s:?}"))?;
    if v > 0.0 && v < 0.5 {
        Ok(v)
    } else {
        Err("delta must lie in (0, 1/2)".into())
    }
}

fn parse_delta_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("invalid number {s:?}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err("delta must lie in (0, 1)".into())
    }
}

#[derive(Args)]
struct ConeArgs {
    /// Lower moment order p (>= 1)
    #[arg(long, value_parser = parse_p)]
    p: f64,
    /// Upper moment order q (> p), or "inf"
    #[arg(long, value_parser = parse_q)]
    q: f64,
    /// Cone constant K (> 1)
    #[arg(long = "K", value_parser = parse_cap_k)]
    k: f64,
}

impl ConeArgs {
    fn cone(&self) -> Result<ConeSpec, CliError> {
        ConeSpec::new(self.p, self.q, self.k).map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Args)]
struct ParamsArgs {
    #[command(flatten)]
    cone: ConeArgs,
    #[arg(long, value_parser = parse_eps)]
    eps: f64,
    #[arg(long, value_parser = parse_delta_half)]
    delta: f64,
    /// First central moment at which to evaluate the expected-cost bound
    #[arg(long)]
    rho1: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Distribution literal, e.g. '{"kind":"discrete","atoms":[[0,0.5],[2,0.5]]}'
    #[arg(long)]
    dist: String,
    #[command(flatten)]
    cone: ConeArgs,
    #[arg(long, value_parser = parse_eps)]
    eps: f64,
    #[arg(long, value_parser = parse_delta_half)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    lane: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Integrand {
    /// f(x) = value
    Const,
    /// f(x) = x
    X,
    /// f(x) = 1 if x < threshold else 0
    Indicator,
}

#[derive(Args)]
struct IntegrateArgs {
    #[arg(long, value_enum)]
    integrand: Integrand,
    /// Constant for --integrand const
    #[arg(long)]
    value: Option<f64>,
    /// Threshold for --integrand indicator
    #[arg(long)]
    threshold: Option<f64>,
    #[command(flatten)]
    cone: ConeArgs,
    #[arg(long, value_parser = parse_eps)]
    eps: f64,
    #[arg(long, value_parser = parse_delta_half)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    lane: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    cone: ConeArgs,
    #[arg(long, value_parser = parse_eps)]
    eps: f64,
    #[arg(long, value_parser = parse_delta_unit)]
    delta: f64,
    /// Standard-deviation ball radius (enables the bounded-variance bound)
    #[arg(long)]
    sigma: Option<f64>,
    /// Centered L_q ball radius (enables the bounded-q-norm bound)
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON config matching the experiment schema
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's replication count
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Variance,
    Qnorm,
    Heavy,
}

#[derive(Args)]
struct AdversaryArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Standard deviation (variance family)
    #[arg(long)]
    sigma: Option<f64>,
    /// Mean offset parameter (variance family)
    #[arg(long)]
    alpha: Option<f64>,
    /// Centered L_q norm budget (qnorm family)
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_parser = parse_eps)]
    eps: Option<f64>,
    #[arg(long, value_parser = parse_p)]
    p: Option<f64>,
    #[arg(long, value_parser = parse_q)]
    q: Option<f64>,
    #[arg(long = "K", value_parser = parse_cap_k)]
    k: Option<f64>,
    /// Success probability (heavy family)
    #[arg(long)]
    a: Option<f64>,
    /// Mean of the heavy instance (heavy family)
    #[arg(long)]
    scale: Option<f64>,
    /// When given, attach the sequential-test floor at this confidence
    #[arg(long, value_parser = parse_delta_half)]
    delta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Computation(String),
}

impl From<gmc_core::Error> for CliError {
    fn from(e: gmc_core::Error) -> Self {
        CliError::Computation(e.to_string())
    }
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            std::process::exit(2);
        }
        Err(CliError::Computation(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
    }
}

/// Serialize through `serde_json::Value` so object keys come out in
/// alphabetical order; reports re-parse losslessly.
fn canonical_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let v = serde_json::to_value(value)
        .map_err(|e| CliError::Computation(format!("serialization failed: {e}")))?;
    let mut s = serde_json::to_string_pretty(&v)
        .map_err(|e| CliError::Computation(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn write_out(text: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Computation(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            std::io::stdout()
                .flush()
                .map_err(|e| CliError::Computation(e.to_string()))
        }
    }
}

fn runs_csv(runs: &[RunRecord], true_mean: f64) -> String {
    let mut s = String::from("lane,estimate,error,n1,m_prime,n2,total_cost\n");
    for r in runs {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.lane_index,
            r.estimate,
            (r.estimate - true_mean).abs(),
            r.n1,
            r.m_prime,
            r.n2,
            r.total_cost
        ));
    }
    s
}

#[derive(Serialize)]
struct ParamsOutput {
    cone: ConeSpec,
    epsilon: f64,
    delta: f64,
    plan: gmc_core::StagePlan,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    expected_cost_bound: Option<f64>,
}

#[derive(Serialize)]
struct BoundsOutput {
    cone: ConeSpec,
    epsilon: f64,
    delta: f64,
    fixed_cost_lb: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    wor_lb_variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wor_lb_qnorm: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct PairOutput {
    pair: gmc_core::bounds::AdversaryPair,
    #[serde(skip_serializing_if = "Option::is_none")]
    wald_lb: Option<f64>,
}

#[derive(Serialize)]
struct HeavyOutput {
    dist: Distribution,
    mean: f64,
    kappa_1_2: f64,
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Params(args) => {
            let cone = args.cone.cone()?;
            let acc = Accuracy::new(args.eps, args.delta).map_err(CliError::from)?;
            let plan = plan_default(&cone, &acc);
            let bound = args.rho1.map(|r| expected_cost_bound(&plan, r));
            let out = ParamsOutput {
                cone,
                epsilon: args.eps,
                delta: args.delta,
                plan,
                rho1: args.rho1,
                expected_cost_bound: bound,
            };
            write_out(&canonical_json(&out)?, args.out.as_ref())
        }
        Command::Estimate(args) => {
            let cone = args.cone.cone()?;
            let dist: Distribution = serde_json::from_str(&args.dist)
                .map_err(|e| CliError::Usage(format!("invalid --dist literal: {e}")))?;
            let rec = estimate_mean(&dist, &cone, args.eps, args.delta, args.seed, args.lane)?;
            write_out(&canonical_json(&rec)?, args.out.as_ref())
        }
        Command::Integrate(args) => {
            let cone = args.cone.cone()?;
            let rec = match args.integrand {
                Integrand::Const => {
                    let c = args.value.ok_or_else(|| {
                        CliError::Usage("--integrand const requires --value".into())
                    })?;
                    integrate(
                        |_x: &f64| c,
                        |s| s.next_uniform(),
                        &cone,
                        args.eps,
                        args.delta,
                        args.seed,
                        args.lane,
                    )?
                }
                Integrand::X => integrate(
                    |x: &f64| *x,
                    |s| s.next_uniform(),
                    &cone,
                    args.eps,
                    args.delta,
                    args.seed,
                    args.lane,
                )?,
                Integrand::Indicator => {
                    let t = args.threshold.ok_or_else(|| {
                        CliError::Usage("--integrand indicator requires --threshold".into())
                    })?;
                    integrate(
                        |x: &f64| if *x < t { 1.0 } else { 0.0 },
                        |s| s.next_uniform(),
                        &cone,
                        args.eps,
                        args.delta,
                        args.seed,
                        args.lane,
                    )?
                }
            };
            write_out(&canonical_json(&rec)?, args.out.as_ref())
        }
        Command::Bounds(args) => {
            let cone = args.cone.cone()?;
            let mut warnings = Vec::new();
            let variance_bound = match args.sigma {
                Some(sigma) => {
                    if cone.q < 2.0 {
                        return Err(CliError::Computation(
                            "the bounded-variance bound requires q >= 2".into(),
                        ));
                    }
                    Some(wor_lb_variance(sigma, args.eps, args.delta, cone.k)?)
                }
                None => None,
            };
            let qnorm_bound = match args.tau {
                Some(tau) => {
                    let b = wor_lb_qnorm(tau, args.eps, args.delta, cone.p, cone.q, cone.k)?;
                    if cone.k < 1.5 {
                        warnings.push(format!(
                            "the q-norm bound's prefactor vanishes as K -> 1 (K = {}); treat it as loose",
                            cone.k
                        ));
                    }
                    Some(b)
                }
                None => None,
            };
            let out = BoundsOutput {
                cone,
                epsilon: args.eps,
                delta: args.delta,
                fixed_cost_lb: fixed_cost_lb(&cone, args.delta),
                wor_lb_variance: variance_bound,
                wor_lb_qnorm: qnorm_bound,
                warnings,
            };
            write_out(&canonical_json(&out)?, args.out.as_ref())
        }
        Command::Experiment(args) => {
            let raw = std::fs::read_to_string(&args.config).map_err(|e| {
                CliError::Usage(format!("cannot read {}: {e}", args.config.display()))
            })?;
            let mut config: ExperimentConfig = serde_json::from_str(&raw)
                .map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
            if let Some(seed) = args.seed {
                config.master_seed = seed;
            }
            if let Some(reps) = args.reps {
                config.replications = reps;
            }
            match config.mode {
                Mode::Coverage => {
                    let output = run_experiment(&config)?;
                    let text = match args.format {
                        OutputFormat::Json => canonical_json(&output.report)?,
                        OutputFormat::Csv => runs_csv(&output.runs, output.true_mean),
                    };
                    eprintln!("wall time: {:.3} s", output.report.wall_time_seconds);
                    write_out(&text, args.out.as_ref())
                }
                Mode::OutOfCone => {
                    let a = config.heavy_a.ok_or_else(|| {
                        CliError::Usage("mode out_of_cone requires \"heavy_a\" in the config".into())
                    })?;
                    let output = out_of_cone_demo(
                        &config.cone,
                        config.epsilon,
                        config.delta,
                        a,
                        config.replications,
                        config.master_seed,
                    )?;
                    let text = match args.format {
                        OutputFormat::Json => canonical_json(&output.report)?,
                        OutputFormat::Csv => runs_csv(&output.runs, output.true_mean),
                    };
                    eprintln!("wall time: {:.3} s", output.report.wall_time_seconds);
                    write_out(&text, args.out.as_ref())
                }
                Mode::Sprt => {
                    let alpha = config.sprt_alpha.unwrap_or(0.5);
                    let pair = adversary_variance_pair(1.0, alpha, config.cone.k)?;
                    let report = sprt_experiment(
                        &pair,
                        config.delta,
                        config.replications,
                        config.master_seed,
                    )?;
                    if matches!(args.format, OutputFormat::Csv) {
                        return Err(CliError::Usage(
                            "csv output is only available for coverage and out_of_cone modes"
                                .into(),
                        ));
                    }
                    eprintln!("wall time: {:.3} s", report.wall_time_seconds);
                    write_out(&canonical_json(&report)?, args.out.as_ref())
                }
            }
        }
        Command::Adversary(args) => {
            let text = match args.family {
                Family::Variance => {
                    let sigma = args
                        .sigma
                        .ok_or_else(|| CliError::Usage("variance family requires --sigma".into()))?;
                    let alpha = args
                        .alpha
                        .ok_or_else(|| CliError::Usage("variance family requires --alpha".into()))?;
                    let k = args
                        .k
                        .ok_or_else(|| CliError::Usage("variance family requires --K".into()))?;
                    let pair = adversary_variance_pair(sigma, alpha, k)?;
                    let floor = args.delta.map(|d| wald_lb(&pair, d)).transpose()?;
                    canonical_json(&PairOutput {
                        pair,
                        wald_lb: floor,
                    })?
                }
                Family::Qnorm => {
                    let tau = args
                        .tau
                        .ok_or_else(|| CliError::Usage("qnorm family requires --tau".into()))?;
                    let eps = args
                        .eps
                        .ok_or_else(|| CliError::Usage("qnorm family requires --eps".into()))?;
                    let p = args
                        .p
                        .ok_or_else(|| CliError::Usage("qnorm family requires --p".into()))?;
                    let q = args
                        .q
                        .ok_or_else(|| CliError::Usage("qnorm family requires --q".into()))?;
                    let k = args
                        .k
                        .ok_or_else(|| CliError::Usage("qnorm family requires --K".into()))?;
                    let pair = adversary_qnorm_pair(tau, eps, p, q, k)?;
                    let floor = args.delta.map(|d| wald_lb(&pair, d)).transpose()?;
                    canonical_json(&PairOutput {
                        pair,
                        wald_lb: floor,
                    })?
                }
                Family::Heavy => {
                    let a = args
                        .a
                        .ok_or_else(|| CliError::Usage("heavy family requires --a".into()))?;
                    let scale = args
                        .scale
                        .ok_or_else(|| CliError::Usage("heavy family requires --scale".into()))?;
                    let dist = adversary_heavy(a, scale)?;
                    let mean = dist.mean()?;
                    let kappa_1_2 = dist.kappa(1.0, 2.0)?;
                    canonical_json(&HeavyOutput {
                        dist,
                        mean,
                        kappa_1_2,
                    })?
                }
            };
            write_out(&text, args.out.as_ref())
        }
    }
}
