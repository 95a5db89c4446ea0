//! `pdgo` command-line driver.
//!
//! Exit codes: 0 success, 1 usage or data error, 2 infeasible design or
//! `gamma ≥ 2·beta` violated, 3 divergence, 4 iteration limit reached or
//! certificate not verified.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pdgo::io::{read_problem, write_json, write_problem};
use pdgo::pipeline::{self, GammaList, PipelineConfig, PipelineOutcome, StepRule, DEFAULT_PSI_DRAWS};
use pdgo::problems::{generate, GeneratorSpec};
use pdgo::trace::{write_csv, write_metadata, RunOptions, Termination};
use pdgo::{ConstrainedProblem, ConstraintKind, Error};

#[derive(Parser)]
#[command(name = "pdgo", version, about = "Primal-dual gradient optimization with contraction certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random problem JSON file.
    Generate(GenerateArgs),
    /// Design or take step sizes, certify, iterate, and write the trace.
    Run(RunArgs),
    /// One run per penalty value with a common initial state.
    GammaSweep(SweepArgs),
    /// Certificate only, no trajectory.
    Certify(CertifyArgs),
    /// Print the exact solution.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum KindArg {
    Equality,
    Inequality,
}

impl From<KindArg> for ConstraintKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Equality => ConstraintKind::Equality,
            KindArg::Inequality => ConstraintKind::Inequality,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum RuleArg {
    Auto,
    Theorem,
    Practical,
}

impl From<RuleArg> for StepRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Auto => StepRule::Auto,
            RuleArg::Theorem => StepRule::Theorem,
            RuleArg::Practical => StepRule::Practical,
        }
    }
}

#[derive(Args, Serialize)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long)]
    seed: u64,
    /// Multiple of the identity added to Q₀ᵀQ₀.
    #[arg(long, default_value_t = 5.0)]
    shift: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize, Clone)]
struct StepArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 0.9)]
    target_fraction: f64,
    #[arg(long, value_enum, default_value_t = RuleArg::Auto)]
    step_rule: RuleArg,
    /// Random Ψ draws when p exceeds the vertex limit.
    #[arg(long, default_value_t = DEFAULT_PSI_DRAWS)]
    psi_draws: usize,
}

#[derive(Args, Serialize, Clone)]
struct IterArgs {
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 1)]
    record_stride: usize,
    /// Standard normal initial state from this seed (zeros when omitted).
    #[arg(long)]
    init_seed: Option<u64>,
    #[arg(long, default_value_t = 10)]
    burn_in: usize,
}

#[derive(Args, Serialize)]
struct RunArgs {
    #[arg(long)]
    problem: PathBuf,
    #[command(flatten)]
    steps: StepArgs,
    #[command(flatten)]
    iter: IterArgs,
    #[arg(long)]
    no_certify: bool,
    #[arg(long, default_value = "pdgo-out")]
    out_dir: PathBuf,
    #[arg(long)]
    trace_out: Option<PathBuf>,
    #[arg(long)]
    cert_out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SweepArgs {
    #[arg(long)]
    problem: PathBuf,
    /// Absolute penalty values.
    #[arg(long, value_delimiter = ',', num_args = 0.., conflicts_with = "gamma_multiples")]
    gammas: Option<Vec<f64>>,
    /// Multiples k of the base dual step, γ = k·ρ̲/(2σ̄).
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    gamma_multiples: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_PSI_DRAWS)]
    psi_draws: usize,
    #[command(flatten)]
    iter: IterArgs,
    #[arg(long)]
    no_certify: bool,
    #[arg(long, default_value = "pdgo-sweep")]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct CertifyArgs {
    #[arg(long)]
    problem: PathBuf,
    #[command(flatten)]
    steps: StepArgs,
    #[arg(long)]
    cert_out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct OracleArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct RunManifest<'a, C: Serialize> {
    subcommand: &'a str,
    config: C,
    inputs: BTreeMap<&'a str, String>,
    outputs: BTreeMap<String, String>,
    seed: Option<u64>,
    version: &'a str,
}

struct Failure {
    code: u8,
    message: String,
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::DesignRejected(_) => 2,
        Error::InvalidSteps(m) if m.contains("gamma ≥ 2·beta") => 2,
        Error::Divergence { .. } => 3,
        _ => 1,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: error_code(&e), message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

type CliResult = Result<u8, Failure>;

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn manifest<C: Serialize>(
    path: &Path,
    subcommand: &str,
    config: C,
    inputs: BTreeMap<&str, String>,
    outputs: BTreeMap<String, String>,
    seed: Option<u64>,
) -> Result<(), Failure> {
    let m = RunManifest { subcommand, config, inputs, outputs, seed, version: env!("CARGO_PKG_VERSION") };
    write_json(path, &m).map_err(Failure::from)
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))
}

fn pipeline_config(steps: &StepArgs, iter: &IterArgs, certify: bool) -> PipelineConfig {
    PipelineConfig {
        rule: steps.step_rule.into(),
        alpha: steps.alpha,
        beta: steps.beta,
        gamma: steps.gamma,
        target_fraction: steps.target_fraction,
        run: RunOptions { max_iter: iter.max_iter, tol: iter.tol, record_stride: iter.record_stride },
        certify,
        psi_draws: steps.psi_draws,
        init_seed: iter.init_seed,
        burn_in: iter.burn_in,
    }
}

fn outcome_code(outcome: &PipelineOutcome, certify: bool) -> u8 {
    match outcome.trace.termination() {
        Termination::Diverged => 3,
        Termination::MaxIter => 4,
        Termination::Converged if certify && !outcome.verified() => 4,
        Termination::Converged => 0,
    }
}

fn cmd_generate(args: GenerateArgs) -> CliResult {
    let spec = GeneratorSpec { n: args.n, p: args.p, kind: args.kind.into(), seed: args.seed, shift: args.shift };
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let problem = generate(&spec)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_problem(&args.out, &problem)?;
    let manifest_path = args.out.with_extension("manifest.json");
    let outputs = BTreeMap::from([("problem".to_string(), display(&args.out))]);
    manifest(&manifest_path, "generate", &args, BTreeMap::new(), outputs, Some(args.seed))?;
    println!("wrote {} (n = {}, p = {}, {})", args.out.display(), problem.n(), problem.p(), problem.kind());
    Ok(0)
}

/// Writes trace, sidecar and certificate for one run into `dir`.
fn write_outcome(
    outcome: &PipelineOutcome,
    dir: &Path,
    trace_out: Option<&Path>,
    cert_out: Option<&Path>,
) -> Result<BTreeMap<String, String>, Failure> {
    let trace_path = trace_out.map_or_else(|| dir.join("trace.csv"), Path::to_path_buf);
    let meta_path = trace_path.with_extension("json");
    write_csv(&trace_path, &outcome.trace.rows)?;
    write_metadata(&meta_path, &outcome.trace.metadata)?;
    let mut outputs =
        BTreeMap::from([("trace".to_string(), display(&trace_path)), ("trace_metadata".to_string(), display(&meta_path))]);
    if let Some(cert) = &outcome.certificate {
        let cert_path = cert_out.map_or_else(|| dir.join("certificate.json"), Path::to_path_buf);
        write_json(&cert_path, cert)?;
        outputs.insert("certificate".into(), display(&cert_path));
    }
    Ok(outputs)
}

fn summarize(outcome: &PipelineOutcome) -> String {
    let meta = &outcome.trace.metadata;
    let cert = match &outcome.certificate {
        Some(c) => format!(
            "τ = {:.9} ({}, {})",
            c.tau,
            serde_json::to_value(c.rate_source).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            if c.verified { "verified" } else { "not verified" }
        ),
        None => match &outcome.certificate_error {
            Some(e) => format!("no certificate: {e}"),
            None => "certification skipped".into(),
        },
    };
    let fit = outcome.fit.map_or_else(|| "τ̂ unavailable".into(), |f| format!("τ̂ = {:.9}", f.tau_hat));
    format!(
        "{} after {} iterations, KKT {:.3e}; α = {:e}, β = {:e}, γ = {:e}; {cert}; {fit}",
        termination_name(meta.termination),
        meta.iterations,
        meta.final_kkt,
        outcome.steps.alpha(),
        outcome.steps.beta(),
        outcome.steps.gamma()
    )
}

fn load(path: &Path) -> Result<ConstrainedProblem, Failure> {
    read_problem(path).map_err(|e| usage(e.to_string()))
}

fn cmd_run(args: RunArgs) -> CliResult {
    let problem = load(&args.problem)?;
    let certify = !args.no_certify;
    let config = pipeline_config(&args.steps, &args.iter, certify);
    let outcome = pipeline::run_pipeline(&problem, &config)?;
    create_dir(&args.out_dir)?;
    let outputs = write_outcome(&outcome, &args.out_dir, args.trace_out.as_deref(), args.cert_out.as_deref())?;
    let inputs = BTreeMap::from([("problem", display(&args.problem))]);
    let resolved = serde_json::json!({ "cli": &args, "pipeline": &config, "steps": outcome.steps });
    manifest(&args.out_dir.join("manifest.json"), "run", resolved, inputs, outputs, args.iter.init_seed)?;
    println!("{}", summarize(&outcome));
    if outcome.trace.termination() == Termination::Diverged {
        eprintln!("divergence: {}", outcome.trace.metadata.diagnostic);
    }
    Ok(outcome_code(&outcome, certify))
}

fn cmd_sweep(args: SweepArgs) -> CliResult {
    let problem = load(&args.problem)?;
    if problem.kind() != ConstraintKind::Inequality {
        return Err(usage("gamma-sweep needs an inequality problem"));
    }
    let list = match (&args.gammas, &args.gamma_multiples) {
        (Some(g), None) => GammaList::Absolute(g.clone()),
        (None, Some(k)) => GammaList::Multiples(k.clone()),
        (None, None) => GammaList::Multiples(vec![2.0, 4.0, 8.0]),
        (Some(_), Some(_)) => unreachable!("clap rejects both lists"),
    };
    if matches!(&list, GammaList::Absolute(v) | GammaList::Multiples(v) if v.is_empty()) {
        return Err(usage("gamma list is empty"));
    }
    let steps = StepArgs {
        alpha: None,
        beta: None,
        gamma: None,
        target_fraction: 0.9,
        step_rule: RuleArg::Practical,
        psi_draws: args.psi_draws,
    };
    let certify = !args.no_certify;
    let config = pipeline_config(&steps, &args.iter, certify);
    let sweep = pipeline::gamma_sweep(&problem, &list, &config)?;
    create_dir(&args.out_dir)?;
    let mut outputs = BTreeMap::new();
    let mut code = 0u8;
    for (i, (row, run)) in sweep.rows.iter().zip(&sweep.runs).enumerate() {
        let dir = args.out_dir.join(format!("gamma_{i:02}"));
        create_dir(&dir)?;
        match run {
            Ok(outcome) => {
                for (name, path) in write_outcome(outcome, &dir, None, None)? {
                    outputs.insert(format!("gamma_{i:02}/{name}"), path);
                }
                code = code.max(outcome_code(outcome, certify));
            }
            Err(e) => {
                eprintln!("γ = {}: {e}", row.gamma);
                code = code.max(error_code(e));
            }
        }
    }
    let summary_csv = args.out_dir.join("summary.csv");
    write_summary_csv(&summary_csv, &sweep.rows)?;
    let summary_json = args.out_dir.join("summary.json");
    write_json(&summary_json, &sweep.rows)?;
    outputs.insert("summary".into(), display(&summary_csv));
    outputs.insert("summary_json".into(), display(&summary_json));
    let inputs = BTreeMap::from([("problem", display(&args.problem))]);
    let resolved = serde_json::json!({ "cli": &args, "pipeline": &config, "gammas": &list });
    manifest(&args.out_dir.join("manifest.json"), "gamma-sweep", resolved, inputs, outputs, args.iter.init_seed)?;
    println!("{:>14} {:>14} {:>14} {:>12} {:>12} {:>10} {:>10}", "gamma", "alpha", "beta", "tau_cert", "tau_hat", "iters", "status");
    for row in &sweep.rows {
        println!(
            "{:>14.6e} {:>14.6e} {:>14.6e} {:>12} {:>12} {:>10} {:>10}",
            row.gamma,
            row.alpha,
            row.beta,
            row.tau_cert.map_or("-".into(), |t| format!("{t:.8}")),
            row.tau_hat.map_or("-".into(), |t| format!("{t:.8}")),
            row.iterations.map_or("-".into(), |k| k.to_string()),
            row.termination.map_or("error", termination_name),
        );
    }
    Ok(code)
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Converged => "converged",
        Termination::MaxIter => "max_iter",
        Termination::Diverged => "diverged",
    }
}

fn write_summary_csv(path: &Path, rows: &[pipeline::SweepRow]) -> Result<(), Failure> {
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let mut text = String::from("gamma,multiple,alpha,beta,tau_theorem,tau_cert,cert_verified,tau_hat,termination,iterations,final_kkt\n");
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.gamma,
            opt(r.multiple),
            r.alpha,
            r.beta,
            opt(r.tau_theorem),
            opt(r.tau_cert),
            r.cert_verified,
            opt(r.tau_hat),
            r.termination.map_or("", termination_name),
            r.iterations.map_or(String::new(), |k| k.to_string()),
            opt(r.final_kkt),
        ));
    }
    std::fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn cmd_certify(args: CertifyArgs) -> CliResult {
    let problem = load(&args.problem)?;
    let iter = IterArgs { max_iter: 1, tol: 1.0, record_stride: 1, init_seed: None, burn_in: 0 };
    let config = pipeline_config(&args.steps, &iter, true);
    let (steps, design) = pipeline::resolve_steps(&problem, &config)?;
    let cert = pipeline::certificate_for(&problem, &steps, design.as_ref(), args.steps.psi_draws)?;
    if let Some(path) = &args.cert_out {
        write_json(path, &cert)?;
        let inputs = BTreeMap::from([("problem", display(&args.problem))]);
        let outputs = BTreeMap::from([("certificate".to_string(), display(path))]);
        let resolved = serde_json::json!({ "cli": &args, "steps": steps });
        manifest(&path.with_extension("manifest.json"), "certify", resolved, inputs, outputs, None)?;
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "steps": steps,
            "c": cert.c,
            "tau": cert.tau,
            "rate_source": cert.rate_source,
            "mu_max": cert.mu_max,
            "mu_max_minus_one": cert.mu_max_minus_one,
            "verified": cert.verified,
            "samples_checked": cert.samples_checked,
            "exhaustive": cert.exhaustive,
        }))
        .expect("serializable")
    );
    Ok(if cert.verified { 0 } else { 4 })
}

fn cmd_oracle(args: OracleArgs) -> CliResult {
    let problem = load(&args.problem)?;
    let solution = pipeline::reference_solution(&problem)?;
    let text = serde_json::to_string_pretty(&solution).expect("serializable");
    match &args.out {
        Some(path) => {
            write_json(path, &solution)?;
            let inputs = BTreeMap::from([("problem", display(&args.problem))]);
            let outputs = BTreeMap::from([("oracle".to_string(), display(path))]);
            manifest(&path.with_extension("manifest.json"), "oracle", &args, inputs, outputs, None)?;
        }
        None => println!("{text}"),
    }
    Ok(0)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("PDGO_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| usage(format!("PDGO_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| usage(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Run(a) => cmd_run(a),
        Command::GammaSweep(a) => cmd_sweep(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Oracle(a) => cmd_oracle(a),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
