//! End-to-end runs: choose steps, certify, solve for a reference, iterate.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contraction::{self, ContractionCertificate, StepDesignReport, DEFAULT_TARGET_FRACTION};
use crate::error::{Error, Result};
use crate::geometry::MetricSpaceView;
use crate::problems::{self, OracleSolution, ENUMERATION_LIMIT};
use crate::trace::{self, RateFit, RunOptions, Termination, TrajectoryTrace, DEFAULT_BURN_IN};
use crate::types::{ConstrainedProblem, ConstraintKind, PrimalDualState, StepConfig};

/// Default number of random `Ψ` draws when the vertex set is too large.
pub const DEFAULT_PSI_DRAWS: usize = 32;
/// Constraint counts up to this use enumeration for the reference solution.
const REFERENCE_ENUMERATION_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepRule {
    /// Theorem designer for equality problems, practical rule for inequality.
    Auto,
    /// Closed-form or grid designer from the convergence theorems.
    Theorem,
    /// `γ = ρ̄/σ̄`, `α = 1/(ρ̄ + γσ̄)`, `β = min{γ/2, ρ̲/(2σ̄)}`.
    Practical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub rule: StepRule,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub target_fraction: f64,
    pub run: RunOptions,
    pub certify: bool,
    pub psi_draws: usize,
    /// Standard normal initial state from this seed; zeros when absent.
    pub init_seed: Option<u64>,
    pub burn_in: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            rule: StepRule::Auto,
            alpha: None,
            beta: None,
            gamma: None,
            target_fraction: DEFAULT_TARGET_FRACTION,
            run: RunOptions::default(),
            certify: true,
            psi_draws: DEFAULT_PSI_DRAWS,
            init_seed: None,
            burn_in: DEFAULT_BURN_IN,
        }
    }
}

/// Initial iterate: zeros, or independent standard normals from `seed`.
pub fn initial_state(problem: &ConstrainedProblem, seed: Option<u64>) -> PrimalDualState {
    match seed {
        None => PrimalDualState::zeros(problem),
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut draw = |len: usize| DVector::from_iterator(len, (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let x = draw(problem.n());
            let lambda = draw(problem.p());
            PrimalDualState { x, lambda, k: 0 }
        }
    }
}

/// Dual base step `ρ̲/(2σ̄)` shared by the practical and sweep rules.
pub fn base_beta(problem: &ConstrainedProblem) -> f64 {
    problem.objective.rho_lo() / (2.0 * problem.constraint.sigma_hi())
}

/// Steps for penalty `gamma`: `α = 1/(ρ̄ + γσ̄)`, `β = min{γ/2, ρ̲/(2σ̄)}`.
pub fn steps_for_gamma(problem: &ConstrainedProblem, gamma: f64) -> Result<StepConfig> {
    let alpha = 1.0 / (problem.objective.rho_hi() + gamma * problem.constraint.sigma_hi());
    StepConfig::inequality(alpha, base_beta(problem).min(gamma / 2.0), gamma)
}

pub fn practical_steps(problem: &ConstrainedProblem, gamma: Option<f64>) -> Result<StepConfig> {
    let gamma = gamma.unwrap_or(problem.objective.rho_hi() / problem.constraint.sigma_hi());
    steps_for_gamma(problem, gamma)
}

/// Resolves the step configuration. Explicit `alpha`/`beta` override the
/// rule; an infeasible theorem design is an error naming the binding
/// constraint.
pub fn resolve_steps(
    problem: &ConstrainedProblem,
    config: &PipelineConfig,
) -> Result<(StepConfig, Option<StepDesignReport>)> {
    let kind = problem.kind();
    let theorem = match config.rule {
        StepRule::Theorem => true,
        StepRule::Practical => false,
        StepRule::Auto => kind == ConstraintKind::Equality,
    };
    let explicit = config.alpha.is_some() && config.beta.is_some();
    let (base, design) = if explicit {
        (None, None)
    } else if theorem {
        let report = match kind {
            ConstraintKind::Equality => contraction::design_steps_eq(problem, config.target_fraction)?,
            ConstraintKind::Inequality => {
                let gamma = config.gamma.unwrap_or(problem.objective.rho_hi() / problem.constraint.sigma_hi());
                contraction::design_steps_ineq(problem, gamma, config.target_fraction)?
            }
        };
        if !report.feasible {
            return Err(Error::DesignRejected(format!(
                "no feasible step sizes; binding constraint: {}",
                report.binding.as_deref().unwrap_or("unknown")
            )));
        }
        (Some(report.steps), Some(report))
    } else {
        let steps = match kind {
            ConstraintKind::Equality => contraction::design_steps_eq(problem, config.target_fraction)?.steps,
            ConstraintKind::Inequality => practical_steps(problem, config.gamma)?,
        };
        (Some(steps), None)
    };
    let alpha = config.alpha.or(base.map(|s| s.alpha())).expect("alpha resolved");
    let beta = config.beta.or(base.map(|s| s.beta())).expect("beta resolved");
    let gamma = config.gamma.or(base.map(|s| s.gamma())).unwrap_or(1.0);
    let steps = match kind {
        ConstraintKind::Equality => StepConfig::equality(alpha, beta)?,
        ConstraintKind::Inequality => StepConfig::inequality(alpha, beta, gamma)?,
    };
    // keep the designer's report only if nothing was overridden
    let design = design.filter(|r| r.steps == steps);
    Ok((steps, design))
}

/// Certificate for `steps`: the theorem's closed-form rate when the design
/// satisfies the theorem, otherwise the numerically tuned metric.
pub fn certificate_for(
    problem: &ConstrainedProblem,
    steps: &StepConfig,
    design: Option<&StepDesignReport>,
    psi_draws: usize,
) -> Result<ContractionCertificate> {
    let assessed = match design {
        Some(r) => r.clone(),
        None => match problem.kind() {
            ConstraintKind::Equality => contraction::assess_eq(problem, *steps)?,
            ConstraintKind::Inequality => contraction::assess_ineq(problem, *steps)?,
        },
    };
    let theorem_cert = if assessed.feasible && assessed.c < 1.0 {
        contraction::certify(problem, steps, assessed.c, psi_draws).ok().filter(|c| c.verified)
    } else {
        None
    };
    let cert = match theorem_cert {
        Some(cert) => cert,
        None => contraction::certify_numerical(problem, steps, psi_draws)?,
    };
    Ok(cert.with_design(assessed))
}

/// Exact solution used as the distance reference: a linear solve for
/// equality problems, enumeration for few inequality constraints, and an
/// active set read off a converged run otherwise.
pub fn reference_solution(problem: &ConstrainedProblem) -> Result<OracleSolution> {
    match problem.kind() {
        ConstraintKind::Equality => problems::solve_oracle_eq(problem),
        ConstraintKind::Inequality if problem.p() <= REFERENCE_ENUMERATION_LIMIT => problems::solve_oracle_ineq(problem),
        ConstraintKind::Inequality => {
            let steps = practical_steps(problem, None)?;
            let options = RunOptions { max_iter: 1_000_000, tol: 1e-11, record_stride: 1 };
            let (guess, _) = trace::solve(problem, &steps, &PrimalDualState::zeros(problem), &options)?;
            match problems::solve_oracle_from_guess(problem, &guess, steps.gamma()) {
                Ok(sol) => Ok(sol),
                Err(_) if problem.p() <= ENUMERATION_LIMIT => problems::solve_oracle_ineq(problem),
                Err(e) => Err(e),
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub steps: StepConfig,
    pub design: Option<StepDesignReport>,
    pub certificate: Option<ContractionCertificate>,
    /// Why there is no certificate, or why the identity metric was used.
    pub certificate_error: Option<String>,
    pub reference: OracleSolution,
    pub trace: TrajectoryTrace,
    pub fit: Option<RateFit>,
}

impl PipelineOutcome {
    pub fn converged(&self) -> bool {
        self.trace.termination() == Termination::Converged
    }

    pub fn verified(&self) -> bool {
        self.certificate.as_ref().is_some_and(|c| c.verified)
    }
}

/// Runs `problem` with already resolved steps against a known reference.
pub fn run_with_steps(
    problem: &ConstrainedProblem,
    steps: StepConfig,
    design: Option<StepDesignReport>,
    reference: &OracleSolution,
    config: &PipelineConfig,
) -> Result<PipelineOutcome> {
    let (certificate, certificate_error) = if config.certify {
        match certificate_for(problem, &steps, design.as_ref(), config.psi_draws) {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    let dim = problem.n() + problem.p();
    let (view, metric_note) = match &certificate {
        Some(cert) => (MetricSpaceView::new(cert.metric_matrix()?)?, None),
        None => match contraction::build_metric(problem, &steps, design.as_ref().map_or(0.5, |d| d.c.min(0.999))) {
            Ok(m) => (MetricSpaceView::new(m)?, None),
            Err(e) => (MetricSpaceView::identity(dim), Some(format!("identity metric used: {e}"))),
        },
    };
    let init = initial_state(problem, config.init_seed);
    let mut trace = trace::run(problem, &steps, &init, &config.run, &reference.state(), &view)?;
    trace.metadata.certificate = certificate.as_ref().map(Into::into);
    trace.metadata.metric_note = metric_note;
    let fit = trace::fit_rate(&trace.rows, config.burn_in).ok();
    Ok(PipelineOutcome { steps, design, certificate, certificate_error, reference: reference.clone(), trace, fit })
}

pub fn run_pipeline(problem: &ConstrainedProblem, config: &PipelineConfig) -> Result<PipelineOutcome> {
    let (steps, design) = resolve_steps(problem, config)?;
    let reference = reference_solution(problem)?;
    run_with_steps(problem, steps, design, &reference, config)
}

/// Penalty values to sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaList {
    /// Multiples `k` of the base dual step, `γ = k·ρ̲/(2σ̄)`.
    Multiples(Vec<f64>),
    Absolute(Vec<f64>),
}

impl GammaList {
    pub fn resolve(&self, problem: &ConstrainedProblem) -> Result<Vec<(f64, Option<f64>)>> {
        let out: Vec<(f64, Option<f64>)> = match self {
            GammaList::Multiples(ks) => ks.iter().map(|&k| (k * base_beta(problem), Some(k))).collect(),
            GammaList::Absolute(gs) => gs.iter().map(|&g| (g, None)).collect(),
        };
        if out.is_empty() {
            return Err(Error::InvalidSteps("gamma list is empty".into()));
        }
        if let Some(&(g, _)) = out.iter().find(|(g, _)| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::InvalidSteps(format!("gamma values must be positive, got {g}")));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub multiple: Option<f64>,
    pub alpha: f64,
    pub beta: f64,
    /// Closed-form rate when the steps satisfy the theorem's hypotheses.
    pub tau_theorem: Option<f64>,
    pub tau_cert: Option<f64>,
    pub cert_verified: bool,
    pub tau_hat: Option<f64>,
    pub termination: Option<Termination>,
    pub iterations: Option<usize>,
    pub final_kkt: Option<f64>,
    pub error: Option<String>,
}

pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub runs: Vec<Result<PipelineOutcome>>,
}

/// One run per penalty with the sweep step rule and a common initial state;
/// runs proceed in parallel and a failed run does not stop the others.
pub fn gamma_sweep(problem: &ConstrainedProblem, gammas: &GammaList, config: &PipelineConfig) -> Result<SweepOutcome> {
    if problem.kind() != ConstraintKind::Inequality {
        return Err(Error::Shape("gamma sweep needs an inequality problem".into()));
    }
    let list = gammas.resolve(problem)?;
    let reference = reference_solution(problem)?;
    let runs: Vec<(f64, Option<f64>, Result<PipelineOutcome>)> = list
        .par_iter()
        .map(|&(gamma, multiple)| {
            let outcome = steps_for_gamma(problem, gamma)
                .and_then(|steps| run_with_steps(problem, steps, None, &reference, config));
            (gamma, multiple, outcome)
        })
        .collect();
    let rows = runs
        .iter()
        .map(|(gamma, multiple, outcome)| sweep_row(problem, *gamma, *multiple, outcome))
        .collect();
    Ok(SweepOutcome { rows, runs: runs.into_iter().map(|(_, _, r)| r).collect() })
}

fn sweep_row(problem: &ConstrainedProblem, gamma: f64, multiple: Option<f64>, outcome: &Result<PipelineOutcome>) -> SweepRow {
    let steps = steps_for_gamma(problem, gamma).ok();
    let tau_theorem = steps.and_then(|s| {
        let r = contraction::assess_ineq(problem, s).ok()?;
        if r.feasible { contraction::rate(problem, &s, r.c).ok() } else { None }
    });
    let mut row = SweepRow {
        gamma,
        multiple,
        alpha: steps.map_or(f64::NAN, |s| s.alpha()),
        beta: steps.map_or(f64::NAN, |s| s.beta()),
        tau_theorem,
        tau_cert: None,
        cert_verified: false,
        tau_hat: None,
        termination: None,
        iterations: None,
        final_kkt: None,
        error: None,
    };
    match outcome {
        Ok(o) => {
            row.tau_cert = o.certificate.as_ref().map(|c| c.tau);
            row.cert_verified = o.verified();
            row.tau_hat = o.fit.map(|f| f.tau_hat);
            row.termination = Some(o.trace.termination());
            row.iterations = Some(o.trace.metadata.iterations);
            row.final_kkt = Some(o.trace.metadata.final_kkt);
            row.error = o.certificate_error.clone();
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}
