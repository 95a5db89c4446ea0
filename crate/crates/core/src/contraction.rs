//! Step-size design, the contraction metric, rates, and numerical
//! certificates for one PDGO step.
//!
//! A certificate checks `ΘᵀMΘ − M ⪯ (τ² − 1)M` through the largest
//! generalized eigenvalue of the pencil `(ΘᵀMΘ − M, M)`. The left side is
//! formed as `ΔᵀM + MΔ + ΔᵀMΔ` with `Δ = Θ − I`, which keeps its relative
//! accuracy when the step sizes are small and `ΘᵀMΘ` is close to `M`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics;
use crate::error::{Error, Result};
use crate::geometry::MetricSpaceView;
use crate::linalg;
use crate::types::{ConstrainedProblem, ConstraintKind, StepConfig};

pub const DEFAULT_TARGET_FRACTION: f64 = 0.9;
/// Largest constraint count for which every `{0,1}ᵖ` vertex of `Ψ` is checked.
pub const VERTEX_LIMIT: usize = 12;
/// Absolute tolerance on `μ − τ²`.
pub const CERTIFY_TOLERANCE: f64 = 1e-12;
pub const LEMMA4_TOLERANCE: f64 = 1e-12;
/// Seed for `Ψ` draws when the vertex set is too large.
pub const PSI_SEED: u64 = 0x5053_4921;

const GRID_POINTS: usize = 64;
const GRID_LO: f64 = 1e-8;
const GRID_HI: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDesignReport {
    pub steps: StepConfig,
    pub c: f64,
    /// `[c₁, c₂, c₃, c₄]`, inequality designs only.
    pub c_constants: Option<[f64; 4]>,
    pub feasible: bool,
    /// Distance of the governing `max{·}` expression below its bound
    /// (1/2 for equality, 1/4 for inequality).
    pub margin: f64,
    /// The constraint that limits the design, or blocks it when infeasible.
    pub binding: Option<String>,
}

fn check_fraction(target_fraction: f64) -> Result<()> {
    if target_fraction.is_finite() && target_fraction > 0.0 && target_fraction < 1.0 {
        Ok(())
    } else {
        Err(Error::DesignRejected(format!(
            "target fraction must lie strictly inside (0, 1), got {target_fraction}; at 1 the rate degenerates to τ = 1"
        )))
    }
}

fn require_kind(problem: &ConstrainedProblem, kind: ConstraintKind) -> Result<()> {
    if problem.kind() == kind {
        Ok(())
    } else {
        Err(Error::Shape(format!("expected an {kind} problem, got {}", problem.kind())))
    }
}

/// Evaluates given equality steps against `max{βσ̄/ρ̲, αρ̄} < 1/2`.
pub fn assess_eq(problem: &ConstrainedProblem, steps: StepConfig) -> Result<StepDesignReport> {
    require_kind(problem, ConstraintKind::Equality)?;
    let (rho_lo, rho_hi) = (problem.objective.rho_lo(), problem.objective.rho_hi());
    let sigma_hi = problem.constraint.sigma_hi();
    let dual_term = steps.beta() * sigma_hi / rho_lo;
    let primal_term = steps.alpha() * rho_hi;
    let worst = dual_term.max(primal_term);
    let binding = if dual_term >= primal_term { "beta·sigma_hi/rho_lo ≤ 1/2" } else { "alpha·rho_hi ≤ 1/2" };
    Ok(StepDesignReport {
        steps,
        c: 2.0 * worst,
        c_constants: None,
        feasible: worst < 0.5,
        margin: 0.5 - worst,
        binding: Some(binding.into()),
    })
}

/// Balanced equality design `α = t/(2ρ̄)`, `β = tρ̲/(2σ̄)`, so `c = t`.
pub fn design_steps_eq(problem: &ConstrainedProblem, target_fraction: f64) -> Result<StepDesignReport> {
    require_kind(problem, ConstraintKind::Equality)?;
    check_fraction(target_fraction)?;
    let alpha = target_fraction / (2.0 * problem.objective.rho_hi());
    let beta = target_fraction * problem.objective.rho_lo() / (2.0 * problem.constraint.sigma_hi());
    assess_eq(problem, StepConfig::equality(alpha, beta)?)
}

/// `[c₁, c₂, c₃, c₄]` for the inequality block.
pub fn theorem2_constants(problem: &ConstrainedProblem, alpha: f64, beta: f64, gamma: f64) -> [f64; 4] {
    let rho_lo = problem.objective.rho_lo();
    let rho_hi = problem.objective.rho_hi();
    let s_lo = problem.constraint.sigma_lo();
    let s_hi = problem.constraint.sigma_hi();
    let kappa = s_hi / s_lo;
    let c1 = (alpha * rho_hi).max(alpha * gamma * s_hi) * kappa.max(2.0);
    let c2 = 2.0 * beta * kappa * kappa.max(2.0);
    let c3 = (beta * s_hi / rho_lo) * 2f64.max(2.0 / (alpha * gamma * s_lo)).max(s_hi / (alpha * gamma * s_lo * s_lo));
    let c4 = 2.0 * (beta * s_hi * s_hi / (gamma * s_lo * s_lo)) * kappa.max(alpha * gamma * s_hi);
    [c1, c2, c3, c4]
}

fn argmax4(c: &[f64; 4]) -> usize {
    (1..4).fold(0, |best, i| if c[i] > c[best] { i } else { best })
}

/// Evaluates given inequality steps against `γ ≥ 2β` and `max{c₁..c₄} < 1/4`.
pub fn assess_ineq(problem: &ConstrainedProblem, steps: StepConfig) -> Result<StepDesignReport> {
    require_kind(problem, ConstraintKind::Inequality)?;
    let c = theorem2_constants(problem, steps.alpha(), steps.beta(), steps.gamma());
    let worst = c[argmax4(&c)];
    let gamma_ok = steps.gamma() >= 2.0 * steps.beta();
    let binding = if gamma_ok { format!("c{} ≤ 1/4", argmax4(&c) + 1) } else { "gamma ≥ 2·beta".into() };
    Ok(StepDesignReport {
        steps,
        c: 4.0 * worst,
        c_constants: Some(c),
        feasible: gamma_ok && worst < 0.25,
        margin: 0.25 - worst,
        binding: Some(binding),
    })
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect()
}

/// Grid search for the inequality design with the largest `αβ` subject to
/// `max{c₁..c₄} ≤ t/4` and `γ ≥ 2β`: a 64×64 logarithmic grid over
/// `[1e-8, 1]²`, then a second 64×64 grid spanning the neighbours of the
/// best cell.
pub fn design_steps_ineq(problem: &ConstrainedProblem, gamma: f64, target_fraction: f64) -> Result<StepDesignReport> {
    require_kind(problem, ConstraintKind::Inequality)?;
    check_fraction(target_fraction)?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidSteps(format!("gamma must be positive and finite, got {gamma}")));
    }
    let bound = target_fraction / 4.0;
    let worst = |alpha: f64, beta: f64| {
        let c = theorem2_constants(problem, alpha, beta, gamma);
        c[argmax4(&c)]
    };
    let admissible = |alpha: f64, beta: f64| gamma >= 2.0 * beta && worst(alpha, beta) <= bound;

    let search = |alphas: &[f64], betas: &[f64]| -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for &a in alphas {
            for &b in betas {
                if admissible(a, b) && best.is_none_or(|(ba, bb)| a * b > ba * bb) {
                    best = Some((a, b));
                }
            }
        }
        best
    };

    let grid = log_grid(GRID_LO, GRID_HI, GRID_POINTS);
    let Some((a0, b0)) = search(&grid, &grid) else {
        return Ok(infeasible_ineq(problem, gamma, &grid, bound));
    };
    let neighbours = |v: f64| {
        let i = grid.iter().position(|&g| g == v).unwrap_or(0);
        log_grid(grid[i.saturating_sub(1)], grid[(i + 1).min(GRID_POINTS - 1)], GRID_POINTS)
    };
    let (alpha, beta) = search(&neighbours(a0), &neighbours(b0))
        .filter(|&(a, b)| a * b > a0 * b0)
        .unwrap_or((a0, b0));
    let mut report = assess_ineq(problem, StepConfig::new(alpha, beta, gamma)?)?;
    let c = report.c_constants.expect("inequality report carries constants");
    report.binding = Some(format!("c{} ≤ target_fraction/4", argmax4(&c) + 1));
    Ok(report)
}

fn infeasible_ineq(problem: &ConstrainedProblem, gamma: f64, grid: &[f64], bound: f64) -> StepDesignReport {
    let betas: Vec<f64> = grid.iter().copied().filter(|&b| gamma >= 2.0 * b).collect();
    let mut closest: Option<(f64, f64, [f64; 4])> = None;
    for &a in grid {
        for &b in &betas {
            let c = theorem2_constants(problem, a, b, gamma);
            if closest.is_none_or(|(_, _, best)| c[argmax4(&c)] < best[argmax4(&best)]) {
                closest = Some((a, b, c));
            }
        }
    }
    match closest {
        None => StepDesignReport {
            steps: StepConfig { alpha: GRID_LO, beta: GRID_LO, gamma },
            c: f64::NAN,
            c_constants: None,
            feasible: false,
            margin: f64::NEG_INFINITY,
            binding: Some("gamma ≥ 2·beta".into()),
        },
        Some((alpha, beta, c)) => {
            let j = argmax4(&c);
            StepDesignReport {
                steps: StepConfig { alpha, beta, gamma },
                c: 4.0 * c[j],
                c_constants: Some(c),
                feasible: false,
                margin: bound - c[j],
                binding: Some(format!("c{} ≤ target_fraction/4", j + 1)),
            }
        }
    }
}

/// `λ_max(AAᵀ)` computed from the data rather than the stored bound.
fn constraint_gram_max(problem: &ConstrainedProblem) -> f64 {
    linalg::eigen_range(&(problem.a() * problem.a().transpose())).1
}

/// `M = [[βcI, αβAᵀ], [αβA, αcI]]`, positive definite iff `c² > αβ·λ_max(AAᵀ)`.
pub fn build_metric(problem: &ConstrainedProblem, steps: &StepConfig, c: f64) -> Result<DMatrix<f64>> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::DesignRejected(format!("metric constant c must lie in (0, 1), got {c}")));
    }
    let (alpha, beta) = (steps.alpha(), steps.beta());
    let (n, p) = (problem.n(), problem.p());
    let a = problem.a();
    let m = linalg::block2x2(
        &(DMatrix::identity(n, n) * (beta * c)),
        &(a.transpose() * (alpha * beta)),
        &(a * (alpha * beta)),
        &(DMatrix::identity(p, p) * (alpha * c)),
    );
    // smallest eigenvalue of the 2×2 block for the top singular value,
    // written as det/λ_max to avoid cancellation
    let s = constraint_gram_max(problem);
    let trace = (alpha + beta) * c;
    let disc = ((beta - alpha) * c).hypot(2.0 * alpha * beta * s.sqrt());
    let min_eigenvalue = (alpha * beta * (c * c - alpha * beta * s)) / ((trace + disc) / 2.0);
    if !(min_eigenvalue > 0.0) {
        return Err(Error::MetricIndefinite { min_eigenvalue });
    }
    linalg::cholesky(&m)?;
    Ok(m)
}

/// `τ² − 1 = −((1 − c)/c)·αβσ̲`, evaluated without forming `τ²`.
pub fn rate_exponent(alpha: f64, beta: f64, sigma_lo: f64, c: f64) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::DesignRejected(format!("rate constant c must lie in (0, 1), got {c}")));
    }
    let e = -((1.0 - c) / c) * alpha * beta * sigma_lo;
    let argument = 1.0 + e;
    if !(argument > 0.0 && argument <= 1.0) {
        return Err(Error::RateUndefined { argument });
    }
    Ok(e)
}

pub fn rate_raw(alpha: f64, beta: f64, sigma_lo: f64, c: f64) -> Result<f64> {
    rate_exponent(alpha, beta, sigma_lo, c).map(|e| (1.0 + e).sqrt())
}

/// `τ = √(1 − ((1−c)/c)·αβσ̲)` with `σ̲` the lower spectral bound of the
/// problem's constraint block.
pub fn rate(problem: &ConstrainedProblem, steps: &StepConfig, c: f64) -> Result<f64> {
    rate_raw(steps.alpha(), steps.beta(), problem.constraint.sigma_lo(), c)
}

/// The `Ψ` diagonals a certificate checks.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiSampleSet {
    pub psis: Vec<DVector<f64>>,
    /// True when `psis` is the full `{0,1}ᵖ` vertex set.
    pub exhaustive: bool,
}

/// All `2ᵖ` vertices when `p ≤ 12`; otherwise `draws` uniform samples from
/// `[0,1]ᵖ` plus the all-zeros and all-ones vertices.
pub fn psi_samples(p: usize, draws: usize, seed: u64) -> PsiSampleSet {
    if p <= VERTEX_LIMIT {
        let psis = (0..1usize << p)
            .map(|mask| DVector::from_fn(p, |i, _| ((mask >> i) & 1) as f64))
            .collect();
        return PsiSampleSet { psis, exhaustive: true };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut psis = vec![DVector::zeros(p), DVector::repeat(p, 1.0)];
    psis.extend((0..draws).map(|_| DVector::from_fn(p, |_, _| rng.random::<f64>())));
    PsiSampleSet { psis, exhaustive: false }
}

/// The set of one-step increments `Θ − I` to certify.
pub fn increments(
    problem: &ConstrainedProblem,
    steps: &StepConfig,
    psi_draws: usize,
) -> Result<(Vec<DMatrix<f64>>, bool)> {
    match problem.kind() {
        ConstraintKind::Equality => Ok((vec![dynamics::assemble_theta(problem, steps, None)?.increment().clone()], true)),
        ConstraintKind::Inequality => {
            let set = psi_samples(problem.p(), psi_draws, PSI_SEED);
            let incs = set
                .psis
                .iter()
                .map(|psi| dynamics::assemble_theta(problem, steps, Some(psi)).map(|t| t.increment().clone()))
                .collect::<Result<Vec<_>>>()?;
            Ok((incs, set.exhaustive))
        }
    }
}

/// `max λ_max(ΔᵀM + MΔ + ΔᵀMΔ, M)` over the increments, i.e. `μ_max − 1`.
pub fn max_contraction_exponent(increments: &[DMatrix<f64>], view: &MetricSpaceView) -> Result<f64> {
    let m = view.metric();
    increments
        .par_iter()
        .map(|delta| {
            let md = m * delta;
            let pi = &md + md.transpose() + delta.tr_mul(&md);
            linalg::max_generalized_eigenvalue(&pi, view.cholesky())
        })
        .try_reduce(|| f64::NEG_INFINITY, |a, b| Ok(a.max(b)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateSource {
    /// τ from the closed-form rate with the theorem's constant `c`.
    Theorem,
    /// τ = √μ_max with `c` chosen numerically within the same metric family.
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionCertificate {
    /// Row-major metric.
    #[serde(rename = "M")]
    pub metric: Vec<Vec<f64>>,
    pub c: f64,
    pub tau: f64,
    pub rate_source: RateSource,
    pub mu_max: f64,
    /// `μ_max − 1`, kept separately because `μ_max` rounds to 1 for small steps.
    pub mu_max_minus_one: f64,
    pub verified: bool,
    pub samples_checked: usize,
    pub exhaustive: bool,
    pub notes: Vec<String>,
    pub design_report: Option<StepDesignReport>,
}

impl ContractionCertificate {
    pub fn with_design(mut self, report: StepDesignReport) -> Self {
        self.design_report = Some(report);
        self
    }

    pub fn metric_matrix(&self) -> Result<DMatrix<f64>> {
        linalg::from_rows(&self.metric, "M")
    }
}

fn kind_notes(problem: &ConstrainedProblem, exhaustive: bool) -> Vec<String> {
    let mut notes = Vec::new();
    if problem.kind() == ConstraintKind::Inequality {
        notes.push("rate uses the lower spectral bound of the inequality block AAᵀ".into());
        if !exhaustive {
            notes.push(format!(
                "p = {} exceeds the vertex limit {VERTEX_LIMIT}; Ψ was sampled, so the certificate is evidence rather than proof",
                problem.p()
            ));
        }
    }
    notes
}

/// Checks `ΘᵀMΘ ⪯ τ²M` with the closed-form `τ` for the given `c`.
pub fn certify(
    problem: &ConstrainedProblem,
    steps: &StepConfig,
    c: f64,
    psi_draws: usize,
) -> Result<ContractionCertificate> {
    let metric = build_metric(problem, steps, c)?;
    let e = rate_exponent(steps.alpha(), steps.beta(), problem.constraint.sigma_lo(), c)?;
    let tau = (1.0 + e).sqrt();
    let view = MetricSpaceView::new(metric)?;
    let (incs, exhaustive) = increments(problem, steps, psi_draws)?;
    let lambda = max_contraction_exponent(&incs, &view)?;
    Ok(ContractionCertificate {
        metric: linalg::row_major(view.metric()),
        c,
        tau,
        rate_source: RateSource::Theorem,
        mu_max: 1.0 + lambda,
        mu_max_minus_one: lambda,
        verified: lambda <= e + CERTIFY_TOLERANCE && tau < 1.0,
        samples_checked: incs.len(),
        exhaustive,
        notes: kind_notes(problem, exhaustive),
        design_report: None,
    })
}

/// Certificate within the same metric family with `c` tuned to minimise
/// `μ_max`; `τ = √μ_max`, verified when `μ_max < 1`. Useful when the
/// theorem's constants are too conservative for practical step sizes.
pub fn certify_numerical(
    problem: &ConstrainedProblem,
    steps: &StepConfig,
    psi_draws: usize,
) -> Result<ContractionCertificate> {
    let c_min = (steps.alpha() * steps.beta() * constraint_gram_max(problem)).sqrt();
    if !(c_min < 1.0) {
        return Err(Error::MetricIndefinite { min_eigenvalue: 1.0 - c_min * c_min });
    }
    let (incs, exhaustive) = increments(problem, steps, psi_draws)?;
    let lo = (c_min * (1.0 + 1e-9)).max(1e-300);
    let hi = 1.0 - 1e-9;
    let eval = |c: f64| -> Result<f64> {
        let view = MetricSpaceView::new(build_metric(problem, steps, c)?)?;
        max_contraction_exponent(&incs, &view)
    };

    // coarse log-spaced scan, then golden-section refinement of the best bracket
    let grid = log_grid(lo, hi, 24);
    let values = grid.iter().map(|&c| eval(c)).collect::<Result<Vec<_>>>()?;
    let best = (0..grid.len()).fold(0, |b, i| if values[i] < values[b] { i } else { b });
    let (mut a, mut b) = (grid[best.saturating_sub(1)].ln(), grid[(best + 1).min(grid.len() - 1)].ln());
    let (mut best_c, mut best_val) = (grid[best], values[best]);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (eval(x1.exp())?, eval(x2.exp())?);
    for _ in 0..40 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = eval(x1.exp())?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = eval(x2.exp())?;
        }
    }
    for (x, f) in [(x1, f1), (x2, f2)] {
        if f < best_val {
            best_c = x.exp();
            best_val = f;
        }
    }

    let metric = build_metric(problem, steps, best_c)?;
    let mu_max = 1.0 + best_val;
    let mut notes = kind_notes(problem, exhaustive);
    notes.push("c chosen numerically within the metric family; τ = √μ_max".into());
    Ok(ContractionCertificate {
        metric: linalg::row_major(&metric),
        c: best_c,
        tau: mu_max.max(0.0).sqrt(),
        rate_source: RateSource::Numerical,
        mu_max,
        mu_max_minus_one: best_val,
        verified: best_val < -CERTIFY_TOLERANCE,
        samples_checked: incs.len(),
        exhaustive,
        notes,
        design_report: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma4Check {
    pub passed: bool,
    /// Largest eigenvalue of `Π₃ + ½α²βc·AAᵀ` over the checked `Ψ`.
    pub worst_eigenvalue: f64,
    pub samples_checked: usize,
    pub exhaustive: bool,
}

/// Lower bound on `c` required by the dual-block estimate:
/// `2αβ(1−β/γ)²σ̄ / (1 − (1−β/γ)²)`.
pub fn lemma4_c_floor(problem: &ConstrainedProblem, steps: &StepConfig) -> f64 {
    let r = 1.0 - steps.beta() / steps.gamma();
    2.0 * steps.alpha() * steps.beta() * r * r * problem.constraint.sigma_hi() / (1.0 - r * r)
}

/// The dual-dual block of `ΘᵀMΘ − M` in closed form:
///
/// ```text
/// Π₃ = α²β((c − 2β/γ)ΨAAᵀΨ − (1 − β/γ)(AAᵀΨ + ΨAAᵀ))
///    + αc((β²/γ²)(I − Ψ) − (2β/γ)I)(I − Ψ)
/// ```
pub fn pi3(problem: &ConstrainedProblem, steps: &StepConfig, c: f64, psi: &DVector<f64>) -> DMatrix<f64> {
    let (alpha, beta, gamma) = (steps.alpha(), steps.beta(), steps.gamma());
    let p = problem.p();
    let g = problem.a() * problem.a().transpose();
    let psi_g_psi = DMatrix::from_fn(p, p, |i, j| psi[i] * g[(i, j)] * psi[j]);
    let g_psi = DMatrix::from_fn(p, p, |i, j| g[(i, j)] * psi[j]);
    let coupling = &g_psi + g_psi.transpose();
    let r = beta / gamma;
    let diag = psi.map(|s| alpha * c * ((r * r) * (1.0 - s) - 2.0 * r) * (1.0 - s));
    (psi_g_psi * (c - 2.0 * r) - coupling * (1.0 - r)) * (alpha * alpha * beta) + DMatrix::from_diagonal(&diag)
}

/// Checks `Π₃ ⪯ −½α²βc·AAᵀ` over the vertex set (or draws for large `p`).
pub fn check_lemma4(
    problem: &ConstrainedProblem,
    steps: &StepConfig,
    c: f64,
    psi_draws: usize,
) -> Result<Lemma4Check> {
    require_kind(problem, ConstraintKind::Inequality)?;
    if steps.gamma() < 2.0 * steps.beta() {
        return Err(Error::HypothesisUnmet(format!(
            "gamma ≥ 2·beta violated (gamma = {}, beta = {})",
            steps.gamma(),
            steps.beta()
        )));
    }
    let floor = lemma4_c_floor(problem, steps);
    if !(c >= floor && c <= 1.0) {
        return Err(Error::HypothesisUnmet(format!("c = {c} outside [{floor}, 1]")));
    }
    let set = psi_samples(problem.p(), psi_draws, PSI_SEED);
    let half = problem.a() * problem.a().transpose() * (0.5 * steps.alpha() * steps.alpha() * steps.beta() * c);
    let worst = set
        .psis
        .par_iter()
        .map(|psi| {
            let m = pi3(problem, steps, c, psi) + &half;
            let v = linalg::eigen_range(&m).1;
            if v.is_finite() { Ok(v) } else { Err(Error::NumericalFailure("non-finite Π₃ eigenvalue".into())) }
        })
        .try_reduce(|| f64::NEG_INFINITY, |a, b| Ok(a.max(b)))?;
    Ok(Lemma4Check {
        passed: worst <= LEMMA4_TOLERANCE,
        worst_eigenvalue: worst,
        samples_checked: set.psis.len(),
        exhaustive: set.exhaustive,
    })
}
