//! Primal-dual iteration maps and their exact linearizations `Θ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lagrangian::{self, positive_part};
use crate::linalg;
use crate::types::{ConstrainedProblem, ConstraintKind, PrimalDualState, StepConfig};

/// Jacobian (equality) or secant matrix (inequality) of one PDGO step.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianTheta {
    pub theta: DMatrix<f64>,
    /// Diagonal of `Ψ`; all ones for equality problems.
    pub psi_diag: DVector<f64>,
    increment: DMatrix<f64>,
}

impl JacobianTheta {
    /// `Θ − I`, assembled directly rather than by subtraction.
    pub fn increment(&self) -> &DMatrix<f64> {
        &self.increment
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.theta * v
    }
}

fn finish(x: DVector<f64>, lambda: DVector<f64>, k: usize) -> Result<PrimalDualState> {
    let next = PrimalDualState { x, lambda, k: k + 1 };
    if !next.is_finite() {
        return Err(Error::Divergence { k: k + 1 });
    }
    Ok(next)
}

/// `x⁺ = x − α(∇f(x) + Aᵀλ)`, `λ⁺ = λ + β(A x − b)`.
pub fn step_eq(problem: &ConstrainedProblem, state: &PrimalDualState, steps: &StepConfig) -> Result<PrimalDualState> {
    let (gx, glam) = lagrangian::grad_lagrangian_eq(problem, state)?;
    finish(&state.x - gx * steps.alpha, &state.lambda + glam * steps.beta, state.k)
}

/// Augmented-Lagrangian step: `x⁺ = x − α(∇f(x) + Aᵀ[z]₊)`,
/// `λ⁺ = λ + (β/γ)([z]₊ − λ)`.
pub fn step_ineq(problem: &ConstrainedProblem, state: &PrimalDualState, steps: &StepConfig) -> Result<PrimalDualState> {
    let (gx, glam) = lagrangian::grad_aug_lagrangian(problem, state, steps.gamma)?;
    finish(&state.x - gx * steps.alpha, &state.lambda + glam * steps.beta, state.k)
}

pub fn step(problem: &ConstrainedProblem, state: &PrimalDualState, steps: &StepConfig) -> Result<PrimalDualState> {
    match problem.kind() {
        ConstraintKind::Equality => step_eq(problem, state, steps),
        ConstraintKind::Inequality => step_ineq(problem, state, steps),
    }
}

/// Secant slope of the plus operator between `state` and `reference`:
/// `ψᵢ = ([zᵢ]₊ − [zᵢ*]₊) / (zᵢ − zᵢ*)`, and its one-sided limit
/// (1 when `zᵢ ≥ 0`, else 0) when the arguments coincide.
pub fn compute_psi(
    problem: &ConstrainedProblem,
    state: &PrimalDualState,
    reference: &PrimalDualState,
    gamma: f64,
) -> Result<DVector<f64>> {
    state.check_dims(problem)?;
    reference.check_dims(problem)?;
    let z = lagrangian::penalty_arguments(problem, state, gamma);
    let z_ref = lagrangian::penalty_arguments(problem, reference, gamma);
    Ok(z.zip_map(&z_ref, psi_entry))
}

pub fn psi_entry(z: f64, z_ref: f64) -> f64 {
    if z == z_ref {
        if z >= 0.0 { 1.0 } else { 0.0 }
    } else {
        (positive_part(z) - positive_part(z_ref)) / (z - z_ref)
    }
}

fn check_psi(psi: &DVector<f64>) -> Result<()> {
    match psi.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(index) => Err(Error::PsiRange { index, value: psi[index] }),
        None => Ok(()),
    }
}

/// Builds `Θ`. Equality problems ignore `psi`; inequality problems need it:
///
/// ```text
/// Θ = [[I − αQ − αγAᵀΨA, −αAᵀΨ], [βΨA, I − (β/γ)(I − Ψ)]]
/// ```
///
/// The `γ` on `AᵀΨA` comes from `z = γ(Ax − b) + λ`; without it the
/// secant identity `step(s) − step(s*) = Θ(s − s*)` only holds at `γ = 1`.
pub fn assemble_theta(
    problem: &ConstrainedProblem,
    steps: &StepConfig,
    psi: Option<&DVector<f64>>,
) -> Result<JacobianTheta> {
    let (n, p) = (problem.n(), problem.p());
    let (alpha, beta, gamma) = (steps.alpha, steps.beta, steps.gamma);
    let q = problem.objective.hessian();
    let a = problem.a();

    let (increment, psi_diag) = match problem.kind() {
        ConstraintKind::Equality => {
            let top_left = q * -alpha;
            let top_right = a.transpose() * -alpha;
            let bottom_left = a * beta;
            let bottom_right = DMatrix::zeros(p, p);
            (linalg::block2x2(&top_left, &top_right, &bottom_left, &bottom_right), DVector::repeat(p, 1.0))
        }
        ConstraintKind::Inequality => {
            let psi = psi.ok_or_else(|| Error::Shape("inequality Θ needs a Ψ diagonal".into()))?;
            if psi.len() != p {
                return Err(Error::Shape(format!("psi has {} entries, expected {p}", psi.len())));
            }
            check_psi(psi)?;
            // ΨA scales row i of A by ψᵢ
            let psi_a = DMatrix::from_fn(p, n, |i, j| psi[i] * a[(i, j)]);
            let top_left = (q + a.tr_mul(&psi_a) * gamma) * -alpha;
            let top_right = psi_a.transpose() * -alpha;
            let bottom_left = &psi_a * beta;
            let bottom_right = DMatrix::from_diagonal(&psi.map(|s| -(beta / gamma) * (1.0 - s)));
            (linalg::block2x2(&top_left, &top_right, &bottom_left, &bottom_right), psi.clone())
        }
    };
    let theta = &increment + DMatrix::identity(n + p, n + p);
    if !linalg::is_finite_matrix(&theta) {
        return Err(Error::NonFinite("Θ has non-finite entries".into()));
    }
    Ok(JacobianTheta { theta, psi_diag, increment })
}
