//! Lagrangian and augmented-Lagrangian values, gradients and KKT residuals.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{ConstrainedProblem, ConstraintKind, PrimalDualState, SmoothObjective};

/// `[z]₊ = max{z, 0}`.
#[inline]
pub fn positive_part(z: f64) -> f64 {
    z.max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktResidual {
    /// `‖∇ₓL‖₂`
    pub stationarity_norm: f64,
    /// `‖∇_λL‖₂`
    pub feasibility_norm: f64,
}

impl KktResidual {
    /// Euclidean norm of the stacked gradient.
    pub fn total(&self) -> f64 {
        self.stationarity_norm.hypot(self.feasibility_norm)
    }
}

fn require_kind(problem: &ConstrainedProblem, kind: ConstraintKind) -> Result<()> {
    if problem.kind() != kind {
        return Err(Error::Shape(format!("expected an {kind} problem, got {}", problem.kind())));
    }
    Ok(())
}

/// Slacks `A x − b`.
pub fn slacks(problem: &ConstrainedProblem, x: &DVector<f64>) -> DVector<f64> {
    problem.a() * x - problem.b()
}

/// `z = γ (A x − b) + λ`, the argument of the plus operator.
pub fn penalty_arguments(problem: &ConstrainedProblem, state: &PrimalDualState, gamma: f64) -> DVector<f64> {
    slacks(problem, &state.x) * gamma + &state.lambda
}

/// Piecewise penalty `φ_γ(slack, λᵢ)`; the quadratic branch is taken on the
/// closed side `γ·slack + λᵢ ≥ 0`.
pub fn penalty_phi(gamma: f64, slack: f64, lambda_i: f64) -> f64 {
    if gamma * slack + lambda_i >= 0.0 {
        slack * lambda_i + 0.5 * gamma * slack * slack
    } else {
        -lambda_i * lambda_i / (2.0 * gamma)
    }
}

/// `f(x) + λᵀ(A x − b)`.
pub fn lagrangian_eq(problem: &ConstrainedProblem, state: &PrimalDualState) -> Result<f64> {
    state.check_dims(problem)?;
    Ok(problem.objective.value(&state.x) + state.lambda.dot(&slacks(problem, &state.x)))
}

/// `f(x) + Σᵢ φ_γ(aᵢx − bᵢ, λᵢ)`.
pub fn aug_lagrangian(problem: &ConstrainedProblem, state: &PrimalDualState, gamma: f64) -> Result<f64> {
    state.check_dims(problem)?;
    let s = slacks(problem, &state.x);
    let penalty: f64 = s.iter().zip(state.lambda.iter()).map(|(&si, &li)| penalty_phi(gamma, si, li)).sum();
    Ok(problem.objective.value(&state.x) + penalty)
}

/// `(∇f(x) + Aᵀλ, A x − b)` for an equality block.
pub fn grad_lagrangian_eq(
    problem: &ConstrainedProblem,
    state: &PrimalDualState,
) -> Result<(DVector<f64>, DVector<f64>)> {
    require_kind(problem, ConstraintKind::Equality)?;
    state.check_dims(problem)?;
    let gx = problem.objective.gradient(&state.x) + problem.a().tr_mul(&state.lambda);
    let glam = slacks(problem, &state.x);
    Ok((gx, glam))
}

/// Gradients of the augmented Lagrangian for an inequality block:
/// `gx = ∇f(x) + Aᵀ[z]₊`, `glam = ([z]₊ − λ) / γ`.
pub fn grad_aug_lagrangian(
    problem: &ConstrainedProblem,
    state: &PrimalDualState,
    gamma: f64,
) -> Result<(DVector<f64>, DVector<f64>)> {
    require_kind(problem, ConstraintKind::Inequality)?;
    state.check_dims(problem)?;
    if !(gamma > 0.0) {
        return Err(Error::InvalidSteps(format!("gamma must be positive, got {gamma}")));
    }
    let z_plus = penalty_arguments(problem, state, gamma).map(positive_part);
    let gx = problem.objective.gradient(&state.x) + problem.a().tr_mul(&z_plus);
    let glam = (z_plus - &state.lambda) / gamma;
    Ok((gx, glam))
}

/// Gradient pair appropriate to the problem kind (`gamma` is ignored for
/// equality problems).
pub fn gradients(
    problem: &ConstrainedProblem,
    state: &PrimalDualState,
    gamma: f64,
) -> Result<(DVector<f64>, DVector<f64>)> {
    match problem.kind() {
        ConstraintKind::Equality => grad_lagrangian_eq(problem, state),
        ConstraintKind::Inequality => grad_aug_lagrangian(problem, state, gamma),
    }
}

pub fn kkt_residual(problem: &ConstrainedProblem, state: &PrimalDualState, gamma: f64) -> Result<KktResidual> {
    let (gx, glam) = gradients(problem, state, gamma)?;
    Ok(KktResidual { stationarity_norm: gx.norm(), feasibility_norm: glam.norm() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ConstrainedProblem;
    use nalgebra::DMatrix;

    fn state(x: &[f64], l: &[f64]) -> PrimalDualState {
        PrimalDualState::new(DVector::from_row_slice(x), DVector::from_row_slice(l), 0).unwrap()
    }

    fn eq_problem(a: &[f64], b: f64) -> ConstrainedProblem {
        ConstrainedProblem::from_matrices(
            ConstraintKind::Equality,
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(1, 2, a),
            DVector::from_vec(vec![b]),
        )
        .unwrap()
    }

    #[test]
    fn equality_gradient_at_feasible_point() {
        let p = eq_problem(&[1.0, 1.0], 2.0);
        let (gx, gl) = grad_lagrangian_eq(&p, &state(&[1.0, 1.0], &[0.0])).unwrap();
        assert_eq!(gx.as_slice(), &[1.0, 1.0]);
        assert_eq!(gl.as_slice(), &[0.0]);
    }

    #[test]
    fn equality_gradient_is_a_transpose_lambda_at_origin() {
        let p = eq_problem(&[1.0, 0.0], 0.0);
        let (gx, gl) = grad_lagrangian_eq(&p, &state(&[0.0, 0.0], &[3.0])).unwrap();
        assert_eq!(gx.as_slice(), &[3.0, 0.0]);
        assert_eq!(gl.as_slice(), &[0.0]);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let p = eq_problem(&[1.0, 0.0], 0.0);
        let err = grad_lagrangian_eq(&p, &state(&[0.0, 0.0, 0.0], &[3.0])).unwrap_err();
        assert!(err.to_string().starts_with("shape"));
    }

    #[test]
    fn penalty_branches() {
        assert_eq!(penalty_phi(1.0, 1.0, 0.0), 0.5);
        assert_eq!(penalty_phi(2.0, -1.0, 1.0), -0.25);
        // boundary γ·slack + λ = 0: both branches give −0.5
        assert_eq!(penalty_phi(1.0, -1.0, 1.0), -0.5);
        assert_eq!(-(1.0f64 * 1.0) / 2.0, -0.5);
    }

    #[test]
    fn augmented_gradient_single_active_constraint() {
        let p = ConstrainedProblem::from_matrices(
            ConstraintKind::Inequality,
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DVector::from_vec(vec![0.0]),
        )
        .unwrap();
        let s = state(&[2.0, 0.0], &[1.0]);
        let (gx, gl) = grad_aug_lagrangian(&p, &s, 1.0).unwrap();
        // ∇f = x = (2, 0), bracket 3
        assert_eq!(gx.as_slice(), &[5.0, 0.0]);
        assert_eq!(gl.as_slice(), &[2.0]);
    }

    #[test]
    fn augmented_gradient_inactive_constraints_vanish() {
        let p = ConstrainedProblem::from_matrices(
            ConstraintKind::Inequality,
            DMatrix::identity(2, 2) * 3.0,
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            DVector::from_vec(vec![1.0, 1.0]),
        )
        .unwrap();
        let s = state(&[0.25, -0.5], &[0.0, 0.0]);
        let (gx, gl) = grad_aug_lagrangian(&p, &s, 2.0).unwrap();
        assert_eq!(gx, p.objective.gradient(&s.x));
        assert_eq!(gl.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn feasible_point_has_zero_feasibility_residual() {
        let p = eq_problem(&[1.0, 1.0], 2.0);
        let r = kkt_residual(&p, &state(&[0.5, 1.5], &[4.0]), 1.0).unwrap();
        assert_eq!(r.feasibility_norm, 0.0);
        assert!(r.stationarity_norm > 0.0);
    }
}
