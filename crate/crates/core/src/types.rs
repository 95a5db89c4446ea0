//! Problem data, iterates and step configuration.
//!
//! Every type here is immutable once built. Candidate data enters through
//! [`ProblemData`] and [`validate_problem`]; a [`ConstrainedProblem`] only
//! exists when the report is empty.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Relative tolerance on singular values for the full-row-rank test.
pub const RANK_TOLERANCE: f64 = 1e-10;
/// Relative slack allowed when comparing declared spectral bounds with
/// computed eigenvalues.
pub const SPECTRUM_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Equality,
    Inequality,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintKind::Equality => f.write_str("equality"),
            ConstraintKind::Inequality => f.write_str("inequality"),
        }
    }
}

/// Uniform access to a smooth, strongly convex objective.
pub trait SmoothObjective {
    fn dimension(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    /// `(rho_lo, rho_hi)`: strong-convexity modulus and gradient Lipschitz constant.
    fn curvature_bounds(&self) -> (f64, f64);
}

/// `f(x) = ½ xᵀ Q x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    q: DMatrix<f64>,
    rho_lo: f64,
    rho_hi: f64,
}

impl Objective {
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// The secant matrix `G` with `∇f(x) − ∇f(y) = G (x − y)`; constant for
    /// a quadratic.
    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn rho_lo(&self) -> f64 {
        self.rho_lo
    }

    pub fn rho_hi(&self) -> f64 {
        self.rho_hi
    }
}

impl SmoothObjective for Objective {
    fn dimension(&self) -> usize {
        self.q.nrows()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q * x))
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q * x
    }

    fn curvature_bounds(&self) -> (f64, f64) {
        (self.rho_lo, self.rho_hi)
    }
}

/// One block of linear constraints `A x = b` or `A x ≤ b`. The spectral
/// bounds apply to `A Aᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintBlock {
    kind: ConstraintKind,
    a: DMatrix<f64>,
    b: DVector<f64>,
    sigma_lo: f64,
    sigma_hi: f64,
}

impl ConstraintBlock {
    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn sigma_lo(&self) -> f64 {
        self.sigma_lo
    }

    pub fn sigma_hi(&self) -> f64 {
        self.sigma_hi
    }

    pub fn len(&self) -> usize {
        self.a.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.a.nrows() == 0
    }
}

/// Unvalidated candidate problem data.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData {
    pub kind: ConstraintKind,
    pub q: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub rho_lo: f64,
    pub rho_hi: f64,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
}

impl ProblemData {
    /// Fills every bound from the computed spectra of `Q` and `A Aᵀ`.
    pub fn with_spectral_bounds(
        kind: ConstraintKind,
        q: DMatrix<f64>,
        a: DMatrix<f64>,
        b: DVector<f64>,
    ) -> Self {
        let (rho_lo, rho_hi, sigma_lo, sigma_hi) = spectral_bounds(&q, &a);
        ProblemData { kind, q, a, b, rho_lo, rho_hi, sigma_lo, sigma_hi }
    }
}

/// `(λmin(Q), λmax(Q), λmin(AAᵀ), λmax(AAᵀ))`, NaN where undefined.
pub fn spectral_bounds(q: &DMatrix<f64>, a: &DMatrix<f64>) -> (f64, f64, f64, f64) {
    let square_q = q.is_square() && !q.is_empty() && linalg::is_finite_matrix(q);
    let (rho_lo, rho_hi) = if square_q { linalg::eigen_range(q) } else { (f64::NAN, f64::NAN) };
    let (sigma_lo, sigma_hi) = if !a.is_empty() && linalg::is_finite_matrix(a) {
        linalg::eigen_range(&(a * a.transpose()))
    } else {
        (f64::NAN, f64::NAN)
    };
    (rho_lo, rho_hi, sigma_lo, sigma_hi)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Which requirement failed, e.g. "strong convexity" or "constraint rank".
    pub assumption: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    /// True when some violation message contains `needle`.
    pub fn mentions(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.message.contains(needle))
    }

    fn push(&mut self, assumption: &str, message: String) {
        self.violations.push(Violation { assumption: assumption.to_string(), message });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.violations.iter().map(|v| format!("[{}] {}", v.assumption, v.message)).collect();
        f.write_str(&parts.join("; "))
    }
}

fn slack(bound: f64) -> f64 {
    SPECTRUM_SLACK * bound.abs().max(1.0)
}

/// Checks candidate data against the problem-class requirements. Pure and
/// deterministic; the report is empty iff the data is admissible.
pub fn validate_problem(data: &ProblemData) -> ValidationReport {
    let mut report = ValidationReport::default();

    let scalars = [data.rho_lo, data.rho_hi, data.sigma_lo, data.sigma_hi];
    if !linalg::is_finite_matrix(&data.q)
        || !linalg::is_finite_matrix(&data.a)
        || !linalg::is_finite_vector(&data.b)
        || scalars.iter().any(|s| !s.is_finite())
    {
        report.push("finiteness", "non-finite data".into());
        return report;
    }

    let n = data.q.nrows();
    if n == 0 || !data.q.is_square() {
        report.push("shape", format!("Q must be a non-empty square matrix, got {:?}", data.q.shape()));
        return report;
    }
    let p = data.a.nrows();
    if p == 0 {
        report.push("shape", "A has no rows".into());
        return report;
    }
    if data.a.ncols() != n {
        report.push("shape", format!("A has {} columns but Q is {n}x{n}", data.a.ncols()));
        return report;
    }
    if data.b.len() != p {
        report.push("shape", format!("b has {} entries but A has {p} rows", data.b.len()));
        return report;
    }

    // objective
    let asym = (&data.q - data.q.transpose()).abs().max();
    if asym > 1e-12 * data.q.abs().max().max(1.0) {
        report.push("symmetry", format!("Q is not symmetric (max asymmetry {asym:e})"));
    }
    if data.rho_lo <= 0.0 {
        report.push("strong convexity", format!("rho_lo must be positive, got {}", data.rho_lo));
    }
    if data.rho_lo > data.rho_hi {
        report.push(
            "strong convexity",
            format!("rho_lo exceeds rho_hi ({} > {})", data.rho_lo, data.rho_hi),
        );
    }
    let (q_min, q_max) = linalg::eigen_range(&data.q);
    if q_min < data.rho_lo - slack(data.rho_lo) {
        report.push(
            "strong convexity",
            format!("rho_lo exceeds min eigenvalue ({q_min} < {})", data.rho_lo),
        );
    }
    if q_max > data.rho_hi + slack(data.rho_hi) {
        report.push(
            "Lipschitz gradient",
            format!("max eigenvalue exceeds rho_hi ({q_max} > {})", data.rho_hi),
        );
    }

    // constraint block
    let rank = linalg::numerical_rank(&data.a, RANK_TOLERANCE);
    if rank < p {
        report.push("constraint rank", format!("A not full row rank (rank {rank} < p = {p})"));
    }
    if data.sigma_lo <= 0.0 {
        report.push("constraint spectrum", format!("sigma_lo must be positive, got {}", data.sigma_lo));
    }
    if data.sigma_lo > data.sigma_hi {
        report.push(
            "constraint spectrum",
            format!("sigma_lo exceeds sigma_hi ({} > {})", data.sigma_lo, data.sigma_hi),
        );
    }
    let (s_min, s_max) = linalg::eigen_range(&(&data.a * data.a.transpose()));
    if s_min < data.sigma_lo - slack(data.sigma_lo) {
        report.push(
            "constraint spectrum",
            format!("sigma_lo exceeds min eigenvalue of A Aᵀ ({s_min} < {})", data.sigma_lo),
        );
    }
    if s_max > data.sigma_hi + slack(data.sigma_hi) {
        report.push(
            "constraint spectrum",
            format!("max eigenvalue of A Aᵀ exceeds sigma_hi ({s_max} > {})", data.sigma_hi),
        );
    }
    report
}

/// `min f(x)` subject to one constraint block.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedProblem {
    pub objective: Objective,
    pub constraint: ConstraintBlock,
}

impl ConstrainedProblem {
    pub fn new(data: ProblemData) -> Result<Self> {
        let report = validate_problem(&data);
        if !report.is_empty() {
            return Err(Error::InvalidProblem(report));
        }
        let q = (&data.q + data.q.transpose()) * 0.5;
        Ok(ConstrainedProblem {
            objective: Objective { q, rho_lo: data.rho_lo, rho_hi: data.rho_hi },
            constraint: ConstraintBlock {
                kind: data.kind,
                a: data.a,
                b: data.b,
                sigma_lo: data.sigma_lo,
                sigma_hi: data.sigma_hi,
            },
        })
    }

    /// Builds a problem whose bounds are the computed spectra.
    pub fn from_matrices(
        kind: ConstraintKind,
        q: DMatrix<f64>,
        a: DMatrix<f64>,
        b: DVector<f64>,
    ) -> Result<Self> {
        Self::new(ProblemData::with_spectral_bounds(kind, q, a, b))
    }

    pub fn data(&self) -> ProblemData {
        ProblemData {
            kind: self.kind(),
            q: self.objective.q.clone(),
            a: self.constraint.a.clone(),
            b: self.constraint.b.clone(),
            rho_lo: self.objective.rho_lo,
            rho_hi: self.objective.rho_hi,
            sigma_lo: self.constraint.sigma_lo,
            sigma_hi: self.constraint.sigma_hi,
        }
    }

    pub fn kind(&self) -> ConstraintKind {
        self.constraint.kind
    }

    /// Primal dimension.
    pub fn n(&self) -> usize {
        self.objective.q.nrows()
    }

    /// Number of constraints (dual dimension).
    pub fn p(&self) -> usize {
        self.constraint.a.nrows()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.objective.q
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.constraint.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.constraint.b
    }

    /// Same problem with the constraint rows permuted: row `i` of the result
    /// is row `order[i]` of `self`.
    pub fn permute_constraints(&self, order: &[usize]) -> Result<Self> {
        let p = self.p();
        let mut seen = vec![false; p];
        if order.len() != p || order.iter().any(|&i| i >= p || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::Shape(format!("{order:?} is not a permutation of 0..{p}")));
        }
        let a = DMatrix::from_fn(p, self.n(), |i, j| self.a()[(order[i], j)]);
        let b = DVector::from_fn(p, |i, _| self.b()[order[i]]);
        let mut data = self.data();
        data.a = a;
        data.b = b;
        Self::new(data)
    }
}

/// Iterate `ξ = (x, λ)` with its iteration counter.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualState {
    pub x: DVector<f64>,
    pub lambda: DVector<f64>,
    pub k: usize,
}

impl PrimalDualState {
    pub fn new(x: DVector<f64>, lambda: DVector<f64>, k: usize) -> Result<Self> {
        let state = PrimalDualState { x, lambda, k };
        if !state.is_finite() {
            return Err(Error::NonFinite("state has non-finite entries".into()));
        }
        Ok(state)
    }

    pub fn zeros(problem: &ConstrainedProblem) -> Self {
        PrimalDualState { x: DVector::zeros(problem.n()), lambda: DVector::zeros(problem.p()), k: 0 }
    }

    pub fn is_finite(&self) -> bool {
        linalg::is_finite_vector(&self.x) && linalg::is_finite_vector(&self.lambda)
    }

    /// `[xᵀ, λᵀ]ᵀ`.
    pub fn stacked(&self) -> DVector<f64> {
        let n = self.x.len();
        DVector::from_fn(n + self.lambda.len(), |i, _| if i < n { self.x[i] } else { self.lambda[i - n] })
    }

    pub fn from_stacked(xi: &DVector<f64>, n: usize, k: usize) -> Result<Self> {
        if xi.len() < n {
            return Err(Error::Shape(format!("stacked vector of length {} shorter than n = {n}", xi.len())));
        }
        let x = xi.rows(0, n).into_owned();
        let lambda = xi.rows(n, xi.len() - n).into_owned();
        Self::new(x, lambda, k)
    }

    pub fn check_dims(&self, problem: &ConstrainedProblem) -> Result<()> {
        if self.x.len() != problem.n() || self.lambda.len() != problem.p() {
            return Err(Error::Shape(format!(
                "state has (n, p) = ({}, {}), problem has ({}, {})",
                self.x.len(),
                self.lambda.len(),
                problem.n(),
                problem.p()
            )));
        }
        Ok(())
    }
}

/// Primal step `alpha`, dual step `beta`, penalty `gamma` (unused for
/// equality problems).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub(crate) alpha: f64,
    pub(crate) beta: f64,
    pub(crate) gamma: f64,
}

impl StepConfig {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidSteps(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(StepConfig { alpha, beta, gamma })
    }

    /// Steps for an equality problem; the penalty is irrelevant and set to 1.
    pub fn equality(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, beta, 1.0)
    }

    /// Steps for an inequality problem, enforcing `gamma ≥ 2·beta`.
    pub fn inequality(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let steps = Self::new(alpha, beta, gamma)?;
        steps.validate_for(ConstraintKind::Inequality)?;
        Ok(steps)
    }

    pub fn validate_for(&self, kind: ConstraintKind) -> Result<()> {
        if kind == ConstraintKind::Inequality && self.gamma < 2.0 * self.beta {
            return Err(Error::InvalidSteps(format!(
                "gamma ≥ 2·beta violated (gamma = {}, beta = {})",
                self.gamma, self.beta
            )));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(q: DMatrix<f64>, a: DMatrix<f64>, b: DVector<f64>, bounds: [f64; 4]) -> ProblemData {
        ProblemData {
            kind: ConstraintKind::Equality,
            q,
            a,
            b,
            rho_lo: bounds[0],
            rho_hi: bounds[1],
            sigma_lo: bounds[2],
            sigma_hi: bounds[3],
        }
    }

    #[test]
    fn identity_like_problem_is_valid() {
        let d = data(
            DMatrix::identity(3, 3) * 2.0,
            DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]),
            DVector::from_vec(vec![1.0]),
            [2.0, 2.0, 1.0, 1.0],
        );
        let report = validate_problem(&d);
        assert!(report.is_empty(), "{report}");
        assert!(ConstrainedProblem::new(d).is_ok());
    }

    #[test]
    fn rho_lo_above_spectrum_is_flagged() {
        let d = data(
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 5.0])),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DVector::from_vec(vec![0.0]),
            [2.0, 5.0, 1.0, 1.0],
        );
        let report = validate_problem(&d);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].message, "rho_lo exceeds min eigenvalue (1 < 2)");
        assert_eq!(report.violations[0].assumption, "strong convexity");
        assert!(matches!(ConstrainedProblem::new(d), Err(Error::InvalidProblem(_))));
    }

    #[test]
    fn rank_deficient_constraints_are_flagged() {
        let d = data(
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 0.0]),
            DVector::from_vec(vec![0.0, 0.0]),
            [1.0, 1.0, 1e-3, 5.0],
        );
        let report = validate_problem(&d);
        assert!(report.mentions("A not full row rank"), "{report}");
    }

    #[test]
    fn non_finite_entries_are_reported() {
        let mut q = DMatrix::identity(2, 2);
        q[(0, 1)] = f64::NAN;
        let d = data(q, DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), DVector::zeros(1), [1.0; 4]);
        let report = validate_problem(&d);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].message, "non-finite data");
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let d = data(
            DMatrix::identity(3, 3),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DVector::zeros(1),
            [1.0; 4],
        );
        assert!(validate_problem(&d).mentions("columns"));
    }

    #[test]
    fn validation_is_deterministic() {
        let d = data(
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 5.0])),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 0.0]),
            DVector::zeros(2),
            [2.0, 4.0, 1.0, 1.0],
        );
        assert_eq!(validate_problem(&d), validate_problem(&d));
        assert!(validate_problem(&d).violations.len() >= 3);
    }

    #[test]
    fn step_config_rejects_bad_values() {
        assert!(StepConfig::new(0.0, 1.0, 1.0).is_err());
        assert!(StepConfig::new(1.0, f64::NAN, 1.0).is_err());
        let err = StepConfig::inequality(0.1, 1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("gamma ≥ 2·beta"));
        assert!(StepConfig::inequality(0.1, 0.5, 1.0).is_ok());
    }

    #[test]
    fn stacked_round_trip() {
        let s = PrimalDualState::new(
            DVector::from_vec(vec![1.0, 2.0]),
            DVector::from_vec(vec![3.0]),
            7,
        )
        .unwrap();
        let back = PrimalDualState::from_stacked(&s.stacked(), 2, 7).unwrap();
        assert_eq!(s, back);
        assert!(PrimalDualState::new(DVector::from_vec(vec![f64::INFINITY]), DVector::zeros(0), 0).is_err());
    }
}
