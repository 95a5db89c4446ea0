//! Random problem generators and exact oracle solvers.
//!
//! Randomness comes from `ChaCha8Rng::seed_from_u64(seed)` with standard
//! normal draws taken by `rand_distr::StandardNormal`, consumed in this
//! order: `Q₀` row-major, then `A` row-major (redrawn from the same stream
//! until it has full row rank), then `b`. Given the pinned crate versions
//! this is reproducible bit for bit across platforms.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lagrangian::{self, kkt_residual};
use crate::linalg;
use crate::types::{ConstrainedProblem, ConstraintKind, PrimalDualState, RANK_TOLERANCE};

/// Largest constraint count the brute-force active-set oracle accepts.
pub const ENUMERATION_LIMIT: usize = 20;
/// Sign and feasibility tolerance when accepting an active set.
pub const ACTIVE_SET_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n: usize,
    pub p: usize,
    pub kind: ConstraintKind,
    pub seed: u64,
    /// Multiple of the identity added to `Q₀ᵀQ₀`.
    pub shift: f64,
}

impl GeneratorSpec {
    pub fn new(n: usize, p: usize, kind: ConstraintKind, seed: u64) -> Self {
        GeneratorSpec { n, p, kind, seed, shift: 5.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.p && self.p < self.n) {
            return Err(Error::Shape(format!("generator needs 1 ≤ p < n, got n = {}, p = {}", self.n, self.p)));
        }
        if !(self.shift.is_finite() && self.shift > 0.0) {
            return Err(Error::Shape(format!("generator shift must be positive, got {}", self.shift)));
        }
        Ok(())
    }
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let values: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    DMatrix::from_row_slice(rows, cols, &values)
}

/// `Q = Q₀ᵀQ₀ + shift·I` with Gaussian `Q₀`, Gaussian `A` and `b`; all
/// bounds are the computed spectra.
pub fn generate(spec: &GeneratorSpec) -> Result<ConstrainedProblem> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let q0 = normal_matrix(&mut rng, spec.n, spec.n);
    let q = q0.tr_mul(&q0) + DMatrix::identity(spec.n, spec.n) * spec.shift;
    let a = loop {
        let a = normal_matrix(&mut rng, spec.p, spec.n);
        if linalg::numerical_rank(&a, RANK_TOLERANCE) == spec.p {
            break a;
        }
    };
    let b = DVector::from_iterator(spec.p, (0..spec.p).map(|_| rng.sample::<f64, _>(StandardNormal)));
    ConstrainedProblem::from_matrices(spec.kind, q, a, b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub x_star: Vec<f64>,
    pub lambda_star: Vec<f64>,
    /// Active constraint indices (inequality problems only; all rows for
    /// equality problems).
    pub active_set: Vec<usize>,
    pub kkt_norm: f64,
}

impl OracleSolution {
    pub fn state(&self) -> PrimalDualState {
        PrimalDualState {
            x: DVector::from_column_slice(&self.x_star),
            lambda: DVector::from_column_slice(&self.lambda_star),
            k: 0,
        }
    }
}

/// Solves `[[Q, A_Sᵀ], [A_S, 0]] [x; λ_S] = [0; b_S]` for the rows in `rows`.
fn solve_kkt_on(problem: &ConstrainedProblem, rows: &[usize]) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = problem.n();
    let m = rows.len();
    let a_s = DMatrix::from_fn(m, n, |i, j| problem.a()[(rows[i], j)]);
    let kkt = linalg::block2x2(problem.q(), &a_s.transpose(), &a_s, &DMatrix::zeros(m, m));
    let mut rhs = DVector::zeros(n + m);
    for (i, &r) in rows.iter().enumerate() {
        rhs[n + i] = problem.b()[r];
    }
    let sol = kkt
        .lu()
        .solve(&rhs)
        .filter(linalg::is_finite_vector)
        .ok_or_else(|| Error::Degenerate(format!("singular KKT matrix on active set {rows:?}")))?;
    Ok((sol.rows(0, n).into_owned(), sol.rows(n, m).into_owned()))
}

/// Direct saddle-point solve for an equality problem.
pub fn solve_oracle_eq(problem: &ConstrainedProblem) -> Result<OracleSolution> {
    if problem.kind() != ConstraintKind::Equality {
        return Err(Error::Shape("equality oracle called on an inequality problem".into()));
    }
    let rows: Vec<usize> = (0..problem.p()).collect();
    let (x, lambda) = solve_kkt_on(problem, &rows)?;
    let state = PrimalDualState { x, lambda, k: 0 };
    let kkt_norm = kkt_residual(problem, &state, 1.0)?.total();
    Ok(OracleSolution {
        x_star: state.x.iter().copied().collect(),
        lambda_star: state.lambda.iter().copied().collect(),
        active_set: rows,
        kkt_norm,
    })
}

/// Solves the equality KKT system on `active` and accepts it when the
/// multipliers are nonnegative and the remaining rows are feasible.
pub fn solve_oracle_on_active_set(problem: &ConstrainedProblem, active: &[usize]) -> Result<OracleSolution> {
    if problem.kind() != ConstraintKind::Inequality {
        return Err(Error::Shape("active-set oracle called on an equality problem".into()));
    }
    let (x, lambda_s) = solve_kkt_on(problem, active)?;
    if lambda_s.iter().any(|&l| l < -ACTIVE_SET_TOLERANCE) {
        return Err(Error::InfeasibleOrDegenerate);
    }
    let slack = lagrangian::slacks(problem, &x);
    if slack.iter().any(|&s| s > ACTIVE_SET_TOLERANCE) {
        return Err(Error::InfeasibleOrDegenerate);
    }
    let mut lambda = DVector::zeros(problem.p());
    for (i, &r) in active.iter().enumerate() {
        lambda[r] = lambda_s[i].max(0.0);
    }
    let state = PrimalDualState { x, lambda, k: 0 };
    let kkt_norm = kkt_residual(problem, &state, 1.0)?.total();
    Ok(OracleSolution {
        x_star: state.x.iter().copied().collect(),
        lambda_star: state.lambda.iter().copied().collect(),
        active_set: active.to_vec(),
        kkt_norm,
    })
}

/// Advances `indices` to the next `k`-subset of `0..p` in lexicographic
/// order; false once exhausted.
fn next_combination(indices: &mut [usize], p: usize) -> bool {
    let k = indices.len();
    for i in (0..k).rev() {
        if indices[i] < p - k + i {
            indices[i] += 1;
            for j in i + 1..k {
                indices[j] = indices[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Brute-force active-set enumeration. Subsets are tried by increasing
/// cardinality, lexicographically within a cardinality; the first that
/// passes wins.
pub fn solve_oracle_ineq(problem: &ConstrainedProblem) -> Result<OracleSolution> {
    if problem.kind() != ConstraintKind::Inequality {
        return Err(Error::Shape("inequality oracle called on an equality problem".into()));
    }
    let p = problem.p();
    if p > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge { p, limit: ENUMERATION_LIMIT });
    }
    for size in 0..=p {
        let mut subset: Vec<usize> = (0..size).collect();
        loop {
            match solve_oracle_on_active_set(problem, &subset) {
                Ok(sol) => return Ok(sol),
                Err(Error::InfeasibleOrDegenerate | Error::Degenerate(_)) => {}
                Err(e) => return Err(e),
            }
            if !next_combination(&mut subset, p) {
                break;
            }
        }
    }
    Err(Error::InfeasibleOrDegenerate)
}

/// Exact solution recovered from an approximate one: the active set is read
/// off the penalty arguments `z = γ(Ax − b) + λ > 0` and then verified.
/// Scales to constraint counts where enumeration is out of reach.
pub fn solve_oracle_from_guess(
    problem: &ConstrainedProblem,
    guess: &PrimalDualState,
    gamma: f64,
) -> Result<OracleSolution> {
    let z = lagrangian::penalty_arguments(problem, guess, gamma);
    let active: Vec<usize> = (0..problem.p()).filter(|&i| z[i] > 0.0).collect();
    solve_oracle_on_active_set(problem, &active)
}
