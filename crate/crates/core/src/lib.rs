//! Primal-dual gradient optimization for strongly convex quadratic programs
//! with one block of linear equality or inequality constraints, together
//! with step-size designers and numerical contraction certificates.
//!
//! ```
//! use pdgo::{generate, run_pipeline, ConstraintKind, GeneratorSpec, PipelineConfig};
//!
//! let problem = generate(&GeneratorSpec::new(6, 3, ConstraintKind::Equality, 1)).unwrap();
//! let outcome = run_pipeline(&problem, &PipelineConfig::default()).unwrap();
//! assert!(outcome.converged() && outcome.verified());
//! ```

pub mod contraction;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod io;
pub mod lagrangian;
pub mod linalg;
pub mod pipeline;
pub mod problems;
pub mod trace;
pub mod types;

pub use contraction::{
    build_metric, certify, certify_numerical, check_lemma4, design_steps_eq, design_steps_ineq, rate,
    ContractionCertificate, Lemma4Check, RateSource, StepDesignReport,
};
pub use dynamics::{assemble_theta, compute_psi, step, JacobianTheta};
pub use error::{Error, Result};
pub use geometry::MetricSpaceView;
pub use lagrangian::{kkt_residual, KktResidual};
pub use pipeline::{gamma_sweep, run_pipeline, GammaList, PipelineConfig, PipelineOutcome, StepRule, SweepRow};
pub use problems::{generate, solve_oracle_eq, solve_oracle_ineq, GeneratorSpec, OracleSolution};
pub use trace::{fit_rate, run, RateFit, RunOptions, Termination, TraceRow, TrajectoryTrace};
pub use types::{
    validate_problem, ConstrainedProblem, ConstraintKind, PrimalDualState, ProblemData, StepConfig,
    ValidationReport,
};
