//! Trajectory runs, per-iteration diagnostics and empirical rate fits.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::contraction::{ContractionCertificate, RateSource};
use crate::dynamics;
use crate::error::{Error, Result};
use crate::geometry::MetricSpaceView;
use crate::lagrangian::kkt_residual;
use crate::types::{ConstrainedProblem, PrimalDualState, SmoothObjective, StepConfig};

/// Stacked-state norm beyond which a run is declared divergent before it
/// overflows.
pub const BLOWUP_NORM: f64 = 1e100;
pub const DEFAULT_BURN_IN: usize = 10;
const MIN_FIT_ROWS: usize = 10;
const FIT_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub max_iter: usize,
    /// Stop once the KKT residual total is at most this.
    pub tol: f64,
    /// Keep every `record_stride`-th row (the last row is always kept).
    pub record_stride: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { max_iter: 100_000, tol: 1e-8, record_stride: 1 }
    }
}

impl RunOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter < 1 {
            return Err(Error::InvalidSteps("max_iter must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidSteps(format!("tol must be positive, got {}", self.tol)));
        }
        if self.record_stride < 1 {
            return Err(Error::InvalidSteps("record_stride must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIter,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub f: f64,
    pub stat_norm: f64,
    pub feas_norm: f64,
    #[serde(rename = "dist_M")]
    pub dist_m: f64,
    /// `E(ξᵏ⁺¹, ξ*) / E(ξᵏ, ξ*)`; empty on the last row or when `E(ξᵏ, ξ*) = 0`.
    pub energy_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub c: f64,
    pub tau: f64,
    pub mu_max: f64,
    pub verified: bool,
    pub rate_source: RateSource,
}

impl From<&ContractionCertificate> for CertificateSummary {
    fn from(cert: &ContractionCertificate) -> Self {
        CertificateSummary {
            c: cert.c,
            tau: cert.tau,
            mu_max: cert.mu_max,
            verified: cert.verified,
            rate_source: cert.rate_source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub problem_seed: Option<u64>,
    pub steps: StepConfig,
    pub certificate: Option<CertificateSummary>,
    pub termination: Termination,
    pub diagnostic: String,
    pub iterations: usize,
    pub final_kkt: f64,
    /// Largest per-step energy ratio over the whole run, recorded or not.
    pub max_energy_ratio: Option<f64>,
    /// Euclidean distances of each block to the reference, first and last iterate.
    pub dist_x: [f64; 2],
    pub dist_lambda: [f64; 2],
    pub metric_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTrace {
    pub rows: Vec<TraceRow>,
    pub metadata: TraceMetadata,
    pub final_state: PrimalDualState,
}

impl TrajectoryTrace {
    pub fn termination(&self) -> Termination {
        self.metadata.termination
    }
}

fn row_for(
    problem: &ConstrainedProblem,
    state: &PrimalDualState,
    steps: &StepConfig,
    dist_m: f64,
) -> Result<(TraceRow, f64)> {
    let kkt = kkt_residual(problem, state, steps.gamma())?;
    let row = TraceRow {
        k: state.k,
        f: problem.objective.value(&state.x),
        stat_norm: kkt.stationarity_norm,
        feas_norm: kkt.feasibility_norm,
        dist_m,
        energy_ratio: None,
    };
    Ok((row, kkt.total()))
}

/// Iterates the step map from `init` until the KKT residual drops to
/// `options.tol`, `options.max_iter` steps have been taken, or the state
/// stops being finite. Distances are measured to `reference` under `metric`.
pub fn run(
    problem: &ConstrainedProblem,
    steps: &StepConfig,
    init: &PrimalDualState,
    options: &RunOptions,
    reference: &PrimalDualState,
    metric: &MetricSpaceView,
) -> Result<TrajectoryTrace> {
    options.validate()?;
    steps.validate_for(problem.kind())?;
    init.check_dims(problem)?;
    reference.check_dims(problem)?;
    if metric.dim() != problem.n() + problem.p() {
        return Err(Error::Shape(format!("metric dimension {} ≠ n + p = {}", metric.dim(), problem.n() + problem.p())));
    }
    let xi_ref = reference.stacked();
    let distance = |s: &PrimalDualState| metric.distance(&s.stacked(), &xi_ref);

    let mut state = PrimalDualState { k: 0, ..init.clone() };
    let mut d = distance(&state)?;
    let (first, mut kkt) = row_for(problem, &state, steps, d)?;
    let dist_x0 = (&state.x - &reference.x).norm();
    let dist_l0 = (&state.lambda - &reference.lambda).norm();
    let mut rows = vec![first];
    let mut max_ratio: Option<f64> = None;
    let mut pending: Option<TraceRow> = None;

    let (termination, diagnostic) = loop {
        if kkt <= options.tol {
            break (Termination::Converged, format!("KKT residual {kkt:e} ≤ {:e} at k = {}", options.tol, state.k));
        }
        if state.k >= options.max_iter {
            break (Termination::MaxIter, format!("KKT residual {kkt:e} after {} iterations", state.k));
        }
        let next = match dynamics::step(problem, &state, steps) {
            Ok(next) => next,
            Err(Error::Divergence { k }) => break (Termination::Diverged, format!("non-finite iterate at k = {k}")),
            Err(e) => return Err(e),
        };
        if next.stacked().norm() > BLOWUP_NORM {
            state = next;
            break (Termination::Diverged, format!("iterate norm exceeded {BLOWUP_NORM:e} at k = {}", state.k));
        }
        let d_next = distance(&next)?;
        let ratio = (d > 0.0).then(|| (d_next / d).powi(2));
        if let Some(r) = ratio {
            max_ratio = Some(max_ratio.map_or(r, |m: f64| m.max(r)));
        }
        if let Some(last) = rows.last_mut().filter(|row| row.k == state.k) {
            last.energy_ratio = ratio;
        }
        state = next;
        d = d_next;
        let (row, total) = row_for(problem, &state, steps, d)?;
        kkt = total;
        if state.k.is_multiple_of(options.record_stride) {
            rows.push(row);
            pending = None;
        } else {
            pending = Some(row);
        }
    };
    if let Some(row) = pending {
        rows.push(row);
    }
    if let Some(last) = rows.last_mut() {
        last.energy_ratio = None;
    }
    let finite_or_nan = |v: f64| if v.is_finite() { v } else { f64::NAN };
    let metadata = TraceMetadata {
        problem_seed: None,
        steps: *steps,
        certificate: None,
        termination,
        diagnostic,
        iterations: state.k,
        final_kkt: finite_or_nan(kkt),
        max_energy_ratio: max_ratio,
        dist_x: [dist_x0, finite_or_nan((&state.x - &reference.x).norm())],
        dist_lambda: [dist_l0, finite_or_nan((&state.lambda - &reference.lambda).norm())],
        metric_note: None,
    };
    Ok(TrajectoryTrace { rows, metadata, final_state: state })
}

/// Iterates without recording; returns the last iterate and how the loop ended.
pub fn solve(
    problem: &ConstrainedProblem,
    steps: &StepConfig,
    init: &PrimalDualState,
    options: &RunOptions,
) -> Result<(PrimalDualState, Termination)> {
    options.validate()?;
    steps.validate_for(problem.kind())?;
    init.check_dims(problem)?;
    let mut state = PrimalDualState { k: 0, ..init.clone() };
    loop {
        if kkt_residual(problem, &state, steps.gamma())?.total() <= options.tol {
            return Ok((state, Termination::Converged));
        }
        if state.k >= options.max_iter {
            return Ok((state, Termination::MaxIter));
        }
        match dynamics::step(problem, &state, steps) {
            Ok(next) if next.stacked().norm() <= BLOWUP_NORM => state = next,
            Ok(next) => return Ok((next, Termination::Diverged)),
            Err(Error::Divergence { .. }) => return Ok((state, Termination::Diverged)),
            Err(e) => return Err(e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub tau_hat: f64,
    /// `max_k d(k) / (τ̂ᵏ d(0))`.
    pub c_hat: f64,
    /// `exp` of the fitted intercept: the prefactor of the best geometric fit.
    pub intercept: f64,
    pub rows_used: usize,
}

/// Least-squares fit of `log d_M` against `k` over rows with `k ≥ burn_in`
/// and `d_M > 1e-14`.
pub fn fit_rate(rows: &[TraceRow], burn_in: usize) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.k >= burn_in && r.dist_m > FIT_FLOOR && r.dist_m.is_finite())
        .map(|r| (r.k as f64, r.dist_m.ln()))
        .collect();
    if pts.len() < MIN_FIT_ROWS {
        return Err(Error::TraceTooShort { rows: pts.len(), needed: MIN_FIT_ROWS });
    }
    let m = pts.len() as f64;
    let mean_k = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|(k, y)| (k - mean_k) * (y - mean_y)).sum();
    let sxx: f64 = pts.iter().map(|(k, _)| (k - mean_k).powi(2)).sum();
    let slope = sxy / sxx;
    let tau_hat = slope.exp();
    let d0 = rows[0].dist_m;
    let c_hat = rows
        .iter()
        .filter(|r| r.dist_m.is_finite())
        .map(|r| r.dist_m / (tau_hat.powf(r.k as f64) * d0))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(RateFit { tau_hat, c_hat, intercept: (mean_y - slope * mean_k).exp(), rows_used: pts.len() })
}

pub fn write_csv_to<W: Write>(writer: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record(["k", "f", "stat_norm", "feas_norm", "dist_M", "energy_ratio"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv_from<R: Read>(reader: R) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let rows = r.deserialize().collect::<std::result::Result<Vec<TraceRow>, _>>()?;
    Ok(rows)
}

pub fn write_csv(path: &Path, rows: &[TraceRow]) -> Result<()> {
    write_csv_to(BufWriter::new(create(path)?), rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<TraceRow>> {
    read_csv_from(open(path)?)
}

pub fn write_metadata(path: &Path, metadata: &TraceMetadata) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    serde_json::to_writer_pretty(&mut w, metadata)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn read_metadata(path: &Path) -> Result<TraceMetadata> {
    Ok(serde_json::from_reader(open(path)?)?)
}

pub(crate) fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub(crate) fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}
