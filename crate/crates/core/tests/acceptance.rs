//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use pdgo::contraction::{self, RateSource};
use pdgo::dynamics;
use pdgo::geometry::MetricSpaceView;
use pdgo::lagrangian::{self, aug_lagrangian, lagrangian_eq};
use pdgo::pipeline::{self, gamma_sweep, run_pipeline, GammaList, PipelineConfig};
use pdgo::problems::{generate, solve_oracle_ineq, GeneratorSpec};
use pdgo::trace::{RunOptions, Termination};
use pdgo::{ConstrainedProblem, ConstraintKind, PrimalDualState, StepConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;

fn problem(n: usize, p: usize, kind: ConstraintKind, seed: u64) -> Result<ConstrainedProblem, String> {
    generate(&GeneratorSpec::new(n, p, kind, seed)).map_err(|e| format!("seed {seed}: {e}"))
}

fn normal_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> DVector<f64> {
    DVector::from_iterator(len, (0..len).map(|_| scale * rng.sample::<f64, _>(StandardNormal)))
}

fn random_state(rng: &mut ChaCha8Rng, p: &ConstrainedProblem, scale: f64) -> PrimalDualState {
    PrimalDualState { x: normal_vec(rng, p.n(), scale), lambda: normal_vec(rng, p.p(), scale), k: 0 }
}

fn equality_pipeline() -> Outcome {
    let mut worst_time = Duration::ZERO;
    let mut worst_gap = f64::NEG_INFINITY;
    for seed in 1..=10 {
        let p = problem(6, 3, ConstraintKind::Equality, seed)?;
        let start = Instant::now();
        let cfg = PipelineConfig { init_seed: Some(seed), ..PipelineConfig::default() };
        let out = run_pipeline(&p, &cfg).map_err(|e| format!("seed {seed}: {e}"))?;
        let elapsed = start.elapsed();
        worst_time = worst_time.max(elapsed);
        let cert = out.certificate.as_ref().ok_or(format!("seed {seed}: no certificate"))?;
        if !cert.verified || cert.rate_source != RateSource::Theorem {
            return Err(format!("seed {seed}: certificate not verified ({:?})", cert.rate_source));
        }
        let meta = &out.trace.metadata;
        if meta.termination != Termination::Converged || meta.final_kkt > 1e-8 || meta.iterations > 100_000 {
            return Err(format!("seed {seed}: {:?} kkt {:e} after {}", meta.termination, meta.final_kkt, meta.iterations));
        }
        let tau2 = cert.tau * cert.tau;
        let max_ratio = meta.max_energy_ratio.ok_or(format!("seed {seed}: no energy ratios"))?;
        if max_ratio > tau2 * (1.0 + 1e-10) {
            return Err(format!("seed {seed}: energy ratio {max_ratio} > τ² = {tau2}"));
        }
        let fit = out.fit.ok_or(format!("seed {seed}: rate fit failed"))?;
        if fit.tau_hat > cert.tau {
            return Err(format!("seed {seed}: τ̂ = {} > τ = {}", fit.tau_hat, cert.tau));
        }
        worst_gap = worst_gap.max(max_ratio - tau2);
        if elapsed > Duration::from_secs(2) {
            return Err(format!("seed {seed}: took {elapsed:?}"));
        }
    }
    Ok(format!("10 seeds certified and converged; max(ratio − τ²) = {worst_gap:.3e}; slowest {worst_time:.2?}"))
}

fn inequality_pipeline() -> Outcome {
    let mut worst_dx = 0f64;
    let mut worst_dl = 0f64;
    for seed in 1..=10 {
        let p = problem(8, 4, ConstraintKind::Inequality, seed)?;
        let oracle = solve_oracle_ineq(&p).map_err(|e| format!("seed {seed}: {e}"))?;
        let cfg = PipelineConfig {
            run: RunOptions { max_iter: 1_000_000, tol: 1e-10, record_stride: 1 },
            init_seed: Some(seed),
            ..PipelineConfig::default()
        };
        let out = run_pipeline(&p, &cfg).map_err(|e| format!("seed {seed}: {e}"))?;
        if !out.converged() {
            return Err(format!("seed {seed}: {:?}", out.trace.metadata.termination));
        }
        let s = &out.trace.final_state;
        let dx = (&s.x - DVector::from_column_slice(&oracle.x_star)).amax();
        let dl = (&s.lambda - DVector::from_column_slice(&oracle.lambda_star)).amax();
        worst_dx = worst_dx.max(dx);
        worst_dl = worst_dl.max(dl);
        if dx > 1e-6 || dl > 1e-6 {
            return Err(format!("seed {seed}: ‖x − x*‖∞ = {dx:e}, ‖λ − λ*‖∞ = {dl:e}"));
        }
    }
    let mut large = Vec::new();
    for seed in [2u64, 7] {
        let p = problem(60, 30, ConstraintKind::Inequality, seed)?;
        let start = Instant::now();
        let cfg = PipelineConfig {
            run: RunOptions { max_iter: 1_000_000, tol: 1e-8, record_stride: 100 },
            init_seed: Some(seed),
            ..PipelineConfig::default()
        };
        let out = run_pipeline(&p, &cfg).map_err(|e| format!("n=60 seed {seed}: {e}"))?;
        let elapsed = start.elapsed();
        let meta = &out.trace.metadata;
        if !out.converged() || meta.final_kkt > 1e-8 {
            return Err(format!("n=60 seed {seed}: {:?} kkt {:e}", meta.termination, meta.final_kkt));
        }
        if elapsed > Duration::from_secs(30) {
            return Err(format!("n=60 seed {seed}: took {elapsed:?}"));
        }
        large.push(format!("seed {seed}: {} iters in {elapsed:.2?}", meta.iterations));
    }
    Ok(format!(
        "n=8 limits within {:.1e} (x) / {:.1e} (λ) of enumeration; n=60 {}",
        worst_dx,
        worst_dl,
        large.join(", ")
    ))
}

/// Central difference of `f` along coordinate `i` of the stacked state.
fn central_difference(state: &PrimalDualState, i: usize, h: f64, f: &dyn Fn(&PrimalDualState) -> f64) -> f64 {
    let n = state.x.len();
    let shifted = |delta: f64| {
        let mut s = state.clone();
        if i < n { s.x[i] += delta } else { s.lambda[i - n] += delta }
        f(&s)
    };
    (shifted(h) - shifted(-h)) / (2.0 * h)
}

fn gradient_check() -> Outcome {
    const H: f64 = 1e-6;
    let mut worst = 0f64;
    let mut points = 0usize;
    for seed in 1..=5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let eq = problem(6, 3, ConstraintKind::Equality, seed)?;
        let ineq = problem(8, 4, ConstraintKind::Inequality, seed)?;
        for (p, kind) in [(&eq, ConstraintKind::Equality), (&ineq, ConstraintKind::Inequality)] {
            let mut accepted = 0;
            while accepted < 100 {
                let s = random_state(&mut rng, p, 1.0);
                let gamma = rng.random_range(0.5..2.0);
                let (gx, glam, f): (_, _, Box<dyn Fn(&PrimalDualState) -> f64>) = match kind {
                    ConstraintKind::Equality => {
                        let (gx, gl) = lagrangian::grad_lagrangian_eq(p, &s).map_err(|e| e.to_string())?;
                        (gx, gl, Box::new(|t: &PrimalDualState| lagrangian_eq(p, t).unwrap()))
                    }
                    ConstraintKind::Inequality => {
                        // skip points whose stencil would straddle a kink of [z]₊
                        let z = lagrangian::penalty_arguments(p, &s, gamma);
                        let reach = H * (gamma * p.a().abs().max() + 1.0);
                        if z.iter().any(|zi| zi.abs() < 100.0 * reach) {
                            continue;
                        }
                        let (gx, gl) = lagrangian::grad_aug_lagrangian(p, &s, gamma).map_err(|e| e.to_string())?;
                        (gx, gl, Box::new(move |t: &PrimalDualState| aug_lagrangian(p, t, gamma).unwrap()))
                    }
                };
                let analytic: Vec<f64> = gx.iter().chain(glam.iter()).copied().collect();
                let scale = analytic.iter().fold(1f64, |m, v| m.max(v.abs()));
                for (i, g) in analytic.iter().enumerate() {
                    let fd = central_difference(&s, i, H, &*f);
                    let rel = (fd - g).abs() / scale;
                    worst = worst.max(rel);
                    if rel > 1e-6 {
                        return Err(format!("seed {seed} {kind}: coordinate {i} analytic {g} vs FD {fd} (rel {rel:e})"));
                    }
                }
                accepted += 1;
                points += 1;
            }
        }
    }
    Ok(format!("{points} points (100 per seed and kind), worst relative error {worst:.2e}"))
}

fn secant_identity() -> Outcome {
    let mut worst = 0f64;
    let mut pairs = 0;
    for seed in 1..=5u64 {
        let p = problem(8, 4, ConstraintKind::Inequality, seed)?;
        let steps = pipeline::practical_steps(&p, None).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        for _ in 0..20 {
            let s = random_state(&mut rng, &p, 2.0);
            let r = random_state(&mut rng, &p, 2.0);
            let psi = dynamics::compute_psi(&p, &s, &r, steps.gamma()).map_err(|e| e.to_string())?;
            if psi.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(format!("seed {seed}: ψ outside [0, 1]: {psi:?}"));
            }
            let theta = dynamics::assemble_theta(&p, &steps, Some(&psi)).map_err(|e| e.to_string())?;
            let lhs = dynamics::step(&p, &s, &steps).unwrap().stacked() - dynamics::step(&p, &r, &steps).unwrap().stacked();
            let rhs = theta.apply(&(s.stacked() - r.stacked()));
            let err = (lhs - rhs).amax();
            worst = worst.max(err);
            if err > 1e-10 {
                return Err(format!("seed {seed}: secant error {err:e}"));
            }
            pairs += 1;
        }
    }
    Ok(format!("{pairs} pairs, max abs error {worst:.2e}, all ψ in [0, 1]"))
}

fn equality_certificate() -> Outcome {
    let mut worst_margin = f64::NEG_INFINITY;
    let mut worst_oversized = f64::INFINITY;
    for seed in 1..=10 {
        let p = problem(6, 3, ConstraintKind::Equality, seed)?;
        let design = contraction::design_steps_eq(&p, 0.9).map_err(|e| e.to_string())?;
        let cert = contraction::certify(&p, &design.steps, design.c, 0).map_err(|e| e.to_string())?;
        let tau2_minus_one = contraction::rate_exponent(design.steps.alpha(), design.steps.beta(), p.constraint.sigma_lo(), design.c)
            .map_err(|e| e.to_string())?;
        let margin = cert.mu_max_minus_one - tau2_minus_one;
        worst_margin = worst_margin.max(margin);
        if !cert.verified || margin > 1e-12 {
            return Err(format!("seed {seed}: μ_max − τ² = {margin:e}"));
        }
        let oversized = StepConfig::equality(5.0 / p.objective.rho_hi(), design.steps.beta()).unwrap();
        let bad = contraction::certify(&p, &oversized, 0.99, 0).map_err(|e| format!("seed {seed} oversized: {e}"))?;
        if bad.verified {
            return Err(format!("seed {seed}: oversized steps verified"));
        }
        worst_oversized = worst_oversized.min(bad.mu_max);
    }
    Ok(format!(
        "10 designed instances verified (max μ − τ² = {worst_margin:.2e}); oversized αρ̄ = 5 rejected (min μ_max = {worst_oversized:.2})"
    ))
}

fn lemma4() -> Outcome {
    let cases = [(6, 3, 1u64), (6, 3, 2), (8, 4, 1), (8, 4, 2), (8, 4, 3), (16, 12, 1), (60, 30, 2), (60, 30, 7)];
    let mut worst = f64::NEG_INFINITY;
    let mut summary = Vec::new();
    for (n, p_count, seed) in cases {
        let p = problem(n, p_count, ConstraintKind::Inequality, seed)?;
        let design = contraction::design_steps_ineq(&p, 1.0, 0.9).map_err(|e| e.to_string())?;
        if !design.feasible {
            return Err(format!("n={n} p={p_count} seed {seed}: designer infeasible ({:?})", design.binding));
        }
        let floor = contraction::lemma4_c_floor(&p, &design.steps);
        if !(design.c >= floor && design.c <= 1.0 && design.steps.gamma() >= 2.0 * design.steps.beta()) {
            return Err(format!("n={n} seed {seed}: hypotheses fail (c = {}, floor {floor})", design.c));
        }
        let check = contraction::check_lemma4(&p, &design.steps, design.c, 1000).map_err(|e| e.to_string())?;
        worst = worst.max(check.worst_eigenvalue);
        if !check.passed {
            return Err(format!("n={n} seed {seed}: λmax = {:e}", check.worst_eigenvalue));
        }
        let expected = if p_count <= contraction::VERTEX_LIMIT { 1usize << p_count } else { 1002 };
        if check.samples_checked != expected {
            return Err(format!("n={n}: checked {} Ψ, expected {expected}", check.samples_checked));
        }
        summary.push(format!("{}{}", check.samples_checked, if check.exhaustive { "v" } else { "d" }));
    }
    Ok(format!("{} designed instances, Ψ sets [{}], worst λmax = {worst:.2e}", cases.len(), summary.join(" ")))
}

fn geometry_quadrature() -> Outcome {
    const POINTS: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0f64;
    for trial in 0..20 {
        let dim = rng.random_range(2..=10);
        let b = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let m = b.transpose() * &b + DMatrix::identity(dim, dim) * 0.1;
        let s1 = normal_vec(&mut rng, dim, 1.0);
        let s2 = normal_vec(&mut rng, dim, 1.0);
        let view = MetricSpaceView::new(m.clone()).map_err(|e| e.to_string())?;
        let d = view.distance(&s1, &s2).map_err(|e| e.to_string())?;
        // midpoint rule for ∫₀¹ √(γ'(t)ᵀ M(γ(t)) γ'(t)) dt along γ(t) = s₁ + t(s₂ − s₁)
        let velocity = &s2 - &s1;
        let metric_at = |_point: &DVector<f64>| &m;
        let length: f64 = (0..POINTS)
            .map(|j| {
                let t = (j as f64 + 0.5) / POINTS as f64;
                let point = &s1 + &velocity * t;
                velocity.dot(&(metric_at(&point) * &velocity)).sqrt()
            })
            .sum::<f64>()
            / POINTS as f64;
        let rel = (length - d).abs() / d;
        worst = worst.max(rel);
        if rel > 1e-8 {
            return Err(format!("trial {trial}: distance {d} vs quadrature {length} (rel {rel:e})"));
        }
    }
    Ok(format!("20 triples, worst relative gap {worst:.2e}"))
}

fn gamma_sweep_check() -> Outcome {
    let mut summary = Vec::new();
    for (n, p_count, seed) in [(8, 4, 1u64), (60, 30, 2)] {
        let p = problem(n, p_count, ConstraintKind::Inequality, seed)?;
        let cfg = PipelineConfig {
            run: RunOptions { max_iter: 1_000_000, tol: 1e-8, record_stride: 10 },
            init_seed: Some(11),
            ..PipelineConfig::default()
        };
        let sweep = gamma_sweep(&p, &GammaList::Multiples(vec![2.0, 4.0, 8.0]), &cfg).map_err(|e| e.to_string())?;
        if sweep.rows.len() != 3 {
            return Err(format!("n={n}: {} summary rows", sweep.rows.len()));
        }
        for row in &sweep.rows {
            let k = row.multiple.unwrap_or(f64::NAN);
            if row.termination != Some(Termination::Converged) {
                return Err(format!("n={n} γ = {k}β: {:?} {:?}", row.termination, row.error));
            }
            match row.tau_cert {
                Some(t) if row.cert_verified && t > 0.0 && t < 1.0 => {}
                other => return Err(format!("n={n} γ = {k}β: no valid τ ({other:?}, verified {})", row.cert_verified)),
            }
            summary.push(format!(
                "n={n} {k}β: τ={:.6} τ̂={:.6} k={}",
                row.tau_cert.unwrap(),
                row.tau_hat.unwrap_or(f64::NAN),
                row.iterations.unwrap_or(0)
            ));
        }
    }
    Ok(summary.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("equality pipeline", equality_pipeline),
        ("inequality pipeline", inequality_pipeline),
        ("gradient correctness", gradient_check),
        ("secant identity", secant_identity),
        ("equality certificate", equality_certificate),
        ("dual-block bound", lemma4),
        ("geometry quadrature", geometry_quadrature),
        ("gamma sweep", gamma_sweep_check),
    ];
    let mut out = std::io::stdout().lock();
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let (tag, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        writeln!(out, "{tag} criterion {} ({name}) [{:.2?}]: {detail}", i + 1, start.elapsed()).unwrap();
    }
    writeln!(out, "acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len()).unwrap();
    if failures > 0 {
        std::process::exit(1);
    }
}
