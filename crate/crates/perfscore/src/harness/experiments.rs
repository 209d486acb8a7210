use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::records::{ExperimentRecord, MaxCurvePoint, Status};
use super::stats::SummaryBundle;
use crate::bounds::gradient_curvature_ratio;
use crate::environment::{Environment, EnvironmentMap, FixedPointConfig};
use crate::error::{Error, Result};
use crate::scoring::{RuleKind, ScoringRule};
use crate::simplex::{l2_distance, logit_distance, tangent_operator_norm, SimplexPoint};
use crate::solvers::{performative_optimum, SolveConfig};

/// Settings shared by the binary sweeps.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub solve: SolveConfig,
    /// Distance-to-fixed-point columns are left empty above this slope.
    pub dist_alpha_max: f64,
    pub record_timing: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            solve: SolveConfig {
                restarts: 3,
                ..SolveConfig::default()
            },
            dist_alpha_max: 0.95,
            record_timing: false,
        }
    }
}

/// `{0, step, 2·step, …, 1}`.
pub fn unit_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::invalid("grid step must lie in (0, 1]"));
    }
    let m = (1.0 / step).round() as usize;
    Ok((0..=m).map(|k| k as f64 / m as f64).collect())
}

fn elapsed_ms(start: Instant, record: bool) -> u64 {
    if record {
        start.elapsed().as_millis() as u64
    } else {
        0
    }
}

/// Records every quantity of one solved instance against its fixed point.
fn measure(
    rule: &ScoringRule,
    f: &EnvironmentMap,
    report: &SimplexPoint,
    fixed_point: &SimplexPoint,
    op_norm: f64,
    with_dist: bool,
) -> Result<ExperimentRecord> {
    let n = rule.n();
    let u = SimplexPoint::uniform(n)?;
    let fp_of_report = f.eval(report);
    let inaccuracy = l2_distance(report, &fp_of_report)?;
    let ratio = gradient_curvature_ratio(rule);
    let bound_lf = ratio.map(|r| r * op_norm);
    let smooth = f.is_smooth_at(report);
    let bound_pointwise = match rule.gradient(report) {
        Ok(g) if smooth => {
            let jac = tangent_operator_norm(&f.jacobian(report));
            Some(jac * g.norm() / rule.gamma_at(report)?)
        }
        _ => None,
    };
    let contraction = op_norm < 1.0;
    let logit_inaccuracy = match rule.kind() {
        RuleKind::Logarithmic if n == 2 => logit_distance(report, &fp_of_report).ok(),
        _ => None,
    };
    Ok(ExperimentRecord {
        trial: None,
        env: f.to_string(),
        alpha: None,
        p_star1: None,
        op_norm,
        inaccuracy: Some(inaccuracy),
        dist_to_fp: with_dist.then(|| l2_distance(report, fixed_point)).transpose()?,
        dist_fp_uniform: Some(l2_distance(fixed_point, &u)?),
        dist_report_uniform: Some(l2_distance(report, &u)?),
        bound_lf,
        bound_pointwise,
        runtime_ms: 0,
        status: Status::Ok,
        logit_inaccuracy,
        bound_dist_lf: bound_lf.filter(|_| with_dist && contraction).map(|b| b / (1.0 - op_norm)),
        bound_dist_pointwise: bound_pointwise
            .filter(|_| with_dist && contraction)
            .map(|b| b / (1.0 - op_norm)),
        report: Some(report.clone()),
        fixed_point: Some(fixed_point.clone()),
    })
}

/// Performative optima of `p ↦ p* + α(p − p*)` over the product grid,
/// ordered by `α` then `p*₁`.
pub fn binary_sweep(
    rule: &ScoringRule,
    alphas: &[f64],
    p_stars: &[f64],
    cfg: &SweepConfig,
) -> Result<Vec<ExperimentRecord>> {
    if rule.n() != 2 {
        return Err(Error::invalid("binary sweeps need a binary rule"));
    }
    if alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::invalid("sweep slopes must lie in [0, 1]"));
    }
    let cells: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| p_stars.iter().map(move |&s| (a, s)))
        .collect();
    cells
        .into_par_iter()
        .map(|(alpha, s)| {
            let start = Instant::now();
            let f = EnvironmentMap::affine_binary(s, alpha)?;
            let sol = performative_optimum(rule, &f, &cfg.solve)?;
            let fp = SimplexPoint::binary(s)?;
            let mut rec = measure(rule, &f, &sol.report, &fp, alpha, alpha <= cfg.dist_alpha_max)?;
            rec.alpha = Some(alpha);
            rec.p_star1 = Some(s);
            rec.runtime_ms = elapsed_ms(start, cfg.record_timing);
            Ok(rec)
        })
        .collect()
}

/// Worst-case inaccuracy and distance to the fixed point over `p*₁`, with
/// the Lipschitz-form bounds `α·sup‖g‖/γ` and `α·sup‖g‖/((1−α)γ)`.
pub fn max_curves(
    rule: &ScoringRule,
    alphas: &[f64],
    p_star_step: f64,
    cfg: &SweepConfig,
) -> Result<Vec<MaxCurvePoint>> {
    if p_star_step > 1e-3 {
        return Err(Error::invalid("the inner grid step must be at most 1e-3"));
    }
    let p_stars = unit_grid(p_star_step)?;
    let ratio = gradient_curvature_ratio(rule);
    alphas
        .iter()
        .map(|&alpha| {
            let recs = binary_sweep(rule, &[alpha], &p_stars, cfg)?;
            let max_of = |col: fn(&ExperimentRecord) -> Option<f64>| {
                recs.iter().filter_map(col).reduce(f64::max)
            };
            let with_dist = alpha <= cfg.dist_alpha_max;
            Ok(MaxCurvePoint {
                alpha,
                max_inaccuracy: max_of(|r| r.inaccuracy).unwrap_or(0.0),
                max_dist_to_fp: max_of(|r| r.dist_to_fp),
                bound_inaccuracy: ratio.map(|r| r * alpha),
                bound_dist: ratio
                    .filter(|_| with_dist && alpha < 1.0)
                    .map(|r| r * alpha / (1.0 - alpha)),
            })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ManyOutcomeConfig {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Per-trial solver budget; trials that exceed it are recorded as
    /// timeouts.
    pub timeout: Duration,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    pub solve: SolveConfig,
    pub record_timing: bool,
}

impl Default for ManyOutcomeConfig {
    fn default() -> Self {
        Self {
            n: 5,
            trials: 1000,
            seed: 1,
            timeout: Duration::from_secs(120),
            jobs: None,
            solve: SolveConfig::default(),
            record_timing: false,
        }
    }
}

/// The random matrix of one trial: stream `trial` of the ChaCha generator
/// seeded with `seed`.
pub fn trial_environment(n: usize, seed: u64, trial: usize) -> (EnvironmentMap, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let f = EnvironmentMap::random_linear(n, &mut rng);
    (f, rng.gen())
}

fn run_pool<T: Send>(jobs: Option<usize>, op: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(op()),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(op))
        }
    }
}

/// Quadratic-rule optima for `p ↦ Ap` with columns of `A` drawn uniformly
/// from the simplex.
pub fn many_outcome_experiment(
    cfg: &ManyOutcomeConfig,
) -> Result<(Vec<ExperimentRecord>, SummaryBundle)> {
    if cfg.n < 3 {
        return Err(Error::invalid("the many-outcome experiment needs n >= 3"));
    }
    if cfg.trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let rule = ScoringRule::quadratic(cfg.n)?;
    let records = run_pool(cfg.jobs, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let (f, solver_seed) = trial_environment(cfg.n, cfg.seed, t);
                let mut rec = many_outcome_trial(&rule, &f, solver_seed, cfg)?;
                rec.trial = Some(t);
                Ok(rec)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let summary = SummaryBundle::from_records(&records);
    Ok((records, summary))
}

fn many_outcome_trial(
    rule: &ScoringRule,
    f: &EnvironmentMap,
    solver_seed: u64,
    cfg: &ManyOutcomeConfig,
) -> Result<ExperimentRecord> {
    let start = Instant::now();
    let op_norm = f.lipschitz_estimate(0, 0);
    let fp = f.find_fixed_points(&FixedPointConfig::default())?.points.remove(0);
    let solve = SolveConfig {
        seed: solver_seed,
        timeout: Some(cfg.timeout),
        ..cfg.solve.clone()
    };
    match performative_optimum(rule, f, &solve) {
        Ok(sol) => {
            let mut rec = measure(rule, f, &sol.report, &fp, op_norm, true)?;
            rec.runtime_ms = elapsed_ms(start, cfg.record_timing);
            Ok(rec)
        }
        Err(Error::Timeout(_)) => Ok(ExperimentRecord::timeout(
            0,
            f.to_string(),
            op_norm,
            elapsed_ms(start, cfg.record_timing),
        )),
        Err(e) => Err(e),
    }
}

/// Share of random linear environments whose quadratic-rule optimum is not
/// a fixed point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonFixedReport {
    pub trials: usize,
    pub non_fixed: usize,
    pub rate: f64,
    pub threshold: f64,
    pub min_inaccuracy: f64,
}

pub fn nonfixed_optimum_rate(
    ns: &[usize],
    trials_per_n: usize,
    seed: u64,
    threshold: f64,
    solve: &SolveConfig,
) -> Result<NonFixedReport> {
    let cases: Vec<(usize, usize)> = ns
        .iter()
        .flat_map(|&n| (0..trials_per_n).map(move |t| (n, t)))
        .collect();
    let inacc = cases
        .par_iter()
        .map(|&(n, t)| {
            let (f, solver_seed) = trial_environment(n, seed ^ ((n as u64) << 32), t);
            let rule = ScoringRule::quadratic(n)?;
            let cfg = SolveConfig {
                seed: solver_seed,
                ..solve.clone()
            };
            let sol = performative_optimum(&rule, &f, &cfg)?;
            l2_distance(&sol.report, &f.eval(&sol.report))
        })
        .collect::<Result<Vec<f64>>>()?;
    let non_fixed = inacc.iter().filter(|&&d| d > threshold).count();
    Ok(NonFixedReport {
        trials: inacc.len(),
        non_fixed,
        rate: non_fixed as f64 / inacc.len().max(1) as f64,
        threshold,
        min_inaccuracy: inacc.iter().copied().fold(f64::INFINITY, f64::min),
    })
}
