//! Performative optima, the binary grid oracle, and learning dynamics.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::scoring::{RuleKind, ScoringRule};
use crate::simplex::{
    l2_distance, project_to_shrunk_simplex, project_to_simplex, SimplexPoint, TangentVector,
};

/// Margin kept from the boundary when the log rule is optimized.
pub const LOG_MARGIN: f64 = 1e-6;

/// Maximum step halvings per line search.
pub const MAX_HALVINGS: usize = 40;

/// Relative width of an objective tie.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub max_iters: usize,
    /// Initial (and largest) step length of a line search, measured along the
    /// normalized gradient.
    pub step_size: f64,
    pub tol: f64,
    /// Total number of starting points, including the deterministic ones.
    pub restarts: usize,
    pub seed: u64,
    /// Grid spacing of the binary oracle run inside [`performative_optimum`].
    pub grid_resolution: f64,
    pub timeout: Option<Duration>,
    pub record_trajectory: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            step_size: 0.25,
            tol: 1e-10,
            restarts: 16,
            seed: 0,
            grid_resolution: 1e-3,
            timeout: None,
            record_trajectory: false,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol must be positive"));
        }
        if self.restarts == 0 {
            return Err(Error::invalid("restarts must be at least 1"));
        }
        if !(self.step_size > 0.0) {
            return Err(Error::invalid("step_size must be positive"));
        }
        if !(self.grid_resolution > 0.0 && self.grid_resolution <= 1e-3) {
            return Err(Error::invalid("grid_resolution must lie in (0, 1e-3]"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveResult {
    pub report: SimplexPoint,
    pub objective: f64,
    pub trajectory: Option<Vec<SimplexPoint>>,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm_final: f64,
    /// Every point is a fixed point of the map (identity environment).
    pub degenerate: bool,
}

/// `φ(p) = S(p, f(p))`.
pub fn performative_objective<E: Environment + ?Sized>(
    rule: &ScoringRule,
    f: &E,
    p: &SimplexPoint,
) -> Result<f64> {
    Ok(rule.expected_score(p, &f.eval(p))?.to_f64())
}

/// Gradient of `φ(p) = S(p, f(p))` on T: `Dg(p)ᵀ(f(p)−p) + Df(p)ᵀg(p)`.
pub fn performative_gradient<E: Environment + ?Sized>(
    rule: &ScoringRule,
    f: &E,
    p: &SimplexPoint,
) -> Result<TangentVector> {
    let g = rule.gradient(p)?;
    let h = rule.hessian(p)?;
    let drift = f.eval(p).diff(p)?;
    let a = h.apply_transpose(&drift);
    let b = f.jacobian(p).apply_transpose(&g);
    TangentVector::new(
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| x + y)
            .collect(),
    )
}

/// The stop-gradient direction `Dg(p)ᵀ(f(p) − p)`.
pub fn stop_gradient<E: Environment + ?Sized>(
    rule: &ScoringRule,
    f: &E,
    p: &SimplexPoint,
) -> Result<TangentVector> {
    let drift = f.eval(p).diff(p)?;
    Ok(rule.hessian(p)?.apply_transpose(&drift))
}

/// Projection used by every ascent method for `rule`.
pub fn project_for(rule: &ScoringRule, v: &[f64]) -> Result<SimplexPoint> {
    match rule.kind() {
        RuleKind::Logarithmic => project_to_shrunk_simplex(v, LOG_MARGIN),
        _ => project_to_simplex(v),
    }
}

pub(crate) trait Objective: Sync {
    fn value(&self, p: &SimplexPoint) -> f64;
    fn gradient(&self, p: &SimplexPoint) -> Result<TangentVector>;
    fn project(&self, v: &[f64]) -> Result<SimplexPoint>;
}

pub(crate) struct Performative<'a, E: Environment + ?Sized> {
    pub rule: &'a ScoringRule,
    pub f: &'a E,
}

impl<E: Environment + ?Sized> Objective for Performative<'_, E> {
    fn value(&self, p: &SimplexPoint) -> f64 {
        performative_objective(self.rule, self.f, p).unwrap_or(f64::NEG_INFINITY)
    }

    fn gradient(&self, p: &SimplexPoint) -> Result<TangentVector> {
        performative_gradient(self.rule, self.f, p)
    }

    fn project(&self, v: &[f64]) -> Result<SimplexPoint> {
        project_for(self.rule, v)
    }
}

fn is_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOL * a.abs().max(b.abs()).max(1.0)
}

fn lex_less(a: &SimplexPoint, b: &SimplexPoint) -> bool {
    for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
        if x != y {
            return x < y;
        }
    }
    false
}

/// Picks the best result; near-ties go to the lexicographically smallest
/// report.
fn pick_best(results: Vec<SolveResult>) -> Option<SolveResult> {
    let top = results
        .iter()
        .map(|r| r.objective)
        .fold(f64::NEG_INFINITY, f64::max);
    results
        .into_iter()
        .filter(|r| r.objective == top || is_tie(r.objective, top))
        .reduce(|a, b| if lex_less(&b.report, &a.report) { b } else { a })
}

fn check_deadline(deadline: Option<(Instant, Duration)>) -> Result<()> {
    if let Some((t, budget)) = deadline {
        if Instant::now() >= t {
            return Err(Error::Timeout(budget));
        }
    }
    Ok(())
}

/// Monotone projected ascent along the normalized gradient with halving
/// backtracking.
pub(crate) fn ascend<O: Objective + ?Sized>(
    obj: &O,
    start: SimplexPoint,
    cfg: &SolveConfig,
    deadline: Option<(Instant, Duration)>,
) -> Result<SolveResult> {
    let mut p = obj.project(start.as_slice())?;
    let mut v = obj.value(&p);
    let mut eta = cfg.step_size;
    let mut traj = cfg.record_trajectory.then(|| vec![p.clone()]);
    let mut converged = false;
    let mut iterations = 0;
    let mut grad = obj.gradient(&p)?;
    while iterations < cfg.max_iters {
        check_deadline(deadline)?;
        iterations += 1;
        let gn = grad.norm();
        if gn == 0.0 {
            converged = true;
            break;
        }
        let dir: Vec<f64> = grad.as_slice().iter().map(|x| x / gn).collect();
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = p
                .as_slice()
                .iter()
                .zip(&dir)
                .map(|(x, d)| x + eta * d)
                .collect();
            let cand = obj.project(&trial)?;
            let step = l2_distance(&cand, &p)?;
            if step <= cfg.tol * 1e-3 {
                break;
            }
            let vc = obj.value(&cand);
            if vc > v && !is_tie(vc, v) {
                accepted = Some((cand, vc, step, None));
                break;
            }
            if is_tie(vc, v) {
                // Objective differences are below rounding: follow the slope.
                let gc = obj.gradient(&cand)?;
                let mv = cand.diff(&p)?;
                if gc.dot(&mv) > 0.0 {
                    accepted = Some((cand, vc, step, Some(gc)));
                    break;
                }
            }
            eta *= 0.5;
            if eta < cfg.tol * 1e-2 {
                break;
            }
        }
        let Some((cand, vc, step, gc)) = accepted else {
            converged = true;
            break;
        };
        p = cand;
        v = vc;
        grad = match gc {
            Some(g) => g,
            None => obj.gradient(&p)?,
        };
        if let Some(t) = traj.as_mut() {
            t.push(p.clone());
        }
        eta = (2.0 * eta).min(cfg.step_size);
        if step <= cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(SolveResult {
        gradient_norm_final: grad.norm(),
        report: p,
        objective: v,
        trajectory: traj,
        converged,
        iterations,
        degenerate: false,
    })
}

/// The deterministic part of the restart set followed by seeded draws.
pub fn restart_points(n: usize, restarts: usize, seed: u64) -> Vec<SimplexPoint> {
    let uniform = SimplexPoint::uniform(n).expect("n >= 2");
    let mut starts = vec![uniform.clone()];
    let nudge = 1e-6;
    for i in 0..n {
        let v: Vec<f64> = (0..n)
            .map(|j| if j == i { 1.0 - (n - 1) as f64 * nudge } else { nudge })
            .collect();
        starts.push(SimplexPoint::new(v).expect("valid"));
    }
    for i in 0..n {
        let v: Vec<f64> = (0..n)
            .map(|j| 0.5 * uniform.get(j) + if j == i { 0.5 } else { 0.0 })
            .collect();
        starts.push(SimplexPoint::new(v).expect("valid"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while starts.len() < restarts {
        starts.push(SimplexPoint::sample_uniform(n, &mut rng));
    }
    starts
}

pub(crate) fn multi_start<O: Objective + ?Sized>(
    obj: &O,
    n: usize,
    extra: Vec<SimplexPoint>,
    cfg: &SolveConfig,
) -> Result<SolveResult> {
    cfg.validate()?;
    let deadline = cfg.timeout.map(|d| (Instant::now() + d, d));
    let mut starts = restart_points(n, cfg.restarts, cfg.seed);
    starts.extend(extra);
    let results = starts
        .into_par_iter()
        .map(|s| ascend(obj, s, cfg, deadline))
        .collect::<Result<Vec<_>>>()?;
    Ok(pick_best(results).expect("at least one start"))
}

/// Best report `argmax_p S(p, f(p))` by multi-start projected gradient
/// ascent; for two outcomes the grid oracle also runs and its argmax is
/// polished as one more start.
pub fn performative_optimum<E: Environment + ?Sized>(
    rule: &ScoringRule,
    f: &E,
    cfg: &SolveConfig,
) -> Result<SolveResult> {
    cfg.validate()?;
    let n = rule.n();
    if f.n() != n {
        return Err(Error::invalid("rule and environment disagree on n"));
    }
    let obj = Performative { rule, f };
    let mut extra = Vec::new();
    let mut grid = None;
    if n == 2 {
        let g = grid_optimum_binary(rule, f, cfg.grid_resolution)?;
        extra.push(g.report.clone());
        grid = Some(g);
    }
    let mut best = multi_start(&obj, n, extra, cfg)?;
    if let Some(g) = grid {
        best = pick_best(vec![best, g]).expect("two candidates");
    }
    Ok(best)
}

/// Brute-force argmax of `S(p, f(p))` over `p₁ ∈ {0, res, …, 1}`.
pub fn grid_optimum_binary<E: Environment + ?Sized>(
    rule: &ScoringRule,
    f: &E,
    resolution: f64,
) -> Result<SolveResult> {
    if rule.n() != 2 || f.n() != 2 {
        return Err(Error::invalid("the grid oracle is binary only"));
    }
    if !(resolution > 0.0 && resolution <= 1e-3) {
        return Err(Error::invalid("resolution must lie in (0, 1e-3]"));
    }
    let m = (1.0 / resolution).round() as usize;
    let (lo, hi) = match rule.kind() {
        RuleKind::Logarithmic => (1, m - 1),
        _ => (0, m),
    };
    let values: Vec<f64> = (lo..=hi)
        .into_par_iter()
        .map(|k| {
            let x = k as f64 / m as f64;
            rule.binary_score(x, f.eval_p1(x))
        })
        .collect();
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let idx = values
        .iter()
        .position(|&v| v == top || is_tie(v, top))
        .expect("non-empty grid");
    let x = (lo + idx) as f64 / m as f64;
    let report = SimplexPoint::binary(x)?;
    Ok(SolveResult {
        objective: performative_objective(rule, f, &report)?,
        gradient_norm_final: performative_gradient(rule, f, &report)
            .map(|g| g.norm())
            .unwrap_or(f64::NAN),
        report,
        trajectory: None,
        converged: true,
        iterations: values.len(),
        degenerate: false,
    })
}

/// Fixed-point iteration `p ← f(p)`, the best-response dynamics of a
/// strictly proper rule.
pub fn repeated_risk_minimization<E: Environment + ?Sized>(
    rule: &ScoringRule,
    f: &E,
    p0: &SimplexPoint,
    max_iters: usize,
    tol: f64,
) -> Result<SolveResult> {
    let mut p = p0.clone();
    let mut traj = vec![p.clone()];
    if f.is_identity() {
        return Ok(SolveResult {
            objective: performative_objective(rule, f, &p)?,
            report: p,
            trajectory: Some(traj),
            converged: true,
            iterations: 0,
            gradient_norm_final: 0.0,
            degenerate: true,
        });
    }
    let mut converged = false;
    let mut iterations = 0;
    let mut step = f64::INFINITY;
    while iterations < max_iters {
        let next = f.eval(&p);
        iterations += 1;
        step = l2_distance(&next, &p)?;
        p = next;
        traj.push(p.clone());
        if step <= tol {
            converged = true;
            break;
        }
    }
    Ok(SolveResult {
        objective: performative_objective(rule, f, &p)?,
        report: p,
        trajectory: Some(traj),
        converged,
        iterations,
        gradient_norm_final: step,
        degenerate: false,
    })
}

/// Projected ascent on the stop-gradient objective `S(p, ⊥f(p))`.
pub fn repeated_gradient_ascent<E: Environment + ?Sized>(
    rule: &ScoringRule,
    f: &E,
    p0: &SimplexPoint,
    step: f64,
    max_iters: usize,
    tol: f64,
) -> Result<SolveResult> {
    if !(step > 0.0) {
        return Err(Error::invalid("step must be positive"));
    }
    let mut p = project_for(rule, p0.as_slice())?;
    let mut traj = vec![p.clone()];
    let mut converged = false;
    let mut iterations = 0;
    let mut gnorm = f64::INFINITY;
    while iterations < max_iters {
        let g = stop_gradient(rule, f, &p)?;
        gnorm = g.norm();
        if gnorm == 0.0 {
            converged = true;
            break;
        }
        let v: Vec<f64> = p
            .as_slice()
            .iter()
            .zip(g.as_slice())
            .map(|(x, d)| x + step * d)
            .collect();
        let next = project_for(rule, &v)?;
        iterations += 1;
        let moved = l2_distance(&next, &p)?;
        p = next;
        traj.push(p.clone());
        if moved <= tol {
            converged = true;
            gnorm = stop_gradient(rule, f, &p)?.norm();
            break;
        }
    }
    Ok(SolveResult {
        objective: performative_objective(rule, f, &p)?,
        report: p,
        trajectory: Some(traj),
        converged,
        iterations,
        gradient_norm_final: gnorm,
        degenerate: false,
    })
}

/// Learning-rate schedule `α_t`, `t ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum LearningRate {
    Constant(f64),
    /// `c / t`.
    Harmonic(f64),
    /// `c / √t`.
    InverseSqrt(f64),
}

impl LearningRate {
    pub fn at(&self, t: usize) -> f64 {
        let t = t.max(1) as f64;
        match *self {
            LearningRate::Constant(c) => c,
            LearningRate::Harmonic(c) => c / t,
            LearningRate::InverseSqrt(c) => c / t.sqrt(),
        }
    }
}

/// A realized online-learning run. `reports[t]` is scored against
/// `outcomes[t]`; `final_report` is the iterate after the last update.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OnlineTrace {
    pub reports: Vec<SimplexPoint>,
    pub outcomes: Vec<usize>,
    pub scores: Vec<f64>,
    pub final_report: SimplexPoint,
    pub seed: u64,
}

impl OnlineTrace {
    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }
}

pub(crate) fn sample_outcome<R: Rng + ?Sized>(q: &SimplexPoint, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &x) in q.as_slice().iter().enumerate() {
        acc += x;
        if u < acc {
            return i;
        }
    }
    q.as_slice().iter().rposition(|&x| x > 0.0).unwrap_or(q.n() - 1)
}

/// Stochastic projected gradient ascent on realized scores, `Y_t ∼ f(P_t)`.
pub fn online_sgd<E: Environment + ?Sized>(
    rule: &ScoringRule,
    f: &E,
    p0: &SimplexPoint,
    schedule: LearningRate,
    steps: usize,
    seed: u64,
) -> Result<OnlineTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = project_for(rule, p0.as_slice())?;
    let mut trace = OnlineTrace {
        reports: Vec::with_capacity(steps),
        outcomes: Vec::with_capacity(steps),
        scores: Vec::with_capacity(steps),
        final_report: p.clone(),
        seed,
    };
    if steps == 0 {
        trace.final_report = p0.clone();
        return Ok(trace);
    }
    let h_const = matches!(rule.kind(), RuleKind::Quadratic);
    for t in 1..=steps {
        let q = f.eval(&p);
        let y = sample_outcome(&q, &mut rng);
        let s = rule.score(&p, y)?.to_f64();
        let target = SimplexPoint::vertex(p.n(), y)?;
        let drift = target.diff(&p)?;
        let g = if h_const {
            drift.scaled(2.0)
        } else {
            rule.hessian(&p)?.apply_transpose(&drift)
        };
        let a = schedule.at(t);
        let v: Vec<f64> = p
            .as_slice()
            .iter()
            .zip(g.as_slice())
            .map(|(x, d)| x + a * d)
            .collect();
        trace.reports.push(p);
        trace.outcomes.push(y);
        trace.scores.push(s);
        p = project_for(rule, &v)?;
    }
    trace.final_report = p;
    Ok(trace)
}
