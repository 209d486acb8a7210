use serde::Serialize;

use crate::environment::{Environment, EnvironmentMap};
use crate::error::{Error, Result};
use crate::scoring::ScoringRule;
use crate::solvers::{grid_optimum_binary, performative_objective, performative_optimum, SolveConfig};
use crate::simplex::SimplexPoint;

/// A shrink-to map whose unique fixed point `p*` is beaten by another
/// report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub p_star: SimplexPoint,
    pub p_prime: SimplexPoint,
    /// `G(p′) − G(p*)`, the gap at `α = 0`.
    pub potential_gap: f64,
    /// Largest weight at which `p′` still ties `p*`.
    pub crossing_alpha: f64,
    /// Reported weight, half the crossing point.
    pub alpha: f64,
    /// `S(p′, f_α(p′)) − S(p*, p*)`.
    pub score_gap: f64,
}

fn potential(rule: &ScoringRule, p: &SimplexPoint) -> Result<f64> {
    rule.potential(p)?
        .finite()
        .ok_or_else(|| Error::domain("potential is unbounded at the chosen point"))
}

/// Moves from `p*` toward the vertex with the largest potential until the
/// potential strictly exceeds `G(p*)`, then bisects on the shrink weight
/// `α` of `f_α(p) = (1−α)p + αp*` for the point where `p′` stops beating `p*`.
pub fn counterexample_demo(rule: &ScoringRule, p_star: &SimplexPoint) -> Result<CounterexampleReport> {
    let n = rule.n();
    if p_star.n() != n {
        return Err(Error::invalid("p* and rule disagree on n"));
    }
    if !p_star.is_interior() {
        return Err(Error::invalid("p* must be interior"));
    }
    let g_star = potential(rule, p_star)?;
    let mut best_vertex = 0;
    let mut best_g = f64::NEG_INFINITY;
    for i in 0..n {
        let t = 1.0 - 1e-9;
        let v: Vec<f64> = (0..n)
            .map(|j| {
                let e = if i == j { 1.0 } else { 0.0 };
                p_star.get(j) + t * (e - p_star.get(j))
            })
            .collect();
        let g = potential(rule, &SimplexPoint::new(v)?)?;
        if g > best_g {
            best_g = g;
            best_vertex = i;
        }
    }
    let toward = |t: f64| -> Result<SimplexPoint> {
        SimplexPoint::new(
            (0..n)
                .map(|j| {
                    let e = if j == best_vertex { 1.0 } else { 0.0 };
                    p_star.get(j) + t * (e - p_star.get(j))
                })
                .collect(),
        )
    };
    let mut p_prime = None;
    for &t in &[0.5, 0.75, 0.9, 0.99, 0.999, 1.0 - 1e-6] {
        let q = toward(t)?;
        let gap = potential(rule, &q)? - g_star;
        if gap > 1e-9 {
            p_prime = Some((q, gap));
            break;
        }
    }
    let (p_prime, potential_gap) =
        p_prime.ok_or_else(|| Error::domain("no report with a larger potential than p*"))?;
    let gap_at = |alpha: f64| -> Result<f64> {
        let f = EnvironmentMap::shrink_to(p_star.clone(), alpha)?;
        Ok(performative_objective(rule, &f, &p_prime)? - g_star)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    if gap_at(hi)? > 0.0 {
        return Err(Error::domain("p' beats p* even under the constant map"));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if gap_at(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * lo;
    Ok(CounterexampleReport {
        p_star: p_star.clone(),
        potential_gap,
        crossing_alpha: lo,
        alpha,
        score_gap: gap_at(alpha)?,
        p_prime,
    })
}

/// The ramp construction: its only fixed point sits at `1−ζ` (or `ζ` when
/// mirrored) while the optimal report stays within `2δ` of the other end.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RampDemoReport {
    pub zeta: f64,
    pub eps: f64,
    pub delta: f64,
    pub mirrored: bool,
    pub fixed_point_p1: f64,
    pub report_p1: f64,
    pub distance_p1: f64,
    pub lower_bound: f64,
    pub holds: bool,
}

/// Chooses the ramp side by comparing `S(δ, δ)` with the largest potential
/// on `[2δ, 1−2δ]`, with `δ = 0.4ζ`, then solves for the optimal report.
pub fn ramp_demo(rule: &ScoringRule, zeta: f64, eps: f64) -> Result<RampDemoReport> {
    if rule.n() != 2 {
        return Err(Error::invalid("the ramp demo is binary"));
    }
    let delta = 0.4 * zeta;
    let g = |x: f64| rule.binary_score(x, x);
    let steps = 10_000;
    let middle = (0..=steps)
        .map(|k| 2.0 * delta + (1.0 - 4.0 * delta) * k as f64 / steps as f64)
        .map(g)
        .fold(f64::NEG_INFINITY, f64::max);
    let mirrored = !(g(delta) > middle);
    let f = EnvironmentMap::ramp(zeta, eps, mirrored)?;
    let cfg = SolveConfig {
        grid_resolution: 1e-5,
        ..SolveConfig::default()
    };
    let grid = grid_optimum_binary(rule, &f, 1e-5)?;
    let sol = performative_optimum(rule, &f, &cfg)?;
    let report_p1 = if sol.objective >= grid.objective {
        sol.report.p1()
    } else {
        grid.report.p1()
    };
    let fixed_point_p1 = if mirrored { zeta } else { 1.0 - zeta };
    let distance_p1 = (report_p1 - fixed_point_p1).abs();
    let lower_bound = 1.0 - zeta - 2.0 * delta;
    debug_assert!((f.eval_p1(fixed_point_p1) - fixed_point_p1).abs() < 1e-12);
    Ok(RampDemoReport {
        zeta,
        eps,
        delta,
        mirrored,
        fixed_point_p1,
        report_p1,
        distance_p1,
        lower_bound,
        holds: distance_p1 >= lower_bound,
    })
}
