//! Accuracy bounds for performatively optimal reports and scoring rules
//! designed to meet a target bound.

use serde::Serialize;

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::scoring::{RuleKind, ScoringRule, K_MIN};
use crate::simplex::{tangent_operator_norm, SimplexPoint};

/// Global constants entering the Lipschitz form of the bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GlobalConstants {
    /// Lipschitz constant of `f` on T.
    pub lipschitz_f: f64,
    /// `sup ‖g(p)‖` over the simplex.
    pub lipschitz_g: f64,
    /// `inf γ_p` over the simplex.
    pub gamma: f64,
}

impl GlobalConstants {
    /// Constants for rules whose gradient stays bounded; `None` for the log
    /// rule.
    pub fn for_rule(rule: &ScoringRule, lipschitz_f: f64) -> Option<Self> {
        let n = rule.n() as f64;
        match rule.kind() {
            RuleKind::Quadratic => Some(Self {
                lipschitz_f,
                lipschitz_g: 2.0 * ((n - 1.0) / n).sqrt(),
                gamma: 2.0,
            }),
            RuleKind::ExponentialBinary { k } => Some(Self {
                lipschitz_f,
                lipschitz_g: std::f64::consts::SQRT_2 * k.exp(),
                gamma: k,
            }),
            RuleKind::Logarithmic => None,
        }
    }

    pub fn inaccuracy_bound(&self) -> f64 {
        self.lipschitz_f * self.lipschitz_g / self.gamma
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundInputs {
    pub grad_norm: f64,
    pub gamma: f64,
    pub jacobian_op_norm: f64,
    pub lipschitz_f: Option<f64>,
    pub lipschitz_g: Option<f64>,
    pub gamma_global: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub at: SimplexPoint,
    /// `‖Df(p)‖·‖g(p)‖/γ_p`.
    pub pointwise_inaccuracy_bound: f64,
    /// `L_f·L_G/γ`, when global constants are known.
    pub lipschitz_inaccuracy_bound: Option<f64>,
    /// `‖g(p)‖·‖Df(p)‖/((1−L_f)γ_p)`, when `L_f < 1`.
    pub fixed_point_distance_bound: Option<f64>,
    pub inputs: BoundInputs,
}

/// Pointwise and (optionally) global bounds on `‖p − f(p)‖` at `p`.
pub fn inaccuracy_bound<E: Environment + ?Sized>(
    rule: &ScoringRule,
    f: &E,
    p: &SimplexPoint,
    globals: Option<&GlobalConstants>,
) -> Result<BoundReport> {
    let grad_norm = rule.gradient(p)?.norm();
    let gamma = rule.gamma_at(p)?;
    let op = tangent_operator_norm(&f.jacobian(p));
    let pointwise = op * grad_norm / gamma;
    let fp = match globals {
        Some(g) if g.lipschitz_f < 1.0 => Some(grad_norm * op / ((1.0 - g.lipschitz_f) * gamma)),
        _ => None,
    };
    Ok(BoundReport {
        at: p.clone(),
        pointwise_inaccuracy_bound: pointwise,
        lipschitz_inaccuracy_bound: globals.map(|g| g.inaccuracy_bound()),
        fixed_point_distance_bound: fp,
        inputs: BoundInputs {
            grad_norm,
            gamma,
            jacobian_op_norm: op,
            lipschitz_f: globals.map(|g| g.lipschitz_f),
            lipschitz_g: globals.map(|g| g.lipschitz_g),
            gamma_global: globals.map(|g| g.gamma),
        },
    })
}

/// Bound on the distance from an optimal report `p` to the unique fixed
/// point of `f`.
pub fn fixed_point_distance_bound<E: Environment + ?Sized>(
    rule: &ScoringRule,
    f: &E,
    p: &SimplexPoint,
    lipschitz_f: f64,
) -> Result<f64> {
    if !(lipschitz_f < 1.0) {
        return Err(Error::domain(format!(
            "L_f = {lipschitz_f} >= 1: no nontrivial bound exists, optimal reports can be \
             arbitrarily close to sqrt(2) away from the fixed point"
        )));
    }
    let grad_norm = rule.gradient(p)?.norm();
    let gamma = rule.gamma_at(p)?;
    let op = tangent_operator_norm(&f.jacobian(p));
    Ok(grad_norm * op / ((1.0 - lipschitz_f) * gamma))
}

/// `L_f·√((n−1)/n)`, the global inaccuracy bound of the quadratic rule.
pub fn quadratic_inaccuracy_bound(n: usize, lipschitz_f: f64) -> f64 {
    let n = n as f64;
    lipschitz_f * ((n - 1.0) / n).sqrt()
}

/// `L_f·√((n−1)/n)/(1−L_f)`.
pub fn quadratic_fixed_point_distance_bound(n: usize, lipschitz_f: f64) -> Result<f64> {
    if !(lipschitz_f < 1.0) {
        return Err(Error::domain("L_f must be below 1"));
    }
    Ok(quadratic_inaccuracy_bound(n, lipschitz_f) / (1.0 - lipschitz_f))
}

fn log_ratio(x: f64) -> f64 {
    std::f64::consts::SQRT_2 * x * (1.0 - x) * (x / (1.0 - x)).ln().abs()
}

/// Maximizes `√2·x(1−x)|log(x/(1−x))|` by golden-section search on
/// `[1/2, 1)`; returns `(max·L_f, argmax)`.
pub fn log_binary_bound(lipschitz_f: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.5, 1.0 - 1e-12);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (log_ratio(c), log_ratio(d));
    while b - a > 1e-10 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = log_ratio(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = log_ratio(d);
        }
    }
    let x = 0.5 * (a + b);
    (log_ratio(x) * lipschitz_f, x)
}

/// `sup_p ‖g(p)‖/γ_p`, the rule's factor in the inaccuracy bound. Known for
/// the quadratic rule, the binary log rule and the exponential rule.
pub fn gradient_curvature_ratio(rule: &ScoringRule) -> Option<f64> {
    let n = rule.n() as f64;
    match rule.kind() {
        RuleKind::Quadratic => Some(((n - 1.0) / n).sqrt()),
        RuleKind::Logarithmic if rule.n() == 2 => Some(log_binary_bound(1.0).0),
        RuleKind::Logarithmic => None,
        RuleKind::ExponentialBinary { k } => Some(std::f64::consts::SQRT_2 / k),
    }
}

/// Which distance the designed rule should control.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignTarget {
    Inaccuracy,
    FixedPointDistance,
}

impl std::str::FromStr for DesignTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inaccuracy" => Ok(DesignTarget::Inaccuracy),
            "fixed-point-distance" | "fixed_point_distance" => Ok(DesignTarget::FixedPointDistance),
            _ => Err(Error::invalid(format!(
                "unknown target '{s}' (expected inaccuracy or fixed-point-distance)"
            ))),
        }
    }
}

/// Exponent `K` such that every optimal report under any `L_f`-Lipschitz
/// binary environment is within `ε` of the target.
///
/// The exponential rule has `‖g(p)‖/γ_p = √2/K` everywhere, so the
/// inaccuracy bound is `√2·L_f/K` and the fixed-point bound is
/// `√2·L_f/((1−L_f)K)`.
pub fn exponential_rule_k(lipschitz_f: f64, epsilon: f64, target: DesignTarget) -> Result<f64> {
    if !(lipschitz_f > 0.0 && lipschitz_f.is_finite()) {
        return Err(Error::invalid(format!("L_f = {lipschitz_f} must be positive")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon = {epsilon} must be positive")));
    }
    let s2 = std::f64::consts::SQRT_2;
    let k = match target {
        DesignTarget::Inaccuracy => s2 * lipschitz_f / epsilon,
        DesignTarget::FixedPointDistance => {
            if lipschitz_f >= 1.0 {
                return Err(Error::invalid("the fixed-point target needs L_f < 1"));
            }
            s2 * lipschitz_f / ((1.0 - lipschitz_f) * epsilon)
        }
    };
    if !(k >= K_MIN) {
        return Err(Error::invalid(format!("K = {k} is below the minimum {K_MIN}")));
    }
    Ok(k)
}

pub fn design_exponential_rule(
    lipschitz_f: f64,
    epsilon: f64,
    target: DesignTarget,
) -> Result<ScoringRule> {
    ScoringRule::exponential_binary(exponential_rule_k(lipschitz_f, epsilon, target)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StakeProfile {
    pub delta: f64,
    /// `(p₁, S(p,p) − S(p+4δ, p))`.
    pub grid: Vec<(f64, f64)>,
    pub sup_inf_ratio: f64,
    /// `(L_f/(2L_f+6))·(3(L_f+1)/(L_f+3))^((L_f+1)(p_h−p_l)/(8ε) − 5/2)`.
    pub lower_bound: f64,
    pub ratio_meets_lower_bound: bool,
    /// The rule is known to achieve `ε` for every `L_f`-Lipschitz map, so the
    /// comparison above is a theorem rather than an observation.
    pub premise_certified: bool,
}

/// Misreport costs `S(p,p) − S(p+4δ, p)` with `δ = ε/(L_f+1)` over a grid
/// of `[p_l, p_h]`.
pub fn stake_profile(
    rule: &ScoringRule,
    lipschitz_f: f64,
    epsilon: f64,
    p_l: f64,
    p_h: f64,
    grid_step: f64,
) -> Result<StakeProfile> {
    if rule.n() != 2 {
        return Err(Error::invalid("stake profiles are binary only"));
    }
    if !(lipschitz_f > 0.0 && epsilon > 0.0 && grid_step > 0.0) {
        return Err(Error::invalid("L_f, epsilon and grid_step must be positive"));
    }
    if !(3.0 * epsilon <= p_l && p_l <= p_h && p_h <= 1.0 - 4.0 * epsilon) {
        return Err(Error::invalid(format!(
            "need 3ε <= p_l <= p_h <= 1 − 4ε, got p_l = {p_l}, p_h = {p_h}, ε = {epsilon}"
        )));
    }
    let delta = epsilon / (lipschitz_f + 1.0);
    let m = ((p_h - p_l) / grid_step).round() as usize;
    let grid: Vec<(f64, f64)> = (0..=m)
        .map(|k| {
            let x = if m == 0 { p_l } else { p_l + (p_h - p_l) * k as f64 / m as f64 };
            let cost = rule.binary_score(x, x) - rule.binary_score(x + 4.0 * delta, x);
            (x, cost)
        })
        .collect();
    let sup = grid.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);
    let inf = grid.iter().map(|g| g.1).fold(f64::INFINITY, f64::min);
    let ratio = if m == 0 { 1.0 } else { sup / inf };
    let l = lipschitz_f;
    let expo = (l + 1.0) * (p_h - p_l) / (8.0 * epsilon) - 2.5;
    let lower_bound = l / (2.0 * l + 6.0) * (3.0 * (l + 1.0) / (l + 3.0)).powf(expo);
    let premise_certified = match rule.kind() {
        RuleKind::ExponentialBinary { k } => std::f64::consts::SQRT_2 * l / k <= epsilon * (1.0 + 1e-12),
        _ => false,
    };
    Ok(StakeProfile {
        delta,
        grid,
        sup_inf_ratio: ratio,
        lower_bound,
        ratio_meets_lower_bound: ratio >= lower_bound,
        premise_certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_lands_on_upper_maximizer() {
        let (b, x) = log_binary_bound(1.0);
        assert!(x > 0.5);
        let grid_max = (1..100_000)
            .map(|i| log_ratio(i as f64 / 100_000.0))
            .fold(0.0, f64::max);
        assert!((b - grid_max).abs() < 1e-9);
    }
}
