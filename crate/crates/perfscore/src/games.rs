//! Stability, the oracle game, prediction markets and regret.

use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::environment::{Environment, EnvironmentMap, FixedPointConfig, FixedPointSet};
use crate::error::{Error, Result};
use crate::scoring::ScoringRule;
use crate::simplex::{l2_distance, tangent_operator_norm, SimplexPoint, TangentMatrix, TangentVector};
use crate::solvers::{
    multi_start, online_sgd, performative_objective, performative_optimum, project_for,
    repeated_gradient_ascent, sample_outcome, LearningRate, Objective, SolveConfig,
};

/// `x ↦ S(x, q)` for a fixed belief `q`.
struct Honest<'a> {
    rule: &'a ScoringRule,
    q: &'a SimplexPoint,
}

impl Objective for Honest<'_> {
    fn value(&self, p: &SimplexPoint) -> f64 {
        self.rule.expected_score(p, self.q).map(|s| s.to_f64()).unwrap_or(f64::NEG_INFINITY)
    }

    fn gradient(&self, p: &SimplexPoint) -> Result<TangentVector> {
        let drift = self.q.diff(p)?;
        Ok(self.rule.hessian(p)?.apply_transpose(&drift))
    }

    fn project(&self, v: &[f64]) -> Result<SimplexPoint> {
        project_for(self.rule, v)
    }
}

/// Numerical `argmax_x S(x, q)`.
pub fn best_response(rule: &ScoringRule, q: &SimplexPoint, cfg: &SolveConfig) -> Result<SimplexPoint> {
    let obj = Honest { rule, q };
    Ok(multi_start(&obj, rule.n(), vec![], cfg)?.report)
}

/// Whether `p` is a best response to the beliefs it induces; for strictly
/// proper rules this is `‖f(p) − p‖ ≤ tol`.
pub fn is_performatively_stable<E: Environment + ?Sized>(
    _rule: &ScoringRule,
    f: &E,
    p: &SimplexPoint,
    tol: f64,
) -> bool {
    l2_distance(&f.eval(p), p).map(|d| d <= tol).unwrap_or(false)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityCheck {
    pub fixed_point_residual: f64,
    pub stable_by_fixed_point: bool,
    /// Distance from `p` to the numerical maximizer of `S(·, f(p))`.
    pub argmax_distance: f64,
    pub stable_by_argmax: bool,
}

/// Decides stability both through the fixed-point test and by maximizing
/// `S(·, f(p))` directly.
pub fn stability_cross_check<E: Environment + ?Sized>(
    rule: &ScoringRule,
    f: &E,
    p: &SimplexPoint,
    tol: f64,
) -> Result<StabilityCheck> {
    let q = f.eval(p);
    let residual = l2_distance(&q, p)?;
    let br = best_response(rule, &q, &SolveConfig::default())?;
    let argmax_distance = l2_distance(&br, p)?;
    Ok(StabilityCheck {
        fixed_point_residual: residual,
        stable_by_fixed_point: residual <= tol,
        argmax_distance,
        stable_by_argmax: argmax_distance <= tol + 1e-7,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleGameCheck {
    /// `max_x S(x, q) − S(p, q)`.
    pub predictor_gap: f64,
    /// `max_y S(y, f(p)) − S(q, f(p))`.
    pub oracle_gap: f64,
    pub is_equilibrium: bool,
}

/// Best-response gaps of both players of the oracle game at `(p, q)`.
pub fn oracle_game_check<E: Environment + ?Sized>(
    rule: &ScoringRule,
    f: &E,
    p: &SimplexPoint,
    q: &SimplexPoint,
    tol: f64,
) -> Result<OracleGameCheck> {
    let cfg = SolveConfig::default();
    let fp = f.eval(p);
    let br1 = best_response(rule, q, &cfg)?;
    let br2 = best_response(rule, &fp, &cfg)?;
    let s = |a: &SimplexPoint, b: &SimplexPoint| rule.expected_score(a, b).map(|x| x.to_f64());
    let predictor_gap = (s(&br1, q)? - s(p, q)?).max(0.0);
    let oracle_gap = (s(&br2, &fp)? - s(q, &fp)?).max(0.0);
    Ok(OracleGameCheck {
        predictor_gap,
        oracle_gap,
        is_equilibrium: predictor_gap <= tol && oracle_gap <= tol,
    })
}

/// Fixed points ordered by honest score `G(p)`, best first.
pub fn rank_fixed_points(rule: &ScoringRule, fps: &FixedPointSet) -> Result<Vec<(SimplexPoint, f64)>> {
    let mut ranked = fps
        .points
        .iter()
        .map(|p| Ok((p.clone(), rule.potential(p)?.to_f64())))
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| {
        let tie = (a.1 - b.1).abs() <= 1e-12 * a.1.abs().max(b.1.abs()).max(1.0);
        if tie {
            a.0.as_slice()
                .iter()
                .zip(b.0.as_slice())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        } else {
            b.1.total_cmp(&a.1)
        }
    });
    Ok(ranked)
}

/// Weighted traders scored against outcomes drawn from `f(Σ wₙ pₙ)`.
#[derive(Clone, Debug)]
pub struct MarketGame {
    pub rule: ScoringRule,
    pub f: EnvironmentMap,
    pub weights: Vec<f64>,
}

impl MarketGame {
    pub fn new(rule: ScoringRule, f: EnvironmentMap, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("a market needs at least one trader"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("weights must be non-negative"));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("weights sum to {s}, not 1")));
        }
        if rule.n() != f.n() {
            return Err(Error::invalid("rule and environment disagree on n"));
        }
        Ok(Self { rule, f, weights })
    }

    pub fn equal_weights(rule: ScoringRule, f: EnvironmentMap, traders: usize) -> Result<Self> {
        if traders == 0 {
            return Err(Error::invalid("a market needs at least one trader"));
        }
        let mut w = vec![1.0 / traders as f64; traders];
        let rest: f64 = w[1..].iter().sum();
        w[0] = 1.0 - rest;
        Self::new(rule, f, w)
    }

    pub fn market_prediction(&self, predictions: &[SimplexPoint]) -> SimplexPoint {
        let n = self.rule.n();
        let mut v = vec![0.0; n];
        for (w, p) in self.weights.iter().zip(predictions) {
            for (acc, x) in v.iter_mut().zip(p.as_slice()) {
                *acc += w * x;
            }
        }
        let s: f64 = v.iter().sum();
        SimplexPoint::new(v.into_iter().map(|x| x / s).collect()).expect("convex combination")
    }
}

/// The map `x ↦ f(w·x + c)` seen by one trader.
struct PlayerView<'a> {
    f: &'a EnvironmentMap,
    weight: f64,
    offset: Vec<f64>,
}

impl PlayerView<'_> {
    fn combine(&self, x: &SimplexPoint) -> SimplexPoint {
        let v: Vec<f64> = x
            .as_slice()
            .iter()
            .zip(&self.offset)
            .map(|(a, c)| self.weight * a + c)
            .collect();
        let s: f64 = v.iter().sum();
        SimplexPoint::new(v.into_iter().map(|x| x / s).collect()).expect("convex combination")
    }
}

impl Environment for PlayerView<'_> {
    fn n(&self) -> usize {
        self.f.n()
    }

    fn eval(&self, p: &SimplexPoint) -> SimplexPoint {
        self.f.eval(&self.combine(p))
    }

    fn jacobian(&self, p: &SimplexPoint) -> TangentMatrix {
        let j = self.f.jacobian(&self.combine(p));
        TangentMatrix::new(j.entries() * self.weight).expect("finite")
    }

    fn eval_p1(&self, x: f64) -> f64 {
        self.f.eval_p1(self.weight * x + self.offset[0])
    }
}

/// Order in which traders update within a round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MarketUpdate {
    Synchronous,
    RoundRobin,
}

#[derive(Clone, Debug)]
pub struct MarketConfig {
    pub solve: SolveConfig,
    pub max_rounds: usize,
    pub tol: f64,
    pub update: MarketUpdate,
    pub start: Option<SimplexPoint>,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self {
            solve: SolveConfig {
                restarts: 5,
                ..SolveConfig::default()
            },
            max_rounds: 500,
            tol: 1e-9,
            update: MarketUpdate::Synchronous,
            start: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarketEquilibrium {
    pub predictions: Vec<SimplexPoint>,
    pub market_prediction: SimplexPoint,
    pub per_player_br_gap: Vec<f64>,
    pub rounds: usize,
}

fn player_view<'a>(game: &'a MarketGame, profile: &[SimplexPoint], i: usize) -> PlayerView<'a> {
    let n = game.rule.n();
    let mut offset = vec![0.0; n];
    for (j, (w, p)) in game.weights.iter().zip(profile).enumerate() {
        if j != i {
            for (acc, x) in offset.iter_mut().zip(p.as_slice()) {
                *acc += w * x;
            }
        }
    }
    PlayerView {
        f: &game.f,
        weight: game.weights[i],
        offset,
    }
}

fn player_best_response(
    game: &MarketGame,
    profile: &[SimplexPoint],
    i: usize,
    cfg: &SolveConfig,
) -> Result<(SimplexPoint, f64)> {
    let view = player_view(game, profile, i);
    let r = performative_optimum(&game.rule, &view, cfg)?;
    Ok((r.report, r.objective))
}

/// Best-response dynamics until no trader moves by more than `cfg.tol`.
pub fn market_equilibrium(game: &MarketGame, cfg: &MarketConfig) -> Result<MarketEquilibrium> {
    let n = game.rule.n();
    let start = match &cfg.start {
        Some(p) => p.clone(),
        None => SimplexPoint::uniform(n)?,
    };
    let mut profile = vec![start; game.weights.len()];
    let mut moved = f64::INFINITY;
    for round in 1..=cfg.max_rounds {
        moved = 0.0;
        match cfg.update {
            MarketUpdate::Synchronous => {
                let next = (0..profile.len())
                    .map(|i| player_best_response(game, &profile, i, &cfg.solve).map(|r| r.0))
                    .collect::<Result<Vec<_>>>()?;
                for (a, b) in profile.iter().zip(&next) {
                    moved = moved.max(l2_distance(a, b)?);
                }
                profile = next;
            }
            MarketUpdate::RoundRobin => {
                for i in 0..profile.len() {
                    let (p, _) = player_best_response(game, &profile, i, &cfg.solve)?;
                    moved = moved.max(l2_distance(&p, &profile[i])?);
                    profile[i] = p;
                }
            }
        }
        if moved <= cfg.tol {
            let gaps = (0..profile.len())
                .map(|i| {
                    let (_, best) = player_best_response(game, &profile, i, &cfg.solve)?;
                    let view = player_view(game, &profile, i);
                    let now = performative_objective(&game.rule, &view, &profile[i])?;
                    Ok((best - now).max(0.0))
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(MarketEquilibrium {
                market_prediction: game.market_prediction(&profile),
                predictions: profile,
                per_player_br_gap: gaps,
                rounds: round,
            });
        }
    }
    Err(Error::IterationLimit {
        iterations: cfg.max_rounds,
        residual: moved,
        best: profile.into_iter().flat_map(|p| p.into_vec()).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerBoundCheck {
    pub weight: f64,
    /// `‖f(p̂) − pₙ‖`.
    pub lhs: f64,
    /// `wₙ‖Df(p̂)‖·‖g(pₙ)‖/γ_{pₙ}`.
    pub rhs: f64,
    pub ok: bool,
}

/// Evaluates both sides of the market-power bound for every trader.
pub fn market_power_bound_check(eq: &MarketEquilibrium, game: &MarketGame) -> Result<Vec<PowerBoundCheck>> {
    let q = game.f.eval(&eq.market_prediction);
    let op = tangent_operator_norm(&game.f.jacobian(&eq.market_prediction));
    eq.predictions
        .iter()
        .zip(&game.weights)
        .map(|(p, &w)| {
            let lhs = l2_distance(&q, p)?;
            let rhs = w * op * game.rule.gradient(p)?.norm() / game.rule.gamma_at(p)?;
            Ok(PowerBoundCheck {
                weight: w,
                lhs,
                rhs,
                ok: lhs <= rhs * (1.0 + 1e-6),
            })
        })
        .collect()
}

/// Cumulative realized regret against the expert reporting `f(P_t)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegretSeries {
    /// Entry `t` sums steps `0..=t`.
    pub cumulative_regret: Vec<f64>,
    /// `Σ ‖f(P_t) − P_t‖`.
    pub prediction_error_cumsum: Vec<f64>,
}

impl RegretSeries {
    pub fn average_regret(&self) -> f64 {
        match self.cumulative_regret.last() {
            Some(r) => r / self.cumulative_regret.len() as f64,
            None => 0.0,
        }
    }

    pub fn average_prediction_error(&self) -> f64 {
        match self.prediction_error_cumsum.last() {
            Some(r) => r / self.prediction_error_cumsum.len() as f64,
            None => 0.0,
        }
    }
}

pub fn regret_series<E: Environment + ?Sized>(
    trace: &crate::solvers::OnlineTrace,
    rule: &ScoringRule,
    f: &E,
) -> Result<RegretSeries> {
    let mut cumulative_regret = Vec::with_capacity(trace.len());
    let mut prediction_error_cumsum = Vec::with_capacity(trace.len());
    let (mut r, mut e) = (0.0, 0.0);
    for (p, &y) in trace.reports.iter().zip(&trace.outcomes) {
        let q = f.eval(p);
        r += rule.score(&q, y)?.to_f64() - rule.score(p, y)?.to_f64();
        e += l2_distance(&q, p)?;
        cumulative_regret.push(r);
        prediction_error_cumsum.push(e);
    }
    Ok(RegretSeries {
        cumulative_regret,
        prediction_error_cumsum,
    })
}

/// Reporting policies for regret experiments.
#[derive(Clone, Debug, PartialEq)]
pub enum Policy {
    /// Always report the best-ranked fixed point.
    FixedPoint,
    Constant(SimplexPoint),
    /// Stop-gradient ascent from the uniform point with the given step.
    RepeatedGradient { step: f64 },
    /// Stochastic gradient ascent from the uniform point.
    Sgd { schedule: LearningRate },
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fixedpoint" => Ok(Policy::FixedPoint),
            "rga" => Ok(Policy::RepeatedGradient { step: 0.5 }),
            "sgd" => Ok(Policy::Sgd {
                schedule: LearningRate::Harmonic(0.5),
            }),
            other => {
                let p1 = other
                    .strip_prefix("constant:p1=")
                    .ok_or_else(|| {
                        Error::invalid(format!(
                            "unknown policy '{other}' (expected fixedpoint, constant:p1=<f>, rga or sgd)"
                        ))
                    })?
                    .parse::<f64>()
                    .map_err(|e| Error::invalid(format!("bad p1 in '{other}': {e}")))?;
                Ok(Policy::Constant(SimplexPoint::binary(p1)?))
            }
        }
    }
}

/// Runs `policy` for `steps` rounds, drawing `Y_t ∼ f(P_t)`.
pub fn simulate_policy(
    rule: &ScoringRule,
    f: &EnvironmentMap,
    policy: &Policy,
    steps: usize,
    seed: u64,
) -> Result<crate::solvers::OnlineTrace> {
    let n = rule.n();
    let uniform = SimplexPoint::uniform(n)?;
    let path: Vec<SimplexPoint> = match policy {
        Policy::Sgd { schedule } => return online_sgd(rule, f, &uniform, *schedule, steps, seed),
        Policy::FixedPoint => {
            let fps = f.find_fixed_points(&FixedPointConfig::default())?;
            let best = rank_fixed_points(rule, &fps)?.remove(0).0;
            vec![best; steps + 1]
        }
        Policy::Constant(p) => {
            if p.n() != n {
                return Err(Error::invalid("policy point has the wrong dimension"));
            }
            vec![p.clone(); steps + 1]
        }
        Policy::RepeatedGradient { step } => {
            let run = repeated_gradient_ascent(rule, f, &uniform, *step, steps, 0.0)?;
            let mut t = run.trajectory.expect("recorded");
            let last = t.last().expect("non-empty").clone();
            t.resize(steps + 1, last);
            t
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = crate::solvers::OnlineTrace {
        reports: Vec::with_capacity(steps),
        outcomes: Vec::with_capacity(steps),
        scores: Vec::with_capacity(steps),
        final_report: path[steps].clone(),
        seed,
    };
    for p in path.into_iter().take(steps) {
        let y = sample_outcome(&f.eval(&p), &mut rng);
        trace.scores.push(rule.score(&p, y)?.to_f64());
        trace.outcomes.push(y);
        trace.reports.push(p);
    }
    Ok(trace)
}
