use approx::assert_abs_diff_eq;
use perfscore::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn stability_coincides_with_fixed_points() {
    let rule = ScoringRule::quadratic(2).unwrap();
    let f = EnvironmentMap::bank_run();
    for x in [0.1, 0.6, 0.9] {
        let p = SimplexPoint::binary(x).unwrap();
        let c = stability_cross_check(&rule, &f, &p, 1e-9).unwrap();
        assert!(c.stable_by_fixed_point && c.stable_by_argmax, "{x}: {c:?}");
        assert!(is_performatively_stable(&rule, &f, &p, 1e-9));
    }
    for x in [0.3, 0.75] {
        let p = SimplexPoint::binary(x).unwrap();
        let c = stability_cross_check(&rule, &f, &p, 1e-9).unwrap();
        assert!(!c.stable_by_fixed_point && !c.stable_by_argmax);
    }
}

#[test]
fn oracle_game_equilibria_are_fixed_point_pairs() {
    let rule = ScoringRule::logarithmic(3).unwrap();
    let f = EnvironmentMap::random_linear(3, &mut ChaCha8Rng::seed_from_u64(3));
    let fp = f.find_fixed_points(&FixedPointConfig::default()).unwrap().points.remove(0);
    assert!(oracle_game_check(&rule, &f, &fp, &fp, 1e-8).unwrap().is_equilibrium);
    let off = SimplexPoint::uniform(3).unwrap();
    let c = oracle_game_check(&rule, &f, &off, &off, 1e-8).unwrap();
    assert!(!c.is_equilibrium);
}

#[test]
fn bank_run_fixed_points_rank_by_potential() {
    let rule = ScoringRule::quadratic(2).unwrap();
    let fps = EnvironmentMap::bank_run().find_fixed_points(&FixedPointConfig::default()).unwrap();
    let ranked = rank_fixed_points(&rule, &fps).unwrap();
    // G(0.1) = G(0.9), so the smaller report comes first.
    assert_abs_diff_eq!(ranked[0].0.p1(), 0.1, epsilon = 1e-9);
    assert_abs_diff_eq!(ranked[1].0.p1(), 0.9, epsilon = 1e-9);
    assert_abs_diff_eq!(ranked[2].0.p1(), 0.6, epsilon = 1e-9);
}

fn symmetric_equilibrium(p_star: f64, alpha: f64, traders: usize) -> f64 {
    let w = 1.0 / traders as f64;
    let a = p_star * (1.0 - alpha);
    (a - alpha * w / 2.0) / (1.0 - alpha - alpha * w)
}

#[test]
fn market_matches_analytic_equilibrium() {
    let rule = ScoringRule::quadratic(2).unwrap();
    let f = EnvironmentMap::affine_binary(0.7, 0.5).unwrap();
    for traders in [2, 5] {
        let game = MarketGame::equal_weights(rule, f.clone(), traders).unwrap();
        let eq = market_equilibrium(&game, &MarketConfig::default()).unwrap();
        let want = symmetric_equilibrium(0.7, 0.5, traders);
        for p in &eq.predictions {
            assert_abs_diff_eq!(p.p1(), want, epsilon = 1e-6);
        }
        assert!(eq.per_player_br_gap.iter().all(|g| *g < 1e-8));
        let checks = market_power_bound_check(&eq, &game).unwrap();
        assert!(checks.iter().all(|c| c.ok));
    }
}

#[test]
fn market_rejects_bad_weights() {
    let rule = ScoringRule::quadratic(2).unwrap();
    let f = EnvironmentMap::affine_binary(0.7, 0.5).unwrap();
    assert!(MarketGame::new(rule, f.clone(), vec![0.5, 0.6]).is_err());
    assert!(MarketGame::new(rule, f.clone(), vec![1.5, -0.5]).is_err());
    assert!(MarketGame::new(rule, f, vec![]).is_err());
}

#[test]
fn regret_of_fixed_point_reporting_vanishes() {
    let rule = ScoringRule::quadratic(2).unwrap();
    let f = EnvironmentMap::affine_binary(0.7, 0.5).unwrap();
    let trace = simulate_policy(&rule, &f, &Policy::FixedPoint, 1000, 3).unwrap();
    let r = regret_series(&trace, &rule, &f).unwrap();
    assert_eq!(r.cumulative_regret.len(), 1000);
    assert!(r.average_regret().abs() < 1e-12);
    assert!(r.average_prediction_error() < 1e-9);
}

#[test]
fn regret_of_a_constant_misreport_matches_expectation() {
    let rule = ScoringRule::quadratic(2).unwrap();
    let f = EnvironmentMap::affine_binary(0.7, 0.5).unwrap();
    let p = SimplexPoint::binary(0.3).unwrap();
    let trace = simulate_policy(&rule, &f, &Policy::Constant(p.clone()), 200_000, 5).unwrap();
    let r = regret_series(&trace, &rule, &f).unwrap();
    let q = f.eval(&p);
    let expected = rule.expected_score(&q, &q).unwrap().to_f64() - rule.expected_score(&p, &q).unwrap().to_f64();
    assert!((r.average_regret() - expected).abs() < 0.02 * expected.max(0.01));
}

#[test]
fn policy_grammar() {
    assert_eq!("fixedpoint".parse::<Policy>().unwrap(), Policy::FixedPoint);
    assert_eq!(
        "constant:p1=0.25".parse::<Policy>().unwrap(),
        Policy::Constant(SimplexPoint::binary(0.25).unwrap())
    );
    assert!(matches!("rga".parse::<Policy>().unwrap(), Policy::RepeatedGradient { .. }));
    assert!(matches!("sgd".parse::<Policy>().unwrap(), Policy::Sgd { .. }));
    assert!("constant:p1=2".parse::<Policy>().is_err());
    assert!("greedy".parse::<Policy>().is_err());
}

#[test]
fn simulated_policies_are_seed_deterministic() {
    let rule = ScoringRule::quadratic(2).unwrap();
    let f = EnvironmentMap::affine_binary(0.7, 0.5).unwrap();
    for policy in ["rga", "sgd", "fixedpoint"] {
        let pol: Policy = policy.parse().unwrap();
        let a = simulate_policy(&rule, &f, &pol, 500, 9).unwrap();
        let b = simulate_policy(&rule, &f, &pol, 500, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 500);
    }
}
