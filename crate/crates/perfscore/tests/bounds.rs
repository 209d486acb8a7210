use approx::assert_abs_diff_eq;
use perfscore::prelude::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn quadratic_bound_constants() {
    assert_abs_diff_eq!(quadratic_inaccuracy_bound(2, 1.0), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
    assert_abs_diff_eq!(quadratic_inaccuracy_bound(5, 0.5), 0.5 * 0.8f64.sqrt(), epsilon = 1e-15);
    assert_abs_diff_eq!(quadratic_fixed_point_distance_bound(2, 0.5).unwrap(), 2f64.sqrt() / 2.0, epsilon = 1e-15);
    assert!(matches!(quadratic_fixed_point_distance_bound(2, 1.0), Err(Error::Domain(_))));
    let g = GlobalConstants::for_rule(&ScoringRule::quadratic(3).unwrap(), 0.4).unwrap();
    assert_abs_diff_eq!(g.inaccuracy_bound(), quadratic_inaccuracy_bound(3, 0.4), epsilon = 1e-15);
    assert!(GlobalConstants::for_rule(&ScoringRule::logarithmic(2).unwrap(), 0.4).is_none());
}

#[test]
fn log_binary_constant() {
    let (c, x) = log_binary_bound(1.0);
    assert_abs_diff_eq!(c, 0.3166, epsilon = 1e-4);
    assert_abs_diff_eq!(x, 0.8240, epsilon = 1e-3);
    // The maximizer satisfies (1−2x)·log(x/(1−x)) + 1 = 0.
    assert_abs_diff_eq!((1.0 - 2.0 * x) * (x / (1.0 - x)).ln() + 1.0, 0.0, epsilon = 1e-6);
    assert_abs_diff_eq!(log_binary_bound(0.5).0, 0.5 * c, epsilon = 1e-15);
}

#[test]
fn exponential_rule_k_is_tight_in_the_ratio() {
    let k = exponential_rule_k(0.5, 0.1, DesignTarget::Inaccuracy).unwrap();
    assert_abs_diff_eq!(k, 2f64.sqrt() * 5.0, epsilon = 1e-12);
    let kf = exponential_rule_k(0.5, 0.1, DesignTarget::FixedPointDistance).unwrap();
    assert_abs_diff_eq!(kf, 2f64.sqrt() * 10.0, epsilon = 1e-12);
    let rule = design_exponential_rule(0.5, 0.1, DesignTarget::Inaccuracy).unwrap();
    assert_abs_diff_eq!(0.5 * gradient_curvature_ratio(&rule).unwrap(), 0.1, epsilon = 1e-12);
    // Half the designed K only certifies twice the target.
    let half = ScoringRule::exponential_binary(k / 2.0).unwrap();
    assert_abs_diff_eq!(0.5 * gradient_curvature_ratio(&half).unwrap(), 0.2, epsilon = 1e-12);
}

#[test]
fn exponential_rule_k_rejects_bad_inputs() {
    assert!(exponential_rule_k(0.0, 0.1, DesignTarget::Inaccuracy).is_err());
    assert!(exponential_rule_k(0.5, 0.0, DesignTarget::Inaccuracy).is_err());
    assert!(exponential_rule_k(1.0, 0.1, DesignTarget::FixedPointDistance).is_err());
    assert!(exponential_rule_k(0.5, 1e6, DesignTarget::Inaccuracy).is_err());
    assert_eq!("fixed-point-distance".parse::<DesignTarget>().unwrap(), DesignTarget::FixedPointDistance);
    assert!("nope".parse::<DesignTarget>().is_err());
}

#[test]
fn fixed_point_bound_needs_a_contraction() {
    let rule = ScoringRule::quadratic(2).unwrap();
    let f = EnvironmentMap::affine_binary(0.5, 1.0).unwrap();
    let p = SimplexPoint::binary(0.3).unwrap();
    assert!(matches!(fixed_point_distance_bound(&rule, &f, &p, 1.0), Err(Error::Domain(_))));
    assert!(fixed_point_distance_bound(&rule, &f, &p, 0.99).is_ok());
}

#[test]
fn stake_profile_of_quadratic_rule_is_flat() {
    let rule = ScoringRule::quadratic(2).unwrap();
    let sp = stake_profile(&rule, 1.0, 0.05, 0.2, 0.7, 0.01).unwrap();
    let delta = 0.025;
    assert_abs_diff_eq!(sp.delta, delta, epsilon = 1e-15);
    for (_, cost) in &sp.grid {
        assert_abs_diff_eq!(*cost, 2.0 * (4.0 * delta).powi(2), epsilon = 1e-12);
    }
    assert_abs_diff_eq!(sp.sup_inf_ratio, 1.0, epsilon = 1e-9);
    assert!(!sp.premise_certified);
    assert!(stake_profile(&rule, 1.0, 0.1, 0.2, 0.7, 0.01).is_err());
}

#[test]
fn designed_exponential_rule_meets_stake_lower_bound() {
    let (lf, eps) = (1.0, 0.02);
    let rule = design_exponential_rule(lf, eps, DesignTarget::Inaccuracy).unwrap();
    let sp = stake_profile(&rule, lf, eps, 0.1, 0.9, 0.01).unwrap();
    assert!(sp.premise_certified);
    assert!(sp.ratio_meets_lower_bound, "{} < {}", sp.sup_inf_ratio, sp.lower_bound);
}

proptest! {
    #[test]
    fn optimal_reports_respect_the_inaccuracy_bounds(s in 0.0f64..=1.0, alpha in 0.0f64..0.95) {
        let f = EnvironmentMap::affine_binary(s, alpha).unwrap();
        let cfg = SolveConfig { restarts: 3, ..SolveConfig::default() };
        for rule in [ScoringRule::quadratic(2).unwrap(), ScoringRule::logarithmic(2).unwrap()] {
            let sol = performative_optimum(&rule, &f, &cfg).unwrap();
            let inacc = l2_distance(&f.eval(&sol.report), &sol.report).unwrap();
            let global = alpha * gradient_curvature_ratio(&rule).unwrap();
            prop_assert!(inacc <= global * (1.0 + 1e-6) + 1e-9);
            if sol.report.is_interior() {
                let b = inaccuracy_bound(&rule, &f, &sol.report, None).unwrap();
                prop_assert!(inacc <= b.pointwise_inaccuracy_bound * (1.0 + 1e-6) + 1e-9);
            }
        }
    }

    #[test]
    fn optimal_reports_respect_the_fixed_point_bound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = EnvironmentMap::random_linear(3, &mut rng);
        let rule = ScoringRule::quadratic(3).unwrap();
        let lf = f.lipschitz_estimate(1, 0);
        prop_assume!(lf < 0.95);
        let sol = performative_optimum(&rule, &f, &SolveConfig::default()).unwrap();
        let fp = f.find_fixed_points(&FixedPointConfig::default()).unwrap().points.remove(0);
        let d = l2_distance(&sol.report, &fp).unwrap();
        prop_assert!(d <= quadratic_fixed_point_distance_bound(3, lf).unwrap() * (1.0 + 1e-6) + 1e-9);
        let pw = fixed_point_distance_bound(&rule, &f, &sol.report, lf).unwrap();
        prop_assert!(d <= pw * (1.0 + 1e-6) + 1e-9);
    }
}
