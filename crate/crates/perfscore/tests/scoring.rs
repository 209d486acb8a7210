use approx::assert_abs_diff_eq;
use perfscore::prelude::*;
use perfscore::scoring::weighted_sum;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rules() -> Vec<ScoringRule> {
    vec![
        ScoringRule::quadratic(2).unwrap(),
        ScoringRule::quadratic(4).unwrap(),
        ScoringRule::logarithmic(2).unwrap(),
        ScoringRule::logarithmic(3).unwrap(),
        ScoringRule::exponential_binary(3.0).unwrap(),
    ]
}

fn interior(n: usize, seed: u64) -> SimplexPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = SimplexPoint::sample_uniform(n, &mut rng);
    let v: Vec<f64> = p.as_slice().iter().map(|x| 0.9 * x + 0.1 / n as f64).collect();
    SimplexPoint::new(v).unwrap()
}

proptest! {
    #[test]
    fn honest_reporting_maximizes_expected_score(seed in any::<u64>(), which in 0usize..5) {
        let rule = &rules()[which];
        let p = interior(rule.n(), seed);
        let q = interior(rule.n(), seed.wrapping_add(1));
        let honest = rule.expected_score(&q, &q).unwrap().to_f64();
        let other = rule.expected_score(&p, &q).unwrap().to_f64();
        prop_assert!(other <= honest + 1e-12);
    }

    #[test]
    fn score_is_the_tangent_plane_of_the_potential(seed in any::<u64>(), which in 0usize..5) {
        let rule = &rules()[which];
        let p = interior(rule.n(), seed);
        let q = interior(rule.n(), seed ^ 0x55);
        let g = rule.gradient(&p).unwrap();
        let lin = rule.potential(&p).unwrap().to_f64() + g.dot(&q.diff(&p).unwrap());
        prop_assert!((rule.expected_score(&p, &q).unwrap().to_f64() - lin).abs() < 1e-9 * (1.0 + lin.abs()));
    }

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>(), which in 0usize..5) {
        let rule = &rules()[which];
        let n = rule.n();
        let p = interior(n, seed);
        let g = rule.gradient(&p).unwrap();
        let h = 1e-6;
        for i in 0..n {
            for j in 0..n {
                if i == j { continue; }
                let mut a = p.as_slice().to_vec();
                let mut b = a.clone();
                a[i] += h; a[j] -= h;
                b[i] -= h; b[j] += h;
                let ga = rule.potential(&SimplexPoint::new(a).unwrap()).unwrap().to_f64();
                let gb = rule.potential(&SimplexPoint::new(b).unwrap()).unwrap().to_f64();
                let fd = (ga - gb) / (2.0 * h);
                let an = g.as_slice()[i] - g.as_slice()[j];
                prop_assert!((fd - an).abs() < 1e-5 * (1.0 + an.abs()), "fd {} analytic {}", fd, an);
            }
        }
    }
}

#[test]
fn curvature_constants() {
    let q = ScoringRule::quadratic(5).unwrap();
    assert_abs_diff_eq!(q.gamma_at(&SimplexPoint::uniform(5).unwrap()).unwrap(), 2.0, epsilon = 1e-12);
    let log = ScoringRule::logarithmic(2).unwrap();
    for x in [0.1, 0.5, 0.8] {
        let p = SimplexPoint::binary(x).unwrap();
        assert_abs_diff_eq!(log.gamma_at(&p).unwrap(), 1.0 / (2.0 * x * (1.0 - x)), epsilon = 1e-9);
    }
    let e = ScoringRule::exponential_binary(2.0).unwrap();
    let p = SimplexPoint::binary(0.3).unwrap();
    assert_abs_diff_eq!(e.gamma_at(&p).unwrap(), 2.0 * (0.6f64).exp(), epsilon = 1e-12);
    assert_abs_diff_eq!(e.gradient(&p).unwrap().norm() / e.gamma_at(&p).unwrap(), 2f64.sqrt() / 2.0, epsilon = 1e-12);
}

#[test]
fn log_rule_at_the_boundary() {
    let log = ScoringRule::logarithmic(2).unwrap();
    let edge = SimplexPoint::binary(1.0).unwrap();
    assert_eq!(log.score(&edge, 1).unwrap(), ExtReal::NegInfinity);
    assert_eq!(log.score(&edge, 0).unwrap(), ExtReal::Finite(0.0));
    // Zero-probability outcomes contribute nothing.
    assert_eq!(log.expected_score(&edge, &edge).unwrap(), ExtReal::Finite(0.0));
    let half = SimplexPoint::binary(0.5).unwrap();
    assert_eq!(log.expected_score(&edge, &half).unwrap(), ExtReal::NegInfinity);
    assert!(matches!(log.gradient(&edge), Err(Error::Domain(_))));
    assert!(matches!(log.subgradient(&edge).unwrap(), Subgradient::Unbounded(_)));
}

#[test]
fn extended_reals_order_and_weighting() {
    assert!(ExtReal::NegInfinity < ExtReal::Finite(-1e300));
    assert_eq!(weighted_sum(&[0.0, 1.0], &[ExtReal::NegInfinity, ExtReal::Finite(2.0)]), ExtReal::Finite(2.0));
    assert_eq!(weighted_sum(&[0.5, 0.5], &[ExtReal::NegInfinity, ExtReal::Finite(2.0)]), ExtReal::NegInfinity);
}

#[test]
fn propriety_check_on_shipped_rules() {
    for rule in rules() {
        let r = rule.check_propriety(2000, 3).unwrap();
        assert!(r.max_violation <= 1e-12, "{rule}: {}", r.max_violation);
        assert!(r.strictly_proper_witnessed);
    }
}

#[test]
fn rule_grammar() {
    assert_eq!("quadratic".parse::<RuleKind>().unwrap(), RuleKind::Quadratic);
    assert_eq!("log".parse::<RuleKind>().unwrap(), RuleKind::Logarithmic);
    assert_eq!("exp:K=2.5".parse::<RuleKind>().unwrap(), RuleKind::ExponentialBinary { k: 2.5 });
    assert!("exp:K=x".parse::<RuleKind>().is_err());
    assert!("brier".parse::<RuleKind>().is_err());
    assert!(ScoringRule::new(RuleKind::ExponentialBinary { k: 2.0 }, 3).is_err());
    assert!(ScoringRule::exponential_binary(0.0).is_err());
    assert!(ScoringRule::quadratic(1).is_err());
}

#[test]
fn score_rejects_bad_outcomes() {
    let q = ScoringRule::quadratic(3).unwrap();
    assert!(q.score(&SimplexPoint::uniform(3).unwrap(), 3).is_err());
    assert!(q.score(&SimplexPoint::uniform(2).unwrap(), 0).is_err());
}
