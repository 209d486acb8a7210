use std::io::Write;

use approx::assert_abs_diff_eq;
use perfscore::prelude::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn bank_run_has_three_fixed_points() {
    let fps = EnvironmentMap::bank_run()
        .find_fixed_points(&FixedPointConfig::default())
        .unwrap();
    let xs: Vec<f64> = fps.points.iter().map(|p| p.p1()).collect();
    assert_eq!(xs.len(), 3);
    for (x, want) in xs.iter().zip([0.1, 0.6, 0.9]) {
        assert_abs_diff_eq!(*x, want, epsilon = 1e-10);
    }
    assert_eq!(fps.method, FixedPointMethod::SignScan);
}

#[test]
fn bank_run_values() {
    let f = EnvironmentMap::bank_run();
    assert_abs_diff_eq!(f.eval_p1(0.6), 0.6, epsilon = 1e-15);
    assert_abs_diff_eq!(f.eval_p1(0.0), 0.081, epsilon = 1e-15);
    assert_abs_diff_eq!(f.eval_p1(1.0), 0.946, epsilon = 1e-15);
}

#[test]
fn affine_map_validates_containment() {
    assert!(EnvironmentMap::affine_binary(0.5, 0.9).is_ok());
    assert!(EnvironmentMap::affine_binary(0.5, -1.0).is_ok());
    assert!(EnvironmentMap::affine_binary(0.1, -0.5).is_err());
    assert!(EnvironmentMap::affine_binary(0.5, 1.5).is_err());
}

#[test]
fn affine_fixed_point_is_found_by_contraction() {
    let f = EnvironmentMap::affine_binary(0.3, 0.5).unwrap();
    let fps = f.find_fixed_points(&FixedPointConfig::default()).unwrap();
    assert!(fps.unique);
    assert_abs_diff_eq!(fps.points[0].p1(), 0.3, epsilon = 1e-10);
}

#[test]
fn identity_map_is_degenerate() {
    let f = EnvironmentMap::affine_binary(0.5, 1.0).unwrap();
    assert!(f.is_identity());
    let fps = f.find_fixed_points(&FixedPointConfig::default()).unwrap();
    assert_eq!(fps.method, FixedPointMethod::Identity);
    assert!(!fps.unique);
}

#[test]
fn uniform_columns_map_everything_to_uniform() {
    let a = nalgebra::DMatrix::from_element(4, 4, 0.25);
    let f = EnvironmentMap::linear(a).unwrap();
    let fps = f.find_fixed_points(&FixedPointConfig::default()).unwrap();
    assert_eq!(fps.method, FixedPointMethod::Eigen);
    let u = SimplexPoint::uniform(4).unwrap();
    assert!(l2_distance(&fps.points[0], &u).unwrap() < 1e-12);
    assert_abs_diff_eq!(f.lipschitz_estimate(0, 0), 0.0, epsilon = 1e-12);
}

#[test]
fn linear_map_rejects_non_stochastic_columns() {
    let a = nalgebra::DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.6, 0.5]);
    assert!(EnvironmentMap::linear(a).is_err());
}

proptest! {
    #[test]
    fn perron_vector_is_a_fixed_point(seed in any::<u64>(), n in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = EnvironmentMap::random_linear(n, &mut rng);
        let fps = f.find_fixed_points(&FixedPointConfig::default()).unwrap();
        let p = &fps.points[0];
        prop_assert!(l2_distance(&f.eval(p), p).unwrap() < 1e-10);
    }

    #[test]
    fn analytic_jacobians_match_finite_differences(seed in any::<u64>(), x in 0.05f64..0.95) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let maps = vec![
            EnvironmentMap::random_linear(3, &mut rng),
            EnvironmentMap::shrink_to(SimplexPoint::sample_uniform(3, &mut rng), 0.4).unwrap(),
        ];
        let p = SimplexPoint::sample_uniform(3, &mut rng);
        let q = SimplexPoint::new(p.as_slice().iter().map(|v| 0.8 * v + 0.2 / 3.0).collect()).unwrap();
        for f in &maps {
            let a = f.jacobian(&q).restricted();
            let fd = finite_difference_jacobian(f, &q).restricted();
            prop_assert!((a - fd).norm() < 1e-6);
        }
        let bank = EnvironmentMap::bank_run();
        let b = SimplexPoint::binary(x).unwrap();
        let a = bank.jacobian(&b).restricted();
        let fd = finite_difference_jacobian(&bank, &b).restricted();
        prop_assert!((a - fd).norm() < 1e-6);
    }
}

#[test]
fn ramp_construction() {
    let f = EnvironmentMap::ramp_binary(0.1, 0.01).unwrap();
    let fps = f.find_fixed_points(&FixedPointConfig::default()).unwrap();
    assert_eq!(fps.points.len(), 1);
    assert_abs_diff_eq!(fps.points[0].p1(), 0.9, epsilon = 1e-9);
    assert!(!f.is_smooth_at(&SimplexPoint::binary(0.9).unwrap()));
    assert_abs_diff_eq!(f.lipschitz_estimate(0, 0), 0.99, epsilon = 1e-15);
    assert!(EnvironmentMap::ramp_binary(0.6, 0.01).is_err());
}

#[test]
fn env_grammar_round_trip() {
    for s in ["affine:p1=0.3,alpha=0.5", "bankrun", "ramp:zeta=0.1,eps=0.01"] {
        let f = s.parse::<EnvSpec>().unwrap().build().unwrap();
        assert_eq!(f.to_string(), s);
    }
    assert_eq!(
        "linear:seed=3,n=4".parse::<EnvSpec>().unwrap(),
        EnvSpec::LinearSeed { seed: 3, n: 4 }
    );
    for bad in ["affine:p1=0.3", "affine:p1=0.3,alpha=0.5,beta=1", "linear:seed=x", "cubic"] {
        assert!(matches!(bad.parse::<EnvSpec>(), Err(Error::InvalidArgument(_))), "{bad}");
    }
    let a = "linear:seed=9".parse::<EnvSpec>().unwrap().build().unwrap();
    let b = "linear:seed=9".parse::<EnvSpec>().unwrap().build().unwrap();
    assert_eq!(a.to_string(), b.to_string());
}

#[test]
fn linear_from_csv_reads_and_reports_io_errors() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "0.5, 0.2\n0.5, 0.8").unwrap();
    let f = EnvironmentMap::linear_from_csv(file.path()).unwrap();
    assert_eq!(f.n(), 2);
    let missing = std::path::Path::new("/nonexistent/dir/a.csv");
    match EnvironmentMap::linear_from_csv(missing) {
        Err(Error::Io { path, .. }) => assert_eq!(path, missing),
        other => panic!("expected an I/O error, got {other:?}"),
    }
}
