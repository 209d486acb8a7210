use approx::assert_abs_diff_eq;
use perfscore::prelude::*;
use proptest::prelude::*;

fn raw_vec() -> impl Strategy<Value = Vec<f64>> {
    (2usize..7).prop_flat_map(|n| prop::collection::vec(-3.0f64..3.0, n))
}

fn simplex_point() -> impl Strategy<Value = SimplexPoint> {
    (2usize..7, any::<u64>()).prop_map(|(n, seed)| {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        SimplexPoint::sample_uniform(n, &mut rng)
    })
}

proptest! {
    #[test]
    fn projection_lands_in_simplex_and_is_idempotent(v in raw_vec()) {
        let p = project_to_simplex(&v).unwrap();
        let s: f64 = p.as_slice().iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
        prop_assert!(p.as_slice().iter().all(|&x| x >= 0.0));
        let again = project_to_simplex(p.as_slice()).unwrap();
        prop_assert!(l2_distance(&p, &again).unwrap() < 1e-12);
    }

    #[test]
    fn projection_is_the_closest_point(v in raw_vec(), seed in any::<u64>()) {
        use rand::SeedableRng;
        let p = project_to_simplex(&v).unwrap();
        let d = |q: &[f64]| v.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let q = SimplexPoint::sample_uniform(v.len(), &mut rng);
            prop_assert!(d(p.as_slice()) <= d(q.as_slice()) + 1e-12);
        }
    }

    #[test]
    fn shrunk_projection_respects_margin(v in raw_vec()) {
        let eps = 1e-3;
        let p = project_to_shrunk_simplex(&v, eps).unwrap();
        prop_assert!(p.as_slice().iter().all(|&x| x >= eps - 1e-15));
        prop_assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn differences_lie_in_the_tangent_space(p in simplex_point(), seed in any::<u64>()) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let q = SimplexPoint::sample_uniform(p.n(), &mut rng);
        let d = q.diff(&p).unwrap();
        prop_assert!(d.as_slice().iter().sum::<f64>().abs() < 1e-12);
        prop_assert!((d.norm() - l2_distance(&p, &q).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn serde_round_trip(p in simplex_point()) {
        let s = serde_json::to_string(&p).unwrap();
        let back: SimplexPoint = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(p, back);
    }
}

#[test]
fn constructor_rejects_bad_points() {
    assert!(SimplexPoint::new(vec![0.5]).is_err());
    assert!(SimplexPoint::new(vec![0.5, 0.6]).is_err());
    assert!(SimplexPoint::new(vec![-0.1, 1.1]).is_err());
    assert!(SimplexPoint::new(vec![f64::NAN, 1.0]).is_err());
    assert!(SimplexPoint::binary(1.5).is_err());
    assert!(SimplexPoint::vertex(3, 3).is_err());
    assert!(serde_json::from_str::<SimplexPoint>("[0.2, 0.2]").is_err());
}

#[test]
fn tangent_vectors_must_sum_to_zero() {
    assert!(TangentVector::new(vec![1.0, -1.0]).is_ok());
    assert!(TangentVector::new(vec![1.0, 1.0]).is_err());
}

#[test]
fn operator_norm_and_curvature_of_scaled_projector() {
    for n in 2..6 {
        let m = TangentMatrix::scaled_projector(n, 0.7);
        assert_abs_diff_eq!(tangent_operator_norm(&m), 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(tangent_min_eigenvalue(&m), 0.7, epsilon = 1e-12);
    }
}

#[test]
fn operator_norm_ignores_the_normal_direction() {
    // A column-stochastic matrix maps 1 to itself; only its action on T counts.
    let a = nalgebra::DMatrix::from_row_slice(2, 2, &[0.6, 0.3, 0.4, 0.7]);
    let m = TangentMatrix::new(a).unwrap();
    assert_abs_diff_eq!(tangent_operator_norm(&m), 0.3, epsilon = 1e-12);
}

#[test]
fn logit_distance_is_defined_inside_only() {
    let p = SimplexPoint::binary(0.5).unwrap();
    let q = SimplexPoint::binary(0.75).unwrap();
    assert_abs_diff_eq!(logit_distance(&p, &q).unwrap(), 3f64.ln(), epsilon = 1e-12);
    let edge = SimplexPoint::binary(1.0).unwrap();
    assert!(matches!(logit_distance(&p, &edge), Err(Error::Domain(_))));
}
