use eitmono_core::io::{matrix_from_bytes, matrix_to_bytes};
use eitmono_core::{
    background_nd, frechet_ball, make_noise, nd_ball, operator_norm, Ball, HColumnCache, Method, NoiseSpec,
    ReconConfig, Reconstructor, TruncationPlan,
};
use proptest::prelude::*;

fn plan() -> TruncationPlan {
    TruncationPlan::new(8, 120).unwrap()
}

fn ball() -> impl Strategy<Value = Ball> {
    (0.0..0.7f64, 0.0..std::f64::consts::TAU, 0.05..0.25f64)
        .prop_map(|(c, phi, r)| Ball::from_xy(c * phi.cos(), c * phi.sin(), r.min(0.95 - c)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn assembled_matrices_are_structured(b in ball(), beta in 0.1..9.0f64) {
        let a = nd_ball(&b, beta, &plan()).unwrap().matrix;
        let d = frechet_ball(&b, 8).unwrap();
        for m in [&a, &d] {
            prop_assert!(m.hermitian_defect() <= 1e-12);
            prop_assert!(m.centrohermitian_defect() <= 1e-12);
            prop_assert!(m.off_block_magnitude() <= 1e-12);
        }
        // A positive contrast lowers the ND map: R(1) − R(γ) ⪰ 0 and R′(1)χ_B ⪯ 0.
        prop_assert!((&background_nd(8) - &a).min_eigenvalue() > -1e-14);
        prop_assert!(d.scaled(-1.0).min_eigenvalue() > -1e-14);
    }

    #[test]
    fn shrinking_a_ball_raises_the_nd_matrix(b in ball(), s in 0.3..0.95f64) {
        let inner = Ball::new(b.center, b.radius * s).unwrap();
        let outer = nd_ball(&b, 4.0, &plan()).unwrap().matrix;
        let smaller = nd_ball(&inner, 4.0, &plan()).unwrap().matrix;
        prop_assert!((&smaller - &outer).min_eigenvalue() > -1e-14);
    }

    #[test]
    fn noise_is_calibrated(b in ball(), delta in 1e-8..1.0f64, seed in any::<u64>()) {
        let a = nd_ball(&b, 4.0, &plan()).unwrap().matrix;
        let e = make_noise(&a, &NoiseSpec::new(delta, seed).unwrap()).unwrap();
        prop_assert!((operator_norm(&e).unwrap() - delta).abs() <= 1e-12 * delta.max(1.0));
        prop_assert!(e.hermitian_defect() <= 1e-12 * delta);
        prop_assert!(e.centrohermitian_defect() <= 1e-12 * delta);
        let back = matrix_from_bytes(&matrix_to_bytes(&e)).unwrap();
        prop_assert_eq!(back.entries(), e.entries());
    }
}

#[test]
fn end_to_end_reconstruction_of_a_ball() {
    let truth = Ball::from_xy(-0.2, 0.3, 0.3).unwrap();
    let plan = TruncationPlan::new(16, 200).unwrap();
    let data = nd_ball(&truth, 4.0, &plan).unwrap().matrix;
    let cache = HColumnCache::in_memory();
    for method in Method::ALL {
        let config = ReconConfig {
            method,
            hex_radius: 0.05,
            mu: 1.01,
            ..ReconConfig::default()
        };
        let result = Reconstructor::new(&config, &cache).unwrap().run(&data).unwrap();
        assert!(result.metadata.alpha > 0.0);
        let accepted: Vec<_> = result.cells.iter().filter(|c| c.accepted).collect();
        assert!(!accepted.is_empty(), "{method}");
        // The centroid of the accepted cells lies inside the inclusion.
        let n = accepted.len() as f64;
        let cx = accepted.iter().map(|c| c.x).sum::<f64>() / n;
        let cy = accepted.iter().map(|c| c.y).sum::<f64>() / n;
        assert!((cx + 0.2).hypot(cy - 0.3) < 0.3, "{method}: ({cx}, {cy})");
    }
}
