use hpcavity::coupled_modes::{build_model, scattering_matrix, transmission};
use nalgebra::Matrix2;
use proptest::prelude::*;

proptest! {
    #[test]
    fn unitary_and_exact_points(ell in 4.6f64..5.4, gamma in 0.05f64..1.5, w in -2.0f64..2.0) {
        let th = 2.0 * std::f64::consts::PI * ell;
        prop_assume!(th.sin().abs() > 1e-3 && th.cos().abs() > 1e-2);
        let m = build_model(ell, gamma).unwrap();
        let s = scattering_matrix(&m, w).unwrap();
        let e = s * s.adjoint() - Matrix2::identity();
        prop_assert!(e.iter().all(|z| z.norm() < 1e-12));
        prop_assert!(transmission(&m, 0.0).unwrap().norm() < 1e-10);
        prop_assert!((transmission(&m, m.omega_c).unwrap().norm_sqr() - 1.0).abs() < 1e-10);
    }
}
