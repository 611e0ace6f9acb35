use hpcavity::lattice::{build_square_array, LatticeSpec};
use hpcavity::Vec3;
use proptest::prelude::*;
use std::f64::consts::TAU;

proptest! {
    #[test]
    fn reciprocal_duality(a1x in 0.3f64..2.0, a1y in -0.5f64..0.5, a2x in -0.5f64..0.5, a2y in 0.3f64..2.0) {
        let lat = LatticeSpec::new([a1x, a1y], [a2x, a2y]).unwrap();
        let (b1, b2) = lat.reciprocal();
        let dot = |u: [f64; 2], v: [f64; 2]| u[0] * v[0] + u[1] * v[1];
        prop_assert!((dot(b1, lat.a1) - TAU).abs() < 1e-12);
        prop_assert!((dot(b2, lat.a2) - TAU).abs() < 1e-12);
        prop_assert!(dot(b1, lat.a2).abs() < 1e-12);
        prop_assert!(dot(b2, lat.a1).abs() < 1e-12);
    }

    #[test]
    fn flat_limit(a in 0.3f64..1.5, n in 1usize..12, z in -3.0f64..3.0, r in 10.0f64..1e9) {
        let flat = build_square_array(a, n, z, f64::INFINITY, Vec3::x());
        let curved = build_square_array(a, n, z, r, Vec3::x());
        for (p, c) in flat.positions.iter().zip(&curved.positions) {
            prop_assert_eq!(p.z, z);
            prop_assert_eq!(p.x, c.x);
            prop_assert_eq!(p.y, c.y);
        }
    }
}
