use hpcavity::bilayer::{bilayer_amplitudes_with, cavity_transmission, resonance_detuning, specular_lr};
use hpcavity::transfer::cavity_transmission_tm;
use hpcavity::{C64, K};
use proptest::prelude::*;

const G0: f64 = 0.373_019_397_871_629_7;

proptest! {
    #[test]
    fn energy_bound(delta in -3.0f64..3.0, ell in 0.3f64..25.0, omega in -0.05f64..0.05) {
        prop_assume!((delta - omega).abs() > 1e-9);
        let r = bilayer_amplitudes_with(delta, ell, C64::new(omega, -G0 / 2.0), specular_lr(ell, G0)).unwrap();
        prop_assert!((r.t_c.norm_sqr() + r.r_c.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn route_equivalence(delta in -3.0f64..3.0, ell in 0.3f64..25.0, gamma in 0.01f64..3.0) {
        prop_assume!((K * ell).sin().abs() > 1e-6 && (K * ell).cos().abs() > 1e-9 && delta != 0.0);
        let a = cavity_transmission(delta, ell, 0.0, gamma).unwrap();
        let b = cavity_transmission_tm(delta, ell, 0.0, gamma).unwrap();
        prop_assert!((a - b).norm() <= 1e-12 * a.norm());
    }

    #[test]
    fn resonance_gives_unit_transmission(ell in 0.3f64..25.0, omega in -0.05f64..0.05) {
        prop_assume!((K * ell).sin().abs() > 1e-6 && (K * ell).cos().abs() > 1e-3);
        let d = resonance_detuning(ell, omega, G0).unwrap();
        prop_assert!((cavity_transmission(d, ell, omega, G0).unwrap().norm_sqr() - 1.0).abs() < 1e-10);
    }
}
