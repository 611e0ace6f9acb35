use hpcavity::transfer::{
    change_basis, circular_basis, dispersive_limit_error, hp_mirror_block, metasurface_block,
};
use hpcavity::C64;
use proptest::prelude::*;

const G0: f64 = 0.373_019_397_871_629_7;

proptest! {
    #[test]
    fn metasurface_block_identities(delta in -5.0f64..5.0, omega in -0.1f64..0.1, gamma in 0.01f64..2.0) {
        prop_assume!((delta - omega).abs() > 1e-6);
        let b = metasurface_block(delta, omega, gamma);
        prop_assert!((b.det() - C64::new(1.0, 0.0)).norm() < 1e-12);
        let (t, r) = (b.transmission(), b.reflection());
        prop_assert!((t.norm_sqr() + r.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert!((t - (r + 1.0)).norm() < 1e-12);
    }

    #[test]
    fn hp_mirror_is_block_diagonal(delta in -2.0f64..2.0, n in 0u32..20) {
        prop_assume!(delta.abs() > 1e-6);
        let hp = hp_mirror_block(delta, 0.0, G0, n as f64 + 0.25);
        prop_assert!(hp.helicity_preserving);
        let c = change_basis(&hp.block, &circular_basis()).unwrap();
        let scale = c.m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(c.off_block_max() < 1e-12 * scale.max(1.0));
    }
}

#[test]
fn dispersive_limit_error_is_second_order() {
    let cs: Vec<f64> = [0.2, 0.1, 0.05, 0.02]
        .iter()
        .map(|r: &f64| dispersive_limit_error(1.0 / r, 1.0).unwrap() / (r * r))
        .collect();
    let (lo, hi) = cs.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
    assert!(hi / lo < 1.2, "{cs:?}");
    assert!((cs[3] - 0.375).abs() < 0.01);
}
