use hpcavity::bilayer::cavity_transmission;
use hpcavity::dipole::{steady_state, DriveField, PeriodicSystem, Sheet, SolveOptions, Symmetry};
use hpcavity::lattice::{build_bilayer, LatticeSpec};
use hpcavity::{Exec, Vec3, C64};
use proptest::prelude::*;

const G0: f64 = 0.373_019_397_871_629_7;

fn bilayer(ell: f64, omega: f64) -> PeriodicSystem {
    let sheets = vec![Sheet { z: 0.0, axis: Vec3::x() }, Sheet { z: ell, axis: Vec3::x() }];
    PeriodicSystem::with_rates(sheets, LatticeSpec::square(0.8), omega, G0).unwrap()
}

proptest! {
    #[test]
    fn periodic_bilayer_matches_closed_form(delta in -2.0f64..2.0, ell in 0.6f64..20.0) {
        prop_assume!((std::f64::consts::TAU * ell).sin().abs() > 1e-4 && delta.abs() > 1e-6);
        let sys = bilayer(ell, 0.0);
        let drive = DriveField::plane_wave(DriveField::linear_x());
        let st = sys.solve(&drive, delta).unwrap();
        let t = sys.transmission(&st, &drive)[0];
        let expect = cavity_transmission(delta, ell, 0.0, G0).unwrap();
        prop_assert!((t - expect).norm() < 1e-8, "{t} vs {expect}");
    }

    #[test]
    fn lossless_sheets(delta in -2.0f64..2.0, z1 in 0.3f64..6.0, z2 in 6.3f64..12.0, p in 0.0f64..1.0) {
        let sheets = vec![
            Sheet { z: 0.0, axis: Vec3::x() },
            Sheet { z: z1, axis: Vec3::y() },
            Sheet { z: z2, axis: Vec3::new(1.0, 1.0, 0.0).normalize() },
        ];
        let sys = PeriodicSystem::with_rates(sheets, LatticeSpec::square(0.8), 0.0, G0).unwrap();
        let pol = [C64::new(p.sqrt(), 0.0), C64::new(0.0, (1.0 - p).sqrt())];
        let drive = DriveField::plane_wave(pol);
        let st = sys.solve(&drive, delta).unwrap();
        let t = sys.transmission(&st, &drive);
        let r = sys.reflection(&st, &drive);
        let total: f64 = t.iter().chain(&r).map(|z| z.norm_sqr()).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn response_is_linear_in_drive(delta in -2.0f64..2.0, s in 0.1f64..10.0) {
        let sys = bilayer(5.3, 0.0);
        let d1 = DriveField::plane_wave(DriveField::rcp());
        let d2 = DriveField { amplitude: s, ..d1 };
        let b1 = sys.solve(&d1, delta).unwrap().beta;
        let b2 = sys.solve(&d2, delta).unwrap().beta;
        for (x, y) in b1.iter().zip(&b2) {
            prop_assert!((x * s - y).norm() < 1e-12 * (1.0 + y.norm()));
        }
    }
}

#[test]
fn finite_array_is_passive() {
    // Im(η†β) is minus the radiated power.
    let stack = build_bilayer(3.3, 0.8, 8, f64::INFINITY, Vec3::x()).unwrap();
    let drive = DriveField::plane_wave(DriveField::linear_x());
    for delta in [-1.0, -0.2, 0.0, 0.3, 1.5] {
        let st = steady_state(&stack, &drive, delta, SolveOptions::default()).unwrap();
        let eta: Vec<C64> =
            stack.layers.iter().flat_map(|l| l.positions.iter().map(|p| drive.e_field(p).x)).collect();
        let work: C64 = eta.iter().zip(&st.beta).map(|(e, b)| e.conj() * b).sum();
        assert!(work.im < 0.0, "delta {delta}: {work}");
    }
}

#[test]
fn symmetry_reduction_is_exact() {
    let stack = build_bilayer(2.4, 0.8, 7, 200.0, Vec3::x()).unwrap();
    let drive = DriveField::plane_wave(DriveField::rcp());
    let full = SolveOptions { symmetry: Symmetry::None, exec: Exec::Sequential };
    let a = steady_state(&stack, &drive, 0.3, full).unwrap();
    let b = steady_state(&stack, &drive, 0.3, SolveOptions::default()).unwrap();
    let err = a.beta.iter().zip(&b.beta).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    assert!(err < 1e-10, "{err}");
}
