use hpcavity::bilayer::resonant_length;
use hpcavity::dipole::{DriveField, PeriodicSystem, RealSpaceSystem, Sheet, SolveOptions};
use hpcavity::fields::{field_at, rs_map, MapPlane};
use hpcavity::lattice::{build_hp_cavity, CavityStack, LatticeSpec};
use hpcavity::{complexify, Exec, Vec3};
use proptest::prelude::*;

const G0: f64 = 0.373_019_397_871_629_7;

fn hp_sheets(ell: f64) -> Vec<Sheet> {
    vec![
        Sheet { z: 0.0, axis: Vec3::x() },
        Sheet { z: 0.25, axis: Vec3::y() },
        Sheet { z: ell, axis: Vec3::x() },
        Sheet { z: ell + 0.25, axis: Vec3::y() },
    ]
}

proptest! {
    #[test]
    fn plane_wave_impedance(qx in -4.0f64..4.0, qy in -4.0f64..4.0, p in 0.0f64..1.0, x in -3.0f64..3.0, z in -3.0f64..3.0) {
        let mut drive = DriveField::plane_wave(DriveField::linear_x());
        drive.k_parallel = [qx, qy];
        drive.polarization = [hpcavity::C64::new(p.sqrt(), 0.0), hpcavity::C64::new(0.0, (1.0 - p).sqrt())];
        let sys = RealSpaceSystem::new(&CavityStack::empty(), &drive, SolveOptions::default()).unwrap();
        let st = sys.solve(&drive, 0.0).unwrap();
        let r = Vec3::new(x, 0.5, z);
        let (e, zh) = field_at(&sys, &st, &drive, &r).unwrap();
        let khat = complexify(&Vec3::new(qx, qy, drive.kz()).normalize());
        prop_assert!((khat.cross(&e) - zh).norm() < 1e-12);
        prop_assert!((e.norm() - zh.norm()).abs() < 1e-12);
    }

    #[test]
    fn periodic_hp_cavity_keeps_helicity(n in 5u32..30, delta in -0.5f64..0.5) {
        let ell = resonant_length(n, 0.0, 0.0, G0) + 0.01 * delta;
        let sys = PeriodicSystem::with_rates(hp_sheets(ell), LatticeSpec::square(0.8), 0.0, G0).unwrap();
        let drive = DriveField::plane_wave(DriveField::rcp());
        let st = sys.solve(&drive, delta).unwrap();
        let plane = MapPlane { x: 0.0, y: [0.0, 0.0], z: [0.4, ell - 0.1] };
        let map = rs_map(&sys, &st, &drive, plane, 3.0, Exec::Sequential).unwrap();
        prop_assert!(map.max_minus_over_plus([0.3, ell]) < 1e-6);
    }
}

#[test]
fn finite_curved_hp_cavity_keeps_helicity() {
    let ell = 10.03;
    let stack = build_hp_cavity(ell, 0, 0.8, 24, 40.0).unwrap();
    let drive = DriveField::gaussian(DriveField::rcp(), 2.0, ell / 2.0);
    let sys = RealSpaceSystem::new(&stack, &drive, SolveOptions::default()).unwrap();
    let centre = Vec3::new(0.0, 0.0, ell / 2.0);
    // locate the cavity mode by the intracavity field strength
    let (delta, _) = (0..=40)
        .map(|i| {
            let d = 0.01 * i as f64;
            let st = sys.solve(&drive, d).unwrap();
            let (e, _) = field_at(&sys, &st, &drive, &centre).unwrap();
            (d, e.norm())
        })
        .fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let st = sys.solve(&drive, delta).unwrap();
    let plane = MapPlane { x: 0.0, y: [-1.0, 1.0], z: [ell / 2.0 - 2.0, ell / 2.0 + 2.0] };
    let map = rs_map(&sys, &st, &drive, plane, 2.0, Exec::default()).unwrap();
    let ratio = map.max_minus_over_plus([0.5, ell - 0.5]);
    assert!(ratio < 1e-2, "{ratio} at {delta}");
}
