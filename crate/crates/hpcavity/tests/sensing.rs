use hpcavity::bilayer::resonant_length;
use hpcavity::dipole::{ChiralScatterer, DriveField, Handedness, PeriodicSystem, ScattererEvent, ScattererModel, Sheet};
use hpcavity::lattice::LatticeSpec;
use hpcavity::sensing::{
    homodyne_expectation, homodyne_variance, photocount_mc, poisson_difference_variance, rotational_average_mc,
    rotational_average_renormalization, simulate_sensing_run, HomodyneConfig, SensingConfig,
};
use hpcavity::{Exec, Vec3, C64};
use proptest::prelude::*;

const G0: f64 = 0.373_019_397_871_629_7;

fn hp_cavity(ell: f64) -> PeriodicSystem {
    let sheets = vec![
        Sheet { z: 0.0, axis: Vec3::x() },
        Sheet { z: 0.25, axis: Vec3::y() },
        Sheet { z: ell, axis: Vec3::x() },
        Sheet { z: ell + 0.25, axis: Vec3::y() },
    ];
    PeriodicSystem::with_rates(sheets, LatticeSpec::square(0.8), 0.0, G0).unwrap()
}

proptest! {
    #[test]
    fn signal_scales_with_geometric_mean_flux(f in 0.1f64..10.0, flo in 1.0f64..1000.0, s in 0.1f64..10.0, phi in -3.0f64..3.0) {
        let a = HomodyneConfig { flux: f, flux_lo: flo, ..Default::default() };
        let b = HomodyneConfig { flux: f * s, flux_lo: flo * s, ..a };
        let t = [C64::from_polar(0.7, phi)];
        let (ma, mb) = (homodyne_expectation(&a, &t), homodyne_expectation(&b, &t));
        prop_assert!((mb - s * ma).abs() < 1e-9 * (1.0 + mb.abs()));
    }

    #[test]
    fn noise_models_agree_at_unit_transmission(f in 0.1f64..10.0, flo in 1.0f64..1000.0, eta in 0.1f64..1.0) {
        let cfg = HomodyneConfig { flux: f, flux_lo: flo, eta_q: eta, ..Default::default() };
        let (a, b) = (homodyne_variance(&cfg, 1.0), poisson_difference_variance(&cfg, 1.0));
        prop_assert!((a - b).abs() < 1e-10 * a);
    }
}

#[test]
fn photocounts_match_poisson_moments() {
    let cfg = HomodyneConfig::default();
    for (k, t) in [C64::new(1.0, 0.0), C64::from_polar(1.0, 0.8), C64::from_polar(0.4, -1.2)].into_iter().enumerate() {
        let s = photocount_mc(&cfg, t, 20_000, k as u64).unwrap();
        let mean = homodyne_expectation(&cfg, &[t]);
        let var = poisson_difference_variance(&cfg, t.norm());
        assert!((s.mean - mean).abs() < 5.0 * (var / 20_000.0).sqrt(), "{} vs {mean}", s.mean);
        assert!((s.variance - var).abs() < 5.0 * s.variance_err, "{} vs {var}", s.variance);
    }
}

#[test]
fn rotational_average_converges() {
    let mut s = ChiralScatterer::ideal(Handedness::Right, 10.0, 1.0, 0.0);
    s.gamma_e = 0.7;
    s.gamma_m = 0.3;
    for xi in [1.0, -1.0] {
        let mc = rotational_average_mc(&s, xi, 40_000, 3);
        let exact = rotational_average_renormalization(&s, xi);
        assert!((mc - exact).abs() < 0.02 * exact.max(0.1), "{mc} vs {exact}");
    }
}

#[test]
fn empty_cavity_trace_is_flat() {
    let ell = resonant_length(25, 0.01, 0.0, G0);
    let sys = hp_cavity(ell);
    let drive = DriveField::plane_wave(DriveField::rcp());
    let cfg = SensingConfig { n_windows: 3, samples_per_window: 10, ..Default::default() };
    let run = simulate_sensing_run(&sys, &[], &drive, &cfg, Exec::Sequential).unwrap();
    assert_eq!(run.windows.len(), 3);
    for w in &run.windows {
        assert!(!w.scatterer_present);
        assert!(w.mean_m_minus.abs() < 1e-6 * w.noise_std);
    }
}

#[test]
fn dipole_runs_are_deterministic_across_exec_modes() {
    let ell = resonant_length(5, 0.01, 0.0, G0);
    let sys = hp_cavity(ell);
    let drive = DriveField::plane_wave(DriveField::rcp());
    let cfg = SensingConfig {
        model: ScattererModel::Dipole,
        n_rot: 4,
        dt: 0.004,
        seed: 9,
        n_windows: 2,
        samples_per_window: 5,
        homodyne: HomodyneConfig { t_int: 50.0, ..Default::default() },
        ..Default::default()
    };
    let ev = [ScattererEvent {
        t_enter: 20.0,
        t_exit: 80.0,
        scatterer: ChiralScatterer::ideal(Handedness::Right, 10.0, 1.0, ell / 2.0),
    }];
    let a = simulate_sensing_run(&sys, &ev, &drive, &cfg, Exec::Sequential).unwrap();
    let b = simulate_sensing_run(&sys, &ev, &drive, &cfg, Exec::Parallel).unwrap();
    assert_eq!(a, b);
    assert!(a.windows.iter().all(|w| w.scatterer_present));
}
