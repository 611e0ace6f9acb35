//! The four subcommands. Each returns its tables; writing is left to the caller.

use hpcavity::bilayer::{cavity_transmission, intracavity_profile_with, linewidth};
use hpcavity::dipole::{
    ChiralScatterer, DipoleState, DriveField, Handedness, PeriodicSystem, RealSpaceSystem, ScattererEvent, ScattererModel,
    SolveOptions,
};
use hpcavity::fields::{field_at, rs_map, FieldSource, MapPlane};
use hpcavity::greens::CollectiveRates;
use hpcavity::sensing::{simulate_sensing_run, HomodyneConfig, LoReference, NoiseModel, SensingConfig};
use hpcavity::transfer::{cavity_transmission_tm, chiral_phase_shift};
use hpcavity::{Vec3, C64};

use crate::error::CliError;
use crate::model::{linspace, Setup};
use crate::output::{Cell, Table};
use crate::scenario::{
    Handed, LoLock, MapMode, Metric, Noise, Route, Scenario, SensingModel, StackKind, SweepVariable,
};

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    s.as_ref().ok_or_else(|| CliError::Unsupported(format!("scenario has no [{name}] section")))
}

fn t_row(x: f64, t: C64, phase: f64) -> Vec<Cell> {
    vec![x.into(), t.norm_sqr().into(), t.re.into(), t.im.into(), phase.into()]
}

pub fn transmission_sweep(scn: &Scenario, setup: &Setup) -> Result<Table, CliError> {
    let sw = section(&scn.sweep, "sweep")?;
    match sw.variable {
        SweepVariable::Detuning => {
            let deltas = setup.grid(sw.points, sw.range, sw.window, sw.half_width)?;
            let ts = setup.transmission(scn.route, setup.geometry.n_side, &deltas)?;
            let mut table = Table::new(vec!["Delta_over_Gamma0", "abs_t_c_sq", "re_t_c", "im_t_c", "phase"]);
            for (d, t) in deltas.iter().zip(ts) {
                table.push(t_row(*d, t, t.arg()));
            }
            Ok(table)
        }
        SweepVariable::LengthShift => {
            if setup.geometry.kind != StackKind::Bilayer {
                return Err(CliError::Unsupported("length-shift sweeps need a bilayer stack".into()));
            }
            let [lo, hi] = sw.range.ok_or_else(|| CliError::Unsupported("length-shift sweeps need sweep.range".into()))?;
            let delta = setup.resonance()?;
            let (ell, om, g) = (setup.ell, setup.omega, setup.gamma);
            let shifts = linspace(lo, hi, sw.points);
            let rows = setup.exec.map_slice(&shifts, |&dl| -> hpcavity::Result<Vec<Cell>> {
                let t = match scn.route {
                    Route::TransferMatrix => cavity_transmission_tm(delta, ell + dl, om, g)?,
                    _ => cavity_transmission(delta, ell + dl, om, g)?,
                };
                Ok(t_row(dl, t, chiral_phase_shift(ell, dl, 1)?.phi))
            });
            let mut table = Table::new(vec!["delta_ell", "abs_t_c_sq", "re_t_c", "im_t_c", "phase"]);
            for r in rows {
                table.push(r?);
            }
            Ok(table)
        }
    }
}

trait Solvable: FieldSource {
    fn solve_at(&self, drive: &DriveField, delta: f64) -> hpcavity::Result<DipoleState>;
}

impl Solvable for RealSpaceSystem {
    fn solve_at(&self, drive: &DriveField, delta: f64) -> hpcavity::Result<DipoleState> {
        self.solve(drive, delta)
    }
}

impl Solvable for PeriodicSystem {
    fn solve_at(&self, drive: &DriveField, delta: f64) -> hpcavity::Result<DipoleState> {
        self.solve(drive, delta)
    }
}

/// Laser detuning of a field map.
fn map_detuning<S: Solvable>(setup: &Setup, locked: bool, fixed: Option<f64>, finite: Option<(&S, &DriveField)>) -> Result<f64, CliError> {
    if !locked {
        return fixed.ok_or_else(|| CliError::Unsupported("field_map needs `delta` or `resonance_locked = true`".into()));
    }
    let res = setup.resonance()?;
    let Some((src, drive)) = finite else { return Ok(res) };
    // finite arrays shift the mode away from the infinite-lattice value, so
    // scan for the strongest field at the cavity centre
    let kappa = linewidth(setup.ell, setup.gamma);
    let centre = Vec3::new(0.0, 0.0, 0.5 * setup.ell);
    let grid = linspace(res - 2.0 * kappa, res + 2.0 * kappa, 81);
    let strength = setup.exec.map_slice(&grid, |&d| -> hpcavity::Result<f64> {
        Ok(field_at(src, &src.solve_at(drive, d)?, drive, &centre)?.0.norm())
    });
    let mut best = (res, -1.0);
    for (d, e) in grid.iter().zip(strength) {
        let e = e?;
        if e > best.1 {
            best = (*d, e);
        }
    }
    Ok(best.0)
}

pub fn field_map(scn: &Scenario, setup: &Setup) -> Result<Table, CliError> {
    let fm = section(&scn.field_map, "field_map")?;
    match fm.mode {
        MapMode::Profile => {
            if setup.geometry.kind != StackKind::Bilayer {
                return Err(CliError::Unsupported("on-axis profiles are available for bilayer stacks".into()));
            }
            let delta = map_detuning::<RealSpaceSystem>(setup, fm.resonance_locked, fm.delta, None)?;
            let n = ((fm.z[1] - fm.z[0]) * fm.points_per_lambda).round().max(1.0) as usize + 1;
            let zs = linspace(fm.z[0], fm.z[1], n);
            let rates = CollectiveRates { omega: setup.omega, gamma: setup.gamma, gamma_closed: setup.gamma };
            let e = intracavity_profile_with(
                delta,
                setup.ell,
                &setup.lattice,
                rates,
                &zs,
                [fm.x, fm.y[0]],
                setup.geometry.include_evanescent,
                setup.exec,
            )?;
            let mut table = Table::new(vec!["z", "abs_E_sq", "re_E_x", "im_E_x"]);
            for (z, v) in zs.iter().zip(e) {
                table.push(vec![(*z).into(), v.norm_squared().into(), v.x.re.into(), v.x.im.into()]);
            }
            eprintln!("field-map: Delta = {delta}");
            Ok(table)
        }
        MapMode::RsMap => {
            if scn.route != Route::Dipole {
                return Err(CliError::Unsupported("RS maps are computed with the dipole route".into()));
            }
            let drive = setup.drive();
            let plane = MapPlane { x: fm.x, y: fm.y, z: fm.z };
            let map = if setup.geometry.periodic || setup.geometry.kind == StackKind::Empty {
                let sys = setup.periodic()?;
                let delta = map_detuning::<PeriodicSystem>(setup, fm.resonance_locked, fm.delta, None)?;
                eprintln!("field-map: Delta = {delta}");
                rs_map(&sys, &sys.solve(&drive, delta)?, &drive, plane, fm.points_per_lambda, setup.exec)?
            } else {
                let n = setup.geometry.n_side.ok_or_else(|| CliError::Unsupported("finite stacks need geometry.n_side".into()))?;
                let stack = setup.stack(n)?;
                let sys = RealSpaceSystem::new(&stack, &drive, SolveOptions { exec: setup.exec, ..Default::default() })?;
                let delta = map_detuning(setup, fm.resonance_locked, fm.delta, Some((&sys, &drive)))?;
                eprintln!("field-map: Delta = {delta}");
                rs_map(&sys, &sys.solve(&drive, delta)?, &drive, plane, fm.points_per_lambda, setup.exec)?
            };
            let mut table = Table::new(vec!["y", "z", "G_plus_sq_over_I_in", "G_minus_sq_over_I_in", "chirality"]);
            for r in map.rows() {
                table.push(vec![r.y.into(), r.z.into(), r.g_plus.into(), r.g_minus.into(), r.chirality.into()]);
            }
            Ok(table)
        }
    }
}

fn molecule(m: &crate::scenario::Molecule, z_default: f64) -> ChiralScatterer {
    let z = m.z_s.unwrap_or(z_default);
    match m.handedness {
        Handed::Right => ChiralScatterer::ideal(Handedness::Right, m.delta_s, m.gamma_s, z),
        Handed::Left => ChiralScatterer::ideal(Handedness::Left, m.delta_s, m.gamma_s, z),
        Handed::Achiral => {
            // purely electric: the magnetic orientation is irrelevant at γᵐ = 0
            let base = ChiralScatterer::ideal(Handedness::Right, m.delta_s, m.gamma_s, z);
            ChiralScatterer { gamma_e: m.gamma_s, gamma_m: 0.0, mu_hat: base.d_hat, handedness: Handedness::Achiral, ..base }
        }
    }
}

pub fn sense(scn: &Scenario, setup: &Setup) -> Result<Table, CliError> {
    let s = section(&scn.sensing, "sensing")?;
    if scn.route != Route::Dipole || !setup.geometry.periodic {
        return Err(CliError::Unsupported("sensing runs use the dipole route with periodic = true".into()));
    }
    let sys = setup.periodic()?;
    let drive = setup.drive();
    let scatterer = molecule(&s.molecule, 0.5 * setup.ell);
    scatterer.validate()?;
    let schedule: Vec<ScattererEvent> =
        s.events.iter().map(|&[t_enter, t_exit]| ScattererEvent { t_enter, t_exit, scatterer: scatterer.clone() }).collect();
    let cfg = SensingConfig {
        homodyne: HomodyneConfig {
            flux: s.flux,
            flux_lo: s.flux_lo,
            t_int: s.t_int,
            eta_q: s.eta_q,
            theta: s.theta,
            theta_lo: s.theta_lo,
        },
        delta: s.delta,
        model: match s.model {
            SensingModel::Dispersive => ScattererModel::Dispersive,
            SensingModel::Dipole => ScattererModel::Dipole,
        },
        n_rot: s.n_rot,
        seed: scn.seed,
        dt: s.dt,
        samples_per_window: s.samples_per_window,
        n_windows: s.n_windows,
        lo_reference: match s.lo_reference {
            LoLock::EmptyCavity => LoReference::EmptyCavity,
            LoLock::Fixed => LoReference::Fixed,
        },
        noise: match s.noise {
            Noise::Homodyne => NoiseModel::Homodyne,
            Noise::Poisson => NoiseModel::Poisson,
        },
    };
    let run = simulate_sensing_run(&sys, &schedule, &drive, &cfg, setup.exec)?;
    let mut table = Table::new(vec!["t", "mean_m_minus", "noise_std", "scatterer_present", "handedness"]);
    for w in &run.windows {
        table.push(vec![
            w.t.into(),
            w.mean_m_minus.into(),
            w.noise_std.into(),
            w.scatterer_present.into(),
            run.handedness.as_str().into(),
        ]);
    }
    Ok(table)
}

/// Per-route deviation from the reference route.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareSummary {
    pub ell: f64,
    pub n_side: usize,
    pub route: Route,
    pub reference: Route,
    pub max: f64,
    pub rms: f64,
}

fn deviations(metric: Metric, t: &[C64], t_ref: &[C64]) -> Vec<f64> {
    match metric {
        Metric::Intensity => t.iter().zip(t_ref).map(|(a, b)| (a.norm_sqr() - b.norm_sqr()).abs()).collect(),
        Metric::Complex => {
            let k = (0..t_ref.len()).fold(0, |k, i| if t_ref[i].norm() > t_ref[k].norm() { i } else { k });
            let rot = if t[k].norm() > 0.0 { C64::from_polar(1.0, (t_ref[k] / t[k]).arg()) } else { C64::new(1.0, 0.0) };
            t.iter().zip(t_ref).map(|(a, b)| (rot * a - b).norm()).collect()
        }
    }
}

pub fn compare(scn: &Scenario, setup: &Setup) -> Result<(Table, Vec<CompareSummary>), CliError> {
    let c = section(&scn.compare, "compare")?;
    let sw = section(&scn.sweep, "sweep")?;
    if sw.variable != SweepVariable::Detuning {
        return Err(CliError::Unsupported("comparisons run on detuning sweeps".into()));
    }
    let ells = if c.ells.is_empty() { vec![setup.ell] } else { c.ells.clone() };
    let finite = c.routes.contains(&Route::Dipole) && !setup.geometry.periodic;
    let n_sides: Vec<Option<usize>> = match (finite, c.n_sides.is_empty()) {
        (true, false) => c.n_sides.iter().copied().map(Some).collect(),
        _ => vec![setup.geometry.n_side],
    };
    let reference = c.routes[0];
    let mut table = Table::new(vec![
        "ell",
        "n_side",
        "route",
        "Delta_over_Gamma0",
        "abs_t_c_sq",
        "re_t_c",
        "im_t_c",
        "abs_t_ref_sq",
        "re_t_ref",
        "im_t_ref",
        "deviation",
    ]);
    let mut summary = Vec::new();
    for &ell in &ells {
        let s = setup.with_ell(ell);
        let deltas = s.grid(sw.points, sw.range, sw.window, sw.half_width)?;
        for &n in &n_sides {
            let t_ref = s.transmission(reference, n, &deltas)?;
            for &route in &c.routes[1..] {
                let t = s.transmission(route, n, &deltas)?;
                let dev = deviations(c.metric, &t, &t_ref);
                for i in 0..deltas.len() {
                    table.push(vec![
                        ell.into(),
                        n.unwrap_or(0).into(),
                        route.label().into(),
                        deltas[i].into(),
                        t[i].norm_sqr().into(),
                        t[i].re.into(),
                        t[i].im.into(),
                        t_ref[i].norm_sqr().into(),
                        t_ref[i].re.into(),
                        t_ref[i].im.into(),
                        dev[i].into(),
                    ]);
                }
                summary.push(CompareSummary {
                    ell,
                    n_side: n.unwrap_or(0),
                    route,
                    reference,
                    max: dev.iter().copied().fold(0.0, f64::max),
                    rms: (dev.iter().map(|d| d * d).sum::<f64>() / dev.len() as f64).sqrt(),
                });
            }
        }
    }
    Ok((table, summary))
}

pub fn summary_table(summary: &[CompareSummary]) -> Table {
    let mut t = Table::new(vec!["ell", "n_side", "route", "reference", "max_deviation", "rms_deviation"]);
    for s in summary {
        t.push(vec![
            s.ell.into(),
            s.n_side.into(),
            s.route.label().into(),
            s.reference.label().into(),
            s.max.into(),
            s.rms.into(),
        ]);
    }
    t
}
