//! Scenario → engine objects.

use hpcavity::bilayer::{cavity_transmission, layer_rates, linewidth, resonance_detuning, resonant_length};
use hpcavity::coupled_modes::{build_model, transmission as cm_transmission};
use hpcavity::dipole::{specular_transmission, steady_state_sweep, DriveField, PeriodicSystem, Sheet, SolveOptions};
use hpcavity::greens::gamma_closed_form;
use hpcavity::lattice::{build_bilayer, build_hp_cavity, curvature_for_waist, CavityStack, LatticeSpec};
use hpcavity::transfer::cavity_transmission_tm;
use hpcavity::{Exec, Vec3, C64, K};

use crate::error::CliError;
use crate::scenario::{Beam, Geometry, Polarization, Route, Scenario, StackKind, WindowKind};

/// Geometry and collective rates resolved to numbers.
#[derive(Debug, Clone)]
pub struct Setup {
    pub geometry: Geometry,
    pub drive_cfg: crate::scenario::Drive,
    pub ell: f64,
    pub lattice: LatticeSpec,
    pub omega: f64,
    pub gamma: f64,
    pub exec: Exec,
}

impl Setup {
    pub fn new(scn: &Scenario, exec: Exec) -> Result<Self, CliError> {
        let g = &scn.geometry;
        let lattice = LatticeSpec::square(g.lattice_spacing);
        let gamma = match g.gamma {
            Some(v) => v,
            None => gamma_closed_form([0.0, 0.0], &lattice, &Vec3::x(), K)?,
        };
        let omega = match g.omega {
            Some(v) => v,
            None if g.kind == StackKind::Empty => 0.0,
            None => layer_rates([0.0, 0.0], &lattice, exec)?.omega,
        };
        let ell = match (g.ell, g.resonant_half_waves, g.resonant_detuning) {
            (Some(l), _, _) => l,
            (None, Some(n), Some(d)) => resonant_length(n, d, omega, gamma),
            _ => 0.0,
        };
        Ok(Self { geometry: g.clone(), drive_cfg: scn.drive.clone(), ell, lattice, omega, gamma, exec })
    }

    pub fn with_ell(&self, ell: f64) -> Self {
        Self { ell, ..self.clone() }
    }

    pub fn ell_m(&self) -> f64 {
        self.geometry.n_m as f64 + 0.25
    }

    pub fn curvature(&self) -> Result<f64, CliError> {
        match (self.geometry.curvature_radius, self.geometry.mode_waist) {
            (Some(r), _) => Ok(r),
            (None, Some(w)) => Ok(curvature_for_waist(self.ell, w)?),
            (None, None) => Ok(f64::INFINITY),
        }
    }

    pub fn stack(&self, n_side: usize) -> Result<CavityStack, CliError> {
        let a = self.geometry.lattice_spacing;
        let r = self.curvature()?;
        Ok(match self.geometry.kind {
            StackKind::Bilayer => build_bilayer(self.ell, a, n_side, r, Vec3::x())?,
            StackKind::Hp => build_hp_cavity(self.ell, self.geometry.n_m, a, n_side, r)?,
            StackKind::Empty => CavityStack::empty(),
        })
    }

    pub fn sheets(&self) -> Vec<Sheet> {
        let (x, y) = (Vec3::x(), Vec3::y());
        match self.geometry.kind {
            StackKind::Bilayer => vec![Sheet { z: 0.0, axis: x }, Sheet { z: self.ell, axis: x }],
            StackKind::Hp => {
                let m = self.ell_m();
                vec![
                    Sheet { z: 0.0, axis: x },
                    Sheet { z: m, axis: y },
                    Sheet { z: self.ell, axis: x },
                    Sheet { z: self.ell + m, axis: y },
                ]
            }
            StackKind::Empty => Vec::new(),
        }
    }

    pub fn periodic(&self) -> Result<PeriodicSystem, CliError> {
        let sheets = self.sheets();
        Ok(if self.geometry.include_evanescent {
            PeriodicSystem::from_sheets(sheets, self.lattice, [0.0, 0.0], true, self.exec)?
        } else {
            PeriodicSystem::with_rates(sheets, self.lattice, self.omega, self.gamma)?
        })
    }

    pub fn drive(&self) -> DriveField {
        let pol = match self.drive_cfg.polarization {
            Polarization::X => DriveField::linear_x(),
            Polarization::Y => DriveField::linear_y(),
            Polarization::Rcp => DriveField::rcp(),
            Polarization::Lcp => DriveField::lcp(),
        };
        match self.drive_cfg.beam {
            Beam::Plane => DriveField::plane_wave(pol),
            Beam::Gaussian => DriveField::gaussian(
                pol,
                self.drive_cfg.waist.unwrap_or(1.0),
                self.drive_cfg.focus_z.unwrap_or(0.5 * (self.ell + self.mirror_thickness())),
            ),
        }
    }

    fn mirror_thickness(&self) -> f64 {
        if self.geometry.kind == StackKind::Hp {
            self.ell_m()
        } else {
            0.0
        }
    }

    pub fn resonance(&self) -> Result<f64, CliError> {
        Ok(resonance_detuning(self.ell, self.omega, self.gamma)?)
    }

    /// Detuning grid of a sweep section.
    pub fn grid(&self, points: usize, range: Option<[f64; 2]>, window: Option<WindowKind>, half_width: f64) -> Result<Vec<f64>, CliError> {
        let [lo, hi] = match (range, window) {
            (Some(r), _) => r,
            (None, Some(w)) => {
                let c = self.resonance()?;
                let h = half_width
                    * match w {
                        WindowKind::Linewidth => linewidth(self.ell, self.gamma),
                        WindowKind::ModelKappa => build_model(self.ell, self.gamma)?.kappa,
                    };
                [c - h, c + h]
            }
            (None, None) => return Err(CliError::Unsupported("sweep needs a range or a window".into())),
        };
        Ok(linspace(lo, hi, points))
    }

    fn needs_single_layer_mirrors(&self, route: Route) -> Result<(), CliError> {
        if self.geometry.kind == StackKind::Hp {
            return Err(CliError::Unsupported(format!(
                "route {} describes single-layer mirrors; use the dipole route for HP stacks",
                route.label()
            )));
        }
        Ok(())
    }

    /// Co-polarized cavity transmission on `deltas`, referenced to the
    /// incident phase at the entrance mirror.
    pub fn transmission(&self, route: Route, n_side: Option<usize>, deltas: &[f64]) -> Result<Vec<C64>, CliError> {
        let empty = self.geometry.kind == StackKind::Empty;
        match route {
            Route::Analytic | Route::TransferMatrix | Route::CoupledModes if empty => {
                Ok(vec![C64::new(1.0, 0.0); deltas.len()])
            }
            Route::Analytic => {
                self.needs_single_layer_mirrors(route)?;
                collect(self.exec.map_slice(deltas, |&d| cavity_transmission(d, self.ell, self.omega, self.gamma)))
            }
            Route::TransferMatrix => {
                self.needs_single_layer_mirrors(route)?;
                collect(self.exec.map_slice(deltas, |&d| cavity_transmission_tm(d, self.ell, self.omega, self.gamma)))
            }
            Route::CoupledModes => {
                self.needs_single_layer_mirrors(route)?;
                let m = build_model(self.ell, self.gamma)?;
                // S₁₂ carries the opposite sign convention for the output port
                collect(self.exec.map_slice(deltas, |&d| cm_transmission(&m, d - self.omega).map(|t| -t)))
            }
            Route::Dipole => {
                let drive = self.drive();
                let p = drive.polarization;
                let project = |t: [C64; 2]| p[0].conj() * t[0] + p[1].conj() * t[1];
                if self.geometry.periodic || empty {
                    let sys = self.periodic()?;
                    collect(self.exec.map_slice(deltas, |&d| {
                        sys.solve(&drive, d).map(|st| project(sys.transmission(&st, &drive)))
                    }))
                } else {
                    let n = n_side.ok_or_else(|| {
                        CliError::Unsupported("finite dipole stacks need geometry.n_side (or set periodic = true)".into())
                    })?;
                    let stack = self.stack(n)?;
                    let opts = SolveOptions { exec: self.exec, ..Default::default() };
                    let (_, states) = steady_state_sweep(&stack, &drive, deltas, opts)?;
                    states.iter().map(|st| Ok(project(specular_transmission(&stack, st, &drive, self.gamma)?))).collect()
                }
            }
        }
    }
}

fn collect(v: Vec<hpcavity::Result<C64>>) -> Result<Vec<C64>, CliError> {
    v.into_iter().map(|r| r.map_err(CliError::from)).collect()
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}
