//! Infinite-lattice emulation: one Bloch amplitude per sheet.
//!
//! Every sheet is an infinite copy of the same lattice, registered on top of
//! each other, driven at in-plane momentum `q`. In-plane couplings come from
//! the real-space lattice tensor, inter-sheet couplings from the reciprocal
//! sum (only the specular order unless evanescent orders are requested).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{DipoleState, DriveField, DriveKind};
use crate::exec::Exec;
use crate::greens::{gamma_closed_form, in_plane_tensor, lattice_greens_fourier, lattice_greens_fourier_auto, RealSpaceSum};
use crate::lattice::{CavityStack, LatticeSpec};
use crate::{c, cr, CMat3, CVec3, Error, Result, Vec3, C64};

/// Tolerance for evanescent reciprocal sums.
const FOURIER_TOL: f64 = 1e-12;
const FOURIER_MAX_SHELLS: usize = 4000;

/// One infinite layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sheet {
    pub z: f64,
    pub axis: Vec3,
}

/// In-plane response used on the diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
enum InPlane {
    /// Full lattice tensor `Σ_{j≠0} G(R_j)e^{iq·R_j}`.
    Tensor(CMat3),
    /// Prescribed Ω̃, Γ̃ for every sheet (normal incidence only).
    Rates { omega: f64, gamma: f64 },
}

#[derive(Debug, Clone)]
pub struct PeriodicSystem {
    pub sheets: Vec<Sheet>,
    pub lattice: LatticeSpec,
    pub q: [f64; 2],
    pub k: f64,
    pub include_evanescent: bool,
    in_plane: InPlane,
    /// `M` including the diagonal `Ω̃ − iΓ̃/2`.
    m: DMatrix<C64>,
}

impl PeriodicSystem {
    /// Emulate the layers of `stack` as infinite lattices.
    pub fn from_stack(stack: &CavityStack, q: [f64; 2], include_evanescent: bool, exec: Exec) -> Result<Self> {
        let lattice = stack.layers.first().map(|l| l.lattice).unwrap_or(LatticeSpec::square(0.8));
        let sheets = stack.layers.iter().map(|l| Sheet { z: l.z_center, axis: l.dipole_axis }).collect();
        Self::from_sheets(sheets, lattice, q, include_evanescent, exec)
    }

    pub fn from_sheets(sheets: Vec<Sheet>, lattice: LatticeSpec, q: [f64; 2], include_evanescent: bool, exec: Exec) -> Result<Self> {
        let k = crate::K;
        let tensor = if sheets.is_empty() { CMat3::zeros() } else { in_plane_tensor(q, &lattice, k, RealSpaceSum::default(), exec)? };
        Self::build(sheets, lattice, q, k, include_evanescent, InPlane::Tensor(tensor))
    }

    /// Reuse a precomputed in-plane tensor (see [`in_plane_tensor`]).
    pub fn with_tensor(sheets: Vec<Sheet>, lattice: LatticeSpec, q: [f64; 2], tensor: CMat3, include_evanescent: bool) -> Result<Self> {
        Self::build(sheets, lattice, q, crate::K, include_evanescent, InPlane::Tensor(tensor))
    }

    /// Normal-incidence emulation with prescribed collective rates; the
    /// specular inter-sheet coupling is rescaled to the same Γ̃.
    pub fn with_rates(sheets: Vec<Sheet>, lattice: LatticeSpec, omega: f64, gamma: f64) -> Result<Self> {
        if gamma <= 0.0 {
            return Err(Error::Invalid("collective rate must be positive".into()));
        }
        Self::build(sheets, lattice, [0.0, 0.0], crate::K, false, InPlane::Rates { omega, gamma })
    }

    fn build(sheets: Vec<Sheet>, lattice: LatticeSpec, q: [f64; 2], k: f64, include_evanescent: bool, in_plane: InPlane) -> Result<Self> {
        let mut sys = Self { sheets, lattice, q, k, include_evanescent, in_plane, m: DMatrix::zeros(0, 0) };
        let n = sys.sheets.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = sys.pair_coupling(i, j)?;
            }
        }
        sys.m = m;
        Ok(sys)
    }

    /// Area-limited specular rate `3π/(Ak²)` (equals Γ̃(0) for in-plane dipoles).
    pub fn specular_rate(&self) -> f64 {
        3.0 * PI / (self.lattice.area() * self.k * self.k)
    }

    fn scale(&self) -> f64 {
        match self.in_plane {
            InPlane::Tensor(_) => 1.0,
            InPlane::Rates { gamma, .. } => gamma / self.specular_rate(),
        }
    }

    fn pair_coupling(&self, i: usize, j: usize) -> Result<C64> {
        let (si, sj) = (self.sheets[i], self.sheets[j]);
        let (di, dj) = (crate::complexify(&si.axis), crate::complexify(&sj.axis));
        let pre = -3.0 * PI / self.k;
        if i == j || si.z == sj.z {
            return Ok(match self.in_plane {
                InPlane::Tensor(t) => {
                    let v = pre * di.conjugate().dot(&(t * dj));
                    if i == j {
                        c(v.re, -0.5 * gamma_closed_form(self.q, &self.lattice, &si.axis, self.k)?)
                    } else {
                        v
                    }
                }
                InPlane::Rates { omega, gamma } => {
                    if i == j {
                        c(omega, -0.5 * gamma)
                    } else {
                        cr(0.0)
                    }
                }
            });
        }
        let g = self.sheet_tensor(si.z - sj.z, [0.0, 0.0])?;
        Ok(pre * self.scale() * di.conjugate().dot(&(g.0 * dj)))
    }

    /// Electric and magnetic reciprocal sums for a sheet offset `dz`.
    fn sheet_tensor(&self, dz: f64, r_par: [f64; 2]) -> Result<(CMat3, CMat3)> {
        let s = if self.include_evanescent {
            lattice_greens_fourier_auto(self.q, dz, r_par, &self.lattice, self.k, FOURIER_TOL, FOURIER_MAX_SHELLS)?
        } else {
            lattice_greens_fourier(self.q, dz, r_par, &self.lattice, self.k, 0, 1.0)?
        };
        Ok((s.electric, s.magnetic))
    }

    pub fn coupling_matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn len(&self) -> usize {
        self.sheets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sheets.is_empty()
    }

    fn check_drive(&self, drive: &DriveField) -> Result<()> {
        drive.validate()?;
        if drive.kind != DriveKind::PlaneWave {
            return Err(Error::Invalid("periodic emulation needs a plane-wave drive".into()));
        }
        if (drive.k_parallel[0] - self.q[0]).abs() > 1e-12 || (drive.k_parallel[1] - self.q[1]).abs() > 1e-12 {
            return Err(Error::Invalid("drive in-plane momentum must equal the emulated q".into()));
        }
        Ok(())
    }

    /// Drive vector `ηᵢ = d̂ᵢ*·E_in(0, 0, zᵢ)`.
    pub fn drive_vector(&self, drive: &DriveField) -> DVector<C64> {
        DVector::from_iterator(
            self.len(),
            self.sheets.iter().map(|s| crate::complexify(&s.axis).conjugate().dot(&drive.e_field(&Vec3::new(0.0, 0.0, s.z)))),
        )
    }

    pub fn solve(&self, drive: &DriveField, delta: f64) -> Result<DipoleState> {
        self.check_drive(drive)?;
        let n = self.len();
        if n == 0 {
            return Ok(DipoleState { beta: Vec::new(), beta_s: None, delta });
        }
        let a = DMatrix::from_diagonal_element(n, n, cr(delta)) - &self.m;
        let eta = self.drive_vector(drive);
        let x = a.clone().lu().solve(&eta).ok_or(Error::Singular(f64::INFINITY))?;
        let res = (&a * &x - &eta).norm() / eta.norm().max(f64::MIN_POSITIVE);
        if !res.is_finite() || res > super::realspace::RESIDUAL_TOL {
            return Err(Error::Singular(x.norm() * a.norm() / eta.norm().max(f64::MIN_POSITIVE)));
        }
        Ok(DipoleState { beta: x.iter().copied().collect(), beta_s: None, delta })
    }

    /// Total electric and `Z·H` fields at `r` (lattice sites sit at r∥ = 0).
    pub fn fields(&self, state: &DipoleState, drive: &DriveField, r: &Vec3) -> Result<(CVec3, CVec3)> {
        let mut e = drive.e_field(r);
        let mut h = drive.h_field(r);
        let pre = -3.0 * PI / self.k * self.scale();
        for (s, b) in self.sheets.iter().zip(&state.beta) {
            let dz = r.z - s.z;
            if dz == 0.0 {
                return Err(Error::OnEmitter);
            }
            let (ge, gh) = self.sheet_tensor(dz, [r.x, r.y])?;
            let src = crate::complexify(&s.axis) * (b * pre);
            e += ge * src;
            h += gh * src;
        }
        Ok((e, h))
    }

    /// Specular far-field amplitude on the far side, per (x, y), relative to
    /// the incident phase.
    pub fn transmission(&self, state: &DipoleState, drive: &DriveField) -> [C64; 2] {
        self.specular(state, drive, true)
    }

    /// Specular reflected amplitude on the input side, per (x, y), relative
    /// to the incident wave's phase at z = 0.
    pub fn reflection(&self, state: &DipoleState, drive: &DriveField) -> [C64; 2] {
        self.specular(state, drive, false)
    }

    fn specular(&self, state: &DipoleState, drive: &DriveField, forward: bool) -> [C64; 2] {
        let kz = drive.kz();
        let k = self.k;
        let qx = self.q[0];
        let qy = self.q[1];
        let sg = if forward { 1.0 } else { -1.0 };
        let qbar = [qx, qy, sg * kz];
        let w = c(0.0, 1.0) / (2.0 * self.lattice.area() * k * k * kz);
        let pre = -3.0 * PI / k * self.scale();
        let mut out = if forward { [drive.polarization[0] * drive.amplitude, drive.polarization[1] * drive.amplitude] } else { [cr(0.0), cr(0.0)] };
        for (s, b) in self.sheets.iter().zip(&state.beta) {
            let d = s.axis;
            let qd = qbar[0] * d.x + qbar[1] * d.y + qbar[2] * d.z;
            // forward: e^{ikz(z−zᵢ)}/e^{ikz z}; backward: e^{−ikz(z−zᵢ)}/e^{−ikz z}
            let phase = C64::from_polar(1.0, -sg * kz * s.z);
            for (a, o) in out.iter_mut().enumerate() {
                let comp = k * k * d[a] - qbar[a] * qd;
                *o += pre * w * comp * b * phase;
            }
        }
        out
    }
}
