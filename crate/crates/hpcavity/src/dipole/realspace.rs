//! Dense real-space solve for finite arrays.

use std::collections::HashMap;
use std::f64::consts::PI;

use faer::linalg::solvers::Solve;
use faer::Mat;

use super::{DipoleState, DriveField};
use crate::exec::Exec;
use crate::greens::{electric_greens_unchecked, magnetic_greens_unchecked};
use crate::lattice::CavityStack;
use crate::{c, cr, CVec3, Error, Result, Vec3, C64};

/// Relative residual accepted for a steady-state solve.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Symmetry {
    /// Solve the full system.
    None,
    /// Use the x → −x, y → −y mirror symmetry when geometry and drive allow.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveOptions {
    pub symmetry: Symmetry,
    pub exec: Exec,
}

/// One symmetry sector: unknowns are orbit representatives.
#[derive(Debug, Clone)]
struct Sector {
    /// Drive component (0 = x, 1 = y) that feeds this sector.
    pol: usize,
    reps: Vec<usize>,
    /// For each representative, the orbit members with their sign.
    orbits: Vec<Vec<(usize, f64)>>,
    m: Mat<C64>,
}

/// Coupling matrices of a finite stack, reusable across detunings.
#[derive(Debug, Clone)]
pub struct RealSpaceSystem {
    pub positions: Vec<Vec3>,
    pub axes: Vec<CVec3>,
    pub k: f64,
    sectors: Vec<Sector>,
    full: Option<Mat<C64>>,
}

impl RealSpaceSystem {
    pub fn new(stack: &CavityStack, drive: &DriveField, opts: SolveOptions) -> Result<Self> {
        drive.validate()?;
        let mut positions = Vec::with_capacity(stack.emitter_count());
        let mut axes = Vec::with_capacity(stack.emitter_count());
        for layer in &stack.layers {
            for p in &layer.positions {
                positions.push(*p);
                axes.push(crate::complexify(&layer.dipole_axis));
            }
        }
        let k = drive.k;
        let symmetric = opts.symmetry == Symmetry::Auto && drive.is_mirror_symmetric();
        if symmetric {
            if let Some(sectors) = build_sectors(&positions, &axes, drive, k, opts.exec) {
                return Ok(Self { positions, axes, k, sectors, full: None });
            }
        }
        let n = positions.len();
        let rows = opts.exec.map(n, |i| (0..n).map(|j| coupling(&positions, &axes, i, j, k)).collect::<Vec<_>>());
        let full = Mat::from_fn(n, n, |i, j| rows[i][j]);
        Ok(Self { positions, axes, k, sectors: Vec::new(), full: Some(full) })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Number of unknowns actually factorized (largest block).
    pub fn reduced_size(&self) -> usize {
        match &self.full {
            Some(m) => m.nrows(),
            None => self.sectors.iter().map(|s| s.reps.len()).max().unwrap_or(0),
        }
    }

    pub fn uses_symmetry(&self) -> bool {
        self.full.is_none()
    }

    /// Steady state at one detuning.
    pub fn solve(&self, drive: &DriveField, delta: f64) -> Result<DipoleState> {
        let n = self.len();
        if n == 0 {
            return Ok(DipoleState { beta: Vec::new(), beta_s: None, delta });
        }
        let eta: Vec<C64> = (0..n).map(|j| self.axes[j].conjugate().dot(&drive.e_field(&self.positions[j]))).collect();
        if let Some(m) = &self.full {
            let beta = solve_dense(m, delta, &eta)?;
            return Ok(DipoleState { beta, beta_s: None, delta });
        }
        let mut beta = vec![C64::new(0.0, 0.0); n];
        for s in &self.sectors {
            if drive.polarization[s.pol].norm() == 0.0 {
                continue;
            }
            let rhs: Vec<C64> = s.reps.iter().map(|&r| eta_component(&self.axes[r], drive, &self.positions[r], s.pol)).collect();
            let x = solve_dense(&s.m, delta, &rhs)?;
            for (orbit, xr) in s.orbits.iter().zip(&x) {
                for &(j, sign) in orbit {
                    beta[j] += xr * sign;
                }
            }
        }
        Ok(DipoleState { beta, beta_s: None, delta })
    }

    /// Scattered plus incident electric and `Z·H` fields at `r`.
    pub fn fields(&self, state: &DipoleState, drive: &DriveField, r: &Vec3) -> Result<(CVec3, CVec3)> {
        let mut e = drive.e_field(r);
        let mut h = drive.h_field(r);
        let pre = -3.0 * PI / self.k;
        for (j, p) in self.positions.iter().enumerate() {
            let d = r - p;
            let rn = d.norm();
            if rn < 1e-12 {
                return Err(Error::OnEmitter);
            }
            let src = self.axes[j] * (state.beta[j] * pre);
            e += electric_greens_unchecked(&d, rn, self.k) * src;
            h += magnetic_greens_unchecked(&d, rn, self.k) * src;
        }
        Ok((e, h))
    }
}

fn coupling(positions: &[Vec3], axes: &[CVec3], i: usize, j: usize, k: f64) -> C64 {
    if i == j {
        return c(0.0, -0.5);
    }
    let d = positions[i] - positions[j];
    let g = electric_greens_unchecked(&d, d.norm(), k);
    -(3.0 * PI / k) * axes[i].conjugate().dot(&(g * axes[j]))
}

fn eta_component(axis: &CVec3, drive: &DriveField, r: &Vec3, pol: usize) -> C64 {
    let mut single = *drive;
    single.polarization = [cr(0.0), cr(0.0)];
    single.polarization[pol] = drive.polarization[pol];
    axis.conjugate().dot(&single.e_field(r))
}

fn solve_dense(m: &Mat<C64>, delta: f64, rhs: &[C64]) -> Result<Vec<C64>> {
    let n = m.nrows();
    let a = Mat::from_fn(n, n, |i, j| if i == j { cr(delta) - m[(i, j)] } else { -m[(i, j)] });
    let b = Mat::from_fn(n, 1, |i, _| rhs[i]);
    let lu = a.partial_piv_lu();
    let x = lu.solve(&b);
    let bn = b.norm_l2();
    let res = (&a * &x - &b).norm_l2();
    let rel = if bn > 0.0 { res / bn } else { res };
    if !rel.is_finite() || rel > RESIDUAL_TOL {
        let xn = x.norm_l2();
        let est = if bn > 0.0 { xn * a.norm_l2() / bn } else { f64::INFINITY };
        return Err(Error::Singular(est));
    }
    Ok((0..n).map(|i| x[(i, 0)]).collect())
}

fn key(layer_z: f64, x: f64, y: f64, axis: &CVec3) -> (i64, i64, i64, i64) {
    let q = |v: f64| (v * 1e7).round() as i64;
    let ax = if axis.x.norm() > 0.5 { 0 } else { 1 };
    (q(layer_z), q(x), q(y), ax)
}

/// Builds the two polarization sectors, or `None` when the geometry is not
/// mirror symmetric or the dipoles are not along x̂ / ŷ.
fn build_sectors(positions: &[Vec3], axes: &[CVec3], drive: &DriveField, k: f64, exec: Exec) -> Option<Vec<Sector>> {
    let axis_index = |a: &CVec3| -> Option<usize> {
        if (a.x - cr(1.0)).norm() < 1e-12 && a.y.norm() < 1e-12 && a.z.norm() < 1e-12 {
            Some(0)
        } else if (a.y - cr(1.0)).norm() < 1e-12 && a.x.norm() < 1e-12 && a.z.norm() < 1e-12 {
            Some(1)
        } else {
            None
        }
    };
    let mut lookup = HashMap::with_capacity(positions.len());
    for (j, p) in positions.iter().enumerate() {
        axis_index(&axes[j])?;
        lookup.insert(key(p.z, p.x, p.y, &axes[j]), j);
    }
    let eps = 1e-9;
    let mut sectors = Vec::new();
    for pol in 0..2 {
        if drive.polarization[pol].norm() == 0.0 {
            continue;
        }
        let mut reps = Vec::new();
        let mut orbits = Vec::new();
        for (j, p) in positions.iter().enumerate() {
            if p.x < -eps || p.y < -eps {
                continue;
            }
            let ax = axis_index(&axes[j])?;
            let even = ax == pol;
            let on_x = p.x.abs() <= eps;
            let on_y = p.y.abs() <= eps;
            if !even && (on_x || on_y) {
                // odd-odd amplitude vanishes on a mirror plane
                continue;
            }
            let mut orbit = Vec::with_capacity(4);
            for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
                if (on_x && sx < 0.0) || (on_y && sy < 0.0) {
                    continue;
                }
                let idx = *lookup.get(&key(p.z, sx * p.x, sy * p.y, &axes[j]))?;
                // sag must be mirror symmetric too
                if (positions[idx].z - p.z).abs() > 1e-12 {
                    return None;
                }
                let sign = if even { 1.0 } else { sx * sy };
                orbit.push((idx, sign));
            }
            reps.push(j);
            orbits.push(orbit);
        }
        let rows = exec.map(reps.len(), |a| {
            let i = reps[a];
            orbits
                .iter()
                .map(|orbit| orbit.iter().map(|&(j, s)| coupling(positions, axes, i, j, k) * s).sum::<C64>())
                .collect::<Vec<_>>()
        });
        let m = Mat::from_fn(reps.len(), reps.len(), |a, b| rows[a][b]);
        sectors.push(Sector { pol, reps, orbits, m });
    }
    Some(sectors)
}

/// Steady state of a finite stack at one detuning.
pub fn steady_state(stack: &CavityStack, drive: &DriveField, delta: f64, opts: SolveOptions) -> Result<DipoleState> {
    RealSpaceSystem::new(stack, drive, opts)?.solve(drive, delta)
}

/// Steady states over a detuning grid, sharing the coupling matrix.
pub fn steady_state_sweep(
    stack: &CavityStack,
    drive: &DriveField,
    deltas: &[f64],
    opts: SolveOptions,
) -> Result<(RealSpaceSystem, Vec<DipoleState>)> {
    let sys = RealSpaceSystem::new(stack, drive, opts)?;
    let states = opts.exec.map_slice(deltas, |&d| sys.solve(drive, d)).into_iter().collect::<Result<Vec<_>>>()?;
    Ok((sys, states))
}

/// Total on-axis field at `z`, divided by the incident phase `e^{ikz}`,
/// as (x, y) components.
pub fn transmitted_amplitude(sys: &RealSpaceSystem, state: &DipoleState, drive: &DriveField, z: f64) -> Result<[C64; 2]> {
    let r = Vec3::new(0.0, 0.0, z);
    let (e, _) = sys.fields(state, drive, &r)?;
    let phase = C64::from_polar(1.0, -drive.k * z);
    Ok([e.x * phase, e.y * phase])
}

/// Specular (q = 0) transmission of a finite stack: each layer radiates
/// its mean amplitude as an infinite sheet with collective rate `gamma`.
///
/// Finite arrays also excite q ≠ 0 modes; these add near-field structure
/// on the axis but drop out of the plane-wave component.
pub fn specular_transmission(stack: &CavityStack, state: &DipoleState, drive: &DriveField, gamma: f64) -> Result<[C64; 2]> {
    if state.beta.len() != stack.emitter_count() {
        return Err(Error::Dimension(format!("{} amplitudes for {} emitters", state.beta.len(), stack.emitter_count())));
    }
    let mut t = [drive.polarization[0] * drive.amplitude, drive.polarization[1] * drive.amplitude];
    let mut offset = 0;
    for layer in &stack.layers {
        let n = layer.len();
        if n == 0 {
            continue;
        }
        let mean = state.beta[offset..offset + n].iter().sum::<C64>() / n as f64;
        let amp = c(0.0, -0.5 * gamma) * mean * C64::from_polar(1.0, -drive.k * layer.z_center);
        t[0] += amp * layer.dipole_axis.x;
        t[1] += amp * layer.dipole_axis.y;
        offset += n;
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_bilayer, build_hp_cavity, build_square_array, CavityStack};

    #[test]
    fn single_emitter_on_resonance() {
        let arr = build_square_array(0.8, 1, 0.0, f64::INFINITY, Vec3::x());
        let stack = CavityStack::new(vec![arr], 0.0, 0.0).unwrap();
        let drive = DriveField::plane_wave(DriveField::linear_x());
        let s = steady_state(&stack, &drive, 0.0, SolveOptions::default()).unwrap();
        let expect = cr(1.0) / c(0.0, 0.5);
        assert!((s.beta[0] - expect).norm() < 1e-14);
    }

    #[test]
    fn empty_stack_transmits_incident_wave() {
        let stack = CavityStack::empty();
        let drive = DriveField::plane_wave(DriveField::rcp());
        let sys = RealSpaceSystem::new(&stack, &drive, SolveOptions::default()).unwrap();
        let s = sys.solve(&drive, 0.3).unwrap();
        let t = transmitted_amplitude(&sys, &s, &drive, 4.2).unwrap();
        assert!((t[0] - drive.polarization[0]).norm() < 1e-15);
        assert!((t[1] - drive.polarization[1]).norm() < 1e-15);
    }

    #[test]
    fn symmetry_reduction_matches_full_solve() {
        for n_side in [3usize, 4] {
            let stack = build_hp_cavity(3.37, 0, 0.8, n_side, 50.0).unwrap();
            let drive = DriveField::gaussian(DriveField::rcp(), 1.5, 1.7);
            let full = SolveOptions { symmetry: Symmetry::None, exec: Exec::Sequential };
            let sys_f = RealSpaceSystem::new(&stack, &drive, full).unwrap();
            let sys_r = RealSpaceSystem::new(&stack, &drive, SolveOptions::default()).unwrap();
            assert!(sys_r.uses_symmetry());
            assert!(sys_r.reduced_size() < sys_f.reduced_size());
            let a = sys_f.solve(&drive, 0.13).unwrap();
            let b = sys_r.solve(&drive, 0.13).unwrap();
            let diff: f64 = a.beta.iter().zip(&b.beta).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-10, "n_side {n_side}: {diff}");
        }
    }

    #[test]
    fn linearity_in_drive_amplitude() {
        let stack = build_bilayer(2.3, 0.8, 3, f64::INFINITY, Vec3::x()).unwrap();
        let d1 = DriveField::plane_wave(DriveField::linear_x());
        let d2 = DriveField { amplitude: 3.5, ..d1 };
        let s1 = steady_state(&stack, &d1, -0.2, SolveOptions::default()).unwrap();
        let s2 = steady_state(&stack, &d2, -0.2, SolveOptions::default()).unwrap();
        for (a, b) in s1.beta.iter().zip(&s2.beta) {
            assert!((a * 3.5 - b).norm() < 1e-12 * b.norm().max(1.0));
        }
    }
}
