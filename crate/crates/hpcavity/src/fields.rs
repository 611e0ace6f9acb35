//! Field reconstruction and Riemann–Silberstein maps.
//!
//! Magnetic fields are carried as `Z·H`, so `G± = (E ± iZH)/√2` needs no
//! impedance factor.

use crate::dipole::{DipoleState, DriveField, PeriodicSystem, RealSpaceSystem};
use crate::exec::Exec;
use crate::{CVec3, Error, Result, Vec3, I};

/// Anything that can evaluate `(E, Z·H)` from solved dipole amplitudes.
pub trait FieldSource: Sync {
    fn fields(&self, state: &DipoleState, drive: &DriveField, r: &Vec3) -> Result<(CVec3, CVec3)>;
}

impl FieldSource for RealSpaceSystem {
    fn fields(&self, state: &DipoleState, drive: &DriveField, r: &Vec3) -> Result<(CVec3, CVec3)> {
        RealSpaceSystem::fields(self, state, drive, r)
    }
}

impl FieldSource for PeriodicSystem {
    fn fields(&self, state: &DipoleState, drive: &DriveField, r: &Vec3) -> Result<(CVec3, CVec3)> {
        PeriodicSystem::fields(self, state, drive, r)
    }
}

/// Incident plus scattered `(E, Z·H)` at `r`.
pub fn field_at<S: FieldSource + ?Sized>(src: &S, state: &DipoleState, drive: &DriveField, r: &Vec3) -> Result<(CVec3, CVec3)> {
    src.fields(state, drive, r)
}

/// `(G₊, G₋)`.
pub fn rs_vectors(e: &CVec3, zh: &CVec3) -> (CVec3, CVec3) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let ih = zh * I;
    ((e + ih) * crate::cr(s), (e - ih) * crate::cr(s))
}

/// Rectangle in the plane `x = const`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapPlane {
    pub x: f64,
    pub y: [f64; 2],
    pub z: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RsFieldMap {
    pub ys: Vec<f64>,
    pub zs: Vec<f64>,
    /// Row-major in `(y, z)`, z fastest.
    pub g_plus: Vec<CVec3>,
    pub g_minus: Vec<CVec3>,
    pub i_in: f64,
}

/// One output row of a map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapRow {
    pub y: f64,
    pub z: f64,
    pub g_plus: f64,
    pub g_minus: f64,
    pub chirality: f64,
}

impl RsFieldMap {
    pub fn len(&self) -> usize {
        self.g_plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g_plus.is_empty()
    }

    /// Normalized `|G±|²/I_in` and their difference.
    pub fn rows(&self) -> Vec<MapRow> {
        let nz = self.zs.len();
        (0..self.len())
            .map(|i| {
                let p = self.g_plus[i].norm_squared() / self.i_in;
                let m = self.g_minus[i].norm_squared() / self.i_in;
                MapRow { y: self.ys[i / nz], z: self.zs[i % nz], g_plus: p, g_minus: m, chirality: p - m }
            })
            .collect()
    }

    /// Largest `|G₋|²/|G₊|²` over points with `z` in `range`.
    pub fn max_minus_over_plus(&self, range: [f64; 2]) -> f64 {
        self.rows()
            .iter()
            .filter(|r| r.z > range[0] && r.z < range[1])
            .map(|r| r.g_minus / r.g_plus)
            .fold(0.0, f64::max)
    }
}

fn axis(range: [f64; 2], per_lambda: f64) -> Vec<f64> {
    let n = (((range[1] - range[0]) * per_lambda).round() as usize).max(1);
    (0..=n).map(|i| range[0] + (range[1] - range[0]) * i as f64 / n as f64).collect()
}

/// `|G±|²` on a regular grid, normalized so that the incident helicity
/// component of a unit plane wave maps to 1.
pub fn rs_map<S: FieldSource + ?Sized>(
    src: &S,
    state: &DipoleState,
    drive: &DriveField,
    plane: MapPlane,
    points_per_lambda: f64,
    exec: Exec,
) -> Result<RsFieldMap> {
    if !(points_per_lambda > 0.0) {
        return Err(Error::Invalid("map resolution must be positive".into()));
    }
    let ys = axis(plane.y, points_per_lambda);
    let zs = axis(plane.z, points_per_lambda);
    let nz = zs.len();
    let vals = exec.map(ys.len() * nz, |i| {
        let r = Vec3::new(plane.x, ys[i / nz], zs[i % nz]);
        let (e, h) = src.fields(state, drive, &r)?;
        Ok(rs_vectors(&e, &h))
    });
    let mut g_plus = Vec::with_capacity(vals.len());
    let mut g_minus = Vec::with_capacity(vals.len());
    for v in vals {
        let (p, m) = v?;
        g_plus.push(p);
        g_minus.push(m);
    }
    // a unit-amplitude helicity eigenstate has |G±|² = 2|E|²
    Ok(RsFieldMap { ys, zs, g_plus, g_minus, i_in: 2.0 * drive.amplitude * drive.amplitude })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{CavityStack, LatticeSpec};
    use crate::dipole::{Sheet, SolveOptions};

    #[test]
    fn rcp_plane_wave_has_single_helicity() {
        let drive = DriveField::plane_wave(DriveField::rcp());
        let sys = RealSpaceSystem::new(&CavityStack::empty(), &drive, SolveOptions::default()).unwrap();
        let st = sys.solve(&drive, 0.0).unwrap();
        let plane = MapPlane { x: 0.0, y: [-1.0, 1.0], z: [-1.0, 1.0] };
        let map = rs_map(&sys, &st, &drive, plane, 4.0, Exec::Sequential).unwrap();
        for r in map.rows() {
            assert!((r.g_plus - 1.0).abs() < 1e-12);
            assert!(r.g_minus < 1e-28);
        }
        let (e, h) = field_at(&sys, &st, &drive, &Vec3::new(0.1, 0.2, 0.3)).unwrap();
        let khat = CVec3::new(crate::cr(0.0), crate::cr(0.0), crate::cr(1.0));
        assert!((khat.cross(&e) - h).norm() < 1e-15);
    }

    #[test]
    fn isotropic_mirror_reverses_helicity() {
        let lat = LatticeSpec::square(0.8);
        let drive = DriveField::plane_wave(DriveField::rcp());
        let sheets = vec![Sheet { z: 0.0, axis: Vec3::x() }, Sheet { z: 0.0, axis: Vec3::y() }];
        let sys = PeriodicSystem::from_sheets(sheets, lat, [0.0, 0.0], false, Exec::Sequential).unwrap();
        let omega = sys.coupling_matrix()[(0, 0)].re;
        let st = sys.solve(&drive, omega).unwrap();
        // reflected field only: subtract the incident wave in front
        let r = Vec3::new(0.0, 0.0, -3.3);
        let (e, h) = field_at(&sys, &st, &drive, &r).unwrap();
        let (ei, hi) = (drive.e_field(&r), drive.h_field(&r));
        let (gp, gm) = rs_vectors(&(e - ei), &(h - hi));
        assert!(gp.norm() < 1e-9);
        assert!(gm.norm() > 0.5);
    }

    #[test]
    fn single_linear_layer_reflects_both_helicities() {
        let lat = LatticeSpec::square(0.8);
        let drive = DriveField::plane_wave(DriveField::rcp());
        let sys = PeriodicSystem::from_sheets(vec![Sheet { z: 0.0, axis: Vec3::x() }], lat, [0.0, 0.0], false, Exec::Sequential).unwrap();
        let st = sys.solve(&drive, 0.3).unwrap();
        let r = Vec3::new(0.0, 0.0, -2.1);
        let (e, h) = field_at(&sys, &st, &drive, &r).unwrap();
        let (gp, gm) = rs_vectors(&(e - drive.e_field(&r)), &(h - drive.h_field(&r)));
        assert!((gp.norm() - gm.norm()).abs() < 1e-12);
    }
}
