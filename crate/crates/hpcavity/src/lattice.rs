//! Metasurface geometry: Bravais lattices, finite patches and cavity stacks.

use std::f64::consts::TAU;

use crate::{Error, Result, Vec3};

/// Two-dimensional Bravais lattice in the xy plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub a1: [f64; 2],
    pub a2: [f64; 2],
}

impl LatticeSpec {
    pub fn new(a1: [f64; 2], a2: [f64; 2]) -> Result<Self> {
        let s = Self { a1, a2 };
        if s.area() <= 0.0 || !s.area().is_finite() {
            return Err(Error::Invalid("primitive vectors must span a positive area".into()));
        }
        Ok(s)
    }

    pub fn square(a: f64) -> Self {
        Self { a1: [a, 0.0], a2: [0.0, a] }
    }

    /// Unit-cell area `|a1 × a2|`.
    pub fn area(&self) -> f64 {
        (self.a1[0] * self.a2[1] - self.a1[1] * self.a2[0]).abs()
    }

    /// Reciprocal vectors with `bᵢ·aⱼ = 2πδᵢⱼ`.
    pub fn reciprocal(&self) -> ([f64; 2], [f64; 2]) {
        let det = self.a1[0] * self.a2[1] - self.a1[1] * self.a2[0];
        let s = TAU / det;
        ([self.a2[1] * s, -self.a2[0] * s], [-self.a1[1] * s, self.a1[0] * s])
    }

    pub fn min_spacing(&self) -> f64 {
        let l1 = self.a1[0].hypot(self.a1[1]);
        let l2 = self.a2[0].hypot(self.a2[1]);
        // the reduced cell may be shorter than either primitive vector
        let s = (self.a1[0] + self.a2[0]).hypot(self.a1[1] + self.a2[1]);
        let d = (self.a1[0] - self.a2[0]).hypot(self.a1[1] - self.a2[1]);
        l1.min(l2).min(s).min(d)
    }
}

/// Finite patch of identical two-level emitters.
#[derive(Debug, Clone, PartialEq)]
pub struct EmitterArray {
    pub positions: Vec<Vec3>,
    pub dipole_axis: Vec3,
    pub z_center: f64,
    /// `f64::INFINITY` for a flat layer.
    pub curvature_radius: f64,
    /// Underlying lattice, used by the periodic emulation.
    pub lattice: LatticeSpec,
}

impl EmitterArray {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Which way a curved layer bulges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sag {
    /// Edges move toward +z (left mirror, concave toward the cavity).
    Forward,
    /// Edges move toward −z (right mirror).
    Backward,
}

/// Centered `n_side × n_side` square patch with paraboloidal sag.
///
/// For even `n_side` the patch is offset by `a/2`, so no emitter sits on the
/// optical axis.
pub fn build_square_array(a: f64, n_side: usize, z_center: f64, curvature_radius: f64, dipole_axis: Vec3) -> EmitterArray {
    build_square_array_sag(a, n_side, z_center, curvature_radius, dipole_axis, Sag::Forward)
}

pub fn build_square_array_sag(
    a: f64,
    n_side: usize,
    z_center: f64,
    curvature_radius: f64,
    dipole_axis: Vec3,
    sag: Sag,
) -> EmitterArray {
    let half = (n_side as f64 - 1.0) / 2.0;
    let sign = match sag {
        Sag::Forward => 1.0,
        Sag::Backward => -1.0,
    };
    let mut positions = Vec::with_capacity(n_side * n_side);
    for i in 0..n_side {
        for j in 0..n_side {
            let x = (i as f64 - half) * a;
            let y = (j as f64 - half) * a;
            let dz = if curvature_radius.is_finite() { sign * (x * x + y * y) / (2.0 * curvature_radius) } else { 0.0 };
            positions.push(Vec3::new(x, y, z_center + dz));
        }
    }
    EmitterArray {
        positions,
        dipole_axis: dipole_axis.normalize(),
        z_center,
        curvature_radius,
        lattice: LatticeSpec::square(a),
    }
}

/// Intracavity scatterer placement attached to a stack.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityStack {
    pub layers: Vec<EmitterArray>,
    /// Cavity length ℓ (distance between the two mirrors' first layers).
    pub ell: f64,
    /// Intra-mirror spacing ℓ_m (zero for single-layer mirrors).
    pub ell_m: f64,
}

impl CavityStack {
    pub fn new(layers: Vec<EmitterArray>, ell: f64, ell_m: f64) -> Result<Self> {
        for w in layers.windows(2) {
            if w[1].z_center <= w[0].z_center {
                return Err(Error::Invalid("layer z-positions must be strictly increasing".into()));
            }
        }
        Ok(Self { layers, ell, ell_m })
    }

    pub fn empty() -> Self {
        Self { layers: Vec::new(), ell: 0.0, ell_m: 0.0 }
    }

    pub fn z_positions(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.z_center).collect()
    }

    pub fn emitter_count(&self) -> usize {
        self.layers.iter().map(|l| l.len()).sum()
    }

    pub fn last_z(&self) -> f64 {
        self.layers.iter().flat_map(|l| l.positions.iter().map(|p| p.z)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn first_z(&self) -> f64 {
        self.layers.iter().flat_map(|l| l.positions.iter().map(|p| p.z)).fold(f64::INFINITY, f64::min)
    }
}

/// Two parallel layers with a common dipole axis at z = 0 and z = ℓ.
pub fn build_bilayer(ell: f64, a: f64, n_side: usize, curvature_radius: f64, axis: Vec3) -> Result<CavityStack> {
    if ell <= 0.0 {
        return Err(Error::MirrorsOverlap { ell, ell_m: 0.0 });
    }
    let left = build_square_array_sag(a, n_side, 0.0, curvature_radius, axis, Sag::Forward);
    let right = build_square_array_sag(a, n_side, ell, curvature_radius, axis, Sag::Backward);
    CavityStack::new(vec![left, right], ell, 0.0)
}

/// Helicity-preserving cavity: axes (x̂, ŷ, x̂, ŷ) at z = (0, ℓ_m, ℓ, ℓ+ℓ_m)
/// with ℓ_m = (n_m + 1/4)λ.
pub fn build_hp_cavity(ell: f64, n_m: u32, a: f64, n_side: usize, curvature_radius: f64) -> Result<CavityStack> {
    let ell_m = n_m as f64 + 0.25;
    build_hp_cavity_with_spacing(ell, ell_m, a, n_side, curvature_radius)
}

/// Like [`build_hp_cavity`] but with an arbitrary mirror spacing.
pub fn build_hp_cavity_with_spacing(ell: f64, ell_m: f64, a: f64, n_side: usize, curvature_radius: f64) -> Result<CavityStack> {
    if ell <= ell_m {
        return Err(Error::MirrorsOverlap { ell, ell_m });
    }
    let (x, y) = (Vec3::x(), Vec3::y());
    let layers = vec![
        build_square_array_sag(a, n_side, 0.0, curvature_radius, x, Sag::Forward),
        build_square_array_sag(a, n_side, ell_m, curvature_radius, y, Sag::Forward),
        build_square_array_sag(a, n_side, ell, curvature_radius, x, Sag::Backward),
        build_square_array_sag(a, n_side, ell + ell_m, curvature_radius, y, Sag::Backward),
    ];
    CavityStack::new(layers, ell, ell_m)
}

/// Mirror curvature radius whose symmetric two-mirror resonator of length
/// `ell` has a fundamental Gaussian mode of waist `w0`:
/// `w0² = (λ/2π)·√(ℓ(2R − ℓ))`.
pub fn curvature_for_waist(ell: f64, w0: f64) -> Result<f64> {
    if !(ell > 0.0 && w0 > 0.0) {
        return Err(Error::Invalid("cavity length and waist must be positive".into()));
    }
    let s = TAU * w0 * w0;
    Ok(0.5 * (s * s / ell + ell))
}

#[cfg(test)]
mod tests {
    #[test]
    fn curvature_from_waist() {
        let r = curvature_for_waist(12.505, 8.0).unwrap();
        assert!((r - 6471.81).abs() < 0.01, "{r}");
        let w2 = (TAU.recip() * (12.505 * (2.0 * r - 12.505)).sqrt()).sqrt();
        assert!((w2 - 8.0).abs() < 1e-12);
    }
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_emitter_patch() {
        let arr = build_square_array(0.8, 1, 2.0, f64::INFINITY, Vec3::x());
        assert_eq!(arr.positions, vec![Vec3::new(0.0, 0.0, 2.0)]);
    }

    #[test]
    fn sag_of_thirty_by_thirty_patch() {
        let arr = build_square_array(0.8, 30, 0.0, 3.5e8, Vec3::x());
        let max = arr.positions.iter().map(|p| p.z).fold(0.0, f64::max);
        let expect = 2.0 * (14.5f64 * 0.8).powi(2) / (2.0 * 3.5e8);
        assert_relative_eq!(max, expect, max_relative = 1e-12);
        assert!(max > 3.8e-7 && max < 3.9e-7);
    }

    #[test]
    fn even_patch_is_off_axis() {
        let arr = build_square_array(0.8, 40, 0.0, f64::INFINITY, Vec3::x());
        assert_eq!(arr.len(), 1600);
        assert!(arr.positions.iter().all(|p| p.x.hypot(p.y) > 0.5));
        let cx: f64 = arr.positions.iter().map(|p| p.x).sum();
        assert!(cx.abs() < 1e-9);
    }

    #[test]
    fn hp_stack_layout() {
        let s = build_hp_cavity(12.505, 1, 0.8, 1, f64::INFINITY).unwrap();
        assert_eq!(s.z_positions(), vec![0.0, 1.25, 12.505, 13.755]);
        let axes: Vec<Vec3> = s.layers.iter().map(|l| l.dipole_axis).collect();
        assert_eq!(axes, vec![Vec3::x(), Vec3::y(), Vec3::x(), Vec3::y()]);
        let s0 = build_hp_cavity(3.0, 0, 0.8, 1, f64::INFINITY).unwrap();
        assert_eq!(s0.ell_m, 0.25);
    }

    #[test]
    fn overlapping_mirrors_rejected() {
        assert!(matches!(build_hp_cavity(1.0, 1, 0.8, 1, f64::INFINITY), Err(Error::MirrorsOverlap { .. })));
    }

    #[test]
    fn reciprocal_vectors_of_oblique_lattice() {
        let lat = LatticeSpec::new([0.8, 0.0], [0.3, 0.7]).unwrap();
        let (b1, b2) = lat.reciprocal();
        let dot = |u: [f64; 2], v: [f64; 2]| u[0] * v[0] + u[1] * v[1];
        assert!((dot(b1, lat.a1) - TAU).abs() < 1e-12);
        assert!(dot(b1, lat.a2).abs() < 1e-12);
        assert!(dot(b2, lat.a1).abs() < 1e-12);
        assert!((dot(b2, lat.a2) - TAU).abs() < 1e-12);
    }
}
