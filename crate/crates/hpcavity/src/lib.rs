//! Helicity-preserving cavities built from stacked atomic metasurfaces.
//!
//! Lengths are measured in units of the laser wavelength λ and rates in the
//! single-emitter linewidth Γ0, so `k = 2π` and the bare emitter decays at 1.
//!
//! Three routes to the same cavity observables live side by side:
//! real-space coupled dipoles ([`dipole`]), Fourier-space closed forms
//! ([`bilayer`]) and transfer matrices ([`transfer`]). The [`coupled_modes`]
//! model, field reconstruction ([`fields`]) and the homodyne sensing
//! pipeline ([`sensing`]) build on top of them.

pub mod bilayer;
pub mod coupled_modes;
pub mod dipole;
pub mod error;
pub mod exec;
pub mod fields;
pub mod greens;
pub mod lattice;
pub mod sensing;
pub mod transfer;

pub use error::{Error, Result};
pub use exec::Exec;

use num_complex::Complex64;

/// Complex scalar used throughout.
pub type C64 = Complex64;
/// Complex 3-vector (field sample or dipole orientation).
pub type CVec3 = nalgebra::Vector3<C64>;
/// Real 3-vector (position).
pub type Vec3 = nalgebra::Vector3<f64>;
/// Complex 3×3 tensor.
pub type CMat3 = nalgebra::Matrix3<C64>;

/// Wavenumber of light with the unit wavelength.
pub const K: f64 = std::f64::consts::TAU;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub(crate) fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Promote a real vector to a complex one.
pub fn complexify(v: &Vec3) -> CVec3 {
    v.map(cr)
}
