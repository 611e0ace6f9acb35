//! Coupled-dipole engine.
//!
//! Emitters are linearized two-level systems with amplitudes β obeying
//! `dβ/dt = i(Δ − M)β − iη`, where `M_jj = −i/2` and
//! `M_ij = −(3π/k) d̂ᵢ*·G(rᵢ − rⱼ)·d̂ⱼ`; the drive is `ηᵢ = d̂ᵢ*·E_in(rᵢ)`.
//! The scattered field of the solution is `−(3π/k) Σⱼ G(r − rⱼ) d̂ⱼ βⱼ`.

mod drive;
mod dynamics;
mod periodic;
mod realspace;

pub use drive::{DriveField, DriveKind};
pub use dynamics::{
    steady_state_with_scatterer, time_evolve, ChannelBasis, DynamicsOptions, ScattererEvent, ScattererModel, Trajectory,
    TrajectorySample,
};
pub use periodic::{PeriodicSystem, Sheet};
pub use realspace::{
    specular_transmission, steady_state, steady_state_sweep, transmitted_amplitude, RealSpaceSystem, SolveOptions, Symmetry,
};

use crate::{CVec3, Error, Result};

/// Dipole amplitudes of all emitters (layer-major order) plus the molecule.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleState {
    pub beta: Vec<crate::C64>,
    pub beta_s: Option<crate::C64>,
    pub delta: f64,
}

/// Chiral point scatterer with electric and magnetic transition dipoles.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiralScatterer {
    /// Laser detuning from the molecular transition [Γ0].
    pub delta_s: f64,
    pub gamma_e: f64,
    pub gamma_m: f64,
    pub d_hat: CVec3,
    pub mu_hat: CVec3,
    /// Position along the cavity axis [λ].
    pub z_s: f64,
    pub handedness: Handedness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Handedness {
    Right,
    Left,
    Achiral,
}

impl Handedness {
    pub fn sign(self) -> f64 {
        match self {
            Handedness::Right => 1.0,
            Handedness::Left => -1.0,
            Handedness::Achiral => 0.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Handedness::Right => "RHS",
            Handedness::Left => "LHS",
            Handedness::Achiral => "achiral",
        }
    }
}

impl ChiralScatterer {
    /// Ideal scatterer: equal electric and magnetic parts, `μ̂ = ±i d̂`,
    /// coupling to a single helicity only.
    pub fn ideal(handedness: Handedness, delta_s: f64, gamma_s: f64, z_s: f64) -> Self {
        let d = CVec3::new(crate::cr(1.0), crate::cr(0.0), crate::cr(0.0));
        let h = handedness.sign();
        Self {
            delta_s,
            gamma_e: gamma_s / 2.0,
            gamma_m: gamma_s / 2.0,
            mu_hat: d * crate::c(0.0, h),
            d_hat: d,
            z_s,
            handedness,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma_e + self.gamma_m
    }

    /// `√(γᵐγᵉ)·Im(d̂*·μ̂)`.
    pub fn rotary_strength(&self) -> f64 {
        (self.gamma_e * self.gamma_m).sqrt() * self.d_hat.conjugate().dot(&self.mu_hat).im
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma() <= 0.0 || self.gamma_e < 0.0 || self.gamma_m < 0.0 {
            return Err(Error::Invalid("scatterer linewidths must be non-negative with positive sum".into()));
        }
        for v in [&self.d_hat, &self.mu_hat] {
            if (v.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Invalid("scatterer dipole orientations must be unit vectors".into()));
            }
        }
        Ok(())
    }

    /// Same scatterer with both dipoles rotated rigidly.
    pub fn rotated(&self, r: &nalgebra::Rotation3<f64>) -> Self {
        let m = r.matrix().map(crate::cr);
        Self { d_hat: m * self.d_hat, mu_hat: m * self.mu_hat, ..self.clone() }
    }
}
