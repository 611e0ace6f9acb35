//! Closed-form Fourier-space solution of a two-layer cavity.
//!
//! Left layer at z = 0, right layer at z = ℓ, dipoles along x̂, drive
//! `E_in e^{ikz}` with unit amplitude. The specular order carries the far
//! field; evanescent orders optionally enter the interlayer coupling and the
//! intracavity field.

use std::f64::consts::PI;

use crate::exec::Exec;
use crate::greens::{in_plane_collective_rates, lattice_greens_fourier_auto, CollectiveRates, RealSpaceSum};
use crate::lattice::LatticeSpec;
use crate::{c, cr, CVec3, Error, Result, Vec3, C64, I, K};

const FOURIER_TOL: f64 = 1e-12;
const FOURIER_MAX_SHELLS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilayerResponse {
    /// `Ω̃ − iΓ̃/2`.
    pub m_q: C64,
    pub m_q_lr: C64,
    pub beta_l: C64,
    pub beta_r: C64,
    pub t_c: C64,
    pub r_c: C64,
}

/// Specular-only interlayer coupling `−i(Γ̃/2)e^{ikℓ}`.
pub fn specular_lr(ell: f64, gamma: f64) -> C64 {
    c(0.0, -0.5 * gamma) * C64::from_polar(1.0, K * ell)
}

/// Interlayer coupling including evanescent orders, for x̂ dipoles.
pub fn interlayer_coupling(q: [f64; 2], ell: f64, lattice: &LatticeSpec) -> Result<C64> {
    let s = lattice_greens_fourier_auto(q, ell, [0.0, 0.0], lattice, K, FOURIER_TOL, FOURIER_MAX_SHELLS)?;
    let d = crate::complexify(&Vec3::x());
    Ok(-(3.0 * PI / K) * s.project(&d, &d))
}

/// Amplitudes for given `M_q` (with Im = −Γ̃/2) and interlayer coupling.
pub fn bilayer_amplitudes_with(delta: f64, ell: f64, m_q: C64, m_lr: C64) -> Result<BilayerResponse> {
    let gamma = -2.0 * m_q.im;
    let x = cr(delta) - m_q;
    let den = x * x - m_lr * m_lr;
    let scale = x.norm_sqr() + m_lr.norm_sqr();
    if den.norm() <= 1e-15 * scale {
        return Err(Error::AtPole(den.norm()));
    }
    let eta_l = cr(1.0);
    let eta_r = C64::from_polar(1.0, K * ell);
    let beta_l = (x * eta_l + m_lr * eta_r) / den;
    let beta_r = (x * eta_r + m_lr * eta_l) / den;
    let back = C64::from_polar(1.0, -K * ell);
    let t_c = cr(1.0) - c(0.0, 0.5 * gamma) * (beta_l + back * beta_r);
    let r_c = -c(0.0, 0.5 * gamma) * (beta_l + eta_r * beta_r);
    Ok(BilayerResponse { m_q, m_q_lr: m_lr, beta_l, beta_r, t_c, r_c })
}

/// Collective rates of the lattice at `q` for x̂ dipoles.
pub fn layer_rates(q: [f64; 2], lattice: &LatticeSpec, exec: Exec) -> Result<CollectiveRates> {
    in_plane_collective_rates(q, lattice, &Vec3::x(), K, RealSpaceSum::default(), exec)
}

/// Full bilayer response from the lattice geometry.
pub fn bilayer_amplitudes(
    delta: f64,
    ell: f64,
    q: [f64; 2],
    lattice: &LatticeSpec,
    include_evanescent: bool,
    exec: Exec,
) -> Result<BilayerResponse> {
    let rates = layer_rates(q, lattice, exec)?;
    let m_lr = if include_evanescent { interlayer_coupling(q, ell, lattice)? } else { specular_lr(ell, rates.gamma_closed) };
    bilayer_amplitudes_with(delta, ell, rates.m_q(), m_lr)
}

/// Cavity transmission
/// `t_c = (Δ−Ω̃)² / [(Δ−Ω̃+iΓ̃/2)² + (Γ̃²/4)e^{2ikℓ}]`.
pub fn cavity_transmission(delta: f64, ell: f64, omega: f64, gamma: f64) -> Result<C64> {
    let x = delta - omega;
    let num = cr(x * x);
    // (x + iΓ/2)² + (Γ²/4)e^{2iθ} with e^{2iθ} − 1 = 2i sinθ e^{iθ}, which
    // avoids cancellation near θ = nπ
    let th = K * ell;
    let den = c(x * x, gamma * x) + I * C64::from_polar(0.5 * gamma * gamma * th.sin(), th);
    if x == 0.0 && (K * ell).sin().abs() < 1e-9 {
        return Err(Error::Degenerate(format!("Δ = Ω̃ with ℓ = {ell} at a half-wavelength multiple")));
    }
    let scale = x * x + 0.25 * gamma * gamma;
    if den.norm() <= 1e-15 * scale {
        return Err(Error::AtPole(den.norm()));
    }
    Ok(num / den)
}

/// Reflection amplitude from the same specular amplitudes.
pub fn cavity_reflection(delta: f64, ell: f64, omega: f64, gamma: f64) -> Result<C64> {
    Ok(bilayer_amplitudes_with(delta, ell, c(omega, -0.5 * gamma), specular_lr(ell, gamma))?.r_c)
}

/// Detuning with unit transmission: `Δ = Ω̃ − (Γ̃/2) tan(kℓ)`.
pub fn resonance_detuning(ell: f64, omega: f64, gamma: f64) -> Result<f64> {
    let th = K * ell;
    if th.cos().abs() < 1e-12 {
        return Err(Error::InfiniteResonance);
    }
    Ok(omega - 0.5 * gamma * th.tan())
}

/// Cavity length near `n_half·λ/2` that puts the resonance at `delta`.
pub fn resonant_length(n_half: u32, delta: f64, omega: f64, gamma: f64) -> f64 {
    0.5 * n_half as f64 + (2.0 * (omega - delta) / gamma).atan() / K
}

/// Distance between transmission zero and maximum, `Γ̃|tan(kℓ)|`.
pub fn linewidth(ell: f64, gamma: f64) -> f64 {
    gamma * (K * ell).tan().abs()
}

/// Electric field on a line through the cavity, at lateral offset `r_par`
/// from a lattice site.
pub fn intracavity_profile(
    delta: f64,
    ell: f64,
    lattice: &LatticeSpec,
    z_grid: &[f64],
    r_par: [f64; 2],
    include_evanescent: bool,
    exec: Exec,
) -> Result<Vec<CVec3>> {
    let rates = layer_rates([0.0, 0.0], lattice, exec)?;
    intracavity_profile_with(delta, ell, lattice, rates, z_grid, r_par, include_evanescent, exec)
}

#[allow(clippy::too_many_arguments)]
pub fn intracavity_profile_with(
    delta: f64,
    ell: f64,
    lattice: &LatticeSpec,
    rates: CollectiveRates,
    z_grid: &[f64],
    r_par: [f64; 2],
    include_evanescent: bool,
    exec: Exec,
) -> Result<Vec<CVec3>> {
    let m_lr = if include_evanescent { interlayer_coupling([0.0, 0.0], ell, lattice)? } else { specular_lr(ell, rates.gamma_closed) };
    let resp = bilayer_amplitudes_with(delta, ell, rates.m_q(), m_lr)?;
    let d = crate::complexify(&Vec3::x());
    let pre = -3.0 * PI / K;
    let gamma = rates.gamma_closed;
    exec.map_slice(z_grid, |&z| {
        let inc = d * C64::from_polar(1.0, K * z);
        if include_evanescent {
            let mut e = inc;
            for (zl, b) in [(0.0, resp.beta_l), (ell, resp.beta_r)] {
                if z == zl {
                    return Err(Error::OnEmitter);
                }
                let s = lattice_greens_fourier_auto([0.0, 0.0], z - zl, r_par, lattice, K, FOURIER_TOL, FOURIER_MAX_SHELLS)?;
                e += s.electric * d * (b * pre);
            }
            Ok(e)
        } else {
            let sc = -c(0.0, 0.5 * gamma)
                * (resp.beta_l * C64::from_polar(1.0, K * z.abs()) + resp.beta_r * C64::from_polar(1.0, K * (z - ell).abs()));
            Ok(inc + d * sc)
        }
    })
    .into_iter()
    .collect()
}
