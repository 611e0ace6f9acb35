//! Input-output model with one cavity mode and two metasurface modes.
//!
//! Frequencies are measured from the collective metasurface resonance, so
//! ω₂ = ω₃ = 0 and the cavity mode sits at ω₁ = 2ω_c.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3, Matrix3x2};

use crate::bilayer::cavity_transmission;
use crate::exec::Exec;
use crate::{cr, Error, Result, C64, I, K};

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledModesModel {
    pub omega: [f64; 3],
    pub omega_c: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub w: Matrix3x2<f64>,
}

/// Model for a bilayer of length `ell` with collective rate `gamma`.
pub fn build_model(ell: f64, gamma: f64) -> Result<CoupledModesModel> {
    if !(gamma > 0.0) {
        return Err(Error::Invalid(format!("Γ̃ = {gamma} must be positive")));
    }
    let t = (K * ell).tan();
    let omega_c = -0.5 * gamma * t;
    if omega_c.abs() < 1e-14 * gamma || !omega_c.is_finite() {
        return Err(Error::DegenerateModel);
    }
    let kappa = gamma + 4.0 * omega_c * omega_c / gamma;
    let a = (kappa / (4.0 * PI)).sqrt();
    let b = (gamma / (2.0 * PI)).sqrt();
    let w = Matrix3x2::new(a, a, b, 0.0, 0.0, b);
    Ok(CoupledModesModel { omega: [2.0 * omega_c, 0.0, 0.0], omega_c, kappa, gamma, w })
}

/// `S(ω) = 1 − 2πi W† D⁻¹(ω) W`.
pub fn scattering_matrix(model: &CoupledModesModel, omega: f64) -> Result<Matrix2<C64>> {
    let w = model.w.map(cr);
    let wwt = w * w.transpose();
    let mut d = Matrix3::<C64>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            d[(i, j)] = I * PI * wwt[(i, j)];
        }
        d[(i, i)] += cr(omega - model.omega[i]);
    }
    let lu = d.lu();
    let x = lu.solve(&w).ok_or(Error::Singular(0.0))?;
    if !x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Singular(0.0));
    }
    Ok(Matrix2::identity() - w.transpose() * x * (2.0 * PI * I))
}

/// Cavity transmission `S₁₂`.
pub fn transmission(model: &CoupledModesModel, omega: f64) -> Result<C64> {
    Ok(scattering_matrix(model, omega)?[(0, 1)])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    /// `[ω_c − κ, ω_c + κ]` with the model's κ.
    #[default]
    ModelKappa,
    /// `[ω_c − Γ̃|tan kℓ|, ω_c + Γ̃|tan kℓ|]`.
    Linewidth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    pub omega: Vec<f64>,
    pub t_cm: Vec<C64>,
    pub t_tm: Vec<C64>,
    /// `e^{iφ₀}·t_CM − t_TM` per point.
    pub deviation: Vec<C64>,
    /// Global phase `φ₀ = arg(t_TM(ω_c)/t_CM(ω_c))` applied before comparing.
    pub phase_offset: f64,
    pub max: f64,
    pub rms: f64,
}

/// Point-by-point comparison with the transfer-matrix transmission.
///
/// The two routes fix the output phase reference differently; the constant
/// offset is taken at the cavity resonance where both have unit modulus.
pub fn compare_to_transfer_matrix(
    model: &CoupledModesModel,
    ell: f64,
    window: Window,
    n_points: usize,
    exec: Exec,
) -> Result<DeviationReport> {
    if n_points < 2 {
        return Err(Error::Invalid("need at least two window points".into()));
    }
    let half = match window {
        Window::ModelKappa => model.kappa,
        Window::Linewidth => crate::bilayer::linewidth(ell, model.gamma),
    };
    let lo = model.omega_c - half;
    let step = 2.0 * half / (n_points - 1) as f64;
    let omega: Vec<f64> = (0..n_points).map(|i| lo + step * i as f64).collect();
    let ref_cm = transmission(model, model.omega_c)?;
    let ref_tm = cavity_transmission(model.omega_c, ell, 0.0, model.gamma)?;
    let phase_offset = (ref_tm / ref_cm).arg();
    let rot = C64::from_polar(1.0, phase_offset);
    let pairs = exec.map_slice(&omega, |&w| -> Result<(C64, C64)> {
        Ok((transmission(model, w)?, cavity_transmission(w, ell, 0.0, model.gamma)?))
    });
    let mut t_cm = Vec::with_capacity(n_points);
    let mut t_tm = Vec::with_capacity(n_points);
    for p in pairs {
        let (a, b) = p?;
        t_cm.push(a);
        t_tm.push(b);
    }
    let deviation: Vec<C64> = t_cm.iter().zip(&t_tm).map(|(a, b)| rot * a - b).collect();
    let max = deviation.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let rms = (deviation.iter().map(|z| z.norm_sqr()).sum::<f64>() / n_points as f64).sqrt();
    Ok(DeviationReport { omega, t_cm, t_tm, deviation, phase_offset, max, rms })
}

#[cfg(test)]
mod tests {
    use super::*;

    const G0: f64 = 0.373_019_397_871_629_7;

    #[test]
    fn model_example() {
        let m = build_model(5.01, 0.373).unwrap();
        assert!((m.omega_c + 0.01173).abs() < 1e-5);
        assert!((m.kappa - 0.3745).abs() < 1e-4);
        let wwt = m.w * m.w.transpose();
        assert!((PI * wwt[(0, 0)] - m.kappa / 2.0).abs() < 1e-14);
        assert_eq!(m.omega[1], 0.0);
    }

    #[test]
    fn degenerate_length_rejected() {
        assert!(matches!(build_model(5.0, G0), Err(Error::DegenerateModel)));
    }

    #[test]
    fn zero_and_unit_transmission() {
        for ell in [5.1, 5.05, 5.01, 4.93] {
            let m = build_model(ell, G0).unwrap();
            assert!(transmission(&m, 0.0).unwrap().norm() < 1e-10);
            assert!((transmission(&m, m.omega_c).unwrap().norm_sqr() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn unitary_on_real_axis() {
        let m = build_model(5.05, G0).unwrap();
        for i in 0..50 {
            let w = -1.0 + 0.04 * i as f64;
            let s = scattering_matrix(&m, w).unwrap();
            let e = s * s.adjoint() - Matrix2::identity();
            assert!(e.iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn deviation_shrinks_toward_half_wavelength() {
        let mut last = f64::INFINITY;
        for ell in [5.1, 5.05, 5.01] {
            let m = build_model(ell, G0).unwrap();
            let r = compare_to_transfer_matrix(&m, ell, Window::ModelKappa, 201, Exec::Sequential).unwrap();
            assert!((r.phase_offset.abs() - PI).abs() < 1e-9);
            assert!(r.max <= last);
            last = r.max;
        }
        let m = build_model(5.01, G0).unwrap();
        let r = compare_to_transfer_matrix(&m, 5.01, Window::Linewidth, 201, Exec::Sequential).unwrap();
        assert!(r.max < 0.02);
    }
}
