//! Transfer matrices acting on `(E←, E→)` pairs, extended to two
//! polarizations as `(E←_x, E→_x, E←_y, E→_y)`.

use nalgebra::{DMatrix, Matrix2};

use crate::bilayer::cavity_transmission;
use crate::{c, cr, Error, Result, C64, I, K};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    LinearXy,
    Circular,
}

/// A 2×2 or 4×4 transfer matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferBlock {
    pub m: DMatrix<C64>,
    pub basis: Basis,
    /// Set for the Δ = Ω̃ perfect-mirror limit; `m` then holds `T/ζ` as ζ → ∞.
    pub perfect_mirror: bool,
}

impl TransferBlock {
    pub fn new(m: DMatrix<C64>, basis: Basis) -> Self {
        Self { m, basis, perfect_mirror: false }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim), Basis::LinearXy)
    }

    pub fn from2(m: Matrix2<C64>) -> Self {
        Self::new(DMatrix::from_iterator(2, 2, m.iter().copied()), Basis::LinearXy)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// `t = 1/T₂₂` of the (first) 2×2 block.
    pub fn transmission(&self) -> C64 {
        if self.perfect_mirror {
            return cr(0.0);
        }
        cr(1.0) / self.m[(1, 1)]
    }

    /// `r = −T₂₁/T₂₂`.
    pub fn reflection(&self) -> C64 {
        if self.perfect_mirror {
            return -self.m[(1, 0)] / self.m[(1, 1)];
        }
        -self.m[(1, 0)] / self.m[(1, 1)]
    }

    /// Transmission of the second 2×2 diagonal block of a 4×4 matrix.
    pub fn transmission_second(&self) -> C64 {
        cr(1.0) / self.m[(3, 3)]
    }

    pub fn det(&self) -> C64 {
        self.m.determinant()
    }

    /// Largest entry of the off-diagonal 2×2 blocks (4×4 only).
    pub fn off_block_max(&self) -> f64 {
        let mut mx = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                if (i < 2) != (j < 2) {
                    mx = mx.max(self.m[(i, j)].norm());
                }
            }
        }
        mx
    }
}

/// Mirror polarizability `ζ_m = Γ̃/[2(Ω̃ − Δ)]`.
pub fn mirror_polarizability(delta: f64, omega: f64, gamma: f64) -> f64 {
    gamma / (2.0 * (omega - delta))
}

/// Block `[[1+iζ, iζ], [−iζ, 1−iζ]]`.
pub fn polarizability_block(zeta: C64) -> Matrix2<C64> {
    Matrix2::new(cr(1.0) + I * zeta, I * zeta, -I * zeta, cr(1.0) - I * zeta)
}

/// Single metasurface; at `Δ = Ω̃` a flagged perfect-mirror limit.
pub fn metasurface_block(delta: f64, omega: f64, gamma: f64) -> TransferBlock {
    if delta == omega {
        let mut b = TransferBlock::from2(Matrix2::new(I, I, -I, -I));
        b.perfect_mirror = true;
        return b;
    }
    TransferBlock::from2(polarizability_block(cr(mirror_polarizability(delta, omega, gamma))))
}

/// Free propagation over `ell`: `diag(e^{ikℓ}, e^{−ikℓ})`.
pub fn free_block(ell: f64) -> TransferBlock {
    TransferBlock::from2(Matrix2::new(C64::from_polar(1.0, K * ell), cr(0.0), cr(0.0), C64::from_polar(1.0, -K * ell)))
}

/// Ordered product `B₁·B₂·…`.
pub fn compose(blocks: &[TransferBlock]) -> Result<TransferBlock> {
    let first = blocks.first().ok_or_else(|| Error::Invalid("nothing to compose".into()))?;
    let mut acc = first.clone();
    for b in &blocks[1..] {
        if b.dim() != acc.dim() {
            return Err(Error::Dimension(format!("{}×{} with {}×{}", acc.dim(), acc.dim(), b.dim(), b.dim())));
        }
        if b.basis != acc.basis {
            return Err(Error::BasisMismatch);
        }
        acc = TransferBlock { m: &acc.m * &b.m, basis: acc.basis, perfect_mirror: acc.perfect_mirror || b.perfect_mirror };
    }
    Ok(acc)
}

/// Cavity transmission from `T_m T_f T_m`, referenced to the cavity's
/// optical path (the propagation phase `e^{ikℓ}` is removed).
pub fn cavity_transmission_tm(delta: f64, ell: f64, omega: f64, gamma: f64) -> Result<C64> {
    let m = metasurface_block(delta, omega, gamma);
    let total = compose(&[m.clone(), free_block(ell), m])?;
    Ok(total.transmission() * C64::from_polar(1.0, -K * ell))
}

/// Helicity-preserving mirror: x̂ layer, free space ℓ_m, ŷ layer.
pub fn hp_mirror_block(delta: f64, omega: f64, gamma: f64, ell_m: f64) -> HpBlock {
    let tm = polarizability_block(cr(mirror_polarizability(delta, omega, gamma)));
    let tf = Matrix2::new(C64::from_polar(1.0, K * ell_m), cr(0.0), cr(0.0), C64::from_polar(1.0, -K * ell_m));
    let one = Matrix2::<C64>::identity();
    let a = block_diag(&tm, &one);
    let f = block_diag(&tf, &tf);
    let b = block_diag(&one, &tm);
    let frac = (ell_m - 0.25).rem_euclid(1.0);
    let is_hp = frac.min(1.0 - frac) < 1e-12;
    HpBlock { block: TransferBlock::new(a * f * b, Basis::LinearXy), helicity_preserving: is_hp }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HpBlock {
    pub block: TransferBlock,
    /// `kℓ_m = π/2 + 2πn`.
    pub helicity_preserving: bool,
}

fn block_diag(a: &Matrix2<C64>, b: &Matrix2<C64>) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            m[(i, j)] = a[(i, j)];
            m[(i + 2, j + 2)] = b[(i, j)];
        }
    }
    m
}

/// Basis change from `(E←_x, E→_x, E←_y, E→_y)` to `(E←_+, E→_+, E←_−, E→_−)`.
pub fn circular_basis() -> DMatrix<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (o, z, i) = (cr(s), cr(0.0), c(0.0, s));
    DMatrix::from_row_slice(4, 4, &[o, z, o, z, z, o, z, o, -i, z, i, z, z, i, z, -i])
}

/// `U†·T·U` with the basis tag flipped.
pub fn change_basis(block: &TransferBlock, u: &DMatrix<C64>) -> Result<TransferBlock> {
    if block.dim() != 4 || u.nrows() != 4 || u.ncols() != 4 {
        return Err(Error::Dimension("basis change needs 4×4 matrices".into()));
    }
    let dev = (u * u.adjoint() - DMatrix::identity(4, 4)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if dev > 1e-12 {
        return Err(Error::NonUnitary(dev));
    }
    let basis = match block.basis {
        Basis::LinearXy => Basis::Circular,
        Basis::Circular => Basis::LinearXy,
    };
    Ok(TransferBlock { m: u.adjoint() * &block.m * u, basis, perfect_mirror: block.perfect_mirror })
}

/// Scatterer transfer data.
#[derive(Debug, Clone, PartialEq)]
pub struct ScattererBlock {
    /// `ζ_s = −(γ_s/2)/(iγ_s/2 + Δ_s)`.
    pub zeta_s: C64,
    /// `δℓ_s = −arctan(γ_s/2Δ_s)/k`, `None` for a resonant scatterer.
    pub delta_ell: Option<f64>,
    pub block: TransferBlock,
}

pub fn scatterer_block(delta_s: f64, gamma_s: f64) -> ScattererBlock {
    let zeta = -cr(gamma_s / 2.0) / c(delta_s, gamma_s / 2.0);
    let delta_ell = if delta_s == 0.0 { None } else { Some(-(gamma_s / (2.0 * delta_s)).atan() / K) };
    ScattererBlock { zeta_s: zeta, delta_ell, block: TransferBlock::from2(polarizability_block(zeta)) }
}

/// Dispersive-limit effective length `δℓ_s`.
pub fn effective_length_shift(delta_s: f64, gamma_s: f64) -> Result<f64> {
    scatterer_block(delta_s, gamma_s).delta_ell.ok_or(Error::ResonantScatterer)
}

/// Difference between the exact single-pass transmission `1/T₂₂` of the
/// scatterer block and the length-shift phase `e^{ikδℓ_s}`.
///
/// The off-diagonal (backscattering) entries are first order in `γ_s/Δ_s`
/// and are not part of the dispersive description; the forward amplitude
/// agrees to second order.
pub fn dispersive_limit_error(delta_s: f64, gamma_s: f64) -> Result<f64> {
    let s = scatterer_block(delta_s, gamma_s);
    let dl = s.delta_ell.ok_or(Error::ResonantScatterer)?;
    Ok((s.block.transmission() - C64::from_polar(1.0, K * dl)).norm())
}

/// `diag(e^{ikδℓ}, e^{−ikδℓ})`.
pub fn length_shift_block(delta_ell: f64) -> TransferBlock {
    free_block(delta_ell)
}

/// Relative cavity phase at resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseShift {
    pub phi: f64,
    /// Set when `δℓ_s = 0` at a half-wavelength length: the returned value
    /// is the one-sided limit, `+1` from above and `−1` from below.
    pub side: Option<i8>,
}

/// `φ = arg[t_c(ℓ+δℓ)/t_c(ℓ)]` with the resonance condition imposed at ℓ.
///
/// Evaluated as `−arg(sec²(kℓ) − e^{2ikδℓ})`, which is the exact ratio and
/// stays finite as ℓ → nλ/2 where both transmissions vanish.
/// `side_hint` picks the one-sided limit at `δℓ = 0`.
pub fn chiral_phase_shift(ell: f64, delta_ell: f64, side_hint: i8) -> Result<PhaseShift> {
    let th = K * ell;
    let cs = th.cos();
    if cs.abs() < 1e-12 {
        return Err(Error::InfiniteResonance);
    }
    let at_node = th.sin().abs() < 1e-15 * th.abs().max(1.0);
    if delta_ell == 0.0 {
        if at_node {
            let s = if side_hint >= 0 { 1 } else { -1 };
            return Ok(PhaseShift { phi: s as f64 * std::f64::consts::FRAC_PI_2, side: Some(s) });
        }
        return Ok(PhaseShift { phi: 0.0, side: None });
    }
    let z = cr(1.0 / (cs * cs)) - C64::from_polar(1.0, 2.0 * K * delta_ell);
    Ok(PhaseShift { phi: -z.arg(), side: None })
}

/// Same quantity from the explicit transmission ratio (fails where
/// `t_c(ℓ) = 0`).
pub fn chiral_phase_shift_direct(ell: f64, delta_ell: f64, omega: f64, gamma: f64) -> Result<f64> {
    let delta = crate::bilayer::resonance_detuning(ell, omega, gamma)?;
    let t0 = cavity_transmission(delta, ell, omega, gamma)?;
    if t0.norm() < 1e-300 {
        return Err(Error::ZeroTransmission);
    }
    let t1 = cavity_transmission(delta, ell + delta_ell, omega, gamma)?;
    Ok((t1 / t0).arg())
}

#[cfg(test)]
mod tests {
    use super::*;

    const G0: f64 = 0.373_019_397_871_629_7;

    #[test]
    fn metasurface_identities() {
        for delta in [-1.3, -0.2, 0.05, 0.7] {
            let b = metasurface_block(delta, 0.01, G0);
            assert!((b.det() - cr(1.0)).norm() < 1e-12);
            let t = b.transmission();
            let r = b.reflection();
            let t5 = cr(1.0) + c(0.0, G0 / 2.0) / c(0.01 - delta, -G0 / 2.0);
            assert!((t - t5).norm() < 1e-12);
            assert!((t - (cr(1.0) + r)).norm() < 1e-12);
            assert!((t.norm_sqr() + r.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_mirror_limit_is_flagged() {
        let b = metasurface_block(0.0, 0.0, G0);
        assert!(b.perfect_mirror);
        assert_eq!(b.transmission(), cr(0.0));
        assert!((b.reflection().norm() - 1.0).abs() < 1e-15);
        let far = metasurface_block(1e9, 0.0, G0);
        assert!((far.m.clone() - DMatrix::identity(2, 2)).iter().all(|z| z.norm() < 1e-9));
    }

    #[test]
    fn tm_route_matches_closed_form() {
        let t = cavity_transmission_tm(-0.07, 5.05, 0.0, G0).unwrap();
        let e = cavity_transmission(-0.07, 5.05, 0.0, G0).unwrap();
        assert!((t - e).norm() < 1e-12);
    }

    #[test]
    fn hp_block_is_block_diagonal() {
        let u = circular_basis();
        for ell_m in [0.25, 1.25] {
            let hp = hp_mirror_block(0.03, 0.0, G0, ell_m);
            assert!(hp.helicity_preserving);
            let cb = change_basis(&hp.block, &u).unwrap();
            assert!(cb.off_block_max() < 1e-12);
            // each block equals T_m · diag(i, −i)
            let tm = polarizability_block(cr(mirror_polarizability(0.03, 0.0, G0)));
            let expect = tm * Matrix2::new(I, cr(0.0), cr(0.0), -I);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((cb.m[(i, j)] - expect[(i, j)]).norm() < 1e-12);
                    assert!((cb.m[(i + 2, j + 2)] - expect[(i, j)]).norm() < 1e-12);
                }
            }
        }
        let bad = hp_mirror_block(0.03, 0.0, G0, 0.5);
        assert!(!bad.helicity_preserving);
        assert!(change_basis(&bad.block, &u).unwrap().off_block_max() > 1e-2);
    }

    #[test]
    fn basis_change_round_trip() {
        let u = circular_basis();
        assert!((&u * u.adjoint() - DMatrix::identity(4, 4)).iter().all(|z| z.norm() < 1e-15));
        let hp = hp_mirror_block(-0.2, 0.0, G0, 0.5).block;
        let there = change_basis(&hp, &u).unwrap();
        let back = TransferBlock { m: &u * &there.m * u.adjoint(), basis: Basis::LinearXy, perfect_mirror: false };
        assert!((back.m - &hp.m).iter().all(|z| z.norm() < 1e-12));
        let not_unitary = DMatrix::from_diagonal_element(4, 4, cr(2.0));
        assert!(matches!(change_basis(&hp, &not_unitary), Err(Error::NonUnitary(_))));
    }

    #[test]
    fn compose_checks_dimensions_and_basis() {
        let a = TransferBlock::identity(2);
        let b = TransferBlock::identity(4);
        assert!(matches!(compose(&[a.clone(), b]), Err(Error::Dimension(_))));
        let mut c4 = TransferBlock::identity(4);
        c4.basis = Basis::Circular;
        assert!(matches!(compose(&[TransferBlock::identity(4), c4]), Err(Error::BasisMismatch)));
        assert_eq!(compose(&[a.clone(), a.clone()]).unwrap().m, DMatrix::identity(2, 2));
    }

    #[test]
    fn scatterer_length_shift_example() {
        let s = scatterer_block(10.0, 1.0);
        let dl = s.delta_ell.unwrap();
        assert!((dl + 0.05f64.atan() / K).abs() < 1e-16);
        assert!((dl + 7.95e-3).abs() < 1e-5);
        assert!(matches!(effective_length_shift(0.0, 1.0), Err(Error::ResonantScatterer)));
        let none = scatterer_block(10.0, 0.0);
        assert_eq!(none.delta_ell, Some(0.0));
        assert!((none.block.m.clone() - DMatrix::identity(2, 2)).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn phase_shift_matches_direct_ratio() {
        for &(ell, dl) in &[(12.505, -7.95e-3), (12.52, 3e-3), (5.05, -1e-2), (12.49, -7.95e-3)] {
            let a = chiral_phase_shift(ell, dl, 0).unwrap().phi;
            let b = chiral_phase_shift_direct(ell, dl, 0.0, G0).unwrap();
            assert!((a - b).abs() < 1e-10, "ℓ={ell}: {a} vs {b}");
        }
    }

    #[test]
    fn phase_jump_at_half_wavelength() {
        let eps = 1e-6 / K;
        let lo = chiral_phase_shift(12.5, -eps, 0).unwrap().phi;
        let hi = chiral_phase_shift(12.5, eps, 0).unwrap().phi;
        assert!((lo + std::f64::consts::FRAC_PI_2).abs() < 1e-3);
        assert!((hi - std::f64::consts::FRAC_PI_2).abs() < 1e-3);
        let at = chiral_phase_shift(12.5, 0.0, -1).unwrap();
        assert_eq!(at.side, Some(-1));
    }
}
