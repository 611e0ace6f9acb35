use crate::{c, cr, CVec3, Error, Result, Vec3, C64, I};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriveKind {
    PlaneWave,
    /// Paraxial Gaussian beam along +z focused at `focus_z`.
    Gaussian { waist: f64, focus_z: f64 },
}

/// Incident laser field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveField {
    pub kind: DriveKind,
    /// Normalized transverse polarization (E_x, E_y).
    pub polarization: [C64; 2],
    pub k_parallel: [f64; 2],
    pub amplitude: f64,
    pub k: f64,
}

impl DriveField {
    pub fn plane_wave(polarization: [C64; 2]) -> Self {
        Self { kind: DriveKind::PlaneWave, polarization, k_parallel: [0.0, 0.0], amplitude: 1.0, k: crate::K }
    }

    pub fn gaussian(polarization: [C64; 2], waist: f64, focus_z: f64) -> Self {
        Self { kind: DriveKind::Gaussian { waist, focus_z }, ..Self::plane_wave(polarization) }
    }

    /// Positive helicity for propagation along +z.
    pub fn rcp() -> [C64; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        [cr(s), c(0.0, s)]
    }

    pub fn lcp() -> [C64; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        [cr(s), c(0.0, -s)]
    }

    pub fn linear_x() -> [C64; 2] {
        [cr(1.0), cr(0.0)]
    }

    pub fn linear_y() -> [C64; 2] {
        [cr(0.0), cr(1.0)]
    }

    pub fn with_polarization(self, polarization: [C64; 2]) -> Self {
        Self { polarization, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let n = (self.polarization[0].norm_sqr() + self.polarization[1].norm_sqr()).sqrt();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("drive polarization must be normalized (|E| = {n})")));
        }
        if self.k_parallel[0].hypot(self.k_parallel[1]) > self.k {
            return Err(Error::Invalid("in-plane wavevector exceeds k".into()));
        }
        if let DriveKind::Gaussian { waist, .. } = self.kind {
            if waist <= 0.0 {
                return Err(Error::Invalid("beam waist must be positive".into()));
            }
            if self.k_parallel != [0.0, 0.0] {
                return Err(Error::Invalid("Gaussian drive is along the axis only".into()));
            }
        }
        Ok(())
    }

    pub fn kz(&self) -> f64 {
        let q2 = self.k_parallel[0].powi(2) + self.k_parallel[1].powi(2);
        (self.k * self.k - q2).sqrt()
    }

    /// Full transverse polarization vector including the longitudinal part
    /// needed for oblique plane waves.
    fn pol3(&self) -> CVec3 {
        let kz = self.kz();
        let ez = -(self.polarization[0] * self.k_parallel[0] + self.polarization[1] * self.k_parallel[1]) / kz;
        CVec3::new(self.polarization[0], self.polarization[1], ez)
    }

    /// Incident electric field.
    pub fn e_field(&self, r: &Vec3) -> CVec3 {
        self.pol3() * (self.envelope(r) * self.amplitude)
    }

    /// Incident `Z·H = k̂ × E`.
    pub fn h_field(&self, r: &Vec3) -> CVec3 {
        let kz = self.kz();
        let khat = CVec3::new(cr(self.k_parallel[0] / self.k), cr(self.k_parallel[1] / self.k), cr(kz / self.k));
        khat.cross(&self.e_field(r))
    }

    /// Scalar spatial factor, `e^{ik·r}` for plane waves.
    pub fn envelope(&self, r: &Vec3) -> C64 {
        match self.kind {
            DriveKind::PlaneWave => {
                C64::from_polar(1.0, self.k_parallel[0] * r.x + self.k_parallel[1] * r.y + self.kz() * r.z)
            }
            DriveKind::Gaussian { waist, focus_z } => {
                let zr = 0.5 * self.k * waist * waist;
                let q = c(r.z - focus_z, -zr);
                let rho2 = r.x * r.x + r.y * r.y;
                c(0.0, -zr) / q * (I * self.k * rho2 / (2.0 * q)).exp() * C64::from_polar(1.0, self.k * r.z)
            }
        }
    }

    /// True if the drive is symmetric under x → −x and y → −y up to the
    /// polarization character.
    pub fn is_mirror_symmetric(&self) -> bool {
        self.k_parallel == [0.0, 0.0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_waist_profile() {
        let d = DriveField::gaussian(DriveField::linear_x(), 8.0, 5.0);
        let on = d.envelope(&Vec3::new(0.0, 0.0, 5.0));
        let off = d.envelope(&Vec3::new(8.0, 0.0, 5.0));
        assert!((on.norm() - 1.0).abs() < 1e-14);
        assert!((off.norm() - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn oblique_plane_wave_is_transverse() {
        let mut d = DriveField::plane_wave(DriveField::rcp());
        d.k_parallel = [1.3, -0.4];
        let kvec = CVec3::new(cr(1.3), cr(-0.4), cr(d.kz()));
        assert!(kvec.dot(&d.e_field(&Vec3::zeros())).norm() < 1e-14);
    }
}
