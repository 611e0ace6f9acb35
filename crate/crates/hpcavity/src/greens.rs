//! Free-space dyadic Green's tensors and their lattice sums.
//!
//! Conventions: `E(r) = G(r − r') · p` for a point dipole `p` at `r'`, with
//! `G(R) = e^{ikR}/(4πk²) [(k²/R + ik/R² − 1/R³) 1 + (−k²/R − 3ik/R² + 3/R³) R̂R̂]`.
//! The magnetic tensor returns `Z·H` in the same normalization, so electric
//! and magnetic samples can be combined directly into helicity components.

use std::f64::consts::PI;

use crate::exec::Exec;
use crate::lattice::LatticeSpec;
use crate::{c, cr, CMat3, Error, Result, Vec3, C64, I};

/// Relative tolerance for the grazing-order singularity.
pub const WOOD_TOL: f64 = 1e-10;

/// Emitter and laser wavenumbers plus an in-plane quasi-momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavenumbers {
    pub k0: f64,
    pub kl: f64,
    pub q: [f64; 2],
}

impl Default for Wavenumbers {
    fn default() -> Self {
        Self { k0: crate::K, kl: crate::K, q: [0.0, 0.0] }
    }
}

impl Wavenumbers {
    pub fn qz(&self) -> C64 {
        qz(self.k0, self.q[0] * self.q[0] + self.q[1] * self.q[1])
    }
}

/// Out-of-plane wavenumber `√(k² − q²)` on the branch with `Im ≥ 0`.
pub fn qz(k: f64, q_sq: f64) -> C64 {
    let d = k * k - q_sq;
    if d >= 0.0 {
        cr(d.sqrt())
    } else {
        c(0.0, (-d).sqrt())
    }
}

/// Electric and magnetic tensors at one separation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreensSample {
    pub electric: CMat3,
    pub magnetic: CMat3,
}

pub fn greens_sample(r: &Vec3, k: f64) -> Result<GreensSample> {
    Ok(GreensSample { electric: electric_greens(r, k)?, magnetic: magnetic_greens(r, k)? })
}

/// Full near- and far-field electric Green's tensor.
pub fn electric_greens(r: &Vec3, k: f64) -> Result<CMat3> {
    let rn = r.norm();
    if rn == 0.0 {
        return Err(Error::SelfInteraction);
    }
    Ok(electric_greens_unchecked(r, rn, k))
}

#[inline]
pub(crate) fn electric_greens_unchecked(r: &Vec3, rn: f64, k: f64) -> CMat3 {
    let (a, b) = greens_radial(rn, k);
    let u = r / rn;
    CMat3::from_fn(|i, j| {
        let diag = if i == j { a } else { C64::new(0.0, 0.0) };
        diag + b * (u[i] * u[j])
    })
}

/// Coefficients `(α, β)` with `G = α 1 + β R̂R̂`.
#[inline]
pub(crate) fn greens_radial(rn: f64, k: f64) -> (C64, C64) {
    let inv = 1.0 / rn;
    let inv2 = inv * inv;
    let inv3 = inv2 * inv;
    let pre = C64::from_polar(1.0 / (4.0 * PI * k * k), k * rn);
    let a = pre * c(k * k * inv - inv3, k * inv2);
    let b = pre * c(-k * k * inv + 3.0 * inv3, -3.0 * k * inv2);
    (a, b)
}

/// Magnetic Green's tensor: `Z·H(r) = M(r − r') · p`, antisymmetric.
pub fn magnetic_greens(r: &Vec3, k: f64) -> Result<CMat3> {
    let rn = r.norm();
    if rn == 0.0 {
        return Err(Error::SelfInteraction);
    }
    Ok(magnetic_greens_unchecked(r, rn, k))
}

#[inline]
pub(crate) fn magnetic_greens_unchecked(r: &Vec3, rn: f64, k: f64) -> CMat3 {
    let pre = c(k * rn, 1.0) * C64::from_polar(1.0 / (4.0 * PI * k * rn * rn * rn), k * rn);
    cross_matrix(r) * pre
}

/// Matrix of `v ↦ r × v`.
pub(crate) fn cross_matrix(r: &Vec3) -> CMat3 {
    let z = C64::new(0.0, 0.0);
    CMat3::new(z, cr(-r.z), cr(r.y), cr(r.z), z, cr(-r.x), cr(-r.y), cr(r.x), z)
}

/// Coupling `Ω − iΓ/2 = −(3π/k) d̂ᵢ*·G·d̂ⱼ` in units of Γ0.
pub fn dipole_coupling(di: &crate::CVec3, g: &CMat3, dj: &crate::CVec3, k: f64) -> C64 {
    -(3.0 * PI / k) * di.conjugate().dot(&(g * dj))
}

/// Result of a reciprocal-lattice sum.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSum {
    pub electric: CMat3,
    pub magnetic: CMat3,
    /// Shells actually summed.
    pub shells: usize,
    /// Relative size of the outermost shell's contribution.
    pub last_shell_rel: f64,
    pub converged: bool,
}

impl FourierSum {
    pub fn project(&self, di: &crate::CVec3, dj: &crate::CVec3) -> C64 {
        di.conjugate().dot(&(self.electric * dj))
    }
}

/// `Σ_j G(r − R_j) e^{iq·R_j}` for a plane of dipoles, evaluated via Poisson
/// summation: `(i/2Ak²) Σ_g (k²1 − q̄q̄)/q_z e^{iQ·r∥ + iq_z|z|}`, with
/// `Q = q + g` and `q̄ = (Q, sgn(z) q_z)`.
///
/// Shells `max(|m|,|n|) ≤ g_max` are included.
pub fn lattice_greens_fourier(
    q: [f64; 2],
    z: f64,
    r_par: [f64; 2],
    lattice: &LatticeSpec,
    k: f64,
    g_max: usize,
    tol_rel: f64,
) -> Result<FourierSum> {
    if z == 0.0 {
        return Err(Error::Invalid("reciprocal sum requires an out-of-plane offset z ≠ 0".into()));
    }
    let (b1, b2) = lattice.reciprocal();
    let area = lattice.area();
    let sgn = z.signum();
    let mut e_sum = CMat3::zeros();
    let mut h_sum = CMat3::zeros();
    let mut last_rel = 0.0;
    for s in 0..=g_max as i64 {
        let mut e_shell = CMat3::zeros();
        let mut h_shell = CMat3::zeros();
        for (m, n) in shell_indices(s) {
            let qx = q[0] + m as f64 * b1[0] + n as f64 * b2[0];
            let qy = q[1] + m as f64 * b1[1] + n as f64 * b2[1];
            let q_sq = qx * qx + qy * qy;
            if (k * k - q_sq).abs() < WOOD_TOL * k * k {
                return Err(Error::WoodAnomaly { order: (m, n) });
            }
            let qzv = qz(k, q_sq);
            let qbar = [cr(qx), cr(qy), qzv * sgn];
            let phase = (I * (qzv * z.abs() + qx * r_par[0] + qy * r_par[1])).exp();
            let w = I / (2.0 * area * k * k) * phase / qzv;
            let e_g = CMat3::from_fn(|i, j| {
                let d = if i == j { cr(k * k) } else { C64::new(0.0, 0.0) };
                (d - qbar[i] * qbar[j]) * w
            });
            let qk = [qbar[0] / k, qbar[1] / k, qbar[2] / k];
            let cross = nalgebra::Matrix3::new(
                C64::new(0.0, 0.0), -qk[2], qk[1], qk[2], C64::new(0.0, 0.0), -qk[0], -qk[1], qk[0], C64::new(0.0, 0.0),
            );
            e_shell += e_g;
            h_shell += cross * e_g;
        }
        e_sum += e_shell;
        h_sum += h_shell;
        let scale = max_abs(&e_sum).max(f64::MIN_POSITIVE);
        last_rel = max_abs(&e_shell) / scale;
    }
    Ok(FourierSum {
        electric: e_sum,
        magnetic: h_sum,
        shells: g_max,
        last_shell_rel: last_rel,
        converged: last_rel < tol_rel,
    })
}

/// Grow the reciprocal cutoff until the outermost shell is below `tol_rel`.
pub fn lattice_greens_fourier_auto(
    q: [f64; 2],
    z: f64,
    r_par: [f64; 2],
    lattice: &LatticeSpec,
    k: f64,
    tol_rel: f64,
    max_shells: usize,
) -> Result<FourierSum> {
    // evanescent orders decay like exp(−|g| |z|); start from an estimate
    let (b1, b2) = lattice.reciprocal();
    let bmin = b1[0].hypot(b1[1]).min(b2[0].hypot(b2[1]));
    let est = ((-tol_rel.ln() + 2.0) / (bmin * z.abs())).ceil() as usize + 1;
    let mut g_max = est.clamp(2, max_shells);
    loop {
        let s = lattice_greens_fourier(q, z, r_par, lattice, k, g_max, tol_rel)?;
        if s.converged || g_max >= max_shells {
            return Ok(s);
        }
        g_max = (g_max * 2).min(max_shells);
    }
}

/// Index pairs on the square shell `max(|m|,|n|) = s`.
pub(crate) fn shell_indices(s: i64) -> Vec<(i64, i64)> {
    if s == 0 {
        return vec![(0, 0)];
    }
    let mut v = Vec::with_capacity(8 * s as usize);
    for m in -s..=s {
        v.push((m, -s));
        v.push((m, s));
    }
    for n in (-s + 1)..s {
        v.push((-s, n));
        v.push((s, n));
    }
    v
}

/// Collective in-plane response of one infinite layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectiveRates {
    /// Ω̃(q) from the real-space sum.
    pub omega: f64,
    /// Γ̃(q) from the real-space sum.
    pub gamma: f64,
    /// Γ̃(q) from the propagating diffraction orders (exact).
    pub gamma_closed: f64,
}

impl CollectiveRates {
    /// `M_q = Ω̃ − iΓ̃/2` using the exact dissipative part.
    pub fn m_q(&self) -> C64 {
        c(self.omega, -0.5 * self.gamma_closed)
    }
}

/// Settings for the damped real-space lattice sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealSpaceSum {
    /// Gaussian damping lengths `L` in units of the shortest lattice
    /// vector, each doubling the previous one.
    pub damping: [f64; 3],
    /// Sites with `|R| > cutoff·L` are dropped (weight below `e^{−cutoff²}`).
    pub cutoff: f64,
}

impl Default for RealSpaceSum {
    fn default() -> Self {
        Self { damping: [25.0, 50.0, 100.0], cutoff: 5.5 }
    }
}

fn max_abs(m: &CMat3) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// In-plane tensor `Σ_{j≠0} G(R_j) e^{iq·R_j}` of an infinite layer.
///
/// The conditionally convergent sum is regularized by a Gaussian window
/// `exp(−(R/L)²)`; the window bias scales like `L⁻²`, so a two-step
/// Richardson extrapolation over `L, 2L, 4L` removes it.
pub fn in_plane_tensor(q: [f64; 2], lattice: &LatticeSpec, k: f64, opts: RealSpaceSum, exec: Exec) -> Result<CMat3> {
    let amin = lattice.min_spacing();
    let s: Vec<CMat3> = opts.damping.iter().map(|&l| damped_sum(q, lattice, k, l * amin, opts.cutoff, exec)).collect();
    let r1 = (s[1] * cr(4.0) - s[0]) / cr(3.0);
    let r2 = (s[2] * cr(4.0) - s[1]) / cr(3.0);
    let out = (r2 * cr(16.0) - r1) / cr(15.0);
    let spread = max_abs(&(r2 - r1));
    if !out.iter().all(|z| z.re.is_finite() && z.im.is_finite()) || spread > 1e-2 * (1.0 + max_abs(&out)) {
        return Err(Error::NonConvergent(format!(
            "real-space extrapolation spread {spread:e} for spacing |a1| = {}",
            lattice.a1[0].hypot(lattice.a1[1])
        )));
    }
    Ok(out)
}

fn damped_sum(q: [f64; 2], lattice: &LatticeSpec, k: f64, l: f64, cutoff: f64, exec: Exec) -> CMat3 {
    let rmax = cutoff * l;
    let amin = lattice.min_spacing();
    let n = (rmax / amin).ceil() as i64 + 1;
    let rows: Vec<CMat3> = exec.map((2 * n + 1) as usize, |row| {
        let m = row as i64 - n;
        let mut acc = CMat3::zeros();
        for j in -n..=n {
            if m == 0 && j == 0 {
                continue;
            }
            let x = m as f64 * lattice.a1[0] + j as f64 * lattice.a2[0];
            let y = m as f64 * lattice.a1[1] + j as f64 * lattice.a2[1];
            let rn = x.hypot(y);
            if rn > rmax {
                continue;
            }
            let w = (-(rn / l) * (rn / l)).exp();
            let phase = C64::from_polar(w, q[0] * x + q[1] * y);
            acc += electric_greens_unchecked(&Vec3::new(x, y, 0.0), rn, k) * phase;
        }
        acc
    });
    rows.into_iter().fold(CMat3::zeros(), |a, b| a + b)
}

/// Ω̃(q), Γ̃(q) for dipoles along `axis` (real unit vector in the plane).
pub fn in_plane_collective_rates(
    q: [f64; 2],
    lattice: &LatticeSpec,
    axis: &Vec3,
    k: f64,
    opts: RealSpaceSum,
    exec: Exec,
) -> Result<CollectiveRates> {
    let t = in_plane_tensor(q, lattice, k, opts, exec)?;
    let d = crate::complexify(axis);
    let m = dipole_coupling(&d, &t, &d, k) - c(0.0, 0.5);
    Ok(CollectiveRates { omega: m.re, gamma: -2.0 * m.im, gamma_closed: gamma_closed_form(q, lattice, axis, k)? })
}

/// Γ̃(q) from the propagating orders: `(3π/k) Σ_prop (k² − (d̂·Q)²)/(A k² q_z)`.
pub fn gamma_closed_form(q: [f64; 2], lattice: &LatticeSpec, axis: &Vec3, k: f64) -> Result<f64> {
    let (b1, b2) = lattice.reciprocal();
    let bmin = b1[0].hypot(b1[1]).min(b2[0].hypot(b2[1]));
    let smax = ((k + q[0].hypot(q[1])) / bmin).ceil() as i64 + 1;
    let mut total = 0.0;
    for s in 0..=smax {
        for (m, n) in shell_indices(s) {
            let qx = q[0] + m as f64 * b1[0] + n as f64 * b2[0];
            let qy = q[1] + m as f64 * b1[1] + n as f64 * b2[1];
            let q_sq = qx * qx + qy * qy;
            if (k * k - q_sq).abs() < WOOD_TOL * k * k {
                return Err(Error::WoodAnomaly { order: (m, n) });
            }
            if q_sq < k * k {
                let dq = axis.x * qx + axis.y * qy;
                total += (k * k - dq * dq) / (k * k - q_sq).sqrt();
            }
        }
    }
    Ok(3.0 * PI / k * total / (lattice.area() * k * k))
}
