//! Time evolution of an emulated stack with an intracavity chiral scatterer.
//!
//! Works in the specular (far-field, normal-incidence) channel picture:
//! every element `e` is driven by `ηₑ = uₑ(n̂)†·E` from waves travelling
//! along `n̂ = ±ẑ` and radiates `E = −(i/2) vₑ(n̂) bₑ` into direction `n̂`.
//! For a sheet `u = d̂`, `v = Γ̃ d̂`; for the molecule
//! `u(n̂)* = √γᵉ d̂* + √γᵐ n̂×μ̂*` and `v(n̂) = √γᵉ d̂ + √γᵐ n̂×μ̂`.

use nalgebra::{DMatrix, DVector, Vector2};

use super::{ChiralScatterer, DipoleState, DriveField, PeriodicSystem};
use crate::sensing::rotational_average_renormalization;
use crate::{c, cr, Error, Result, C64, I};

type V2 = Vector2<C64>;

/// How the scatterer enters the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScattererModel {
    /// Explicit molecular amplitude with the given orientation (forward and
    /// backward scattering, orientation dependent).
    Dipole,
    /// Orientation-averaged dispersive limit: the molecule is eliminated and
    /// acts as a helicity-dependent optical path `δℓ_ξ` on every crossing.
    #[default]
    Dispersive,
}

/// Scatterer present for `t_enter ≤ t < t_exit`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScattererEvent {
    pub t_enter: f64,
    pub t_exit: f64,
    pub scatterer: ChiralScatterer,
}

/// Basis for reported output amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelBasis {
    Linear,
    Helicity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsOptions {
    /// Largest RK4 step [1/Γ0].
    pub dt: f64,
    pub model: ScattererModel,
    /// Start from the scatterer-free steady state instead of β = 0.
    pub start_in_steady_state: bool,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        Self { dt: 0.02, model: ScattererModel::Dispersive, start_in_steady_state: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: DipoleState,
    /// Transmitted far field (x, y) relative to the incident phase.
    pub transmitted: [C64; 2],
    /// Transmission per helicity (ξ = +, −); in the dispersive model the
    /// single-pass phase of the scatterer is referenced out, so this is the
    /// cavity transmission along the optical path.
    pub t_helicity: [C64; 2],
    pub scatterer_present: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

/// Helicity basis vector for propagation along `dir·ẑ`.
pub(crate) fn helicity_vector(xi: f64, dir: f64) -> V2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    V2::new(cr(s), c(0.0, s * xi * dir))
}

/// Projector `Σ_ξ e^{iε_ξ} ê_ξ ê_ξ†` for one propagation direction.
fn helicity_phase_operator(eps: [f64; 2], dir: f64) -> nalgebra::Matrix2<C64> {
    let mut p = nalgebra::Matrix2::zeros();
    for (idx, xi) in [1.0, -1.0].iter().enumerate() {
        let e = helicity_vector(*xi, dir);
        p += e * e.adjoint() * C64::from_polar(1.0, eps[idx]);
    }
    p
}

/// Single-pass phases `(ε₊, ε₋)` of a dispersive scatterer.
pub(crate) fn dispersive_phases(s: &ChiralScatterer) -> Result<[f64; 2]> {
    if s.delta_s == 0.0 {
        return Err(Error::ResonantScatterer);
    }
    let r = |xi: f64| rotational_average_renormalization(s, xi);
    Ok([-(r(1.0) / (4.0 * s.delta_s)).atan(), -(r(-1.0) / (4.0 * s.delta_s)).atan()])
}

struct Element {
    z: f64,
    u: [V2; 2],
    v: [V2; 2],
    /// Δ used on the diagonal (laser for sheets, Δ_s for the molecule).
    molecule: bool,
}

fn transverse(v: &crate::CVec3) -> V2 {
    V2::new(v.x, v.y)
}

fn dir_index(dir: f64) -> usize {
    if dir > 0.0 {
        0
    } else {
        1
    }
}

/// Static linear system `y' = A y + f` for one scatterer configuration.
struct Segment {
    a: DMatrix<C64>,
    f: DVector<C64>,
    /// Output map: transmitted field = `out0 + out · y`.
    out0: V2,
    out: Vec<V2>,
    /// Phase referenced out of each helicity channel.
    eps: [f64; 2],
}

fn build_segment(
    sys: &PeriodicSystem,
    drive: &DriveField,
    delta: f64,
    scatterer: Option<&ChiralScatterer>,
    model: ScattererModel,
) -> Result<Segment> {
    let gamma = match sys.coupling_matrix().nrows() {
        0 => 0.0,
        _ => sys.specular_rate() * sys_scale(sys),
    };
    let mut elems: Vec<Element> = sys
        .sheets
        .iter()
        .map(|s| {
            let d = V2::new(cr(s.axis.x), cr(s.axis.y));
            Element { z: s.z, u: [d, d], v: [d * cr(gamma), d * cr(gamma)], molecule: false }
        })
        .collect();
    let n_sheets = elems.len();
    let mut eps = [0.0, 0.0];
    let mut crossing: Option<(f64, [nalgebra::Matrix2<C64>; 2])> = None;
    match (scatterer, model) {
        (Some(s), ScattererModel::Dipole) => {
            s.validate()?;
            let (ge, gm) = (s.gamma_e.sqrt(), s.gamma_m.sqrt());
            let zhat = crate::CVec3::new(cr(0.0), cr(0.0), cr(1.0));
            let mut u = [V2::zeros(); 2];
            let mut v = [V2::zeros(); 2];
            for dir in [1.0, -1.0] {
                let n = zhat * cr(dir);
                let ustar = s.d_hat.conjugate() * cr(ge) + n.cross(&s.mu_hat.conjugate()) * cr(gm);
                u[dir_index(dir)] = transverse(&ustar).conjugate();
                v[dir_index(dir)] = transverse(&(s.d_hat * cr(ge) + n.cross(&s.mu_hat) * cr(gm)));
            }
            elems.push(Element { z: s.z_s, u, v, molecule: true });
        }
        (Some(s), ScattererModel::Dispersive) => {
            s.validate()?;
            eps = dispersive_phases(s)?;
            crossing = Some((s.z_s, [helicity_phase_operator(eps, 1.0), helicity_phase_operator(eps, -1.0)]));
        }
        (None, _) => {}
    }
    // propagation operator from z_from to z_to
    let prop = |z_from: f64, z_to: f64| -> nalgebra::Matrix2<C64> {
        match crossing {
            Some((zs, ops)) if (z_from < zs) != (z_to < zs) => ops[dir_index(z_to - z_from)],
            _ => nalgebra::Matrix2::identity(),
        }
    };
    let n = elems.len();
    let k = sys.k;
    let mut m = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i < n_sheets && j < n_sheets && crossing.is_none() {
                m[(i, j)] = sys.coupling_matrix()[(i, j)];
                continue;
            }
            if i == j {
                m[(i, j)] = if elems[i].molecule { c(0.0, -0.5 * scatterer.map(|s| s.gamma()).unwrap_or(0.0)) } else { sys.coupling_matrix()[(i, i)] };
                continue;
            }
            let dz = elems[i].z - elems[j].z;
            if dz == 0.0 {
                m[(i, j)] = if i < n_sheets && j < n_sheets { sys.coupling_matrix()[(i, j)] } else { cr(0.0) };
                continue;
            }
            let dir = dz.signum();
            let di = dir_index(dir);
            let p = prop(elems[j].z, elems[i].z);
            let val = (elems[i].u[di].adjoint() * p * elems[j].v[di])[(0, 0)];
            m[(i, j)] = c(0.0, -0.5) * val * C64::from_polar(1.0, k * dz.abs());
        }
    }
    let pol = V2::new(drive.polarization[0], drive.polarization[1]) * cr(drive.amplitude);
    let z_in = sys.sheets.iter().map(|s| s.z).chain(elems.iter().map(|e| e.z)).fold(0.0, f64::min) - 1.0;
    let mut a = DMatrix::<C64>::zeros(n, n);
    let mut f = DVector::<C64>::zeros(n);
    for i in 0..n {
        let det = if elems[i].molecule { scatterer.map(|s| s.delta_s).unwrap_or(0.0) } else { delta };
        for j in 0..n {
            let diag = if i == j { cr(det) } else { cr(0.0) };
            a[(i, j)] = I * (diag - m[(i, j)]);
        }
        let e_in = prop(z_in, elems[i].z) * pol * C64::from_polar(1.0, k * elems[i].z);
        f[i] = -I * (elems[i].u[0].adjoint() * e_in)[(0, 0)];
    }
    let z_out = elems.iter().map(|e| e.z).fold(0.0, f64::max) + 1.0;
    let out0 = prop(z_in, z_out) * pol;
    let out = elems.iter().map(|e| prop(e.z, z_out) * e.v[0] * (c(0.0, -0.5) * C64::from_polar(1.0, -k * e.z))).collect();
    Ok(Segment { a, f, out0, out, eps })
}

fn sys_scale(sys: &PeriodicSystem) -> f64 {
    // Γ̃ implied by the diagonal of the coupling matrix
    let g = -2.0 * sys.coupling_matrix()[(0, 0)].im;
    g / sys.specular_rate()
}

impl Segment {
    fn rhs(&self, y: &DVector<C64>) -> DVector<C64> {
        &self.a * y + &self.f
    }

    fn step(&self, y: &DVector<C64>, h: f64) -> DVector<C64> {
        let hc = cr(h);
        let k1 = self.rhs(y);
        let k2 = self.rhs(&(y + &k1 * (hc * 0.5)));
        let k3 = self.rhs(&(y + &k2 * (hc * 0.5)));
        let k4 = self.rhs(&(y + &k3 * hc));
        y + (k1 + k2 * cr(2.0) + k3 * cr(2.0) + k4) * (hc / 6.0)
    }

    fn steady(&self) -> Result<DVector<C64>> {
        self.a.clone().lu().solve(&(-&self.f)).ok_or(Error::Singular(f64::INFINITY))
    }

    fn output(&self, y: &DVector<C64>, drive: &DriveField) -> ([C64; 2], [C64; 2]) {
        let mut e = self.out0;
        for (o, yi) in self.out.iter().zip(y.iter()) {
            e += o * *yi;
        }
        let pol = V2::new(drive.polarization[0], drive.polarization[1]) * cr(drive.amplitude);
        let mut th = [cr(0.0); 2];
        for (idx, xi) in [1.0, -1.0].iter().enumerate() {
            let h = helicity_vector(*xi, 1.0);
            let inp = (h.adjoint() * pol)[(0, 0)];
            let outp = (h.adjoint() * e)[(0, 0)] * C64::from_polar(1.0, -self.eps[idx]);
            th[idx] = if inp.norm() > 1e-300 { outp / inp } else { outp };
        }
        ([e[0], e[1]], th)
    }
}

/// Integrates the linearized dynamics on `t_grid` (increasing) with
/// instantaneous scatterer entry and exit.
pub fn time_evolve(
    sys: &PeriodicSystem,
    drive: &DriveField,
    schedule: &[ScattererEvent],
    delta: f64,
    t_grid: &[f64],
    opts: DynamicsOptions,
) -> Result<Trajectory> {
    drive.validate()?;
    if sys.include_evanescent {
        return Err(Error::Invalid("time evolution uses the specular channel only".into()));
    }
    if sys.q != [0.0, 0.0] || drive.k_parallel != [0.0, 0.0] {
        return Err(Error::Invalid("time evolution is defined at normal incidence".into()));
    }
    if sys.is_empty() {
        return Err(Error::Invalid("no sheets to evolve".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid.is_empty() {
        return Err(Error::Invalid("time grid must be non-empty and strictly increasing".into()));
    }
    let mut sorted: Vec<&ScattererEvent> = schedule.iter().collect();
    sorted.sort_by(|a, b| a.t_enter.total_cmp(&b.t_enter));
    for w in sorted.windows(2) {
        if w[1].t_enter < w[0].t_exit {
            return Err(Error::Invalid("scatterer events overlap".into()));
        }
    }
    let mut fastest = -2.0 * sys.coupling_matrix()[(0, 0)].im;
    for e in &sorted {
        if e.t_exit <= e.t_enter {
            return Err(Error::Invalid("scatterer exit must follow entry".into()));
        }
        if opts.model == ScattererModel::Dipole {
            fastest = fastest.max(e.scatterer.delta_s.abs()).max(e.scatterer.gamma());
        }
    }
    let bound = 0.05 / fastest;
    if opts.dt > bound * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge { dt: opts.dt, bound });
    }
    let empty = build_segment(sys, drive, delta, None, opts.model)?;
    let n_sheets = sys.len();
    let active_index = |t: f64| sorted.iter().position(|e| e.t_enter <= t && t < e.t_exit);
    let active = |t: f64| active_index(t).map(|i| &sorted[i].scatterer);
    let segment_for = |t: f64| -> Result<Segment> { build_segment(sys, drive, delta, active(t), opts.model) };

    let mut y = if opts.start_in_steady_state { empty.steady()? } else { DVector::zeros(n_sheets) };
    let scale = 1.0 + y.norm() + empty.f.norm() / 1e-6;
    let mut breaks: Vec<f64> = t_grid.to_vec();
    for e in &sorted {
        for t in [e.t_enter, e.t_exit] {
            if t > t_grid[0] && t < *t_grid.last().unwrap() {
                breaks.push(t);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut samples = Vec::with_capacity(t_grid.len());
    let mut grid_iter = t_grid.iter().peekable();
    let mut current = segment_for(breaks[0])?;
    let mut current_key = active_index(breaks[0]);
    let mut current_has_mol = opts.model == ScattererModel::Dipole && active(breaks[0]).is_some();
    resize_state(&mut y, n_sheets, current_has_mol);
    let record = |t: f64, y: &DVector<C64>, seg: &Segment, has_mol: bool, present: bool, samples: &mut Vec<TrajectorySample>| {
        let (tr, th) = seg.output(y, drive);
        let beta: Vec<C64> = y.iter().take(n_sheets).copied().collect();
        let beta_s = if has_mol { Some(y[n_sheets]) } else { None };
        samples.push(TrajectorySample {
            t,
            state: DipoleState { beta, beta_s, delta },
            transmitted: tr,
            t_helicity: th,
            scatterer_present: present,
        });
    };
    if grid_iter.peek().map(|&&t| t == breaks[0]).unwrap_or(false) {
        record(breaks[0], &y, &current, current_has_mol, active(breaks[0]).is_some(), &mut samples);
        grid_iter.next();
    }
    for w in breaks.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        let mid = 0.5 * (ta + tb);
        let present = active(mid);
        let key = active_index(mid);
        if key != current_key {
            let has_mol = opts.model == ScattererModel::Dipole && present.is_some();
            current = segment_for(mid)?;
            resize_state(&mut y, n_sheets, has_mol);
            current_has_mol = has_mol;
            current_key = key;
        }
        let steps = ((tb - ta) / opts.dt).ceil().max(1.0) as usize;
        let h = (tb - ta) / steps as f64;
        for _ in 0..steps {
            y = current.step(&y, h);
        }
        if !y.iter().all(|v| v.re.is_finite() && v.im.is_finite()) || y.norm() > 1e12 * scale {
            return Err(Error::Unstable(tb));
        }
        if grid_iter.peek().map(|&&t| t == tb).unwrap_or(false) {
            // the sample reflects the configuration just before tb
            record(tb, &y, &current, current_has_mol, present.is_some(), &mut samples);
            grid_iter.next();
        }
    }
    Ok(Trajectory { samples })
}

fn resize_state(y: &mut DVector<C64>, n_sheets: usize, with_molecule: bool) {
    let want = n_sheets + usize::from(with_molecule);
    if y.len() != want {
        let mut z = DVector::zeros(want);
        for i in 0..n_sheets {
            z[i] = y[i];
        }
        *y = z;
    }
}

/// Steady state of the emulated stack with a static scatterer.
pub fn steady_state_with_scatterer(
    sys: &PeriodicSystem,
    drive: &DriveField,
    delta: f64,
    scatterer: Option<&ChiralScatterer>,
    model: ScattererModel,
) -> Result<(DipoleState, [C64; 2], [C64; 2])> {
    let seg = build_segment(sys, drive, delta, scatterer, model)?;
    let y = seg.steady()?;
    let (tr, th) = seg.output(&y, drive);
    let n = sys.len();
    let state = DipoleState {
        beta: y.iter().take(n).copied().collect(),
        beta_s: if y.len() > n { Some(y[n]) } else { None },
        delta,
    };
    Ok((state, tr, th))
}
