//! Homodyne readout of the cavity phase and simulated detection runs.

use nalgebra::{Quaternion, Rotation3, UnitQuaternion, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::dipole::{
    time_evolve, ChiralScatterer, DriveField, DynamicsOptions, PeriodicSystem, ScattererEvent, ScattererModel,
    Trajectory,
};
use crate::exec::Exec;
use crate::{c, cr, Error, Result, C64};

/// Signal and local-oscillator parameters; fluxes in Γ0, times in 1/Γ0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomodyneConfig {
    pub flux: f64,
    pub flux_lo: f64,
    pub t_int: f64,
    pub eta_q: f64,
    pub theta: f64,
    pub theta_lo: f64,
}

impl Default for HomodyneConfig {
    fn default() -> Self {
        Self { flux: 1.0, flux_lo: 100.0, t_int: 2000.0, eta_q: 1.0, theta: 0.0, theta_lo: 0.0 }
    }
}

impl HomodyneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.flux >= 0.0 && self.flux_lo >= self.flux) {
            return Err(Error::Invalid(format!("need F_LO ≥ F ≥ 0 (F = {}, F_LO = {})", self.flux, self.flux_lo)));
        }
        if !(0.0..=1.0).contains(&self.eta_q) {
            return Err(Error::Invalid(format!("quantum efficiency {} outside [0, 1]", self.eta_q)));
        }
        if !(self.t_int > 0.0) {
            return Err(Error::Invalid("integration time must be positive".into()));
        }
        Ok(())
    }

    fn quadrature(&self, t: C64) -> f64 {
        (t * C64::from_polar(1.0, self.theta - self.theta_lo)).im
    }
}

/// `⟨m₋⟩ = 2η√(F F_LO) ∫ Im(t_c e^{i(θ−θ_LO)}) dt'` over one window, with
/// `t_series` sampling the window uniformly.
pub fn homodyne_expectation(cfg: &HomodyneConfig, t_series: &[C64]) -> f64 {
    if t_series.is_empty() {
        return 0.0;
    }
    let mean = t_series.iter().map(|t| cfg.quadrature(*t)).sum::<f64>() / t_series.len() as f64;
    2.0 * cfg.eta_q * (cfg.flux * cfg.flux_lo).sqrt() * cfg.t_int * mean
}

/// `(Δm₋)² = ηT[η|t|²(F + F_LO) + (1 − η)(|t|²F + F_LO)]`.
pub fn homodyne_variance(cfg: &HomodyneConfig, t_abs: f64) -> f64 {
    let (e, t2) = (cfg.eta_q, t_abs * t_abs);
    e * cfg.t_int * (e * t2 * (cfg.flux + cfg.flux_lo) + (1.0 - e) * (t2 * cfg.flux + cfg.flux_lo))
}

/// Variance of independent Poissonian counts at the two detectors,
/// `ηT(|t|²F + F_LO)`; equals [`homodyne_variance`] when `|t| = 1`.
pub fn poisson_difference_variance(cfg: &HomodyneConfig, t_abs: f64) -> f64 {
    cfg.eta_q * cfg.t_int * (t_abs * t_abs * cfg.flux + cfg.flux_lo)
}

/// Noise envelope used for simulated runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseModel {
    #[default]
    Homodyne,
    Poisson,
}

/// Phase uncertainty on resonance from the time-averaged `cos δφ`.
/// `strong_lo` selects the `F_LO ≫ F` form `1/(2√(ηTF)|⟨cos δφ⟩|)`.
pub fn phase_uncertainty(cfg: &HomodyneConfig, dphi: &[f64], strong_lo: bool) -> Result<f64> {
    let avg = if dphi.is_empty() { 1.0 } else { dphi.iter().map(|p| p.cos()).sum::<f64>() / dphi.len() as f64 };
    if avg.abs() < 1e-12 {
        return Err(Error::InsensitiveQuadrature);
    }
    let et = cfg.eta_q * cfg.t_int;
    if strong_lo {
        return Ok(1.0 / (2.0 * (et * cfg.flux).sqrt() * avg.abs()));
    }
    Ok((cfg.flux + cfg.flux_lo).sqrt() / (2.0 * et.sqrt() * (cfg.flux * cfg.flux_lo).sqrt() * avg.abs()))
}

/// Orientation-averaged coupling of a scatterer to helicity `ξ`:
/// `γ_s + 2ξ√(γᵉγᵐ) Im(d̂*·μ̂)`.
pub fn rotational_average_renormalization(s: &ChiralScatterer, xi: f64) -> f64 {
    s.gamma() + 2.0 * xi * s.rotary_strength()
}

/// Uniformly distributed rotation.
pub fn haar_rotation<R: Rng + ?Sized>(rng: &mut R) -> Rotation3<f64> {
    let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3])).to_rotation_matrix()
}

/// Bracket of the rotational average for one orientation:
/// `3|ê_ξ†(√γᵉ d̂ − iξ√γᵐ μ̂)|²` for a wave along +z.
pub fn orientation_coupling(s: &ChiralScatterer, xi: f64) -> f64 {
    let a = s.d_hat * cr(s.gamma_e.sqrt()) - s.mu_hat * c(0.0, xi * s.gamma_m.sqrt());
    let e = Vector2::new(cr(std::f64::consts::FRAC_1_SQRT_2), c(0.0, xi * std::f64::consts::FRAC_1_SQRT_2));
    3.0 * (e[0].conj() * a.x + e[1].conj() * a.y).norm_sqr()
}

/// Monte-Carlo estimate of the rotational average over `n` Haar samples.
pub fn rotational_average_mc(s: &ChiralScatterer, xi: f64, n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    for _ in 0..n {
        acc += orientation_coupling(&s.rotated(&haar_rotation(&mut rng)), xi);
    }
    acc / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotocountStats {
    pub mean: f64,
    pub variance: f64,
    /// Standard error of `variance`.
    pub variance_err: f64,
}

/// Photocount difference statistics of a balanced homodyne detector with
/// coherent inputs: Poissonian counts with rates
/// `(|t|²F + F_LO)/2 ± √(F F_LO) Im(t e^{i(θ−θ_LO)})`.
pub fn photocount_mc(cfg: &HomodyneConfig, t_c: C64, trials: usize, seed: u64) -> Result<PhotocountStats> {
    cfg.validate()?;
    if trials < 2 {
        return Err(Error::Invalid("need at least two trials".into()));
    }
    let base = 0.5 * (t_c.norm_sqr() * cfg.flux + cfg.flux_lo);
    let cross = (cfg.flux * cfg.flux_lo).sqrt() * cfg.quadrature(t_c);
    let scale = cfg.eta_q * cfg.t_int;
    let draw = |mean: f64| -> Result<Option<Poisson<f64>>> {
        if mean <= 0.0 {
            return Ok(None);
        }
        Poisson::new(mean).map(Some).map_err(|e| Error::Invalid(e.to_string()))
    };
    let plus = draw(scale * (base + cross))?;
    let minus = draw(scale * (base - cross))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample = |d: &Option<Poisson<f64>>, rng: &mut ChaCha8Rng| d.as_ref().map_or(0.0, |p| p.sample(rng));
    // Welford for a stable variance at large counts
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..trials {
        let m = sample(&plus, &mut rng) - sample(&minus, &mut rng);
        let d = m - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (m - mean);
    }
    let variance = m2 / (trials - 1) as f64;
    Ok(PhotocountStats { mean, variance, variance_err: variance * (2.0 / (trials - 1) as f64).sqrt() })
}

/// Reference for the local-oscillator phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoReference {
    /// θ_LO is additionally locked to the empty-cavity output phase, so the
    /// scatterer-free baseline reads zero.
    #[default]
    EmptyCavity,
    /// Use θ and θ_LO as given.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensingConfig {
    pub homodyne: HomodyneConfig,
    /// Laser detuning Δ [Γ0].
    pub delta: f64,
    pub model: ScattererModel,
    /// Orientation samples for the explicit dipole model.
    pub n_rot: usize,
    pub seed: u64,
    pub dt: f64,
    pub samples_per_window: usize,
    pub n_windows: usize,
    pub lo_reference: LoReference,
    pub noise: NoiseModel,
}

impl Default for SensingConfig {
    fn default() -> Self {
        Self {
            homodyne: HomodyneConfig::default(),
            delta: 0.01,
            model: ScattererModel::Dispersive,
            n_rot: 64,
            seed: 0,
            dt: 0.02,
            samples_per_window: 50,
            n_windows: 6,
            lo_reference: LoReference::EmptyCavity,
            noise: NoiseModel::Homodyne,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingWindow {
    /// Window start.
    pub t: f64,
    pub mean_m_minus: f64,
    pub noise_std: f64,
    pub scatterer_present: bool,
    /// Window-averaged cavity transmission in the detected helicity.
    pub t_c: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensingRun {
    pub windows: Vec<SensingWindow>,
    /// `(entry, exit)` per scheduled event.
    pub events: Vec<(f64, f64)>,
    pub handedness: String,
}

/// Helicity index (0 for ξ = +, 1 for ξ = −) carried by a circular drive.
fn drive_helicity(drive: &DriveField) -> Result<usize> {
    let p = drive.polarization;
    let plus = (p[0] - c(0.0, 1.0) * p[1]).norm_sqr() / 2.0;
    let minus = (p[0] + c(0.0, 1.0) * p[1]).norm_sqr() / 2.0;
    if (plus - 1.0).abs() < 1e-9 {
        Ok(0)
    } else if (minus - 1.0).abs() < 1e-9 {
        Ok(1)
    } else {
        Err(Error::Invalid("sensing needs a circularly polarized drive".into()))
    }
}

/// Simulated homodyne trace on windows of length `T` tiling
/// `[0, n_windows·T)`.
pub fn simulate_sensing_run(
    sys: &PeriodicSystem,
    schedule: &[ScattererEvent],
    drive: &DriveField,
    cfg: &SensingConfig,
    exec: Exec,
) -> Result<SensingRun> {
    cfg.homodyne.validate()?;
    let xi = drive_helicity(drive)?;
    if cfg.samples_per_window == 0 || cfg.n_windows == 0 {
        return Err(Error::Invalid("need at least one window and one sample per window".into()));
    }
    let tw = cfg.homodyne.t_int;
    let sp = cfg.samples_per_window;
    let grid: Vec<f64> =
        (0..cfg.n_windows * sp).map(|i| (i / sp) as f64 * tw + ((i % sp) as f64 + 0.5) * tw / sp as f64).collect();
    let opts = DynamicsOptions { dt: cfg.dt, model: cfg.model, start_in_steady_state: true };

    let (_, _, th0) = crate::dipole::steady_state_with_scatterer(sys, drive, cfg.delta, None, cfg.model)?;
    let lo = match cfg.lo_reference {
        LoReference::EmptyCavity => C64::from_polar(1.0, -th0[xi].arg()),
        LoReference::Fixed => cr(1.0),
    };

    let trajectories: Vec<Trajectory> = match cfg.model {
        ScattererModel::Dispersive => vec![time_evolve(sys, drive, schedule, cfg.delta, &grid, opts)?],
        ScattererModel::Dipole => {
            let n = cfg.n_rot.max(1);
            exec.map(n, |i| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(i as u64);
                let rot = haar_rotation(&mut rng);
                let rotated: Vec<ScattererEvent> = schedule
                    .iter()
                    .map(|e| ScattererEvent { scatterer: e.scatterer.rotated(&rot), ..e.clone() })
                    .collect();
                time_evolve(sys, drive, &rotated, cfg.delta, &grid, opts)
            })
            .into_iter()
            .collect::<Result<_>>()?
        }
    };
    let n_traj = trajectories.len() as f64;
    let mut windows = Vec::with_capacity(cfg.n_windows);
    for w in 0..cfg.n_windows {
        let mut ts = Vec::with_capacity(sp);
        let mut present = false;
        for j in 0..sp {
            let mut acc = cr(0.0);
            for tr in &trajectories {
                let s = &tr.samples[w * sp + j];
                acc += s.t_helicity[xi];
                present |= s.scatterer_present;
            }
            ts.push(acc / n_traj * lo);
        }
        let t_avg = ts.iter().sum::<C64>() / sp as f64;
        let var = match cfg.noise {
            NoiseModel::Homodyne => homodyne_variance(&cfg.homodyne, t_avg.norm()),
            NoiseModel::Poisson => poisson_difference_variance(&cfg.homodyne, t_avg.norm()),
        };
        windows.push(SensingWindow {
            t: w as f64 * tw,
            mean_m_minus: homodyne_expectation(&cfg.homodyne, &ts),
            noise_std: var.sqrt(),
            scatterer_present: present,
            t_c: t_avg,
        });
    }
    let handedness = schedule.first().map_or("none", |e| e.scatterer.handedness.label()).to_string();
    Ok(SensingRun { windows, events: schedule.iter().map(|e| (e.t_enter, e.t_exit)).collect(), handedness })
}
