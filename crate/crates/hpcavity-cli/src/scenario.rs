//! Declarative run description, read from TOML.
//!
//! Lengths are in units of the wavelength λ and rates in units of the
//! single-emitter linewidth Γ0; files carry no unit strings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub route: Route,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub geometry: Geometry,
    #[serde(default)]
    pub drive: Drive,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_map: Option<FieldMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensing: Option<Sensing>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<Compare>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    Dipole,
    Analytic,
    TransferMatrix,
    CoupledModes,
}

impl Route {
    pub fn label(self) -> &'static str {
        match self {
            Route::Dipole => "dipole",
            Route::Analytic => "analytic",
            Route::TransferMatrix => "transfer-matrix",
            Route::CoupledModes => "coupled-modes",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StackKind {
    /// Two single-layer mirrors with x̂ dipoles.
    Bilayer,
    /// Two composite x̂/ŷ mirrors.
    Hp,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub kind: StackKind,
    /// Cavity length; alternatively fixed through `resonant_half_waves`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    /// Pick ℓ near `n·λ/2` so the cavity is resonant at `resonant_detuning`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonant_half_waves: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonant_detuning: Option<f64>,
    #[serde(default = "default_spacing")]
    pub lattice_spacing: f64,
    /// HP mirror spacing `ℓ_m = (n_m + 1/4)λ`.
    #[serde(default)]
    pub n_m: u32,
    /// Emitters per side of each finite layer (real-space dipole route).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_side: Option<usize>,
    /// Mirror curvature radius; flat when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature_radius: Option<f64>,
    /// Derive the curvature from the desired mode waist instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_waist: Option<f64>,
    /// Emulate the layers as infinite lattices (dipole route).
    #[serde(default)]
    pub periodic: bool,
    /// Keep the evanescent diffraction orders between sheets.
    #[serde(default)]
    pub include_evanescent: bool,
    /// Override the computed collective shift Ω̃(0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    /// Override the computed collective rate Γ̃(0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

fn default_spacing() -> f64 {
    0.8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Polarization {
    #[default]
    X,
    Y,
    Rcp,
    Lcp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Beam {
    #[default]
    Plane,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drive {
    #[serde(default)]
    pub polarization: Polarization,
    #[serde(default)]
    pub beam: Beam,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waist: Option<f64>,
    /// Gaussian focus; the cavity centre when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focus_z: Option<f64>,
}

impl Default for Drive {
    fn default() -> Self {
        Self { polarization: Polarization::X, beam: Beam::Plane, waist: None, focus_z: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVariable {
    #[default]
    Detuning,
    /// Extra optical path δℓ at the resonant detuning of the unperturbed cavity.
    LengthShift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    /// Centred on the resonance, half width in units of `Γ̃|tan kℓ|`.
    Linewidth,
    /// Centred on the resonance, half width in units of the coupled-modes κ.
    ModelKappa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(default)]
    pub variable: SweepVariable,
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowKind>,
    #[serde(default = "one")]
    pub half_width: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MapMode {
    /// Riemann–Silberstein intensities on a plane `x = const`.
    #[default]
    RsMap,
    /// Electric field along a line parallel to the axis.
    Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldMap {
    #[serde(default)]
    pub mode: MapMode,
    /// Laser detuning; see `resonance_locked`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Drive at the cavity resonance instead of a fixed detuning.
    #[serde(default)]
    pub resonance_locked: bool,
    #[serde(default)]
    pub x: f64,
    #[serde(default)]
    pub y: [f64; 2],
    pub z: [f64; 2],
    #[serde(default = "default_ppl")]
    pub points_per_lambda: f64,
}

fn default_ppl() -> f64 {
    4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SensingModel {
    #[default]
    Dispersive,
    Dipole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LoLock {
    #[default]
    EmptyCavity,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Noise {
    #[default]
    Homodyne,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Handed {
    Right,
    Left,
    Achiral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Molecule {
    pub handedness: Handed,
    pub delta_s: f64,
    pub gamma_s: f64,
    /// Position on the axis; the cavity centre when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sensing {
    pub delta: f64,
    #[serde(default)]
    pub model: SensingModel,
    #[serde(default = "default_n_rot")]
    pub n_rot: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_spw")]
    pub samples_per_window: usize,
    pub n_windows: usize,
    #[serde(default)]
    pub lo_reference: LoLock,
    #[serde(default)]
    pub noise: Noise,
    pub flux: f64,
    pub flux_lo: f64,
    pub t_int: f64,
    #[serde(default = "default_eta")]
    pub eta_q: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub theta_lo: f64,
    pub molecule: Molecule,
    /// `[t_enter, t_exit]` per transit.
    #[serde(default)]
    pub events: Vec<[f64; 2]>,
}

fn default_n_rot() -> usize {
    64
}
fn default_dt() -> f64 {
    0.02
}
fn default_spw() -> usize {
    50
}
fn default_eta() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// `||t|² − |t_ref|²|`.
    #[default]
    Intensity,
    /// `|e^{iφ₀}t − t_ref|` with the global phase fixed at the reference peak.
    Complex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Compare {
    /// First entry is the reference.
    pub routes: Vec<Route>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ells: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n_sides: Vec<usize>,
    #[serde(default)]
    pub metric: Metric,
}

impl Scenario {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        let s: Scenario = toml::from_str(text).map_err(|e| CliError::Config { path: origin.to_path_buf(), msg: e.to_string() })?;
        s.validate().map_err(|msg| CliError::Config { path: origin.to_path_buf(), msg })?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), msg: e.to_string() })?;
        Self::parse(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario is always serializable")
    }

    fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!("schema_version = {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        let g = &self.geometry;
        match (g.ell, g.resonant_half_waves) {
            (Some(_), Some(_)) => return Err("geometry: give either `ell` or `resonant_half_waves`, not both".into()),
            (None, None) if g.kind != StackKind::Empty => {
                return Err("geometry: `ell` or `resonant_half_waves` is required".into())
            }
            _ => {}
        }
        if g.resonant_half_waves.is_some() != g.resonant_detuning.is_some() {
            return Err("geometry: `resonant_half_waves` and `resonant_detuning` go together".into());
        }
        if g.curvature_radius.is_some() && g.mode_waist.is_some() {
            return Err("geometry: give either `curvature_radius` or `mode_waist`".into());
        }
        if !(g.lattice_spacing > 0.0) {
            return Err("geometry.lattice_spacing must be positive".into());
        }
        if self.drive.beam == Beam::Gaussian && self.drive.waist.is_none() {
            return Err("drive: a Gaussian beam needs `waist`".into());
        }
        if let Some(s) = &self.sweep {
            if s.points < 2 {
                return Err("sweep.points must be at least 2".into());
            }
            if s.range.is_some() == s.window.is_some() {
                return Err("sweep: give exactly one of `range` or `window`".into());
            }
        }
        if let Some(c) = &self.compare {
            if c.routes.len() < 2 {
                return Err("compare.routes needs at least two entries".into());
            }
        }
        Ok(())
    }
}
