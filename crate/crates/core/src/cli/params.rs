//! Parameter schemas of the commands.
//!
//! Unknown keys are rejected by [`super::parse_parameters`], so a typo fails
//! validation instead of silently falling back to a default.

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    CascadeOptions, PipelineOptions, SimulationConfig, DEFAULT_FULL_DT, DEFAULT_SAMPLES, DEFAULT_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::family::Relation;
use crate::lattice::{LatticeBox, Mode, TorusSpec};
use crate::resonance::{ResonanceClass, DEFAULT_WEAK_THRESHOLD};

/// `weights = [w1, w2]` and `rationality = "rational" | "irrational"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusParams {
    pub weights: [f64; 2],
    pub rationality: RationalityParam,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RationalityParam {
    Rational,
    Irrational,
}

impl TorusParams {
    /// Rational weights must be coprime positive integers.
    pub fn to_spec(&self) -> Result<TorusSpec> {
        let [w1, w2] = self.weights;
        match self.rationality {
            RationalityParam::Irrational => TorusSpec::irrational(w1, w2),
            RationalityParam::Rational => {
                let as_int = |w: f64| -> Result<u32> {
                    if w.fract() == 0.0 && w >= 1.0 && w <= u32::MAX as f64 {
                        Ok(w as u32)
                    } else {
                        Err(Error::InvalidTorus(format!(
                            "weights: rational weights must be positive integers, got {w}"
                        )))
                    }
                };
                TorusSpec::rational(as_int(w1)?, as_int(w2)?)
            }
        }
    }
}

fn default_weak_threshold() -> f64 {
    DEFAULT_WEAK_THRESHOLD
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonancesParams {
    #[serde(flatten)]
    pub torus: TorusParams,
    /// Half-width of the enumeration box.
    pub n: u32,
    /// Storage half-width; when set, weak resonances between `Q_n` and `Q_l` are listed too.
    #[serde(default)]
    pub l: Option<u32>,
    /// Keep only tuples of this class.
    #[serde(default)]
    pub class: Option<ResonanceClass>,
    #[serde(default = "default_weak_threshold")]
    pub weak_threshold: f64,
}

fn default_s() -> f64 {
    1.5
}

fn default_sweep_epsilons() -> Vec<f64> {
    (0..5).map(|i| 10f64.powf(-2.0 - 0.25 * i as f64)).collect()
}

fn default_poisson_samples() -> usize {
    3
}

fn default_flow_tolerance() -> f64 {
    1e-10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFormParams {
    #[serde(flatten)]
    pub torus: TorusParams,
    pub n: u32,
    pub l: u32,
    #[serde(default = "default_weak_threshold")]
    pub weak_threshold: f64,
    #[serde(default = "default_s")]
    pub s: f64,
    /// Support half-width of the sweep direction.
    #[serde(default = "default_direction_box")]
    pub direction_box: u32,
    #[serde(default = "default_sweep_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_poisson_samples")]
    pub poisson_samples: usize,
    #[serde(default = "default_flow_tolerance")]
    pub flow_tolerance: f64,
    /// Also list the χ2 coefficients (tuples leaving `Q_n`).
    #[serde(default)]
    pub include_chi2: bool,
}

fn default_direction_box() -> u32 {
    1
}

/// Which system `simulate` integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Resonant,
    Condensed,
    Full,
}

fn default_system() -> SystemKind {
    SystemKind::Resonant
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

fn default_window_constant() -> f64 {
    1.0
}

fn default_full_dt() -> f64 {
    DEFAULT_FULL_DT
}

/// Every [`SimulationConfig`] field by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationParams {
    #[serde(flatten)]
    pub torus: TorusParams,
    pub m: u32,
    pub n: u32,
    pub l: u32,
    #[serde(default = "default_s")]
    pub s: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub t_final: Option<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_weak_threshold")]
    pub weak_threshold: f64,
    #[serde(default = "default_window_constant")]
    pub window_constant: f64,
    #[serde(default = "default_full_dt")]
    pub full_dt: f64,
    #[serde(default)]
    pub grid: Option<usize>,
}

impl SimulationParams {
    pub fn to_config(&self) -> Result<SimulationConfig> {
        let mut c = SimulationConfig::new(self.torus.to_spec()?, self.m, self.n, self.l, self.epsilon);
        c.s = self.s;
        c.t_final = self.t_final;
        c.tolerance = self.tolerance;
        c.seed = self.seed;
        c.samples = self.samples;
        c.weak_threshold = self.weak_threshold;
        c.window_constant = self.window_constant;
        c.full_dt = self.full_dt;
        c.grid = self.grid;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateParams {
    #[serde(flatten)]
    pub config: SimulationParams,
    #[serde(default = "default_system")]
    pub system: SystemKind,
    /// Modes written to `trajectory.csv`; defaults to `Q_{m+1}`.
    #[serde(default)]
    pub watch: Option<Vec<[i32; 2]>>,
    /// Explicit initial data `[[x, y, re, im], …]` replacing the random draw.
    #[serde(default)]
    pub initial: Option<Vec<[f64; 4]>>,
}

impl SimulateParams {
    pub fn watchlist(&self) -> Vec<Mode> {
        match &self.watch {
            Some(w) => w.iter().map(|[x, y]| Mode::new(*x, *y)).collect(),
            None => LatticeBox::new(self.config.m + 1).modes().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyTheoremParams {
    #[serde(flatten)]
    pub config: SimulationParams,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub gap_samples: Option<usize>,
    #[serde(default)]
    pub smallness_gate: Option<f64>,
    #[serde(default)]
    pub flow_tolerance: Option<f64>,
}

impl VerifyTheoremParams {
    pub fn options(&self) -> PipelineOptions {
        let d = PipelineOptions::default();
        PipelineOptions {
            gamma: self.gamma.unwrap_or(d.gamma),
            gap_samples: self.gap_samples.unwrap_or(d.gap_samples),
            smallness_gate: self.smallness_gate.unwrap_or(d.smallness_gate),
            flow_tolerance: self.flow_tolerance.unwrap_or(d.flow_tolerance),
            gamma_grid: d.gamma_grid,
        }
    }
}

fn default_cascade_l() -> u32 {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeParams {
    #[serde(default = "default_cascade_l")]
    pub l: u32,
    #[serde(default)]
    pub window: Option<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

impl CascadeParams {
    pub fn options(&self) -> CascadeOptions {
        let d = CascadeOptions::default();
        CascadeOptions {
            window: self.window.unwrap_or(d.window),
            samples: self.samples.unwrap_or(d.samples),
            n_max: self.n_max.unwrap_or(d.n_max),
            threshold: d.threshold,
            tolerance: self.tolerance.unwrap_or(d.tolerance),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub s: f64,
    pub relation: Relation,
    pub generations: Vec<Vec<[i32; 2]>>,
}
