//! Time integration of the reduced and full systems, and the checks built on them.
//!
//! - [`integrate_resonant`]: the gauged system `i u̇_k = Σ_res u u ū + Σ_weak e^{−i d t} u u ū`.
//! - [`integrate_condensed`]: the same interactions with the linear term, `i v̇_k = λ_k v_k + Σ v v v̄`.
//! - [`integrate_full`]: the `Q_L`-truncated cubic NLS by Strang splitting.
//! - [`taylor_derivatives`]: exact time derivatives at `t = 0` of the gauged system.
//! - [`three_step_cascade_demo`] and [`theorem_pipeline`]: the experiments.

mod cascade;
mod full;
mod pipeline;
mod resonant;
mod taylor;

pub use cascade::{
    cascade_demo_for, find_cascade_geometry, taylor_signature, three_step_cascade_demo, CascadeGeometry,
    CascadeOptions, CascadeReport, CascadeRun, DEFAULT_CASCADE,
};
pub use full::{full_hamiltonian, integrate_full, FullSolver};
pub use pipeline::{theorem_pipeline, PipelineOptions, TheoremReport};
pub use resonant::{integrate_condensed, integrate_resonant, InteractionSet, ResonantSystem};
pub use taylor::{taylor_derivatives, taylor_for_system, DerivativeTable, TAYLOR_ORDER_CAP};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeBox, ModeField, TorusSpec};

/// Moduli above this count as an activated mode.
pub const ACTIVATION_THRESHOLD: f64 = 1e-6;

/// Moduli below this count as confined (no transfer).
pub const CONFINEMENT_TOLERANCE: f64 = 1e-9;

/// Default relative tolerance of the adaptive integrators.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Default number of uniformly spaced output intervals.
pub const DEFAULT_SAMPLES: usize = 200;

/// Default step of the split-step solver.
pub const DEFAULT_FULL_DT: f64 = 0.01;

/// Parameters shared by every integration.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub spec: TorusSpec,
    /// Inner box `Q_N` of the normal form.
    pub n_box: LatticeBox,
    /// Storage box `Q_L`.
    pub l_box: LatticeBox,
    /// Support box `Q_M` of the initial data.
    pub m_box: LatticeBox,
    /// Sobolev index `s > 1`.
    pub s: f64,
    /// Size `‖ψ0‖_s` of random initial data.
    pub epsilon: f64,
    /// Final time; `None` means "as long as the window allows".
    pub t_final: Option<f64>,
    /// Relative tolerance of adaptive integrations.
    pub tolerance: f64,
    pub seed: u64,
    /// Number of uniform output intervals.
    pub samples: usize,
    pub weak_threshold: f64,
    /// Constant `c` in the analyticity window `c·‖u0‖_s⁻²`.
    pub window_constant: f64,
    /// Step of the split-step solver.
    pub full_dt: f64,
    /// FFT grid of the full solver; `None` picks the smallest adequate one.
    pub grid: Option<usize>,
}

impl SimulationConfig {
    /// Defaults for the remaining fields.
    pub fn new(spec: TorusSpec, m: u32, n: u32, l: u32, epsilon: f64) -> Self {
        Self {
            spec,
            n_box: LatticeBox::new(n),
            l_box: LatticeBox::new(l),
            m_box: LatticeBox::new(m),
            s: 1.5,
            epsilon,
            t_final: None,
            tolerance: DEFAULT_TOLERANCE,
            seed: 0,
            samples: DEFAULT_SAMPLES,
            weak_threshold: crate::resonance::DEFAULT_WEAK_THRESHOLD,
            window_constant: 1.0,
            full_dt: DEFAULT_FULL_DT,
            grid: None,
        }
    }

    pub fn with_t_final(mut self, t: f64) -> Self {
        self.t_final = Some(t);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n, l) = (self.m_box.half_width, self.n_box.half_width, self.l_box.half_width);
        if !(3 * m < n && n < l) {
            return Err(Error::InvalidConfig(format!(
                "box half-widths must satisfy 3M < N < L, got M={m}, N={n}, L={l}"
            )));
        }
        if !(self.s > 1.0) {
            return Err(Error::InvalidConfig(format!("s must exceed 1, got {}", self.s)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if let Some(t) = self.t_final {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidConfig(format!("t_final must be positive, got {t}")));
            }
        }
        if !(self.tolerance > 0.0) || self.samples == 0 || !(self.full_dt > 0.0) {
            return Err(Error::InvalidConfig(
                "tolerance, samples and full_dt must be positive".into(),
            ));
        }
        if !(self.weak_threshold > 0.0) || !(self.window_constant > 0.0) {
            return Err(Error::InvalidConfig(
                "weak_threshold and window_constant must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `samples + 1` uniform times from 0 to `t_final`.
    pub fn output_times(&self, t_final: f64) -> Vec<f64> {
        uniform_times(t_final, self.samples)
    }

    /// Random initial data on `Q_M` with `‖ψ0‖_s = ε`.
    pub fn initial_data(&self) -> ModeField {
        crate::lattice::random_field(self.l_box, self.m_box, self.s, self.epsilon, self.seed)
    }
}

/// First crossing of `threshold` by `series`, interpolated linearly between samples.
pub fn activation_time(times: &[f64], series: &[f64], threshold: f64) -> Option<f64> {
    let i = series.iter().position(|v| *v >= threshold)?;
    if i == 0 {
        return Some(times[0]);
    }
    let (t0, t1, v0, v1) = (times[i - 1], times[i], series[i - 1], series[i]);
    Some(t0 + (threshold - v0) / (v1 - v0) * (t1 - t0))
}

pub(crate) fn uniform_times(t_final: f64, samples: usize) -> Vec<f64> {
    (0..=samples)
        .map(|i| {
            if i == samples {
                t_final
            } else {
                t_final * i as f64 / samples as f64
            }
        })
        .collect()
}

/// Which bound fixed the integration horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActiveBound {
    /// `1/ε²`.
    TheoremHorizon,
    /// `c·‖u0‖_s⁻²`.
    AnalyticityWindow,
    /// The configured `t_final`.
    UserCap,
}

/// Resolved horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub t_final: f64,
    pub active_bound: ActiveBound,
    /// `c·‖u0‖_s⁻²`.
    pub analyticity_window: f64,
    /// Whether the run extends past the analyticity window.
    pub beyond_window: bool,
}

/// `t = min(1/ε², c·‖u0‖_s⁻², cap)`.
pub fn resolve_window(config: &SimulationConfig, u0: &ModeField) -> TimeWindow {
    let norm = crate::lattice::sobolev_norm(u0, config.s);
    let window = if norm > 0.0 {
        config.window_constant / (norm * norm)
    } else {
        f64::INFINITY
    };
    let horizon = 1.0 / (config.epsilon * config.epsilon);
    let mut best = (horizon, ActiveBound::TheoremHorizon);
    if window < best.0 {
        best = (window, ActiveBound::AnalyticityWindow);
    }
    if let Some(cap) = config.t_final {
        if cap < best.0 {
            best = (cap, ActiveBound::UserCap);
        }
    }
    TimeWindow {
        t_final: best.0,
        active_bound: best.1,
        analyticity_window: window,
        beyond_window: best.0 > window * (1.0 + 1e-12),
    }
}

/// Conserved quantities at one output time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservedRecord {
    /// `Σ |u_k|²`.
    pub mass: f64,
    /// Energy of the system being integrated (see each integrator).
    pub hamiltonian: f64,
    /// `Σ k |u_k|²`.
    pub momentum: [f64; 2],
}

/// Sampled solution of one integration.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ModeField>,
    pub conserved: Vec<ConservedRecord>,
    /// Set when the horizon passes the analyticity window of the data.
    pub beyond_window: bool,
}

impl Trajectory {
    /// Largest relative deviation of mass from its initial value.
    pub fn mass_drift(&self) -> f64 {
        relative_drift(self.conserved.iter().map(|c| c.mass))
    }

    /// Largest relative deviation of the recorded Hamiltonian.
    pub fn hamiltonian_drift(&self) -> f64 {
        relative_drift(self.conserved.iter().map(|c| c.hamiltonian))
    }

    /// Largest deviation of either momentum component, relative to the initial mass.
    pub fn momentum_drift(&self) -> f64 {
        let Some(first) = self.conserved.first() else {
            return 0.0;
        };
        let scale = first.mass.max(f64::MIN_POSITIVE);
        self.conserved
            .iter()
            .map(|c| {
                (c.momentum[0] - first.momentum[0])
                    .abs()
                    .max((c.momentum[1] - first.momentum[1]).abs())
                    / scale
            })
            .fold(0.0, f64::max)
    }

    /// `|u_k(t)|` at every output time.
    pub fn modulus_series(&self, k: crate::lattice::Mode) -> Vec<f64> {
        self.states.iter().map(|s| s.get(k).norm()).collect()
    }
}

fn relative_drift(values: impl Iterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.collect();
    let Some(&first) = values.first() else {
        return 0.0;
    };
    if first == 0.0 {
        return values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    }
    values.iter().map(|v| ((v - first) / first).abs()).fold(0.0, f64::max)
}

/// Per-time maximum modulus outside `Q_M`, split at `Q_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfinementReport {
    pub times: Vec<f64>,
    /// `max |u_k|` over `Q_N \ Q_M`.
    pub annulus: Vec<f64>,
    /// `max |u_k|` over `Z² \ Q_N` (within storage).
    pub exterior: Vec<f64>,
    pub max_annulus: f64,
    pub max_exterior: f64,
}

impl ConfinementReport {
    pub fn max_outside(&self) -> f64 {
        self.max_annulus.max(self.max_exterior)
    }

    pub fn confined(&self, tolerance: f64) -> bool {
        self.max_outside() < tolerance
    }
}

pub fn support_confinement_report(trajectory: &Trajectory, m_box: LatticeBox, n_box: LatticeBox) -> ConfinementReport {
    let mut annulus = Vec::with_capacity(trajectory.states.len());
    let mut exterior = Vec::with_capacity(trajectory.states.len());
    for state in &trajectory.states {
        let lattice = state.lattice();
        let (mut a, mut e) = (0.0f64, 0.0f64);
        for (i, v) in state.values().iter().enumerate() {
            let k = lattice.mode_at(i);
            if m_box.contains(k) {
                continue;
            }
            if n_box.contains(k) {
                a = a.max(v.norm());
            } else {
                e = e.max(v.norm());
            }
        }
        annulus.push(a);
        exterior.push(e);
    }
    ConfinementReport {
        times: trajectory.times.clone(),
        max_annulus: annulus.iter().copied().fold(0.0, f64::max),
        max_exterior: exterior.iter().copied().fold(0.0, f64::max),
        annulus,
        exterior,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Mode;
    use num_complex::Complex64;

    #[test]
    fn activation_time_interpolates() {
        let t = [0.0, 1.0, 2.0];
        assert_eq!(activation_time(&t, &[0.0, 0.5, 1.5], 1.0), Some(1.5));
        assert_eq!(activation_time(&t, &[0.0, 0.1, 0.2], 1.0), None);
    }

    #[test]
    fn config_validation() {
        let ok = SimulationConfig::new(TorusSpec::sqrt2(), 1, 4, 8, 0.05);
        assert!(ok.validate().is_ok());
        assert!(SimulationConfig::new(TorusSpec::sqrt2(), 1, 3, 8, 0.05)
            .validate()
            .is_err());
        assert!(SimulationConfig::new(TorusSpec::sqrt2(), 1, 4, 4, 0.05)
            .validate()
            .is_err());
        let mut bad = ok.clone();
        bad.s = 1.0;
        assert!(bad.validate().is_err());
        assert!(SimulationConfig::new(TorusSpec::sqrt2(), 1, 4, 8, 0.0)
            .validate()
            .is_err());
    }

    #[test]
    fn window_policy_reports_active_bound() {
        let cfg = SimulationConfig::new(TorusSpec::sqrt2(), 1, 4, 8, 0.05);
        let u0 = cfg.initial_data();
        let w = resolve_window(&cfg, &u0);
        assert!((w.t_final - 400.0).abs() < 1e-9);
        assert!(!w.beyond_window);
        let w = resolve_window(&cfg.clone().with_t_final(10.0), &u0);
        assert_eq!(w.active_bound, ActiveBound::UserCap);
        assert_eq!(w.t_final, 10.0);
        let mut small = cfg.clone();
        small.window_constant = 0.5;
        let w = resolve_window(&small, &u0);
        assert_eq!(w.active_bound, ActiveBound::AnalyticityWindow);
        assert!((w.t_final - 200.0).abs() < 1e-9);
    }

    #[test]
    fn uniform_times_end_exactly() {
        let t = uniform_times(3.7, 200);
        assert_eq!(t.len(), 201);
        assert_eq!(t[0], 0.0);
        assert_eq!(*t.last().unwrap(), 3.7);
    }

    #[test]
    fn confinement_of_zero_trajectory() {
        let storage = LatticeBox::new(3);
        let traj = Trajectory {
            times: vec![0.0, 1.0],
            states: vec![ModeField::zeros(storage); 2],
            conserved: vec![],
            beyond_window: false,
        };
        let r = support_confinement_report(&traj, LatticeBox::new(0), LatticeBox::new(1));
        assert_eq!(r.annulus, vec![0.0, 0.0]);
        assert_eq!(r.exterior, vec![0.0, 0.0]);
        let mut f = ModeField::zeros(storage);
        f.set(Mode::new(3, 0), Complex64::new(0.5, 0.0)).unwrap();
        f.set(Mode::new(1, 1), Complex64::new(0.0, 0.25)).unwrap();
        let traj = Trajectory {
            states: vec![f],
            times: vec![0.0],
            conserved: vec![],
            beyond_window: false,
        };
        let r = support_confinement_report(&traj, LatticeBox::new(0), LatticeBox::new(1));
        assert_eq!((r.max_annulus, r.max_exterior), (0.25, 0.5));
    }
}
