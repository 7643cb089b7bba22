//! Desk-scale check of confinement for small data on an irrational torus.
//!
//! With `ψ0` random on `Q_M` and `‖ψ0‖_s = ε`:
//!
//! 1. build χ on `Q_L` and the flow 𝒯;
//! 2. integrate the gauged resonant system from `u(0) = ψ0` and recover the
//!    condensed solution `v(t) = e^{−iλt} u(t)`;
//! 3. integrate the full system from `ψ0` (run a) and from `𝒯(ψ0)` (run b);
//! 4. pull run b back, `z(t) = 𝒯⁻¹(ψ_b(t))`, so `z(0) = v(0) = u(0) = ψ0`;
//! 5. report the largest `|ψ̂_j(t)|` off `Q_M` in run a against `ε^γ`, the
//!    gap `‖z − v‖_s`, and the pushed-forward gap `‖ψ_a − 𝒯(v)‖_s`.

use serde::{Deserialize, Serialize};

use super::full::FullSolver;
use super::resonant::{InteractionSet, ResonantSystem};
use super::{resolve_window, support_confinement_report, ActiveBound, SimulationConfig};
use crate::error::{Error, Result};
use crate::lattice::{residual, sobolev_norm};
use crate::normal_form::{build_chi, lie_transform, FlowDirection, FlowOptions};

/// Settings of [`theorem_pipeline`] beyond the simulation config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    /// Exponent of the threshold `ε^γ`; must be below 3.
    pub gamma: f64,
    /// Number of times at which the pulled-back gap is evaluated.
    pub gap_samples: usize,
    /// Largest accepted ε.
    pub smallness_gate: f64,
    /// Relative tolerance of the Lie flow.
    pub flow_tolerance: f64,
    /// Candidate exponents for the largest passing γ.
    pub gamma_grid: Vec<f64>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            gamma: 2.5,
            gap_samples: 40,
            smallness_gate: 0.2,
            flow_tolerance: 1e-10,
            gamma_grid: (0..40).map(|i| 1.0 + 0.05 * i as f64).collect(),
        }
    }
}

/// Outcome of [`theorem_pipeline`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub epsilon: f64,
    pub gamma: f64,
    /// `ε^γ`.
    pub threshold: f64,
    pub t_final: f64,
    pub active_bound: ActiveBound,
    pub beyond_window: bool,
    /// `sup_t max_{j ∉ Q_M} |ψ̂_j(t)|` in the full run from `ψ0`.
    pub sup_outside: f64,
    /// `threshold / sup_outside`.
    pub margin: f64,
    pub pass: bool,
    /// `max_t ‖z(t) − v(t)‖_s`.
    pub duhamel_gap: f64,
    /// `duhamel_gap / ε³`.
    pub gap_ratio: f64,
    /// `max_t max_{j ∉ Q_M} |z_j(t)|`.
    pub z_outside: f64,
    /// `max_t max_{j ∉ Q_M} |z_j(t) − v_j(t)|`.
    pub z_minus_v_outside: f64,
    /// `max_t ‖ψ_a(t) − 𝒯(v(t))‖_s`.
    pub pullback_gap: f64,
    /// `max_t max_{j ∉ Q_M} |u_j(t)|` for the resonant run.
    pub resonant_outside: f64,
    pub largest_passing_gamma: Option<f64>,
    pub full_mass_drift: f64,
    pub full_hamiltonian_drift: f64,
    pub chi_terms: usize,
    pub small_divisor_constant: f64,
    pub gap_times: Vec<f64>,
    pub gap_series: Vec<f64>,
    pub sup_outside_series: Vec<f64>,
    pub times: Vec<f64>,
}

/// Runs the comparison chain described in the module docs.
pub fn theorem_pipeline(config: &SimulationConfig, opts: &PipelineOptions) -> Result<TheoremReport> {
    config.validate()?;
    if config.spec.is_rational() {
        return Err(Error::RationalTorus { witness: None });
    }
    if !(opts.gamma < 3.0) {
        return Err(Error::Precondition(format!(
            "gamma must be below 3, got {}",
            opts.gamma
        )));
    }
    if config.epsilon > opts.smallness_gate {
        return Err(Error::Precondition(format!(
            "epsilon {} exceeds the smallness gate {}",
            config.epsilon, opts.smallness_gate
        )));
    }
    if opts.gap_samples == 0 {
        return Err(Error::InvalidConfig("gap_samples must be positive".into()));
    }
    let s = config.s;
    let psi0 = config.initial_data();
    let window = resolve_window(config, &psi0);
    let times = config.output_times(window.t_final);

    let (chi, _) = build_chi(&config.spec, config.n_box, config.l_box, config.weak_threshold)?;
    let flow = FlowOptions {
        ode_tol: opts.flow_tolerance,
        sobolev_index: s,
        ..FlowOptions::default()
    };

    let system = ResonantSystem::new(
        &config.spec,
        config.n_box,
        config.l_box,
        config.weak_threshold,
        InteractionSet::ResonantAndWeak,
    );
    let u = system.integrate_gauged(&psi0, &times, config.tolerance)?;
    let resonant_outside = support_confinement_report(&u, config.m_box, config.n_box).max_outside();

    let mut solver = FullSolver::new(&config.spec, config.l_box, config.full_dt, config.grid)?;
    let run_a = solver.integrate(&psi0, &times)?;
    let psi_b0 = lie_transform(&chi, &psi0, FlowDirection::Forward, &flow)?;
    let run_b = solver.integrate(&psi_b0, &times)?;

    let sup_outside_series: Vec<f64> = run_a.states.iter().map(|s| s.max_abs_outside(&config.m_box)).collect();
    let sup_outside = sup_outside_series.iter().copied().fold(0.0, f64::max);

    let stride = (config.samples / opts.gap_samples).max(1);
    let mut gap_times = Vec::new();
    let mut gap_series = Vec::new();
    let (mut z_outside, mut z_minus_v_outside, mut pullback_gap) = (0.0f64, 0.0f64, 0.0f64);
    for i in (0..times.len()).step_by(stride) {
        let t = times[i];
        let v = system.ungauge(&u.states[i], t);
        let z = lie_transform(&chi, &run_b.states[i], FlowDirection::Inverse, &flow)?;
        let diff = z.difference(&v)?;
        gap_times.push(t);
        gap_series.push(sobolev_norm(&diff, s));
        z_outside = z_outside.max(z.max_abs_outside(&config.m_box));
        z_minus_v_outside = z_minus_v_outside.max(residual(&diff, &config.m_box).sup_norm());
        let tv = lie_transform(&chi, &v, FlowDirection::Forward, &flow)?;
        pullback_gap = pullback_gap.max(sobolev_norm(&run_a.states[i].difference(&tv)?, s));
    }
    let duhamel_gap = gap_series.iter().copied().fold(0.0, f64::max);
    let eps = config.epsilon;
    let threshold = eps.powf(opts.gamma);
    let largest_passing_gamma = opts
        .gamma_grid
        .iter()
        .copied()
        .filter(|g| *g < 3.0 && sup_outside < eps.powf(*g))
        .fold(None, |best: Option<f64>, g| Some(best.map_or(g, |b| b.max(g))));

    Ok(TheoremReport {
        epsilon: eps,
        gamma: opts.gamma,
        threshold,
        t_final: window.t_final,
        active_bound: window.active_bound,
        beyond_window: window.beyond_window,
        sup_outside,
        margin: if sup_outside > 0.0 {
            threshold / sup_outside
        } else {
            f64::INFINITY
        },
        pass: sup_outside < threshold,
        duhamel_gap,
        gap_ratio: duhamel_gap / eps.powi(3),
        z_outside,
        z_minus_v_outside,
        pullback_gap,
        resonant_outside,
        largest_passing_gamma,
        full_mass_drift: run_a.mass_drift(),
        full_hamiltonian_drift: run_a.hamiltonian_drift(),
        chi_terms: chi.len(),
        small_divisor_constant: chi.small_divisor_constant(),
        gap_times,
        gap_series,
        sup_outside_series,
        times,
    })
}
