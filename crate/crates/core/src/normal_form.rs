//! The order-4 normal form: the auxiliary Hamiltonian χ and its time-1 flow.
//!
//! Conventions. The bracket is `{F, G} = i Σ (∂F/∂z_k ∂G/∂z̄_k − ∂F/∂z̄_k ∂G/∂z_k)`,
//! the vector field of `G` is `X_G(z)_k = −i ∂G/∂z̄_k`, `H0 = Σ λ_k |z_k|²`,
//! and every quartic polynomial carries a `½` in front of its sum over ordered
//! momentum-conserving tuples, so `P = ½ Σ z_{k1} z_{k2} z̄_{k3} z̄_{k4}` and the
//! equation of motion of `H0 + P` is `i ż_k = λ_k z_k + Σ z_{k1} z_{k2} z̄_{k3}`.
//!
//! With `g = i/d`, `d = λ_{k1} + λ_{k2} − λ_{k3} − λ_{k4}`, the bracket of each
//! monomial with `H0` is `i·d·monomial`, so `{χ, H0} + P` keeps exactly the
//! terms χ does not cover. χ1 covers the non-resonant tuples inside `Q_N`; χ2
//! covers the tuples that leave `Q_N` (within the storage box `Q_L`) and have
//! `|d| ≥ threshold`. What remains is `𝓛` (resonant, inside) and `𝓤` (weak, crossing).
//!
//! χ has on the order of `|Q_L|³` terms, so it is never stored. Its
//! coefficient is a function of the per-coordinate defects `(A, B)` and of
//! whether the tuple stays inside `Q_N`, and is tabulated on that key.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{dispersion, sobolev_norm, LatticeBox, ModeField, TorusSpec};
use crate::ode::{Dopri5, Dopri5Options, Stats};
use crate::quartic::{CoefTable, QuarticIndex};
use crate::resonance::{self, coordinate_defects, ResonanceClass, ResonantTuple, Tuple};

type C = Complex64;

/// Default guard on `C_{N,ω}^{1/2}·‖z0‖_s²` for the flow.
pub const DEFAULT_FLOW_GUARD: f64 = 0.1;

/// Which half of χ a tuple belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiPart {
    /// All modes in `Q_N`, non-resonant.
    Chi1,
    /// Some mode outside `Q_N`, `|defect| ≥ threshold`.
    Chi2,
}

impl ChiPart {
    pub fn as_str(self) -> &'static str {
        match self {
            ChiPart::Chi1 => "chi1",
            ChiPart::Chi2 => "chi2",
        }
    }
}

/// How a momentum-conserving tuple in `Q_L` is treated by the normal form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermRole {
    Chi(ChiPart),
    /// Kept in `𝓛`.
    Resonant,
    /// Kept in `𝓤`.
    Weak,
}

/// The auxiliary Hamiltonian `χ = χ1 + χ2 = ½ Σ g_t · z_{t1} z_{t2} z̄_{t3} z̄_{t4}`.
#[derive(Clone, Debug)]
pub struct ChiPolynomial {
    spec: TorusSpec,
    n_box: LatticeBox,
    l_box: LatticeBox,
    weak_threshold: f64,
    index: Arc<QuarticIndex>,
    field_table: CoefTable,
    chi1_terms: usize,
    chi2_terms: usize,
    small_divisor: f64,
}

/// `𝓛` and `𝓤` as explicit tuple lists.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct NormalFormDecomposition {
    pub resonant_terms: Vec<ResonantTuple>,
    pub weak_terms: Vec<ResonantTuple>,
}

fn role(spec: &TorusSpec, threshold: f64, a: i32, b: i32, inside: bool) -> TermRole {
    let d = spec.combine_defects(a as i64, b as i64);
    if inside {
        if spec.defects_resonant(a as i64, b as i64) {
            TermRole::Resonant
        } else {
            TermRole::Chi(ChiPart::Chi1)
        }
    } else if d.abs() < threshold {
        TermRole::Weak
    } else {
        TermRole::Chi(ChiPart::Chi2)
    }
}

/// Builds χ on `Q_L` with inner box `Q_N`, and lists the retained terms `𝓛`, `𝓤`.
///
/// Rational tori are refused: resonant non-degenerate tuples inside `Q_N`
/// are then generic and no bounded `g` removes the nonparallel ones.
pub fn build_chi(
    spec: &TorusSpec,
    n_box: LatticeBox,
    l_box: LatticeBox,
    weak_threshold: f64,
) -> Result<(ChiPolynomial, NormalFormDecomposition)> {
    if spec.is_rational() {
        let witness = resonance::enumerate_resonances(spec, LatticeBox::new(n_box.half_width.min(4)))
            .ok()
            .and_then(|r| {
                r.into_iter()
                    .find(|t| t.class == ResonanceClass::Nonparallel)
                    .map(|t| t.modes)
            });
        return Err(Error::RationalTorus { witness });
    }
    if n_box.half_width >= l_box.half_width {
        return Err(Error::InvalidConfig(format!(
            "inner half-width {} must be below the storage half-width {}",
            n_box.half_width, l_box.half_width
        )));
    }
    if !(weak_threshold > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "weak threshold must be positive, got {weak_threshold}"
        )));
    }
    let index = Arc::new(QuarticIndex::new(l_box, n_box));
    let field_table = index.table(|a, b, inside| match role(spec, weak_threshold, a, b, inside) {
        TermRole::Chi(_) => 1.0 / spec.combine_defects(a as i64, b as i64),
        _ => 0.0,
    });
    let mut decomposition = NormalFormDecomposition::default();
    let (mut chi1, mut chi2) = (0usize, 0usize);
    index.for_each_tuple(|t, a, b, inside| match role(spec, weak_threshold, a, b, inside) {
        TermRole::Chi(ChiPart::Chi1) => chi1 += 1,
        TermRole::Chi(ChiPart::Chi2) => chi2 += 1,
        TermRole::Resonant => decomposition.resonant_terms.push(tag(spec, t, a, b)),
        TermRole::Weak => decomposition.weak_terms.push(tag(spec, t, a, b)),
    });
    let chi = ChiPolynomial {
        spec: *spec,
        n_box,
        l_box,
        weak_threshold,
        index,
        field_table,
        chi1_terms: chi1,
        chi2_terms: chi2,
        small_divisor: resonance::small_divisor_constant(spec, n_box),
    };
    Ok((chi, decomposition))
}

fn tag(spec: &TorusSpec, t: Tuple, a: i32, b: i32) -> ResonantTuple {
    ResonantTuple {
        modes: t,
        class: resonance::classify(&t).expect("index tuples conserve momentum"),
        weak_defect: spec.combine_defects(a as i64, b as i64),
    }
}

impl ChiPolynomial {
    pub fn spec(&self) -> &TorusSpec {
        &self.spec
    }

    pub fn n_box(&self) -> LatticeBox {
        self.n_box
    }

    pub fn l_box(&self) -> LatticeBox {
        self.l_box
    }

    pub fn weak_threshold(&self) -> f64 {
        self.weak_threshold
    }

    pub fn index(&self) -> &Arc<QuarticIndex> {
        &self.index
    }

    pub fn chi1_len(&self) -> usize {
        self.chi1_terms
    }

    pub fn chi2_len(&self) -> usize {
        self.chi2_terms
    }

    pub fn len(&self) -> usize {
        self.chi1_terms + self.chi2_terms
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `C_{N,ω}` for the inner box.
    pub fn small_divisor_constant(&self) -> f64 {
        self.small_divisor
    }

    /// Role of an arbitrary tuple; `None` if it does not conserve momentum or leaves `Q_L`.
    pub fn role(&self, t: &Tuple) -> Option<TermRole> {
        if !resonance::conserves_momentum(t) || !t.iter().all(|k| self.l_box.contains(*k)) {
            return None;
        }
        let (a, b) = coordinate_defects(t);
        let inside = t.iter().all(|k| self.n_box.contains(*k));
        Some(role(&self.spec, self.weak_threshold, a as i32, b as i32, inside))
    }

    /// `g = i/defect` for tuples covered by χ, with their part.
    pub fn coefficient(&self, t: &Tuple) -> Option<(C, ChiPart)> {
        match self.role(t)? {
            TermRole::Chi(part) => Some((C::new(0.0, 1.0 / resonance::defect(&self.spec, t)), part)),
            _ => None,
        }
    }

    /// Calls `f(tuple, g, part)` for every term of χ, ordered by the last mode.
    pub fn for_each_term(&self, mut f: impl FnMut(Tuple, C, ChiPart)) {
        let (spec, thr) = (self.spec, self.weak_threshold);
        self.index.for_each_tuple(|t, a, b, inside| {
            if let TermRole::Chi(part) = role(&spec, thr, a, b, inside) {
                f(t, C::new(0.0, 1.0 / spec.combine_defects(a as i64, b as i64)), part);
            }
        });
    }

    /// Largest `|g|` over χ1.
    pub fn max_chi1_modulus(&self) -> f64 {
        let mut best: f64 = 0.0;
        let spec = self.spec;
        self.index.for_each_tuple(|_, a, b, inside| {
            if inside && !spec.defects_resonant(a as i64, b as i64) {
                best = best.max(1.0 / spec.combine_defects(a as i64, b as i64).abs());
            }
        });
        best
    }

    fn values_of(&self, z: &ModeField) -> Result<Vec<C>> {
        Ok(z.fit_to(self.l_box)?.into_values())
    }

    /// `X_χ(z)_k = Σ_{k1+k2=k3+k} (1/d) z_{k1} z_{k2} z̄_{k3}` over χ's tuples.
    pub fn vector_field_into(&self, z: &[C], out: &mut [C]) {
        self.index.contract_into(z, &self.field_table, out);
    }

    /// `χ(z) = ½ Σ_k conj(z_k) · i · X_χ(z)_k`.
    pub fn value(&self, z: &ModeField) -> Result<f64> {
        let v = self.values_of(z)?;
        let x = self.index.contract(&v, &self.field_table);
        Ok(0.5 * v.iter().zip(&x).map(|(z, x)| (z.conj() * C::i() * x).re).sum::<f64>())
    }

    /// `{χ, H0}(z) = 2 Re Σ_k λ_k X_χ(z)_k conj(z_k)`.
    pub fn bracket_with_h0(&self, z: &ModeField) -> Result<f64> {
        let v = self.values_of(z)?;
        let x = self.index.contract(&v, &self.field_table);
        Ok(2.0
            * self
                .l_box
                .modes()
                .zip(v.iter().zip(&x))
                .map(|(k, (z, x))| dispersion(&self.spec, k) * (x * z.conj()).re)
                .sum::<f64>())
    }
}

/// `X_χ(z)` as a field on `Q_L`.
pub fn chi_vector_field(chi: &ChiPolynomial, z: &ModeField) -> Result<ModeField> {
    let v = chi.values_of(z)?;
    let mut out = vec![C::new(0.0, 0.0); v.len()];
    chi.vector_field_into(&v, &mut out);
    ModeField::from_values(chi.l_box, out)
}

/// `Dχ(z)[h] = 2 Re Σ_k conj(h_k) · i · X_χ(z)_k`, the directional derivative.
pub fn chi_directional_derivative(chi: &ChiPolynomial, z: &ModeField, h: &ModeField) -> Result<f64> {
    let x = chi_vector_field(chi, z)?;
    let h = chi.values_of(h)?;
    Ok(2.0
        * h.iter()
            .zip(x.values())
            .map(|(h, x)| (h.conj() * C::i() * x).re)
            .sum::<f64>())
}

/// Direction of the time-1 flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowDirection {
    /// `t ∈ [0, 1]`: the map 𝒯.
    Forward,
    /// `t ∈ [0, −1]`: the map 𝒯⁻¹.
    Inverse,
}

/// Settings for [`lie_transform`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    /// Relative tolerance of the adaptive integrator.
    pub ode_tol: f64,
    /// Sobolev index used for the smallness guard.
    pub sobolev_index: f64,
    /// Largest accepted `C_{N,ω}^{1/2}·‖z0‖_s²`.
    pub guard: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            ode_tol: 1e-10,
            sobolev_index: 1.5,
            guard: DEFAULT_FLOW_GUARD,
        }
    }
}

/// Flow endpoint with integrator counters.
#[derive(Clone, Debug)]
pub struct FlowResult {
    pub field: ModeField,
    pub stats: Stats,
}

/// Time-1 (or time −1) flow of `ż = X_χ(z)`.
pub fn lie_transform(
    chi: &ChiPolynomial,
    z0: &ModeField,
    direction: FlowDirection,
    opts: &FlowOptions,
) -> Result<ModeField> {
    lie_transform_with_stats(chi, z0, direction, opts).map(|r| r.field)
}

pub fn lie_transform_with_stats(
    chi: &ChiPolynomial,
    z0: &ModeField,
    direction: FlowDirection,
    opts: &FlowOptions,
) -> Result<FlowResult> {
    let v = chi.values_of(z0)?;
    let norm = sobolev_norm(z0, opts.sobolev_index);
    let measure = chi.small_divisor.sqrt() * norm * norm;
    if measure > opts.guard {
        return Err(Error::OutsideAnalyticityBall {
            value: measure,
            limit: opts.guard,
        });
    }
    if v.iter().all(|c| *c == C::new(0.0, 0.0)) {
        return Ok(FlowResult {
            field: ModeField::zeros(chi.l_box),
            stats: Stats::default(),
        });
    }
    let end = match direction {
        FlowDirection::Forward => 1.0,
        FlowDirection::Inverse => -1.0,
    };
    let mut solver = Dopri5::new(
        |_t, y: &[C], dy: &mut [C]| chi.vector_field_into(y, dy),
        Dopri5Options::with_rtol(opts.ode_tol),
    );
    let mut out = solver.solve(0.0, &v, &[end])?;
    Ok(FlowResult {
        field: ModeField::from_values(chi.l_box, out.pop().expect("one output time"))?,
        stats: solver.stats(),
    })
}

/// Maximum residual of `{χ, H0} + P − 𝓛 − 𝓤` over sample fields.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PoissonReport {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Scale of the terms involved, `max |P(z)|` over the samples.
    pub max_term_magnitude: f64,
    pub term_count: usize,
}

/// Evaluates the cancellation identity `{χ, H0} + P = 𝓛 + 𝓤` at each sample.
///
/// `P`, `𝓛` and `𝓤` are evaluated from the explicit decomposition lists and
/// an independent contraction, not from χ's coefficient table.
pub fn verify_poisson_cancellation(
    chi: &ChiPolynomial,
    decomposition: &NormalFormDecomposition,
    spec: &TorusSpec,
    samples: &[ModeField],
) -> Result<PoissonReport> {
    let index = chi.index();
    let full = index.table(|_, _, _| 1.0);
    let l = chi.l_box;
    let mut residuals = Vec::with_capacity(samples.len());
    let mut max_term: f64 = 0.0;
    for z in samples {
        let v = chi.values_of(z)?;
        let nl = index.contract(&v, &full);
        let p = 0.5 * v.iter().zip(&nl).map(|(z, n)| (z.conj() * n).re).sum::<f64>();
        let retained = |terms: &[ResonantTuple]| -> f64 {
            let g = |m| v[l.index(m).expect("retained tuples lie in the storage box")];
            0.5 * terms
                .iter()
                .map(|t| {
                    let [a, b, c, d] = t.modes;
                    (g(a) * g(b) * g(c).conj() * g(d).conj()).re
                })
                .sum::<f64>()
        };
        let lres = retained(&decomposition.resonant_terms);
        let ures = retained(&decomposition.weak_terms);
        let x = index.contract(&v, &chi.field_table);
        let bracket = 2.0
            * l.modes()
                .zip(v.iter().zip(&x))
                .map(|(k, (z, x))| dispersion(spec, k) * (x * z.conj()).re)
                .sum::<f64>();
        max_term = max_term.max(p.abs()).max(bracket.abs());
        residuals.push((bracket + p - lres - ures).abs());
    }
    Ok(PoissonReport {
        max_residual: residuals.iter().copied().fold(0.0, f64::max),
        residuals,
        max_term_magnitude: max_term,
        term_count: chi.len() + decomposition.resonant_terms.len() + decomposition.weak_terms.len(),
    })
}

/// One point of the cubic-smallness sweep.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub epsilon: f64,
    /// `‖𝒯(z) − z‖_s`.
    pub displacement: f64,
    /// `displacement / ε³`.
    pub ratio: f64,
    /// `‖𝒯⁻¹(𝒯(z)) − z‖_s`.
    pub round_trip: f64,
}

/// Sweep of `‖𝒯(z) − z‖_s` against `ε = ‖z‖_s` along a fixed direction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    /// Least-squares slope of `log displacement` against `log ε`.
    pub slope: f64,
    pub max_round_trip: f64,
}

/// Runs the forward and inverse flow on `ε · direction/‖direction‖_s` for each `ε`.
pub fn scaling_sweep(
    chi: &ChiPolynomial,
    direction: &ModeField,
    epsilons: &[f64],
    opts: &FlowOptions,
) -> Result<ScalingReport> {
    let s = opts.sobolev_index;
    let unit_norm = sobolev_norm(direction, s);
    if unit_norm == 0.0 {
        return Err(Error::InvalidConfig("sweep direction is zero".into()));
    }
    let mut points = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let z = direction.scaled(eps / unit_norm).fit_to(chi.l_box)?;
        let tz = lie_transform(chi, &z, FlowDirection::Forward, opts)?;
        let back = lie_transform(chi, &tz, FlowDirection::Inverse, opts)?;
        let displacement = sobolev_norm(&tz.difference(&z)?, s);
        points.push(ScalingPoint {
            epsilon: eps,
            displacement,
            ratio: displacement / eps.powi(3),
            round_trip: sobolev_norm(&back.difference(&z)?, s),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.epsilon.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.displacement.ln()).collect();
    Ok(ScalingReport {
        slope: least_squares_slope(&xs, &ys),
        max_round_trip: points.iter().map(|p| p.round_trip).fold(0.0, f64::max),
        points,
    })
}

/// Slope of the least-squares line through `(x_i, y_i)`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
