//! The gauged resonant system and the condensed system.
//!
//! Both keep the same interactions: resonant tuples inside `Q_N` and, unless
//! restricted, weakly resonant tuples that cross `Q_N` inside `Q_L`. With
//! `u_k = e^{iλ_k t} v_k` the condensed system
//! `i v̇_k = λ_k v_k + Σ v_{k1} v_{k2} v̄_{k3}` becomes
//! `i u̇_k = Σ e^{−i d t} u_{k1} u_{k2} ū_{k3}` with `d = λ_{k1} + λ_{k2} − λ_{k3} − λ_k`.

use std::collections::HashMap;

use num_complex::Complex64;

use super::{resolve_window, ConservedRecord, SimulationConfig, Trajectory};
use crate::error::Result;
use crate::lattice::{dispersion, LatticeBox, ModeField, TorusSpec};
use crate::ode::{Dopri5, Dopri5Options};
use crate::quartic::QuarticIndex;

type C = Complex64;

/// Which interactions are retained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InteractionSet {
    /// Only resonant tuples with every mode in `Q_N`.
    ResonantOnly,
    /// Resonant tuples in `Q_N` plus weak tuples crossing `Q_N`.
    ResonantAndWeak,
}

/// Explicit interaction lists grouped by output mode.
#[derive(Clone, Debug)]
pub struct ResonantSystem {
    spec: TorusSpec,
    storage: LatticeBox,
    lambda: Vec<f64>,
    offsets: Vec<usize>,
    indices: Vec<[u32; 3]>,
    class: Vec<u16>,
    class_defect: Vec<f64>,
}

impl ResonantSystem {
    pub fn new(
        spec: &TorusSpec,
        n_box: LatticeBox,
        l_box: LatticeBox,
        weak_threshold: f64,
        set: InteractionSet,
    ) -> Self {
        let index = QuarticIndex::new(l_box, n_box);
        let mut offsets = Vec::with_capacity(l_box.len() + 1);
        let mut indices = Vec::new();
        let mut class = Vec::new();
        let mut class_of: HashMap<(i32, i32), u16> = HashMap::new();
        let mut class_defect = Vec::new();
        offsets.push(0);
        for out in 0..l_box.len() {
            index.for_each_index(out, |idx, a, b, inside| {
                let d = spec.combine_defects(a as i64, b as i64);
                let keep = if inside {
                    spec.defects_resonant(a as i64, b as i64)
                } else {
                    set == InteractionSet::ResonantAndWeak && d.abs() < weak_threshold
                };
                if !keep {
                    return;
                }
                let c = *class_of.entry((a, b)).or_insert_with(|| {
                    class_defect.push(d);
                    (class_defect.len() - 1) as u16
                });
                indices.push(idx.map(|i| i as u32));
                class.push(c);
            });
            offsets.push(indices.len());
        }
        Self {
            spec: *spec,
            storage: l_box,
            lambda: l_box.modes().map(|k| dispersion(spec, k)).collect(),
            offsets,
            indices,
            class,
            class_defect,
        }
    }

    pub fn storage(&self) -> LatticeBox {
        self.storage
    }

    pub fn spec(&self) -> &TorusSpec {
        &self.spec
    }

    pub fn term_count(&self) -> usize {
        self.indices.len()
    }

    /// Distinct λ-defects carried by retained tuples.
    pub fn defects(&self) -> &[f64] {
        &self.class_defect
    }

    /// Calls `f(out, [i1, i2, i3], defect)` for every retained term.
    pub fn for_each_term(&self, mut f: impl FnMut(usize, [usize; 3], f64)) {
        for out in 0..self.storage.len() {
            for j in self.offsets[out]..self.offsets[out + 1] {
                f(
                    out,
                    self.indices[j].map(|i| i as usize),
                    self.class_defect[self.class[j] as usize],
                );
            }
        }
    }

    fn phases(&self, t: f64) -> Vec<C> {
        self.class_defect
            .iter()
            .map(|d| {
                if *d == 0.0 {
                    C::new(1.0, 0.0)
                } else {
                    C::from_polar(1.0, -d * t)
                }
            })
            .collect()
    }

    /// `S_k = Σ e^{−i d t} u_{k1} u_{k2} ū_{k3}` for every `k`.
    pub fn interaction_into(&self, t: f64, u: &[C], out: &mut [C]) {
        let phases = self.phases(t);
        for (k, o) in out.iter_mut().enumerate() {
            let mut acc = C::new(0.0, 0.0);
            for j in self.offsets[k]..self.offsets[k + 1] {
                let [a, b, c] = self.indices[j];
                let p = u[a as usize] * u[b as usize];
                if p.re == 0.0 && p.im == 0.0 {
                    continue;
                }
                acc += p * u[c as usize].conj() * phases[self.class[j] as usize];
            }
            *o = acc;
        }
    }

    /// `u̇ = −i S(t, u)`.
    pub fn gauged_rhs(&self, t: f64, u: &[C], du: &mut [C]) {
        self.interaction_into(t, u, du);
        for v in du.iter_mut() {
            *v = C::new(v.im, -v.re);
        }
    }

    /// `v̇ = −i (λ v + S(0, v))`.
    pub fn condensed_rhs(&self, v: &[C], dv: &mut [C]) {
        self.interaction_into(0.0, v, dv);
        for ((d, x), lam) in dv.iter_mut().zip(v).zip(&self.lambda) {
            let w = *d + x * lam;
            *d = C::new(w.im, -w.re);
        }
    }

    /// `Σ λ_k |u_k|² + ½ Re Σ_k ū_k S_k(t, u)`: the condensed energy written in gauged variables.
    pub fn energy(&self, t: f64, u: &[C]) -> f64 {
        let mut s = vec![C::new(0.0, 0.0); u.len()];
        self.interaction_into(t, u, &mut s);
        u.iter()
            .zip(&s)
            .zip(&self.lambda)
            .map(|((u, s), lam)| lam * u.norm_sqr() + 0.5 * (u.conj() * s).re)
            .sum()
    }

    fn record(&self, u: &ModeField, energy_time: f64) -> ConservedRecord {
        ConservedRecord {
            mass: u.mass(),
            hamiltonian: self.energy(energy_time, u.values()),
            momentum: u.momentum(),
        }
    }

    /// Integrates the gauged system and samples it at `times` (starting at 0).
    pub fn integrate_gauged(&self, u0: &ModeField, times: &[f64], tol: f64) -> Result<Trajectory> {
        let y0 = u0.fit_to(self.storage)?.into_values();
        let mut solver = Dopri5::new(
            |t, y: &[C], dy: &mut [C]| self.gauged_rhs(t, y, dy),
            Dopri5Options::with_rtol(tol),
        );
        let ys = solve_from_zero(&mut solver, &y0, times)?;
        self.assemble(times, ys, true)
    }

    /// Integrates the condensed system and samples it at `times` (starting at 0).
    pub fn integrate_condensed(&self, v0: &ModeField, times: &[f64], tol: f64) -> Result<Trajectory> {
        let y0 = v0.fit_to(self.storage)?.into_values();
        let mut solver = Dopri5::new(
            |_t, y: &[C], dy: &mut [C]| self.condensed_rhs(y, dy),
            Dopri5Options::with_rtol(tol),
        );
        let ys = solve_from_zero(&mut solver, &y0, times)?;
        self.assemble(times, ys, false)
    }

    fn assemble(&self, times: &[f64], ys: Vec<Vec<C>>, gauged: bool) -> Result<Trajectory> {
        let mut states = Vec::with_capacity(ys.len());
        let mut conserved = Vec::with_capacity(ys.len());
        for (t, y) in times.iter().zip(ys) {
            let field = ModeField::from_values(self.storage, y)?;
            conserved.push(self.record(&field, if gauged { *t } else { 0.0 }));
            states.push(field);
        }
        Ok(Trajectory {
            times: times.to_vec(),
            states,
            conserved,
            beyond_window: false,
        })
    }

    /// `u_k = e^{iλ_k t} v_k`.
    pub fn gauge(&self, v: &ModeField, t: f64) -> ModeField {
        self.rotate(v, t)
    }

    /// `v_k = e^{−iλ_k t} u_k`.
    pub fn ungauge(&self, u: &ModeField, t: f64) -> ModeField {
        self.rotate(u, -t)
    }

    fn rotate(&self, f: &ModeField, t: f64) -> ModeField {
        let f = f.rebox(self.storage);
        let values = f
            .values()
            .iter()
            .zip(&self.lambda)
            .map(|(v, lam)| v * C::from_polar(1.0, lam * t))
            .collect();
        ModeField::from_values(self.storage, values).expect("same box")
    }
}

fn solve_from_zero<F>(solver: &mut Dopri5<F>, y0: &[C], times: &[f64]) -> Result<Vec<Vec<C>>>
where
    F: FnMut(f64, &[C], &mut [C]),
{
    match times.first() {
        Some(&0.0) => {
            let mut ys = vec![y0.to_vec()];
            ys.extend(solver.solve(0.0, y0, &times[1..])?);
            Ok(ys)
        }
        _ => solver.solve(0.0, y0, times),
    }
}

fn system_for(config: &SimulationConfig, set: InteractionSet) -> ResonantSystem {
    ResonantSystem::new(&config.spec, config.n_box, config.l_box, config.weak_threshold, set)
}

/// Gauged resonant system from `u0` over the resolved window, with resonant and weak terms.
pub fn integrate_resonant(config: &SimulationConfig, u0: &ModeField) -> Result<Trajectory> {
    config.validate()?;
    let window = resolve_window(config, u0);
    let system = system_for(config, InteractionSet::ResonantAndWeak);
    let mut traj = system.integrate_gauged(u0, &config.output_times(window.t_final), config.tolerance)?;
    traj.beyond_window = window.beyond_window;
    Ok(traj)
}

/// Condensed system from `v0` over the resolved window.
pub fn integrate_condensed(config: &SimulationConfig, v0: &ModeField) -> Result<Trajectory> {
    config.validate()?;
    let window = resolve_window(config, v0);
    let system = system_for(config, InteractionSet::ResonantAndWeak);
    let mut traj = system.integrate_condensed(v0, &config.output_times(window.t_final), config.tolerance)?;
    traj.beyond_window = window.beyond_window;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{random_field, Mode};

    fn cfg(spec: TorusSpec) -> SimulationConfig {
        let mut c = SimulationConfig::new(spec, 1, 4, 5, 0.05).with_t_final(2.0);
        c.samples = 20;
        c
    }

    #[test]
    fn zero_data_stays_zero() {
        let c = cfg(TorusSpec::sqrt2());
        let traj = integrate_resonant(&c, &ModeField::zeros(c.l_box)).unwrap();
        assert!(traj.states.iter().all(|s| s.sup_norm() == 0.0));
        let traj = integrate_condensed(&c, &ModeField::zeros(c.l_box)).unwrap();
        assert!(traj.states.iter().all(|s| s.sup_norm() == 0.0));
    }

    #[test]
    fn single_mode_rotates_at_its_own_intensity() {
        let c = cfg(TorusSpec::sqrt2());
        let a = C::new(0.3, -0.4);
        let k0 = Mode::new(1, -1);
        let u0 = ModeField::from_entries(c.l_box, [(k0, a)]).unwrap();
        let traj = integrate_resonant(&c, &u0).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let exact = a * C::from_polar(1.0, -a.norm_sqr() * t);
            assert!((s.get(k0) - exact).norm() < 1e-9);
            assert!((s.get(k0).norm() - a.norm()).abs() < 1e-10);
        }
        let traj = integrate_condensed(&c, &u0).unwrap();
        let lam = dispersion(&c.spec, k0);
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let exact = a * C::from_polar(1.0, -(a.norm_sqr() + lam) * t);
            assert!((s.get(k0) - exact).norm() < 1e-9);
        }
    }

    #[test]
    fn gauge_links_condensed_and_resonant() {
        let c = cfg(TorusSpec::sqrt2());
        let system = system_for(&c, InteractionSet::ResonantAndWeak);
        let u0 = random_field(c.l_box, c.m_box, c.s, 0.3, 11);
        let times = c.output_times(2.0);
        let u = system.integrate_gauged(&u0, &times, 1e-10).unwrap();
        let v = system.integrate_condensed(&u0, &times, 1e-10).unwrap();
        for ((t, us), vs) in times.iter().zip(&u.states).zip(&v.states) {
            let g = system.gauge(vs, *t);
            assert!(us.difference(&g).unwrap().sup_norm() < 1e-9);
        }
    }

    #[test]
    fn rhs_matches_explicit_tuple_sum() {
        let spec = TorusSpec::sqrt2();
        let (n, l) = (LatticeBox::new(1), LatticeBox::new(2));
        let system = ResonantSystem::new(&spec, n, l, 1.0, InteractionSet::ResonantAndWeak);
        let u = random_field(l, l, 0.0, 1.0, 5);
        let t = 0.7;
        let mut s = vec![C::new(0.0, 0.0); l.len()];
        system.interaction_into(t, u.values(), &mut s);
        for (o, k) in l.modes().enumerate() {
            let mut acc = C::new(0.0, 0.0);
            for k1 in l.modes() {
                for k2 in l.modes() {
                    let k3 = k1 + k2 - k;
                    if !l.contains(k3) {
                        continue;
                    }
                    let tup = [k1, k2, k3, k];
                    let d = crate::resonance::defect(&spec, &tup);
                    let inside = tup.iter().all(|m| n.contains(*m));
                    let keep = if inside {
                        crate::resonance::is_resonant(&spec, &tup)
                    } else {
                        d.abs() < 1.0
                    };
                    if keep {
                        acc += u.get(k1) * u.get(k2) * u.get(k3).conj() * C::from_polar(1.0, -d * t);
                    }
                }
            }
            assert!((acc - s[o]).norm() < 1e-12);
        }
    }
}
