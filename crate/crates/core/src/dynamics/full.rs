//! The `Q_L`-truncated cubic NLS `i ψ̇_k = λ_k ψ_k + Σ ψ_{k1} ψ_{k2} ψ̄_{k3}` by Strang splitting.
//!
//! Each step is an exact half rotation `e^{−iλ dt/2}`, one classical RK4 step
//! of `i ψ̇ = N(ψ)` with `N` evaluated by [`CubicFft`], and another half rotation.
//! The recorded Hamiltonian is `Σ λ_k |ψ_k|² + ½ Σ ψ_{k1} ψ_{k2} ψ̄_{k3} ψ̄_{k4}`.

use num_complex::Complex64;

use super::{resolve_window, ConservedRecord, SimulationConfig, Trajectory};
use crate::error::{Error, Result};
use crate::lattice::{dispersion, LatticeBox, ModeField, TorusSpec};
use crate::ode::rk4_step;
use crate::spectral::CubicFft;

type C = Complex64;

/// Split-step integrator for one storage box.
#[derive(Debug, Clone)]
pub struct FullSolver {
    storage: LatticeBox,
    lambda: Vec<f64>,
    fft: CubicFft,
    dt: f64,
}

impl FullSolver {
    pub fn new(spec: &TorusSpec, storage: LatticeBox, dt: f64, grid: Option<usize>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("step must be positive, got {dt}")));
        }
        Ok(Self {
            storage,
            lambda: storage.modes().map(|k| dispersion(spec, k)).collect(),
            fft: CubicFft::new(storage, grid)?,
            dt,
        })
    }

    pub fn grid(&self) -> usize {
        self.fft.grid()
    }

    /// `Σ λ_k |ψ_k|² + ½ Σ ψ_{k1} ψ_{k2} ψ̄_{k3} ψ̄_{k4}`.
    pub fn hamiltonian(&mut self, psi: &[C]) -> f64 {
        let quad: f64 = psi.iter().zip(&self.lambda).map(|(p, l)| l * p.norm_sqr()).sum();
        quad + 0.5 * self.fft.quartic_sum(psi)
    }

    /// Samples the solution from `psi0` at `times` (starting at 0).
    ///
    /// Each interval between output times is split into equal steps no longer than `dt`.
    pub fn integrate(&mut self, psi0: &ModeField, times: &[f64]) -> Result<Trajectory> {
        let mut psi = psi0.fit_to(self.storage)?.into_values();
        let mut scratch: [Vec<C>; 5] = Default::default();
        let mut states = Vec::with_capacity(times.len());
        let mut conserved = Vec::with_capacity(times.len());
        let mut t = 0.0;
        for &target in times {
            if target < t {
                return Err(Error::InvalidConfig(format!(
                    "output times must increase, got {target} after {t}"
                )));
            }
            let span = target - t;
            if span > 0.0 {
                let steps = (span / self.dt).ceil().max(1.0) as usize;
                let h = span / steps as f64;
                let fft = &mut self.fft;
                let lambda = &self.lambda;
                let rotate = |psi: &mut [C], h: f64| {
                    for (p, l) in psi.iter_mut().zip(lambda) {
                        *p *= C::from_polar(1.0, -l * h);
                    }
                };
                rotate(&mut psi, 0.5 * h);
                for step in 0..steps {
                    rk4_step(&mut psi, h, &mut scratch, |y, dy| {
                        fft.nonlinearity(y, dy);
                        for v in dy.iter_mut() {
                            *v = C::new(v.im, -v.re);
                        }
                    });
                    // adjacent half rotations merge into one
                    rotate(&mut psi, if step + 1 == steps { 0.5 * h } else { h });
                }
                t = target;
            }
            let field = ModeField::from_values(self.storage, psi.clone())?;
            conserved.push(ConservedRecord {
                mass: field.mass(),
                hamiltonian: self.hamiltonian(&psi),
                momentum: field.momentum(),
            });
            states.push(field);
        }
        Ok(Trajectory {
            times: times.to_vec(),
            states,
            conserved,
            beyond_window: false,
        })
    }
}

/// Hamiltonian of the truncated NLS at `psi`.
pub fn full_hamiltonian(spec: &TorusSpec, psi: &ModeField) -> Result<f64> {
    let mut solver = FullSolver::new(spec, psi.lattice(), 1.0, None)?;
    Ok(solver.hamiltonian(psi.values()))
}

/// Full system from `psi0` over the resolved window.
pub fn integrate_full(config: &SimulationConfig, psi0: &ModeField) -> Result<Trajectory> {
    config.validate()?;
    let window = resolve_window(config, psi0);
    let mut solver = FullSolver::new(&config.spec, config.l_box, config.full_dt, config.grid)?;
    let mut traj = solver.integrate(psi0, &config.output_times(window.t_final))?;
    traj.beyond_window = window.beyond_window;
    Ok(traj)
}
