//! Exact time derivatives at `t = 0` of the gauged resonant system.
//!
//! Differentiating `u̇_k = −i Σ e^{−i d t} u_{k1} u_{k2} ū_{k3}` `n − 1` times
//! and distributing the derivatives over the four factors gives
//!
//! `Dⁿu_k = −i Σ_terms Σ_{α0+α1+α2+α3 = n−1} (n−1)!/(α0! α1! α2! α3!)
//!           (−i d)^{α0} D^{α1}u_{k1} D^{α2}u_{k2} conj(D^{α3}u_{k3})`
//!
//! evaluated at `t = 0`. Resonant terms have `d = 0`, so only `α0 = 0` survives.
//! Every product involving an exactly zero lower-order derivative is exactly
//! zero in floating point, so structural zeros are preserved without tolerance.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::resonant::{InteractionSet, ResonantSystem};
use super::SimulationConfig;
use crate::error::{Error, Result};
use crate::lattice::{LatticeBox, Mode, ModeField};

type C = Complex64;

/// Largest derivative order accepted by [`taylor_derivatives`].
pub const TAYLOR_ORDER_CAP: usize = 12;

/// `dⁿu_k/dtⁿ(0)` for every `k` in the storage box and `n ≤ order`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeTable {
    pub order: usize,
    pub storage: LatticeBox,
    /// `entries[n]` holds the `n`-th derivative in box index order.
    pub entries: Vec<Vec<C>>,
}

impl DerivativeTable {
    pub fn get(&self, k: Mode, n: usize) -> C {
        self.storage.index(k).map_or(C::new(0.0, 0.0), |i| self.entries[n][i])
    }

    /// `Σ_{n ≤ order} tⁿ/n! · Dⁿu(0)`.
    pub fn taylor_polynomial(&self, t: f64) -> ModeField {
        let mut values = vec![C::new(0.0, 0.0); self.storage.len()];
        let mut coef = 1.0;
        for n in 0..=self.order {
            if n > 0 {
                coef *= t / n as f64;
            }
            for (v, d) in values.iter_mut().zip(&self.entries[n]) {
                *v += d * coef;
            }
        }
        ModeField::from_values(self.storage, values).expect("same box")
    }

    /// Whether every entry outside `inner` is exactly zero.
    pub fn vanishes_outside(&self, inner: LatticeBox) -> bool {
        self.entries.iter().all(|level| {
            level
                .iter()
                .enumerate()
                .all(|(i, v)| inner.contains(self.storage.mode_at(i)) || (v.re == 0.0 && v.im == 0.0))
        })
    }

    /// `(max_k |Dⁿu_k| / n!)^{1/n}` for `n = 1..=order`.
    pub fn growth_rates(&self) -> Vec<f64> {
        let mut fact = 1.0;
        (1..=self.order)
            .map(|n| {
                fact *= n as f64;
                let m = self.entries[n].iter().map(|v| v.norm()).fold(0.0, f64::max);
                (m / fact).powf(1.0 / n as f64)
            })
            .collect()
    }
}

fn multinomial(parts: &[usize; 4], fact: &[f64]) -> f64 {
    let total: usize = parts.iter().sum();
    fact[total] / parts.iter().map(|p| fact[*p]).product::<f64>()
}

/// Derivative table of the gauged system with the config's interactions.
pub fn taylor_derivatives(config: &SimulationConfig, u0: &ModeField, n_max: usize) -> Result<DerivativeTable> {
    config.validate()?;
    let system = ResonantSystem::new(
        &config.spec,
        config.n_box,
        config.l_box,
        config.weak_threshold,
        InteractionSet::ResonantAndWeak,
    );
    taylor_for_system(&system, u0, n_max)
}

/// Derivative table for an explicit system.
pub fn taylor_for_system(system: &ResonantSystem, u0: &ModeField, n_max: usize) -> Result<DerivativeTable> {
    if n_max > TAYLOR_ORDER_CAP {
        return Err(Error::CapExceeded {
            requested: n_max as u32,
            cap: TAYLOR_ORDER_CAP as u32,
        });
    }
    let storage = system.storage();
    let mut entries = vec![u0.fit_to(storage)?.into_values()];
    let fact: Vec<f64> = (0..=TAYLOR_ORDER_CAP)
        .scan(1.0, |acc, i| {
            if i > 0 {
                *acc *= i as f64;
            }
            Some(*acc)
        })
        .collect();
    for n in 1..=n_max {
        let m = n - 1;
        let mut compositions = Vec::new();
        for a0 in 0..=m {
            for a1 in 0..=m - a0 {
                for a2 in 0..=m - a0 - a1 {
                    let parts = [a0, a1, a2, m - a0 - a1 - a2];
                    compositions.push((parts, multinomial(&parts, &fact)));
                }
            }
        }
        let conj: Vec<Vec<C>> = entries.iter().map(|e| e.iter().map(|v| v.conj()).collect()).collect();
        let mut next = vec![C::new(0.0, 0.0); storage.len()];
        system.for_each_term(|out, [i1, i2, i3], d| {
            let mut acc = C::new(0.0, 0.0);
            for (parts, w) in &compositions {
                let [a0, a1, a2, a3] = *parts;
                if a0 > 0 && d == 0.0 {
                    continue;
                }
                let x = entries[a1][i1];
                if x.re == 0.0 && x.im == 0.0 {
                    continue;
                }
                let p = x * entries[a2][i2] * conj[a3][i3];
                let ph = if a0 == 0 {
                    C::new(1.0, 0.0)
                } else {
                    C::new(0.0, -d).powu(a0 as u32)
                };
                acc += p * ph * *w;
            }
            next[out] += acc;
        });
        for v in next.iter_mut() {
            *v = C::new(v.im, -v.re);
        }
        entries.push(next);
    }
    Ok(DerivativeTable {
        order: n_max,
        storage,
        entries,
    })
}
