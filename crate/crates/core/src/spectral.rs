//! Pseudo-spectral evaluation of the truncated cubic term.
//!
//! For a field `ψ̂` stored on `Q_L` this computes
//! `N_k = Σ_{k1+k2=k3+k} ψ̂_{k1} ψ̂_{k2} conj(ψ̂_{k3})` for `k ∈ Q_L`, i.e. the
//! Fourier coefficients of `|ψ|²ψ` projected back onto the box. The product
//! is formed on a `G × G` physical grid. The cubic has modes up to `3L`,
//! and a mode `m` aliases onto `k ∈ Q_L` only if `|m − k| ≥ G`, so any
//! `G ≥ 4L + 1` gives the exact Galerkin sum.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::lattice::LatticeBox;

type C = Complex64;

/// Exact dealiased cubic convolution on a storage box via 2D FFTs.
pub struct CubicFft {
    storage: LatticeBox,
    grid: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf: Vec<C>,
    col: Vec<C>,
    scratch: Vec<C>,
}

impl std::fmt::Debug for CubicFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CubicFft")
            .field("storage", &self.storage)
            .field("grid", &self.grid)
            .finish()
    }
}

impl Clone for CubicFft {
    fn clone(&self) -> Self {
        Self::new(self.storage, Some(self.grid)).expect("grid was already validated")
    }
}

/// Smallest grid that dealiases the cubic term on `Q_L`.
pub fn required_grid(storage: LatticeBox) -> usize {
    4 * storage.half_width as usize + 1
}

/// Smallest `2^a 3^b 5^c` at or above [`required_grid`].
pub fn default_grid(storage: LatticeBox) -> usize {
    let mut g = required_grid(storage);
    loop {
        let mut r = g;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return g;
        }
        g += 1;
    }
}

impl CubicFft {
    /// `grid = None` uses [`default_grid`]; grids below [`required_grid`] are refused.
    pub fn new(storage: LatticeBox, grid: Option<usize>) -> Result<Self> {
        let g = grid.unwrap_or_else(|| default_grid(storage));
        let required = required_grid(storage);
        if g < required {
            return Err(Error::Dealiasing {
                grid: g,
                half_width: storage.half_width,
                required,
            });
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(g);
        let inverse = planner.plan_fft_inverse(g);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Ok(Self {
            storage,
            grid: g,
            forward,
            inverse,
            buf: vec![C::new(0.0, 0.0); g * g],
            col: vec![C::new(0.0, 0.0); g],
            scratch: vec![C::new(0.0, 0.0); scratch_len],
        })
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn storage(&self) -> LatticeBox {
        self.storage
    }

    fn wrap(&self, k: i32) -> usize {
        k.rem_euclid(self.grid as i32) as usize
    }

    fn transform(&mut self, inverse: bool) {
        let g = self.grid;
        let plan = if inverse { &self.inverse } else { &self.forward };
        plan.process_with_scratch(&mut self.buf, &mut self.scratch);
        for j in 0..g {
            for i in 0..g {
                self.col[i] = self.buf[i * g + j];
            }
            plan.process_with_scratch(&mut self.col, &mut self.scratch);
            for i in 0..g {
                self.buf[i * g + j] = self.col[i];
            }
        }
    }

    /// Writes `N_k` for every `k` in the storage box into `out` (box index order).
    pub fn nonlinearity(&mut self, psi: &[C], out: &mut [C]) {
        let n = self.storage.len();
        assert_eq!(psi.len(), n);
        assert_eq!(out.len(), n);
        let g = self.grid;
        self.buf.iter_mut().for_each(|v| *v = C::new(0.0, 0.0));
        for (i, v) in psi.iter().enumerate() {
            let k = self.storage.mode_at(i);
            let slot = self.wrap(k.x) * g + self.wrap(k.y);
            self.buf[slot] = *v;
        }
        self.transform(true);
        for v in self.buf.iter_mut() {
            *v *= v.norm_sqr();
        }
        self.transform(false);
        let scale = 1.0 / (g * g) as f64;
        for (i, o) in out.iter_mut().enumerate() {
            let k = self.storage.mode_at(i);
            *o = self.buf[self.wrap(k.x) * g + self.wrap(k.y)] * scale;
        }
    }

    /// `Σ_{k1+k2=k3+k4} ψ̂_{k1} ψ̂_{k2} conj(ψ̂_{k3} ψ̂_{k4})`, the quartic sum without prefactor.
    pub fn quartic_sum(&mut self, psi: &[C]) -> f64 {
        let mut nl = vec![C::new(0.0, 0.0); psi.len()];
        self.nonlinearity(psi, &mut nl);
        psi.iter().zip(&nl).map(|(p, q)| (p.conj() * q).re).sum()
    }
}
