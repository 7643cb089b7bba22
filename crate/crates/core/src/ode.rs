//! Explicit Runge–Kutta integrators over complex state vectors.
//!
//! [`Dopri5`] is the Dormand–Prince 5(4) pair with FSAL and a standard
//! elementary step controller. Output times are hit exactly by clamping the
//! step, so no interpolation is involved. [`rk4_step`] is the classical fixed
//! step scheme used inside operator splitting.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

/// Step-control settings for [`Dopri5`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dopri5Options {
    pub rtol: f64,
    /// Absolute tolerance; `None` uses `rtol · max(‖y0‖∞, 1e-300)`.
    pub atol: Option<f64>,
    /// First trial step; `None` picks one from the initial derivative.
    pub h_init: Option<f64>,
    /// Upper bound on `|h|`.
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: None,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 5_000_000,
        }
    }
}

impl Dopri5Options {
    pub fn with_rtol(rtol: f64) -> Self {
        Self {
            rtol,
            ..Self::default()
        }
    }
}

/// Counters reported by an integration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Adaptive Dormand–Prince 5(4) integrator for `y' = f(t, y)`.
pub struct Dopri5<F> {
    rhs: F,
    opts: Dopri5Options,
    k: [Vec<C>; 7],
    tmp: Vec<C>,
    stats: Stats,
}

fn sup_norm(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl<F> Dopri5<F>
where
    F: FnMut(f64, &[C], &mut [C]),
{
    pub fn new(rhs: F, opts: Dopri5Options) -> Self {
        Self {
            rhs,
            opts,
            k: Default::default(),
            tmp: Vec::new(),
            stats: Stats::default(),
        }
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    fn eval(&mut self, t: f64, y: &[C], slot: usize) {
        let mut out = std::mem::take(&mut self.k[slot]);
        (self.rhs)(t, y, &mut out);
        self.k[slot] = out;
        self.stats.evaluations += 1;
    }

    /// Integrates from `(t0, y0)` and returns the state at each time in `t_out`.
    ///
    /// `t_out` must be monotone in the direction of integration starting at or after `t0`;
    /// the direction may be negative.
    pub fn solve(&mut self, t0: f64, y0: &[C], t_out: &[f64]) -> Result<Vec<Vec<C>>> {
        let n = y0.len();
        for k in self.k.iter_mut() {
            k.clear();
            k.resize(n, C::new(0.0, 0.0));
        }
        self.tmp.resize(n, C::new(0.0, 0.0));
        let mut out = Vec::with_capacity(t_out.len());
        let Some(&t_end) = t_out.last() else {
            return Ok(out);
        };
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let atol = self.opts.atol.unwrap_or(self.opts.rtol * sup_norm(y0).max(1e-300));
        let rtol = self.opts.rtol;

        let mut t = t0;
        let mut y = y0.to_vec();
        let mut ynew = vec![C::new(0.0, 0.0); n];
        self.eval(t, &y, 0);

        let mut h = match self.opts.h_init {
            Some(h) => h.abs(),
            None => {
                let d0 = sup_norm(&y) / (atol + rtol * sup_norm(&y));
                let d1 = sup_norm(&self.k[0]) / (atol + rtol * sup_norm(&y));
                if d0 < 1e-5 || d1 < 1e-5 {
                    1e-6
                } else {
                    0.01 * d0 / d1
                }
            }
        }
        .min(self.opts.h_max);
        if !(h > 0.0) || !h.is_finite() {
            h = 1e-6;
        }

        let mut steps = 0usize;
        for &target in t_out {
            if (target - t) * dir < -1e-14 * target.abs().max(1.0) {
                return Err(Error::InvalidConfig(format!(
                    "output time {target} precedes current time {t}"
                )));
            }
            while (target - t) * dir > 0.0 {
                steps += 1;
                if steps > self.opts.max_steps {
                    return Err(Error::TooManySteps(self.opts.max_steps));
                }
                let remaining = (target - t).abs();
                let last = h >= remaining;
                let step = if last { remaining } else { h };
                let hs = dir * step;
                self.stage_step(t, &y, hs, &mut ynew);
                let err = self.error_norm(&y, &ynew, hs, atol, rtol);
                if err <= 1.0 {
                    t = if last { target } else { t + hs };
                    std::mem::swap(&mut y, &mut ynew);
                    // FSAL: the seventh stage is f(t + h, y_new).
                    self.k.swap(0, 6);
                    self.stats.accepted += 1;
                    let factor = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    if !last {
                        h = (step * factor).min(self.opts.h_max);
                    } else {
                        h = h.max(step * factor).min(self.opts.h_max);
                    }
                } else {
                    self.stats.rejected += 1;
                    h = step * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                }
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::StepSizeUnderflow { t, h });
                }
            }
            out.push(y.clone());
        }
        Ok(out)
    }

    fn stage_step(&mut self, t: f64, y: &[C], h: f64, ynew: &mut [C]) {
        let n = y.len();
        macro_rules! combine {
            ($($c:expr => $k:expr),+) => {{
                for i in 0..n {
                    let mut acc = C::new(0.0, 0.0);
                    $( acc += self.k[$k][i] * $c; )+
                    self.tmp[i] = y[i] + acc * h;
                }
            }};
        }
        let mut tmp;
        combine!(A21 => 0);
        tmp = std::mem::take(&mut self.tmp);
        self.eval(t + C2 * h, &tmp, 1);
        self.tmp = tmp;
        combine!(A31 => 0, A32 => 1);
        tmp = std::mem::take(&mut self.tmp);
        self.eval(t + C3 * h, &tmp, 2);
        self.tmp = tmp;
        combine!(A41 => 0, A42 => 1, A43 => 2);
        tmp = std::mem::take(&mut self.tmp);
        self.eval(t + C4 * h, &tmp, 3);
        self.tmp = tmp;
        combine!(A51 => 0, A52 => 1, A53 => 2, A54 => 3);
        tmp = std::mem::take(&mut self.tmp);
        self.eval(t + C5 * h, &tmp, 4);
        self.tmp = tmp;
        combine!(A61 => 0, A62 => 1, A63 => 2, A64 => 3, A65 => 4);
        tmp = std::mem::take(&mut self.tmp);
        self.eval(t + h, &tmp, 5);
        self.tmp = tmp;
        for i in 0..n {
            ynew[i] = y[i]
                + (self.k[0][i] * B1 + self.k[2][i] * B3 + self.k[3][i] * B4 + self.k[4][i] * B5 + self.k[5][i] * B6)
                    * h;
        }
        self.eval(t + h, ynew, 6);
    }

    fn error_norm(&self, y: &[C], ynew: &[C], h: f64, atol: f64, rtol: f64) -> f64 {
        let mut err: f64 = 0.0;
        for i in 0..y.len() {
            let e = (self.k[0][i] * E1
                + self.k[2][i] * E3
                + self.k[3][i] * E4
                + self.k[4][i] * E5
                + self.k[5][i] * E6
                + self.k[6][i] * E7)
                * h;
            let scale = atol + rtol * y[i].norm().max(ynew[i].norm());
            err = err.max(e.norm() / scale);
        }
        err
    }
}

/// One classical RK4 step of `y' = f(y)` in place.
pub fn rk4_step(y: &mut [C], h: f64, scratch: &mut [Vec<C>; 5], mut f: impl FnMut(&[C], &mut [C])) {
    let n = y.len();
    for s in scratch.iter_mut() {
        s.resize(n, C::new(0.0, 0.0));
    }
    let [k1, k2, k3, k4, tmp] = scratch;
    f(y, k1);
    for i in 0..n {
        tmp[i] = y[i] + k1[i] * (0.5 * h);
    }
    f(tmp, k2);
    for i in 0..n {
        tmp[i] = y[i] + k2[i] * (0.5 * h);
    }
    f(tmp, k3);
    for i in 0..n {
        tmp[i] = y[i] + k3[i] * h;
    }
    f(tmp, k4);
    for i in 0..n {
        y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
    }
}
