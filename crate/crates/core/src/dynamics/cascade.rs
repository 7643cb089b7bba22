//! Three-step transfer through nonparallel rectangles on the square torus.
//!
//! Data on `P1, P2, P3, Q1` activates `Q2` and `Q3` at first order, where
//! `{P1, P2, Q1, Q2}` and `{Q1, P2, P3, Q3}` are nonparallel rectangles.
//! The activated pair closes a third nonparallel rectangle `{Q1, Q2, Q3, Q4}`
//! and feeds a fresh mode `Q4`, which moves only at a higher order. On an
//! irrational torus none of these rectangles is resonant and nothing leaves
//! the coordinate grid of the data.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::resonant::{InteractionSet, ResonantSystem};
use super::taylor::{taylor_for_system, DerivativeTable};
use super::{activation_time, uniform_times, ACTIVATION_THRESHOLD};
use crate::error::{Error, Result};
use crate::lattice::{LatticeBox, Mode, ModeField, TorusSpec};
use crate::resonance::{classify, is_resonant, ResonanceClass};

type C = Complex64;

/// The seven points of the demo.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CascadeGeometry {
    pub p1: Mode,
    pub p2: Mode,
    pub p3: Mode,
    pub q1: Mode,
    pub q2: Mode,
    pub q3: Mode,
    pub q4: Mode,
}

/// Instance returned by `find_cascade_geometry(Q_2, Q_4, 6)`.
///
/// No instance exists with all four data points in `Q_1`.
pub const DEFAULT_CASCADE: CascadeGeometry = CascadeGeometry {
    p1: Mode::new(-2, -2),
    p2: Mode::new(-1, 1),
    p3: Mode::new(1, 2),
    q1: Mode::new(2, 0),
    q2: Mode::new(1, -3),
    q3: Mode::new(0, -1),
    q4: Mode::new(3, -2),
};

impl CascadeGeometry {
    pub fn data(&self) -> [Mode; 4] {
        [self.p1, self.p2, self.p3, self.q1]
    }

    pub fn targets(&self) -> [Mode; 3] {
        [self.q2, self.q3, self.q4]
    }

    /// The three rectangles through `{P1, P2, Q1} → Q2`, `{Q1, P2, P3} → Q3` and `{Q1, Q2, Q3} → Q4`.
    ///
    /// Each is ordered as a tuple `(a, b, c, target)` with `a + b = c + target`
    /// when such an ordering of the three sources exists.
    pub fn rectangles(&self) -> [[Mode; 4]; 3] {
        [
            rectangle_through([self.p1, self.p2, self.q1], self.q2),
            rectangle_through([self.q1, self.p2, self.p3], self.q3),
            rectangle_through([self.q1, self.q2, self.q3], self.q4),
        ]
    }

    /// Smallest half-width containing the data.
    pub fn data_half_width(&self) -> u32 {
        self.data().iter().map(|m| m.sup_norm()).max().unwrap_or(0)
    }

    pub fn half_width(&self) -> u32 {
        self.data()
            .iter()
            .chain(self.targets().iter())
            .map(|m| m.sup_norm())
            .max()
            .unwrap_or(0)
    }

    /// Whether each target lies off the product grid `A × B` of the data's coordinates.
    pub fn targets_off_data_grid(&self) -> bool {
        let xs: BTreeSet<i32> = self.data().iter().map(|m| m.x).collect();
        let ys: BTreeSet<i32> = self.data().iter().map(|m| m.y).collect();
        self.targets().iter().all(|t| !xs.contains(&t.x) || !ys.contains(&t.y))
    }

    /// Point geometry: the three rectangles are nonparallel resonances of the square torus,
    /// the data points are distinct, and the targets are distinct fresh modes.
    pub fn is_consistent(&self) -> bool {
        let square = TorusSpec::square();
        let rects_ok = self
            .rectangles()
            .iter()
            .all(|r| is_resonant(&square, r) && classify(r).ok() == Some(ResonanceClass::Nonparallel));
        let all: BTreeSet<Mode> = self.data().into_iter().chain(self.targets()).collect();
        rects_ok && all.len() == 7
    }
}

/// Settings for the demo runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeOptions {
    pub window: f64,
    pub samples: usize,
    pub n_max: usize,
    pub threshold: f64,
    pub tolerance: f64,
}

impl Default for CascadeOptions {
    fn default() -> Self {
        Self {
            window: 0.05,
            samples: 200,
            n_max: 6,
            threshold: ACTIVATION_THRESHOLD,
            tolerance: 1e-10,
        }
    }
}

/// One run of the demo.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeRun {
    pub label: String,
    /// First crossing of the threshold for `Q2, Q3, Q4` (linear interpolation between samples).
    pub activation_times: [Option<f64>; 3],
    pub max_modulus: [f64; 3],
    /// Smallest order with a nonzero derivative at `Q2, Q3, Q4`, if any up to `n_max`.
    pub first_nonzero_order: [Option<usize>; 3],
}

/// Outcome of [`three_step_cascade_demo`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeReport {
    pub geometry: CascadeGeometry,
    pub storage_half_width: u32,
    pub options: CascadeOptions,
    pub rational: CascadeRun,
    pub irrational: CascadeRun,
    pub p_only: CascadeRun,
    /// `Q2` and `Q3` activate, and both before `Q4`.
    pub order_ok: bool,
    /// All three targets stay below the confinement tolerance on the irrational torus.
    pub irrational_confined: bool,
    /// `Q4` never activates without `Q1`.
    pub p_only_inactive: bool,
    pub pass: bool,
}

fn rectangle_through(src: [Mode; 3], target: Mode) -> [Mode; 4] {
    let [a, b, c] = src;
    [[a, b, c], [a, c, b], [b, c, a]]
        .into_iter()
        .find(|[x, y, z]| *x + *y - *z == target)
        .map_or([a, b, c, target], |[x, y, z]| [x, y, z, target])
}

/// Targets `t` such that `src ∪ {t}` is a nonparallel square-torus rectangle.
fn nonparallel_completions(src: [Mode; 3]) -> Vec<Mode> {
    let square = TorusSpec::square();
    let [a, b, c] = src;
    [[a, b, c], [a, c, b], [b, c, a]]
        .into_iter()
        .map(|[x, y, z]| [x, y, z, x + y - z])
        .filter(|t| is_resonant(&square, t) && classify(t).ok() == Some(ResonanceClass::Nonparallel))
        .map(|t| t[3])
        .collect()
}

fn unit_data(storage: LatticeBox, modes: &[Mode]) -> Result<ModeField> {
    ModeField::from_entries(storage, modes.iter().map(|m| (*m, C::new(1.0, 0.0))))
}

fn first_nonzero(table: &DerivativeTable, k: Mode) -> Option<usize> {
    (1..=table.order).find(|&n| {
        let v = table.get(k, n);
        v.re != 0.0 || v.im != 0.0
    })
}

fn boxes_for(geometry: &CascadeGeometry, storage: LatticeBox) -> Result<(LatticeBox, LatticeBox)> {
    let m = geometry.data_half_width();
    let n = 3 * m + 1;
    let l = storage.half_width.max(n + 1);
    if l < geometry.half_width() {
        return Err(Error::InvalidConfig(format!(
            "storage half-width {} cannot hold the cascade points (need {})",
            l,
            geometry.half_width()
        )));
    }
    if storage.half_width < n + 1 {
        return Err(Error::InvalidConfig(format!(
            "storage half-width {} must exceed N = {n}",
            storage.half_width
        )));
    }
    Ok((LatticeBox::new(n), storage))
}

/// Structural Taylor checks of a candidate geometry.
pub fn taylor_signature(
    geometry: &CascadeGeometry,
    spec: &TorusSpec,
    storage: LatticeBox,
    with_q1: bool,
    n_max: usize,
) -> Result<[Option<usize>; 3]> {
    let (n_box, l_box) = boxes_for(geometry, storage)?;
    let system = ResonantSystem::new(spec, n_box, l_box, 1.0, InteractionSet::ResonantAndWeak);
    let data: Vec<Mode> = if with_q1 {
        geometry.data().to_vec()
    } else {
        vec![geometry.p1, geometry.p2, geometry.p3]
    };
    let table = taylor_for_system(&system, &unit_data(l_box, &data)?, n_max)?;
    Ok(geometry.targets().map(|k| first_nonzero(&table, k)))
}

fn expected_signature(geometry: &CascadeGeometry, storage: LatticeBox, n_max: usize) -> Result<bool> {
    let square = TorusSpec::square();
    let irr = TorusSpec::sqrt2();
    let rat = taylor_signature(geometry, &square, storage, true, n_max)?;
    let ordered = match rat {
        [Some(1), Some(1), Some(o4)] => o4 > 1,
        _ => false,
    };
    if !ordered {
        return Ok(false);
    }
    let p_only = taylor_signature(geometry, &square, storage, false, n_max)?;
    if p_only[2].is_some() {
        return Ok(false);
    }
    let irr_sig = taylor_signature(geometry, &irr, storage, true, n_max)?;
    Ok(irr_sig == [None, None, None] && geometry.targets_off_data_grid())
}

/// Searches for a geometry with data in `Q_data` and every point in `Q_search`.
///
/// Candidates are tried in box-index order of `(P1, P2, P3, Q1)`; the first
/// one passing the point checks and the Taylor checks up to `n_max` is returned.
pub fn find_cascade_geometry(data: LatticeBox, search: LatticeBox, n_max: usize) -> Result<CascadeGeometry> {
    let storage = LatticeBox::new((3 * data.half_width + 2).max(search.half_width));
    let modes: Vec<Mode> = data.modes().collect();
    for &p1 in &modes {
        for &p2 in &modes {
            for &p3 in &modes {
                for &q1 in &modes {
                    for q2 in nonparallel_completions([p1, p2, q1]) {
                        for q3 in nonparallel_completions([q1, p2, p3]) {
                            for q4 in nonparallel_completions([q1, q2, q3]) {
                                let g = CascadeGeometry {
                                    p1,
                                    p2,
                                    p3,
                                    q1,
                                    q2,
                                    q3,
                                    q4,
                                };
                                if !g.targets().iter().all(|t| search.contains(*t))
                                    || !g.is_consistent()
                                    || !g.targets_off_data_grid()
                                {
                                    continue;
                                }
                                if expected_signature(&g, storage, n_max)? {
                                    return Ok(g);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Err(Error::SearchFailed(format!(
        "no geometry with data in Q_{} and points in Q_{}",
        data.half_width, search.half_width
    )))
}

fn run(
    label: &str,
    geometry: &CascadeGeometry,
    spec: &TorusSpec,
    storage: LatticeBox,
    data: &[Mode],
    opts: &CascadeOptions,
) -> Result<CascadeRun> {
    let (n_box, l_box) = boxes_for(geometry, storage)?;
    let system = ResonantSystem::new(spec, n_box, l_box, 1.0, InteractionSet::ResonantAndWeak);
    let u0 = unit_data(l_box, data)?;
    let times = uniform_times(opts.window, opts.samples);
    let traj = system.integrate_gauged(&u0, &times, opts.tolerance)?;
    let table = taylor_for_system(&system, &u0, opts.n_max)?;
    let targets = geometry.targets();
    let series: Vec<Vec<f64>> = targets.iter().map(|k| traj.modulus_series(*k)).collect();
    Ok(CascadeRun {
        label: label.to_string(),
        activation_times: [0, 1, 2].map(|i| activation_time(&times, &series[i], opts.threshold)),
        max_modulus: [0, 1, 2].map(|i| series[i].iter().copied().fold(0.0, f64::max)),
        first_nonzero_order: targets.map(|k| first_nonzero(&table, k)),
    })
}

/// Runs the demo on [`DEFAULT_CASCADE`] with storage box `l_box`.
pub fn three_step_cascade_demo(l_box: LatticeBox, opts: &CascadeOptions) -> Result<CascadeReport> {
    cascade_demo_for(&DEFAULT_CASCADE, l_box, opts)
}

/// Runs the demo for an explicit geometry.
pub fn cascade_demo_for(geometry: &CascadeGeometry, l_box: LatticeBox, opts: &CascadeOptions) -> Result<CascadeReport> {
    if !geometry.is_consistent() {
        return Err(Error::SearchFailed(format!(
            "geometry {geometry:?} does not form three nonparallel rectangles"
        )));
    }
    let square = TorusSpec::square();
    let data = geometry.data();
    let rational = run("rational (1,1)", geometry, &square, l_box, &data, opts)?;
    let irrational = run(
        "irrational (1,sqrt2)",
        geometry,
        &TorusSpec::sqrt2(),
        l_box,
        &data,
        opts,
    )?;
    let p_only = run(
        "rational (1,1), Q1 = 0",
        geometry,
        &square,
        l_box,
        &[geometry.p1, geometry.p2, geometry.p3],
        opts,
    )?;
    let [a2, a3, a4] = rational.activation_times;
    let order_ok = match (a2, a3, a4) {
        (Some(a2), Some(a3), Some(a4)) => a2 < a4 && a3 < a4,
        _ => false,
    };
    let irrational_confined = irrational.max_modulus.iter().all(|m| *m < super::CONFINEMENT_TOLERANCE);
    let p_only_inactive = p_only.activation_times[2].is_none();
    Ok(CascadeReport {
        geometry: *geometry,
        storage_half_width: l_box.half_width,
        options: *opts,
        pass: order_ok && irrational_confined && p_only_inactive,
        rational,
        irrational,
        p_only,
        order_ok,
        irrational_confined,
        p_only_inactive,
    })
}
