//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Runs without the libtest harness so every line is printed even when all pass.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use irrtorus::dynamics::{
    integrate_full, integrate_resonant, support_confinement_report, taylor_derivatives, taylor_for_system,
    theorem_pipeline, InteractionSet, PipelineOptions, ResonantSystem, SimulationConfig,
};
use irrtorus::family::{check_ratio_bound, random_family_search, Relation};
use irrtorus::lattice::random_field;
use irrtorus::normal_form::{build_chi, scaling_sweep, FlowOptions};
use irrtorus::resonance::{
    canonical_unordered, enumerate_resonances, one_dimensional_resonance, pairs_match, ResonanceClass,
};
use irrtorus::{Complex64, LatticeBox, Mode, ModeField, Rationality, Result, TorusSpec};

/// Largest `|u_k|` outside the data box accepted as zero.
const CONFINEMENT_TOL: f64 = 1e-9;
/// Relative mismatch allowed between `|u_{(0,2)}(t)|` and `t·|D¹|`.
const ACTIVATION_REL_TOL: f64 = 0.10;
const ACTIVATION_T_MAX: f64 = 1e-2;
const SLOPE_TARGET: f64 = 3.0;
const SLOPE_TOL: f64 = 0.2;
const ROUND_TRIP_TOL: f64 = 1e-9;
/// Largest over smallest gap ratio across the ε sweep.
const GAP_RATIO_SPREAD: f64 = 10.0;
const FULL_MASS_TOL: f64 = 1e-8;
const FULL_HAMILTONIAN_TOL: f64 = 1e-6;
const INTEGRATOR_TOL: f64 = 1e-10;
/// Drift of mass and momentum of the resonant-only system, as a multiple of the integrator tolerance.
const RESONANT_ONLY_FACTOR: f64 = 100.0;
const FAMILIES_PER_S: usize = 20;

type Verdict = Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("resonance enumeration equals brute force", c1_enumeration),
        ("no nonparallel resonances on irrational tori", c2_no_nonparallel),
        ("one-dimensional resonance iff pairs match", c3_one_dimensional),
        ("support confinement of the resonant system", c4_confinement),
        ("Taylor derivatives vanish outside the data box", c5_taylor_zero),
        ("rational activation of (0,2)", c6_activation),
        ("cubic estimate of the Lie transform", c7_lie_cubic),
        ("confinement of the full system below eps^gamma", c8_pipeline),
        ("conservation diagnostics", c9_conservation),
        ("generation-sum ratio bound on random families", c10_families),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let (pass, detail) = match catch_unwind(AssertUnwindSafe(run)) {
            Ok(Ok(v)) => v,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".to_string()),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} [{:>2}] {name}: {detail} ({:.1} s)",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            started.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

/// Exact resonance from integer arithmetic: `p·A1 + q·A2 = 0` for rational weights,
/// `A1 = A2 = 0` for irrational ones.
fn oracle_resonant(rationality: Rationality, t: [Mode; 4]) -> bool {
    let [a, b, c, d] = t;
    if a + b != c + d {
        return false;
    }
    let sq = |v: i32| (v as i64) * (v as i64);
    let a1 = sq(a.x) + sq(b.x) - sq(c.x) - sq(d.x);
    let a2 = sq(a.y) + sq(b.y) - sq(c.y) - sq(d.y);
    match rationality {
        Rationality::Rational { p, q } => p as i64 * a1 + q as i64 * a2 == 0,
        Rationality::Irrational => a1 == 0 && a2 == 0,
    }
}

fn c1_enumeration() -> Verdict {
    let specs = [TorusSpec::square(), TorusSpec::rational(1, 2)?, TorusSpec::sqrt2()];
    let mut total = 0;
    for spec in specs {
        for n in 0..=4 {
            let b = LatticeBox::new(n);
            let modes: Vec<Mode> = b.modes().collect();
            let mut want = BTreeSet::new();
            for &k1 in &modes {
                for &k2 in &modes {
                    for &k3 in &modes {
                        for &k4 in &modes {
                            if oracle_resonant(spec.rationality(), [k1, k2, k3, k4]) {
                                want.insert([k1, k2, k3, k4]);
                            }
                        }
                    }
                }
            }
            let got = enumerate_resonances(&spec, b)?;
            let got_set: BTreeSet<[Mode; 4]> = got.iter().map(|t| t.modes).collect();
            if got.len() != want.len() || got_set != want {
                return Ok((
                    false,
                    format!("{spec:?} N={n}: {} found, {} expected", got.len(), want.len()),
                ));
            }
            total += want.len();
        }
    }
    Ok((true, format!("3 specs x N=0..4, {total} ordered tuples identical")))
}

fn c2_no_nonparallel() -> Verdict {
    let count = |spec: &TorusSpec, n: u32| -> Result<(usize, Vec<[Mode; 4]>)> {
        let found = enumerate_resonances(spec, LatticeBox::new(n))?;
        let np: Vec<[Mode; 4]> = found
            .iter()
            .filter(|t| t.class == ResonanceClass::Nonparallel)
            .map(|t| t.modes)
            .collect();
        Ok((np.len(), np))
    };
    let irrational = [TorusSpec::sqrt2(), TorusSpec::irrational(1.0, std::f64::consts::PI)?];
    for spec in &irrational {
        for n in 0..=6 {
            let (c, _) = count(spec, n)?;
            if c != 0 {
                return Ok((false, format!("{spec:?} N={n}: {c} nonparallel")));
            }
        }
    }
    let (square_count, square) = count(&TorusSpec::square(), 2)?;
    let rect = canonical_unordered(&[Mode::new(1, 1), Mode::new(-1, 1), Mode::new(0, 0), Mode::new(0, 2)]);
    let has_rect = square.iter().any(|t| canonical_unordered(t) == rect);
    Ok((
        square_count > 0 && has_rect,
        format!(
            "irrational (1,sqrt2), (1,pi) N<=6: 0 nonparallel; square N=2: {square_count} nonparallel, rectangle (1,1),(-1,1),(0,0),(0,2) present: {has_rect}"
        ),
    ))
}

fn c3_one_dimensional() -> Verdict {
    let mut checked = 0u64;
    let mut counterexamples = 0u64;
    for a in -12i64..=12 {
        for b in -12i64..=12 {
            for c in -12i64..=12 {
                for d in -12i64..=12 {
                    checked += 1;
                    if one_dimensional_resonance(a, b, c, d) != pairs_match(a, b, c, d) {
                        counterexamples += 1;
                    }
                }
            }
        }
    }
    Ok((
        counterexamples == 0,
        format!("{checked} quadruples in [-12,12]^4, {counterexamples} counterexamples"),
    ))
}

fn confinement_config() -> SimulationConfig {
    SimulationConfig::new(TorusSpec::sqrt2(), 1, 4, 8, 0.05)
}

fn c4_confinement() -> Verdict {
    let config = confinement_config();
    let u0 = config.initial_data();
    let traj = integrate_resonant(&config, &u0)?;
    let report = support_confinement_report(&traj, config.m_box, config.n_box);
    let t_end = *traj.times.last().unwrap_or(&0.0);
    Ok((
        report.confined(CONFINEMENT_TOL),
        format!(
            "t = {t_end:.1}, {} samples, max |u_k| outside Q_1 = {:.3e} (< {CONFINEMENT_TOL:e})",
            traj.times.len(),
            report.max_outside()
        ),
    ))
}

fn c5_taylor_zero() -> Verdict {
    let config = confinement_config();
    let table = taylor_derivatives(&config, &config.initial_data(), 6)?;
    let nonzero_inside = table.entries.iter().flatten().filter(|v| v.norm() > 0.0).count();
    Ok((
        table.vanishes_outside(config.m_box),
        format!("orders 0..6: every entry outside Q_1 is exactly 0.0 ({nonzero_inside} nonzero entries inside)"),
    ))
}

fn c6_activation() -> Verdict {
    let (n, l) = (LatticeBox::new(4), LatticeBox::new(5));
    let one = Complex64::new(1.0, 0.0);
    let target = Mode::new(0, 2);
    let u0 = ModeField::from_entries(
        l,
        [Mode::new(1, 1), Mode::new(-1, 1), Mode::new(0, 0)].map(|k| (k, one)),
    )?;
    let times: Vec<f64> = (0..=20).map(|i| ACTIVATION_T_MAX * i as f64 / 20.0).collect();

    let square = ResonantSystem::new(&TorusSpec::square(), n, l, 1.0, InteractionSet::ResonantAndWeak);
    let d1 = taylor_for_system(&square, &u0, 1)?.get(target, 1).norm();
    let traj = square.integrate_gauged(&u0, &times, INTEGRATOR_TOL)?;
    let worst = times
        .iter()
        .zip(traj.modulus_series(target))
        .skip(1)
        .map(|(t, v)| (v - t * d1).abs() / (t * d1))
        .fold(0.0, f64::max);

    let irr = ResonantSystem::new(&TorusSpec::sqrt2(), n, l, 1.0, InteractionSet::ResonantAndWeak);
    let irr_max = irr
        .integrate_gauged(&u0, &times, INTEGRATOR_TOL)?
        .modulus_series(target)
        .into_iter()
        .fold(0.0, f64::max);
    Ok((
        d1 > 0.0 && worst <= ACTIVATION_REL_TOL && irr_max < CONFINEMENT_TOL,
        format!(
            "|D1| = {d1}, max relative deviation from t|D1| on t<=1e-2 = {worst:.2e}; irrational max |u_(0,2)| = {irr_max:.1e}"
        ),
    ))
}

fn c7_lie_cubic() -> Verdict {
    let spec = TorusSpec::sqrt2();
    let (n, l) = (LatticeBox::new(4), LatticeBox::new(8));
    let (chi, _) = build_chi(&spec, n, l, 1.0)?;
    let direction = random_field(l, LatticeBox::new(1), 1.5, 1.0, 2024);
    let eps: Vec<f64> = (0..5).map(|i| 10f64.powf(-3.0 + 0.25 * i as f64)).collect();
    let report = scaling_sweep(&chi, &direction, &eps, &FlowOptions::default())?;
    Ok((
        (report.slope - SLOPE_TARGET).abs() <= SLOPE_TOL && report.max_round_trip < ROUND_TRIP_TOL,
        format!(
            "slope {:.4} (3 +/- {SLOPE_TOL}), max round trip {:.2e} (< {ROUND_TRIP_TOL:e})",
            report.slope, report.max_round_trip
        ),
    ))
}

fn c8_pipeline() -> Verdict {
    let opts = PipelineOptions::default();
    let mut ratios = Vec::new();
    let mut main_pass = false;
    let mut lines = Vec::new();
    for eps in [0.1, 0.05, 0.025] {
        let config = SimulationConfig::new(TorusSpec::sqrt2(), 1, 4, 8, eps);
        let r = theorem_pipeline(&config, &opts)?;
        if eps == 0.05 {
            main_pass = r.pass;
        }
        ratios.push(r.gap_ratio);
        lines.push(format!(
            "eps={eps}: sup_out {:.2e} vs {:.2e}, gap ratio {:.3}",
            r.sup_outside, r.threshold, r.gap_ratio
        ));
    }
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = hi / lo;
    Ok((
        main_pass && lo > 0.0 && spread < GAP_RATIO_SPREAD,
        format!(
            "{}; gap ratio spread {spread:.3} (< {GAP_RATIO_SPREAD})",
            lines.join("; ")
        ),
    ))
}

fn c9_conservation() -> Verdict {
    let config = confinement_config();
    let full = integrate_full(&config, &config.initial_data())?;
    let (mass, ham) = (full.mass_drift(), full.hamiltonian_drift());

    let system = ResonantSystem::new(
        &config.spec,
        config.n_box,
        config.l_box,
        1.0,
        InteractionSet::ResonantOnly,
    );
    let u0 = random_field(config.l_box, config.n_box, config.s, config.epsilon, 7);
    let t_end = 1.0 / (config.epsilon * config.epsilon);
    let times: Vec<f64> = (0..=100).map(|i| t_end * i as f64 / 100.0).collect();
    let res = system.integrate_gauged(&u0, &times, INTEGRATOR_TOL)?;
    let (rm, rp) = (res.mass_drift(), res.momentum_drift());
    let bound = RESONANT_ONLY_FACTOR * INTEGRATOR_TOL;
    Ok((
        mass < FULL_MASS_TOL && ham < FULL_HAMILTONIAN_TOL && rm < bound && rp < bound,
        format!(
            "full t={:.0}: mass {mass:.1e}, hamiltonian {ham:.1e}; resonant-only t={t_end:.0}: mass {rm:.1e}, momentum {rp:.1e} (< {bound:e})",
            full.times.last().copied().unwrap_or(0.0)
        ),
    ))
}

fn c10_families() -> Verdict {
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for (i, s) in [1.5, 2.0].into_iter().enumerate() {
        let found = random_family_search(Relation::IrrationalR, s, 6, 4, FAMILIES_PER_S, 50_000, 11 + i as u64);
        if found.len() < FAMILIES_PER_S {
            return Ok((false, format!("s={s}: only {} families found", found.len())));
        }
        for f in &found {
            let r = check_ratio_bound(f)?;
            if !(r.pass && r.permutation_structure) {
                return Ok((
                    false,
                    format!("s={s}: family {:?} fails (ratio {})", f.generations, r.max_ratio),
                ));
            }
            worst = worst.max(r.max_ratio / r.bound);
            checked += 1;
        }
    }
    Ok((true, format!("{checked} families, largest ratio / 2^s = {worst:.3}")))
}
