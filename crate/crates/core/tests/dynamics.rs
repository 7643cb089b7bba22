//! Resonant, condensed and full integrations against direct tuple sums.

use irrtorus::dynamics::{
    full_hamiltonian, support_confinement_report, taylor_for_system, FullSolver, InteractionSet, ResonantSystem,
};
use irrtorus::lattice::random_field;
use irrtorus::resonance::defect;
use irrtorus::{dispersion, Complex64, LatticeBox, Mode, ModeField, TorusSpec};
use proptest::prelude::*;

type C = Complex64;

/// `Σ_{k1+k2=k3+k} u1 u2 ū3` over every tuple in `l`, optionally weighted by a keep rule.
fn direct_sum(l: LatticeBox, u: &ModeField, keep: impl Fn(&[Mode; 4]) -> Option<f64>, t: f64) -> ModeField {
    let mut out = ModeField::zeros(l);
    for k in l.modes() {
        let mut acc = C::new(0.0, 0.0);
        for k1 in l.modes() {
            for k2 in l.modes() {
                let k3 = k1 + k2 - k;
                if !l.contains(k3) {
                    continue;
                }
                if let Some(d) = keep(&[k1, k2, k3, k]) {
                    acc += u.get(k1) * u.get(k2) * u.get(k3).conj() * C::from_polar(1.0, -d * t);
                }
            }
        }
        out.set(k, acc).unwrap();
    }
    out
}

fn resonant_keep(spec: TorusSpec, n: LatticeBox, thr: f64, weak: bool) -> impl Fn(&[Mode; 4]) -> Option<f64> {
    move |t| {
        let d = defect(&spec, t);
        let inside = t.iter().all(|m| n.contains(*m));
        let exact = {
            let s = |f: fn(Mode) -> i32| {
                t[0..2].iter().map(|m| f(*m).pow(2)).sum::<i32>() - t[2..].iter().map(|m| f(*m).pow(2)).sum::<i32>()
            };
            if spec.is_rational() {
                d == 0.0
            } else {
                s(|m| m.x) == 0 && s(|m| m.y) == 0
            }
        };
        let keep = if inside { exact } else { weak && d.abs() < thr };
        keep.then_some(d)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn interaction_matches_direct_sum(seed in 0u64..1000, t in 0.0f64..5.0, weak in any::<bool>()) {
        let spec = TorusSpec::sqrt2();
        let (n, l) = (LatticeBox::new(1), LatticeBox::new(3));
        let set = if weak { InteractionSet::ResonantAndWeak } else { InteractionSet::ResonantOnly };
        let system = ResonantSystem::new(&spec, n, l, 1.0, set);
        let u = random_field(l, l, 0.0, 1.0, seed);
        let mut s = vec![C::new(0.0, 0.0); l.len()];
        system.interaction_into(t, u.values(), &mut s);
        let want = direct_sum(l, &u, resonant_keep(spec, n, 1.0, weak), t);
        for (got, w) in s.iter().zip(want.values()) {
            prop_assert!((got - w).norm() < 1e-12);
        }
    }
}

#[test]
fn gauge_equivalence_on_random_data() {
    let spec = TorusSpec::sqrt2();
    let (m, n, l) = (LatticeBox::new(1), LatticeBox::new(4), LatticeBox::new(5));
    let system = ResonantSystem::new(&spec, n, l, 1.0, InteractionSet::ResonantAndWeak);
    let tol = 1e-10;
    let times: Vec<f64> = (0..=10).map(|i| 0.3 * i as f64).collect();
    for seed in 0..10 {
        let u0 = random_field(l, m, 1.5, 0.3, seed);
        let u = system.integrate_gauged(&u0, &times, tol).unwrap();
        let v = system.integrate_condensed(&u0, &times, tol).unwrap();
        let scale = u0.sup_norm();
        for ((t, us), vs) in times.iter().zip(&u.states).zip(&v.states) {
            let err = us.difference(&system.gauge(vs, *t)).unwrap().sup_norm();
            assert!(err <= 10.0 * tol * scale.max(1.0), "seed {seed} t {t}: {err}");
        }
    }
}

#[test]
fn taylor_polynomial_tracks_the_integration() {
    let spec = TorusSpec::square();
    let (n, l) = (LatticeBox::new(4), LatticeBox::new(5));
    let system = ResonantSystem::new(&spec, n, l, 1.0, InteractionSet::ResonantAndWeak);
    let u0 = random_field(l, LatticeBox::new(1), 1.5, 0.5, 3);
    let table = taylor_for_system(&system, &u0, 6).unwrap();

    // First derivative from the definition.
    let d1 = direct_sum(l, &u0, resonant_keep(spec, n, 1.0, true), 0.0);
    for k in l.modes() {
        let want = C::new(0.0, -1.0) * d1.get(k);
        assert!((table.get(k, 1) - want).norm() < 1e-13, "{k}");
    }

    let h = 0.05;
    let traj = system.integrate_gauged(&u0, &[0.0, h], 1e-12).unwrap();
    let err = traj.states[1]
        .difference(&table.taylor_polynomial(h))
        .unwrap()
        .sup_norm();
    // Remainder of order h⁷ times the growth of the derivatives.
    assert!(err < 1e-9, "{err}");
}

#[test]
fn resonant_only_system_conserves_mass_and_momentum() {
    let spec = TorusSpec::sqrt2();
    let (n, l) = (LatticeBox::new(2), LatticeBox::new(3));
    let system = ResonantSystem::new(&spec, n, l, 1.0, InteractionSet::ResonantOnly);
    let u0 = random_field(l, n, 1.5, 1.0, 9);
    let times: Vec<f64> = (0..=20).map(|i| 0.5 * i as f64).collect();
    let traj = system.integrate_gauged(&u0, &times, 1e-11).unwrap();
    assert!(traj.mass_drift() < 1e-8, "{}", traj.mass_drift());
    assert!(traj.momentum_drift() < 1e-8, "{}", traj.momentum_drift());
    assert!(traj.hamiltonian_drift() < 1e-8, "{}", traj.hamiltonian_drift());
    // Nothing leaves Q_N without the crossing terms.
    let report = support_confinement_report(&traj, n, n);
    assert_eq!(report.max_outside(), 0.0);
}

#[test]
fn rectangle_mode_grows_linearly() {
    let one = C::new(0.1, 0.0);
    let data = [Mode::new(1, 1), Mode::new(-1, 1), Mode::new(0, 0)];
    let target = Mode::new(0, 2);
    let (n, l) = (LatticeBox::new(2), LatticeBox::new(3));
    let times: Vec<f64> = (0..=10).map(|i| 1e-3 * i as f64).collect();

    let square = ResonantSystem::new(&TorusSpec::square(), n, l, 1.0, InteractionSet::ResonantAndWeak);
    let u0 = ModeField::from_entries(l, data.map(|k| (k, one))).unwrap();
    let traj = square.integrate_gauged(&u0, &times, 1e-12).unwrap();
    // Two orderings of the rectangle feed (0,2): |D¹| = 2|a|³.
    let rate = 2.0 * one.norm().powi(3);
    for (t, v) in times.iter().zip(traj.modulus_series(target)).skip(1) {
        assert!((v - rate * t).abs() <= 0.1 * rate * t, "t {t}: {v} vs {}", rate * t);
    }

    let irr = ResonantSystem::new(&TorusSpec::sqrt2(), n, l, 1.0, InteractionSet::ResonantAndWeak);
    let traj = irr.integrate_gauged(&u0, &times, 1e-12).unwrap();
    assert!(traj.modulus_series(target).iter().all(|v| *v < 1e-9));
}

#[test]
fn full_solver_matches_direct_sum_integration() {
    let spec = TorusSpec::sqrt2();
    let l = LatticeBox::new(2);
    let psi0 = random_field(l, l, 1.5, 0.4, 21);

    // Independent oracle: classical RK4 on the direct-sum right-hand side.
    let rhs = |psi: &ModeField| -> ModeField {
        let nl = direct_sum(l, psi, |_| Some(0.0), 0.0);
        let mut out = ModeField::zeros(l);
        for k in l.modes() {
            out.set(k, C::new(0.0, -1.0) * (dispersion(&spec, k) * psi.get(k) + nl.get(k)))
                .unwrap();
        }
        out
    };
    let axpy = |a: &ModeField, b: &ModeField, h: f64| -> ModeField {
        let vals = a.values().iter().zip(b.values()).map(|(x, y)| x + y * h).collect();
        ModeField::from_values(l, vals).unwrap()
    };
    let (t_end, steps) = (0.5, 5000);
    let h = t_end / steps as f64;
    let mut psi = psi0.clone();
    for _ in 0..steps {
        let k1 = rhs(&psi);
        let k2 = rhs(&axpy(&psi, &k1, 0.5 * h));
        let k3 = rhs(&axpy(&psi, &k2, 0.5 * h));
        let k4 = rhs(&axpy(&psi, &k3, h));
        let sum = axpy(&axpy(&axpy(&k1, &k2, 2.0), &k3, 2.0), &k4, 1.0);
        psi = axpy(&psi, &sum, h / 6.0);
    }

    let mut solver = FullSolver::new(&spec, l, 1e-3, None).unwrap();
    let traj = solver.integrate(&psi0, &[0.0, t_end]).unwrap();
    let err = traj.states[1].difference(&psi).unwrap().sup_norm();
    assert!(err < 1e-6, "{err}");

    let mut quartic = 0.0;
    for k1 in l.modes() {
        for k2 in l.modes() {
            for k3 in l.modes() {
                let k4 = k1 + k2 - k3;
                if l.contains(k4) {
                    quartic += (psi0.get(k1) * psi0.get(k2) * psi0.get(k3).conj() * psi0.get(k4).conj()).re;
                }
            }
        }
    }
    let quad: f64 = l.modes().map(|k| dispersion(&spec, k) * psi0.get(k).norm_sqr()).sum();
    let h_direct = quad + 0.5 * quartic;
    assert!((full_hamiltonian(&spec, &psi0).unwrap() - h_direct).abs() < 1e-12 * h_direct.abs().max(1.0));
}
