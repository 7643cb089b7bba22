//! χ against a tuple-by-tuple oracle, the cancellation identity by finite
//! differences along the linear flow, and the cubic smallness of the flow.

use irrtorus::lattice::random_field;
use irrtorus::normal_form::{
    build_chi, chi_vector_field, lie_transform, scaling_sweep, verify_poisson_cancellation, ChiPart, FlowDirection,
    FlowOptions,
};
use irrtorus::{dispersion, sobolev_norm, Complex64, LatticeBox, Mode, ModeField, TorusSpec};

type C = Complex64;

#[derive(Clone, Copy, PartialEq, Debug)]
enum Role {
    Chi1,
    Chi2,
    Kept,
}

/// Role decided from the definition: inside and exactly resonant, or crossing and weak, is kept.
fn oracle_role(spec: &TorusSpec, n: LatticeBox, t: [Mode; 4], thr: f64) -> Role {
    let inside = t.iter().all(|k| n.contains(*k));
    let d = dispersion(spec, t[0]) + dispersion(spec, t[1]) - dispersion(spec, t[2]) - dispersion(spec, t[3]);
    let sq = |f: fn(Mode) -> i32| -> i64 {
        let v = |m: Mode| (f(m) as i64).pow(2);
        v(t[0]) + v(t[1]) - v(t[2]) - v(t[3])
    };
    let exact = sq(|m| m.x) == 0 && sq(|m| m.y) == 0;
    match (inside, exact, d.abs() < thr) {
        (true, true, _) => Role::Kept,
        (true, false, _) => Role::Chi1,
        (false, _, true) => Role::Kept,
        (false, _, false) => Role::Chi2,
    }
}

fn tuples(l: LatticeBox) -> Vec<[Mode; 4]> {
    let modes: Vec<Mode> = l.modes().collect();
    let mut out = Vec::new();
    for &a in &modes {
        for &b in &modes {
            for &c in &modes {
                let d = a + b - c;
                if l.contains(d) {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

fn monomial(z: &ModeField, t: [Mode; 4]) -> C {
    z.get(t[0]) * z.get(t[1]) * z.get(t[2]).conj() * z.get(t[3]).conj()
}

fn setup() -> (TorusSpec, LatticeBox, LatticeBox, f64) {
    (TorusSpec::sqrt2(), LatticeBox::new(1), LatticeBox::new(3), 1.0)
}

#[test]
fn coefficients_and_roles_match_the_definition() {
    let (spec, n, l, thr) = setup();
    let (chi, dec) = build_chi(&spec, n, l, thr).unwrap();
    let (mut c1, mut c2, mut kept) = (0, 0, 0);
    for t in tuples(l) {
        let d = dispersion(&spec, t[0]) + dispersion(&spec, t[1]) - dispersion(&spec, t[2]) - dispersion(&spec, t[3]);
        match (oracle_role(&spec, n, t, thr), chi.coefficient(&t)) {
            (Role::Chi1, Some((g, ChiPart::Chi1))) => {
                assert!((g - C::new(0.0, 1.0 / d)).norm() <= 1e-12 * g.norm(), "{t:?}");
                c1 += 1;
            }
            (Role::Chi2, Some((g, ChiPart::Chi2))) => {
                assert!((g - C::new(0.0, 1.0 / d)).norm() <= 1e-12 * g.norm(), "{t:?}");
                c2 += 1;
            }
            (Role::Kept, None) => kept += 1,
            (r, got) => panic!("{t:?}: oracle {r:?}, library {got:?}"),
        }
    }
    assert_eq!(c1, chi.chi1_len());
    assert_eq!(c2, chi.chi2_len());
    assert_eq!(kept, dec.resonant_terms.len() + dec.weak_terms.len());
}

#[test]
fn vector_field_matches_direct_sum() {
    let (spec, n, l, thr) = setup();
    let (chi, _) = build_chi(&spec, n, l, thr).unwrap();
    let z = random_field(l, l, 1.5, 1.0, 17);
    let got = chi_vector_field(&chi, &z).unwrap();
    let mut want = ModeField::zeros(l);
    for t in tuples(l) {
        if oracle_role(&spec, n, t, thr) == Role::Kept {
            continue;
        }
        let d = dispersion(&spec, t[0]) + dispersion(&spec, t[1]) - dispersion(&spec, t[2]) - dispersion(&spec, t[3]);
        let v = want.get(t[3]) + z.get(t[0]) * z.get(t[1]) * z.get(t[2]).conj() / d;
        want.set(t[3], v).unwrap();
    }
    let err = sobolev_norm(&got.difference(&want).unwrap(), 0.0);
    assert!(err <= 1e-12 * sobolev_norm(&want, 0.0), "{err}");
}

#[test]
fn cancellation_identity_holds_along_the_linear_flow() {
    // {χ, H0}(z) = −d/dt χ(e^{−iλt} z) at t = 0, taken by a central difference.
    let (spec, n, l, thr) = setup();
    let (chi, dec) = build_chi(&spec, n, l, thr).unwrap();
    let rotate = |z: &ModeField, t: f64| {
        let mut out = z.clone();
        for k in l.modes() {
            out.set(k, z.get(k) * C::from_polar(1.0, -dispersion(&spec, k) * t))
                .unwrap();
        }
        out
    };
    for seed in 0..3 {
        let z = random_field(l, l, 1.5, 0.5, seed);
        let h = 1e-4;
        let bracket = -(chi.value(&rotate(&z, h)).unwrap() - chi.value(&rotate(&z, -h)).unwrap()) / (2.0 * h);
        let (mut p, mut kept) = (0.0, 0.0);
        for t in tuples(l) {
            let m = 0.5 * monomial(&z, t).re;
            p += m;
            if oracle_role(&spec, n, t, thr) == Role::Kept {
                kept += m;
            }
        }
        let scale = p.abs().max(1.0);
        assert!(
            (bracket + p - kept).abs() <= 1e-6 * scale,
            "seed {seed}: {}",
            bracket + p - kept
        );
        assert!((chi.bracket_with_h0(&z).unwrap() - bracket).abs() <= 1e-6 * scale);
    }
    let samples: Vec<_> = (0..3).map(|s| random_field(l, l, 1.5, 0.5, 100 + s)).collect();
    let report = verify_poisson_cancellation(&chi, &dec, &spec, &samples).unwrap();
    assert!(report.max_residual <= 1e-10 * report.max_term_magnitude.max(1.0));
}

#[test]
fn flow_is_cubically_close_to_the_identity() {
    let (spec, n, l, thr) = setup();
    let (chi, _) = build_chi(&spec, n, l, thr).unwrap();
    let dir = random_field(l, n, 1.5, 1.0, 5);
    let eps: Vec<f64> = (0..5).map(|i| 10f64.powf(-3.0 + 0.25 * i as f64)).collect();
    let report = scaling_sweep(&chi, &dir, &eps, &FlowOptions::default()).unwrap();
    assert!((report.slope - 3.0).abs() <= 0.2, "slope {}", report.slope);
    assert!(report.max_round_trip < 1e-9);

    // To leading order the time-1 map is z + X_χ(z).
    let z = dir.scaled(1e-2);
    let tz = lie_transform(&chi, &z, FlowDirection::Forward, &FlowOptions::default()).unwrap();
    let x = chi_vector_field(&chi, &z).unwrap();
    let step = tz.difference(&z).unwrap();
    let rel = sobolev_norm(&step.difference(&x).unwrap(), 1.5) / sobolev_norm(&x, 1.5);
    assert!(rel < 1e-2, "{rel}");
}

#[test]
fn rational_tori_are_refused() {
    assert!(build_chi(&TorusSpec::square(), LatticeBox::new(1), LatticeBox::new(2), 1.0).is_err());
}
