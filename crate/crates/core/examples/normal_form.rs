//! Builds χ for the (1, √2) torus, checks the cancellation identity and the cubic estimate.

use irrtorus::lattice::random_field;
use irrtorus::normal_form::{build_chi, scaling_sweep, verify_poisson_cancellation, FlowOptions};
use irrtorus::{LatticeBox, TorusSpec};

fn main() -> irrtorus::Result<()> {
    let spec = TorusSpec::sqrt2();
    let (n, l) = (LatticeBox::new(4), LatticeBox::new(8));
    let (chi, dec) = build_chi(&spec, n, l, 1.0)?;
    println!(
        "chi1 {} terms, chi2 {} terms, resonant {}, weak {}, C_N = {:.3}",
        chi.chi1_len(),
        chi.chi2_len(),
        dec.resonant_terms.len(),
        dec.weak_terms.len(),
        chi.small_divisor_constant()
    );

    let samples: Vec<_> = (0..3).map(|s| random_field(l, l, 1.5, 0.1, s)).collect();
    let p = verify_poisson_cancellation(&chi, &dec, &spec, &samples)?;
    println!(
        "{{chi, H0}} + P - L - U: max residual {:.2e} at scale {:.2e}",
        p.max_residual, p.max_term_magnitude
    );

    let direction = random_field(l, LatticeBox::new(1), 1.5, 1.0, 0);
    let eps: Vec<f64> = (0..5).map(|i| 10f64.powf(-3.0 + 0.25 * i as f64)).collect();
    let sweep = scaling_sweep(&chi, &direction, &eps, &FlowOptions::default())?;
    for pt in &sweep.points {
        println!(
            "eps {:.3e}  |T(z) - z| {:.3e}  ratio {:.4}  round trip {:.1e}",
            pt.epsilon, pt.displacement, pt.ratio, pt.round_trip
        );
    }
    println!("slope {:.4}", sweep.slope);
    Ok(())
}
