//! The confinement check at one ε: full run, normal-form comparison and gap ratio.
//!
//! Usage: `cargo run --release --example confinement [epsilon]` (default 0.1).

use irrtorus::dynamics::{theorem_pipeline, PipelineOptions, SimulationConfig};
use irrtorus::TorusSpec;

fn main() -> irrtorus::Result<()> {
    let eps: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.1);
    let config = SimulationConfig::new(TorusSpec::sqrt2(), 1, 4, 8, eps);
    let r = theorem_pipeline(&config, &PipelineOptions::default())?;
    println!("eps {eps}, horizon {:.1} ({:?})", r.t_final, r.active_bound);
    println!(
        "sup outside Q_1 {:.3e} vs eps^{} = {:.3e}: pass {}",
        r.sup_outside, r.gamma, r.threshold, r.pass
    );
    println!("largest passing gamma {:?}", r.largest_passing_gamma);
    println!("duhamel gap {:.3e}, gap / eps^3 {:.4}", r.duhamel_gap, r.gap_ratio);
    println!("resonant system outside Q_1 {:.1e}", r.resonant_outside);
    Ok(())
}
