//! Searches for a three-step cascade geometry and runs the activation demo on it.

use irrtorus::dynamics::{cascade_demo_for, find_cascade_geometry, CascadeOptions};
use irrtorus::LatticeBox;

fn main() -> irrtorus::Result<()> {
    let g = find_cascade_geometry(LatticeBox::new(2), LatticeBox::new(4), 6)?;
    println!("geometry: {g:?}");
    let report = cascade_demo_for(&g, LatticeBox::new(8), &CascadeOptions::default())?;
    for run in [&report.rational, &report.irrational, &report.p_only] {
        println!(
            "{:<26} activation {:?} max {:?} first order {:?}",
            run.label, run.activation_times, run.max_modulus, run.first_nonzero_order
        );
    }
    println!("pass: {}", report.pass);
    Ok(())
}
