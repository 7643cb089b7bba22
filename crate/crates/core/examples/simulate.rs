//! Resonant and full runs from the same data, with confinement and conservation diagnostics.

use irrtorus::dynamics::{
    integrate_full, integrate_resonant, resolve_window, support_confinement_report, SimulationConfig,
};
use irrtorus::TorusSpec;

fn main() -> irrtorus::Result<()> {
    let mut config = SimulationConfig::new(TorusSpec::sqrt2(), 1, 4, 8, 0.05);
    config.samples = 100;
    let u0 = config.initial_data();
    let window = resolve_window(&config, &u0);
    println!("horizon {:.1} ({:?})", window.t_final, window.active_bound);

    let res = integrate_resonant(&config, &u0)?;
    let r = support_confinement_report(&res, config.m_box, config.n_box);
    println!(
        "resonant: max outside Q_1 {:.1e}, mass drift {:.1e}",
        r.max_outside(),
        res.mass_drift()
    );

    let full = integrate_full(&config, &u0)?;
    let f = support_confinement_report(&full, config.m_box, config.n_box);
    println!(
        "full:     max on Q_4 \\ Q_1 {:.2e}, beyond Q_4 {:.2e}, mass drift {:.1e}, hamiltonian drift {:.1e}",
        f.max_annulus,
        f.max_exterior,
        full.mass_drift(),
        full.hamiltonian_drift()
    );
    println!("eps^2.5 = {:.2e}", config.epsilon.powf(2.5));
    Ok(())
}
