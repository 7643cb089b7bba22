//! Resonant tuples of the square and (1, √2) tori side by side.

use std::collections::BTreeMap;

use irrtorus::resonance::{
    collapse_unordered, enumerate_resonances, min_nonzero_defect, resonant_neighbors, weak_resonance_set,
};
use irrtorus::{LatticeBox, Mode, TorusSpec};

fn main() -> irrtorus::Result<()> {
    let n_box = LatticeBox::new(3);
    for spec in [TorusSpec::square(), TorusSpec::rational(1, 2)?, TorusSpec::sqrt2()] {
        let found = enumerate_resonances(&spec, n_box)?;
        let mut by_class = BTreeMap::new();
        for t in &found {
            *by_class.entry(t.class.as_str()).or_insert(0usize) += 1;
        }
        println!(
            "{:?}: {} ordered, {} unordered, {by_class:?}, smallest nonzero defect {:?}",
            spec.weights(),
            found.len(),
            collapse_unordered(&found).len(),
            min_nonzero_defect(&spec, n_box)
        );
    }

    // Who feeds (0,2)? On the square torus the tilted rectangle through (1,1), (-1,1), (0,0).
    let k = Mode::new(0, 2);
    for spec in [TorusSpec::square(), TorusSpec::sqrt2()] {
        let q = resonant_neighbors(&spec, k, LatticeBox::new(1))?;
        println!(
            "{:?}: {} triples in Q_1 complete a resonance at {k}",
            spec.weights(),
            q.triples.len()
        );
        for t in q.triples.iter().filter(|t| !t.contains(&k)) {
            println!("  {} + {} - {}", t[0], t[1], t[2]);
        }
    }

    let weak = weak_resonance_set(&TorusSpec::sqrt2(), LatticeBox::new(2), LatticeBox::new(4), 1.0)?;
    println!("(1, sqrt2): {} weak tuples crossing Q_2 inside Q_4", weak.len());
    Ok(())
}
