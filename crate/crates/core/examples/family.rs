//! Random generation structures under the irrational relation and their ratio bound.

use irrtorus::family::{check_ratio_bound, random_family_search, validate_family, FamilyStructure, Relation};
use irrtorus::Mode;

fn main() -> irrtorus::Result<()> {
    for s in [1.5, 2.0] {
        let found = random_family_search(Relation::IrrationalR, s, 6, 4, 10, 20_000, 3);
        let worst = found
            .iter()
            .map(|f| check_ratio_bound(f).map(|r| r.max_ratio))
            .collect::<irrtorus::Result<Vec<_>>>()?
            .into_iter()
            .fold(1.0, f64::max);
        println!(
            "s = {s}: {} families, largest ratio {worst:.3} <= 2^s = {:.3}",
            found.len(),
            2f64.powf(s)
        );
        if let Some(f) = found.first() {
            println!("  e.g. {:?}", f.generations);
        }
    }

    // The tilted rectangle is a nuclear family only for the square torus.
    let gens = vec![
        vec![Mode::new(1, 1), Mode::new(-1, 1)],
        vec![Mode::new(0, 0), Mode::new(0, 2)],
    ];
    for relation in [Relation::SquareTorusA, Relation::IrrationalR] {
        let f = FamilyStructure::new(gens.clone(), relation, 1.5)?;
        let r = validate_family(&f);
        println!(
            "{relation}: spouse/children {}, sibling/parents {}",
            r.spouse_and_children.pass, r.sibling_and_parents.pass
        );
    }
    Ok(())
}
