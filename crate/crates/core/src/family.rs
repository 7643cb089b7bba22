//! Generation structures built from resonant rectangles.
//!
//! A family `Λ = Λ_1 ∪ … ∪ Λ_N` is a disjoint union of finite mode sets. A
//! nuclear family is a non-degenerate resonant rectangle whose parents lie in
//! some `Λ_j` and whose children lie in `Λ_{j+1}`. [`validate_family`] checks
//! closure, existence and uniqueness of spouse/children and sibling/parents,
//! nondegeneracy, faithfulness and no-spreading. Under the irrational relation
//! every rectangle is axis-parallel, so each generation is a coordinate
//! permutation of the first and generation sums can grow by at most `2^s`.
//!
//! Conventions where the conditions leave room:
//! - the last generation is not required to have children, the first is not
//!   required to have parents;
//! - a family with no generations, or with an empty generation, fails the
//!   spouse/children condition;
//! - a generation ratio with both sums zero counts as 1.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Mode, TorusSpec};
use crate::resonance::{canonical_unordered, is_resonant, Tuple};

/// The relation defining rectangles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    /// Non-degenerate resonances of the square torus.
    #[serde(rename = "square_torus_a", alias = "SquareTorusA")]
    SquareTorusA,
    /// Non-degenerate resonances of an irrational torus.
    #[serde(rename = "irrational_r", alias = "IrrationalR")]
    IrrationalR,
}

impl Relation {
    fn spec(self) -> TorusSpec {
        match self {
            Relation::SquareTorusA => TorusSpec::square(),
            Relation::IrrationalR => TorusSpec::sqrt2(),
        }
    }

    /// Resonant under the relation and non-degenerate (`n1 ≠ n3`, `n1 ≠ n4`).
    pub fn contains(self, t: &Tuple) -> bool {
        t[0] != t[2] && t[0] != t[3] && is_resonant(&self.spec(), t)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::SquareTorusA => "square_torus_a",
            Relation::IrrationalR => "irrational_r",
        })
    }
}

/// Generations `Λ_1..Λ_N` with the relation they are validated against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyStructure {
    pub generations: Vec<Vec<Mode>>,
    pub relation: Relation,
    pub s: f64,
}

impl FamilyStructure {
    /// Rejects repeated modes within or across generations.
    pub fn new(generations: Vec<Vec<Mode>>, relation: Relation, s: f64) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (j, g) in generations.iter().enumerate() {
            for m in g {
                if !seen.insert(*m) {
                    return Err(Error::InvalidConfig(format!(
                        "mode {m} appears twice (second time in generation {})",
                        j + 1
                    )));
                }
            }
        }
        Ok(Self {
            generations,
            relation,
            s,
        })
    }

    /// Map from mode to its generation index (0-based).
    pub fn generation_of(&self) -> BTreeMap<Mode, usize> {
        self.generations
            .iter()
            .enumerate()
            .flat_map(|(j, g)| g.iter().map(move |m| (*m, j)))
            .collect()
    }

    pub fn modes(&self) -> Vec<Mode> {
        self.generations.iter().flatten().copied().collect()
    }
}

/// Outcome of one condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub pass: bool,
    /// Offending modes when the condition fails.
    pub witness: Option<Vec<Mode>>,
    pub note: Option<String>,
}

impl ConditionResult {
    fn ok() -> Self {
        Self {
            pass: true,
            witness: None,
            note: None,
        }
    }

    fn fail(witness: Vec<Mode>, note: impl Into<String>) -> Self {
        Self {
            pass: false,
            witness: Some(witness),
            note: Some(note.into()),
        }
    }
}

/// Per-condition results of [`validate_family`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub closure: ConditionResult,
    pub spouse_and_children: ConditionResult,
    pub sibling_and_parents: ConditionResult,
    pub nondegeneracy: ConditionResult,
    pub faithfulness: ConditionResult,
    pub no_spreading: ConditionResult,
}

impl FamilyReport {
    /// Conditions i–v.
    pub fn passes_i_to_v(&self) -> bool {
        self.closure.pass
            && self.spouse_and_children.pass
            && self.sibling_and_parents.pass
            && self.nondegeneracy.pass
            && self.faithfulness.pass
    }

    pub fn passes_all(&self) -> bool {
        self.passes_i_to_v() && self.no_spreading.pass
    }
}

/// A nuclear family as unordered parent and child pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Nuclear {
    parents: (Mode, Mode),
    children: (Mode, Mode),
}

fn pair(a: Mode, b: Mode) -> (Mode, Mode) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Nuclear families with parents in generation `j` and children in `j + 1`.
fn nuclear_families(f: &FamilyStructure, j: usize) -> BTreeSet<Nuclear> {
    let mut out = BTreeSet::new();
    let (Some(parents), Some(children)) = (f.generations.get(j), f.generations.get(j + 1)) else {
        return out;
    };
    let child_set: BTreeSet<Mode> = children.iter().copied().collect();
    for (i, &n1) in parents.iter().enumerate() {
        for &n2 in &parents[i + 1..] {
            for &n3 in children {
                let n4 = n1 + n2 - n3;
                if child_set.contains(&n4) && f.relation.contains(&[n1, n2, n3, n4]) {
                    out.insert(Nuclear {
                        parents: pair(n1, n2),
                        children: pair(n3, n4),
                    });
                }
            }
        }
    }
    out
}

/// Every distinct rectangle of the relation with all four vertices in Λ, in canonical form.
pub fn rectangles_in(f: &FamilyStructure) -> Vec<Tuple> {
    let modes = f.modes();
    let set: BTreeSet<Mode> = modes.iter().copied().collect();
    let mut out = BTreeSet::new();
    for &n1 in &modes {
        for &n2 in &modes {
            for &n3 in &modes {
                let n4 = n1 + n2 - n3;
                let t = [n1, n2, n3, n4];
                if set.contains(&n4) && f.relation.contains(&t) {
                    out.insert(canonical_unordered(&t));
                }
            }
        }
    }
    out.into_iter().collect()
}

fn check_closure(f: &FamilyStructure) -> ConditionResult {
    let modes = f.modes();
    let set: BTreeSet<Mode> = modes.iter().copied().collect();
    for &n1 in &modes {
        for &n2 in &modes {
            for &n3 in &modes {
                let n = n1 + n2 - n3;
                if !set.contains(&n) && f.relation.contains(&[n1, n2, n3, n]) {
                    return ConditionResult::fail(
                        vec![n1, n2, n3, n],
                        format!("rectangle closes at {n}, which is not in the family"),
                    );
                }
            }
        }
    }
    ConditionResult::ok()
}

fn check_spouse_and_children(f: &FamilyStructure, families: &[BTreeSet<Nuclear>]) -> ConditionResult {
    if f.generations.is_empty() {
        return ConditionResult::fail(vec![], "no generations");
    }
    if let Some(j) = f.generations.iter().position(Vec::is_empty) {
        return ConditionResult::fail(vec![], format!("generation {} is empty", j + 1));
    }
    let last = f.generations.len() - 1;
    for (j, gen) in f.generations.iter().enumerate().take(last) {
        for &n in gen {
            let count = families[j]
                .iter()
                .filter(|fam| fam.parents.0 == n || fam.parents.1 == n)
                .count();
            if count != 1 {
                return ConditionResult::fail(
                    vec![n],
                    format!("{n} in generation {} is a parent of {count} nuclear families", j + 1),
                );
            }
        }
    }
    ConditionResult::ok()
}

fn check_sibling_and_parents(f: &FamilyStructure, families: &[BTreeSet<Nuclear>]) -> ConditionResult {
    for (j, gen) in f.generations.iter().enumerate().skip(1) {
        for &n in gen {
            let count = families[j - 1]
                .iter()
                .filter(|fam| fam.children.0 == n || fam.children.1 == n)
                .count();
            if count != 1 {
                return ConditionResult::fail(
                    vec![n],
                    format!("{n} in generation {} is a child of {count} nuclear families", j + 1),
                );
            }
        }
    }
    ConditionResult::ok()
}

fn other(p: (Mode, Mode), n: Mode) -> Mode {
    if p.0 == n {
        p.1
    } else {
        p.0
    }
}

fn check_nondegeneracy(f: &FamilyStructure, families: &[BTreeSet<Nuclear>]) -> ConditionResult {
    for (j, gen) in f.generations.iter().enumerate() {
        for &n in gen {
            let spouses: Vec<Mode> = families
                .get(j)
                .into_iter()
                .flatten()
                .filter(|fam| fam.parents.0 == n || fam.parents.1 == n)
                .map(|fam| other(fam.parents, n))
                .collect();
            let siblings: Vec<Mode> = j
                .checked_sub(1)
                .and_then(|p| families.get(p))
                .into_iter()
                .flatten()
                .filter(|fam| fam.children.0 == n || fam.children.1 == n)
                .map(|fam| other(fam.children, n))
                .collect();
            if let Some(s) = spouses.iter().find(|s| siblings.contains(s)) {
                return ConditionResult::fail(vec![n, *s], format!("{n} has {s} as both spouse and sibling"));
            }
        }
    }
    ConditionResult::ok()
}

fn check_faithfulness(f: &FamilyStructure, families: &[BTreeSet<Nuclear>]) -> ConditionResult {
    let nuclear: BTreeSet<Tuple> = families
        .iter()
        .flatten()
        .map(|fam| canonical_unordered(&[fam.parents.0, fam.parents.1, fam.children.0, fam.children.1]))
        .collect();
    for r in rectangles_in(f) {
        if !nuclear.contains(&r) {
            return ConditionResult::fail(r.to_vec(), "rectangle in the family that is not a nuclear family");
        }
    }
    ConditionResult::ok()
}

fn check_no_spreading(f: &FamilyStructure) -> ConditionResult {
    let modes = f.modes();
    if modes.is_empty() {
        return ConditionResult::ok();
    }
    let set: BTreeSet<Mode> = modes.iter().copied().collect();
    let (xmin, xmax) = (
        modes.iter().map(|m| m.x).min().unwrap(),
        modes.iter().map(|m| m.x).max().unwrap(),
    );
    let (ymin, ymax) = (
        modes.iter().map(|m| m.y).min().unwrap(),
        modes.iter().map(|m| m.y).max().unwrap(),
    );
    let diameter = (((xmax - xmin).pow(2) + (ymax - ymin).pow(2)) as f64).sqrt().ceil() as i32;
    for x in xmin - diameter..=xmax + diameter {
        for y in ymin - diameter..=ymax + diameter {
            let n = Mode::new(x, y);
            if set.contains(&n) {
                continue;
            }
            let mut rects = BTreeSet::new();
            for (i, &a) in modes.iter().enumerate() {
                for &b in &modes[i + 1..] {
                    let candidates = [
                        (a + b - n, [a, b, n, a + b - n]),
                        (n + a - b, [n, a, b, n + a - b]),
                        (n + b - a, [n, b, a, n + b - a]),
                    ];
                    for (m, t) in candidates {
                        if m != n && !set.contains(&m) && f.relation.contains(&t) {
                            rects.insert(canonical_unordered(&t));
                        }
                    }
                }
            }
            if rects.len() > 2 {
                return ConditionResult::fail(
                    vec![n],
                    format!(
                        "{n} is a vertex of {} rectangles with two vertices in the family",
                        rects.len()
                    ),
                );
            }
        }
    }
    ConditionResult::ok()
}

/// Checks conditions i–vi; never fails, reports witnesses instead.
pub fn validate_family(f: &FamilyStructure) -> FamilyReport {
    let families: Vec<BTreeSet<Nuclear>> = (0..f.generations.len()).map(|j| nuclear_families(f, j)).collect();
    FamilyReport {
        closure: check_closure(f),
        spouse_and_children: check_spouse_and_children(f, &families),
        sibling_and_parents: check_sibling_and_parents(f, &families),
        nondegeneracy: check_nondegeneracy(f, &families),
        faithfulness: check_faithfulness(f, &families),
        no_spreading: check_no_spreading(f),
    }
}

/// `Σ_{n ∈ Λ_j} |n|^{2s}` for each generation.
pub fn generation_sums(f: &FamilyStructure) -> Vec<f64> {
    f.generations
        .iter()
        .map(|g| g.iter().map(|n| (n.norm_sq() as f64).powf(f.s)).sum())
        .collect()
}

/// `max_{j,k} sums[j] / sums[k]`, at least 1; two zero sums compare as 1.
pub fn max_generation_ratio(sums: &[f64]) -> f64 {
    let mut max_ratio: f64 = 1.0;
    for a in sums {
        for b in sums {
            let r = match (*a == 0.0, *b == 0.0) {
                (true, true) => 1.0,
                (false, true) => f64::INFINITY,
                _ => a / b,
            };
            max_ratio = max_ratio.max(r);
        }
    }
    max_ratio
}

/// Outcome of [`check_ratio_bound`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub sums: Vec<f64>,
    pub max_ratio: f64,
    /// `2^s`.
    pub bound: f64,
    /// `τ_ℓ` for each generation: generation `ℓ` is `{(a_i, b_{τ_ℓ(i)})}` in the order of `Λ_1`.
    pub permutations: Vec<Vec<usize>>,
    pub permutation_structure: bool,
    pub pass: bool,
}

/// Expresses each generation as `{(a_i, b_{τ(i)})}` with `(a_i, b_i)` the points of `Λ_1`.
pub fn extract_permutations(f: &FamilyStructure) -> Option<Vec<Vec<usize>>> {
    let first = f.generations.first()?;
    let mut out = Vec::with_capacity(f.generations.len());
    for gen in &f.generations {
        if gen.len() != first.len() {
            return None;
        }
        let mut x_free: Vec<bool> = vec![true; first.len()];
        let mut y_free: Vec<bool> = vec![true; first.len()];
        let mut tau = vec![usize::MAX; first.len()];
        for p in gen {
            let i = (0..first.len()).find(|&i| x_free[i] && first[i].x == p.x)?;
            let j = (0..first.len()).find(|&j| y_free[j] && first[j].y == p.y)?;
            x_free[i] = false;
            y_free[j] = false;
            tau[i] = j;
        }
        out.push(tau);
    }
    Some(out)
}

/// Largest generation-sum ratio against `2^s`, with the permutation structure.
///
/// Requires the irrational relation and conditions i–v.
pub fn check_ratio_bound(f: &FamilyStructure) -> Result<RatioReport> {
    if f.relation != Relation::IrrationalR {
        return Err(Error::Precondition(
            "ratio bound applies to the irrational relation".into(),
        ));
    }
    let report = validate_family(f);
    if !report.passes_i_to_v() {
        return Err(Error::Precondition("family fails one of conditions i-v".into()));
    }
    let sums = generation_sums(f);
    let max_ratio = max_generation_ratio(&sums);
    let bound = 2f64.powf(f.s);
    let permutations = extract_permutations(f);
    Ok(RatioReport {
        sums,
        max_ratio,
        bound,
        permutation_structure: permutations.is_some(),
        permutations: permutations.unwrap_or_default(),
        pass: max_ratio <= bound,
    })
}

/// Builds random candidate families in `Q_box` and keeps those passing i–v.
///
/// `Λ_1` is a set of random parent pairs; each generation's children are the
/// coordinate swaps of its pairs, and the children are re-paired at random
/// for the next generation.
pub fn random_family_search(
    relation: Relation,
    s: f64,
    box_half_width: i32,
    max_generations: usize,
    wanted: usize,
    max_attempts: usize,
    seed: u64,
) -> Vec<FamilyStructure> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut found = Vec::new();
    let b = box_half_width;
    for _ in 0..max_attempts {
        if found.len() >= wanted {
            break;
        }
        let pairs = rng.gen_range(1..=3);
        let generations = rng.gen_range(2..=max_generations.max(2));
        let mut first = Vec::with_capacity(2 * pairs);
        for _ in 0..pairs {
            let p = Mode::new(rng.gen_range(-b..=b), rng.gen_range(-b..=b));
            let q = Mode::new(rng.gen_range(-b..=b), rng.gen_range(-b..=b));
            first.push(p);
            first.push(q);
        }
        let mut gens = vec![first];
        for _ in 1..generations {
            let parents = gens.last().unwrap().clone();
            let children: Vec<Mode> = parents
                .chunks(2)
                .flat_map(|c| [Mode::new(c[0].x, c[1].y), Mode::new(c[1].x, c[0].y)])
                .collect();
            let mut next = children;
            next.shuffle(&mut rng);
            gens.push(next);
        }
        let Ok(f) = FamilyStructure::new(gens, relation, s) else {
            continue;
        };
        if validate_family(&f).passes_i_to_v() {
            found.push(f);
        }
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(x: i32, y: i32) -> Mode {
        Mode::new(x, y)
    }

    fn two_gen(relation: Relation) -> FamilyStructure {
        FamilyStructure::new(vec![vec![m(0, 1), m(1, 0)], vec![m(0, 0), m(1, 1)]], relation, 1.0).unwrap()
    }

    #[test]
    fn two_generation_example() {
        let f = two_gen(Relation::IrrationalR);
        let r = validate_family(&f);
        assert!(r.passes_i_to_v(), "{r:?}");
        assert_eq!(generation_sums(&f), vec![2.0, 2.0]);
        let ratio = check_ratio_bound(&f).unwrap();
        assert_eq!(ratio.max_ratio, 1.0);
        assert_eq!(ratio.bound, 2.0);
        assert!(ratio.pass && ratio.permutation_structure);
    }

    #[test]
    fn empty_family_convention() {
        let f = FamilyStructure::new(vec![], Relation::IrrationalR, 1.0).unwrap();
        let r = validate_family(&f);
        assert!(r.closure.pass && r.nondegeneracy.pass && r.faithfulness.pass);
        assert!(!r.spouse_and_children.pass);
    }

    #[test]
    fn single_generation_ratio_is_one() {
        let f = FamilyStructure::new(vec![vec![m(2, 3)]], Relation::IrrationalR, 1.5).unwrap();
        let r = check_ratio_bound(&f).unwrap();
        assert_eq!(r.max_ratio, 1.0);
    }

    #[test]
    fn constant_generations_have_unit_sums() {
        let f = FamilyStructure {
            generations: vec![vec![m(1, 0)]; 3],
            relation: Relation::IrrationalR,
            s: 1.0,
        };
        assert_eq!(generation_sums(&f), vec![1.0; 3]);
    }

    #[test]
    fn basic_rectangle_is_a_square_torus_family() {
        let gens = vec![vec![m(1, 1), m(-1, 1)], vec![m(0, 0), m(0, 2)]];
        let a = FamilyStructure::new(gens.clone(), Relation::SquareTorusA, 1.0).unwrap();
        let ra = validate_family(&a);
        assert!(ra.spouse_and_children.pass && ra.sibling_and_parents.pass && ra.closure.pass);
        let r = FamilyStructure::new(gens, Relation::IrrationalR, 1.0).unwrap();
        assert!(!validate_family(&r).spouse_and_children.pass);
        assert!(check_ratio_bound(&a).is_err());
    }

    #[test]
    fn degenerate_tuples_are_not_rectangles() {
        assert!(!Relation::IrrationalR.contains(&[m(1, 2), m(3, 4), m(1, 2), m(3, 4)]));
        assert!(!Relation::SquareTorusA.contains(&[m(1, 2), m(3, 4), m(3, 4), m(1, 2)]));
        let f = FamilyStructure::new(vec![vec![m(1, 2), m(3, 4)]], Relation::IrrationalR, 1.0).unwrap();
        assert!(validate_family(&f).faithfulness.pass);
    }

    #[test]
    fn duplicate_modes_are_rejected() {
        assert!(FamilyStructure::new(vec![vec![m(0, 0)], vec![m(0, 0)]], Relation::IrrationalR, 1.0).is_err());
    }

    #[test]
    fn closure_failure_has_witness() {
        // three corners of an axis-parallel rectangle without the fourth
        let f = FamilyStructure::new(vec![vec![m(0, 0), m(2, 0), m(0, 3)]], Relation::IrrationalR, 1.0).unwrap();
        let r = validate_family(&f);
        assert!(!r.closure.pass);
        assert!(r.closure.witness.unwrap().contains(&m(2, 3)));
    }

    #[test]
    fn random_search_finds_valid_families() {
        let found = random_family_search(Relation::IrrationalR, 1.5, 6, 4, 5, 5000, 1);
        assert_eq!(found.len(), 5);
        for f in &found {
            assert!(check_ratio_bound(f).unwrap().pass);
        }
    }
}
