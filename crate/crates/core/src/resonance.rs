//! Exact resonance tests, enumeration and classification of 4-tuples.
//!
//! A tuple `(k1, k2, k3, k4)` conserves momentum when `k1 + k2 = k3 + k4` and
//! is resonant when in addition `λ_{k1} + λ_{k2} = λ_{k3} + λ_{k4}`. Writing
//! `A_i = (k1_i)² + (k2_i)² − (k3_i)² − (k4_i)²` for the per-coordinate
//! defects, the λ-defect is `w1·A_1 + w2·A_2`. Irrational weights force both
//! `A_i` to vanish, which for integers means each coordinate pairs up as a
//! multiset. Rational weights `(p, q)` only need `p·A_1 + q·A_2 = 0`. All set
//! membership here is decided in integer arithmetic.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeBox, Mode, TorusSpec};

/// Largest box half-width accepted by [`enumerate_resonances`].
pub const ENUMERATION_CAP: u32 = 12;

/// Default weak-resonance threshold; tuples with `|defect| <` this are weak.
pub const DEFAULT_WEAK_THRESHOLD: f64 = 1.0;

pub type Tuple = [Mode; 4];

/// Geometry of a momentum-conserving tuple.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResonanceClass {
    /// `{k1, k2} = {k3, k4}` as multisets.
    Degenerate,
    /// Non-degenerate, and each coordinate pairs up separately: an axis-parallel rectangle.
    Parallel,
    /// Everything else.
    Nonparallel,
}

impl ResonanceClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ResonanceClass::Degenerate => "degenerate",
            ResonanceClass::Parallel => "parallel",
            ResonanceClass::Nonparallel => "nonparallel",
        }
    }
}

impl fmt::Display for ResonanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ResonanceClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "degenerate" => Ok(ResonanceClass::Degenerate),
            "parallel" => Ok(ResonanceClass::Parallel),
            "nonparallel" => Ok(ResonanceClass::Nonparallel),
            _ => Err(Error::Parse(format!("unknown resonance class '{s}'"))),
        }
    }
}

/// A momentum-conserving 4-tuple with its class and λ-defect.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonantTuple {
    pub modes: Tuple,
    pub class: ResonanceClass,
    /// `λ_{k1} + λ_{k2} − λ_{k3} − λ_{k4}`.
    pub weak_defect: f64,
}

/// Ordered triples `(k1, k2, k3)` with `(k1, k2, k3, center)` resonant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResonanceQueryResult {
    pub center: Mode,
    pub triples: Vec<[Mode; 3]>,
}

pub fn conserves_momentum(t: &Tuple) -> bool {
    t[0] + t[1] == t[2] + t[3]
}

/// Per-coordinate squared-sum defects `(A_1, A_2)`.
pub fn coordinate_defects(t: &Tuple) -> (i64, i64) {
    let d = |i: usize| {
        let sq = |m: Mode| {
            let c = m.coord(i) as i64;
            c * c
        };
        sq(t[0]) + sq(t[1]) - sq(t[2]) - sq(t[3])
    };
    (d(0), d(1))
}

/// `λ_{k1} + λ_{k2} − λ_{k3} − λ_{k4}`.
pub fn defect(spec: &TorusSpec, t: &Tuple) -> f64 {
    let (a1, a2) = coordinate_defects(t);
    spec.combine_defects(a1, a2)
}

/// `a + b = c + d` and `a² + b² = c² + d²`, the one-dimensional resonance system.
pub fn one_dimensional_resonance(a: i64, b: i64, c: i64, d: i64) -> bool {
    a + b == c + d && a * a + b * b == c * c + d * d
}

/// `{a, b} = {c, d}` as multisets.
pub fn pairs_match(a: i64, b: i64, c: i64, d: i64) -> bool {
    (a == c && b == d) || (a == d && b == c)
}

/// Exact resonance test.
pub fn is_resonant(spec: &TorusSpec, t: &Tuple) -> bool {
    if !conserves_momentum(t) {
        return false;
    }
    let (a1, a2) = coordinate_defects(t);
    spec.defects_resonant(a1, a2)
}

/// Geometric class of a momentum-conserving tuple.
pub fn classify(t: &Tuple) -> Result<ResonanceClass> {
    if !conserves_momentum(t) {
        return Err(Error::MomentumViolation(*t));
    }
    Ok(classify_unchecked(t))
}

fn classify_unchecked(t: &Tuple) -> ResonanceClass {
    if (t[0] == t[2] && t[1] == t[3]) || (t[0] == t[3] && t[1] == t[2]) {
        return ResonanceClass::Degenerate;
    }
    let coord_pairs = |i: usize| {
        pairs_match(
            t[0].coord(i) as i64,
            t[1].coord(i) as i64,
            t[2].coord(i) as i64,
            t[3].coord(i) as i64,
        )
    };
    if coord_pairs(0) && coord_pairs(1) {
        ResonanceClass::Parallel
    } else {
        ResonanceClass::Nonparallel
    }
}

fn tagged(spec: &TorusSpec, t: Tuple) -> ResonantTuple {
    ResonantTuple {
        modes: t,
        class: classify_unchecked(&t),
        weak_defect: defect(spec, &t),
    }
}

/// Every ordered resonant tuple inside `n_box`, in lexicographic box-index order of `(k1, k2, k3)`.
///
/// The cost is `O(|Q_N|³)`; half-widths above [`ENUMERATION_CAP`] are refused.
pub fn enumerate_resonances(spec: &TorusSpec, n_box: LatticeBox) -> Result<Vec<ResonantTuple>> {
    if n_box.half_width > ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            requested: n_box.half_width,
            cap: ENUMERATION_CAP,
        });
    }
    let modes: Vec<Mode> = n_box.modes().collect();
    let spec = *spec;
    let out: Vec<Vec<ResonantTuple>> = modes
        .par_iter()
        .map(|&k1| {
            let mut local = Vec::new();
            for &k2 in &modes {
                for &k3 in &modes {
                    let k4 = k1 + k2 - k3;
                    if !n_box.contains(k4) {
                        continue;
                    }
                    let t = [k1, k2, k3, k4];
                    if is_resonant(&spec, &t) {
                        local.push(tagged(&spec, t));
                    }
                }
            }
            local
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

/// Canonical representative of a tuple under `k1↔k2`, `k3↔k4` and `(k1,k2)↔(k3,k4)`.
pub fn canonical_unordered(t: &Tuple) -> Tuple {
    let sort = |a: Mode, b: Mode| if a <= b { (a, b) } else { (b, a) };
    let p = sort(t[0], t[1]);
    let q = sort(t[2], t[3]);
    let (first, second) = if p <= q { (p, q) } else { (q, p) };
    [first.0, first.1, second.0, second.1]
}

/// Distinct canonical representatives, sorted.
pub fn collapse_unordered(tuples: &[ResonantTuple]) -> Vec<Tuple> {
    tuples
        .iter()
        .map(|t| canonical_unordered(&t.modes))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Ordered triples `(k1, k2, k3)` in `n_box` completing a resonant tuple with `k` in the last slot.
///
/// For irrational tori the answer is assembled directly from the four
/// families of triples sharing coordinates with `k`; for rational tori it is a
/// brute-force scan. `k` itself need not lie in `n_box`.
pub fn resonant_neighbors(spec: &TorusSpec, k: Mode, n_box: LatticeBox) -> Result<ResonanceQueryResult> {
    let m = n_box.half_width as i32;
    let mut set = BTreeSet::new();
    if spec.is_rational() {
        for k1 in n_box.modes() {
            for k2 in n_box.modes() {
                let k3 = k1 + k2 - k;
                if n_box.contains(k3) && is_resonant(spec, &[k1, k2, k3, k]) {
                    set.insert([k1, k2, k3]);
                }
            }
        }
    } else {
        let (k1, k2) = (k.x, k.y);
        for a in -m..=m {
            for b in -m..=m {
                let ab = Mode::new(a, b);
                set.insert([Mode::new(k1, b), Mode::new(a, k2), ab]);
                set.insert([Mode::new(a, k2), Mode::new(k1, b), ab]);
                set.insert([k, ab, ab]);
                set.insert([ab, k, ab]);
            }
        }
        set.retain(|t| t.iter().all(|p| n_box.contains(*p)));
    }
    Ok(ResonanceQueryResult {
        center: k,
        triples: set.into_iter().collect(),
    })
}

/// Momentum-conserving tuples in `l_box` with a mode outside `n_box` and `|defect| < threshold`.
pub fn weak_resonance_set(
    spec: &TorusSpec,
    n_box: LatticeBox,
    l_box: LatticeBox,
    threshold: f64,
) -> Result<Vec<ResonantTuple>> {
    if n_box.half_width >= l_box.half_width {
        return Err(Error::InvalidConfig(format!(
            "inner box half-width {} must be smaller than the storage half-width {}",
            n_box.half_width, l_box.half_width
        )));
    }
    let mut out = Vec::new();
    crate::quartic::QuarticIndex::new(l_box, n_box).for_each_tuple(|t, a1, a2, inside| {
        if !inside && spec.combine_defects(a1 as i64, a2 as i64).abs() < threshold {
            out.push(tagged(spec, t));
        }
    });
    Ok(out)
}

/// `max(1, 1/min|defect|)` over momentum-conserving non-resonant tuples in `n_box`.
pub fn small_divisor_constant(spec: &TorusSpec, n_box: LatticeBox) -> f64 {
    min_nonzero_defect(spec, n_box).map_or(1.0, |d| (1.0 / d).max(1.0))
}

/// Smallest `|defect|` over momentum-conserving non-resonant tuples in `n_box`, if any exist.
pub fn min_nonzero_defect(spec: &TorusSpec, n_box: LatticeBox) -> Option<f64> {
    // Only the pair (A_1, A_2) matters, so collect the distinct pairs first.
    let mut pairs = BTreeSet::new();
    crate::quartic::QuarticIndex::new(n_box, n_box).for_each_tuple(|_, a1, a2, _| {
        pairs.insert((a1, a2));
    });
    pairs
        .into_iter()
        .filter(|&(a1, a2)| !spec.defects_resonant(a1 as i64, a2 as i64))
        .map(|(a1, a2)| spec.combine_defects(a1 as i64, a2 as i64).abs())
        .min_by(f64::total_cmp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(x: i32, y: i32) -> Mode {
        Mode::new(x, y)
    }

    const FIG1: Tuple = [Mode::new(1, 1), Mode::new(-1, 1), Mode::new(0, 0), Mode::new(0, 2)];
    const FIG2: Tuple = [Mode::new(0, 0), Mode::new(2, 1), Mode::new(2, 0), Mode::new(0, 1)];

    #[test]
    fn is_resonant_examples() {
        let sq = TorusSpec::square();
        let irr = TorusSpec::sqrt2();
        assert!(is_resonant(&sq, &FIG1));
        assert!(!is_resonant(&irr, &FIG1));
        for spec in [sq, irr, TorusSpec::rational(1, 2).unwrap()] {
            assert!(is_resonant(&spec, &[m(3, -1), m(2, 5), m(3, -1), m(2, 5)]));
            assert!(is_resonant(&spec, &FIG2));
        }
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&FIG1).unwrap(), ResonanceClass::Nonparallel);
        assert_eq!(classify(&FIG2).unwrap(), ResonanceClass::Parallel);
        assert_eq!(
            classify(&[m(3, 5), m(7, 2), m(3, 5), m(7, 2)]).unwrap(),
            ResonanceClass::Degenerate
        );
        assert!(matches!(
            classify(&[m(1, 0), m(0, 0), m(0, 0), m(0, 0)]),
            Err(Error::MomentumViolation(_))
        ));
    }

    #[test]
    fn origin_box_has_one_tuple() {
        for spec in [TorusSpec::square(), TorusSpec::sqrt2()] {
            let r = enumerate_resonances(&spec, LatticeBox::new(0)).unwrap();
            assert_eq!(r.len(), 1);
            assert_eq!(r[0].modes, [Mode::ORIGIN; 4]);
            assert_eq!(r[0].class, ResonanceClass::Degenerate);
        }
        assert!(enumerate_resonances(&TorusSpec::square(), LatticeBox::new(13)).is_err());
    }

    #[test]
    fn rational_one_two_has_its_own_nonparallel_rectangles() {
        let spec = TorusSpec::rational(1, 2).unwrap();
        let r = enumerate_resonances(&spec, LatticeBox::new(2)).unwrap();
        let np: Vec<_> = r.iter().filter(|t| t.class == ResonanceClass::Nonparallel).collect();
        assert!(!np.is_empty());
        for t in np {
            let (a1, a2) = coordinate_defects(&t.modes);
            assert_eq!(a1 + 2 * a2, 0);
            assert_eq!(t.weak_defect, 0.0);
        }
    }

    #[test]
    fn canonical_form_is_symmetric() {
        let c = canonical_unordered(&FIG1);
        for t in [
            [FIG1[1], FIG1[0], FIG1[2], FIG1[3]],
            [FIG1[0], FIG1[1], FIG1[3], FIG1[2]],
            [FIG1[2], FIG1[3], FIG1[0], FIG1[1]],
        ] {
            assert_eq!(canonical_unordered(&t), c);
        }
    }

    #[test]
    fn neighbors_of_rectangle_center() {
        let q = resonant_neighbors(&TorusSpec::square(), m(0, 2), LatticeBox::new(1)).unwrap();
        assert!(q.triples.contains(&[m(1, 1), m(-1, 1), m(0, 0)]));
        assert!(q.triples.contains(&[m(-1, 1), m(1, 1), m(0, 0)]));
        assert!(resonant_neighbors(&TorusSpec::square(), m(0, 2), LatticeBox::new(1))
            .unwrap()
            .triples
            .iter()
            .all(|t| LatticeBox::new(1).contains(t[0])));
    }

    #[test]
    fn irrational_neighbors_share_coordinates() {
        let k = Mode::ORIGIN;
        let q = resonant_neighbors(&TorusSpec::sqrt2(), k, LatticeBox::new(1)).unwrap();
        assert!(!q.triples.is_empty());
        for t in &q.triples {
            assert!(t.iter().any(|p| p.x == k.x));
            assert!(t.iter().any(|p| p.y == k.y));
        }
    }

    #[test]
    fn weak_set_examples() {
        let irr = TorusSpec::sqrt2();
        let w = weak_resonance_set(&irr, LatticeBox::new(0), LatticeBox::new(1), 1.0).unwrap();
        let t = [m(1, 0), m(-1, 0), m(0, 1), m(0, -1)];
        let found = w.iter().find(|r| r.modes == t).expect("crossing weak tuple present");
        assert!((found.weak_defect - (2.0 - 2.0 * 2f64.sqrt())).abs() < 1e-12);
        let sq = TorusSpec::square();
        let w = weak_resonance_set(&sq, LatticeBox::new(1), LatticeBox::new(3), 1.0).unwrap();
        assert!(!w.is_empty());
        assert!(w.iter().all(|r| r.weak_defect == 0.0));
        assert!(weak_resonance_set(&sq, LatticeBox::new(3), LatticeBox::new(3), 1.0).is_err());
    }

    #[test]
    fn small_divisor_examples() {
        let irr = TorusSpec::sqrt2();
        assert_eq!(small_divisor_constant(&irr, LatticeBox::new(0)), 1.0);
        let c1 = small_divisor_constant(&irr, LatticeBox::new(1));
        assert!((c1 - 1.0 / (2.0 * 2f64.sqrt() - 2.0)).abs() < 1e-12);
        let mut prev = c1;
        for n in 2..=4 {
            let c = small_divisor_constant(&irr, LatticeBox::new(n));
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn class_round_trips_through_strings() {
        for c in [
            ResonanceClass::Degenerate,
            ResonanceClass::Parallel,
            ResonanceClass::Nonparallel,
        ] {
            assert_eq!(c.as_str().parse::<ResonanceClass>().unwrap(), c);
        }
    }
}
