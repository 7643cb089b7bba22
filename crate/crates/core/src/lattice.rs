//! Torus specifications, the mode lattice, and finite Fourier fields.
//!
//! Everything else in the crate speaks in terms of these types: a
//! [`TorusSpec`] fixes the dispersion relation `λ_k = w1·k1² + w2·k2²`, a
//! [`LatticeBox`] is the ∞-norm box `Q_M = {k : max(|k1|,|k2|) ≤ M}`, and a
//! [`ModeField`] stores complex Fourier amplitudes densely over one box.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `|m_i|` tried when checking an irrational weight pair for integer relations.
pub const IRRATIONALITY_SEARCH_BOUND: i64 = 256;

/// Relative tolerance under which `w1·m1 + w2·m2` is treated as vanishing.
pub const IRRATIONALITY_TOLERANCE: f64 = 1e-12;

/// Rationality class of a torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rationality {
    /// Weights proportional to the coprime integer pair `(p, q)`.
    Rational { p: u32, q: u32 },
    /// No integer relation among the weights within [`IRRATIONALITY_SEARCH_BOUND`].
    Irrational,
}

/// The weight pair defining the dispersion relation, with its rationality class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusSpec {
    weights: (f64, f64),
    rationality: Rationality,
}

impl TorusSpec {
    /// Rational torus with weights exactly `(p, q)`.
    pub fn rational(p: u32, q: u32) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::InvalidTorus(format!(
                "rational weights must be positive, got ({p}, {q})"
            )));
        }
        if gcd(p as u64, q as u64) != 1 {
            return Err(Error::InvalidTorus(format!(
                "rational weights must be coprime, got ({p}, {q})"
            )));
        }
        Ok(Self {
            weights: (p as f64, q as f64),
            rationality: Rationality::Rational { p, q },
        })
    }

    /// The square torus, `λ_k = |k|²`.
    pub fn square() -> Self {
        Self::rational(1, 1).expect("(1,1) is a valid rational pair")
    }

    /// Irrational torus. Rejects non-positive weights and any pair with an
    /// integer relation `w1·m1 + w2·m2 ≈ 0` for `0 < max|m_i| ≤ IRRATIONALITY_SEARCH_BOUND`.
    pub fn irrational(w1: f64, w2: f64) -> Result<Self> {
        if !(w1.is_finite() && w2.is_finite() && w1 > 0.0 && w2 > 0.0) {
            return Err(Error::InvalidTorus(format!(
                "weights must be positive and finite, got ({w1}, {w2})"
            )));
        }
        if let Some((m1, m2)) = integer_relation(w1, w2, IRRATIONALITY_SEARCH_BOUND) {
            return Err(Error::InvalidTorus(format!(
                "weights ({w1}, {w2}) satisfy {w1}·{m1} + {w2}·{m2} ≈ 0; use a rational spec"
            )));
        }
        Ok(Self {
            weights: (w1, w2),
            rationality: Rationality::Irrational,
        })
    }

    /// `(1, √2)`, the irrational torus used throughout the examples and tests.
    pub fn sqrt2() -> Self {
        Self::irrational(1.0, std::f64::consts::SQRT_2).expect("(1, √2) is irrational")
    }

    pub fn weights(&self) -> (f64, f64) {
        self.weights
    }

    pub fn rationality(&self) -> Rationality {
        self.rationality
    }

    pub fn is_rational(&self) -> bool {
        matches!(self.rationality, Rationality::Rational { .. })
    }

    /// Exact resonance test on the per-coordinate squared-sum defects
    /// `A_i = Σ± (k^{(i)})²` of a momentum-conserving tuple.
    pub fn defects_resonant(&self, a1: i64, a2: i64) -> bool {
        match self.rationality {
            Rationality::Rational { p, q } => p as i64 * a1 + q as i64 * a2 == 0,
            Rationality::Irrational => a1 == 0 && a2 == 0,
        }
    }

    /// `w1·a1 + w2·a2`: the λ-defect expressed through the coordinate defects.
    pub fn combine_defects(&self, a1: i64, a2: i64) -> f64 {
        self.weights.0 * a1 as f64 + self.weights.1 * a2 as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Smallest-height integer pair with `w1·m1 + w2·m2 ≈ 0`, if one exists within `bound`.
fn integer_relation(w1: f64, w2: f64, bound: i64) -> Option<(i64, i64)> {
    // With both weights positive a relation needs opposite signs; take m1 > 0 > m2.
    for m1 in 1..=bound {
        let target = w1 * m1 as f64 / w2;
        let m2 = target.round() as i64;
        if m2 < 1 || m2 > bound {
            continue;
        }
        let residual = (w1 * m1 as f64 - w2 * m2 as f64).abs();
        let scale = w1 * m1 as f64 + w2 * m2 as f64;
        if residual <= IRRATIONALITY_TOLERANCE * scale {
            return Some((m1, -m2));
        }
    }
    None
}

/// A Fourier index `k = (k1, k2) ∈ Z²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Mode {
    pub x: i32,
    pub y: i32,
}

impl Mode {
    pub const ORIGIN: Mode = Mode { x: 0, y: 0 };

    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn sup_norm(self) -> u32 {
        self.x.unsigned_abs().max(self.y.unsigned_abs())
    }

    pub fn norm_sq(self) -> i64 {
        let (x, y) = (self.x as i64, self.y as i64);
        x * x + y * y
    }

    /// Coordinate `i ∈ {0, 1}`.
    pub fn coord(self, i: usize) -> i32 {
        match i {
            0 => self.x,
            1 => self.y,
            _ => panic!("a mode has two coordinates, asked for {i}"),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl From<(i32, i32)> for Mode {
    fn from((x, y): (i32, i32)) -> Self {
        Self { x, y }
    }
}

impl Add for Mode {
    type Output = Mode;
    fn add(self, o: Mode) -> Mode {
        Mode::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Mode {
    type Output = Mode;
    fn sub(self, o: Mode) -> Mode {
        Mode::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Mode {
    type Output = Mode;
    fn neg(self) -> Mode {
        Mode::new(-self.x, -self.y)
    }
}

/// The dispersion relation `λ_k = w1·k1² + w2·k2²`.
pub fn dispersion(spec: &TorusSpec, k: Mode) -> f64 {
    let (w1, w2) = spec.weights;
    let (x, y) = (k.x as f64, k.y as f64);
    w1 * x * x + w2 * y * y
}

/// The ∞-norm box `Q_M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LatticeBox {
    pub half_width: u32,
}

impl LatticeBox {
    pub const fn new(half_width: u32) -> Self {
        Self { half_width }
    }

    pub fn side(&self) -> usize {
        2 * self.half_width as usize + 1
    }

    /// Number of modes in the box.
    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: Mode) -> bool {
        k.sup_norm() <= self.half_width
    }

    pub fn contains_box(&self, other: &LatticeBox) -> bool {
        other.half_width <= self.half_width
    }

    /// Row-major index (first coordinate outer) of `k`, if it lies in the box.
    pub fn index(&self, k: Mode) -> Option<usize> {
        if !self.contains(k) {
            return None;
        }
        let m = self.half_width as i64;
        let side = self.side();
        Some((k.x as i64 + m) as usize * side + (k.y as i64 + m) as usize)
    }

    pub fn mode_at(&self, index: usize) -> Mode {
        let side = self.side();
        let m = self.half_width as i32;
        Mode::new((index / side) as i32 - m, (index % side) as i32 - m)
    }

    /// All modes in index order.
    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        (0..self.len()).map(move |i| self.mode_at(i))
    }
}

/// Complex Fourier amplitudes stored densely over a box; zero outside it.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeField {
    lattice: LatticeBox,
    values: Vec<Complex64>,
}

impl ModeField {
    pub fn zeros(lattice: LatticeBox) -> Self {
        Self {
            lattice,
            values: vec![Complex64::new(0.0, 0.0); lattice.len()],
        }
    }

    /// Field with the listed entries; later duplicates overwrite earlier ones.
    pub fn from_entries<I>(lattice: LatticeBox, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Mode, Complex64)>,
    {
        let mut field = Self::zeros(lattice);
        for (k, v) in entries {
            field.set(k, v)?;
        }
        Ok(field)
    }

    /// Wraps a value vector laid out in the box's index order.
    pub fn from_values(lattice: LatticeBox, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::InvalidConfig(format!(
                "expected {} values for a box of half-width {}, got {}",
                lattice.len(),
                lattice.half_width,
                values.len()
            )));
        }
        Ok(Self { lattice, values })
    }

    pub fn lattice(&self) -> LatticeBox {
        self.lattice
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, k: Mode) -> Complex64 {
        self.lattice
            .index(k)
            .map_or(Complex64::new(0.0, 0.0), |i| self.values[i])
    }

    pub fn set(&mut self, k: Mode, v: Complex64) -> Result<()> {
        let i = self.lattice.index(k).ok_or(Error::SupportViolation {
            mode: k,
            half_width: self.lattice.half_width,
        })?;
        self.values[i] = v;
        Ok(())
    }

    /// Nonzero entries in index order.
    pub fn nonzero(&self) -> impl Iterator<Item = (Mode, Complex64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != Complex64::new(0.0, 0.0))
            .map(|(i, v)| (self.lattice.mode_at(i), *v))
    }

    /// `Σ |v_k|²`.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    /// `Σ k |v_k|²`.
    pub fn momentum(&self) -> [f64; 2] {
        let mut p = [0.0; 2];
        for (i, v) in self.values.iter().enumerate() {
            let k = self.lattice.mode_at(i);
            let w = v.norm_sqr();
            p[0] += k.x as f64 * w;
            p[1] += k.y as f64 * w;
        }
        p
    }

    /// `max |v_k|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest modulus among modes outside `inner`.
    pub fn max_abs_outside(&self, inner: &LatticeBox) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| !inner.contains(self.lattice.mode_at(*i)))
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }

    /// Copy of this field stored over `lattice`; modes outside it are dropped.
    pub fn rebox(&self, lattice: LatticeBox) -> ModeField {
        let mut out = ModeField::zeros(lattice);
        for (i, v) in self.values.iter().enumerate() {
            if let Some(j) = lattice.index(self.lattice.mode_at(i)) {
                out.values[j] = *v;
            }
        }
        out
    }

    /// Like [`rebox`](Self::rebox) but refuses to drop nonzero modes.
    pub fn fit_to(&self, lattice: LatticeBox) -> Result<ModeField> {
        if let Some((k, _)) = self.nonzero().find(|(k, _)| !lattice.contains(*k)) {
            return Err(Error::SupportViolation {
                mode: k,
                half_width: lattice.half_width,
            });
        }
        Ok(self.rebox(lattice))
    }

    /// Whether every nonzero mode lies inside `inner`.
    pub fn supported_in(&self, inner: &LatticeBox) -> bool {
        self.nonzero().all(|(k, _)| inner.contains(k))
    }

    pub fn scaled(&self, c: f64) -> ModeField {
        ModeField {
            lattice: self.lattice,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// `self − other`, both over the same box.
    pub fn difference(&self, other: &ModeField) -> Result<ModeField> {
        if self.lattice != other.lattice {
            return Err(Error::InvalidConfig(format!(
                "box mismatch: {} vs {}",
                self.lattice.half_width, other.lattice.half_width
            )));
        }
        Ok(ModeField {
            lattice: self.lattice,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    /// Plain-text table of nonzero modes, one `k1 k2 re im` row each.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.nonzero() {
            out.push_str(&format!("{} {} {:.16e} {:.16e}\n", k.x, k.y, v.re, v.im));
        }
        out
    }

    /// Parses a `k1 k2 re im` table; blank lines and `#` comments are skipped.
    pub fn from_table(lattice: LatticeBox, text: &str) -> Result<Self> {
        let mut field = Self::zeros(lattice);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 4 {
                return Err(Error::Parse(format!(
                    "line {}: expected 4 columns, found {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let bad = |what: &str| Error::Parse(format!("line {}: bad {what}", lineno + 1));
            let k1: i32 = cols[0].parse().map_err(|_| bad("k1"))?;
            let k2: i32 = cols[1].parse().map_err(|_| bad("k2"))?;
            let re: f64 = cols[2].parse().map_err(|_| bad("real part"))?;
            let im: f64 = cols[3].parse().map_err(|_| bad("imaginary part"))?;
            field.set(Mode::new(k1, k2), Complex64::new(re, im))?;
        }
        Ok(field)
    }

    pub fn to_document(&self) -> ModeFieldDocument {
        ModeFieldDocument {
            box_half_width: self.lattice.half_width,
            entries: self.nonzero().map(|(k, v)| (k.x, k.y, v.re, v.im)).collect(),
        }
    }

    pub fn from_document(doc: &ModeFieldDocument) -> Result<Self> {
        Self::from_entries(
            LatticeBox::new(doc.box_half_width),
            doc.entries
                .iter()
                .map(|&(x, y, re, im)| (Mode::new(x, y), Complex64::new(re, im))),
        )
    }
}

/// Structured form of a [`ModeField`]: `{box_half_width, entries: [[k1,k2,re,im], …]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeFieldDocument {
    pub box_half_width: u32,
    pub entries: Vec<(i32, i32, f64, f64)>,
}

/// `√(Σ_k |v_k|² (1+|k|²)^s)`.
pub fn sobolev_norm(field: &ModeField, s: f64) -> f64 {
    let lattice = field.lattice();
    field
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let k = lattice.mode_at(i);
            v.norm_sqr() * (1.0 + k.norm_sq() as f64).powf(s)
        })
        .sum::<f64>()
        .sqrt()
}

/// Random field on `storage` supported in `support`, rescaled so `‖·‖_s = norm`.
///
/// Real and imaginary parts are drawn uniformly from `[−1, 1]` with a ChaCha8 stream.
pub fn random_field(storage: LatticeBox, support: LatticeBox, s: f64, norm: f64, seed: u64) -> ModeField {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut field = ModeField::zeros(storage);
    for (i, v) in field.values.iter_mut().enumerate() {
        if support.contains(storage.mode_at(i)) {
            *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    let current = sobolev_norm(&field, s);
    if current > 0.0 {
        field = field.scaled(norm / current);
    }
    field
}

/// Zeroes every mode outside `inner`.
pub fn restrict(field: &ModeField, inner: &LatticeBox) -> ModeField {
    mask(field, |k| inner.contains(k))
}

/// Zeroes every mode inside `inner`.
pub fn residual(field: &ModeField, inner: &LatticeBox) -> ModeField {
    mask(field, |k| !inner.contains(k))
}

fn mask(field: &ModeField, keep: impl Fn(Mode) -> bool) -> ModeField {
    let lattice = field.lattice();
    let values = field
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if keep(lattice.mode_at(i)) {
                *v
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    ModeField { lattice, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn dispersion_examples() {
        let square = TorusSpec::square();
        assert_eq!(dispersion(&square, Mode::new(1, 2)), 5.0);
        assert_eq!(dispersion(&square, Mode::ORIGIN), 0.0);
        let irr = TorusSpec::sqrt2();
        assert!((dispersion(&irr, Mode::new(0, 1)) - std::f64::consts::SQRT_2).abs() < 1e-8);
    }

    #[test]
    fn sobolev_examples() {
        let b = LatticeBox::new(2);
        let f = ModeField::from_entries(b, [(Mode::ORIGIN, c(1.0))]).unwrap();
        for s in [0.0, 0.5, 1.0, 3.0] {
            assert_eq!(sobolev_norm(&f, s), 1.0);
        }
        let f = ModeField::from_entries(b, [(Mode::new(1, 0), c(1.0))]).unwrap();
        assert!((sobolev_norm(&f, 1.0) - 2f64.sqrt()).abs() < 1e-15);
        let f = ModeField::from_entries(b, [(Mode::new(1, 0), c(1.0)), (Mode::new(0, 1), c(1.0))]).unwrap();
        assert!((sobolev_norm(&f, 2.0) - 8f64.sqrt()).abs() < 1e-14);
        assert!((sobolev_norm(&f, 0.0) - f.mass().sqrt()).abs() < 1e-15);
    }

    #[test]
    fn restrict_and_residual_examples() {
        let storage = LatticeBox::new(3);
        let q1 = LatticeBox::new(1);
        let inner = ModeField::from_entries(
            storage,
            [(Mode::new(1, -1), c(2.0)), (Mode::new(0, 1), Complex64::new(0.0, 1.0))],
        )
        .unwrap();
        assert_eq!(restrict(&inner, &LatticeBox::new(2)), inner);
        assert_eq!(residual(&inner, &q1), ModeField::zeros(storage));

        let f = ModeField::from_entries(storage, [(Mode::ORIGIN, c(1.0)), (Mode::new(3, 0), c(1.0))]).unwrap();
        let r = restrict(&f, &q1);
        assert_eq!(r.nonzero().collect::<Vec<_>>(), vec![(Mode::ORIGIN, c(1.0))]);
    }

    #[test]
    fn torus_validation() {
        assert!(TorusSpec::rational(2, 4).is_err());
        assert!(TorusSpec::rational(0, 1).is_err());
        assert!(TorusSpec::rational(1, 2).is_ok());
        assert!(TorusSpec::irrational(1.0, 1.5).is_err());
        assert!(TorusSpec::irrational(2.0, 2.0).is_err());
        assert!(TorusSpec::irrational(-1.0, 2f64.sqrt()).is_err());
        assert!(TorusSpec::irrational(1.0, std::f64::consts::PI).is_ok());
        let r = TorusSpec::rational(1, 2).unwrap();
        assert_eq!(r.weights(), (1.0, 2.0));
    }

    #[test]
    fn box_indexing_roundtrip() {
        let b = LatticeBox::new(3);
        for (i, k) in b.modes().enumerate() {
            assert_eq!(b.index(k), Some(i));
        }
        assert_eq!(b.index(Mode::new(4, 0)), None);
    }

    #[test]
    fn table_and_document_roundtrip() {
        let b = LatticeBox::new(2);
        let f = ModeField::from_entries(
            b,
            [
                (Mode::new(-2, 1), Complex64::new(0.1, -0.3)),
                (Mode::new(0, 0), Complex64::new(1.0 / 3.0, 2.0f64.sqrt())),
            ],
        )
        .unwrap();
        assert_eq!(ModeField::from_table(b, &f.to_table()).unwrap(), f);
        let json = serde_json::to_string(&f.to_document()).unwrap();
        assert!(json.contains("box_half_width"));
        let doc: ModeFieldDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(ModeField::from_document(&doc).unwrap(), f);
        assert!(ModeField::from_table(b, "1 2 3").is_err());
        assert!(ModeField::from_table(b, "5 0 1 0").is_err());
    }

    fn field_strategy(m: u32) -> impl Strategy<Value = ModeField> {
        let b = LatticeBox::new(m);
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), b.len()).prop_map(move |v| {
            ModeField::from_values(b, v.into_iter().map(|(a, c)| Complex64::new(a, c)).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn restrict_residual_split_norm(f in field_strategy(4), inner in 0u32..6, s in 0.0f64..3.0) {
            let b = LatticeBox::new(inner);
            let whole = sobolev_norm(&f, s).powi(2);
            let split = sobolev_norm(&restrict(&f, &b), s).powi(2) + sobolev_norm(&residual(&f, &b), s).powi(2);
            prop_assert!((whole - split).abs() <= 1e-12 * whole.max(1e-300));
        }

        #[test]
        fn dispersion_is_additive(w1 in 0.1f64..5.0, w2 in 0.1f64..5.0, x in -50i32..50, y in -50i32..50) {
            let k = Mode::new(x, y);
            let Ok(spec) = TorusSpec::irrational(w1, w2) else { return Ok(()); };
            let e1 = dispersion(&TorusSpec::rational(1, 1).unwrap(), Mode::new(x, 0));
            let e2 = dispersion(&TorusSpec::rational(1, 1).unwrap(), Mode::new(0, y));
            let d = dispersion(&spec, k);
            prop_assert!((d - (w1 * e1 + w2 * e2)).abs() <= 1e-12 * d.max(1.0));
        }

        #[test]
        fn boxes_are_nested(m in 0u32..20, extra in 0u32..20, x in -40i32..40, y in -40i32..40) {
            let k = Mode::new(x, y);
            if LatticeBox::new(m).contains(k) {
                prop_assert!(LatticeBox::new(m + extra).contains(k));
            }
        }
    }
}
