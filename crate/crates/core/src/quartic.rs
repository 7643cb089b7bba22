//! Separable index over momentum-conserving 4-tuples inside a storage box.
//!
//! Momentum conservation and the per-coordinate defects both split by
//! coordinate, so a tuple `(k1, k2, k3, k4)` in `Q_L` is a pair of coordinate
//! triples `(a1, a2, a3)` with `a4 = a1 + a2 − a3` in `[−L, L]`, one per axis.
//! Grouping the triples by `a4` makes every sum "over `k1 + k2 = k3 + k`"
//! a product loop over two short lists, and the λ-defect of the tuple is
//! `w1·A + w2·B` with `A`, `B` the integer defects of the two triples.
//!
//! Any coefficient that depends only on `(A, B, inside)` can therefore be
//! tabulated once and contracted against a field without enumerating tuples.

use num_complex::Complex64;

use crate::lattice::{LatticeBox, Mode};

/// One coordinate of a tuple: values `a1, a2, a3` and the implied `a4`.
#[derive(Clone, Copy, Debug)]
pub struct CoordTriple {
    pub values: [i32; 3],
    /// `a1² + a2² − a3² − a4²`.
    pub defect: i32,
    /// All four values lie in `[−N, N]`.
    pub inner: bool,
    row: [u32; 3],
    col: [u32; 3],
}

/// Coefficient tables indexed by `(A, B)` for tuples inside and crossing the inner box.
#[derive(Clone, Debug)]
pub struct CoefTable {
    span: i32,
    width: usize,
    inside: Vec<f64>,
    crossing: Vec<f64>,
}

impl CoefTable {
    pub fn get(&self, a: i32, b: i32, inside: bool) -> f64 {
        let i = self.slot(a, b);
        if inside {
            self.inside[i]
        } else {
            self.crossing[i]
        }
    }

    fn slot(&self, a: i32, b: i32) -> usize {
        (a + self.span) as usize * self.width + (b + self.span) as usize
    }

    /// Whether every coefficient is zero.
    pub fn is_zero(&self) -> bool {
        self.inside.iter().chain(&self.crossing).all(|c| *c == 0.0)
    }
}

/// Coordinate triples of a storage box grouped by their implied fourth value.
#[derive(Clone, Debug)]
pub struct QuarticIndex {
    storage: LatticeBox,
    inner: LatticeBox,
    by_last: Vec<Vec<CoordTriple>>,
    span: i32,
}

impl QuarticIndex {
    /// Index over tuples in `storage`; `inside` flags refer to `inner`.
    pub fn new(storage: LatticeBox, inner: LatticeBox) -> Self {
        let l = storage.half_width as i32;
        let n = inner.half_width as i32;
        let side = storage.side() as u32;
        let mut by_last = vec![Vec::new(); storage.side()];
        let mut span = 0;
        for a1 in -l..=l {
            for a2 in -l..=l {
                for a3 in -l..=l {
                    let a4 = a1 + a2 - a3;
                    if a4.abs() > l {
                        continue;
                    }
                    let defect = a1 * a1 + a2 * a2 - a3 * a3 - a4 * a4;
                    span = span.max(defect.abs());
                    let values = [a1, a2, a3];
                    let off = |a: i32| (a + l) as u32;
                    by_last[(a4 + l) as usize].push(CoordTriple {
                        values,
                        defect,
                        inner: values.iter().all(|v| v.abs() <= n) && a4.abs() <= n,
                        row: values.map(|a| off(a) * side),
                        col: values.map(off),
                    });
                }
            }
        }
        Self {
            storage,
            inner,
            by_last,
            span,
        }
    }

    pub fn storage(&self) -> LatticeBox {
        self.storage
    }

    pub fn inner(&self) -> LatticeBox {
        self.inner
    }

    /// Largest per-coordinate `|defect|` in the box.
    pub fn defect_span(&self) -> i32 {
        self.span
    }

    /// Coordinate triples with implied fourth value `a4`.
    pub fn triples_ending_at(&self, a4: i32) -> &[CoordTriple] {
        &self.by_last[(a4 + self.storage.half_width as i32) as usize]
    }

    /// Number of momentum-conserving ordered tuples in the storage box.
    pub fn tuple_count(&self) -> usize {
        let per_coord: usize = self.by_last.iter().map(Vec::len).sum();
        per_coord * per_coord
    }

    /// Tabulates `coef(A, B, inside)` over the defect range of this box.
    pub fn table(&self, coef: impl Fn(i32, i32, bool) -> f64) -> CoefTable {
        let span = self.span;
        let width = (2 * span + 1) as usize;
        let mut inside = vec![0.0; width * width];
        let mut crossing = vec![0.0; width * width];
        for a in -span..=span {
            for b in -span..=span {
                let i = (a + span) as usize * width + (b + span) as usize;
                inside[i] = coef(a, b, true);
                crossing[i] = coef(a, b, false);
            }
        }
        CoefTable {
            span,
            width,
            inside,
            crossing,
        }
    }

    /// Calls `f(tuple, A, B, inside)` for every momentum-conserving tuple in the box,
    /// ordered by the last mode in box-index order.
    pub fn for_each_tuple(&self, mut f: impl FnMut([Mode; 4], i32, i32, bool)) {
        for k in self.storage.modes() {
            self.for_each_ending_at(k, &mut f);
        }
    }

    /// Calls `f(tuple, A, B, inside)` for every tuple whose last mode is `k`.
    pub fn for_each_ending_at(&self, k: Mode, mut f: impl FnMut([Mode; 4], i32, i32, bool)) {
        if !self.storage.contains(k) {
            return;
        }
        for tx in self.triples_ending_at(k.x) {
            for ty in self.triples_ending_at(k.y) {
                let t = [
                    Mode::new(tx.values[0], ty.values[0]),
                    Mode::new(tx.values[1], ty.values[1]),
                    Mode::new(tx.values[2], ty.values[2]),
                    k,
                ];
                f(t, tx.defect, ty.defect, tx.inner && ty.inner);
            }
        }
    }

    /// Calls `f(indices, A, B, inside)` with the box indices of `(k1, k2, k3)`
    /// for every tuple whose last mode has box index `out`.
    pub fn for_each_index(&self, out: usize, mut f: impl FnMut([usize; 3], i32, i32, bool)) {
        let k = self.storage.mode_at(out);
        for tx in self.triples_ending_at(k.x) {
            for ty in self.triples_ending_at(k.y) {
                let idx = [
                    (tx.row[0] + ty.col[0]) as usize,
                    (tx.row[1] + ty.col[1]) as usize,
                    (tx.row[2] + ty.col[2]) as usize,
                ];
                f(idx, tx.defect, ty.defect, tx.inner && ty.inner);
            }
        }
    }

    /// `out_k = Σ_{k1+k2=k3+k} c(A, B, inside) · z_{k1} z_{k2} conj(z_{k3})` for every `k` in the box.
    ///
    /// `z` is laid out in the storage box's index order.
    pub fn contract(&self, z: &[Complex64], table: &CoefTable) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); z.len()];
        self.contract_into(z, table, &mut out);
        out
    }

    pub fn contract_into(&self, z: &[Complex64], table: &CoefTable, out: &mut [Complex64]) {
        assert_eq!(z.len(), self.storage.len(), "field does not match the storage box");
        assert_eq!(table.span, self.span, "table built for a different box");
        let side = self.storage.side();
        let w = table.width;
        for (kx, xs) in self.by_last.iter().enumerate() {
            for (ky, ys) in self.by_last.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for tx in xs {
                    let base = (tx.defect + table.span) as usize * w + table.span as usize;
                    let (rows, inner_x) = (tx.row, tx.inner);
                    for ty in ys {
                        let z1 = z[(rows[0] + ty.col[0]) as usize];
                        let z2 = z[(rows[1] + ty.col[1]) as usize];
                        let z3 = z[(rows[2] + ty.col[2]) as usize];
                        let slot = (base as i64 + ty.defect as i64) as usize;
                        let c = if inner_x && ty.inner {
                            table.inside[slot]
                        } else {
                            table.crossing[slot]
                        };
                        acc += z1 * z2 * z3.conj() * c;
                    }
                }
                out[kx * side + ky] = acc;
            }
        }
    }
}
