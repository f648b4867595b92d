//! Sparse exact linear algebra over the rationals.
//!
//! Everything downstream reduces to four primitives: rank, kernel/image,
//! solving `M x = b`, and membership of a vector in a subspace.  All of them
//! run through one deterministic sparse elimination ([`ColumnReduction`]) that
//! prefers unit pivots so that coefficients stay small on the bar-type
//! matrices this crate produces.

use num::BigRational;
use num::{One, Signed, Zero};
use std::collections::HashMap;
use thiserror::Error;

/// Scalar type: arbitrary-precision rational, always reduced, denominator > 0.
pub type Rat = BigRational;

/// Sparse vector: index/value pairs, sorted by index, no explicit zeros.
pub type SparseVec = Vec<(usize, Rat)>;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}

/// `v += c * w`, keeping `v` sorted and free of zeros.
pub fn add_scaled(v: &mut SparseVec, c: &Rat, w: &SparseVec) {
    if c.is_zero() || w.is_empty() {
        return;
    }
    let mut out: SparseVec = Vec::with_capacity(v.len() + w.len());
    let (mut i, mut j) = (0, 0);
    while i < v.len() || j < w.len() {
        if j >= w.len() || (i < v.len() && v[i].0 < w[j].0) {
            out.push(v[i].clone());
            i += 1;
        } else if i >= v.len() || w[j].0 < v[i].0 {
            out.push((w[j].0, c * &w[j].1));
            j += 1;
        } else {
            let val = &v[i].1 + c * &w[j].1;
            if !val.is_zero() {
                out.push((v[i].0, val));
            }
            i += 1;
            j += 1;
        }
    }
    *v = out;
}

pub fn scale_vec(v: &mut SparseVec, c: &Rat) {
    if c.is_zero() {
        v.clear();
    } else {
        for (_, x) in v.iter_mut() {
            *x *= c;
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("image of the source subspace does not land in the target subspace")]
    NotContained,
}

/// Sparse rational matrix, column-major.  Rows and columns are 0-indexed;
/// the matrix of a degree-raising differential has `rows = dim C^{n+1}`,
/// `cols = dim C^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMat {
    rows: usize,
    cols: usize,
    data: Vec<SparseVec>,
}

impl SparseMat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        SparseMat {
            rows,
            cols,
            data: vec![Vec::new(); cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SparseMat::zero(n, n);
        for i in 0..n {
            m.data[i].push((i, Rat::one()));
        }
        m
    }

    pub fn from_triplets(rows: usize, cols: usize, trips: &[(usize, usize, Rat)]) -> Self {
        let mut m = SparseMat::zero(rows, cols);
        for (r, c, v) in trips {
            m.add_entry(*r, *c, v.clone());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn add_entry(&mut self, r: usize, c: usize, v: Rat) {
        assert!(r < self.rows && c < self.cols, "entry out of bounds");
        if v.is_zero() {
            return;
        }
        let col = &mut self.data[c];
        match col.binary_search_by_key(&r, |e| e.0) {
            Ok(i) => {
                let nv = &col[i].1 + v;
                if nv.is_zero() {
                    col.remove(i);
                } else {
                    col[i].1 = nv;
                }
            }
            Err(i) => col.insert(i, (r, v)),
        }
    }

    pub fn get(&self, r: usize, c: usize) -> Rat {
        match self.data[c].binary_search_by_key(&r, |e| e.0) {
            Ok(i) => self.data[c][i].1.clone(),
            Err(_) => Rat::zero(),
        }
    }

    pub fn col(&self, c: usize) -> &SparseVec {
        &self.data[c]
    }

    pub fn set_col(&mut self, c: usize, v: SparseVec) {
        debug_assert!(v.iter().all(|(r, x)| *r < self.rows && !x.is_zero()));
        self.data[c] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| c.is_empty())
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().map(|c| c.len()).sum()
    }

    pub fn apply(&self, v: &SparseVec) -> SparseVec {
        let mut out: SparseVec = Vec::new();
        for (i, x) in v {
            assert!(*i < self.cols, "vector index out of bounds");
            add_scaled(&mut out, x, &self.data[*i]);
        }
        out
    }

    pub fn matmul(&self, other: &SparseMat) -> SparseMat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut m = SparseMat::zero(self.rows, other.cols);
        for c in 0..other.cols {
            m.data[c] = self.apply(&other.data[c]);
        }
        m
    }

    pub fn add(&self, other: &SparseMat) -> SparseMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut m = self.clone();
        for c in 0..self.cols {
            let col = m.data[c].clone();
            let mut col = col;
            add_scaled(&mut col, &Rat::one(), &other.data[c]);
            m.data[c] = col;
        }
        m
    }

    pub fn scaled(&self, c: &Rat) -> SparseMat {
        let mut m = self.clone();
        for col in m.data.iter_mut() {
            scale_vec(col, c);
            col.retain(|(_, v)| !v.is_zero());
        }
        m
    }

    pub fn negated(&self) -> SparseMat {
        self.scaled(&-Rat::one())
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hcat(&self, other: &SparseMat) -> SparseMat {
        assert_eq!(self.rows, other.rows, "hcat row mismatch");
        let mut m = SparseMat::zero(self.rows, self.cols + other.cols);
        for c in 0..self.cols {
            m.data[c] = self.data[c].clone();
        }
        for c in 0..other.cols {
            m.data[self.cols + c] = other.data[c].clone();
        }
        m
    }

    /// Restriction to a subset of columns, in the given order.
    pub fn select_cols(&self, cols: &[usize]) -> SparseMat {
        let mut m = SparseMat::zero(self.rows, cols.len());
        for (k, &c) in cols.iter().enumerate() {
            m.data[k] = self.data[c].clone();
        }
        m
    }

    pub fn transpose(&self) -> SparseMat {
        let mut m = SparseMat::zero(self.cols, self.rows);
        for c in 0..self.cols {
            for (r, v) in &self.data[c] {
                m.data[*r].push((c, v.clone()));
            }
        }
        for col in m.data.iter_mut() {
            col.sort_by_key(|e| e.0);
        }
        m
    }
}

/// Result of a deterministic column-echelon reduction.
///
/// `pivots[k] = (row, original column)` for the k-th accepted pivot;
/// `reduced[k]` is the corresponding reduced column, and `combo[k]` expresses
/// it as a combination of original columns.  Columns that vanished contribute
/// their combination to `kernel`.
pub struct ColumnReduction {
    pub rank: usize,
    pub pivots: Vec<(usize, usize)>,
    reduced: Vec<SparseVec>,
    combo: Vec<SparseVec>,
    pub kernel: Vec<SparseVec>,
    pivot_by_row: HashMap<usize, usize>,
}

impl ColumnReduction {
    /// Reduce an extra vector against the fixed pivot columns.
    /// Returns the residual and the pivot coefficients used, so that
    /// `b = residual + sum_k coeff[k] * reduced[k]`.
    pub fn reduce_vector(&self, b: &SparseVec) -> (SparseVec, Vec<(usize, Rat)>) {
        let mut v = b.clone();
        let mut coeffs: Vec<(usize, Rat)> = Vec::new();
        loop {
            let mut hit: Option<(usize, usize)> = None;
            for (r, _) in &v {
                if let Some(&k) = self.pivot_by_row.get(r) {
                    hit = Some((*r, k));
                    break;
                }
            }
            match hit {
                None => break,
                Some((r, k)) => {
                    let val = v
                        .iter()
                        .find(|(rr, _)| *rr == r)
                        .map(|(_, x)| x.clone())
                        .unwrap();
                    let pv = self.reduced[k]
                        .iter()
                        .find(|(rr, _)| *rr == r)
                        .map(|(_, x)| x.clone())
                        .unwrap();
                    let c = -(&val / &pv);
                    add_scaled(&mut v, &c, &self.reduced[k]);
                    coeffs.push((k, -c));
                }
            }
        }
        (v, coeffs)
    }

    /// Does `b` lie in the column space?
    pub fn contains(&self, b: &SparseVec) -> bool {
        self.reduce_vector(b).0.is_empty()
    }

    /// Solve `M x = b` for the reduced matrix `M` (x in original column
    /// coordinates), or `None` if inconsistent.
    pub fn solve(&self, b: &SparseVec) -> Option<SparseVec> {
        let (res, coeffs) = self.reduce_vector(b);
        if !res.is_empty() {
            return None;
        }
        let mut x: SparseVec = Vec::new();
        for (k, c) in coeffs {
            add_scaled(&mut x, &c, &self.combo[k]);
        }
        Some(x)
    }
}

/// Pivot preference: unit entries first, then small numerator/denominator,
/// then lowest row.  Keeps growth of coefficients tame without full
/// fraction-free bookkeeping.
fn pivot_score(v: &Rat) -> u64 {
    let n = v.numer().abs();
    let d = v.denom().clone();
    if n.is_one() && d.is_one() {
        0
    } else {
        (n.bits() + d.bits()) as u64
    }
}

/// Deterministic column-echelon reduction of `m`.  `with_combos` additionally
/// tracks how each pivot/kernel column is expressed in the original columns
/// (needed for `solve` and kernels; skip for plain rank).
pub fn column_reduce(m: &SparseMat, with_combos: bool) -> ColumnReduction {
    let mut red = ColumnReduction {
        rank: 0,
        pivots: Vec::new(),
        reduced: Vec::new(),
        combo: Vec::new(),
        kernel: Vec::new(),
        pivot_by_row: HashMap::new(),
    };
    for j in 0..m.cols() {
        let mut v = m.col(j).clone();
        let mut combo: SparseVec = if with_combos {
            vec![(j, Rat::one())]
        } else {
            Vec::new()
        };
        // Eliminate existing pivot rows.
        loop {
            let mut hit: Option<(usize, usize)> = None;
            for (r, _) in &v {
                if let Some(&k) = red.pivot_by_row.get(r) {
                    hit = Some((*r, k));
                    break;
                }
            }
            match hit {
                None => break,
                Some((r, k)) => {
                    let val = v.iter().find(|(rr, _)| *rr == r).unwrap().1.clone();
                    let pv = red.reduced[k]
                        .iter()
                        .find(|(rr, _)| *rr == r)
                        .unwrap()
                        .1
                        .clone();
                    let c = -(&val / &pv);
                    add_scaled(&mut v, &c, &red.reduced[k]);
                    if with_combos {
                        add_scaled(&mut combo, &c, &red.combo[k]);
                    }
                }
            }
        }
        if v.is_empty() {
            if with_combos {
                red.kernel.push(combo);
            }
            continue;
        }
        // Accept a new pivot.
        let (prow, _) = v
            .iter()
            .map(|(r, x)| (*r, pivot_score(x)))
            .min_by_key(|&(r, s)| (s, r))
            .map(|(r, _)| (r, ()))
            .unwrap();
        let k = red.reduced.len();
        red.pivot_by_row.insert(prow, k);
        red.pivots.push((prow, j));
        red.reduced.push(v);
        red.combo.push(combo);
        red.rank += 1;
    }
    red
}

pub fn rank(m: &SparseMat) -> usize {
    column_reduce(m, false).rank
}

/// Kernel and image of a matrix, as subspaces of source and target.
pub fn kernel_image(m: &SparseMat) -> (Subspace, Subspace) {
    let red = column_reduce(m, true);
    let kernel = Subspace::span(m.cols(), red.kernel.clone());
    let image = Subspace::span(m.rows(), red.reduced.clone());
    (kernel, image)
}

/// Subspace of `Q^ambient`, stored as an echelonized basis.
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<SparseVec>,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn zero_space(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn full(ambient: usize) -> Self {
        let basis = (0..ambient).map(|i| vec![(i, Rat::one())]).collect();
        Subspace {
            ambient,
            basis,
            pivots: (0..ambient).collect(),
        }
    }

    pub fn span(ambient: usize, vecs: Vec<SparseVec>) -> Self {
        let mut s = Subspace::zero_space(ambient);
        for v in vecs {
            s.insert(v);
        }
        s
    }

    /// Coordinate subspace spanned by the given standard basis vectors.
    pub fn coordinate(ambient: usize, indices: &[usize]) -> Self {
        Subspace::span(
            ambient,
            indices.iter().map(|&i| vec![(i, Rat::one())]).collect(),
        )
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[SparseVec] {
        &self.basis
    }

    /// Reduce `v` against the basis; the residual is zero iff `v` is a member.
    pub fn residual(&self, v: &SparseVec) -> SparseVec {
        let mut v = v.clone();
        for (k, b) in self.basis.iter().enumerate() {
            let p = self.pivots[k];
            if let Ok(i) = v.binary_search_by_key(&p, |e| e.0) {
                let pv = b.iter().find(|(r, _)| *r == p).unwrap().1.clone();
                let c = -(&v[i].1 / &pv);
                add_scaled(&mut v, &c, b);
            }
        }
        v
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.residual(v).is_empty()
    }

    pub fn contains_space(&self, other: &Subspace) -> bool {
        other.basis.iter().all(|v| self.contains(v))
    }

    /// Insert a vector; returns true if it enlarged the space.
    pub fn insert(&mut self, v: SparseVec) -> bool {
        debug_assert!(v.iter().all(|(i, _)| *i < self.ambient));
        let r = self.residual(&v);
        if r.is_empty() {
            return false;
        }
        let (prow, _) = r
            .iter()
            .map(|(i, x)| (*i, pivot_score(x)))
            .min_by_key(|&(i, s)| (s, i))
            .unwrap_or((r[0].0, 0));
        self.basis.push(r);
        self.pivots.push(prow);
        true
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        assert_eq!(self.ambient, other.ambient, "subspace sum ambient mismatch");
        let mut s = self.clone();
        for v in &other.basis {
            s.insert(v.clone());
        }
        s
    }

    /// Intersection, via kernel of `[B_self | -B_other]`.
    pub fn intersect(&self, other: &Subspace) -> Subspace {
        assert_eq!(self.ambient, other.ambient);
        let n1 = self.dim();
        let mut m = SparseMat::zero(self.ambient, n1 + other.dim());
        for (k, b) in self.basis.iter().enumerate() {
            m.set_col(k, b.clone());
        }
        for (k, b) in other.basis.iter().enumerate() {
            let mut nb = b.clone();
            scale_vec(&mut nb, &-Rat::one());
            m.set_col(n1 + k, nb);
        }
        let red = column_reduce(&m, true);
        let mut vecs = Vec::new();
        for kv in &red.kernel {
            let mut v: SparseVec = Vec::new();
            for (i, c) in kv {
                if *i < n1 {
                    add_scaled(&mut v, c, &self.basis[*i]);
                }
            }
            if !v.is_empty() {
                vecs.push(v);
            }
        }
        Subspace::span(self.ambient, vecs)
    }

    /// Image of this subspace under `m`.
    pub fn image_under(&self, m: &SparseMat) -> Result<Subspace, LinalgError> {
        if m.cols() != self.ambient {
            return Err(LinalgError::DimMismatch {
                context: "image_under",
                expected: self.ambient,
                got: m.cols(),
            });
        }
        Ok(Subspace::span(
            m.rows(),
            self.basis.iter().map(|b| m.apply(b)).collect(),
        ))
    }

    /// Preimage `{ v : m v in self }`, via the kernel of `[m | -B]`.
    pub fn preimage_under(&self, m: &SparseMat) -> Result<Subspace, LinalgError> {
        if m.rows() != self.ambient {
            return Err(LinalgError::DimMismatch {
                context: "preimage_under",
                expected: self.ambient,
                got: m.rows(),
            });
        }
        let n1 = m.cols();
        let mut big = SparseMat::zero(self.ambient, n1 + self.dim());
        for c in 0..n1 {
            big.set_col(c, m.col(c).clone());
        }
        for (k, b) in self.basis.iter().enumerate() {
            let mut nb = b.clone();
            scale_vec(&mut nb, &-Rat::one());
            big.set_col(n1 + k, nb);
        }
        let red = column_reduce(&big, true);
        let mut vecs = Vec::new();
        for kv in &red.kernel {
            let v: SparseVec = kv.iter().filter(|(i, _)| *i < n1).cloned().collect();
            if !v.is_empty() {
                vecs.push(v);
            }
        }
        Ok(Subspace::span(n1, vecs))
    }

    /// Dimension of `(self + other) / other`.
    pub fn dim_mod(&self, other: &Subspace) -> usize {
        self.sum(other).dim() - other.dim()
    }
}

/// Dimension of the image of `f(source_sub)` inside `target_sub / target_quot`.
///
/// Preconditions: `f(source_sub) ⊆ target_sub` and `target_quot ⊆ target_sub`;
/// violations are reported as errors rather than silently truncated.
pub fn induced_image_dim(
    f: &SparseMat,
    source_sub: &Subspace,
    target_sub: &Subspace,
    target_quot: &Subspace,
) -> Result<usize, LinalgError> {
    if target_sub.ambient_dim() != f.rows() {
        return Err(LinalgError::DimMismatch {
            context: "induced_image_dim target",
            expected: f.rows(),
            got: target_sub.ambient_dim(),
        });
    }
    if target_quot.ambient_dim() != f.rows() {
        return Err(LinalgError::DimMismatch {
            context: "induced_image_dim quotient",
            expected: f.rows(),
            got: target_quot.ambient_dim(),
        });
    }
    let img = source_sub.image_under(f)?;
    if !target_sub.contains_space(&img) || !target_sub.contains_space(target_quot) {
        return Err(LinalgError::NotContained);
    }
    Ok(img.dim_mod(target_quot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: usize, cols: usize, entries: &[(usize, usize, i64)]) -> SparseMat {
        SparseMat::from_triplets(
            rows,
            cols,
            &entries
                .iter()
                .map(|&(r, c, v)| (r, c, rat(v)))
                .collect::<Vec<_>>(),
        )
    }

    #[test]
    fn rank_of_tall_matrix() {
        // Columns (1,0,1) and (1,1,0) are independent.
        let m = mat(3, 2, &[(0, 0, 1), (2, 0, 1), (0, 1, 1), (1, 1, 1)]);
        assert_eq!(rank(&m), 2);
    }

    #[test]
    fn kernel_of_rank_one_square() {
        let m = mat(2, 2, &[(0, 0, 1), (0, 1, 1), (1, 0, 1), (1, 1, 1)]);
        let (ker, img) = kernel_image(&m);
        assert_eq!(ker.dim(), 1);
        assert_eq!(img.dim(), 1);
        // Kernel spanned by (1, -1).
        assert!(ker.contains(&vec![(0, rat(1)), (1, rat(-1))]));
    }

    #[test]
    fn solve_roundtrip() {
        let m = mat(3, 3, &[(0, 0, 2), (1, 1, 3), (2, 0, 1), (2, 2, 5)]);
        let red = column_reduce(&m, true);
        let b = vec![(0, rat(4)), (2, rat(7))];
        let x = red.solve(&b).expect("consistent system");
        assert_eq!(m.apply(&x), b);
        // Inconsistent target: nothing maps onto row 1 alone with these columns
        // unless the coefficient pattern matches.
        let bad = vec![(0, rat(1)), (1, rat(1)), (2, rat(1_000_000))];
        if let Some(x) = red.solve(&bad) {
            assert_eq!(m.apply(&x), bad);
        }
    }

    #[test]
    fn induced_image_dim_quotient() {
        // f maps e0 -> e0, e1 -> e0 in a 2-dim target; source = span(e0,e1),
        // target_sub = full, quot = span(e0) kills everything.
        let f = mat(2, 2, &[(0, 0, 1), (0, 1, 1)]);
        let src = Subspace::full(2);
        let tgt = Subspace::full(2);
        let quot = Subspace::coordinate(2, &[0]);
        assert_eq!(induced_image_dim(&f, &src, &tgt, &quot).unwrap(), 0);
        let quot2 = Subspace::zero_space(2);
        assert_eq!(induced_image_dim(&f, &src, &tgt, &quot2).unwrap(), 1);
    }

    #[test]
    fn induced_image_dim_mismatch() {
        let f = mat(2, 2, &[(0, 0, 1)]);
        let src = Subspace::full(2);
        let tgt = Subspace::full(3);
        let quot = Subspace::zero_space(3);
        assert!(matches!(
            induced_image_dim(&f, &src, &tgt, &quot),
            Err(LinalgError::DimMismatch { .. })
        ));
    }

    #[test]
    fn intersect_and_sum() {
        let a = Subspace::span(3, vec![vec![(0, rat(1)), (1, rat(1))], vec![(2, rat(1))]]);
        let b = Subspace::span(3, vec![vec![(0, rat(1)), (1, rat(1)), (2, rat(2))]]);
        let i = a.intersect(&b);
        assert_eq!(i.dim(), 1);
        assert!(a.contains_space(&i) && b.contains_space(&i));
        assert_eq!(a.sum(&b).dim(), 2);
    }

    #[test]
    fn preimage() {
        // m: Q^2 -> Q^2, e0 -> e0, e1 -> 0; preimage of span(e1) is span(e1).
        let m = mat(2, 2, &[(0, 0, 1)]);
        let s = Subspace::coordinate(2, &[1]);
        let p = s.preimage_under(&m).unwrap();
        assert_eq!(p.dim(), 1);
        assert!(p.contains(&vec![(1, rat(1))]));
    }

    fn arb_matrix() -> impl Strategy<Value = SparseMat> {
        (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
            proptest::collection::vec(-3i64..4, r * c).prop_map(move |vals| {
                let mut m = SparseMat::zero(r, c);
                for (k, v) in vals.into_iter().enumerate() {
                    if v != 0 {
                        m.add_entry(k / c, k % c, rat(v));
                    }
                }
                m
            })
        })
    }

    proptest! {
        #[test]
        fn rank_nullity(m in arb_matrix()) {
            let (ker, img) = kernel_image(&m);
            prop_assert_eq!(ker.dim() + img.dim(), m.cols());
            prop_assert_eq!(img.dim(), rank(&m));
            // Every kernel basis vector maps to zero.
            for v in ker.basis() {
                prop_assert!(m.apply(v).is_empty());
            }
        }

        #[test]
        fn rank_transpose_invariant(m in arb_matrix()) {
            prop_assert_eq!(rank(&m), rank(&m.transpose()));
        }

        #[test]
        fn image_membership(m in arb_matrix()) {
            let red = column_reduce(&m, true);
            // Any column of m is solvable.
            for c in 0..m.cols() {
                let b = m.col(c).clone();
                let x = red.solve(&b);
                prop_assert!(x.is_some());
                prop_assert_eq!(m.apply(&x.unwrap()), b);
            }
        }
    }
}
