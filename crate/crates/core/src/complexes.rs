//! Graded and filtered cochain complexes.
//!
//! Conventions, used consistently by every constructor in this crate:
//! the differential raises degree by one; the shift `C[1]^k = C^{k+1}` carries
//! `d_{C[1]} = -d_C`; the cone of `f: C1 -> C2` is `C1[1] ⊕ C2` with the
//! block-lower-triangular differential `(x, y) |-> (-d1 x, f x + d2 y)`.
//!
//! Filtrations are increasing, indexed by non-negative integers, closed under
//! the differential, and exhaust the complex at `p_max`.  A filtered complex
//! is stored through a *filtration-adapted basis*: every basis vector carries
//! a level, and `F^p` is the span of the vectors of level `<= p`.  All
//! constructors produce such bases, which turns `F^p`-computations into column
//! selections.

use crate::linalg::{column_reduce, kernel_image, rank, Rat, SparseMat, SparseVec, Subspace};
use num::{One, Zero};
use std::collections::{BTreeMap, HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComplexError {
    #[error("d∘d ≠ 0 starting in degree {degree} (entry at row {row}, column {col})")]
    DifferentialSquare { degree: i64, row: usize, col: usize },
    #[error("shape mismatch in degree {degree}: {context}")]
    ShapeMismatch { degree: i64, context: String },
    #[error("differential does not preserve the filtration in degree {degree}, column {col}")]
    FiltrationNotPreserved { degree: i64, col: usize },
    #[error("map is not a chain map in degree {degree}")]
    NotChainMap { degree: i64 },
    #[error("map does not preserve the filtration in degree {degree}, column {col}")]
    MapNotFiltered { degree: i64, col: usize },
    #[error("auxiliary weight not preserved by differential in degree {degree}, column {col}")]
    WeightNotPreserved { degree: i64, col: usize },
}

/// Finite-dimensional cochain complex over Q.
#[derive(Debug, Clone)]
pub struct GradedComplex {
    dims: BTreeMap<i64, usize>,
    diff: BTreeMap<i64, SparseMat>,
}

impl GradedComplex {
    /// Build and validate: shapes line up and d∘d = 0.
    pub fn new(
        dims: BTreeMap<i64, usize>,
        diff: BTreeMap<i64, SparseMat>,
    ) -> Result<Self, ComplexError> {
        let dims: BTreeMap<i64, usize> = dims.into_iter().filter(|(_, d)| *d > 0).collect();
        let mut clean: BTreeMap<i64, SparseMat> = BTreeMap::new();
        for (n, m) in diff.into_iter() {
            let sc = dims.get(&n).copied().unwrap_or(0);
            let tc = dims.get(&(n + 1)).copied().unwrap_or(0);
            if m.cols() != sc || m.rows() != tc {
                return Err(ComplexError::ShapeMismatch {
                    degree: n,
                    context: format!(
                        "differential is {}x{}, expected {}x{}",
                        m.rows(),
                        m.cols(),
                        tc,
                        sc
                    ),
                });
            }
            if !m.is_zero() {
                clean.insert(n, m);
            }
        }
        let c = GradedComplex { dims, diff: clean };
        c.check_square()?;
        Ok(c)
    }

    /// Complex with zero differential.
    pub fn with_zero_differential(dims: BTreeMap<i64, usize>) -> Self {
        GradedComplex {
            dims: dims.into_iter().filter(|(_, d)| *d > 0).collect(),
            diff: BTreeMap::new(),
        }
    }

    fn check_square(&self) -> Result<(), ComplexError> {
        for (&n, d0) in &self.diff {
            if let Some(d1) = self.diff.get(&(n + 1)) {
                let sq = d1.matmul(d0);
                for c in 0..sq.cols() {
                    if let Some((r, _)) = sq.col(c).first() {
                        return Err(ComplexError::DifferentialSquare {
                            degree: n,
                            row: *r,
                            col: c,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self, n: i64) -> usize {
        self.dims.get(&n).copied().unwrap_or(0)
    }

    pub fn dims(&self) -> &BTreeMap<i64, usize> {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.values().sum()
    }

    pub fn degrees(&self) -> Vec<i64> {
        self.dims.keys().copied().collect()
    }

    pub fn diff(&self, n: i64) -> SparseMat {
        match self.diff.get(&n) {
            Some(m) => m.clone(),
            None => SparseMat::zero(self.dim(n + 1), self.dim(n)),
        }
    }

    pub fn diff_ref(&self, n: i64) -> Option<&SparseMat> {
        self.diff.get(&n)
    }

    /// Shifted complex `C[k]` with differential `(-1)^k d`.
    pub fn shifted(&self, k: i64) -> GradedComplex {
        let dims = self.dims.iter().map(|(&n, &d)| (n - k, d)).collect();
        let sign = if k.rem_euclid(2) == 0 {
            Rat::one()
        } else {
            -Rat::one()
        };
        let diff = self
            .diff
            .iter()
            .map(|(&n, m)| (n - k, m.scaled(&sign)))
            .collect();
        GradedComplex { dims, diff }
    }

    /// Cohomology dimensions per degree.
    pub fn cohomology(&self) -> BTreeMap<i64, usize> {
        self.cohomology_data().dims
    }

    /// Cohomology with chosen cocycle representatives and coordinate lookup.
    pub fn cohomology_data(&self) -> CohomologyData {
        self.cohomology_data_preferring(&[])
    }

    /// Like `cohomology_data`, but tries the supplied `(degree, vector)`
    /// cocycles first when choosing class representatives.
    pub fn cohomology_data_preferring(&self, preferred: &[(i64, SparseVec)]) -> CohomologyData {
        let mut dims = BTreeMap::new();
        let mut reps = BTreeMap::new();
        let mut coords = BTreeMap::new();
        for &n in self.dims.keys() {
            let d_out = self.diff(n);
            let d_in = self.diff(n - 1);
            let (z, _) = kernel_image(&d_out);
            let (_, b) = kernel_image(&d_in);
            let mut span = b.clone();
            let mut r: Vec<SparseVec> = Vec::new();
            for (m, v) in preferred {
                if *m == n && d_out.apply(v).is_empty() && span.insert(v.clone()) {
                    r.push(v.clone());
                }
            }
            for v in z.basis() {
                if span.insert(v.clone()) {
                    r.push(v.clone());
                }
            }
            let h = r.len();
            // Reduction of [B | reps] for coordinate lookup of cocycles.
            let mut m = SparseMat::zero(self.dim(n), b.dim() + h);
            for (k, v) in b.basis().iter().enumerate() {
                m.set_col(k, v.clone());
            }
            for (k, v) in r.iter().enumerate() {
                m.set_col(b.dim() + k, v.clone());
            }
            let red = column_reduce(&m, true);
            coords.insert(n, (red, b.dim()));
            if h > 0 {
                dims.insert(n, h);
            }
            reps.insert(n, r);
        }
        CohomologyData { dims, reps, coords }
    }

    pub fn direct_sum(&self, other: &GradedComplex) -> GradedComplex {
        let mut dims = BTreeMap::new();
        for n in self
            .dims
            .keys()
            .chain(other.dims.keys())
            .copied()
            .collect::<HashSet<_>>()
        {
            dims.insert(n, self.dim(n) + other.dim(n));
        }
        let mut diff = BTreeMap::new();
        for (&n, &dn) in &dims {
            let tn = dims.get(&(n + 1)).copied().unwrap_or(0);
            if dn == 0 || tn == 0 {
                continue;
            }
            let mut m = SparseMat::zero(tn, dn);
            let (s1, t1) = (self.dim(n), self.dim(n + 1));
            if let Some(d) = self.diff_ref(n) {
                for c in 0..d.cols() {
                    m.set_col(c, d.col(c).clone());
                }
            }
            if let Some(d) = other.diff_ref(n) {
                for c in 0..d.cols() {
                    let shifted: SparseVec =
                        d.col(c).iter().map(|(r, v)| (r + t1, v.clone())).collect();
                    m.set_col(s1 + c, shifted);
                }
            }
            if !m.is_zero() {
                diff.insert(n, m);
            }
        }
        GradedComplex { dims, diff }
    }
}

/// Cocycle representatives of cohomology classes, with coordinate lookup.
pub struct CohomologyData {
    pub dims: BTreeMap<i64, usize>,
    pub reps: BTreeMap<i64, Vec<SparseVec>>,
    coords: BTreeMap<i64, (crate::linalg::ColumnReduction, usize)>,
}

impl CohomologyData {
    pub fn dim(&self, n: i64) -> usize {
        self.dims.get(&n).copied().unwrap_or(0)
    }

    pub fn total_dim(&self) -> usize {
        self.dims.values().sum()
    }

    /// Coordinates of a cocycle's class in the chosen representative basis.
    /// Returns `None` if the vector is not a cocycle of the stored complex.
    pub fn class_coords(&self, n: i64, z: &SparseVec) -> Option<SparseVec> {
        let (red, b_dim) = self.coords.get(&n)?;
        let x = red.solve(z)?;
        let mut out: SparseVec = Vec::new();
        for (i, v) in x {
            if i >= *b_dim {
                out.push((i - b_dim, v));
            }
        }
        out.sort_by_key(|e| e.0);
        Some(out)
    }
}

/// Chain map between graded complexes, one matrix per degree.
#[derive(Debug, Clone)]
pub struct GradedMap {
    comps: BTreeMap<i64, SparseMat>,
}

impl GradedMap {
    pub fn new(comps: BTreeMap<i64, SparseMat>) -> Self {
        GradedMap {
            comps: comps.into_iter().filter(|(_, m)| !m.is_zero()).collect(),
        }
    }

    pub fn zero() -> Self {
        GradedMap {
            comps: BTreeMap::new(),
        }
    }

    pub fn comp(&self, n: i64, source: &GradedComplex, target: &GradedComplex) -> SparseMat {
        match self.comps.get(&n) {
            Some(m) => m.clone(),
            None => SparseMat::zero(target.dim(n), source.dim(n)),
        }
    }

    pub fn comp_ref(&self, n: i64) -> Option<&SparseMat> {
        self.comps.get(&n)
    }

    /// Validate shapes and the chain-map identity `d f = f d`.
    pub fn validate(
        &self,
        source: &GradedComplex,
        target: &GradedComplex,
    ) -> Result<(), ComplexError> {
        for (&n, m) in &self.comps {
            if m.cols() != source.dim(n) || m.rows() != target.dim(n) {
                return Err(ComplexError::ShapeMismatch {
                    degree: n,
                    context: format!(
                        "map is {}x{}, expected {}x{}",
                        m.rows(),
                        m.cols(),
                        target.dim(n),
                        source.dim(n)
                    ),
                });
            }
        }
        for &n in source.dims().keys() {
            let lhs = target.diff(n).matmul(&self.comp(n, source, target));
            let rhs = self.comp(n + 1, source, target).matmul(&source.diff(n));
            if lhs.add(&rhs.negated()).is_zero() {
                continue;
            }
            return Err(ComplexError::NotChainMap { degree: n });
        }
        Ok(())
    }

    /// Matrix of the induced map on cohomology, in the representative bases of
    /// the supplied cohomology data.
    pub fn induced_on_cohomology(
        &self,
        n: i64,
        source: &GradedComplex,
        target: &GradedComplex,
        source_h: &CohomologyData,
        target_h: &CohomologyData,
    ) -> SparseMat {
        let hs = source_h.dim(n);
        let ht = target_h.dim(n);
        let mut m = SparseMat::zero(ht, hs);
        let empty = Vec::new();
        let reps = source_h.reps.get(&n).unwrap_or(&empty);
        let f = self.comp(n, source, target);
        for (j, z) in reps.iter().enumerate() {
            let fz = f.apply(z);
            let c = target_h
                .class_coords(n, &fz)
                .expect("image of a cocycle under a chain map must be a cocycle");
            for (i, v) in c {
                m.add_entry(i, j, v);
            }
        }
        m
    }
}

/// Filtered cochain complex with a filtration-adapted basis.
#[derive(Debug, Clone)]
pub struct FilteredComplex {
    total: GradedComplex,
    levels: BTreeMap<i64, Vec<u32>>,
    p_max: u32,
    weights: Option<BTreeMap<i64, Vec<i64>>>,
}

impl FilteredComplex {
    pub fn from_levels(
        total: GradedComplex,
        levels: BTreeMap<i64, Vec<u32>>,
    ) -> Result<Self, ComplexError> {
        Self::from_levels_weighted(total, levels, None)
    }

    /// `weights`, when given, must be an auxiliary grading preserved exactly by
    /// the differential; block computations downstream rely on it.
    pub fn from_levels_weighted(
        total: GradedComplex,
        levels: BTreeMap<i64, Vec<u32>>,
        weights: Option<BTreeMap<i64, Vec<i64>>>,
    ) -> Result<Self, ComplexError> {
        for &n in total.dims().keys() {
            let l = levels.get(&n).map(|v| v.len()).unwrap_or(0);
            if l != total.dim(n) {
                return Err(ComplexError::ShapeMismatch {
                    degree: n,
                    context: format!("{} levels for {} basis vectors", l, total.dim(n)),
                });
            }
            if let Some(w) = &weights {
                let wl = w.get(&n).map(|v| v.len()).unwrap_or(0);
                if wl != total.dim(n) {
                    return Err(ComplexError::ShapeMismatch {
                        degree: n,
                        context: format!("{} weights for {} basis vectors", wl, total.dim(n)),
                    });
                }
            }
        }
        let levels: BTreeMap<i64, Vec<u32>> = levels
            .into_iter()
            .filter(|(n, _)| total.dim(*n) > 0)
            .collect();
        let weights: Option<BTreeMap<i64, Vec<i64>>> =
            weights.map(|w| w.into_iter().filter(|(n, _)| total.dim(*n) > 0).collect());
        // Closure of each F^p under d: every entry must not raise the level.
        for &n in total.dims().keys() {
            if let Some(d) = total.diff_ref(n) {
                let src = &levels[&n];
                let tgt = levels.get(&(n + 1));
                for c in 0..d.cols() {
                    for (r, _) in d.col(c) {
                        if tgt.map(|t| t[*r] > src[c]).unwrap_or(false) {
                            return Err(ComplexError::FiltrationNotPreserved { degree: n, col: c });
                        }
                        if let Some(w) = &weights {
                            if w[&(n + 1)][*r] != w[&n][c] {
                                return Err(ComplexError::WeightNotPreserved { degree: n, col: c });
                            }
                        }
                    }
                }
            }
        }
        let p_max = levels
            .values()
            .flat_map(|v| v.iter().copied())
            .max()
            .unwrap_or(0);
        Ok(FilteredComplex {
            total,
            levels,
            p_max,
            weights,
        })
    }

    /// Trivial filtration: everything at level 0.
    pub fn trivial(total: GradedComplex) -> Self {
        let levels = total
            .dims()
            .iter()
            .map(|(&n, &d)| (n, vec![0u32; d]))
            .collect();
        FilteredComplex {
            total,
            levels,
            p_max: 0,
            weights: None,
        }
    }

    pub fn total(&self) -> &GradedComplex {
        &self.total
    }

    pub fn p_max(&self) -> u32 {
        self.p_max
    }

    pub fn levels(&self, n: i64) -> &[u32] {
        static EMPTY: [u32; 0] = [];
        self.levels.get(&n).map(|v| v.as_slice()).unwrap_or(&EMPTY)
    }

    pub fn weights(&self, n: i64) -> Option<&[i64]> {
        self.weights
            .as_ref()
            .and_then(|w| w.get(&n))
            .map(|v| v.as_slice())
    }

    pub fn has_weights(&self) -> bool {
        self.weights.is_some()
    }

    /// Indices of the basis vectors of `F^p` in degree `n` (ascending).
    pub fn indices_le(&self, p: i64, n: i64) -> Vec<usize> {
        if p < 0 {
            return Vec::new();
        }
        self.levels(n)
            .iter()
            .enumerate()
            .filter(|(_, &l)| (l as i64) <= p)
            .map(|(i, _)| i)
            .collect()
    }

    /// `F^p` in degree `n` as a coordinate subspace of the total component.
    pub fn filtration_subspace(&self, p: i64, n: i64) -> Subspace {
        Subspace::coordinate(self.total.dim(n), &self.indices_le(p, n))
    }

    /// The subcomplex `F^q`, re-indexed, with levels and weights inherited.
    pub fn truncated(&self, q: u32) -> FilteredComplex {
        let sel: BTreeMap<i64, Vec<usize>> = self
            .total
            .dims()
            .keys()
            .map(|&n| (n, self.indices_le(q as i64, n)))
            .collect();
        self.restrict_to(&sel)
    }

    /// Restriction to a selection of basis indices per degree.  The selection
    /// must be closed under the differential; this is rechecked on rebuild.
    pub fn restrict_to(&self, sel: &BTreeMap<i64, Vec<usize>>) -> FilteredComplex {
        let mut dims = BTreeMap::new();
        let mut pos: BTreeMap<i64, HashMap<usize, usize>> = BTreeMap::new();
        for (&n, idx) in sel {
            dims.insert(n, idx.len());
            pos.insert(n, idx.iter().enumerate().map(|(k, &i)| (i, k)).collect());
        }
        let mut diff = BTreeMap::new();
        for (&n, idx) in sel {
            let tgt_n = n + 1;
            let t_dim = dims.get(&tgt_n).copied().unwrap_or(0);
            if idx.is_empty() || t_dim == 0 {
                continue;
            }
            if let Some(d) = self.total.diff_ref(n) {
                let tpos = &pos[&tgt_n];
                let mut m = SparseMat::zero(t_dim, idx.len());
                for (k, &c) in idx.iter().enumerate() {
                    let mut col: SparseVec = Vec::new();
                    for (r, v) in d.col(c) {
                        match tpos.get(r) {
                            Some(&nr) => col.push((nr, v.clone())),
                            None => panic!(
                                "restriction not closed under the differential \
                                 (degree {}, column {})",
                                n, c
                            ),
                        }
                    }
                    col.sort_by_key(|e| e.0);
                    m.set_col(k, col);
                }
                if !m.is_zero() {
                    diff.insert(n, m);
                }
            }
        }
        let total = GradedComplex { dims, diff };
        let levels = sel
            .iter()
            .map(|(&n, idx)| (n, idx.iter().map(|&i| self.levels(n)[i]).collect()))
            .collect();
        let weights = self.weights.as_ref().map(|_| {
            sel.iter()
                .map(|(&n, idx)| {
                    (
                        n,
                        idx.iter()
                            .map(|&i| self.weights(n).unwrap()[i])
                            .collect::<Vec<i64>>(),
                    )
                })
                .collect()
        });
        FilteredComplex::from_levels_weighted(total, levels, weights)
            .expect("restriction preserves validity")
    }

    /// Split into weight blocks (only if weights are present).  The
    /// differential is block-diagonal with respect to this split.
    pub fn weight_blocks(&self) -> Option<Vec<(i64, FilteredComplex)>> {
        self.weights.as_ref()?;
        let mut values: Vec<i64> = self
            .weights
            .as_ref()
            .unwrap()
            .values()
            .flat_map(|v| v.iter().copied())
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        values.sort();
        let mut out = Vec::new();
        for w in values {
            let sel: BTreeMap<i64, Vec<usize>> = self
                .total
                .dims()
                .keys()
                .map(|&n| {
                    (
                        n,
                        self.weights(n)
                            .unwrap()
                            .iter()
                            .enumerate()
                            .filter(|(_, &x)| x == w)
                            .map(|(i, _)| i)
                            .collect(),
                    )
                })
                .collect();
            out.push((w, self.restrict_to(&sel)));
        }
        Some(out)
    }

    /// Dimensions of `im(H(F^p C) -> H(C))` per degree.
    pub fn filtered_cohomology_image(&self, p: i64) -> BTreeMap<i64, usize> {
        if p < 0 {
            return BTreeMap::new();
        }
        let profile = self.filtered_image_profile();
        let p = p.clamp(0, self.p_max as i64) as usize;
        profile
            .into_iter()
            .filter_map(|(n, v)| {
                let d = v[p];
                if d > 0 {
                    Some((n, d))
                } else {
                    None
                }
            })
            .collect()
    }

    /// For each degree, the vector over `p = 0..=p_max` of
    /// `dim im(H^n(F^p C) -> H^n(C))`.  One elimination pass per degree.
    pub fn filtered_image_profile(&self) -> BTreeMap<i64, Vec<usize>> {
        let pm = self.p_max as usize;
        let mut out = BTreeMap::new();
        for &n in self.total.dims().keys() {
            let dim_n = self.total.dim(n);
            // Columns of d^n sorted by level; kernel vectors inherit the level
            // of the last column they involve.
            let mut order: Vec<usize> = (0..dim_n).collect();
            let lv = self.levels(n).to_vec();
            order.sort_by_key(|&i| (lv[i], i));
            let d_out = self.total.diff(n);
            let sorted = d_out.select_cols(&order);
            let red = column_reduce(&sorted, true);
            // Map kernel combos back to original coordinates with their level.
            let mut kernel_by_level: Vec<(u32, SparseVec)> = red
                .kernel
                .iter()
                .map(|kv| {
                    let mut level = 0u32;
                    let v: SparseVec = kv
                        .iter()
                        .map(|(i, c)| {
                            let orig = order[*i];
                            level = level.max(lv[orig]);
                            (orig, c.clone())
                        })
                        .collect();
                    let mut v = v;
                    v.sort_by_key(|e| e.0);
                    (level, v)
                })
                .collect();
            kernel_by_level.sort_by_key(|(l, _)| *l);
            // Insert into a space seeded with the coboundaries.
            let (_, b) = kernel_image(&self.total.diff(n - 1));
            let b_dim = b.dim();
            let mut span = b;
            let mut profile = vec![0usize; pm + 1];
            let mut k = 0;
            for p in 0..=pm {
                while k < kernel_by_level.len() && kernel_by_level[k].0 as usize <= p {
                    span.insert(kernel_by_level[k].1.clone());
                    k += 1;
                }
                profile[p] = span.dim() - b_dim;
            }
            out.insert(n, profile);
        }
        out
    }

    /// Total of `filtered_cohomology_image` over all degrees.
    pub fn filtered_cohomology_image_total(&self, p: i64) -> usize {
        self.filtered_cohomology_image(p).values().sum()
    }
}

/// Filtered chain map: one matrix per degree, compatible with both the
/// differentials and the filtrations.
#[derive(Debug, Clone)]
pub struct FilteredMap {
    pub map: GradedMap,
}

impl FilteredMap {
    pub fn new(comps: BTreeMap<i64, SparseMat>) -> Self {
        FilteredMap {
            map: GradedMap::new(comps),
        }
    }

    pub fn comp(&self, n: i64, source: &FilteredComplex, target: &FilteredComplex) -> SparseMat {
        self.map.comp(n, source.total(), target.total())
    }

    pub fn validate(
        &self,
        source: &FilteredComplex,
        target: &FilteredComplex,
    ) -> Result<(), ComplexError> {
        self.map.validate(source.total(), target.total())?;
        for (&n, m) in &self.map.comps {
            let src_lv = source.levels(n);
            let tgt_lv = target.levels(n);
            for c in 0..m.cols() {
                for (r, _) in m.col(c) {
                    if tgt_lv[*r] > src_lv[c] {
                        return Err(ComplexError::MapNotFiltered { degree: n, col: c });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Mapping cone of a filtered chain map, `r`-shifted on the source filtration:
/// `F^p cone_r(f) = F^{p-r} C1[1] ⊕ F^p C2`.
pub fn r_cone(
    f: &FilteredMap,
    source: &FilteredComplex,
    target: &FilteredComplex,
    r: u32,
) -> Result<FilteredComplex, ComplexError> {
    f.validate(source, target)?;
    let c1 = source.total();
    let c2 = target.total();
    let mut dims = BTreeMap::new();
    let mut degrees: HashSet<i64> = HashSet::new();
    for &n in c1.dims().keys() {
        degrees.insert(n - 1);
    }
    for &n in c2.dims().keys() {
        degrees.insert(n);
    }
    for &n in &degrees {
        let d = c1.dim(n + 1) + c2.dim(n);
        if d > 0 {
            dims.insert(n, d);
        }
    }
    let mut diff = BTreeMap::new();
    for &n in dims.keys() {
        let rows = c1.dim(n + 2) + c2.dim(n + 1);
        let cols = c1.dim(n + 1) + c2.dim(n);
        if rows == 0 || cols == 0 {
            continue;
        }
        let mut m = SparseMat::zero(rows, cols);
        let d1 = c1.diff(n + 1);
        for c in 0..d1.cols() {
            for (r, v) in d1.col(c) {
                m.add_entry(*r, c, -v.clone());
            }
        }
        let fm = f.comp(n + 1, source, target);
        for c in 0..fm.cols() {
            for (r, v) in fm.col(c) {
                m.add_entry(c1.dim(n + 2) + r, c, v.clone());
            }
        }
        let d2 = c2.diff(n);
        for c in 0..d2.cols() {
            for (r, v) in d2.col(c) {
                m.add_entry(c1.dim(n + 2) + r, c1.dim(n + 1) + c, v.clone());
            }
        }
        if !m.is_zero() {
            diff.insert(n, m);
        }
    }
    let total = GradedComplex::new(dims.clone(), diff)?;
    let mut levels = BTreeMap::new();
    for &n in dims.keys() {
        let mut lv = Vec::with_capacity(dims[&n]);
        for &l in source.levels(n + 1) {
            lv.push(l + r);
        }
        for &l in target.levels(n) {
            lv.push(l);
        }
        levels.insert(n, lv);
    }
    FilteredComplex::from_levels(total, levels)
}

/// Plain mapping cone (`r = 0`).
pub fn cone(
    f: &FilteredMap,
    source: &FilteredComplex,
    target: &FilteredComplex,
) -> Result<FilteredComplex, ComplexError> {
    r_cone(f, source, target, 0)
}

/// Iterated `r`-cone of a sequence `A_n -> ... -> A_0` with homotopies.
///
/// The underlying complex is `⊕_i A_i[i]` with diagonal blocks `(-1)^i d_i`;
/// `blocks[(i, j)]` for `j < i` holds the component `A_i -> A_j` of intrinsic
/// degree `1 + j - i` (a chain map for `j = i - 1`, homotopies further down),
/// stored as matrices `A_i^m -> A_j^{m + 1 + j - i}` keyed by `m`.  The level
/// of an `A_i`-vector is raised by `i * r`.
pub fn iterated_r_cone(
    terms: &[FilteredComplex],
    blocks: &BTreeMap<(usize, usize), BTreeMap<i64, SparseMat>>,
    r: u32,
) -> Result<FilteredComplex, ComplexError> {
    let nterms = terms.len();
    let mut dims: BTreeMap<i64, usize> = BTreeMap::new();
    // offset[(n, i)] = starting index of the A_i-block in total degree n.
    let mut offsets: HashMap<(i64, usize), usize> = HashMap::new();
    let mut degrees: HashSet<i64> = HashSet::new();
    for (i, t) in terms.iter().enumerate() {
        for &m in t.total().dims().keys() {
            degrees.insert(m - i as i64);
        }
    }
    for &n in &degrees {
        let mut acc = 0;
        for (i, t) in terms.iter().enumerate() {
            offsets.insert((n, i), acc);
            acc += t.total().dim(n + i as i64);
        }
        if acc > 0 {
            dims.insert(n, acc);
        }
    }
    let mut diff: BTreeMap<i64, SparseMat> = BTreeMap::new();
    for &n in dims.keys() {
        let rows = dims.get(&(n + 1)).copied().unwrap_or(0);
        let cols = dims[&n];
        if rows == 0 {
            continue;
        }
        let mut m = SparseMat::zero(rows, cols);
        for (i, t) in terms.iter().enumerate() {
            let mi = n + i as i64;
            let src_off = offsets[&(n, i)];
            // Diagonal block: (-1)^i d_i.
            if let Some(d) = t.total().diff_ref(mi) {
                let tgt_off = offsets[&(n + 1, i)];
                let sign = if i % 2 == 0 { Rat::one() } else { -Rat::one() };
                for c in 0..d.cols() {
                    for (rr, v) in d.col(c) {
                        m.add_entry(tgt_off + rr, src_off + c, &sign * v);
                    }
                }
            }
            // Lower blocks.
            for j in 0..i {
                if let Some(bb) = blocks.get(&(i, j)) {
                    if let Some(g) = bb.get(&mi) {
                        let tgt_deg = mi + 1 + j as i64 - i as i64;
                        if g.cols() != t.total().dim(mi)
                            || g.rows() != terms[j].total().dim(tgt_deg)
                        {
                            return Err(ComplexError::ShapeMismatch {
                                degree: mi,
                                context: format!(
                                    "block ({}, {}) is {}x{}, expected {}x{}",
                                    i,
                                    j,
                                    g.rows(),
                                    g.cols(),
                                    terms[j].total().dim(tgt_deg),
                                    t.total().dim(mi)
                                ),
                            });
                        }
                        let tgt_off = offsets[&(n + 1, j)];
                        for c in 0..g.cols() {
                            for (rr, v) in g.col(c) {
                                m.add_entry(tgt_off + rr, src_off + c, v.clone());
                            }
                        }
                    }
                }
            }
        }
        if !m.is_zero() {
            diff.insert(n, m);
        }
    }
    let total = GradedComplex::new(dims.clone(), diff)?;
    let mut levels = BTreeMap::new();
    for &n in dims.keys() {
        let mut lv = Vec::with_capacity(dims[&n]);
        for (i, t) in terms.iter().enumerate().take(nterms) {
            for &l in t.levels(n + i as i64) {
                lv.push(l + i as u32 * r);
            }
        }
        levels.insert(n, lv);
    }
    FilteredComplex::from_levels(total, levels)
}

/// Telescope of a finite prefix `C_0 -> C_1 -> ... -> C_N`: the cone of
/// `(f - 1): ⊕_{i<N} C_i -> ⊕_{i<=N} C_i`, filtered so that
/// `F^p = cone(⊕_{i<p} C_i -> ⊕_{i<=p} C_i)` and `F^0 = C_0`.
pub fn hocolim(
    terms: &[GradedComplex],
    maps: &[GradedMap],
) -> Result<FilteredComplex, ComplexError> {
    let nn = terms.len();
    assert!(nn >= 1, "hocolim needs at least one term");
    assert_eq!(maps.len() + 1, nn, "hocolim needs one map per adjacent pair");
    for (i, f) in maps.iter().enumerate() {
        f.validate(&terms[i], &terms[i + 1])?;
    }
    let mut degrees: HashSet<i64> = HashSet::new();
    for t in terms {
        for &m in t.dims().keys() {
            degrees.insert(m);
            degrees.insert(m - 1);
        }
    }
    let shifted_dim =
        |n: i64| -> usize { (0..nn - 1).map(|i| terms[i].dim(n + 1)).sum::<usize>() };
    let plain_dim = |n: i64| -> usize { (0..nn).map(|i| terms[i].dim(n)).sum::<usize>() };
    let mut dims = BTreeMap::new();
    for &n in &degrees {
        let d = shifted_dim(n) + plain_dim(n);
        if d > 0 {
            dims.insert(n, d);
        }
    }
    let shifted_off =
        |n: i64, i: usize| -> usize { (0..i).map(|k| terms[k].dim(n + 1)).sum::<usize>() };
    let plain_off = |n: i64, i: usize| -> usize {
        shifted_dim(n) + (0..i).map(|k| terms[k].dim(n)).sum::<usize>()
    };
    let mut diff = BTreeMap::new();
    for &n in dims.keys() {
        let rows = dims.get(&(n + 1)).copied().unwrap_or(0);
        if rows == 0 {
            continue;
        }
        let mut m = SparseMat::zero(rows, dims[&n]);
        for i in 0..nn - 1 {
            // Shifted copy of C_i: -d, then (f_i - 1) into the plain parts.
            let off = shifted_off(n, i);
            if let Some(d) = terms[i].diff_ref(n + 1) {
                let toff = shifted_off(n + 1, i);
                for c in 0..d.cols() {
                    for (r, v) in d.col(c) {
                        m.add_entry(toff + r, off + c, -v.clone());
                    }
                }
            }
            let f = maps[i].comp(n + 1, &terms[i], &terms[i + 1]);
            let toff_next = plain_off(n + 1, i + 1);
            for c in 0..f.cols() {
                for (r, v) in f.col(c) {
                    m.add_entry(toff_next + r, off + c, v.clone());
                }
            }
            let toff_same = plain_off(n + 1, i);
            for c in 0..terms[i].dim(n + 1) {
                m.add_entry(toff_same + c, off + c, -Rat::one());
            }
        }
        for (i, t) in terms.iter().enumerate() {
            let off = plain_off(n, i);
            if let Some(d) = t.diff_ref(n) {
                let toff = plain_off(n + 1, i);
                for c in 0..d.cols() {
                    for (r, v) in d.col(c) {
                        m.add_entry(toff + r, off + c, v.clone());
                    }
                }
            }
        }
        if !m.is_zero() {
            diff.insert(n, m);
        }
    }
    let total = GradedComplex::new(dims.clone(), diff)?;
    let mut levels = BTreeMap::new();
    for &n in dims.keys() {
        let mut lv = Vec::with_capacity(dims[&n]);
        for i in 0..nn - 1 {
            lv.extend(std::iter::repeat(i as u32 + 1).take(terms[i].dim(n + 1)));
        }
        for (i, t) in terms.iter().enumerate() {
            lv.extend(std::iter::repeat(i as u32).take(t.dim(n)));
        }
        levels.insert(n, lv);
    }
    FilteredComplex::from_levels(total, levels)
}

/// Directed system of graded vector spaces `V_0 -> V_1 -> ...` with
/// transition chain data (here: plain graded linear maps).
#[derive(Debug, Clone)]
pub struct DirectedSystem {
    pub spaces: Vec<BTreeMap<i64, usize>>,
    pub maps: Vec<GradedMap>,
}

impl DirectedSystem {
    pub fn new(spaces: Vec<BTreeMap<i64, usize>>, maps: Vec<GradedMap>) -> Self {
        assert_eq!(maps.len() + 1, spaces.len());
        DirectedSystem { spaces, maps }
    }

    pub fn len(&self) -> usize {
        self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spaces.is_empty()
    }

    fn space_complex(&self, i: usize) -> GradedComplex {
        GradedComplex::with_zero_differential(self.spaces[i].clone())
    }

    /// Composite transition `V_from -> V_to` in degree `n`.
    pub fn composite(&self, from: usize, to: usize, n: i64) -> SparseMat {
        assert!(from <= to && to < self.len());
        let mut m = SparseMat::identity(self.spaces[from].get(&n).copied().unwrap_or(0));
        for i in from..to {
            let f = self.maps[i].comp(n, &self.space_complex(i), &self.space_complex(i + 1));
            m = f.matmul(&m);
        }
        m
    }
}

/// Weak morphism of directed systems: a constant `c >= 1` and maps
/// `V_i -> W_{min(c * i, last)}` with commuting squares.
#[derive(Debug, Clone)]
pub struct WeakMorphism {
    pub c: usize,
    pub maps: Vec<GradedMap>,
}

impl WeakMorphism {
    /// Check the commuting-square condition on the stored prefixes.
    pub fn validate(&self, source: &DirectedSystem, target: &DirectedSystem) -> bool {
        if self.c == 0 || self.maps.len() != source.len() {
            return false;
        }
        let tgt_idx = |i: usize| (self.c * i).min(target.len() - 1);
        for i in 0..source.len() - 1 {
            for &n in source.spaces[i].keys() {
                let via_source = self.maps[i + 1]
                    .comp(
                        n,
                        &source.space_complex(i + 1),
                        &target.space_complex(tgt_idx(i + 1)),
                    )
                    .matmul(&source.composite(i, i + 1, n));
                let via_target = target
                    .composite(tgt_idx(i), tgt_idx(i + 1), n)
                    .matmul(&self.maps[i].comp(
                        n,
                        &source.space_complex(i),
                        &target.space_complex(tgt_idx(i)),
                    ));
                if !via_source.add(&via_target.negated()).is_zero() {
                    return false;
                }
            }
        }
        true
    }
}

/// Colimit filtration data of a directed system prefix.
#[derive(Debug, Clone)]
pub struct ColimitFiltration {
    /// `per_degree[n][p] = dim im(V_p -> V_last)` in degree `n`.
    pub per_degree: BTreeMap<i64, Vec<usize>>,
    /// Totals over degrees, indexed by `p`.
    pub total: Vec<usize>,
    /// Per `p`: were the image dimensions constant over the final `window`
    /// target indices?
    pub stabilized: Vec<bool>,
}

/// Filtration of the colimit of a directed system over its stored prefix:
/// `F^p = im(V_p -> V_last)`, with stabilization tested over the last
/// `window` target indices.
pub fn ds_colimit(sys: &DirectedSystem, window: usize) -> ColimitFiltration {
    let nn = sys.len();
    assert!(nn >= 1);
    let last = nn - 1;
    let window = window.max(1).min(nn);
    let mut degrees: HashSet<i64> = HashSet::new();
    for s in &sys.spaces {
        degrees.extend(s.keys().copied());
    }
    let mut per_degree: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    let mut stabilized = vec![true; nn];
    for &n in &degrees {
        let mut v = Vec::with_capacity(nn);
        for p in 0..nn {
            v.push(rank(&sys.composite(p, last, n)));
            for q in (nn - window)..nn {
                if q >= p {
                    let r = rank(&sys.composite(p, q, n));
                    if r != v[p] {
                        stabilized[p] = false;
                    }
                }
            }
        }
        per_degree.insert(n, v);
    }
    let total = (0..nn)
        .map(|p| per_degree.values().map(|v| v[p]).sum())
        .collect();
    ColimitFiltration {
        per_degree,
        total,
        stabilized,
    }
}

/// Outcome of a boundary-depth computation on an acyclic filtered complex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundaryDepth {
    Depth(u32),
    ExceedsMax(u32),
    NotAcyclic,
}

/// Smallest `d` such that every closed element of `F^p` bounds in `F^{p+d}`,
/// for every `p`; `NotAcyclic` if the total complex has cohomology.
pub fn boundary_depth(c: &FilteredComplex, max_d: u32) -> BoundaryDepth {
    if c.total().cohomology_data().total_dim() != 0 {
        return BoundaryDepth::NotAcyclic;
    }
    let pm = c.p_max() as i64;
    'depth: for d in 0..=max_d {
        for p in 0..=pm {
            for &n in c.total().dims().keys() {
                // Closed vectors of F^p in degree n.
                let idx = c.indices_le(p, n);
                if idx.is_empty() {
                    continue;
                }
                let dn = c.total().diff(n);
                let restricted = dn.select_cols(&idx);
                let (ker, _) = kernel_image(&restricted);
                if ker.dim() == 0 {
                    continue;
                }
                // Image of d on F^{p+d} in degree n-1.
                let idx_in = c.indices_le(p + d as i64, n - 1);
                let dprev = c.total().diff(n - 1).select_cols(&idx_in);
                let red = column_reduce(&dprev, false);
                for v in ker.basis() {
                    // Expand kernel combo to total coordinates.
                    let mut z: SparseVec = v.iter().map(|(i, x)| (idx[*i], x.clone())).collect();
                    z.sort_by_key(|e| e.0);
                    if !red.contains(&z) {
                        continue 'depth;
                    }
                }
            }
        }
        return BoundaryDepth::Depth(d);
    }
    BoundaryDepth::ExceedsMax(max_d)
}

/// Level-preserving elimination: repeatedly cancels differential entries that
/// join two basis vectors of the same filtration level, preferring ±1 pivots.
/// The result is filtered homotopy equivalent to the input level by level, so
/// every `im(H(F^p) -> H(F^q))` and every `E_r` page for `r >= 1` is
/// preserved.  Used to shrink bar-type complexes before rank computations.
pub fn compress(c: &FilteredComplex) -> FilteredComplex {
    struct DegData {
        // cols[c] = map row -> value (the differential out of this degree)
        cols: Vec<HashMap<usize, Rat>>,
        rows_occ: Vec<HashSet<usize>>, // row (in next degree) -> columns hitting it
        alive_src: Vec<bool>,
    }
    let degrees: Vec<i64> = c.total().degrees();
    let mut data: BTreeMap<i64, DegData> = BTreeMap::new();
    for &n in &degrees {
        let dim_n = c.total().dim(n);
        let dim_next = c.total().dim(n + 1);
        let mut cols = vec![HashMap::new(); dim_n];
        let mut rows_occ = vec![HashSet::new(); dim_next];
        if let Some(d) = c.total().diff_ref(n) {
            for cc in 0..d.cols() {
                for (r, v) in d.col(cc) {
                    cols[cc].insert(*r, v.clone());
                    rows_occ[*r].insert(cc);
                }
            }
        }
        data.insert(
            n,
            DegData {
                cols,
                rows_occ,
                alive_src: vec![true; dim_n],
            },
        );
    }
    let alive = |data: &BTreeMap<i64, DegData>, n: i64, i: usize| -> bool {
        data.get(&n).map(|d| d.alive_src[i]).unwrap_or(false)
    };

    // Candidate pivots: (fill score, degree, row, col).  Lazy deletion.
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let mut heap: BinaryHeap<Reverse<(usize, i64, usize, usize)>> = BinaryHeap::new();
    let push_cands =
        |heap: &mut BinaryHeap<Reverse<(usize, i64, usize, usize)>>,
         data: &BTreeMap<i64, DegData>,
         c: &FilteredComplex,
         n: i64,
         col: usize| {
            let dd = &data[&n];
            for (r, v) in &dd.cols[col] {
                if c.levels(n)[col] == c.levels(n + 1)[*r] && (v.is_one() || (-v).is_one()) {
                    let score =
                        (dd.cols[col].len() - 1) * (dd.rows_occ[*r].len().saturating_sub(1));
                    heap.push(Reverse((score, n, *r, col)));
                }
            }
        };
    for &n in &degrees {
        for col in 0..data[&n].cols.len() {
            push_cands(&mut heap, &data, c, n, col);
        }
    }
    while let Some(Reverse((score, n, r, col))) = heap.pop() {
        if !alive(&data, n, col) || !alive(&data, n + 1, r) {
            continue;
        }
        let (cur, still_unit) = match data[&n].cols[col].get(&r) {
            Some(v) => (v.clone(), v.is_one() || (-v).is_one()),
            None => continue,
        };
        if !still_unit {
            continue;
        }
        // Re-check score; if stale and much worse, requeue.
        let true_score =
            (data[&n].cols[col].len() - 1) * (data[&n].rows_occ[r].len().saturating_sub(1));
        if true_score > score {
            heap.push(Reverse((true_score, n, r, col)));
            continue;
        }
        // Cancel the pair (col in degree n, r in degree n+1).
        let pivot_col: Vec<(usize, Rat)> = data[&n].cols[col]
            .iter()
            .map(|(k, v)| (*k, v.clone()))
            .collect();
        let touched: Vec<usize> = data[&n].rows_occ[r]
            .iter()
            .copied()
            .filter(|&cc| cc != col)
            .collect();
        for cc in touched {
            let beta = data[&n].cols[cc].get(&r).cloned().unwrap_or_else(Rat::zero);
            if beta.is_zero() {
                continue;
            }
            let factor = -(&beta / &cur);
            for (rr, v) in &pivot_col {
                let dd = data.get_mut(&n).unwrap();
                let entry = dd.cols[cc].entry(*rr).or_insert_with(Rat::zero);
                *entry += &factor * v;
                if entry.is_zero() {
                    dd.cols[cc].remove(rr);
                    dd.rows_occ[*rr].remove(&cc);
                } else {
                    dd.rows_occ[*rr].insert(cc);
                }
            }
            push_cands(&mut heap, &data, c, n, cc);
        }
        // Remove the pivot column and row.
        {
            let dd = data.get_mut(&n).unwrap();
            let col_entries: Vec<usize> = dd.cols[col].keys().copied().collect();
            for rr in col_entries {
                dd.rows_occ[rr].remove(&col);
            }
            dd.cols[col].clear();
            dd.alive_src[col] = false;
            // Row r is now only in the cleared pivot column.
            dd.rows_occ[r].clear();
        }
        if let Some(dd) = data.get_mut(&(n + 1)) {
            let col_entries: Vec<usize> = dd.cols[r].keys().copied().collect();
            for rr in col_entries {
                dd.rows_occ[rr].remove(&r);
            }
            dd.cols[r].clear();
            dd.alive_src[r] = false;
        }
        // Drop the e_col-components of incoming differentials.
        if let Some(dd) = data.get_mut(&(n - 1)) {
            let incoming: Vec<usize> = dd.rows_occ[col].iter().copied().collect();
            for cc in incoming {
                dd.cols[cc].remove(&col);
            }
            dd.rows_occ[col].clear();
        }
    }
    // Repack.
    let mut sel: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for &n in &degrees {
        sel.insert(
            n,
            (0..c.total().dim(n))
                .filter(|&i| data[&n].alive_src[i])
                .collect(),
        );
    }
    let mut dims = BTreeMap::new();
    let mut pos: BTreeMap<i64, HashMap<usize, usize>> = BTreeMap::new();
    for (&n, idx) in &sel {
        if !idx.is_empty() {
            dims.insert(n, idx.len());
        }
        pos.insert(n, idx.iter().enumerate().map(|(k, &i)| (i, k)).collect());
    }
    let mut diff = BTreeMap::new();
    for (&n, idx) in &sel {
        let t_dim = sel.get(&(n + 1)).map(|v| v.len()).unwrap_or(0);
        if idx.is_empty() || t_dim == 0 {
            continue;
        }
        let tpos = &pos[&(n + 1)];
        let mut m = SparseMat::zero(t_dim, idx.len());
        for (k, &cc) in idx.iter().enumerate() {
            let mut colv: SparseVec = data[&n].cols[cc]
                .iter()
                .map(|(r, v)| (tpos[r], v.clone()))
                .collect();
            colv.sort_by_key(|e| e.0);
            m.set_col(k, colv);
        }
        if !m.is_zero() {
            diff.insert(n, m);
        }
    }
    let total = GradedComplex { dims, diff };
    let levels = sel
        .iter()
        .filter(|(_, idx)| !idx.is_empty())
        .map(|(&n, idx)| (n, idx.iter().map(|&i| c.levels(n)[i]).collect()))
        .collect();
    let weights = if c.has_weights() {
        Some(
            sel.iter()
                .filter(|(_, idx)| !idx.is_empty())
                .map(|(&n, idx)| {
                    (
                        n,
                        idx.iter()
                            .map(|&i| c.weights(n).unwrap()[i])
                            .collect::<Vec<i64>>(),
                    )
                })
                .collect(),
        )
    } else {
        None
    };
    FilteredComplex::from_levels_weighted(total, levels, weights)
        .expect("compression preserves validity")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rat;

    pub fn simple_complex(entries: &[(i64, usize)], diffs: &[(i64, usize, usize, i64)]) -> GradedComplex {
        let dims: BTreeMap<i64, usize> = entries.iter().copied().collect();
        let mut mats: BTreeMap<i64, SparseMat> = BTreeMap::new();
        for &(n, r, c, v) in diffs {
            let rows = dims.get(&(n + 1)).copied().unwrap_or(0);
            let cols = dims.get(&n).copied().unwrap_or(0);
            mats.entry(n)
                .or_insert_with(|| SparseMat::zero(rows, cols))
                .add_entry(r, c, rat(v));
        }
        GradedComplex::new(dims, mats).unwrap()
    }

    /// The recurring two-generator example: x in F^1 of degree 0 with
    /// dx = y in F^0 of degree 1.
    pub fn two_generator() -> FilteredComplex {
        let total = simple_complex(&[(0, 1), (1, 1)], &[(0, 0, 0, 1)]);
        let mut levels = BTreeMap::new();
        levels.insert(0, vec![1u32]);
        levels.insert(1, vec![0u32]);
        FilteredComplex::from_levels(total, levels).unwrap()
    }

    #[test]
    fn d_square_is_checked() {
        let dims: BTreeMap<i64, usize> = [(0, 1), (1, 1), (2, 1)].into_iter().collect();
        let mut mats = BTreeMap::new();
        let mut d0 = SparseMat::zero(1, 1);
        d0.add_entry(0, 0, rat(1));
        let mut d1 = SparseMat::zero(1, 1);
        d1.add_entry(0, 0, rat(1));
        mats.insert(0, d0);
        mats.insert(1, d1);
        assert!(matches!(
            GradedComplex::new(dims, mats),
            Err(ComplexError::DifferentialSquare { degree: 0, .. })
        ));
    }

    #[test]
    fn cohomology_of_acyclic_pair() {
        let c = simple_complex(&[(0, 1), (1, 1)], &[(0, 0, 0, 1)]);
        assert!(c.cohomology().is_empty());
        let c2 = simple_complex(&[(0, 2), (1, 1)], &[(0, 0, 0, 1)]);
        let h = c2.cohomology();
        assert_eq!(h.get(&0), Some(&1));
        assert_eq!(h.get(&1), None);
    }

    #[test]
    fn two_generator_filtration() {
        let c = two_generator();
        assert_eq!(c.p_max(), 1);
        // F^0 = span(y): its H^1 dies in the total complex.
        assert!(c.filtered_cohomology_image(0).is_empty());
        assert!(c.filtered_cohomology_image(1).is_empty());
    }

    #[test]
    fn cone_of_identity_is_acyclic() {
        let c = FilteredComplex::trivial(simple_complex(&[(0, 2), (1, 1)], &[(0, 0, 0, 1)]));
        let mut comps = BTreeMap::new();
        comps.insert(0, SparseMat::identity(2));
        comps.insert(1, SparseMat::identity(1));
        let f = FilteredMap::new(comps);
        let k = cone(&f, &c, &c).unwrap();
        assert_eq!(k.total().cohomology_data().total_dim(), 0);
    }

    #[test]
    fn r_cone_levels() {
        let c = two_generator();
        let mut comps = BTreeMap::new();
        comps.insert(0, SparseMat::identity(1));
        comps.insert(1, SparseMat::identity(1));
        let f = FilteredMap::new(comps);
        let k = r_cone(&f, &c, &c, 2).unwrap();
        // Degree -1 component = C1[1]^{-1} = C^0: level 1 + 2.
        assert_eq!(k.levels(-1), &[3]);
        // Degree 0: shifted C^1 at level 0+2, plain C^0 at level 1.
        assert_eq!(k.levels(0), &[2, 1]);
    }

    #[test]
    fn hocolim_prefix_cohomology_is_last_term() {
        // C_i = Q in degree 0, maps = identity: telescope of a constant system.
        let c = simple_complex(&[(0, 1)], &[]);
        let id = GradedMap::new(
            [(0, SparseMat::identity(1))]
                .into_iter()
                .collect::<BTreeMap<_, _>>(),
        );
        let t = hocolim(&[c.clone(), c.clone(), c.clone()], &[id.clone(), id]).unwrap();
        let h = t.total().cohomology();
        assert_eq!(h.get(&0), Some(&1));
        assert_eq!(t.p_max(), 2);
        // F^0 = C_0 contributes a class that survives.
        assert_eq!(t.filtered_cohomology_image_total(0), 1);
    }

    #[test]
    fn boundary_depth_two_generator() {
        // Shift the bounding element up two levels: depth 2.
        let total = simple_complex(&[(0, 1), (1, 1)], &[(0, 0, 0, 1)]);
        let mut levels = BTreeMap::new();
        levels.insert(0, vec![2u32]);
        levels.insert(1, vec![0u32]);
        let c = FilteredComplex::from_levels(total, levels).unwrap();
        assert_eq!(boundary_depth(&c, 5), BoundaryDepth::Depth(2));
        assert_eq!(boundary_depth(&c, 1), BoundaryDepth::ExceedsMax(1));
        let nc = FilteredComplex::trivial(simple_complex(&[(0, 1)], &[]));
        assert_eq!(boundary_depth(&nc, 3), BoundaryDepth::NotAcyclic);
    }

    #[test]
    fn ds_colimit_ranks() {
        // V_i = Q, transitions 0 -> Q -> Q (first map zero, then identity).
        let sp: Vec<BTreeMap<i64, usize>> = vec![
            [(0, 1)].into_iter().collect(),
            [(0, 1)].into_iter().collect(),
            [(0, 1)].into_iter().collect(),
        ];
        let zero = GradedMap::new(
            [(0, SparseMat::zero(1, 1))]
                .into_iter()
                .collect::<BTreeMap<_, _>>(),
        );
        let id = GradedMap::new(
            [(0, SparseMat::identity(1))]
                .into_iter()
                .collect::<BTreeMap<_, _>>(),
        );
        let sys = DirectedSystem::new(sp, vec![zero, id]);
        let cf = ds_colimit(&sys, 2);
        assert_eq!(cf.total, vec![0, 1, 1]);
    }

    #[test]
    fn compress_preserves_filtered_data() {
        // Three-step filtered complex with a same-level cancellable pair plus
        // a surviving class.
        let total = simple_complex(
            &[(0, 2), (1, 2)],
            &[(0, 0, 0, 1), (0, 0, 1, 2), (0, 1, 1, 3)],
        );
        let mut levels = BTreeMap::new();
        levels.insert(0, vec![1u32, 2u32]);
        levels.insert(1, vec![1u32, 2u32]);
        let c = FilteredComplex::from_levels(total, levels).unwrap();
        let r = compress(&c);
        assert!(r.total().total_dim() < c.total().total_dim());
        for p in 0..=2 {
            assert_eq!(
                c.filtered_cohomology_image(p),
                r.filtered_cohomology_image(p),
                "filtered image mismatch at p = {}",
                p
            );
        }
    }

    #[test]
    fn weight_blocks_split() {
        let total = simple_complex(&[(0, 2), (1, 2)], &[(0, 0, 0, 1), (0, 1, 1, 5)]);
        let mut levels = BTreeMap::new();
        levels.insert(0, vec![0u32, 1u32]);
        levels.insert(1, vec![0u32, 0u32]);
        let mut weights = BTreeMap::new();
        weights.insert(0, vec![0i64, 7i64]);
        weights.insert(1, vec![0i64, 7i64]);
        let c = FilteredComplex::from_levels_weighted(total, levels, Some(weights)).unwrap();
        let blocks = c.weight_blocks().unwrap();
        assert_eq!(blocks.len(), 2);
        let total_dim: usize = blocks.iter().map(|(_, b)| b.total().total_dim()).sum();
        assert_eq!(total_dim, c.total().total_dim());
    }
}
