//! Spectral sequence of a filtered complex, computed literally from the
//! cycle/boundary lattice:
//!
//! `Z_r^{p,n} = F^p C^n ∩ d^{-1}(F^{p-r} C^{n+1})`,
//! `B_r^{p,n} = Z_{r-1}^{p-1,n} + d(Z_{r-1}^{p+r-1,n-1})` (with `Z_{-1}^{p} = F^p`),
//! `E_r^{p,n} = Z_r^{p,n} / B_r^{p,n}`, and `d_r: E_r^{p,n} -> E_r^{p-r,n+1}`
//! induced by the differential.
//!
//! Entries are keyed by `(p, n)` with the complementary index `q = n - p`
//! derived in exports.  All pages vanish outside `0 <= p <= p_max`, and
//! `E_r = E_∞` once `r > p_max`.

use crate::complexes::{FilteredComplex, FilteredMap};
use crate::linalg::{column_reduce, ColumnReduction, SparseMat, SparseVec, Subspace};
use serde_json::json;
use std::collections::BTreeMap;

struct Entry {
    dim: usize,
    reps: Vec<SparseVec>,
    red: ColumnReduction,
    b_dim: usize,
}

/// One page of the spectral sequence, with representatives and the induced
/// differential `d_r` of bidegree `(-r, +1)` in `(p, n)`-coordinates.
pub struct SpectralPage {
    pub r: u32,
    entries: BTreeMap<(i64, i64), Entry>,
    diffs: BTreeMap<(i64, i64), SparseMat>,
}

/// `Z_r^{p,n}` as a subspace of the total degree-`n` component; `r = -1`
/// encodes `F^p C^n` itself.
fn z_space(c: &FilteredComplex, r: i64, p: i64, n: i64) -> Subspace {
    let dim_n = c.total().dim(n);
    if p < 0 {
        return Subspace::zero_space(dim_n);
    }
    let f_p = c.filtration_subspace(p, n);
    if r < 0 {
        return f_p;
    }
    let target = c.filtration_subspace(p - r, n + 1);
    let pre = target
        .preimage_under(&c.total().diff(n))
        .expect("differential shape matches the complex");
    f_p.intersect(&pre)
}

/// Compute page `r` of the spectral sequence of `c`.
pub fn page(c: &FilteredComplex, r: u32) -> SpectralPage {
    let rr = r as i64;
    let pm = c.p_max() as i64;
    let mut entries: BTreeMap<(i64, i64), Entry> = BTreeMap::new();
    for &n in c.total().dims().keys() {
        for p in 0..=pm {
            let z = z_space(c, rr, p, n);
            if z.dim() == 0 {
                continue;
            }
            let b1 = z_space(c, rr - 1, p - 1, n);
            let b2 = z_space(c, rr - 1, p + rr - 1, n - 1);
            let b2d = b2
                .image_under(&c.total().diff(n - 1))
                .expect("differential shape matches the complex");
            let b = b1.sum(&b2d);
            debug_assert!(z.contains_space(&b), "B_r must sit inside Z_r");
            let mut span = b.clone();
            let mut reps: Vec<SparseVec> = Vec::new();
            for v in z.basis() {
                if span.insert(v.clone()) {
                    reps.push(v.clone());
                }
            }
            if reps.is_empty() {
                continue;
            }
            let mut m = SparseMat::zero(c.total().dim(n), b.dim() + reps.len());
            for (k, v) in b.basis().iter().enumerate() {
                m.set_col(k, v.clone());
            }
            for (k, v) in reps.iter().enumerate() {
                m.set_col(b.dim() + k, v.clone());
            }
            let red = column_reduce(&m, true);
            entries.insert(
                (p, n),
                Entry {
                    dim: reps.len(),
                    reps,
                    red,
                    b_dim: b.dim(),
                },
            );
        }
    }
    let mut diffs = BTreeMap::new();
    let keys: Vec<(i64, i64)> = entries.keys().copied().collect();
    for (p, n) in keys {
        let src_dim = entries[&(p, n)].dim;
        let tgt_key = (p - rr, n + 1);
        let tgt_dim = entries.get(&tgt_key).map(|e| e.dim).unwrap_or(0);
        let mut m = SparseMat::zero(tgt_dim, src_dim);
        if tgt_dim > 0 {
            let d = c.total().diff(n);
            for j in 0..src_dim {
                let dz = d.apply(&entries[&(p, n)].reps[j]);
                let coords = entry_coords(&entries[&tgt_key], &dz)
                    .expect("d of a Z_r representative must lie in the target Z_r");
                for (i, v) in coords {
                    m.add_entry(i, j, v);
                }
            }
        }
        if !m.is_zero() || (src_dim > 0 && tgt_dim > 0) {
            diffs.insert((p, n), m);
        }
    }
    SpectralPage { r, entries, diffs }
}

fn entry_coords(e: &Entry, z: &SparseVec) -> Option<SparseVec> {
    let x = e.red.solve(z)?;
    let mut out: SparseVec = Vec::new();
    for (i, v) in x {
        if i >= e.b_dim {
            out.push((i - e.b_dim, v));
        }
    }
    out.sort_by_key(|t| t.0);
    Some(out)
}

impl SpectralPage {
    pub fn dim(&self, p: i64, n: i64) -> usize {
        self.entries.get(&(p, n)).map(|e| e.dim).unwrap_or(0)
    }

    /// Nonzero entry dimensions keyed by `(p, n)`.
    pub fn dims(&self) -> BTreeMap<(i64, i64), usize> {
        self.entries.iter().map(|(&k, e)| (k, e.dim)).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.entries.values().map(|e| e.dim).sum()
    }

    pub fn reps(&self, p: i64, n: i64) -> &[SparseVec] {
        self.entries
            .get(&(p, n))
            .map(|e| e.reps.as_slice())
            .unwrap_or(&[])
    }

    /// Matrix of `d_r: E_r^{p,n} -> E_r^{p-r,n+1}` in the representative bases.
    pub fn differential(&self, p: i64, n: i64) -> SparseMat {
        match self.diffs.get(&(p, n)) {
            Some(m) => m.clone(),
            None => SparseMat::zero(self.dim(p - self.r as i64, n + 1), self.dim(p, n)),
        }
    }

    /// Coordinates of a `Z_r`-vector's class in the representative basis of
    /// entry `(p, n)`; `None` if the vector does not lie in `Z_r^{p,n}` (or
    /// the entry vanishes while the vector is not a boundary there).
    pub fn class_coords(&self, p: i64, n: i64, z: &SparseVec) -> Option<SparseVec> {
        match self.entries.get(&(p, n)) {
            Some(e) => entry_coords(e, z),
            None => {
                if z.is_empty() {
                    Some(Vec::new())
                } else {
                    None
                }
            }
        }
    }

    /// `r,p,q,n,dim` rows for all nonzero entries, sorted by `(p, n)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,p,q,n,dim\n");
        for (&(p, n), e) in &self.entries {
            out.push_str(&format!("{},{},{},{},{}\n", self.r, p, n - p, n, e.dim));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<serde_json::Value> = self
            .entries
            .iter()
            .map(|(&(p, n), e)| json!({"p": p, "q": n - p, "n": n, "dim": e.dim}))
            .collect();
        json!({"r": self.r, "entries": entries})
    }
}

/// Map of spectral pages induced by a filtered chain map, entry by entry.
pub struct PageMap {
    pub r: u32,
    pub comps: BTreeMap<(i64, i64), SparseMat>,
}

/// Matrices of `E_r(f)` between the pages of `source` and `target`.
/// Panics if `f` is not a filtered chain map.
pub fn induced_page_map(
    f: &FilteredMap,
    source: &FilteredComplex,
    target: &FilteredComplex,
    r: u32,
) -> (SpectralPage, SpectralPage, PageMap) {
    f.validate(source, target)
        .expect("induced_page_map needs a filtered chain map");
    let sp = page(source, r);
    let tp = page(target, r);
    let mut comps = BTreeMap::new();
    let keys: std::collections::BTreeSet<(i64, i64)> = sp
        .entries
        .keys()
        .chain(tp.entries.keys())
        .copied()
        .collect();
    for (p, n) in keys {
        let sd = sp.dim(p, n);
        let td = tp.dim(p, n);
        let mut m = SparseMat::zero(td, sd);
        if sd > 0 && td > 0 {
            let fm = f.comp(n, source, target);
            for (j, z) in sp.reps(p, n).iter().enumerate() {
                let fz = fm.apply(z);
                let coords = tp
                    .class_coords(p, n, &fz)
                    .expect("filtered chain maps send Z_r into Z_r");
                for (i, v) in coords {
                    m.add_entry(i, j, v);
                }
            }
        }
        comps.insert((p, n), m);
    }
    (sp, tp, PageMap { r, comps })
}

/// `true` iff `E_{r+1}(c) = 0`; equivalent to acyclicity visible within
/// filtration shift `r`.
pub fn is_er_acyclic(c: &FilteredComplex, r: u32) -> bool {
    page(c, r + 1).total_dim() == 0
}

/// `true` iff `E_{r+1}(f)` is an isomorphism on every entry.
pub fn is_er_quasi_iso(
    f: &FilteredMap,
    source: &FilteredComplex,
    target: &FilteredComplex,
    r: u32,
) -> bool {
    let (sp, tp, pm) = induced_page_map(f, source, target, r + 1);
    for ((p, n), m) in &pm.comps {
        let sd = sp.dim(*p, *n);
        let td = tp.dim(*p, *n);
        if sd != td {
            return false;
        }
        if crate::linalg::rank(m) != sd {
            return false;
        }
    }
    true
}

/// Associated graded piece `gr_p C` as a plain complex: basis vectors of
/// level exactly `p`, differential truncated to its level-preserving part.
pub fn gr_complex(c: &FilteredComplex, p: u32) -> crate::complexes::GradedComplex {
    let mut sel: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for &n in c.total().dims().keys() {
        sel.insert(
            n,
            c.levels(n)
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == p)
                .map(|(i, _)| i)
                .collect(),
        );
    }
    let mut dims = BTreeMap::new();
    for (&n, idx) in &sel {
        if !idx.is_empty() {
            dims.insert(n, idx.len());
        }
    }
    let mut diffs = BTreeMap::new();
    for (&n, idx) in &sel {
        let tgt = match sel.get(&(n + 1)) {
            Some(t) if !t.is_empty() && !idx.is_empty() => t,
            _ => continue,
        };
        let tpos: BTreeMap<usize, usize> = tgt.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let mut m = SparseMat::zero(tgt.len(), idx.len());
        if let Some(d) = c.total().diff_ref(n) {
            for (k, &cc) in idx.iter().enumerate() {
                for (rr, v) in d.col(cc) {
                    if let Some(&nr) = tpos.get(rr) {
                        m.add_entry(nr, k, v.clone());
                    }
                }
            }
        }
        if !m.is_zero() {
            diffs.insert(n, m);
        }
    }
    crate::complexes::GradedComplex::new(dims, diffs)
        .expect("level-preserving part of d squares to zero")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexes::{FilteredComplex, GradedComplex};
    use crate::linalg::rat;

    fn staircase(deg_x: i64, level_x: u32, level_y: u32) -> FilteredComplex {
        assert!(level_y <= level_x);
        let dims: BTreeMap<i64, usize> = [(deg_x, 1), (deg_x + 1, 1)].into_iter().collect();
        let mut d = SparseMat::zero(1, 1);
        d.add_entry(0, 0, rat(1));
        let diffs: BTreeMap<i64, SparseMat> = [(deg_x, d)].into_iter().collect();
        let total = GradedComplex::new(dims, diffs).unwrap();
        let levels: BTreeMap<i64, Vec<u32>> = [(deg_x, vec![level_x]), (deg_x + 1, vec![level_y])]
            .into_iter()
            .collect();
        FilteredComplex::from_levels(total, levels).unwrap()
    }

    #[test]
    fn two_generator_pages() {
        let c = staircase(0, 1, 0);
        let p1 = page(&c, 1);
        assert_eq!(p1.dim(1, 0), 1);
        assert_eq!(p1.dim(0, 1), 1);
        assert_eq!(crate::linalg::rank(&p1.differential(1, 0)), 1);
        assert_eq!(page(&c, 2).total_dim(), 0);
        assert!(is_er_acyclic(&c, 1));
        assert!(!is_er_acyclic(&c, 0));
    }

    #[test]
    fn staircase_survival_length() {
        // A pair x |-> y with levels (a, b) survives exactly through page a-b.
        for a in 0..4u32 {
            for b in 0..=a {
                let c = staircase(0, a, b);
                for r in 0..=(a - b) {
                    assert_eq!(page(&c, r).total_dim(), 2, "a={} b={} r={}", a, b, r);
                }
                assert_eq!(page(&c, a - b + 1).total_dim(), 0, "a={} b={}", a, b);
            }
        }
    }

    #[test]
    fn first_page_is_cohomology_of_graded_pieces() {
        // Three-level mix: staircases (2,0), (1,1) plus a surviving singleton.
        let dims: BTreeMap<i64, usize> = [(0, 2), (1, 3)].into_iter().collect();
        let mut d = SparseMat::zero(3, 2);
        d.add_entry(0, 0, rat(1)); // x0 (lvl 2) -> y0 (lvl 0)
        d.add_entry(1, 1, rat(3)); // x1 (lvl 1) -> y1 (lvl 1)
        let total = GradedComplex::new(dims, [(0, d)].into_iter().collect()).unwrap();
        let levels: BTreeMap<i64, Vec<u32>> = [(0, vec![2, 1]), (1, vec![0, 1, 2])]
            .into_iter()
            .collect();
        let c = FilteredComplex::from_levels(total, levels).unwrap();
        let p1 = page(&c, 1);
        for p in 0..=c.p_max() {
            let h = gr_complex(&c, p).cohomology();
            for n in 0..3i64 {
                assert_eq!(
                    p1.dim(p as i64, n),
                    h.get(&n).copied().unwrap_or(0),
                    "p={} n={}",
                    p,
                    n
                );
            }
        }
    }

    #[test]
    fn next_page_is_homology_of_previous() {
        // Independent iterative check on a mixed example.
        let dims: BTreeMap<i64, usize> = [(0, 2), (1, 3)].into_iter().collect();
        let mut d = SparseMat::zero(3, 2);
        d.add_entry(0, 0, rat(1));
        d.add_entry(2, 0, rat(1));
        d.add_entry(2, 1, rat(2));
        let total = GradedComplex::new(dims, [(0, d)].into_iter().collect()).unwrap();
        let levels: BTreeMap<i64, Vec<u32>> = [(0, vec![3, 2]), (1, vec![0, 3, 2])]
            .into_iter()
            .collect();
        let c = FilteredComplex::from_levels(total, levels).unwrap();
        for r in 0..=4u32 {
            let cur = page(&c, r);
            let next = page(&c, r + 1);
            let rr = r as i64;
            // d_r ∘ d_r = 0.
            for &(p, n) in cur.dims().keys() {
                let once = cur.differential(p, n);
                let twice = cur.differential(p - rr, n + 1).matmul(&once);
                assert!(twice.is_zero(), "d_r^2 != 0 at r={} p={} n={}", r, p, n);
            }
            // dim E_{r+1} = dim ker(d_r out) - rank(d_r in).
            for p in 0..=c.p_max() as i64 {
                for n in -1..3i64 {
                    let out_rank = crate::linalg::rank(&cur.differential(p, n));
                    let in_rank = crate::linalg::rank(&cur.differential(p + rr, n - 1));
                    let expected = cur.dim(p, n) - out_rank - in_rank;
                    assert_eq!(next.dim(p, n), expected, "r={} p={} n={}", r, p, n);
                }
            }
        }
    }

    #[test]
    fn limit_page_matches_filtered_image_grading() {
        let dims: BTreeMap<i64, usize> = [(0, 2), (1, 3)].into_iter().collect();
        let mut d = SparseMat::zero(3, 2);
        d.add_entry(0, 0, rat(1));
        d.add_entry(1, 1, rat(5));
        let total = GradedComplex::new(dims, [(0, d)].into_iter().collect()).unwrap();
        let levels: BTreeMap<i64, Vec<u32>> = [(0, vec![2, 1]), (1, vec![0, 1, 2])]
            .into_iter()
            .collect();
        let c = FilteredComplex::from_levels(total, levels).unwrap();
        let inf = page(&c, c.p_max() + 1);
        let profile = c.filtered_image_profile();
        for (&n, prof) in &profile {
            for p in 0..=c.p_max() as i64 {
                let prev = if p == 0 { 0 } else { prof[(p - 1) as usize] };
                assert_eq!(
                    inf.dim(p, n),
                    prof[p as usize] - prev,
                    "p={} n={}",
                    p,
                    n
                );
            }
        }
    }

    #[test]
    fn induced_identity_map_is_iso() {
        let c = staircase(0, 2, 0);
        let mut comps = BTreeMap::new();
        comps.insert(0, SparseMat::identity(1));
        comps.insert(1, SparseMat::identity(1));
        let f = FilteredMap::new(comps);
        for r in 0..4 {
            assert!(is_er_quasi_iso(&f, &c, &c, r));
        }
    }

    #[test]
    fn subcomplex_inclusion_is_not_a_page_iso() {
        let c = staircase(0, 1, 0);
        let sub = c.truncated(0);
        let mut comps = BTreeMap::new();
        comps.insert(1, SparseMat::identity(1));
        let f = FilteredMap::new(comps);
        f.validate(&sub, &c).unwrap();
        assert!(!is_er_quasi_iso(&f, &sub, &c, 0));
        assert!(!is_er_quasi_iso(&f, &sub, &c, 1));
    }

    #[test]
    fn csv_and_json_exports() {
        let c = staircase(0, 1, 0);
        let p1 = page(&c, 1);
        let csv = p1.to_csv();
        assert!(csv.starts_with("r,p,q,n,dim\n"));
        assert!(csv.contains("1,1,-1,0,1"));
        let v = p1.to_json();
        assert_eq!(v["r"], 1);
        assert_eq!(v["entries"].as_array().unwrap().len(), 2);
    }
}
