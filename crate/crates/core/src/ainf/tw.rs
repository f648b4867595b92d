//! Twisted complexes over a table-backed category.
//!
//! A twisted complex is a finite sum of shifted objects together with a
//! degree-1 connection `delta` whose entry graph is strictly layered (no
//! directed cycles), so that all insertion sums below are finite.  Morphism
//! spaces, the differential, and higher products are computed by summing base
//! products over connection insertions, with the shift sign rule of the
//! parent module.  Multiplicity spaces are one-dimensional throughout: a
//! repeated summand is listed once per copy.
//!
//! The reduction `tw_reduce` cancels connection entries that are scalar
//! multiples of a unit.  It works in transformed coordinates: scaling the
//! component of a morphism at source summand `s` by `(-1)^{u_s}` turns the
//! Maurer-Cartan equation into `A^2 = 0`, closedness of a degree-0 morphism
//! into the plain chain-map equation, and binary composition into matrix
//! multiplication, where all products are ordinary composition of base
//! morphisms.  Gaussian elimination in these coordinates therefore needs no
//! sign bookkeeping; signs reappear only when translating back.

use std::collections::BTreeMap;

use num::{One, Zero};
use thiserror::Error;

use super::{
    mu_multilinear, sigma_exponent_for, AInfCategory, AInfOps, HomComplexMap, SHIFT_RULE,
};
use crate::complexes::GradedComplex;
use crate::linalg::{add_scaled, scale_vec, Rat, SparseMat, SparseVec};

#[derive(Debug, Error)]
pub enum TwError {
    #[error("summand {summand} references object {object} outside the category")]
    BadObject { summand: usize, object: usize },
    #[error("connection entry {src}->{tgt} is out of range")]
    BadEntry { src: usize, tgt: usize },
    #[error("connection entry {src}->{tgt} has a term of shifted degree {found}, expected 1")]
    EntryDegree { src: usize, tgt: usize, found: i64 },
    #[error("connection graph has a directed cycle through summand {summand}")]
    Cyclic { summand: usize },
    #[error("declared length bound {bound} exceeded: connection needs {needed} layers")]
    LengthBound { bound: usize, needed: usize },
    #[error("Maurer-Cartan equation fails at {src}->{tgt}: residual {residual}")]
    MaurerCartan {
        src: usize,
        tgt: usize,
        residual: String,
    },
    #[error("chain of {inputs} inputs needs {} objects, got {objects}", inputs + 1)]
    Composability { inputs: usize, objects: usize },
    #[error("input {slot} has index {index} but the morphism space has dimension {dim}")]
    InputRange {
        slot: usize,
        index: usize,
        dim: usize,
    },
    #[error("morphism is not homogeneous of degree 0")]
    NotDegreeZero,
    #[error("morphism is not closed")]
    NotClosed,
    #[error("object {object} has no strict unit")]
    MissingUnit { object: usize },
    #[error("collection member {position} is not exceptional: {reason}")]
    NotExceptional { position: usize, reason: String },
    #[error("not generated: nonzero residue remains after the full cascade")]
    NotGenerated,
}

/// Shifted summands with a strictly layered degree-1 connection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwistedComplex {
    /// (base object, shift) per summand.
    pub summands: Vec<(usize, i64)>,
    /// Connection entries keyed (source summand, target summand).
    pub delta: BTreeMap<(usize, usize), SparseVec>,
    /// Declared bound on the number of connection layers.
    pub length_bound: usize,
}

impl TwistedComplex {
    pub fn plain(object: usize) -> Self {
        Self::shifted(object, 0)
    }

    pub fn shifted(object: usize, shift: i64) -> Self {
        TwistedComplex {
            summands: vec![(object, shift)],
            delta: BTreeMap::new(),
            length_bound: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.summands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summands.is_empty()
    }

    /// Shift every summand; the connection is unchanged.
    pub fn shift(&self, s: i64) -> Self {
        TwistedComplex {
            summands: self.summands.iter().map(|&(o, u)| (o, u + s)).collect(),
            delta: self.delta.clone(),
            length_bound: self.length_bound,
        }
    }

    pub fn direct_sum(&self, other: &Self) -> Self {
        let n = self.len();
        let mut summands = self.summands.clone();
        summands.extend_from_slice(&other.summands);
        let mut delta = self.delta.clone();
        for (&(s, t), v) in &other.delta {
            delta.insert((s + n, t + n), v.clone());
        }
        TwistedComplex {
            summands,
            delta,
            length_bound: self.length_bound.max(other.length_bound),
        }
    }

    /// Move summand `i` to position `perm[i]`, rekeying the connection.
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.len());
        let mut summands = vec![(0usize, 0i64); self.len()];
        for (i, &s) in self.summands.iter().enumerate() {
            summands[perm[i]] = s;
        }
        let delta = self
            .delta
            .iter()
            .map(|(&(s, t), v)| ((perm[s], perm[t]), v.clone()))
            .collect();
        TwistedComplex {
            summands,
            delta,
            length_bound: self.length_bound,
        }
    }

    fn out_edges(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.len()];
        for &(s, t) in self.delta.keys() {
            adj[s].push(t);
        }
        adj
    }

    fn in_edges(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.len()];
        for &(s, t) in self.delta.keys() {
            adj[t].push(s);
        }
        adj
    }

    /// Layer index per summand: 0 on sinks, strictly decreasing along
    /// connection entries.  Fails on a directed cycle.
    pub fn layering(&self) -> Result<Vec<usize>, TwError> {
        let n = self.len();
        let adj = self.out_edges();
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; n];
        let mut layer = vec![0usize; n];
        // Iterative DFS computing longest outgoing path lengths.
        for root in 0..n {
            if state[root] != 0 {
                continue;
            }
            let mut stack = vec![(root, 0usize)];
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if *next == 0 {
                    state[v] = 1;
                }
                if *next < adj[v].len() {
                    let w = adj[v][*next];
                    *next += 1;
                    match state[w] {
                        0 => stack.push((w, 0)),
                        1 => return Err(TwError::Cyclic { summand: w }),
                        _ => layer[v] = layer[v].max(layer[w] + 1),
                    }
                } else {
                    state[v] = 2;
                    stack.pop();
                    if let Some(&(p, _)) = stack.last() {
                        layer[p] = layer[p].max(layer[v] + 1);
                    }
                }
            }
        }
        Ok(layer)
    }

    /// Number of connection layers actually used.
    pub fn length(&self) -> usize {
        match self.layering() {
            Ok(layers) => layers.iter().max().map(|m| m + 1).unwrap_or(0),
            Err(_) => usize::MAX,
        }
    }
}

/// Structural validation plus the Maurer-Cartan equation.
pub fn validate_tw(t: &TwistedComplex, cat: &AInfCategory) -> Result<(), TwError> {
    let n = t.len();
    for (summand, &(o, _)) in t.summands.iter().enumerate() {
        if o >= cat.n_objects() {
            return Err(TwError::BadObject {
                summand,
                object: o,
            });
        }
    }
    for (&(s, tgt), v) in &t.delta {
        if s >= n || tgt >= n {
            return Err(TwError::BadEntry { src: s, tgt });
        }
        let (os, us) = t.summands[s];
        let (ot, ut) = t.summands[tgt];
        let dim = cat.hom_dim(os, ot);
        for &(k, _) in v {
            if k >= dim {
                return Err(TwError::BadEntry { src: s, tgt });
            }
            let found = cat.degree(os, ot, k) + us - ut;
            if found != 1 {
                return Err(TwError::EntryDegree {
                    src: s,
                    tgt,
                    found,
                });
            }
        }
    }
    let layers = t.layering()?;
    let needed = layers.iter().max().map(|m| m + 1).unwrap_or(0);
    if needed > t.length_bound {
        return Err(TwError::LengthBound {
            bound: t.length_bound,
            needed,
        });
    }
    mc_check(t, cat)
}

/// Products with shifted signs, extended multilinearly; each input must be
/// homogeneous in base degree.
fn mu_sigma_multi(
    cat: &AInfCategory,
    us: &[i64],
    objs: &[usize],
    inputs: &[SparseVec],
) -> SparseVec {
    let mut out = mu_multilinear(cat, objs, inputs);
    if out.is_empty() {
        return out;
    }
    let red: Vec<i64> = inputs
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let d = cat.degree(objs[i], objs[i + 1], v[0].0);
            debug_assert!(v
                .iter()
                .all(|&(k, _)| cat.degree(objs[i], objs[i + 1], k) == d));
            d - 1
        })
        .collect();
    if sigma_exponent_for(SHIFT_RULE, us, &red).rem_euclid(2) == 1 {
        scale_vec(&mut out, &-Rat::one());
    }
    out
}

/// Sum of shifted products over all connection paths of length 1..=arity,
/// keyed by (path start, path end).
pub fn mc_residual(
    t: &TwistedComplex,
    cat: &AInfCategory,
) -> BTreeMap<(usize, usize), SparseVec> {
    let bound = cat.max_product_arity();
    let mut acc: BTreeMap<(usize, usize), SparseVec> = BTreeMap::new();
    let adj = t.out_edges();
    // DFS over paths from each start; path entries accumulated in order.
    fn walk(
        t: &TwistedComplex,
        cat: &AInfCategory,
        adj: &[Vec<usize>],
        start: usize,
        node: usize,
        path: &mut Vec<usize>,
        bound: usize,
        acc: &mut BTreeMap<(usize, usize), SparseVec>,
    ) {
        if path.len() >= 1 {
            let nodes: Vec<usize> = std::iter::once(start)
                .chain(path.iter().copied())
                .collect();
            let us: Vec<i64> = nodes.iter().map(|&v| t.summands[v].1).collect();
            let objs: Vec<usize> = nodes.iter().map(|&v| t.summands[v].0).collect();
            let inputs: Vec<SparseVec> = nodes
                .windows(2)
                .map(|w| t.delta[&(w[0], w[1])].clone())
                .collect();
            let term = mu_sigma_multi(cat, &us, &objs, &inputs);
            if !term.is_empty() {
                add_scaled(
                    acc.entry((start, node)).or_default(),
                    &Rat::one(),
                    &term,
                );
            }
        }
        if path.len() == bound {
            return;
        }
        for &w in &adj[node] {
            path.push(w);
            walk(t, cat, adj, start, w, path, bound, acc);
            path.pop();
        }
    }
    for start in 0..t.len() {
        walk(t, cat, &adj, start, start, &mut Vec::new(), bound, &mut acc);
    }
    acc.retain(|_, v| !v.is_empty());
    acc
}

pub fn mc_check(t: &TwistedComplex, cat: &AInfCategory) -> Result<(), TwError> {
    let res = mc_residual(t, cat);
    if let Some((&(src, tgt), v)) = res.iter().next() {
        let (os, _) = t.summands[src];
        let (ot, _) = t.summands[tgt];
        let residual = v
            .iter()
            .map(|(k, c)| format!("{} * {}", c, cat.elem_name(os, ot, *k)))
            .collect::<Vec<_>>()
            .join(" + ");
        return Err(TwError::MaurerCartan { src, tgt, residual });
    }
    Ok(())
}

/// Flat basis of `hom(X, Y)`: triples (source summand, target summand, base
/// element), ordered lexicographically.
#[derive(Debug, Clone)]
pub struct TwHomBasis {
    pub elems: Vec<(usize, usize, usize)>,
    pub degrees: Vec<i64>,
    pub names: Vec<String>,
    pub index: BTreeMap<(usize, usize, usize), usize>,
}

impl TwHomBasis {
    pub fn dim(&self) -> usize {
        self.elems.len()
    }
}

pub fn tw_hom_basis(x: &TwistedComplex, y: &TwistedComplex, cat: &AInfCategory) -> TwHomBasis {
    let mut elems = Vec::new();
    let mut degrees = Vec::new();
    let mut names = Vec::new();
    let mut index = BTreeMap::new();
    for (i, &(ox, ux)) in x.summands.iter().enumerate() {
        for (j, &(oy, uy)) in y.summands.iter().enumerate() {
            for k in 0..cat.hom_dim(ox, oy) {
                index.insert((i, j, k), elems.len());
                elems.push((i, j, k));
                degrees.push(cat.degree(ox, oy, k) + ux - uy);
                names.push(format!("[{}>{}]{}", i, j, cat.elem_name(ox, oy, k)));
            }
        }
    }
    TwHomBasis {
        elems,
        degrees,
        names,
        index,
    }
}

/// Component view of a flat morphism vector: base vectors keyed by
/// (source summand, target summand).
pub fn flat_to_comps(
    flat: &SparseVec,
    basis: &TwHomBasis,
) -> BTreeMap<(usize, usize), SparseVec> {
    let mut out: BTreeMap<(usize, usize), SparseVec> = BTreeMap::new();
    for (i, c) in flat {
        let (s, t, k) = basis.elems[*i];
        out.entry((s, t)).or_default().push((k, c.clone()));
    }
    for v in out.values_mut() {
        v.sort_by_key(|e| e.0);
    }
    out
}

pub fn comps_to_flat(
    comps: &BTreeMap<(usize, usize), SparseVec>,
    basis: &TwHomBasis,
) -> SparseVec {
    let mut out: SparseVec = Vec::new();
    for (&(s, t), v) in comps {
        for (k, c) in v {
            out.push((basis.index[&(s, t, *k)], c.clone()));
        }
    }
    out.sort_by_key(|e| e.0);
    out
}

// Connection paths as edge lists in forward order.
type Path = Vec<(usize, usize)>;

fn paths_from(adj: &[Vec<usize>], start: usize, max_len: usize) -> Vec<Path> {
    let mut out = vec![Vec::new()];
    let mut stack: Vec<(usize, Path)> = vec![(start, Vec::new())];
    while let Some((v, p)) = stack.pop() {
        if p.len() == max_len {
            continue;
        }
        for &w in &adj[v] {
            let mut q = p.clone();
            q.push((v, w));
            out.push(q.clone());
            stack.push((w, q));
        }
    }
    out
}

fn paths_into(radj: &[Vec<usize>], end: usize, max_len: usize) -> Vec<Path> {
    // Walk predecessors, building reversed edge lists, then flip.
    let mut out = vec![Vec::new()];
    let mut stack: Vec<(usize, Path)> = vec![(end, Vec::new())];
    while let Some((v, p)) = stack.pop() {
        if p.len() == max_len {
            continue;
        }
        for &w in &radj[v] {
            let mut q = p.clone();
            q.push((w, v));
            let mut fwd = q.clone();
            fwd.reverse();
            out.push(fwd);
            stack.push((w, q));
        }
    }
    out
}

fn paths_between(adj: &[Vec<usize>], start: usize, end: usize, max_len: usize) -> Vec<Path> {
    let mut out = Vec::new();
    if start == end {
        out.push(Vec::new());
    }
    let mut stack: Vec<(usize, Path)> = vec![(start, Vec::new())];
    while let Some((v, p)) = stack.pop() {
        if p.len() == max_len {
            continue;
        }
        for &w in &adj[v] {
            let mut q = p.clone();
            q.push((v, w));
            if w == end {
                out.push(q.clone());
            }
            stack.push((w, q));
        }
    }
    out
}

/// All product terms of one basis tuple along `chain`, as components keyed
/// (start summand of chain[0], end summand of chain[d], base element).
fn tw_mu_elems(
    cat: &AInfCategory,
    chain: &[&TwistedComplex],
    elems: &[(usize, usize, usize)],
    bound: usize,
) -> BTreeMap<(usize, usize, usize), Rat> {
    let d = elems.len();
    assert!(d >= 1);
    assert_eq!(chain.len(), d + 1);
    let mut acc: BTreeMap<(usize, usize, usize), Rat> = BTreeMap::new();
    if d > bound {
        return acc;
    }
    let max_ins = bound - d;
    // Slot c holds insertion paths inside chain[c].
    let mut slot_paths: Vec<Vec<Path>> = Vec::with_capacity(d + 1);
    slot_paths.push(paths_into(&chain[0].in_edges(), elems[0].0, max_ins));
    for c in 1..d {
        slot_paths.push(paths_between(
            &chain[c].out_edges(),
            elems[c - 1].1,
            elems[c].0,
            max_ins,
        ));
    }
    slot_paths.push(paths_from(&chain[d].out_edges(), elems[d - 1].1, max_ins));

    fn choose(
        slot_paths: &[Vec<Path>],
        slot: usize,
        budget: usize,
        picked: &mut Vec<usize>,
        emit: &mut dyn FnMut(&[usize]),
    ) {
        if slot == slot_paths.len() {
            emit(picked);
            return;
        }
        for (i, p) in slot_paths[slot].iter().enumerate() {
            if p.len() > budget {
                continue;
            }
            picked.push(i);
            choose(slot_paths, slot + 1, budget - p.len(), picked, emit);
            picked.pop();
        }
    }

    let mut emit = |picked: &[usize]| {
        // Nodes along the full composable chain, as (chain index, summand).
        let mut nodes: Vec<(usize, usize)> = Vec::new();
        let mut inputs: Vec<SparseVec> = Vec::new();
        let p0 = &slot_paths[0][picked[0]];
        let start = p0.first().map(|e| e.0).unwrap_or(elems[0].0);
        nodes.push((0, start));
        for &(s, t) in p0 {
            debug_assert_eq!(nodes.last().unwrap().1, s);
            nodes.push((0, t));
            inputs.push(chain[0].delta[&(s, t)].clone());
        }
        for c in 0..d {
            let (_, _, k) = elems[c];
            inputs.push(vec![(k, Rat::one())]);
            nodes.push((c + 1, elems[c].1));
            let pc = &slot_paths[c + 1][picked[c + 1]];
            for &(s, t) in pc {
                debug_assert_eq!(nodes.last().unwrap().1, s);
                nodes.push((c + 1, t));
                inputs.push(chain[c + 1].delta[&(s, t)].clone());
            }
        }
        let us: Vec<i64> = nodes
            .iter()
            .map(|&(ci, si)| chain[ci].summands[si].1)
            .collect();
        let objs: Vec<usize> = nodes
            .iter()
            .map(|&(ci, si)| chain[ci].summands[si].0)
            .collect();
        let term = mu_sigma_multi(cat, &us, &objs, &inputs);
        let end = nodes.last().unwrap().1;
        for (k, c) in term {
            let e = acc.entry((start, end, k)).or_insert_with(Rat::zero);
            *e += c;
        }
    };
    choose(&slot_paths, 0, max_ins, &mut Vec::new(), &mut emit);
    acc.retain(|_, c| !c.is_zero());
    acc
}

/// Multilinear product of flat vectors along `chain`.
fn tw_mu_flat(
    cat: &AInfCategory,
    chain: &[&TwistedComplex],
    bases: &[&TwHomBasis],
    out_basis: &TwHomBasis,
    inputs: &[&SparseVec],
    bound: usize,
) -> SparseVec {
    let d = inputs.len();
    let mut acc: BTreeMap<usize, Rat> = BTreeMap::new();
    fn rec(
        cat: &AInfCategory,
        chain: &[&TwistedComplex],
        bases: &[&TwHomBasis],
        out_basis: &TwHomBasis,
        inputs: &[&SparseVec],
        bound: usize,
        slot: usize,
        picked: &mut Vec<(usize, usize, usize)>,
        coeff: Rat,
        acc: &mut BTreeMap<usize, Rat>,
    ) {
        if slot == inputs.len() {
            for ((s, t, k), c) in tw_mu_elems(cat, chain, picked, bound) {
                let e = acc
                    .entry(out_basis.index[&(s, t, k)])
                    .or_insert_with(Rat::zero);
                *e += &coeff * &c;
            }
            return;
        }
        for (i, c) in inputs[slot] {
            picked.push(bases[slot].elems[*i]);
            rec(
                cat,
                chain,
                bases,
                out_basis,
                inputs,
                bound,
                slot + 1,
                picked,
                &coeff * c,
                acc,
            );
            picked.pop();
        }
    }
    rec(
        cat,
        chain,
        bases,
        out_basis,
        inputs,
        bound,
        0,
        &mut Vec::with_capacity(d),
        Rat::one(),
        &mut acc,
    );
    acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

/// Morphism complex of a pair of twisted complexes.
pub struct TwHom {
    pub complex: GradedComplex,
    pub map: HomComplexMap,
    pub basis: TwHomBasis,
}

/// Hom complex with differential mu^1 plus all connection insertions.
pub fn tw_hom(
    x: &TwistedComplex,
    y: &TwistedComplex,
    cat: &AInfCategory,
) -> Result<TwHom, TwError> {
    validate_tw(x, cat)?;
    validate_tw(y, cat)?;
    let basis = tw_hom_basis(x, y, cat);
    let bound = cat.max_product_arity();
    let mut by_degree: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    let mut of_flat = Vec::with_capacity(basis.dim());
    for (i, &d) in basis.degrees.iter().enumerate() {
        let pos = by_degree.entry(d).or_default();
        of_flat.push((d, pos.len()));
        pos.push(i);
    }
    let dims: BTreeMap<i64, usize> = by_degree.iter().map(|(&d, v)| (d, v.len())).collect();
    let mut diffs: BTreeMap<i64, SparseMat> = BTreeMap::new();
    let chain = [x, y];
    for (&n, idx) in &by_degree {
        let rows = by_degree.get(&(n + 1)).map(|v| v.len()).unwrap_or(0);
        let mut m = SparseMat::zero(rows, idx.len());
        for (col, &flat) in idx.iter().enumerate() {
            let terms = tw_mu_elems(cat, &chain, &[basis.elems[flat]], bound);
            for ((s, t, k), c) in terms {
                let out = basis.index[&(s, t, k)];
                let (d, p) = of_flat[out];
                assert_eq!(d, n + 1, "tw differential must raise degree by one");
                m.add_entry(p, col, c);
            }
        }
        if !m.is_zero() {
            diffs.insert(n, m);
        }
    }
    let complex = GradedComplex::new(dims, diffs).expect("tw differential squares to zero");
    Ok(TwHom {
        complex,
        map: HomComplexMap { by_degree, of_flat },
        basis,
    })
}

/// A-infinity product of `k` composable morphisms between twisted complexes,
/// given as flat vectors; returns a flat vector in `hom(chain[0], chain[k])`.
pub fn tw_product(
    k: usize,
    chain: &[TwistedComplex],
    inputs: &[SparseVec],
    cat: &AInfCategory,
) -> Result<SparseVec, TwError> {
    if inputs.len() != k || chain.len() != k + 1 {
        return Err(TwError::Composability {
            inputs: inputs.len(),
            objects: chain.len(),
        });
    }
    let bases: Vec<TwHomBasis> = (0..k)
        .map(|i| tw_hom_basis(&chain[i], &chain[i + 1], cat))
        .collect();
    for (slot, v) in inputs.iter().enumerate() {
        for &(i, _) in v {
            if i >= bases[slot].dim() {
                return Err(TwError::InputRange {
                    slot,
                    index: i,
                    dim: bases[slot].dim(),
                });
            }
        }
    }
    let out_basis = tw_hom_basis(&chain[0], &chain[k], cat);
    let chain_refs: Vec<&TwistedComplex> = chain.iter().collect();
    let base_refs: Vec<&TwHomBasis> = bases.iter().collect();
    let input_refs: Vec<&SparseVec> = inputs.iter().collect();
    Ok(tw_mu_flat(
        cat,
        &chain_refs,
        &base_refs,
        &out_basis,
        &input_refs,
        cat.max_product_arity(),
    ))
}

/// Identity morphism of `t` as a flat vector: unit components down the
/// diagonal with alternating signs `(-1)^{u_s}`.
pub fn tw_unit(t: &TwistedComplex, cat: &AInfCategory) -> Result<SparseVec, TwError> {
    let basis = tw_hom_basis(t, t, cat);
    let mut out: SparseVec = Vec::new();
    for (s, &(o, u)) in t.summands.iter().enumerate() {
        let e = *cat
            .units
            .get(&o)
            .ok_or(TwError::MissingUnit { object: o })?;
        let c = if u.rem_euclid(2) == 0 {
            Rat::one()
        } else {
            -Rat::one()
        };
        out.push((basis.index[&(s, s, e)], c));
    }
    out.sort_by_key(|e| e.0);
    Ok(out)
}

/// True when the identity class vanishes in cohomology of the endomorphism
/// complex.
pub fn is_contractible(t: &TwistedComplex, cat: &AInfCategory) -> Result<bool, TwError> {
    if t.is_empty() {
        return Ok(true);
    }
    let h = tw_hom(t, t, cat)?;
    let unit = tw_unit(t, cat)?;
    let data = h.complex.cohomology_data();
    let z = h.map.to_degree(0, &unit);
    let coords = data
        .class_coords(0, &z)
        .expect("identity morphism is closed");
    Ok(coords.is_empty())
}

/// Cone of a closed degree-0 morphism: source summands shifted by one,
/// connection extended by the morphism's components.
pub fn tw_cone(
    f: &SparseVec,
    x: &TwistedComplex,
    y: &TwistedComplex,
    cat: &AInfCategory,
) -> Result<TwistedComplex, TwError> {
    let hom = tw_hom(x, y, cat)?;
    for &(i, _) in f {
        if hom.basis.degrees[i] != 0 {
            return Err(TwError::NotDegreeZero);
        }
    }
    let df = tw_mu_flat(
        cat,
        &[x, y],
        &[&hom.basis],
        &hom.basis,
        &[f],
        cat.max_product_arity(),
    );
    if !df.is_empty() {
        return Err(TwError::NotClosed);
    }
    let nx = x.len();
    let mut summands: Vec<(usize, i64)> =
        x.summands.iter().map(|&(o, u)| (o, u + 1)).collect();
    summands.extend_from_slice(&y.summands);
    let mut delta = x.delta.clone();
    for (&(s, t), v) in &y.delta {
        delta.insert((s + nx, t + nx), v.clone());
    }
    for (&(s, t), v) in &flat_to_comps(f, &hom.basis) {
        add_scaled(delta.entry((s, nx + t)).or_default(), &Rat::one(), v);
    }
    delta.retain(|_, v| !v.is_empty());
    let out = TwistedComplex {
        summands,
        delta,
        length_bound: x.length_bound + y.length_bound,
    };
    validate_tw(&out, cat)?;
    Ok(out)
}

/// Morphism components keyed by (source summand, target summand), each a base
/// hom vector.  The flat and component views are interchanged by
/// [`flat_to_comps`] and [`comps_to_flat`].
pub type Components = BTreeMap<(usize, usize), SparseVec>;

// ---------------------------------------------------------------------------
// Reduction

type CompMap = Components;

/// Ordinary composite `g . f` of base morphism vectors along `x -> y -> z`.
fn compose_raw(
    cat: &AInfCategory,
    x: usize,
    y: usize,
    z: usize,
    f: &SparseVec,
    g: &SparseVec,
) -> SparseVec {
    let mut acc: BTreeMap<usize, Rat> = BTreeMap::new();
    for (af, cf) in f {
        let neg = cat.degree(x, y, *af).rem_euclid(2) == 1;
        for (ag, cg) in g {
            for (r, c) in cat.mu(&[x, y, z], &[*af, *ag]) {
                let term = cf * cg * &c;
                let e = acc.entry(r).or_insert_with(Rat::zero);
                if neg {
                    *e -= term;
                } else {
                    *e += term;
                }
            }
        }
    }
    acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

/// Composite of component matrices (raw composition per entry), with summand
/// object tables for the three spaces.
fn compose_comps(
    cat: &AInfCategory,
    f: &CompMap,
    g: &CompMap,
    a: &[(usize, i64)],
    b: &[(usize, i64)],
    c: &[(usize, i64)],
) -> CompMap {
    let mut out: CompMap = BTreeMap::new();
    for (&(s, m1), fv) in f {
        for (&(m2, t), gv) in g {
            if m1 != m2 {
                continue;
            }
            let comp = compose_raw(cat, a[s].0, b[m1].0, c[t].0, fv, gv);
            if !comp.is_empty() {
                add_scaled(out.entry((s, t)).or_default(), &Rat::one(), &comp);
            }
        }
    }
    out.retain(|_, v| !v.is_empty());
    out
}

/// Outcome of unit-pivot cancellation.
pub struct TwReduction {
    pub reduced: TwistedComplex,
    /// Original indices of the retained summands.
    pub kept: Vec<usize>,
    /// Projection onto the reduced model, flat in hom(original, reduced).
    pub pi: SparseVec,
    /// Inclusion of the reduced model, flat in hom(reduced, original).
    pub iota: SparseVec,
}

/// Cancel connection entries that are scalar multiples of a unit between
/// same-object summands, transporting projection and inclusion.  Requires
/// strict units for every summand object.  The returned maps are closed,
/// degree 0, and compose to the identity of the reduced model.
pub fn tw_reduce(t: &TwistedComplex, cat: &AInfCategory) -> Result<TwReduction, TwError> {
    validate_tw(t, cat)?;
    let n = t.len();
    for &(o, _) in &t.summands {
        if !cat.units.contains_key(&o) {
            return Err(TwError::MissingUnit { object: o });
        }
    }
    let unit_vec = |o: usize| -> SparseVec { vec![(cat.units[&o], Rat::one())] };
    // Transformed connection: entry at source s scaled by (-1)^{u_s}.
    let hat = |s: usize, v: &SparseVec| -> SparseVec {
        if t.summands[s].1.rem_euclid(2) == 1 {
            let mut w = v.clone();
            scale_vec(&mut w, &-Rat::one());
            w
        } else {
            v.clone()
        }
    };
    let mut a: CompMap = t
        .delta
        .iter()
        .map(|(&(s, tg), v)| ((s, tg), hat(s, v)))
        .collect();
    let mut alive = vec![true; n];
    let mut phat: CompMap = (0..n)
        .map(|s| ((s, s), unit_vec(t.summands[s].0)))
        .collect();
    let mut ihat: CompMap = phat.clone();
    loop {
        let pivot = a.iter().find_map(|(&(i, j), v)| {
            let (oi, _) = t.summands[i];
            let (oj, _) = t.summands[j];
            if oi == oj
                && v.len() == 1
                && v[0].0 == cat.units[&oi]
                && !a.contains_key(&(i, i))
                && !a.contains_key(&(j, j))
                && !a.contains_key(&(j, i))
            {
                Some((i, j, v[0].1.clone()))
            } else {
                None
            }
        });
        let Some((i, j, c)) = pivot else {
            break;
        };
        let cinv = Rat::one() / &c;
        // Corrections: entries from i (targets l) against entries into j
        // (sources k): a[k -> l] -= (1/c) a[i -> l] . a[k -> j].
        let from_i: Vec<(usize, SparseVec)> = a
            .iter()
            .filter(|(&(s, tg), _)| s == i && tg != j)
            .map(|(&(_, tg), v)| (tg, v.clone()))
            .collect();
        let into_j: Vec<(usize, SparseVec)> = a
            .iter()
            .filter(|(&(s, tg), _)| tg == j && s != i)
            .map(|(&(s, _), v)| (s, v.clone()))
            .collect();
        for &(k, ref kv) in &into_j {
            for &(l, ref lv) in &from_i {
                let comp = compose_raw(
                    cat,
                    t.summands[k].0,
                    t.summands[j].0,
                    t.summands[l].0,
                    kv,
                    lv,
                );
                if comp.is_empty() {
                    continue;
                }
                add_scaled(a.entry((k, l)).or_default(), &-(&cinv), &comp);
            }
        }
        a.retain(|&(s, tg), v| {
            s != i && s != j && tg != i && tg != j && !v.is_empty()
        });
        // Projection step: identity on the survivors, plus j -> l
        // components -(1/c) a[i -> l].
        let mut pstep: CompMap = (0..n)
            .filter(|&s| alive[s] && s != i && s != j)
            .map(|s| ((s, s), unit_vec(t.summands[s].0)))
            .collect();
        for &(l, ref lv) in &from_i {
            let mut w = lv.clone();
            scale_vec(&mut w, &-(&cinv));
            pstep.insert((j, l), w);
        }
        // Inclusion step: identity plus k -> i components -(1/c) a[k -> j].
        let mut istep: CompMap = (0..n)
            .filter(|&s| alive[s] && s != i && s != j)
            .map(|s| ((s, s), unit_vec(t.summands[s].0)))
            .collect();
        for &(k, ref kv) in &into_j {
            let mut w = kv.clone();
            scale_vec(&mut w, &-(&cinv));
            istep.insert((k, i), w);
        }
        phat = compose_comps(cat, &phat, &pstep, &t.summands, &t.summands, &t.summands);
        ihat = compose_comps(cat, &istep, &ihat, &t.summands, &t.summands, &t.summands);
        alive[i] = false;
        alive[j] = false;
    }
    let kept: Vec<usize> = (0..n).filter(|&s| alive[s]).collect();
    let renum: BTreeMap<usize, usize> =
        kept.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    let unhat = |s: usize, v: &SparseVec| -> SparseVec { hat(s, v) };
    let mut delta: BTreeMap<(usize, usize), SparseVec> = BTreeMap::new();
    for (&(s, tg), v) in &a {
        delta.insert((renum[&s], renum[&tg]), unhat(s, v));
    }
    let mut reduced = TwistedComplex {
        summands: kept.iter().map(|&s| t.summands[s]).collect(),
        delta,
        length_bound: 0,
    };
    reduced.length_bound = match reduced.layering() {
        Ok(layers) => layers.iter().max().map(|m| m + 1).unwrap_or(0),
        Err(_) => t.length_bound,
    };
    validate_tw(&reduced, cat)?;
    // Translate the transported maps back: unscale at each source summand.
    let pi_basis = tw_hom_basis(t, &reduced, cat);
    let mut pi_comps: CompMap = BTreeMap::new();
    for (&(s, tg), v) in &phat {
        pi_comps.insert((s, renum[&tg]), unhat(s, v));
    }
    let iota_basis = tw_hom_basis(&reduced, t, cat);
    let mut iota_comps: CompMap = BTreeMap::new();
    for (&(s, tg), v) in &ihat {
        // Source lives in the reduced object; its shift equals the original.
        iota_comps.insert((renum[&s], tg), unhat(s, v));
    }
    Ok(TwReduction {
        reduced,
        kept,
        pi: comps_to_flat(&pi_comps, &pi_basis),
        iota: comps_to_flat(&iota_comps, &iota_basis),
    })
}

// ---------------------------------------------------------------------------
// Exceptional resolutions

/// Ordered base objects with one-dimensional endomorphism cohomology and no
/// backward morphisms in cohomology.
#[derive(Debug, Clone)]
pub struct ExceptionalCollection {
    pub objects: Vec<usize>,
}

pub struct Resolution {
    /// Twisted complex built on shifted copies of the collection objects.
    pub complex: TwistedComplex,
    /// Closed degree-0 quasi-isomorphism in hom(complex, target), flat.
    pub witness: SparseVec,
}

/// Resolve `t` against the collection by a cascade of evaluation cones: for
/// each collection object from last to first, cone off one shifted copy per
/// cohomology class of morphisms into the residue.  The leftover must be
/// contractible; the copies then assemble to a twisted complex
/// quasi-isomorphic to `t`.
pub fn exceptional_resolve(
    t: &TwistedComplex,
    coll: &ExceptionalCollection,
    cat: &AInfCategory,
) -> Result<Resolution, TwError> {
    validate_tw(t, cat)?;
    for (position, &e) in coll.objects.iter().enumerate() {
        let (h, _) = super::hom_complex(cat, e, e);
        let dims = h.cohomology();
        if dims != BTreeMap::from([(0, 1)]) {
            return Err(TwError::NotExceptional {
                position,
                reason: format!("endomorphism cohomology {:?}", dims),
            });
        }
        for &f in &coll.objects[..position] {
            let (h, _) = super::hom_complex(cat, e, f);
            if !h.cohomology().is_empty() {
                return Err(TwError::NotExceptional {
                    position,
                    reason: format!(
                        "backward morphisms to {} in cohomology",
                        cat.object_name(f)
                    ),
                });
            }
        }
    }
    let n_t = t.len();
    let mut r = t.clone();
    for &e in coll.objects.iter().rev() {
        let ep = TwistedComplex::plain(e);
        let h = tw_hom(&ep, &r, cat)?;
        let data = h.complex.cohomology_data();
        let mut m_summands: Vec<(usize, i64)> = Vec::new();
        let mut ev_comps: CompMap = BTreeMap::new();
        for (&deg, reps) in &data.reps {
            for rep in reps {
                let copy = m_summands.len();
                m_summands.push((e, -deg));
                let flat = h.map.to_flat(deg, rep);
                for (&(s, tg), v) in &flat_to_comps(&flat, &h.basis) {
                    debug_assert_eq!(s, 0);
                    let _ = s;
                    ev_comps.insert((copy, tg), v.clone());
                }
            }
        }
        if m_summands.is_empty() {
            continue;
        }
        let m = TwistedComplex {
            summands: m_summands,
            delta: BTreeMap::new(),
            length_bound: 1,
        };
        let basis = tw_hom_basis(&m, &r, cat);
        let ev = comps_to_flat(&ev_comps, &basis);
        r = tw_cone(&ev, &m, &r, cat)?;
    }
    if !is_contractible(&r, cat)? {
        return Err(TwError::NotGenerated);
    }
    let m_total = r.len() - n_t;
    let x = TwistedComplex {
        summands: r.summands[..m_total]
            .iter()
            .map(|&(o, u)| (o, u - 1))
            .collect(),
        delta: r
            .delta
            .iter()
            .filter(|(&(s, tg), _)| s < m_total && tg < m_total)
            .map(|(&k, v)| (k, v.clone()))
            .collect(),
        length_bound: coll.objects.len().max(1),
    };
    validate_tw(&x, cat)?;
    let w_basis = tw_hom_basis(&x, t, cat);
    let mut w_comps: CompMap = BTreeMap::new();
    for (&(s, tg), v) in &r.delta {
        if s < m_total && tg >= m_total {
            w_comps.insert((s, tg - m_total), v.clone());
        }
    }
    Ok(Resolution {
        complex: x,
        witness: comps_to_flat(&w_comps, &w_basis),
    })
}

// ---------------------------------------------------------------------------
// Materialized product tables

/// Product-table category of the given twisted complexes over `base`:
/// morphism spaces are the flat hom bases, with all products up to the base
/// arity bound evaluated through connection insertions.  Units are not
/// registered (identities of twisted complexes are combinations, not basis
/// elements); see `tw_unit`.
pub fn tw_category(
    objects: &[TwistedComplex],
    names: &[String],
    base: &AInfCategory,
) -> Result<AInfCategory, TwError> {
    assert_eq!(objects.len(), names.len());
    for t in objects {
        validate_tw(t, base)?;
    }
    let n = objects.len();
    let bound = base.max_product_arity();
    let mut out = AInfCategory::new(names.to_vec());
    let mut bases: BTreeMap<(usize, usize), TwHomBasis> = BTreeMap::new();
    for x in 0..n {
        for y in 0..n {
            let b = tw_hom_basis(&objects[x], &objects[y], base);
            if b.dim() > 0 {
                out.set_hom(x, y, b.degrees.clone(), b.names.clone());
            }
            bases.insert((x, y), b);
        }
    }
    // All chains of length d+1 over the object set, cartesian product.
    for d in 1..=bound {
        let mut chain = vec![0usize; d + 1];
        loop {
            let objs: Vec<&TwistedComplex> = chain.iter().map(|&i| &objects[i]).collect();
            let pair_bases: Vec<&TwHomBasis> =
                (0..d).map(|i| &bases[&(chain[i], chain[i + 1])]).collect();
            let out_basis = &bases[&(chain[0], chain[d])];
            let mut tuple = vec![0usize; d];
            if pair_bases.iter().all(|b| b.dim() > 0) {
                'tuples: loop {
                    let elems: Vec<(usize, usize, usize)> = (0..d)
                        .map(|i| pair_bases[i].elems[tuple[i]])
                        .collect();
                    let terms = tw_mu_elems(base, &objs, &elems, bound);
                    if !terms.is_empty() {
                        let flat: SparseVec = terms
                            .into_iter()
                            .map(|((s, t, k), c)| (out_basis.index[&(s, t, k)], c))
                            .collect::<BTreeMap<_, _>>()
                            .into_iter()
                            .collect();
                        out.add_product(&chain, &tuple, flat);
                    }
                    for i in (0..d).rev() {
                        tuple[i] += 1;
                        if tuple[i] < pair_bases[i].dim() {
                            continue 'tuples;
                        }
                        tuple[i] = 0;
                        if i == 0 {
                            break 'tuples;
                        }
                    }
                }
            }
            let mut pos = d + 1;
            for i in (0..=d).rev() {
                chain[i] += 1;
                if chain[i] < n {
                    pos = i;
                    break;
                }
                chain[i] = 0;
            }
            if pos == d + 1 {
                break;
            }
        }
        if n == 0 {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ainf::check_ainfty;
    use crate::linalg::rat;

    /// Two objects O, O(1); hom(O, O(1)) spanned by x, y in degree 0.
    fn p1_base() -> AInfCategory {
        let mut cat = AInfCategory::new(vec!["O".into(), "O1".into()]);
        cat.set_hom(0, 0, vec![0], vec!["e".into()]);
        cat.set_hom(1, 1, vec![0], vec!["e".into()]);
        cat.set_hom(0, 1, vec![0, 0], vec!["x".into(), "y".into()]);
        cat.units.insert(0, 0);
        cat.units.insert(1, 0);
        cat.install_strict_units();
        cat.validate().unwrap();
        cat
    }

    /// Two-term complex O -> O(1) with entry b*x - a*y.
    fn sky(a: i64, b: i64) -> TwistedComplex {
        let mut v: SparseVec = Vec::new();
        if b != 0 {
            v.push((0, rat(b)));
        }
        if a != 0 {
            v.push((1, rat(-a)));
        }
        TwistedComplex {
            summands: vec![(0, 1), (1, 0)],
            delta: BTreeMap::from([((0, 1), v)]),
            length_bound: 2,
        }
    }

    #[test]
    fn validation_catches_bad_degree_and_cycles() {
        let cat = p1_base();
        assert!(validate_tw(&sky(0, 1), &cat).is_ok());
        let bad = TwistedComplex {
            summands: vec![(0, 0), (1, 0)],
            delta: BTreeMap::from([((0, 1), vec![(0, rat(1))])]),
            length_bound: 2,
        };
        assert!(matches!(
            validate_tw(&bad, &cat),
            Err(TwError::EntryDegree { found: 0, .. })
        ));
        // A cycle needs entries of base degree 1; use a one-object base with
        // a degree-1 endomorphism.
        let mut loopy = AInfCategory::new(vec!["A".into()]);
        loopy.set_hom(0, 0, vec![0, 1], vec!["e".into(), "z".into()]);
        let cyc = TwistedComplex {
            summands: vec![(0, 0), (0, 0)],
            delta: BTreeMap::from([
                ((0, 1), vec![(1, rat(1))]),
                ((1, 0), vec![(1, rat(1))]),
            ]),
            length_bound: 2,
        };
        assert!(matches!(
            validate_tw(&cyc, &loopy),
            Err(TwError::Cyclic { .. })
        ));
    }

    #[test]
    fn maurer_cartan_violation_detected() {
        let cat = p1_base();
        // O[2] -> O(1)[1] -> O(1)[0] composes to a nonzero path product.
        let bad = TwistedComplex {
            summands: vec![(0, 2), (1, 1), (1, 0)],
            delta: BTreeMap::from([
                ((0, 1), vec![(0, rat(1))]),
                ((1, 2), vec![(0, rat(1))]),
            ]),
            length_bound: 3,
        };
        assert!(matches!(
            validate_tw(&bad, &cat),
            Err(TwError::MaurerCartan { src: 0, tgt: 2, .. })
        ));
    }

    #[test]
    fn plain_hom_matches_base() {
        let cat = p1_base();
        let h = tw_hom(&TwistedComplex::plain(0), &TwistedComplex::plain(1), &cat).unwrap();
        assert_eq!(h.complex.cohomology(), BTreeMap::from([(0, 2)]));
        assert_eq!(h.basis.dim(), 2);
    }

    #[test]
    fn skyscraper_hom_dimensions() {
        let cat = p1_base();
        let o = TwistedComplex::plain(0);
        let s01 = sky(0, 1);
        let h = tw_hom(&o, &s01, &cat).unwrap();
        assert_eq!(h.complex.dims(), &BTreeMap::from([(-1, 1), (0, 2)]));
        assert_eq!(h.complex.cohomology(), BTreeMap::from([(0, 1)]));
        let h = tw_hom(&s01, &o, &cat).unwrap();
        assert_eq!(h.complex.cohomology(), BTreeMap::from([(1, 1)]));
        let h = tw_hom(&s01, &s01, &cat).unwrap();
        assert_eq!(h.complex.cohomology(), BTreeMap::from([(0, 1), (1, 1)]));
        // Identity class survives: the unit is closed and not a boundary.
        let unit = tw_unit(&s01, &cat).unwrap();
        let data = h.complex.cohomology_data();
        let coords = data.class_coords(0, &h.map.to_degree(0, &unit)).unwrap();
        assert_eq!(coords.len(), 1);
        // Distinct points have no morphisms either way.
        let s11 = sky(1, 1);
        let h = tw_hom(&s01, &s11, &cat).unwrap();
        assert!(h.complex.cohomology().is_empty());
        let h = tw_hom(&s11, &s01, &cat).unwrap();
        assert!(h.complex.cohomology().is_empty());
    }

    #[test]
    fn materialized_category_passes_relations_and_units() {
        let cat = p1_base();
        let objects = vec![TwistedComplex::plain(0), TwistedComplex::plain(1), sky(0, 1)];
        let names = vec!["O".into(), "O1".into(), "sky0".into()];
        let twc = tw_category(&objects, &names, &cat).unwrap();
        twc.validate().unwrap();
        check_ainfty(&twc, 3, None).unwrap();
        // Unit axioms against the diagonal unit vectors.
        let units: Vec<SparseVec> = objects
            .iter()
            .map(|t| tw_unit(t, &cat).unwrap())
            .collect();
        for x in 0..objects.len() {
            for y in 0..objects.len() {
                let dim = twc.hom_dim(x, y);
                for k in 0..dim {
                    let f = vec![(k, rat(1))];
                    let pre = super::super::mu_multilinear(
                        &twc,
                        &[x, x, y],
                        &[units[x].clone(), f.clone()],
                    );
                    assert_eq!(pre, f, "unit precomposition at ({}, {}, {})", x, y, k);
                    let post = super::super::mu_multilinear(
                        &twc,
                        &[x, y, y],
                        &[f.clone(), units[y].clone()],
                    );
                    let want = if twc.degree(x, y, k).rem_euclid(2) == 0 {
                        f.clone()
                    } else {
                        vec![(k, rat(-1))]
                    };
                    assert_eq!(post, want, "unit postcomposition at ({}, {}, {})", x, y, k);
                }
            }
        }
    }

    #[test]
    fn cone_of_section_is_skyscraper() {
        let cat = p1_base();
        let o = TwistedComplex::plain(0);
        let o1 = TwistedComplex::plain(1);
        let basis = tw_hom_basis(&o, &o1, &cat);
        let f = vec![(basis.index[&(0, 0, 0)], rat(1))]; // x
        let cone = tw_cone(&f, &o, &o1, &cat).unwrap();
        assert_eq!(cone, sky(0, 1));
        assert_eq!(cone.length(), 2);
        assert!(cone.length_bound <= o.length_bound + o1.length_bound);
    }

    #[test]
    fn cone_rejects_non_closed_morphisms() {
        let cat = p1_base();
        let s01 = sky(0, 1);
        let o1 = TwistedComplex::plain(1);
        let basis = tw_hom_basis(&s01, &o1, &cat);
        // The unit component on the O(1) summand is degree 0 but not closed.
        let f = vec![(basis.index[&(1, 0, 0)], rat(1))];
        assert!(matches!(
            tw_cone(&f, &s01, &o1, &cat),
            Err(TwError::NotClosed)
        ));
    }

    #[test]
    fn products_compose_and_vanish_through_skyscrapers() {
        let cat = p1_base();
        let o = TwistedComplex::plain(0);
        let o1 = TwistedComplex::plain(1);
        // delta = 0 on both sides: product equals the base mu^2.
        let e = vec![(0, rat(1))];
        let x = vec![(0, rat(1))];
        let got = tw_product(
            2,
            &[o.clone(), o.clone(), o1.clone()],
            &[e, x.clone()],
            &cat,
        )
        .unwrap();
        assert_eq!(got, vec![(0, rat(1))]);
        // O -> sky -> O[1] composes to zero.
        let s01 = sky(0, 1);
        let o_shift = o.shift(1);
        let into = tw_hom(&o, &s01, &cat).unwrap();
        let outof = tw_hom(&s01, &o_shift, &cat).unwrap();
        let into_data = into.complex.cohomology_data();
        let outof_data = outof.complex.cohomology_data();
        for f in &into_data.reps[&0] {
            for g in &outof_data.reps[&0] {
                let got = tw_product(
                    2,
                    &[o.clone(), s01.clone(), o_shift.clone()],
                    &[into.map.to_flat(0, f), outof.map.to_flat(0, g)],
                    &cat,
                )
                .unwrap();
                assert!(got.is_empty());
            }
        }
        assert!(matches!(
            tw_product(2, &[o.clone(), o1.clone()], &[vec![]], &cat),
            Err(TwError::Composability { .. })
        ));
    }

    #[test]
    fn reduce_cancels_unit_pivots() {
        let cat = p1_base();
        // Cone of the identity on O: contractible, reduces to nothing.
        let o = TwistedComplex::plain(0);
        let unit = tw_unit(&o, &cat).unwrap();
        let cone = tw_cone(&unit, &o, &o, &cat).unwrap();
        let red = tw_reduce(&cone, &cat).unwrap();
        assert!(red.reduced.is_empty());
        assert!(is_contractible(&cone, &cat).unwrap());
        // Evaluation cone from the resolution cascade: reduces to O[-1].
        let t = TwistedComplex {
            summands: vec![(1, 1), (0, 1), (1, 0)],
            delta: BTreeMap::from([
                ((0, 2), vec![(0, rat(1))]),
                ((1, 2), vec![(0, rat(1))]),
            ]),
            length_bound: 2,
        };
        let red = tw_reduce(&t, &cat).unwrap();
        assert_eq!(red.reduced.summands, vec![(0, 1)]);
        assert!(red.reduced.delta.is_empty());
        assert_eq!(red.kept, vec![1]);
        // Transported maps are closed, degree 0, and compose to the identity.
        let pi_basis = tw_hom_basis(&t, &red.reduced, &cat);
        for &(i, _) in &red.pi {
            let (s, tg, k) = pi_basis.elems[i];
            let (os, us) = t.summands[s];
            let (ot, ut) = red.reduced.summands[tg];
            assert_eq!(cat.degree(os, ot, k) + us - ut, 0);
        }
        let dpi = tw_product(1, &[t.clone(), red.reduced.clone()], &[red.pi.clone()], &cat);
        // mu^1 in hom(t, reduced) via a chain of one input needs both objects.
        assert!(dpi.unwrap().is_empty());
        let diota =
            tw_product(1, &[red.reduced.clone(), t.clone()], &[red.iota.clone()], &cat);
        assert!(diota.unwrap().is_empty());
        let composite = tw_product(
            2,
            &[red.reduced.clone(), t.clone(), red.reduced.clone()],
            &[red.iota.clone(), red.pi.clone()],
            &cat,
        )
        .unwrap();
        assert_eq!(composite, tw_unit(&red.reduced, &cat).unwrap());
        // A non-unit entry is left alone.
        let red = tw_reduce(&sky(0, 1), &cat).unwrap();
        assert_eq!(red.reduced, sky(0, 1));
    }

    #[test]
    fn resolve_skyscraper_against_line_bundles() {
        let cat = p1_base();
        let coll = ExceptionalCollection {
            objects: vec![0, 1],
        };
        let res = exceptional_resolve(&sky(0, 1), &coll, &cat).unwrap();
        assert_eq!(res.complex.summands, vec![(0, 1), (1, 0)]);
        assert_eq!(res.complex.delta.len(), 1);
        let entry = &res.complex.delta[&(0, 1)];
        assert_eq!(entry.len(), 1);
        assert_eq!(entry[0].0, 0); // multiple of x
        assert!(res.complex.length() <= 2);
        // The witness is a quasi-isomorphism: its cone is contractible.
        let cone = tw_cone(&res.witness, &res.complex, &sky(0, 1), &cat).unwrap();
        assert!(is_contractible(&cone, &cat).unwrap());
    }

    #[test]
    fn resolve_collection_members_and_shifts() {
        let cat = p1_base();
        let coll = ExceptionalCollection {
            objects: vec![0, 1],
        };
        let res = exceptional_resolve(&TwistedComplex::plain(1), &coll, &cat).unwrap();
        assert_eq!(res.complex.summands, vec![(1, 0)]);
        assert!(res.complex.delta.is_empty());
        let shifted = TwistedComplex::shifted(1, 3);
        let res = exceptional_resolve(&shifted, &coll, &cat).unwrap();
        assert_eq!(res.complex.summands, vec![(1, 3)]);
        // A single line bundle does not generate the skyscraper.
        let small = ExceptionalCollection { objects: vec![0] };
        assert!(matches!(
            exceptional_resolve(&sky(0, 1), &small, &cat),
            Err(TwError::NotGenerated)
        ));
    }

    #[test]
    fn relabeling_preserves_hom_cohomology() {
        let cat = p1_base();
        let s01 = sky(0, 1);
        let flipped = s01.relabeled(&[1, 0]);
        assert!(validate_tw(&flipped, &cat).is_ok());
        let probes = [TwistedComplex::plain(0), TwistedComplex::plain(1), sky(1, 1)];
        for p in &probes {
            assert_eq!(
                tw_hom(p, &s01, &cat).unwrap().complex.cohomology(),
                tw_hom(p, &flipped, &cat).unwrap().complex.cohomology()
            );
            assert_eq!(
                tw_hom(&s01, p, &cat).unwrap().complex.cohomology(),
                tw_hom(&flipped, p, &cat).unwrap().complex.cohomology()
            );
        }
        assert_eq!(
            tw_hom(&flipped, &flipped, &cat).unwrap().complex.cohomology(),
            BTreeMap::from([(0, 1), (1, 1)])
        );
    }
}
