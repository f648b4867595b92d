//! Quotients of twisted-complex categories by a finite generator set,
//! presented through length-filtered word complexes.
//!
//! A word of length `k` from `K` to `L` is a tensor string
//! `x_k ⊗ x_{k-1} ⊗ ... ⊗ x_0` whose factors pass through `k` intermediate
//! stops drawn from the generator set; its total degree is the sum of the
//! factor degrees minus `k`.  The differential applies the twisted-complex
//! products to every contiguous substring of a word, and composition applies
//! them to every substring spanning the word junctions.  Koszul signs run
//! over reduced degrees of the first-applied prefix, the same convention the
//! relation checker uses; under it the reduced degree of a word is the sum
//! of the reduced degrees of its factors, so the stop count never enters a
//! sign.
//!
//! Two presentations of each hom complex are provided: [`quotient_hom`]
//! materializes the full word basis (intended for small truncations, where
//! products and relation checks run), while [`QuotientModel`] first
//! contracts every factor complex onto its cohomology and transports the
//! differential through the contraction, which keeps large truncations small
//! enough for growth measurements and filtration-level searches.

use crate::ainf::tw::{
    tw_hom, tw_product, validate_tw, TwError, TwHom, TwistedComplex,
};
use crate::ainf::{AInfCategory, AInfOps};
/// Horizon extension used to decide whether a sampled value has stabilized.
/// Localization models grow steeply with the truncation (every extra level
/// multiplies the class-word count), so the window is kept tight; the colimit
/// side judges stability over a wider trailing window because its models are
/// cheap to extend.
const STABILITY_WINDOW: usize = 1;
use crate::complexes::{ComplexError, FilteredComplex, FilteredMap, GradedComplex, GradedMap};
use crate::growth::{GrowthError, GrowthFunction};
use crate::linalg::{add_scaled, column_reduce, ColumnReduction, Rat, SparseMat, SparseVec};
use num::{One, Zero};
use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

/// Finite collection of twisted complexes to quotient by, together with the
/// largest connection-layer count among its members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorSet {
    pub members: Vec<TwistedComplex>,
    /// Max layer count over members; the generation time of splitting maps.
    pub length_bound: usize,
}

impl GeneratorSet {
    pub fn new(members: Vec<TwistedComplex>) -> Self {
        let length_bound = members.iter().map(|m| m.length()).max().unwrap_or(0);
        GeneratorSet {
            members,
            length_bound,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn validate(&self, cat: &AInfCategory) -> Result<(), TwError> {
        for m in &self.members {
            validate_tw(m, cat)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum LocalizationError {
    #[error(transparent)]
    Tw(#[from] TwError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
    #[error("word of length {needed} exceeds the truncation {truncation}")]
    TruncationOverflow { needed: usize, truncation: usize },
    #[error("input at degree {degree} is not closed")]
    NotClosed { degree: i64 },
    #[error("word uses stop {stop} or factor {factor} outside the enumerated basis")]
    UnknownWord { stop: usize, factor: usize },
    #[error("base generator {member} is not a plain unshifted object")]
    NotPlain { member: usize },
    #[error("refined generator {member} has a summand outside the base set")]
    SummandOutside { member: usize },
    #[error("refined set does not contain base generator {member}")]
    MissingBaseGenerator { member: usize },
    #[error("generator {member} has {found} layers, above the declared bound {bound}")]
    ExceedsBound {
        member: usize,
        found: usize,
        bound: usize,
    },
}

/// Basis word of a quotient hom complex: the generator indices of its
/// intermediate stops and one hom-basis index per factor, first applied
/// first.  `factors.len() == stops.len() + 1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    pub stops: Vec<usize>,
    pub factors: Vec<usize>,
}

impl Word {
    pub fn length(&self) -> usize {
        self.stops.len()
    }
}

/// Sparse linear combination of words, keyed canonically.
pub type WordVec = BTreeMap<Word, Rat>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Node {
    Obj(usize),
    Stop(usize),
}

type BlockKey = (Vec<Node>, Vec<usize>);

/// Word calculus over one set of endpoint objects and one generator set:
/// hom bases for every node pair plus a memo for substring products.
struct WordEngine {
    cat: AInfCategory,
    objects: Vec<TwistedComplex>,
    gens: Vec<TwistedComplex>,
    homs: BTreeMap<(Node, Node), TwHom>,
    memo: RefCell<HashMap<BlockKey, SparseVec>>,
}

impl WordEngine {
    fn new(
        cat: &AInfCategory,
        objects: Vec<TwistedComplex>,
        gens: &[TwistedComplex],
    ) -> Result<Self, TwError> {
        let mut nodes: Vec<Node> = (0..objects.len()).map(Node::Obj).collect();
        nodes.extend((0..gens.len()).map(Node::Stop));
        let pick = |n: Node| -> &TwistedComplex {
            match n {
                Node::Obj(i) => &objects[i],
                Node::Stop(a) => &gens[a],
            }
        };
        let mut homs = BTreeMap::new();
        for &a in &nodes {
            for &b in &nodes {
                homs.insert((a, b), tw_hom(pick(a), pick(b), cat)?);
            }
        }
        Ok(WordEngine {
            cat: cat.clone(),
            objects,
            gens: gens.to_vec(),
            homs,
            memo: RefCell::new(HashMap::new()),
        })
    }

    fn node_complex(&self, n: Node) -> &TwistedComplex {
        match n {
            Node::Obj(i) => &self.objects[i],
            Node::Stop(a) => &self.gens[a],
        }
    }

    fn hom(&self, a: Node, b: Node) -> &TwHom {
        &self.homs[&(a, b)]
    }

    /// Node chain `Obj(s), Stop.., Obj(t)` of a word between objects.
    fn nodes(&self, s: usize, t: usize, stops: &[usize]) -> Vec<Node> {
        let mut out = Vec::with_capacity(stops.len() + 2);
        out.push(Node::Obj(s));
        out.extend(stops.iter().map(|&a| Node::Stop(a)));
        out.push(Node::Obj(t));
        out
    }

    fn factor_degree(&self, a: Node, b: Node, idx: usize) -> i64 {
        self.hom(a, b).basis.degrees[idx]
    }

    fn word_degree(&self, s: usize, t: usize, w: &Word) -> i64 {
        let nodes = self.nodes(s, t, &w.stops);
        let sum: i64 = (0..w.factors.len())
            .map(|i| self.factor_degree(nodes[i], nodes[i + 1], w.factors[i]))
            .sum();
        sum - w.stops.len() as i64
    }

    fn check_word(&self, s: usize, t: usize, w: &Word) -> Result<(), LocalizationError> {
        let bad = |stop: usize, factor: usize| LocalizationError::UnknownWord { stop, factor };
        if w.factors.len() != w.stops.len() + 1 {
            return Err(bad(w.stops.len(), w.factors.len()));
        }
        if let Some(&a) = w.stops.iter().find(|&&a| a >= self.gens.len()) {
            return Err(bad(a, 0));
        }
        let nodes = self.nodes(s, t, &w.stops);
        for i in 0..w.factors.len() {
            if w.factors[i] >= self.hom(nodes[i], nodes[i + 1]).basis.dim() {
                return Err(bad(0, w.factors[i]));
            }
        }
        Ok(())
    }

    /// All words between `Obj(s)` and `Obj(t)` of length at most `p`, in a
    /// fixed enumeration order.
    fn enumerate_words(&self, s: usize, t: usize, p: usize) -> Vec<Word> {
        let g = self.gens.len();
        let mut out = Vec::new();
        for k in 0..=p {
            if k > 0 && g == 0 {
                break;
            }
            let mut stops = vec![0usize; k];
            'shapes: loop {
                let nodes = self.nodes(s, t, &stops);
                let dims: Vec<usize> = (0..=k)
                    .map(|i| self.hom(nodes[i], nodes[i + 1]).basis.dim())
                    .collect();
                if dims.iter().all(|&d| d > 0) {
                    let mut fac = vec![0usize; k + 1];
                    loop {
                        out.push(Word {
                            stops: stops.clone(),
                            factors: fac.clone(),
                        });
                        let mut i = 0;
                        while i <= k {
                            fac[i] += 1;
                            if fac[i] < dims[i] {
                                break;
                            }
                            fac[i] = 0;
                            i += 1;
                        }
                        if i > k {
                            break;
                        }
                    }
                }
                if k == 0 {
                    break;
                }
                let mut i = 0;
                loop {
                    if i == k {
                        break 'shapes;
                    }
                    stops[i] += 1;
                    if stops[i] < g {
                        break;
                    }
                    stops[i] = 0;
                    i += 1;
                }
            }
        }
        out
    }

    /// Memoized twisted-complex product of one contiguous substring of
    /// factors, given its node chain.
    fn block(&self, nodes: &[Node], idxs: &[usize]) -> Result<SparseVec, TwError> {
        let key = (nodes.to_vec(), idxs.to_vec());
        if let Some(v) = self.memo.borrow().get(&key) {
            return Ok(v.clone());
        }
        let chain: Vec<TwistedComplex> =
            nodes.iter().map(|&n| self.node_complex(n).clone()).collect();
        let inputs: Vec<SparseVec> = idxs.iter().map(|&i| vec![(i, Rat::one())]).collect();
        let out = tw_product(idxs.len(), &chain, &inputs, &self.cat)?;
        self.memo.borrow_mut().insert(key, out.clone());
        Ok(out)
    }

    /// The quotient operation on a composable tuple of basis words along the
    /// object chain, inputs first applied first.  `min_block` restricts to
    /// substring products of at least that many factors: 1 gives the full
    /// differential for a single input, 2 its stop-consuming part only.
    fn mu_words(
        &self,
        chain: &[usize],
        inputs: &[&Word],
        min_block: usize,
    ) -> Result<WordVec, LocalizationError> {
        let n = inputs.len();
        assert!(n >= 1 && chain.len() == n + 1);
        let first = inputs[0];
        let last = inputs[n - 1];
        let k1 = first.stops.len();
        let kn = last.stops.len();
        let node_lists: Vec<Vec<Node>> = inputs
            .iter()
            .enumerate()
            .map(|(i, w)| self.nodes(chain[i], chain[i + 1], &w.stops))
            .collect();
        let mut acc: WordVec = BTreeMap::new();
        let mut prefix = 0i64;
        for a in 0..=k1 {
            let ends: Vec<usize> = if n == 1 {
                (a..=k1).collect()
            } else {
                (0..=kn).collect()
            };
            for c in ends {
                let (bn, bi): (Vec<Node>, Vec<usize>) = if n == 1 {
                    (
                        node_lists[0][a..=c + 1].to_vec(),
                        first.factors[a..=c].to_vec(),
                    )
                } else {
                    let mut bn = node_lists[0][a..].to_vec();
                    let mut bi = first.factors[a..].to_vec();
                    for i in 1..n - 1 {
                        bn.extend_from_slice(&node_lists[i][1..]);
                        bi.extend_from_slice(&inputs[i].factors);
                    }
                    bn.extend_from_slice(&node_lists[n - 1][1..=c + 1]);
                    bi.extend_from_slice(&last.factors[..=c]);
                    (bn, bi)
                };
                if bi.len() < min_block {
                    continue;
                }
                let out = self.block(&bn, &bi)?;
                if out.is_empty() {
                    continue;
                }
                let negate = prefix.rem_euclid(2) == 1;
                let mut stops: Vec<usize> = first.stops[..a].to_vec();
                stops.extend_from_slice(&last.stops[c..]);
                let head: Vec<usize> = first.factors[..a].to_vec();
                let tail: &[usize] = &last.factors[c + 1..];
                for (idx, co) in &out {
                    let mut factors = head.clone();
                    factors.push(*idx);
                    factors.extend_from_slice(tail);
                    let w = Word {
                        stops: stops.clone(),
                        factors,
                    };
                    let e = acc.entry(w).or_insert_with(Rat::zero);
                    if negate {
                        *e -= co;
                    } else {
                        *e += co;
                    }
                }
            }
            if a < k1 {
                prefix += self.factor_degree(node_lists[0][a], node_lists[0][a + 1], first.factors[a]) - 1;
            }
        }
        acc.retain(|_, v| !v.is_zero());
        Ok(acc)
    }

    /// `mu_words` extended multilinearly over word vectors.
    fn mu_word_vecs(
        &self,
        chain: &[usize],
        inputs: &[&WordVec],
        min_block: usize,
        truncation: usize,
    ) -> Result<WordVec, LocalizationError> {
        let mut acc: WordVec = BTreeMap::new();
        let mut picked: Vec<(&Word, Rat)> = Vec::new();
        self.mu_vec_rec(chain, inputs, min_block, truncation, &mut picked, &mut acc)?;
        acc.retain(|_, v| !v.is_zero());
        Ok(acc)
    }

    fn mu_vec_rec<'w>(
        &self,
        chain: &[usize],
        inputs: &[&'w WordVec],
        min_block: usize,
        truncation: usize,
        picked: &mut Vec<(&'w Word, Rat)>,
        acc: &mut WordVec,
    ) -> Result<(), LocalizationError> {
        if picked.len() == inputs.len() {
            let needed: usize = picked.iter().map(|(w, _)| w.length()).sum();
            if needed > truncation {
                return Err(LocalizationError::TruncationOverflow {
                    needed,
                    truncation,
                });
            }
            let coeff = picked
                .iter()
                .fold(Rat::one(), |acc, (_, c)| &acc * c);
            let words: Vec<&Word> = picked.iter().map(|(w, _)| *w).collect();
            for (w, v) in self.mu_words(chain, &words, min_block)? {
                let e = acc.entry(w).or_insert_with(Rat::zero);
                *e += &coeff * &v;
            }
            return Ok(());
        }
        let slot = picked.len();
        for (w, c) in inputs[slot].iter() {
            picked.push((w, c.clone()));
            let r = self.mu_vec_rec(chain, inputs, min_block, truncation, picked, acc);
            picked.pop();
            r?;
        }
        Ok(())
    }
}

/// Collect `(word, coefficient)` pairs into a canonical word combination.
pub fn to_word_vec(entries: &[(Word, Rat)]) -> WordVec {
    let mut out: WordVec = BTreeMap::new();
    for (w, c) in entries {
        let e = out.entry(w.clone()).or_insert_with(Rat::zero);
        *e += c;
    }
    out.retain(|_, v| !v.is_zero());
    out
}

/// Truncated hom complex of the quotient category, on the full word basis.
pub struct QuotientHom {
    pub gens: GeneratorSet,
    pub truncation: usize,
    engine: WordEngine,
    words: BTreeMap<i64, Vec<Word>>,
    index: BTreeMap<Word, (i64, usize)>,
    filtered: FilteredComplex,
}

/// Quotient hom complex from `k_obj` to `l_obj`, truncated at word length
/// `p`, filtered by word length.  Length zero recovers the twisted hom
/// complex on the nose, as does an empty generator set at any truncation.
pub fn quotient_hom(
    k_obj: &TwistedComplex,
    l_obj: &TwistedComplex,
    gens: &GeneratorSet,
    p: usize,
    cat: &AInfCategory,
) -> Result<QuotientHom, LocalizationError> {
    gens.validate(cat)?;
    let engine = WordEngine::new(cat, vec![k_obj.clone(), l_obj.clone()], &gens.members)?;
    let list = engine.enumerate_words(0, 1, p);
    let mut words: BTreeMap<i64, Vec<Word>> = BTreeMap::new();
    for w in list {
        let d = engine.word_degree(0, 1, &w);
        words.entry(d).or_default().push(w);
    }
    let (filtered, index) = assemble(&words, |w| {
        engine.mu_words(&[0, 1], &[w], 1)
    })?;
    Ok(QuotientHom {
        gens: gens.clone(),
        truncation: p,
        engine,
        words,
        index,
        filtered,
    })
}

/// Build the filtered complex over an enumerated word basis from a
/// word-level differential.
fn assemble<F>(
    words: &BTreeMap<i64, Vec<Word>>,
    mut diff_of: F,
) -> Result<(FilteredComplex, BTreeMap<Word, (i64, usize)>), LocalizationError>
where
    F: FnMut(&Word) -> Result<WordVec, LocalizationError>,
{
    let mut index = BTreeMap::new();
    for (&n, ws) in words {
        for (i, w) in ws.iter().enumerate() {
            index.insert(w.clone(), (n, i));
        }
    }
    let mut dims = BTreeMap::new();
    let mut levels: BTreeMap<i64, Vec<u32>> = BTreeMap::new();
    for (&n, ws) in words {
        if ws.is_empty() {
            continue;
        }
        dims.insert(n, ws.len());
        levels.insert(n, ws.iter().map(|w| w.length() as u32).collect());
    }
    let mut diffs: BTreeMap<i64, SparseMat> = BTreeMap::new();
    for (&n, ws) in words {
        let rows = words.get(&(n + 1)).map_or(0, |v| v.len());
        if rows == 0 || ws.is_empty() {
            continue;
        }
        let mut m = SparseMat::zero(rows, ws.len());
        let mut any = false;
        for (j, w) in ws.iter().enumerate() {
            for (out_w, c) in diff_of(w)? {
                let &(dn, i) = index
                    .get(&out_w)
                    .expect("differential output stays in the enumerated basis");
                assert_eq!(dn, n + 1, "differential output has the wrong degree");
                m.add_entry(i, j, c);
                any = true;
            }
        }
        if any {
            diffs.insert(n, m);
        }
    }
    let total = GradedComplex::new(dims, diffs)?;
    let filtered = FilteredComplex::from_levels(total, levels)?;
    Ok((filtered, index))
}

impl QuotientHom {
    pub fn filtered(&self) -> &FilteredComplex {
        &self.filtered
    }

    pub fn total(&self) -> &GradedComplex {
        self.filtered.total()
    }

    pub fn words(&self, n: i64) -> &[Word] {
        self.words.get(&n).map_or(&[], |v| v.as_slice())
    }

    pub fn word_index(&self, w: &Word) -> Option<(i64, usize)> {
        self.index.get(w).copied()
    }

    pub fn word_degree(&self, w: &Word) -> i64 {
        self.engine.word_degree(0, 1, w)
    }

    /// Flat coordinates (at one degree) of a word combination.
    pub fn flatten(&self, n: i64, v: &WordVec) -> Result<SparseVec, LocalizationError> {
        let mut out: SparseVec = Vec::new();
        for (w, c) in v {
            match self.index.get(w) {
                Some(&(dn, i)) if dn == n => out.push((i, c.clone())),
                _ => {
                    if w.length() > self.truncation {
                        return Err(LocalizationError::TruncationOverflow {
                            needed: w.length(),
                            truncation: self.truncation,
                        });
                    }
                    return Err(LocalizationError::UnknownWord {
                        stop: 0,
                        factor: 0,
                    });
                }
            }
        }
        out.sort_by_key(|e| e.0);
        Ok(out)
    }

    pub fn unflatten(&self, n: i64, flat: &SparseVec) -> Vec<(Word, Rat)> {
        let ws = self.words(n);
        flat.iter()
            .map(|(i, c)| (ws[*i].clone(), c.clone()))
            .collect()
    }

    /// Differential of a word combination.
    pub fn differential(&self, v: &WordVec) -> Result<WordVec, LocalizationError> {
        for w in v.keys() {
            self.engine.check_word(0, 1, w)?;
        }
        self.engine
            .mu_word_vecs(&[0, 1], &[v], 1, self.truncation)
    }

    /// Least `q` with `[z]` in the image of `H(F^q) -> H(F^truncation)` at
    /// degree `n`.  Errors when `z` is not closed.
    pub fn class_level(&self, n: i64, z: &SparseVec) -> Result<usize, LocalizationError> {
        let d = self.total().diff(n);
        if !d.apply(z).is_empty() {
            return Err(LocalizationError::NotClosed { degree: n });
        }
        Ok(image_level(&self.filtered, n, z))
    }
}

/// Least filtration level `q` whose cohomology image contains the class of
/// the (already closed) vector `z` at degree `n`: membership in
/// `F^q + im d` by a column solve, binary-searched over `q`.
fn image_level(filtered: &FilteredComplex, n: i64, z: &SparseVec) -> usize {
    if z.is_empty() {
        return 0;
    }
    let total = filtered.total();
    let levels = filtered.levels(n);
    let d_in = total.diff(n - 1);
    let dim_n = total.dim(n);
    let member = |q: u32| -> bool {
        let sel: Vec<usize> = (0..dim_n).filter(|&i| levels[i] <= q).collect();
        let mut m = SparseMat::zero(dim_n, sel.len() + d_in.cols());
        for (k, &i) in sel.iter().enumerate() {
            m.set_col(k, vec![(i, Rat::one())]);
        }
        for c in 0..d_in.cols() {
            m.set_col(sel.len() + c, d_in.col(c).clone());
        }
        column_reduce(&m, true).solve(z).is_some()
    };
    let mut lo = 0u32;
    let mut hi = levels.iter().copied().max().unwrap_or(0);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if member(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo as usize
}

/// Quotient composition of word combinations along `chain` (first source
/// first), inputs first applied first.  Word lengths add across each
/// monomial; combinations whose total length exceeds `truncation` overflow.
pub fn quotient_product(
    chain: &[TwistedComplex],
    inputs: &[WordVec],
    gens: &GeneratorSet,
    truncation: usize,
    cat: &AInfCategory,
) -> Result<WordVec, LocalizationError> {
    assert!(!inputs.is_empty() && chain.len() == inputs.len() + 1);
    gens.validate(cat)?;
    let engine = WordEngine::new(cat, chain.to_vec(), &gens.members)?;
    let objs: Vec<usize> = (0..chain.len()).collect();
    for (i, v) in inputs.iter().enumerate() {
        for w in v.keys() {
            engine.check_word(i, i + 1, w)?;
        }
    }
    let refs: Vec<&WordVec> = inputs.iter().collect();
    engine.mu_word_vecs(&objs, &refs, 1, truncation)
}

/// Quotient differential of a word combination from `k_obj` to `l_obj`.
pub fn quotient_differential(
    k_obj: &TwistedComplex,
    l_obj: &TwistedComplex,
    v: &WordVec,
    gens: &GeneratorSet,
    truncation: usize,
    cat: &AInfCategory,
) -> Result<WordVec, LocalizationError> {
    let chain = [k_obj.clone(), l_obj.clone()];
    quotient_product(&chain, std::slice::from_ref(v), gens, truncation, cat)
}

/// Word-basis quotient category over a fixed object list, exposing the
/// quotient operations through the relation-checker interface.  Element
/// sizes are word lengths; callers must keep the total length of a
/// composable tuple within the truncation.
pub struct QuotientCategory {
    pub gens: GeneratorSet,
    pub truncation: usize,
    engine: WordEngine,
    pairs: BTreeMap<(usize, usize), PairTable>,
}

struct PairTable {
    words: Vec<Word>,
    degrees: Vec<i64>,
    index: BTreeMap<Word, usize>,
}

impl QuotientCategory {
    pub fn new(
        objects: Vec<TwistedComplex>,
        gens: &GeneratorSet,
        truncation: usize,
        cat: &AInfCategory,
    ) -> Result<Self, LocalizationError> {
        gens.validate(cat)?;
        let n = objects.len();
        let engine = WordEngine::new(cat, objects, &gens.members)?;
        let mut pairs = BTreeMap::new();
        for x in 0..n {
            for y in 0..n {
                let words = engine.enumerate_words(x, y, truncation);
                let degrees = words
                    .iter()
                    .map(|w| engine.word_degree(x, y, w))
                    .collect();
                let index = words
                    .iter()
                    .enumerate()
                    .map(|(i, w)| (w.clone(), i))
                    .collect();
                pairs.insert(
                    (x, y),
                    PairTable {
                        words,
                        degrees,
                        index,
                    },
                );
            }
        }
        Ok(QuotientCategory {
            gens: gens.clone(),
            truncation,
            engine,
            pairs,
        })
    }

    pub fn word(&self, x: usize, y: usize, k: usize) -> &Word {
        &self.pairs[&(x, y)].words[k]
    }

    pub fn index_of(&self, x: usize, y: usize, w: &Word) -> Option<usize> {
        self.pairs[&(x, y)].index.get(w).copied()
    }
}

impl AInfOps for QuotientCategory {
    fn n_objects(&self) -> usize {
        self.engine.objects.len()
    }

    fn object_name(&self, x: usize) -> String {
        format!("Q{}", x)
    }

    fn hom_dim(&self, x: usize, y: usize) -> usize {
        self.pairs[&(x, y)].words.len()
    }

    fn degree(&self, x: usize, y: usize, k: usize) -> i64 {
        self.pairs[&(x, y)].degrees[k]
    }

    fn elem_name(&self, x: usize, y: usize, k: usize) -> String {
        let w = &self.pairs[&(x, y)].words[k];
        let nodes = self.engine.nodes(x, y, &w.stops);
        let mut parts = Vec::new();
        for i in 0..w.factors.len() {
            if i > 0 {
                parts.push(format!("|E{}|", w.stops[i - 1]));
            }
            parts.push(
                self.engine.hom(nodes[i], nodes[i + 1]).basis.names[w.factors[i]].clone(),
            );
        }
        parts.join(" ")
    }

    fn elem_size(&self, x: usize, y: usize, k: usize) -> usize {
        self.pairs[&(x, y)].words[k].length()
    }

    fn mu(&self, objs: &[usize], inputs: &[usize]) -> SparseVec {
        let n = inputs.len();
        assert_eq!(objs.len(), n + 1);
        let words: Vec<&Word> = (0..n)
            .map(|i| &self.pairs[&(objs[i], objs[i + 1])].words[inputs[i]])
            .collect();
        let needed: usize = words.iter().map(|w| w.length()).sum();
        assert!(
            needed <= self.truncation,
            "composable tuple of total length {} exceeds the truncation {}",
            needed,
            self.truncation
        );
        let out = self
            .engine
            .mu_words(objs, &words, 1)
            .expect("quotient product on enumerated words");
        let table = &self.pairs[&(objs[0], objs[n])];
        let mut flat: SparseVec = out
            .into_iter()
            .map(|(w, c)| {
                (
                    *table
                        .index
                        .get(&w)
                        .expect("product output stays within the truncation"),
                    c,
                )
            })
            .collect();
        flat.sort_by_key(|e| e.0);
        flat
    }
}

/// Dimension table `(length, total degree) -> count` of words over the
/// cohomology of the factor complexes, computed purely from cohomology
/// dimensions.  This is the expected first spectral page of the
/// length-filtered quotient hom complex.
pub fn h_word_dims(
    k_obj: &TwistedComplex,
    l_obj: &TwistedComplex,
    gens: &GeneratorSet,
    p: usize,
    cat: &AInfCategory,
) -> Result<BTreeMap<(u32, i64), usize>, LocalizationError> {
    gens.validate(cat)?;
    let engine = WordEngine::new(cat, vec![k_obj.clone(), l_obj.clone()], &gens.members)?;
    let h_of = |a: Node, b: Node| -> BTreeMap<i64, usize> {
        engine.hom(a, b).complex.cohomology()
    };
    let mut out: BTreeMap<(u32, i64), usize> = BTreeMap::new();
    let g = engine.gens.len();
    for k in 0..=p {
        if k > 0 && g == 0 {
            break;
        }
        let mut stops = vec![0usize; k];
        'shapes: loop {
            let nodes = engine.nodes(0, 1, &stops);
            // Convolve the factor cohomology dimension tables.
            let mut conv: BTreeMap<i64, usize> = BTreeMap::from([(0, 1)]);
            for i in 0..=k {
                let h = h_of(nodes[i], nodes[i + 1]);
                let mut next: BTreeMap<i64, usize> = BTreeMap::new();
                for (&d1, &m1) in &conv {
                    for (&d2, &m2) in &h {
                        *next.entry(d1 + d2).or_insert(0) += m1 * m2;
                    }
                }
                conv = next;
                if conv.is_empty() {
                    break;
                }
            }
            for (d, m) in conv {
                *out.entry((k as u32, d - k as i64)).or_insert(0) += m;
            }
            if k == 0 {
                break;
            }
            let mut i = 0;
            loop {
                if i == k {
                    break 'shapes;
                }
                stops[i] += 1;
                if stops[i] < g {
                    break;
                }
                stops[i] = 0;
                i += 1;
            }
        }
    }
    out.retain(|_, m| *m > 0);
    Ok(out)
}

/// Filtered inclusion of one quotient hom into another with the same
/// endpoints, a generator set containing the small one, and a truncation at
/// least as large.  Words map to themselves with stops relabeled.
pub fn quotient_inclusion(
    small: &QuotientHom,
    large: &QuotientHom,
) -> Result<FilteredMap, LocalizationError> {
    assert!(
        small.engine.objects == large.engine.objects,
        "inclusion requires identical endpoints"
    );
    let mut relabel = Vec::new();
    for (i, m) in small.gens.members.iter().enumerate() {
        match large.gens.members.iter().position(|x| x == m) {
            Some(j) => relabel.push(j),
            None => return Err(LocalizationError::MissingBaseGenerator { member: i }),
        }
    }
    if small.truncation > large.truncation {
        return Err(LocalizationError::TruncationOverflow {
            needed: small.truncation,
            truncation: large.truncation,
        });
    }
    let mut comps = BTreeMap::new();
    for (&n, ws) in &small.words {
        let rows = large.words(n).len();
        let mut m = SparseMat::zero(rows, ws.len());
        for (j, w) in ws.iter().enumerate() {
            let image = Word {
                stops: w.stops.iter().map(|&a| relabel[a]).collect(),
                factors: w.factors.clone(),
            };
            let &(dn, i) = large
                .index
                .get(&image)
                .expect("relabeled word exists in the larger quotient");
            assert_eq!(dn, n);
            m.add_entry(i, j, Rat::one());
        }
        comps.insert(n, m);
    }
    Ok(FilteredMap::new(comps))
}

/// The splitting map from a quotient over a refined generator set back to
/// the quotient over a plain base set, expanding each stop into its base
/// summands with all connection insertions.  Scales filtration levels by at
/// most `scale`; restricted to base words it is the identity.
pub struct SplittingMap {
    /// Quotient over the refined set at the requested truncation.
    pub source: QuotientHom,
    /// Quotient over the base set, truncated at `truncation * scale`.
    pub target: QuotientHom,
    /// Layer bound of the refined members over the base set.
    pub scale: usize,
    pub map: GradedMap,
}

pub fn splitting_map(
    k_obj: &TwistedComplex,
    l_obj: &TwistedComplex,
    base: &GeneratorSet,
    refined: &GeneratorSet,
    p: usize,
    cat: &AInfCategory,
) -> Result<SplittingMap, LocalizationError> {
    base.validate(cat)?;
    refined.validate(cat)?;
    for (i, m) in base.members.iter().enumerate() {
        if m.summands.len() != 1 || m.summands[0].1 != 0 || !m.delta.is_empty() {
            return Err(LocalizationError::NotPlain { member: i });
        }
    }
    for (i, m) in base.members.iter().enumerate() {
        if !refined.members.iter().any(|x| x == m) {
            return Err(LocalizationError::MissingBaseGenerator { member: i });
        }
    }
    let scale = refined.length_bound.max(1);
    // Base member of every refined summand.
    let mut summand_member: Vec<Vec<usize>> = Vec::new();
    for (i, m) in refined.members.iter().enumerate() {
        if m.length() > scale {
            return Err(LocalizationError::ExceedsBound {
                member: i,
                found: m.length(),
                bound: scale,
            });
        }
        let mut row = Vec::new();
        for &(o, _) in &m.summands {
            match base.members.iter().position(|b| b.summands[0].0 == o) {
                Some(bi) => row.push(bi),
                None => return Err(LocalizationError::SummandOutside { member: i }),
            }
        }
        summand_member.push(row);
    }
    let source = quotient_hom(k_obj, l_obj, refined, p, cat)?;
    let target = quotient_hom(k_obj, l_obj, base, p * scale, cat)?;

    let mut comps: BTreeMap<i64, SparseMat> = BTreeMap::new();
    for (&n, ws) in &source.words {
        let rows = target.words(n).len();
        let mut m = SparseMat::zero(rows, ws.len());
        for (j, w) in ws.iter().enumerate() {
            let mut col: BTreeMap<usize, Rat> = BTreeMap::new();
            expand_word(
                &source, &target, &summand_member, w, n, &mut col,
            );
            for (i, c) in col {
                if !c.is_zero() {
                    m.add_entry(i, j, c);
                }
            }
        }
        if !m.is_zero() {
            comps.insert(n, m);
        }
    }
    Ok(SplittingMap {
        source,
        target,
        scale,
        map: GradedMap::new(comps),
    })
}

/// Expand one refined word into base words: each factor becomes its single
/// hom component between base summands, and each gap inside a refined stop
/// contributes every connection walk between the adjacent summands.
fn expand_word(
    source: &QuotientHom,
    target: &QuotientHom,
    summand_member: &[Vec<usize>],
    w: &Word,
    degree: i64,
    col: &mut BTreeMap<usize, Rat>,
) {
    let k = w.stops.len();
    let nodes = source.engine.nodes(0, 1, &w.stops);
    let triples: Vec<(usize, usize, usize)> = (0..=k)
        .map(|i| source.engine.hom(nodes[i], nodes[i + 1]).basis.elems[w.factors[i]])
        .collect();
    // Walk state: accumulated stops and factors of the base word.
    struct St<'a> {
        source: &'a QuotientHom,
        target: &'a QuotientHom,
        summand_member: &'a [Vec<usize>],
        w: &'a Word,
        triples: &'a [(usize, usize, usize)],
        k: usize,
        degree: i64,
        stops: Vec<usize>,
        factors: Vec<usize>,
    }
    fn finish(st: &mut St, coeff: &Rat, col: &mut BTreeMap<usize, Rat>) {
        let out = Word {
            stops: st.stops.clone(),
            factors: st.factors.clone(),
        };
        debug_assert_eq!(st.target.engine.word_degree(0, 1, &out), st.degree);
        let &(dn, i) = st
            .target
            .index
            .get(&out)
            .expect("expanded word exists in the base quotient");
        assert_eq!(dn, st.degree);
        let e = col.entry(i).or_insert_with(Rat::zero);
        *e += coeff;
    }
    // Process factor `i` of the refined word, then walk gap `i + 1`.
    fn factor(st: &mut St, i: usize, coeff: &Rat, col: &mut BTreeMap<usize, Rat>) {
        let (s, t, b) = st.triples[i];
        let src_node = if i == 0 {
            Node::Obj(0)
        } else {
            Node::Stop(st.summand_member[st.w.stops[i - 1]][s])
        };
        let (tgt_node, tgt_sub) = if i == st.k {
            (Node::Obj(1), t)
        } else {
            (Node::Stop(st.summand_member[st.w.stops[i]][t]), 0)
        };
        let src_sub = if i == 0 { s } else { 0 };
        let idx = st.target.engine.hom(src_node, tgt_node).basis.index
            [&(src_sub, tgt_sub, b)];
        st.factors.push(idx);
        if i == st.k {
            finish(st, coeff, col);
        } else {
            let member = st.w.stops[i];
            let stop = st.summand_member[member][t];
            st.stops.push(stop);
            walk(st, i + 1, member, t, coeff, col);
            st.stops.pop();
        }
        st.factors.pop();
    }
    // Walk connection entries of refined stop `member` (sitting before
    // factor `i`) from summand `at` towards the factor's source summand.
    fn walk(
        st: &mut St,
        i: usize,
        member: usize,
        at: usize,
        coeff: &Rat,
        col: &mut BTreeMap<usize, Rat>,
    ) {
        if at == st.triples[i].0 {
            factor(st, i, coeff, col);
        }
        let delta = st.source.gens.members[member].delta.clone();
        for ((from, to), vec) in delta {
            if from != at {
                continue;
            }
            let a_node = Node::Stop(st.summand_member[member][from]);
            let b_node = Node::Stop(st.summand_member[member][to]);
            let basis = &st.target.engine.hom(a_node, b_node).basis;
            for (elem, c) in &vec {
                let idx = basis.index[&(0, 0, *elem)];
                st.factors.push(idx);
                st.stops.push(st.summand_member[member][to]);
                let next = coeff * c;
                walk(st, i, member, to, &next, col);
                st.stops.pop();
                st.factors.pop();
            }
        }
    }
    let mut st = St {
        source,
        target,
        summand_member,
        w,
        triples: &triples,
        k,
        degree,
        stops: Vec::new(),
        factors: Vec::new(),
    };
    factor(&mut st, 0, &Rat::one(), col);
}

impl SplittingMap {
    /// Chain-map identity `d ∘ r = r ∘ d` on every degree.
    pub fn verify_chain_map(&self) -> bool {
        let s = self.source.total();
        let t = self.target.total();
        let mut degrees: Vec<i64> = s.dims().keys().copied().collect();
        degrees.extend(t.dims().keys().copied());
        degrees.sort_unstable();
        degrees.dedup();
        for &n in &degrees {
            let left = t.diff(n).matmul(&self.map.comp(n, s, t));
            let right = self.map.comp(n + 1, s, t).matmul(&s.diff(n));
            if left != right {
                return false;
            }
        }
        true
    }

    /// Splitting composed with the inclusion of base words equals the plain
    /// truncation-extension embedding.
    pub fn retracts_inclusion(&self, base_hom: &QuotientHom) -> Result<bool, LocalizationError> {
        let inc = quotient_inclusion(base_hom, &self.source)?;
        let embed = quotient_inclusion(base_hom, &self.target)?;
        let s = base_hom.total();
        for &n in s.dims().keys() {
            let through = self
                .map
                .comp(n, self.source.total(), self.target.total())
                .matmul(&inc.map.comp(n, s, self.source.total()));
            if through != embed.map.comp(n, s, self.target.total()) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Deformation-retract data of one hom complex onto its cohomology, in the
/// complex's own coordinates: per-element projection, homotopy and
/// class-representative tables, all flat-indexed.
struct PairContraction {
    class_deg: Vec<i64>,
    /// Per flat class index: representative in flat hom coordinates.
    rep_flat: Vec<SparseVec>,
    /// Per flat basis element: class coordinates of its closed part.
    pi_tab: Vec<SparseVec>,
    /// Per flat basis element: homotopy value, flat, one degree down.
    h_tab: Vec<SparseVec>,
    /// Per flat basis element: representative expansion of its class part.
    ip_tab: Vec<SparseVec>,
}

fn contract_pair(th: &TwHom) -> PairContraction {
    let coh = th.complex.cohomology_data();
    let mut reds: BTreeMap<i64, ColumnReduction> = BTreeMap::new();
    for &n in th.complex.dims().keys() {
        reds.insert(n, column_reduce(&th.complex.diff(n), true));
    }
    let mut class_deg = Vec::new();
    let mut rep_flat = Vec::new();
    let mut offsets: BTreeMap<i64, usize> = BTreeMap::new();
    for (&n, dim) in &coh.dims {
        offsets.insert(n, class_deg.len());
        for i in 0..*dim {
            class_deg.push(n);
            rep_flat.push(th.map.to_flat(n, &coh.reps[&n][i]));
        }
    }
    let dim = th.basis.dim();
    let mut pi_tab = vec![Vec::new(); dim];
    let mut h_tab = vec![Vec::new(); dim];
    let mut ip_tab = vec![Vec::new(); dim];
    for e in 0..dim {
        let (n, pos) = th.map.of_flat[e];
        let v: SparseVec = vec![(pos, Rat::one())];
        let dv = th.complex.diff(n).apply(&v);
        let a = match reds.get(&n) {
            Some(red) => red.solve(&dv).expect("boundary of a chain is solvable"),
            None => {
                assert!(dv.is_empty());
                Vec::new()
            }
        };
        let mut z = v.clone();
        add_scaled(&mut z, &-Rat::one(), &a);
        let c = coh
            .class_coords(n, &z)
            .expect("closed part has class coordinates");
        let mut b = z.clone();
        let mut ip_flat: SparseVec = Vec::new();
        if let Some(&off) = offsets.get(&n) {
            for (i, co) in &c {
                add_scaled(&mut b, &-co.clone(), &coh.reps[&n][*i]);
                add_scaled(&mut ip_flat, co, &rep_flat[off + i]);
            }
            pi_tab[e] = c.iter().map(|(i, co)| (off + i, co.clone())).collect();
        } else {
            assert!(c.is_empty());
        }
        ip_tab[e] = ip_flat;
        if !b.is_empty() {
            let red = reds
                .get(&(n - 1))
                .expect("exact part lifts one degree down");
            let u = red.solve(&b).expect("exact part is solvable");
            h_tab[e] = th.map.to_flat(n - 1, &u);
        }
    }
    PairContraction {
        class_deg,
        rep_flat,
        pi_tab,
        h_tab,
        ip_tab,
    }
}

/// Quotient hom complex presented on cohomology classes of the factor
/// complexes, with the differential transported through the contraction.
/// Filtration-level data agrees with the full word complex, at a fraction
/// of its size; this is the workhorse behind growth measurements.
pub struct QuotientModel {
    pub gens: GeneratorSet,
    pub truncation: usize,
    engine: WordEngine,
    contractions: BTreeMap<(Node, Node), PairContraction>,
    words: BTreeMap<i64, Vec<Word>>,
    index: BTreeMap<Word, (i64, usize)>,
    filtered: FilteredComplex,
}

impl QuotientModel {
    pub fn build(
        k_obj: &TwistedComplex,
        l_obj: &TwistedComplex,
        gens: &GeneratorSet,
        p: usize,
        cat: &AInfCategory,
    ) -> Result<Self, LocalizationError> {
        gens.validate(cat)?;
        let engine = WordEngine::new(cat, vec![k_obj.clone(), l_obj.clone()], &gens.members)?;
        let g = gens.len();
        let mut pair_nodes: Vec<(Node, Node)> = Vec::new();
        pair_nodes.push((Node::Obj(0), Node::Obj(1)));
        for a in 0..g {
            pair_nodes.push((Node::Obj(0), Node::Stop(a)));
            pair_nodes.push((Node::Stop(a), Node::Obj(1)));
            for b in 0..g {
                pair_nodes.push((Node::Stop(a), Node::Stop(b)));
            }
        }
        let mut contractions = BTreeMap::new();
        for &(a, b) in &pair_nodes {
            contractions.insert((a, b), contract_pair(engine.hom(a, b)));
        }
        // Enumerate class words.
        let class_dim = |a: Node, b: Node| contractions[&(a, b)].class_deg.len();
        let mut words: BTreeMap<i64, Vec<Word>> = BTreeMap::new();
        for k in 0..=p {
            if k > 0 && g == 0 {
                break;
            }
            let mut stops = vec![0usize; k];
            'shapes: loop {
                let nodes = engine.nodes(0, 1, &stops);
                let dims: Vec<usize> = (0..=k)
                    .map(|i| class_dim(nodes[i], nodes[i + 1]))
                    .collect();
                if dims.iter().all(|&d| d > 0) {
                    let mut fac = vec![0usize; k + 1];
                    loop {
                        let degree: i64 = (0..=k)
                            .map(|i| {
                                contractions[&(nodes[i], nodes[i + 1])].class_deg[fac[i]]
                            })
                            .sum::<i64>()
                            - k as i64;
                        words.entry(degree).or_default().push(Word {
                            stops: stops.clone(),
                            factors: fac.clone(),
                        });
                        let mut i = 0;
                        while i <= k {
                            fac[i] += 1;
                            if fac[i] < dims[i] {
                                break;
                            }
                            fac[i] = 0;
                            i += 1;
                        }
                        if i > k {
                            break;
                        }
                    }
                }
                if k == 0 {
                    break;
                }
                let mut i = 0;
                loop {
                    if i == k {
                        break 'shapes;
                    }
                    stops[i] += 1;
                    if stops[i] < g {
                        break;
                    }
                    stops[i] = 0;
                    i += 1;
                }
            }
        }
        let half = QuotientModel {
            gens: gens.clone(),
            truncation: p,
            engine,
            contractions,
            words: words.clone(),
            index: BTreeMap::new(),
            filtered: FilteredComplex::from_levels(
                GradedComplex::with_zero_differential(BTreeMap::from([(0, 1)])),
                BTreeMap::from([(0, vec![0])]),
            )?,
        };
        let (filtered, index) = assemble(&words, |w| Ok(half.transported_differential(w)))?;
        Ok(QuotientModel {
            filtered,
            index,
            ..half
        })
    }

    fn contraction(&self, a: Node, b: Node) -> &PairContraction {
        &self.contractions[&(a, b)]
    }

    /// Expand a class word into the full word complex along representatives.
    fn expand(&self, w: &Word) -> WordVec {
        let nodes = self.engine.nodes(0, 1, &w.stops);
        let mut acc: Vec<(Vec<usize>, Rat)> = vec![(Vec::new(), Rat::one())];
        for i in 0..w.factors.len() {
            let rep = &self.contraction(nodes[i], nodes[i + 1]).rep_flat[w.factors[i]];
            let mut next = Vec::with_capacity(acc.len() * rep.len());
            for (fac, c) in &acc {
                for (e, co) in rep {
                    let mut f = fac.clone();
                    f.push(*e);
                    next.push((f, c * co));
                }
            }
            acc = next;
        }
        acc.into_iter()
            .map(|(factors, c)| {
                (
                    Word {
                        stops: w.stops.clone(),
                        factors,
                    },
                    c,
                )
            })
            .collect()
    }

    /// Stop-consuming part of the differential on a full word combination.
    fn d1(&self, v: &WordVec) -> WordVec {
        let mut acc: WordVec = BTreeMap::new();
        for (w, c) in v {
            let terms = self
                .engine
                .mu_words(&[0, 1], &[w], 2)
                .expect("differential of an enumerated word");
            for (ow, oc) in terms {
                let e = acc.entry(ow).or_insert_with(Rat::zero);
                *e += c * &oc;
            }
        }
        acc.retain(|_, x| !x.is_zero());
        acc
    }

    /// Tensor homotopy: homotopy on one factor, class projection expanded
    /// back into representatives on every later factor.
    fn h_tensor(&self, v: &WordVec) -> WordVec {
        let mut acc: WordVec = BTreeMap::new();
        for (w, c) in v {
            let nodes = self.engine.nodes(0, 1, &w.stops);
            let kk = w.factors.len();
            let mut prefix = 0i64;
            for i in 0..kk {
                let pc = self.contraction(nodes[i], nodes[i + 1]);
                let hv = &pc.h_tab[w.factors[i]];
                if !hv.is_empty() {
                    let sign = if prefix.rem_euclid(2) == 1 {
                        -Rat::one()
                    } else {
                        Rat::one()
                    };
                    // Expand h on factor i and iota∘pi on factors after it.
                    let mut partial: Vec<(Vec<usize>, Rat)> = hv
                        .iter()
                        .map(|(e, co)| {
                            let mut f = w.factors[..i].to_vec();
                            f.push(*e);
                            (f, &(&sign * co) * c)
                        })
                        .collect();
                    for j in i + 1..kk {
                        let ip = &self.contraction(nodes[j], nodes[j + 1]).ip_tab[w.factors[j]];
                        let mut next = Vec::with_capacity(partial.len() * ip.len());
                        for (fac, co) in &partial {
                            for (e, c2) in ip {
                                let mut f = fac.clone();
                                f.push(*e);
                                next.push((f, co * c2));
                            }
                        }
                        partial = next;
                    }
                    for (factors, co) in partial {
                        let ow = Word {
                            stops: w.stops.clone(),
                            factors,
                        };
                        let e = acc.entry(ow).or_insert_with(Rat::zero);
                        *e += co;
                    }
                }
                prefix +=
                    self.engine.factor_degree(nodes[i], nodes[i + 1], w.factors[i]) - 1;
            }
        }
        acc.retain(|_, x| !x.is_zero());
        acc
    }

    /// Factorwise class projection of a full word combination.
    fn pi0(&self, v: &WordVec) -> WordVec {
        let mut acc: WordVec = BTreeMap::new();
        for (w, c) in v {
            let nodes = self.engine.nodes(0, 1, &w.stops);
            let mut partial: Vec<(Vec<usize>, Rat)> = vec![(Vec::new(), c.clone())];
            for i in 0..w.factors.len() {
                let pi = &self.contraction(nodes[i], nodes[i + 1]).pi_tab[w.factors[i]];
                if pi.is_empty() {
                    partial.clear();
                    break;
                }
                let mut next = Vec::with_capacity(partial.len() * pi.len());
                for (fac, co) in &partial {
                    for (cls, c2) in pi {
                        let mut f = fac.clone();
                        f.push(*cls);
                        next.push((f, co * c2));
                    }
                }
                partial = next;
            }
            for (factors, co) in partial {
                let ow = Word {
                    stops: w.stops.clone(),
                    factors,
                };
                let e = acc.entry(ow).or_insert_with(Rat::zero);
                *e += co;
            }
        }
        acc.retain(|_, x| !x.is_zero());
        acc
    }

    /// Projection of a full word combination onto class words, including all
    /// homotopy corrections through the stop-consuming differential.  The
    /// series alternates: with the retraction convention
    /// `dh + hd = 1 - iota pi`, the perturbed projection is
    /// `pi (1 + delta h)^{-1}`.
    fn project_words(&self, v: &WordVec) -> WordVec {
        let mut acc = self.pi0(v);
        let mut u = v.clone();
        let mut guard = 0usize;
        loop {
            u = self.d1(&self.h_tensor(&u));
            for x in u.values_mut() {
                *x = -x.clone();
            }
            if u.is_empty() {
                break;
            }
            for (w, c) in self.pi0(&u) {
                let e = acc.entry(w).or_insert_with(Rat::zero);
                *e += c;
            }
            guard += 1;
            assert!(guard <= self.truncation + 1, "projection series must terminate");
        }
        acc.retain(|_, x| !x.is_zero());
        acc
    }

    /// Transported differential of one class word.
    fn transported_differential(&self, w: &Word) -> WordVec {
        self.project_words(&self.d1(&self.expand(w)))
    }

    pub fn filtered(&self) -> &FilteredComplex {
        &self.filtered
    }

    pub fn words(&self, n: i64) -> &[Word] {
        self.words.get(&n).map_or(&[], |v| v.as_slice())
    }

    /// Image dimensions `dim im(H(F^p) -> H)` per degree.
    pub fn image_dims(&self, p: i64) -> BTreeMap<i64, usize> {
        self.filtered.filtered_cohomology_image(p)
    }

    pub fn image_total(&self, p: i64) -> usize {
        self.filtered.filtered_cohomology_image_total(p)
    }

    /// Model coordinates of a closed full-word combination at degree `n`.
    pub fn project(&self, n: i64, v: &WordVec) -> Result<SparseVec, LocalizationError> {
        for w in v.keys() {
            self.engine.check_word(0, 1, w)?;
            if w.length() > self.truncation {
                return Err(LocalizationError::TruncationOverflow {
                    needed: w.length(),
                    truncation: self.truncation,
                });
            }
        }
        let model = self.project_words(v);
        let mut out: SparseVec = Vec::new();
        for (w, c) in model {
            let &(dn, i) = self
                .index
                .get(&w)
                .expect("projected word exists in the model basis");
            assert_eq!(dn, n, "projection output has the wrong degree");
            out.push((i, c));
        }
        out.sort_by_key(|e| e.0);
        Ok(out)
    }

    /// Least filtration level whose cohomology image contains the class of
    /// the given closed word combination, with a flag that is true when the
    /// level is unchanged after extending the truncation by the
    /// stabilization window.
    pub fn class_filtration_level(
        &self,
        n: i64,
        v: &WordVec,
    ) -> Result<(usize, bool), LocalizationError> {
        let diff = self
            .engine
            .mu_word_vecs(&[0, 1], &[v], 1, self.truncation)?;
        if !diff.is_empty() {
            return Err(LocalizationError::NotClosed { degree: n });
        }
        let flat = self.project(n, v)?;
        let level = image_level(&self.filtered, n, &flat);
        let wide = QuotientModel::build(
            &self.engine.objects[0],
            &self.engine.objects[1],
            &self.gens,
            self.truncation + STABILITY_WINDOW,
            &self.engine.cat,
        )?;
        let wide_flat = wide.project(n, v)?;
        let wide_level = image_level(&wide.filtered, n, &wide_flat);
        Ok((level, level == wide_level))
    }
}

/// Growth of the localized hom from `k_obj` to `l_obj`: `gamma(p)` counts
/// classes of the horizon complex reachable from filtration level `p`.
/// Horizon defaults to `p_max + 5`; a sample is flagged stabilized when it
/// is unchanged on the horizon extended by the stabilization window.
pub fn growth_localization(
    k_obj: &TwistedComplex,
    l_obj: &TwistedComplex,
    gens: &GeneratorSet,
    p_max: usize,
    horizon: Option<usize>,
    cat: &AInfCategory,
) -> Result<GrowthFunction, LocalizationError> {
    let hor = horizon.unwrap_or(p_max + 5).max(p_max);
    let near = QuotientModel::build(k_obj, l_obj, gens, hor, cat)?;
    let far = QuotientModel::build(k_obj, l_obj, gens, hor + STABILITY_WINDOW, cat)?;
    // One elimination pass per model; every sample reads off the profile.
    let total_at = |profile: &BTreeMap<i64, Vec<usize>>, p: usize| -> usize {
        profile.values().map(|v| v[p]).sum()
    };
    let near_profile = near.filtered.filtered_image_profile();
    let far_profile = far.filtered.filtered_image_profile();
    let mut samples = Vec::with_capacity(p_max + 1);
    let mut flags = Vec::with_capacity(p_max + 1);
    for p in 0..=p_max {
        let v = total_at(&near_profile, p);
        samples.push(v);
        flags.push(v == total_at(&far_profile, p));
    }
    Ok(GrowthFunction::new(
        samples,
        flags,
        format!(
            "localization growth at horizon {} (window {})",
            hor, STABILITY_WINDOW
        ),
    )?)
}
