//! Built-in desk-scale instances.
//!
//! The flagship instance is a two-object presentation of coherent sheaves on
//! the projective line: objects `O` and `O(1)` with `hom(O, O(1))` spanned by
//! the coordinate sections `x`, `y` in degree 0.  Every other line bundle
//! `O(n)` is carried as an explicit twisted complex over these two objects, so
//! the base category stays finite while the twisted layer holds everything
//! else.  Tensoring by a divisor `D` becomes a strict endofunctor of this
//! presentation, and multiplication by the defining section of `D` becomes a
//! transformation from the identity — the data consumed by the colimit and
//! localization machinery.
//!
//! Mirror dictionary: this category also presents the wrapped Fukaya category
//! of a cylinder with two stops.  The structure sheaf of the torus (the
//! complement of 0 and infinity) corresponds to a cotangent fiber, and the
//! stops correspond to the skyscrapers at 0 and infinity; no Floer-theoretic
//! data appears here, only this algebraic presentation.
//!
//! Also included: linear-quiver path categories, a synthetic dimension-doubling
//! functor, and seeded random filtered complexes for property suites.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ainf::tw::{
    is_contractible, tw_cone, tw_hom, Components, TwError, TwistedComplex,
};
use crate::ainf::AInfCategory;
use crate::colimit::{
    iterate_transformations, ColimitError, ConeWitness, EndofunctorData, NaturalTransformationData,
};
use crate::complexes::{ComplexError, FilteredComplex, GradedComplex};
use crate::linalg::{add_scaled, kernel_image, Rat, SparseMat, SparseVec};
use crate::localization::GeneratorSet;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot parse `{0}` as a rational point of the projective line")]
    BadPoint(String),
    #[error("a divisor needs at least one point")]
    EmptyDivisor,
    #[error("no quasi-isomorphism witness found for the cone at step {k}")]
    NoWitness { k: usize },
    #[error(transparent)]
    Tw(#[from] TwError),
    #[error(transparent)]
    Colimit(#[from] ColimitError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

// ---------------------------------------------------------------------------
// Points of the projective line

/// A rational point `[a : b]`, stored in the normal form `[q : 1]` or `[1 : 0]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Point {
    pub a: Rat,
    pub b: Rat,
}

impl Point {
    pub fn new(a: Rat, b: Rat) -> Result<Self, InstanceError> {
        if a.is_zero() && b.is_zero() {
            return Err(InstanceError::BadPoint("[0 : 0]".into()));
        }
        Ok(if b.is_zero() {
            Point {
                a: Rat::one(),
                b: Rat::zero(),
            }
        } else {
            Point {
                a: a / &b,
                b: Rat::one(),
            }
        })
    }

    pub fn finite(q: Rat) -> Self {
        Point {
            a: q,
            b: Rat::one(),
        }
    }

    pub fn infinity() -> Self {
        Point {
            a: Rat::one(),
            b: Rat::zero(),
        }
    }

    pub fn is_infinity(&self) -> bool {
        self.b.is_zero()
    }

    /// Accepts `inf`, a rational like `2` or `-3/4`, or a pair `a:b`.
    pub fn parse(s: &str) -> Result<Self, InstanceError> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(Point::infinity());
        }
        if let Some((a, b)) = s.split_once(':') {
            let pa = Rat::from_str(a.trim()).map_err(|_| InstanceError::BadPoint(s.into()))?;
            let pb = Rat::from_str(b.trim()).map_err(|_| InstanceError::BadPoint(s.into()))?;
            return Point::new(pa, pb);
        }
        let q = Rat::from_str(s).map_err(|_| InstanceError::BadPoint(s.into()))?;
        Ok(Point::finite(q))
    }

    /// The vanishing linear form `b x - a y` as a vector in `hom(O, O(1))`.
    pub fn linear_form(&self) -> SparseVec {
        let mut v = Vec::new();
        if !self.b.is_zero() {
            v.push((0, self.b.clone()));
        }
        if !self.a.is_zero() {
            v.push((1, -self.a.clone()));
        }
        v
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinity() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.a)
        }
    }
}

// ---------------------------------------------------------------------------
// The base category and line-bundle models

/// Objects `O`, `O(1)`; `hom(O, O(1)) = span{x, y}` in degree 0; strict units;
/// no other non-identity homs and no higher products.
pub fn p1_category() -> AInfCategory {
    let mut cat = AInfCategory::new(vec!["O".into(), "O(1)".into()]);
    cat.set_hom(0, 0, vec![0], vec!["e".into()]);
    cat.set_hom(1, 1, vec![0], vec!["e".into()]);
    cat.set_hom(0, 1, vec![0, 0], vec!["x".into(), "y".into()]);
    cat.units.insert(0, 0);
    cat.units.insert(1, 0);
    cat.install_strict_units();
    cat.validate().expect("the base category tables are consistent");
    cat
}

/// Twisted-complex model of the line bundle `O(n)`.
///
/// For `n >= 2` the model is the two-term resolution
/// `O^{n-1} -> O(1)^n` (the `O` summands sit in shift 1); for `n <= -1` it is
/// `O^{m+1} -> O(1)^m` with the `O(1)` summands in shift -1, where `m = -n`.
/// Summand `O(1)<j>` plays the role of the monomial slot `x^j y^{n-1-j}`.
pub fn line_bundle_model(n: i64) -> TwistedComplex {
    match n {
        0 => TwistedComplex::plain(0),
        1 => TwistedComplex::plain(1),
        n if n >= 2 => {
            let m = n as usize;
            let summands: Vec<(usize, i64)> = (0..m)
                .map(|_| (1, 0))
                .chain((1..m).map(|_| (0, 1)))
                .collect();
            let mut delta = BTreeMap::new();
            for j in 1..m {
                let src = m + j - 1;
                delta.insert((src, j), vec![(0, Rat::one())]);
                delta.insert((src, j - 1), vec![(1, -Rat::one())]);
            }
            TwistedComplex {
                summands,
                delta,
                length_bound: 2,
            }
        }
        n => {
            let m = (-n) as usize;
            let summands: Vec<(usize, i64)> = (0..=m)
                .map(|_| (0, 0))
                .chain((0..m).map(|_| (1, -1)))
                .collect();
            let mut delta = BTreeMap::new();
            for j in 0..=m {
                if j + 1 <= m {
                    delta.insert((j, m + 1 + j), vec![(0, Rat::one())]);
                }
                if j >= 1 {
                    delta.insert((j, m + j), vec![(1, -Rat::one())]);
                }
            }
            TwistedComplex {
                summands,
                delta,
                length_bound: 2,
            }
        }
    }
}

/// Index of `O(1)<j>` in `line_bundle_model(n)`, for `n >= 1`.
fn o1_idx(n: usize, j: usize) -> usize {
    debug_assert!(j < n);
    j
}

/// Index of the shift-1 summand `O<j>` in `line_bundle_model(n)`, `n >= 2`.
fn o_idx(n: usize, j: usize) -> usize {
    debug_assert!(n >= 2 && (1..n).contains(&j));
    n + j - 1
}

/// Components of multiplication by the degree-`d` section with coefficients
/// `coeffs[a]` of `x^a y^{d-a}`, as a map
/// `line_bundle_model(src_n) -> line_bundle_model(src_n + d)`.
///
/// The delta of the models identifies `x` into slot `j` with `y` into slot
/// `j - 1`, so slot `j` of the model of `O(n)` carries the monomial
/// `x^{n-1-j} y^j`.  Multiplying by `c_a x^a y^{d-a}` therefore sends slot `j`
/// to slot `j + d - a`; the resolution summands `O<j>` travel the same way
/// with coefficient `-c_a`.  A map out of the plain object `O` distributes the
/// coefficients over `x`-components, with `c_0` carried by a `y`-component on
/// the last slot.  Closedness of every such map is enforced by the functor and
/// transformation validators, not assumed here.
fn mult_components(src_n: usize, coeffs: &[Rat]) -> Components {
    let d = coeffs.len() - 1;
    assert!(d >= 1, "multiplication maps raise the degree");
    let tgt_n = src_n + d;
    let mut out = Components::new();
    if src_n == 0 {
        for j in 0..tgt_n {
            let mut v: SparseVec = Vec::new();
            if !coeffs[d - j].is_zero() {
                v.push((0, coeffs[d - j].clone()));
            }
            if j + 1 == d && !coeffs[0].is_zero() {
                v.push((1, coeffs[0].clone()));
            }
            if !v.is_empty() {
                out.insert((0, o1_idx(tgt_n, j)), v);
            }
        }
        return out;
    }
    for j in 0..src_n {
        for (a, c) in coeffs.iter().enumerate() {
            if !c.is_zero() {
                out.insert(
                    (o1_idx(src_n, j), o1_idx(tgt_n, j + d - a)),
                    vec![(0, c.clone())],
                );
            }
        }
    }
    for j in 1..src_n {
        for (a, c) in coeffs.iter().enumerate() {
            if !c.is_zero() {
                out.insert(
                    (o_idx(src_n, j), o_idx(tgt_n, j + d - a)),
                    vec![(0, -c.clone())],
                );
            }
        }
    }
    out
}

/// Naturality homotopies for multiplication by the degree-`d` section with
/// coefficients `coeffs`.  The square against `x` commutes on the nose; the
/// defect against `y` is bounded by a combination of identity maps into the
/// resolution summands of the target model.
fn sigma_homotopies(coeffs: &[Rat]) -> BTreeMap<(usize, usize), Vec<Components>> {
    let d = coeffs.len() - 1;
    let mut h_y = Components::new();
    for i in 1..=d {
        let c = &coeffs[d + 1 - i];
        if !c.is_zero() {
            h_y.insert((0, o_idx(d + 1, i)), vec![(0, -c.clone())]);
        }
    }
    BTreeMap::from([((0, 1), vec![Components::new(), h_y])])
}

/// Identity components of a model: units down the diagonal with the
/// alternating shift signs.
fn unit_components(model: &TwistedComplex, cat: &AInfCategory) -> Components {
    model
        .summands
        .iter()
        .enumerate()
        .map(|(s, &(o, u))| {
            let sign = if u.rem_euclid(2) == 1 {
                -Rat::one()
            } else {
                Rat::one()
            };
            ((s, s), vec![(cat.units[&o], sign)])
        })
        .collect()
}

/// Homogeneous defining section of the divisor, normalized to a positive
/// leading coefficient; entry `a` is the coefficient of `x^a y^{d-a}`.
fn divisor_section(points: &[(Point, usize)]) -> Vec<Rat> {
    let mut c = vec![Rat::one()];
    for (p, mult) in points {
        for _ in 0..*mult {
            let mut next = vec![Rat::zero(); c.len() + 1];
            for (k, v) in c.iter().enumerate() {
                next[k + 1] += &p.b * v;
                next[k] -= &p.a * v;
            }
            c = next;
        }
    }
    if let Some(top) = c.iter().rposition(|v| !v.is_zero()) {
        if c[top] < Rat::zero() {
            for v in &mut c {
                *v = -v.clone();
            }
        }
    }
    c
}

// ---------------------------------------------------------------------------
// Skyscrapers

/// Length-`mult` thickening of the skyscraper at a point: `mult` two-term
/// blocks `O -> O(1)` glued by a transverse linear form, so that sections form
/// the local ring of the fat point.
pub fn thick_skyscraper(point: &Point, mult: usize) -> TwistedComplex {
    assert!(mult >= 1);
    let s = point.linear_form();
    // Any linear form independent from `s` glues consecutive blocks.
    let t: SparseVec = if point.a.is_zero() {
        vec![(1, Rat::one())]
    } else {
        vec![(0, Rat::one())]
    };
    let mut summands = Vec::with_capacity(2 * mult);
    let mut delta = BTreeMap::new();
    for i in 0..mult {
        summands.push((0, 1));
        summands.push((1, 0));
        delta.insert((2 * i, 2 * i + 1), s.clone());
        if i + 1 < mult {
            delta.insert((2 * i, 2 * i + 3), t.clone());
        }
    }
    TwistedComplex {
        summands,
        delta,
        length_bound: 2,
    }
}

// ---------------------------------------------------------------------------
// The projective-line instance

/// The divisor-twist package over the two-object presentation.
#[derive(Debug, Clone)]
pub struct P1Instance {
    pub category: AInfCategory,
    /// Tensoring by `O(D)`.
    pub twist: EndofunctorData,
    /// Multiplication by the defining section of `D`.
    pub sigma: NaturalTransformationData,
    /// Thickened skyscrapers at the divisor points.
    pub generators: GeneratorSet,
    /// Distinct points with multiplicities, sorted.
    pub divisor: Vec<(Point, usize)>,
    /// Total degree of the divisor.
    pub degree: usize,
}

/// Build the instance for a multiset of rational points.
///
/// The twist sends `O` to the model of `O(d)` and `O(1)` to the model of
/// `O(d+1)`, acting on `x`, `y` by the multiplication components; the
/// transformation is multiplication by the defining section.  Both are
/// validated on construction, and the generator set collects one thickened
/// skyscraper per distinct point.
pub fn build_p1(divisor: &[Point]) -> Result<P1Instance, InstanceError> {
    if divisor.is_empty() {
        return Err(InstanceError::EmptyDivisor);
    }
    let category = p1_category();
    let mut counts: BTreeMap<Point, usize> = BTreeMap::new();
    for p in divisor {
        *counts.entry(p.clone()).or_default() += 1;
    }
    let points: Vec<(Point, usize)> = counts.into_iter().collect();
    let d = divisor.len();
    let model_d = line_bundle_model(d as i64);
    let model_d1 = line_bundle_model(d as i64 + 1);
    let x_sec = [Rat::zero(), Rat::one()];
    let y_sec = [Rat::one(), Rat::zero()];
    let hom_action = BTreeMap::from([
        ((0, 0), vec![unit_components(&model_d, &category)]),
        ((1, 1), vec![unit_components(&model_d1, &category)]),
        (
            (0, 1),
            vec![mult_components(d, &x_sec), mult_components(d, &y_sec)],
        ),
    ]);
    let twist = EndofunctorData {
        object_map: vec![model_d, model_d1],
        hom_action,
    };
    twist.validate(&category)?;
    let sec = divisor_section(&points);
    let sigma = NaturalTransformationData {
        components: vec![mult_components(0, &sec), mult_components(1, &sec)],
        homotopies: sigma_homotopies(&sec),
    };
    sigma.validate(&twist, &category)?;
    let generators =
        GeneratorSet::new(points.iter().map(|(p, m)| thick_skyscraper(p, *m)).collect());
    generators.validate(&category)?;
    Ok(P1Instance {
        category,
        twist,
        sigma,
        generators,
        divisor: points,
        degree: d,
    })
}

impl P1Instance {
    /// The plain structure sheaf as a twisted complex.
    pub fn structure_sheaf(&self) -> TwistedComplex {
        TwistedComplex::plain(0)
    }

    pub fn line_bundle(&self, n: i64) -> TwistedComplex {
        line_bundle_model(n)
    }

    /// Simple skyscraper at a rational point.
    pub fn skyscraper(&self, point: &Point) -> TwistedComplex {
        thick_skyscraper(point, 1)
    }

    /// The defining section's coefficients, for reporting.
    pub fn section(&self) -> Vec<Rat> {
        divisor_section(&self.divisor)
    }

    /// Quasi-isomorphism witnesses `cone(transition k) -> (+) generators` for
    /// the first `n` steps of iterating the twist on `l`.  Each witness is
    /// found by a deterministic search over small integer combinations of
    /// degree-0 cohomology classes; the verifier re-checks them, so the search
    /// here only proposes.
    pub fn cone_witnesses(
        &self,
        l: &TwistedComplex,
        n: usize,
    ) -> Result<Vec<ConeWitness>, InstanceError> {
        let it = iterate_transformations(&self.twist, &self.sigma, l, n, &self.category)?;
        let target_spec: Vec<(usize, i64)> = (0..self.generators.len()).map(|i| (i, 0)).collect();
        let target = self
            .generators
            .members
            .iter()
            .skip(1)
            .fold(self.generators.members[0].clone(), |acc, m| {
                acc.direct_sum(m)
            });
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let cone = tw_cone(
                &it.transitions[k],
                &it.models[k],
                &it.models[k + 1],
                &self.category,
            )?;
            let f = quasi_iso_combination(&cone, &target, &self.category)?
                .ok_or(InstanceError::NoWitness { k })?;
            out.push(ConeWitness {
                target: target_spec.clone(),
                map: f,
            });
        }
        Ok(out)
    }
}

/// Deterministic search for a quasi-isomorphism `src -> tgt` among small
/// integer combinations of a degree-0 cohomology basis: first 0/1
/// coefficients, then -1/0/1 on small bases.
fn quasi_iso_combination(
    src: &TwistedComplex,
    tgt: &TwistedComplex,
    cat: &AInfCategory,
) -> Result<Option<SparseVec>, InstanceError> {
    let h = tw_hom(src, tgt, cat)?;
    let data = h.complex.cohomology_data();
    let reps: Vec<SparseVec> = data
        .reps
        .get(&0)
        .cloned()
        .unwrap_or_default()
        .iter()
        .map(|r| h.map.to_flat(0, r))
        .collect();
    let r = reps.len();
    let try_map = |f: &SparseVec| -> Result<bool, InstanceError> {
        let cn = tw_cone(f, src, tgt, cat)?;
        Ok(is_contractible(&cn, cat)?)
    };
    if r == 0 {
        let zero = Vec::new();
        return Ok(if try_map(&zero)? { Some(zero) } else { None });
    }
    if r <= 16 {
        for mask in 1u32..(1 << r) {
            let mut f: SparseVec = Vec::new();
            for (i, rep) in reps.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    add_scaled(&mut f, &Rat::one(), rep);
                }
            }
            if try_map(&f)? {
                return Ok(Some(f));
            }
        }
    }
    if r <= 8 {
        for code in 1..3usize.pow(r as u32) {
            let mut f: SparseVec = Vec::new();
            let mut rem = code;
            let mut pure_unsigned = true;
            for rep in &reps {
                match rem % 3 {
                    1 => add_scaled(&mut f, &Rat::one(), rep),
                    2 => {
                        add_scaled(&mut f, &-Rat::one(), rep);
                        pure_unsigned = false;
                    }
                    _ => {}
                }
                rem /= 3;
            }
            if pure_unsigned {
                continue; // already tried above
            }
            if try_map(&f)? {
                return Ok(Some(f));
            }
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Linear quivers

/// Path category of the linearly oriented A_n quiver: objects `0..n`, one
/// basis path `i -> j` for each `i <= j`, strict units, composition by
/// concatenation, nothing in higher arity.
pub fn build_an_quiver(n: usize) -> AInfCategory {
    assert!(n >= 1);
    let mut cat = AInfCategory::new((1..=n).map(|i| format!("v{i}")).collect());
    for i in 0..n {
        for j in i..n {
            let name = if i == j {
                "e".to_string()
            } else {
                format!("p{}{}", i + 1, j + 1)
            };
            cat.set_hom(i, j, vec![0], vec![name]);
        }
    }
    for i in 0..n {
        cat.units.insert(i, 0);
    }
    cat.install_strict_units();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                cat.add_product(&[i, j, k], &[0, 0], vec![(0, Rat::one())]);
            }
        }
    }
    cat.validate().expect("path composition tables are consistent");
    cat
}

// ---------------------------------------------------------------------------
// Synthetic point instances

/// One object with its identity; semisimple.
pub fn point_category() -> AInfCategory {
    let mut cat = AInfCategory::new(vec!["pt".into()]);
    cat.set_hom(0, 0, vec![0], vec!["e".into()]);
    cat.units.insert(0, 0);
    cat.install_strict_units();
    cat.validate().expect("one-object tables are consistent");
    cat
}

/// Endofunctor doubling the point; iterating it doubles every hom dimension,
/// so entropy estimates converge to log 2.
pub fn doubling_functor() -> EndofunctorData {
    let image = TwistedComplex {
        summands: vec![(0, 0), (0, 0)],
        delta: BTreeMap::new(),
        length_bound: 1,
    };
    let diag = Components::from([
        ((0, 0), vec![(0, Rat::one())]),
        ((1, 1), vec![(0, Rat::one())]),
    ]);
    EndofunctorData {
        object_map: vec![image],
        hom_action: BTreeMap::from([((0, 0), vec![diag])]),
    }
}

/// Include the point as the first copy.
pub fn doubling_inclusion() -> NaturalTransformationData {
    NaturalTransformationData::strict(vec![Components::from([(
        (0, 0),
        vec![(0, Rat::one())],
    )])])
}

// ---------------------------------------------------------------------------
// Random filtered complexes

#[derive(Debug, Clone)]
pub struct RandomComplexParams {
    pub min_degree: i64,
    pub max_degree: i64,
    /// Dimensions per degree are drawn from `0..=max_dim`.
    pub max_dim: usize,
    pub p_max: u32,
}

impl Default for RandomComplexParams {
    fn default() -> Self {
        RandomComplexParams {
            min_degree: -2,
            max_degree: 2,
            max_dim: 4,
            p_max: 3,
        }
    }
}

/// Reproducible random filtered complex.
///
/// Dimensions and filtration levels are drawn first; differentials are then
/// built from the top degree down, each column a small random combination of
/// the kernel of the next differential restricted to the rows allowed by the
/// column's filtration level.  This makes `d^2 = 0` and level preservation
/// true by construction rather than by repair.
pub fn random_filtered_complex(seed: u64, params: &RandomComplexParams) -> FilteredComplex {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let degs: Vec<i64> = (params.min_degree..=params.max_degree).collect();
    let mut dims: BTreeMap<i64, usize> = BTreeMap::new();
    let mut levels: BTreeMap<i64, Vec<u32>> = BTreeMap::new();
    for &n in &degs {
        let dim = rng.gen_range(0..=params.max_dim);
        dims.insert(n, dim);
        levels.insert(n, (0..dim).map(|_| rng.gen_range(0..=params.p_max)).collect());
    }
    let mut diffs: BTreeMap<i64, SparseMat> = BTreeMap::new();
    for &n in degs.iter().rev().skip(1) {
        let rows = dims[&(n + 1)];
        let cols = dims[&n];
        if rows == 0 || cols == 0 {
            continue;
        }
        let next = diffs
            .get(&(n + 1))
            .cloned()
            .unwrap_or_else(|| SparseMat::zero(0, rows));
        let mut m = SparseMat::zero(rows, cols);
        for c in 0..cols {
            let lvl = levels[&n][c];
            let allowed: Vec<usize> = (0..rows).filter(|&r| levels[&(n + 1)][r] <= lvl).collect();
            if allowed.is_empty() {
                continue;
            }
            let (ker, _) = kernel_image(&next.select_cols(&allowed));
            if ker.dim() == 0 {
                continue;
            }
            let mut col: SparseVec = Vec::new();
            for _ in 0..rng.gen_range(0..=2usize) {
                let pick = rng.gen_range(0..ker.dim());
                let coeff = crate::linalg::rat(rng.gen_range(-2..=2i64));
                add_scaled(&mut col, &coeff, &ker.basis()[pick]);
            }
            for (i, v) in col {
                m.add_entry(allowed[i], c, v);
            }
        }
        if !m.is_zero() {
            diffs.insert(n, m);
        }
    }
    let total = GradedComplex::new(dims, diffs).expect("columns land in the next kernel");
    FilteredComplex::from_levels(total, levels).expect("levels preserved by construction")
}

/// Two basis vectors `x` (degree 0, level 1) and `y = dx` (degree 1, level 0):
/// the smallest filtered complex whose E_1 page carries a nonzero d_1.
pub fn two_generator_complex() -> FilteredComplex {
    let mut d0 = SparseMat::zero(1, 1);
    d0.add_entry(0, 0, Rat::one());
    let total = GradedComplex::new(
        BTreeMap::from([(0, 1), (1, 1)]),
        BTreeMap::from([(0, d0)]),
    )
    .expect("one-entry differential squares to zero");
    FilteredComplex::from_levels(total, BTreeMap::from([(0, vec![1]), (1, vec![0])]))
        .expect("levels are closed under the differential")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ainf::tw::{tw_product, tw_reduce, validate_tw, ExceptionalCollection};
    use crate::ainf::{check_ainfty, AInfOps};
    use crate::colimit::{
        growth_colimit, iterate_system, system_against, verify_colimit_hypotheses, ColimitError,
    };
    use crate::linalg::{rank, rat};

    fn pt(s: &str) -> Point {
        Point::parse(s).unwrap()
    }

    #[test]
    fn point_parsing_and_normal_forms() {
        assert_eq!(pt("0"), Point::finite(rat(0)));
        assert_eq!(pt("inf"), Point::infinity());
        assert_eq!(pt("3/2"), Point::finite(crate::linalg::ratio(3, 2)));
        assert_eq!(pt("2:4"), Point::finite(crate::linalg::ratio(1, 2)));
        assert_eq!(pt("1:0"), Point::infinity());
        assert!(matches!(
            Point::parse("zeta"),
            Err(InstanceError::BadPoint(_))
        ));
        assert!(matches!(
            Point::new(Rat::zero(), Rat::zero()),
            Err(InstanceError::BadPoint(_))
        ));
        assert_eq!(pt("inf").linear_form(), vec![(1, -Rat::one())]);
        assert_eq!(pt("0").linear_form(), vec![(0, Rat::one())]);
    }

    #[test]
    fn base_category_satisfies_the_relations() {
        let cat = p1_category();
        check_ainfty(&cat, 3, None).unwrap();
        assert_eq!(cat.hom_dim(0, 1), 2);
        assert_eq!(cat.hom_dim(1, 0), 0);
    }

    #[test]
    fn line_bundle_models_reproduce_sheaf_cohomology() {
        let cat = p1_category();
        let o = TwistedComplex::plain(0);
        let o1 = TwistedComplex::plain(1);
        for deg in -10..=10i64 {
            let model = line_bundle_model(deg);
            validate_tw(&model, &cat).unwrap();
            let h = tw_hom(&o, &model, &cat).unwrap();
            let data = h.complex.cohomology_data();
            assert_eq!(data.dim(0) as i64, (deg + 1).max(0), "H0 of O({deg})");
            assert_eq!(data.dim(1) as i64, (-deg - 1).max(0), "H1 of O({deg})");
            assert_eq!(
                data.total_dim() as i64,
                (deg + 1).max(0) + (-deg - 1).max(0)
            );
            // Mapping out of O(1) shifts the degree down by one.
            let h = tw_hom(&o1, &model, &cat).unwrap();
            let data = h.complex.cohomology_data();
            assert_eq!(data.dim(0) as i64, deg.max(0), "H0 of O({} - 1)", deg);
            assert_eq!(data.dim(1) as i64, (-deg).max(0), "H1 of O({} - 1)", deg);
        }
    }

    #[test]
    fn resolving_a_model_against_the_exceptional_pair_matches_it() {
        let cat = p1_category();
        let coll = ExceptionalCollection {
            objects: vec![0, 1],
        };
        for n in [-2i64, 3, 5] {
            let model = line_bundle_model(n);
            let res = crate::ainf::tw::exceptional_resolve(&model, &coll, &cat).unwrap();
            let mut got = res.complex.summands.clone();
            let mut want = model.summands.clone();
            got.sort_unstable();
            want.sort_unstable();
            assert_eq!(got, want, "resolution of O({n}) has the model's summands");
        }
    }

    #[test]
    fn skyscrapers_have_point_like_ext_algebras() {
        let cat = p1_category();
        for p in [pt("0"), pt("inf"), pt("1"), pt("-5/3")] {
            let sky = thick_skyscraper(&p, 1);
            validate_tw(&sky, &cat).unwrap();
            let h = tw_hom(&sky, &sky, &cat).unwrap();
            assert_eq!(
                h.complex.cohomology(),
                BTreeMap::from([(0, 1), (1, 1)]),
                "self-Ext of the point {p}"
            );
            let o = TwistedComplex::plain(0);
            let h = tw_hom(&o, &sky, &cat).unwrap();
            assert_eq!(h.complex.cohomology(), BTreeMap::from([(0, 1)]));
        }
        // A double point carries a two-dimensional space of sections and a
        // matching self-Ext profile.
        let fat = thick_skyscraper(&pt("0"), 2);
        validate_tw(&fat, &cat).unwrap();
        let o = TwistedComplex::plain(0);
        let h = tw_hom(&o, &fat, &cat).unwrap();
        assert_eq!(h.complex.cohomology(), BTreeMap::from([(0, 2)]));
        let h = tw_hom(&fat, &fat, &cat).unwrap();
        assert_eq!(h.complex.cohomology(), BTreeMap::from([(0, 2), (1, 2)]));
    }

    #[test]
    fn build_p1_normalizes_the_divisor_and_its_section() {
        let inst = build_p1(&[pt("0"), pt("inf")]).unwrap();
        assert_eq!(inst.degree, 2);
        assert_eq!(inst.divisor.len(), 2);
        // sigma = x y: coefficient 1 on x^1 y^1, nothing else.
        assert_eq!(inst.section(), vec![Rat::zero(), Rat::one(), Rat::zero()]);
        assert_eq!(inst.twist.object_map[0], line_bundle_model(2));
        assert_eq!(inst.twist.object_map[1], line_bundle_model(3));
        assert!(matches!(build_p1(&[]), Err(InstanceError::EmptyDivisor)));
        // A single point gives the degree-1 twist with sigma the linear form.
        let inst = build_p1(&[pt("0")]).unwrap();
        assert_eq!(inst.section(), vec![Rat::zero(), Rat::one()]);
        assert_eq!(inst.twist.object_map[0], line_bundle_model(1));
    }

    #[test]
    fn iterated_twist_grows_like_sections_of_even_bundles() {
        let inst = build_p1(&[pt("0"), pt("inf")]).unwrap();
        let o = inst.structure_sheaf();
        let it =
            iterate_transformations(&inst.twist, &inst.sigma, &o, 5, &inst.category).unwrap();
        for (k, model) in it.models.iter().enumerate() {
            let h = tw_hom(&o, model, &inst.category).unwrap();
            assert_eq!(
                h.complex.cohomology(),
                BTreeMap::from([(0, 2 * k + 1)]),
                "sections of O(2k) at k = {k}"
            );
            // Reduction keeps the iterates from compounding in size.
            assert!(
                model.len() <= 4 * k + 3,
                "model at step {k} has {} summands",
                model.len()
            );
        }
        let sys = system_against(&o, &it, &inst.category).unwrap();
        for p in 0..=5usize {
            assert_eq!(rank(&sys.composite(p, 5, 0)), 2 * p + 1, "injective at {p}");
        }
        let g = growth_colimit(&inst.twist, &inst.sigma, &o, &o, 3, 6, &inst.category).unwrap();
        assert_eq!(g.samples(), &[1, 3, 5, 7]);
        assert!((0..=3).all(|p| g.is_stabilized(p)));
    }

    #[test]
    fn skyscraper_off_the_divisor_is_fixed_by_the_twist() {
        let inst = build_p1(&[pt("0"), pt("inf")]).unwrap();
        let l = inst.skyscraper(&pt("1"));
        let sys = iterate_system(&inst.twist, &inst.sigma, &l, &l, 3, &inst.category).unwrap();
        for s in &sys.spaces {
            assert_eq!(s, &BTreeMap::from([(0, 1), (1, 1)]));
        }
        assert_eq!(rank(&sys.composite(0, 3, 0)), 1);
        assert_eq!(rank(&sys.composite(0, 3, 1)), 1);
    }

    #[test]
    fn skyscraper_on_the_divisor_is_killed_by_the_transitions() {
        let inst = build_p1(&[pt("0"), pt("inf")]).unwrap();
        let o = inst.structure_sheaf();
        let l = inst.skyscraper(&pt("0"));
        let g = growth_colimit(&inst.twist, &inst.sigma, &o, &l, 2, 5, &inst.category).unwrap();
        assert_eq!(g.samples(), &[0, 0, 0]);
        assert!((0..=2).all(|p| g.is_stabilized(p)));
    }

    #[test]
    fn hypotheses_hold_for_the_standard_divisor() {
        let inst = build_p1(&[pt("0"), pt("inf")]).unwrap();
        let o = inst.structure_sheaf();
        let witnesses = inst.cone_witnesses(&o, 3).unwrap();
        let report = verify_colimit_hypotheses(
            &inst.twist,
            &inst.sigma,
            &inst.generators,
            &witnesses,
            &o,
            &o,
            3,
            &inst.category,
        )
        .unwrap();
        assert!(
            report.passed(),
            "failures: {:?} {:?} {:?}",
            report.transition_failures,
            report.cone_failures,
            report.component_failures
        );
        assert_eq!(report.k_dims, vec![1, 3, 5, 7]);
    }

    #[test]
    fn quiver_path_categories_compose() {
        for n in 1..=4usize {
            let cat = build_an_quiver(n);
            check_ainfty(&cat, 3, None).unwrap();
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(cat.hom_dim(i, j), usize::from(i <= j));
                }
            }
        }
        let cat = build_an_quiver(3);
        assert_eq!(cat.mu(&[0, 1, 2], &[0, 0]), vec![(0, Rat::one())]);
    }

    #[test]
    fn doubling_instance_is_consistent() {
        let cat = point_category();
        let fun = doubling_functor();
        fun.validate(&cat).unwrap();
        doubling_inclusion().validate(&fun, &cat).unwrap();
        let red = tw_reduce(&fun.object_map[0], &cat).unwrap();
        assert_eq!(red.reduced.len(), 2, "nothing to cancel in a direct sum");
    }

    #[test]
    fn random_complexes_are_reproducible_and_filtered() {
        let params = RandomComplexParams::default();
        for seed in 0..6u64 {
            let c1 = random_filtered_complex(seed, &params);
            let c2 = random_filtered_complex(seed, &params);
            assert_eq!(c1.total().dims(), c2.total().dims());
            for &n in c1.total().dims().keys() {
                assert_eq!(c1.total().diff(n), c2.total().diff(n));
                assert_eq!(c1.levels(n), c2.levels(n));
                // Levels never increase along the differential.
                let d = c1.total().diff(n);
                for col in 0..d.cols() {
                    for (r, _) in d.col(col) {
                        assert!(c1.levels(n + 1)[*r] <= c1.levels(n)[col]);
                    }
                }
            }
        }
        let empty = random_filtered_complex(
            7,
            &RandomComplexParams {
                max_dim: 0,
                ..Default::default()
            },
        );
        assert_eq!(empty.total().total_dim(), 0);
    }

    #[test]
    fn components_extend_to_shifted_sums() {
        let inst = build_p1(&[pt("0"), pt("inf")]).unwrap();
        let t = line_bundle_model(2).direct_sum(&line_bundle_model(2).shift(1));
        let s_t = inst
            .sigma
            .component_at(&inst.twist, &t, &inst.category)
            .unwrap();
        let st = inst.twist.apply_to_object(&t, &inst.category).unwrap();
        let closed =
            tw_product(1, &[t.clone(), st.clone()], &[s_t.clone()], &inst.category).unwrap();
        assert!(closed.is_empty(), "component is closed on a shifted sum");
        // Post-composition with the component must stay injective blockwise:
        // multiplication by a nonzero section has no kernel on sections.
        let o = inst.structure_sheaf();
        let h_t = tw_hom(&o, &t, &inst.category).unwrap();
        let data_t = h_t.complex.cohomology_data();
        let h_st = tw_hom(&o, &st, &inst.category).unwrap();
        let data_st = h_st.complex.cohomology_data();
        for deg in [-1i64, 0] {
            assert_eq!(data_t.dim(deg), 3);
            let mut m = SparseMat::zero(data_st.dim(deg), data_t.dim(deg));
            for (i, rep) in data_t.reps[&deg].iter().enumerate() {
                let flat = h_t.map.to_flat(deg, rep);
                let comp = tw_product(
                    2,
                    &[o.clone(), t.clone(), st.clone()],
                    &[flat, s_t.clone()],
                    &inst.category,
                )
                .unwrap();
                let cls = data_st
                    .class_coords(deg, &h_st.map.to_degree(deg, &comp))
                    .expect("composite is a cocycle");
                for (r, v) in cls {
                    m.add_entry(r, i, v);
                }
            }
            assert_eq!(rank(&m), 3, "injective in degree {deg}");
        }
    }

    #[test]
    fn homotopy_data_is_validated() {
        let inst = build_p1(&[pt("0"), pt("inf")]).unwrap();
        let mut bad = inst.sigma.clone();
        for v in bad.homotopies.get_mut(&(0, 1)).unwrap()[1].values_mut() {
            for (_, c) in v.iter_mut() {
                *c = c.clone() * rat(2);
            }
        }
        assert!(matches!(
            bad.validate(&inst.twist, &inst.category),
            Err(ColimitError::BadHomotopy { x: 0, y: 1, k: 1 })
        ));
        let mut short = inst.sigma.clone();
        short.homotopies.insert((0, 1), vec![Components::new()]);
        assert!(matches!(
            short.validate(&inst.twist, &inst.category),
            Err(ColimitError::HomotopyCount { .. })
        ));
    }

    #[test]
    fn two_generator_complex_has_invisible_low_filtration() {
        let c = two_generator_complex();
        assert_eq!(c.total().cohomology(), BTreeMap::new());
        assert_eq!(c.filtered_cohomology_image_total(0), 0);
    }
}
