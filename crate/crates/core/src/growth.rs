//! Growth functions as sampled data, with window-scoped equivalence testing.
//!
//! A growth function here is a finite list of natural-number samples
//! `gamma(0..=p_max)` together with per-sample stabilization flags reported by
//! whatever produced it.  Comparison searches an integer witness grid and is
//! explicitly a consistency check on the sampled window, not a proof of
//! asymptotic equivalence.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GrowthError {
    #[error("growth function has no samples")]
    Empty,
    #[error("samples must be non-decreasing: gamma({p}) = {prev} > gamma({q}) = {next}")]
    Decreasing {
        p: usize,
        q: usize,
        prev: usize,
        next: usize,
    },
    #[error("no index is stabilized in both functions; nothing to compare")]
    EmptyOverlap,
}

/// Sampled growth function `p -> gamma(p)` for `p = 0..=p_max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthFunction {
    samples: Vec<usize>,
    stabilized: Vec<bool>,
    /// Human-readable note on which model and horizon produced the samples.
    pub provenance: String,
}

impl GrowthFunction {
    /// Samples must be non-decreasing; `stabilized[p]` records whether the
    /// producer considered `gamma(p)` final on its computation window.
    pub fn new(
        samples: Vec<usize>,
        stabilized: Vec<bool>,
        provenance: impl Into<String>,
    ) -> Result<Self, GrowthError> {
        if samples.is_empty() {
            return Err(GrowthError::Empty);
        }
        assert_eq!(samples.len(), stabilized.len());
        for p in 0..samples.len() - 1 {
            if samples[p] > samples[p + 1] {
                return Err(GrowthError::Decreasing {
                    p,
                    q: p + 1,
                    prev: samples[p],
                    next: samples[p + 1],
                });
            }
        }
        Ok(GrowthFunction {
            samples,
            stabilized,
            provenance: provenance.into(),
        })
    }

    /// All samples stabilized; convenient for synthetic data.
    pub fn exact(samples: Vec<usize>, provenance: impl Into<String>) -> Result<Self, GrowthError> {
        let flags = vec![true; samples.len()];
        GrowthFunction::new(samples, flags, provenance)
    }

    pub fn p_max(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn value(&self, p: usize) -> Option<usize> {
        self.samples.get(p).copied()
    }

    pub fn samples(&self) -> &[usize] {
        &self.samples
    }

    pub fn is_stabilized(&self, p: usize) -> bool {
        self.stabilized.get(p).copied().unwrap_or(false)
    }

    pub fn stabilized_flags(&self) -> &[bool] {
        &self.stabilized
    }

    /// Value at `p` clamped into the sampled window.
    fn clamped(&self, p: usize) -> usize {
        self.samples[p.min(self.p_max())]
    }

    /// Report as `(p, value, stabilized)` rows.
    pub fn rows(&self) -> Vec<(usize, usize, bool)> {
        (0..self.samples.len())
            .map(|p| (p, self.samples[p], self.stabilized[p]))
            .collect()
    }
}

impl fmt::Display for GrowthFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (p, v, st) in self.rows() {
            writeln!(
                f,
                "  gamma({p}) = {v}{}",
                if st { "" } else { "  (not stabilized)" }
            )?;
        }
        write!(f, "  [{}]", self.provenance)
    }
}

/// Outcome of the witness search in [`compare_growth`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthVerdict {
    /// `a = 1` witness: each function is dominated by a `b`-shift of the other.
    TranslationWitness { b: usize },
    /// Witness with `a >= 2`: `g1(p) <= a*g2(ap+b)+b` and symmetrically.
    ScalingWitness { a: usize, b: usize },
    /// No witness on the searched grid; scoped to the sampled window.
    InconsistentOnWindow,
}

impl fmt::Display for GrowthVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthVerdict::TranslationWitness { b } => write!(f, "translation-witness(b = {b})"),
            GrowthVerdict::ScalingWitness { a, b } => write!(f, "scaling-witness(a = {a}, b = {b})"),
            GrowthVerdict::InconsistentOnWindow => write!(f, "inconsistent-on-window"),
        }
    }
}

/// Does `(a, b)` witness `ga(p) <= a * gb(ap + b) + b` at every index in `ps`?
///
/// `ap + b` is clamped into `gb`'s window, so a verdict never claims anything
/// beyond the sampled range.
fn dominates(ga: &GrowthFunction, gb: &GrowthFunction, a: usize, b: usize, ps: &[usize]) -> bool {
    ps.iter()
        .all(|&p| ga.samples[p] <= a * gb.clamped(a * p + b) + b)
}

/// Search the integer grid `a in 1..=a_max`, `b in 0..=b_max` for a pair that
/// witnesses mutual domination at every index stabilized in both functions.
///
/// Returns the lexicographically least witness, reported as a translation when
/// `a = 1`.  This is falsification on a window: `InconsistentOnWindow` means no
/// witness on this grid over these samples, nothing more.
pub fn compare_growth(
    g1: &GrowthFunction,
    g2: &GrowthFunction,
    a_max: usize,
    b_max: usize,
) -> Result<GrowthVerdict, GrowthError> {
    let shared: Vec<usize> = (0..=g1.p_max().min(g2.p_max()))
        .filter(|&p| g1.is_stabilized(p) && g2.is_stabilized(p))
        .collect();
    if shared.is_empty() {
        return Err(GrowthError::EmptyOverlap);
    }
    for a in 1..=a_max.max(1) {
        for b in 0..=b_max {
            if dominates(g1, g2, a, b, &shared) && dominates(g2, g1, a, b, &shared) {
                return Ok(if a == 1 {
                    GrowthVerdict::TranslationWitness { b }
                } else {
                    GrowthVerdict::ScalingWitness { a, b }
                });
            }
        }
    }
    Ok(GrowthVerdict::InconsistentOnWindow)
}

/// Outcome of [`detect_poly_degree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyVerdict {
    Degree(usize),
    NotPolynomialOnWindow,
}

impl fmt::Display for PolyVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolyVerdict::Degree(d) => write!(f, "degree {d}"),
            PolyVerdict::NotPolynomialOnWindow => write!(f, "not polynomial on window"),
        }
    }
}

/// Least `d` whose `d`-th finite difference is constant on the trailing
/// stabilized samples, in exact integer arithmetic.
///
/// Confirming degree `d` needs at least `d + 2` trailing samples, so the
/// search stops there; anything deeper is `NotPolynomialOnWindow`.  The least
/// constant difference above order zero is automatically nonzero, since a zero
/// constant at order `d` would make order `d - 1` constant already.
pub fn detect_poly_degree(g: &GrowthFunction) -> PolyVerdict {
    let tail_start = (0..g.samples.len())
        .rev()
        .take_while(|&p| g.stabilized[p])
        .last()
        .unwrap_or(g.samples.len());
    let tail = &g.samples[tail_start..];
    if tail.len() < 2 {
        return PolyVerdict::NotPolynomialOnWindow;
    }
    let mut diffs: Vec<i64> = tail.iter().map(|&v| v as i64).collect();
    for d in 0..=tail.len() - 2 {
        if diffs.iter().all(|&v| v == diffs[0]) {
            return PolyVerdict::Degree(d);
        }
        diffs = diffs.windows(2).map(|w| w[1] - w[0]).collect();
    }
    PolyVerdict::NotPolynomialOnWindow
}

/// `samples[p] = poly(p)` helper for synthetic fixtures and tests.
pub fn sampled(f: impl Fn(usize) -> usize, p_max: usize, provenance: &str) -> GrowthFunction {
    GrowthFunction::exact((0..=p_max).map(f).collect(), provenance)
        .expect("synthetic samples must be non-decreasing")
}

/// Per-degree dimension table rendered alongside growth reports.
pub fn dims_table(dims: &BTreeMap<i64, usize>) -> String {
    let mut out = String::new();
    for (n, d) in dims {
        out.push_str(&format!("H^{n}: {d}  "));
    }
    out.trim_end().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constructor_rejects_decreasing_samples() {
        let err = GrowthFunction::exact(vec![1, 3, 2], "bad").unwrap_err();
        assert!(matches!(err, GrowthError::Decreasing { p: 1, .. }));
        assert_eq!(
            GrowthFunction::exact(vec![], "empty").unwrap_err(),
            GrowthError::Empty
        );
    }

    #[test]
    fn equal_functions_get_translation_zero() {
        let g = sampled(|p| 2 * p + 1, 9, "synthetic");
        assert_eq!(
            compare_growth(&g, &g, 4, 4).unwrap(),
            GrowthVerdict::TranslationWitness { b: 0 }
        );
    }

    #[test]
    fn linear_functions_with_different_slopes_get_a_scaling_witness() {
        let g1 = sampled(|p| 2 * p + 1, 12, "slope 2");
        let g2 = sampled(|p| p + 1, 12, "slope 1");
        let v = compare_growth(&g1, &g2, 4, 4).unwrap();
        match v {
            GrowthVerdict::ScalingWitness { a, b } => {
                assert_eq!(a, 2);
                // The returned pair must itself pass the pointwise check.
                let ps: Vec<usize> = (0..=12).collect();
                assert!(dominates(&g1, &g2, a, b, &ps));
                assert!(dominates(&g2, &g1, a, b, &ps));
            }
            other => panic!("expected a scaling witness, got {other}"),
        }
        // No a = 1 witness exists on this grid: the gap 2p+1 - (p+1+b) grows.
        for b in 0..=4usize {
            let ps: Vec<usize> = (0..=12).collect();
            assert!(!dominates(&g1, &g2, 1, b, &ps));
        }
    }

    #[test]
    fn polynomial_versus_exponential_is_inconsistent() {
        let g1 = sampled(|p| p * p, 12, "square");
        let g2 = sampled(|p| 1usize << p, 12, "doubling");
        assert_eq!(
            compare_growth(&g1, &g2, 4, 4).unwrap(),
            GrowthVerdict::InconsistentOnWindow
        );
    }

    #[test]
    fn monomials_match_exactly_when_exponents_agree() {
        let pows = |d: u32| sampled(move |p| p.pow(d), 12, "monomial");
        for d1 in 1..=3u32 {
            for d2 in 1..=3u32 {
                let v = compare_growth(&pows(d1), &pows(d2), 4, 4).unwrap();
                if d1 == d2 {
                    assert_eq!(v, GrowthVerdict::TranslationWitness { b: 0 });
                } else {
                    assert_eq!(v, GrowthVerdict::InconsistentOnWindow, "d1={d1} d2={d2}");
                }
            }
        }
    }

    #[test]
    fn verdict_class_is_symmetric() {
        let g1 = sampled(|p| 2 * p + 1, 12, "a");
        let g2 = sampled(|p| p + 1, 12, "b");
        let v12 = compare_growth(&g1, &g2, 4, 4).unwrap();
        let v21 = compare_growth(&g2, &g1, 4, 4).unwrap();
        assert_eq!(
            std::mem::discriminant(&v12),
            std::mem::discriminant(&v21)
        );
    }

    #[test]
    fn comparison_requires_shared_stabilized_indices() {
        let g1 = GrowthFunction::new(vec![1, 2], vec![true, false], "left").unwrap();
        let g2 = GrowthFunction::new(vec![1, 2], vec![false, true], "right").unwrap();
        assert_eq!(
            compare_growth(&g1, &g2, 2, 2).unwrap_err(),
            GrowthError::EmptyOverlap
        );
    }

    #[test]
    fn degree_detection_on_simple_shapes() {
        assert_eq!(
            detect_poly_degree(&sampled(|_| 2, 6, "const")),
            PolyVerdict::Degree(0)
        );
        assert_eq!(
            detect_poly_degree(&sampled(|p| 2 * p + 1, 6, "linear")),
            PolyVerdict::Degree(1)
        );
        assert_eq!(
            detect_poly_degree(&sampled(|p| p * p, 8, "square")),
            PolyVerdict::Degree(2)
        );
        assert_eq!(
            detect_poly_degree(&sampled(|p| 1usize << p, 8, "doubling")),
            PolyVerdict::NotPolynomialOnWindow
        );
    }

    #[test]
    fn degree_detection_uses_only_the_stabilized_tail() {
        // Garbage before the stabilized tail must not affect the verdict.
        let g = GrowthFunction::new(
            vec![0, 5, 5, 7, 9, 11, 13],
            vec![true, true, false, true, true, true, true],
            "tail",
        )
        .unwrap();
        assert_eq!(detect_poly_degree(&g), PolyVerdict::Degree(1));
        // A fully unstable function yields no verdict.
        let g = GrowthFunction::new(vec![1, 2], vec![false, false], "unstable").unwrap();
        assert_eq!(detect_poly_degree(&g), PolyVerdict::NotPolynomialOnWindow);
    }

    proptest! {
        #[test]
        fn any_function_is_translation_equivalent_to_itself(
            incs in proptest::collection::vec(0usize..4, 1..12)
        ) {
            let mut samples = vec![0usize];
            for i in incs {
                samples.push(samples.last().unwrap() + i);
            }
            let g = GrowthFunction::exact(samples, "prop").unwrap();
            prop_assert_eq!(
                compare_growth(&g, &g, 3, 3).unwrap(),
                GrowthVerdict::TranslationWitness { b: 0 }
            );
        }

        #[test]
        fn degree_detection_survives_small_shifts(
            d in 0usize..3, shift in 0usize..3
        ) {
            let base = |p: usize| (p + 1).pow(d as u32);
            let g = sampled(base, 10, "base");
            let shifted = sampled(|p| base(p + shift), 10, "shifted");
            prop_assert_eq!(detect_poly_degree(&g), PolyVerdict::Degree(d));
            prop_assert_eq!(detect_poly_degree(&shifted), PolyVerdict::Degree(d));
        }
    }
}
