//! Generators of the ideal cutting out the Lagrangian variety: relations of
//! the first kind (`|I| = k-1`), of the second kind (`|I| = k+1`), and the
//! Laurent Hamiltonians `G_j`, `G_I`.

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arrangement::{alt, subsets, without, ArrangementSpec};
use crate::error::Result;
use crate::symbolic::{poisson, CPoint, LaurentPoly, Rat, Scalar, Var};

fn one() -> Rat {
    Rat::one()
}

/// First-kind relation `F_I(p) = sum_j d_{j, I} p_j`.
pub fn build_f_first(spec: &ArrangementSpec, idx: &[usize]) -> LaurentPoly {
    let n = spec.n();
    assert_eq!(idx.len(), spec.k() - 1, "first-kind index has length k-1");
    (0..n).fold(LaurentPoly::zero(n), |acc, j| {
        let mut tuple = vec![j];
        tuple.extend_from_slice(idx);
        &acc + &LaurentPoly::p(n, j).scale(&spec.d(&tuple))
    })
}

/// Second-kind relation
/// `p_I f_I(z) + sum_m (-1)^m a_{i_m} d_{I without i_m} p_{I without i_m}`.
pub fn build_f_second(spec: &ArrangementSpec, idx: &[usize]) -> Result<LaurentPoly> {
    let n = spec.n();
    let f = spec.discriminant_form(idx)?;
    let mut out = &LaurentPoly::p_monomial(n, idx, one()) * &f;
    for (m, &i) in idx.iter().enumerate() {
        let rest = without(idx, m);
        let c = -alt(m) * spec.weight(i).clone() * spec.d(&rest);
        out = &out + &LaurentPoly::p_monomial(n, &rest, c);
    }
    Ok(out)
}

/// `G_j = z_j - a_j / p_j`.
pub fn build_g(spec: &ArrangementSpec, j: usize) -> LaurentPoly {
    let n = spec.n();
    &LaurentPoly::z(n, j) - &LaurentPoly::term(n, Var::P(j), -1, spec.weight(j).clone())
}

/// `G_I = sum_m (-1)^{m-1} d_{I without i_m} G_{i_m}`.
pub fn build_g_comb(spec: &ArrangementSpec, idx: &[usize]) -> LaurentPoly {
    assert_eq!(idx.len(), spec.k() + 1, "G_I index has length k+1");
    idx.iter()
        .enumerate()
        .fold(LaurentPoly::zero(spec.n()), |acc, (m, &i)| {
            &acc + &build_g(spec, i).scale(&(alt(m) * spec.d(&without(idx, m))))
        })
}

/// All generators for one arrangement, keyed by lexicographically ordered subsets.
#[derive(Clone, Debug)]
pub struct RelationSet {
    pub first_kind: Vec<(Vec<usize>, LaurentPoly)>,
    pub second_kind: Vec<(Vec<usize>, LaurentPoly)>,
    pub hamiltonians_g: Vec<(Vec<usize>, LaurentPoly)>,
}

impl RelationSet {
    pub fn build(spec: &ArrangementSpec) -> RelationSet {
        let n = spec.n();
        let k = spec.k();
        let first_kind = subsets(n, k - 1)
            .into_iter()
            .map(|i| {
                let f = build_f_first(spec, &i);
                (i, f)
            })
            .collect();
        let upper = subsets(n, k + 1);
        let second_kind = upper
            .iter()
            .map(|i| (i.clone(), build_f_second(spec, i).expect("distinct subset")))
            .collect();
        let hamiltonians_g = upper
            .iter()
            .map(|i| (i.clone(), build_g_comb(spec, i)))
            .collect();
        RelationSet {
            first_kind,
            second_kind,
            hamiltonians_g,
        }
    }

    /// The involutive generating set: first-kind `F`'s followed by the `G_I`.
    pub fn hamiltonians(&self) -> impl Iterator<Item = &LaurentPoly> {
        self.first_kind
            .iter()
            .chain(&self.hamiltonians_g)
            .map(|(_, f)| f)
    }

    /// `F_I - p_I G_I` for every `(k+1)`-subset; all zero.
    pub fn factorization_residuals(&self, n: usize) -> Vec<LaurentPoly> {
        self.second_kind
            .iter()
            .zip(&self.hamiltonians_g)
            .map(|((idx, f), (_, g))| f - &(&LaurentPoly::p_monomial(n, idx, one()) * g))
            .collect()
    }

    /// Largest relative residual of every generator at a numeric point.
    pub fn max_relative_residual(&self, point: &CPoint) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for f in self
            .first_kind
            .iter()
            .chain(&self.second_kind)
            .chain(&self.hamiltonians_g)
            .map(|(_, f)| f)
        {
            let v = f.eval(point)?.magnitude();
            let scale = f.term_scale(point)?.max(f64::MIN_POSITIVE);
            worst = worst.max(v / scale);
        }
        Ok(worst)
    }

    /// `true` when every generator vanishes exactly at `point`.
    pub fn vanish_exactly(&self, point: &crate::symbolic::RatPoint) -> Result<bool> {
        for (_, f) in self
            .first_kind
            .iter()
            .chain(&self.second_kind)
            .chain(&self.hamiltonians_g)
        {
            if !f.eval(point)?.is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairClassReport {
    pub pair_class: String,
    pub count: usize,
    pub nonzero_residuals: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InvolutionReport {
    pub classes: Vec<PairClassReport>,
}

impl InvolutionReport {
    pub fn all_zero(&self) -> bool {
        self.classes.iter().all(|c| c.nonzero_residuals.is_empty())
    }

    pub fn total_pairs(&self) -> usize {
        self.classes.iter().map(|c| c.count).sum()
    }
}

fn bracket_class(name: &str, pairs: Vec<(&LaurentPoly, &LaurentPoly)>) -> PairClassReport {
    let nonzero_residuals: Vec<String> = pairs
        .par_iter()
        .map(|(a, b)| poisson(a, b))
        .filter(|r| !r.is_zero())
        .map(|r| r.to_canonical_string())
        .collect();
    PairClassReport {
        pair_class: name.to_string(),
        count: pairs.len(),
        nonzero_residuals,
    }
}

/// Poisson brackets of every unordered pair of distinct generators in
/// `{F first kind} ∪ {G_I}`.
pub fn involution_suite(spec: &ArrangementSpec) -> InvolutionReport {
    let rel = RelationSet::build(spec);
    let ff: Vec<_> = rel.first_kind.iter().map(|(_, f)| f).collect();
    let gg: Vec<_> = rel.hamiltonians_g.iter().map(|(_, g)| g).collect();

    let mut ff_pairs = Vec::new();
    for i in 0..ff.len() {
        for j in i + 1..ff.len() {
            ff_pairs.push((ff[i], ff[j]));
        }
    }
    let gf_pairs: Vec<_> = gg
        .iter()
        .flat_map(|g| ff.iter().map(move |f| (*g, *f)))
        .collect();
    let mut gg_pairs = Vec::new();
    for i in 0..gg.len() {
        for j in i + 1..gg.len() {
            gg_pairs.push((gg[i], gg[j]));
        }
    }
    InvolutionReport {
        classes: vec![
            bracket_class("FF", ff_pairs),
            bracket_class("GF", gf_pairs),
            bracket_class("GG", gg_pairs),
        ],
    }
}

/// `{G_I, F_{I'}}` evaluated as the Plücker alternating sum; used to cross-check
/// the symbolic bracket against the arrangement data.
pub fn bracket_gf_constant(spec: &ArrangementSpec, g_idx: &[usize], f_idx: &[usize]) -> Rat {
    g_idx.iter().enumerate().fold(Rat::zero(), |acc, (m, &j)| {
        let mut tail = vec![j];
        tail.extend_from_slice(f_idx);
        acc + alt(m) * spec.d(&without(g_idx, m)) * spec.d(&tail)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{int, PhasePoint};

    fn two_one() -> ArrangementSpec {
        ArrangementSpec::from_ints(&[&[1], &[1]], &[1, 1]).unwrap()
    }

    fn three_two() -> ArrangementSpec {
        ArrangementSpec::from_ints(&[&[1, 0], &[0, 1], &[1, 1]], &[1, 1, 1]).unwrap()
    }

    #[test]
    fn first_kind_examples() {
        let s = two_one();
        assert_eq!(build_f_first(&s, &[]), &LaurentPoly::p(2, 0) + &LaurentPoly::p(2, 1));
        let s = three_two();
        let p = |j| LaurentPoly::p(3, j);
        assert_eq!(build_f_first(&s, &[0]), -&(&p(1) + &p(2)));
        assert_eq!(build_f_first(&s, &[2]), &p(0) - &p(1));
    }

    #[test]
    fn second_kind_examples() {
        let s = two_one();
        let p = |j| LaurentPoly::p(2, j);
        let z = |j| LaurentPoly::z(2, j);
        let expected = &(&(&(&p(0) * &p(1)) * &(&z(0) - &z(1))) - &p(1)) + &p(0);
        let f = build_f_second(&s, &[0, 1]).unwrap();
        assert_eq!(f, expected);

        let s3 = three_two();
        let f3 = build_f_second(&s3, &[0, 1, 2]).unwrap();
        let pt = PhasePoint::new(vec![int(0), int(0), int(1)], vec![int(-3), int(-3), int(3)]);
        assert_eq!(f3.eval(&pt).unwrap(), int(0));
        let lam = crate::symbolic::rat(5, 3);
        assert_eq!(f3.scale_degree(&lam).unwrap(), f3.scale(&num_traits::pow(lam, 2)));
        assert_eq!(f3.homogeneous_degree(), Some(2));
    }

    #[test]
    fn g_examples_and_factorization() {
        let s = two_one();
        let g1 = build_g(&s, 0);
        assert_eq!(
            g1,
            &LaurentPoly::z(2, 0) - &LaurentPoly::term(2, Var::P(0), -1, int(1))
        );
        let g12 = build_g_comb(&s, &[0, 1]);
        assert_eq!(g12, &build_g(&s, 0) - &build_g(&s, 1));
        let f = build_f_second(&s, &[0, 1]).unwrap();
        let lifted = &LaurentPoly::p_monomial(2, &[0, 1], int(1)) * &g12;
        assert!((&lifted - &f).is_zero());
        assert_eq!(g12.homogeneous_degree(), Some(-1));
    }

    #[test]
    fn relation_set_sizes_and_degrees() {
        let s = ArrangementSpec::random_generic(6, 3, 5, 3).unwrap();
        let rel = RelationSet::build(&s);
        assert_eq!(rel.first_kind.len(), 15);
        assert_eq!(rel.second_kind.len(), 15);
        assert_eq!(rel.hamiltonians_g.len(), 15);
        assert!(rel.first_kind.iter().all(|(_, f)| f.homogeneous_degree() == Some(1)));
        assert!(rel.second_kind.iter().all(|(_, f)| f.homogeneous_degree() == Some(3)));
        assert!(rel.first_kind.iter().all(|(_, f)| !f.depends_on_z()));
        assert!(rel.factorization_residuals(6).iter().all(LaurentPoly::is_zero));
    }

    #[test]
    fn involution_small_cases() {
        let report = involution_suite(&three_two());
        assert!(report.all_zero());
        let report = involution_suite(&ArrangementSpec::random_generic(5, 2, 9, 3).unwrap());
        let counts: Vec<usize> = report.classes.iter().map(|c| c.count).collect();
        assert_eq!(counts, vec![10, 50, 45]);
        assert!(report.all_zero());
    }

    #[test]
    fn gf_bracket_is_the_plucker_sum() {
        let s = ArrangementSpec::random_generic(5, 2, 4, 3).unwrap();
        for gi in subsets(5, 3) {
            for fi in subsets(5, 1) {
                let direct = poisson(&build_g_comb(&s, &gi), &build_f_first(&s, &fi));
                let c = bracket_gf_constant(&s, &gi, &fi);
                assert_eq!(direct, LaurentPoly::constant(5, c.clone()));
                assert!(c.is_zero());
            }
        }
    }
}
