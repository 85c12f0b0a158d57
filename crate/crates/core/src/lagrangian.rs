//! The Lagrangian variety as a parametrized object.
//!
//! A chart is indexed by a `k`-subset `I`; its coordinates are `z_i` for
//! `i ∈ I` and `p_j` for `j ∉ I`, ordered by increasing index. Completion
//! recovers the remaining `p_I` and `z_Ī` in closed form.

use num_traits::Zero;
use rand::Rng;

use crate::arrangement::{alt, subsets, without, ArrangementSpec};
use crate::error::{domain, usage, Error, Result};
use crate::linalg::Matrix;
use crate::symbolic::{int, rat, PhasePoint, Rat, Scalar, CF};

/// Coordinates `(z_I, p_Ī)` on the chart indexed by the sorted `k`-subset `idx`.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart<T> {
    pub idx: Vec<usize>,
    /// `z_i` for `i ∈ idx`, in increasing order of `i`.
    pub z: Vec<T>,
    /// `p_j` for `j ∉ idx`, in increasing order of `j`.
    pub p: Vec<T>,
}

impl<T: Scalar> Chart<T> {
    /// Coordinates in the low-index order: `z_l` for `l ∈ idx`, `p_l` otherwise.
    pub fn ordered(&self, n: usize) -> Vec<T> {
        let (mut zi, mut pi) = (self.z.iter(), self.p.iter());
        (0..n)
            .map(|l| {
                if self.idx.contains(&l) {
                    zi.next().expect("z coordinate").clone()
                } else {
                    pi.next().expect("p coordinate").clone()
                }
            })
            .collect()
    }

    pub fn from_ordered(idx: &[usize], coords: &[T]) -> Self {
        let mut z = Vec::new();
        let mut p = Vec::new();
        for (l, c) in coords.iter().enumerate() {
            if idx.contains(&l) {
                z.push(c.clone());
            } else {
                p.push(c.clone());
            }
        }
        Chart {
            idx: idx.to_vec(),
            z,
            p,
        }
    }
}

fn complement(n: usize, idx: &[usize]) -> Vec<usize> {
    (0..n).filter(|j| !idx.contains(j)).collect()
}

fn check_chart<T: Scalar>(spec: &ArrangementSpec, chart: &Chart<T>) -> Result<Vec<usize>> {
    let n = spec.n();
    let k = spec.k();
    let idx = &chart.idx;
    if idx.len() != k || idx.windows(2).any(|w| w[0] >= w[1]) || idx.iter().any(|&i| i >= n) {
        return usage(format!("chart index must be a sorted {k}-subset of 1..{n}"));
    }
    if chart.z.len() != k || chart.p.len() != n - k {
        return usage("chart coordinate vectors have the wrong lengths");
    }
    if chart.p.iter().any(Zero::is_zero) {
        return domain("chart momentum coordinate vanishes");
    }
    Ok(complement(n, idx))
}

/// `tuple = (j, idx without position m)`.
fn with_head(j: usize, idx: &[usize], m: usize) -> Vec<usize> {
    let mut t = vec![j];
    t.extend(without(idx, m));
    t
}

/// `p_{i_m} = -(1/d_{i_m, I∖i_m}) sum_{j∈Ī} d_{j, I∖i_m} p_j`.
fn chart_momenta<T: Scalar>(spec: &ArrangementSpec, idx: &[usize], bar: &[usize], p_bar: &[T]) -> Result<Vec<T>> {
    idx.iter()
        .enumerate()
        .map(|(m, &i)| {
            let pivot = spec.d(&with_head(i, idx, m));
            let sum = bar.iter().zip(p_bar).fold(T::zero(), |acc, (&j, pj)| {
                acc + T::from_rat(&spec.d(&with_head(j, idx, m))) * pj.clone()
            });
            let v = -(sum / T::from_rat(&pivot));
            if v.is_zero() {
                return domain(format!("reconstructed p{} vanishes", i + 1));
            }
            Ok(v)
        })
        .collect()
}

fn assemble<T: Scalar>(n: usize, idx: &[usize], bar: &[usize], z_i: &[T], z_bar: &[T], p_i: &[T], p_bar: &[T]) -> PhasePoint<T> {
    let mut z = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    for (m, &i) in idx.iter().enumerate() {
        z[i] = z_i[m].clone();
        p[i] = p_i[m].clone();
    }
    for (m, &j) in bar.iter().enumerate() {
        z[j] = z_bar[m].clone();
        p[j] = p_bar[m].clone();
    }
    PhasePoint::new(z, p)
}

/// Full point from chart coordinates: `p_I` from the first-kind relations,
/// then `z_j = a_j/p_j + (1/d_I) sum_m (-1)^{m-1} d_{j, I∖i_m} G_{i_m}` for `j ∉ I`.
pub fn chart_complete<T: Scalar>(spec: &ArrangementSpec, chart: &Chart<T>) -> Result<PhasePoint<T>> {
    let bar = check_chart(spec, chart)?;
    let idx = &chart.idx;
    let p_i = chart_momenta(spec, idx, &bar, &chart.p)?;
    let g: Vec<T> = idx
        .iter()
        .enumerate()
        .map(|(m, &i)| chart.z[m].clone() - T::from_rat(spec.weight(i)) / p_i[m].clone())
        .collect();
    let d_i = T::from_rat(&spec.d(idx));
    let z_bar: Vec<T> = bar
        .iter()
        .zip(&chart.p)
        .map(|(&j, pj)| {
            let comb = (0..idx.len()).fold(T::zero(), |acc, m| {
                acc + T::from_rat(&(alt(m) * spec.d(&with_head(j, idx, m)))) * g[m].clone()
            });
            T::from_rat(spec.weight(j)) / pj.clone() + comb / d_i.clone()
        })
        .collect();
    Ok(assemble(spec.n(), idx, &bar, &chart.z, &z_bar, &p_i, &chart.p))
}

/// Chart coordinates of `point` on the chart `idx`.
pub fn extract_chart<T: Scalar>(point: &PhasePoint<T>, idx: &[usize]) -> Chart<T> {
    let n = point.z.len();
    Chart {
        idx: idx.to_vec(),
        z: idx.iter().map(|&i| point.z[i].clone()).collect(),
        p: complement(n, idx).iter().map(|&j| point.p[j].clone()).collect(),
    }
}

/// The point produced by the generating function
/// `Ψ_I = sum_j a_j ln p_j - sum_{i∈I} z_i p_i`, with `p_I` expressed through
/// `p_Ī`: `p_I = -∂Ψ_I/∂z_I` and `z_j = ∂Ψ_I/∂p_j
/// = a_j/p_j + sum_{i∈I} (a_i/p_i - z_i) ∂p_i/∂p_j`.
pub fn generating_map<T: Scalar>(spec: &ArrangementSpec, chart: &Chart<T>) -> Result<PhasePoint<T>> {
    let bar = check_chart(spec, chart)?;
    let idx = &chart.idx;
    let p_i = chart_momenta(spec, idx, &bar, &chart.p)?;
    let z_bar: Vec<T> = bar
        .iter()
        .zip(&chart.p)
        .map(|(&j, pj)| {
            idx.iter().enumerate().fold(T::from_rat(spec.weight(j)) / pj.clone(), |acc, (m, &i)| {
                let dpi_dpj = -(spec.d(&with_head(j, idx, m)) / spec.d(&with_head(i, idx, m)));
                let coeff = T::from_rat(spec.weight(i)) / p_i[m].clone() - chart.z[m].clone();
                acc + coeff * T::from_rat(&dpi_dpj)
            })
        })
        .collect();
    Ok(assemble(spec.n(), idx, &bar, &chart.z, &z_bar, &p_i, &chart.p))
}

/// `Ψ_I(z_I, p_Ī) - Ψ_I(base)` with logarithms taken of ratios `p_j / p_j^base`,
/// so small displacements never cross a branch cut.
pub fn psi_relative(spec: &ArrangementSpec, chart: &Chart<CF>, base: &Chart<CF>) -> Result<CF> {
    let bar = check_chart(spec, chart)?;
    let base_bar = check_chart(spec, base)?;
    if chart.idx != base.idx {
        return usage("charts differ");
    }
    let p_i = chart_momenta(spec, &chart.idx, &bar, &chart.p)?;
    let q_i = chart_momenta(spec, &base.idx, &base_bar, &base.p)?;
    let mut acc = CF::zero();
    for (m, &i) in chart.idx.iter().enumerate() {
        acc += CF::from_rat(spec.weight(i)) * (p_i[m] / q_i[m]).ln();
        acc -= chart.z[m] * p_i[m] - base.z[m] * q_i[m];
    }
    for (m, &j) in bar.iter().enumerate() {
        acc += CF::from_rat(spec.weight(j)) * (chart.p[m] / base.p[m]).ln();
    }
    Ok(acc)
}

fn fd_step(x: CF, rel: f64) -> f64 {
    if x.norm() > 0.0 {
        rel * x.norm()
    } else {
        rel
    }
}

fn central(coords: &[CF], c: usize, h: f64, map: &impl Fn(&[CF]) -> Result<Vec<CF>>) -> Result<Vec<CF>> {
    let mut plus = coords.to_vec();
    let mut minus = coords.to_vec();
    plus[c] += h;
    minus[c] -= h;
    let (fp, fm) = (map(&plus)?, map(&minus)?);
    Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect())
}

/// Central differences at steps `h` and `h/2`, combined by one Richardson step.
fn fd_jacobian(
    coords: &[CF],
    rel: f64,
    map: impl Fn(&[CF]) -> Result<Vec<CF>>,
) -> Result<Matrix<CF>> {
    let n = coords.len();
    let mut cols = Vec::with_capacity(n);
    for c in 0..n {
        let h = fd_step(coords[c], rel);
        let wide = central(coords, c, h, &map)?;
        let narrow = central(coords, c, h / 2.0, &map)?;
        cols.push(wide.iter().zip(&narrow).map(|(w, n)| (4.0 * n - w) / 3.0).collect::<Vec<_>>());
    }
    Ok(Matrix::from_columns(&cols))
}

/// Numeric Jacobian of the chart change `I → I'` at `point`, by central
/// differences with step `rel · |x|` (`rel` at `x = 0`).
pub fn transition_jacobian(
    spec: &ArrangementSpec,
    from: &[usize],
    to: &[usize],
    point: &PhasePoint<CF>,
    rel: f64,
) -> Result<CF> {
    let n = spec.n();
    let coords = extract_chart(point, from).ordered(n);
    let jac = fd_jacobian(&coords, rel, |x| {
        let full = chart_complete(spec, &Chart::from_ordered(from, x))?;
        Ok(extract_chart(&full, to).ordered(n))
    })?;
    Ok(jac.det())
}

/// `(d_{I'} / d_I)²`.
pub fn transition_expected(spec: &ArrangementSpec, from: &[usize], to: &[usize]) -> Result<Rat> {
    let r = spec.plucker(to)? / spec.plucker(from)?;
    Ok(r.clone() * r)
}

/// Numeric Jacobian of the projection `Λ → z` in the chart `m`.
pub fn projection_jacobian_fd(spec: &ArrangementSpec, m: &[usize], point: &PhasePoint<CF>, rel: f64) -> Result<CF> {
    let coords = extract_chart(point, m).ordered(spec.n());
    let jac = fd_jacobian(&coords, rel, |x| Ok(chart_complete(spec, &Chart::from_ordered(m, x))?.z))?;
    Ok(jac.det())
}

/// Exact Jacobian of the projection `Λ → z` in the chart `m`, from the
/// analytic derivatives of the completion formulas.
pub fn projection_jacobian<T: Scalar>(spec: &ArrangementSpec, chart: &Chart<T>) -> Result<T> {
    let n = spec.n();
    let bar = check_chart(spec, chart)?;
    let idx = &chart.idx;
    let point = chart_complete(spec, chart)?;
    let d_i = spec.d(idx);
    let jac = Matrix::from_fn(n, n, |r, col| {
        if idx.contains(&r) {
            return if r == col { T::one() } else { T::zero() };
        }
        if let Some(m) = idx.iter().position(|&i| i == col) {
            return T::from_rat(&(alt(m) * spec.d(&with_head(r, idx, m)) / d_i.clone()));
        }
        let l = col;
        let mut acc = if r == l {
            -(T::from_rat(spec.weight(r)) / (point.p[r].clone() * point.p[r].clone()))
        } else {
            T::zero()
        };
        for (m, &i) in idx.iter().enumerate() {
            let dpi = -(spec.d(&with_head(l, idx, m)) / spec.d(&with_head(i, idx, m)));
            let c = alt(m) * spec.d(&with_head(r, idx, m)) / d_i.clone() * dpi;
            acc = acc
                + T::from_rat(&c) * T::from_rat(spec.weight(i))
                    / (point.p[i].clone() * point.p[i].clone());
        }
        acc
    });
    debug_assert_eq!(bar.len(), n - idx.len());
    Ok(jac.det())
}

/// Hamiltonian flow of the first-kind `F_I`, `|I| = k-1`: `z_j ↦ z_j + d_{j,I} s`.
pub fn flow_f<T: Scalar>(spec: &ArrangementSpec, idx: &[usize], s: &T, point: &PhasePoint<T>) -> Result<PhasePoint<T>> {
    check_subset(spec, idx, spec.k() - 1)?;
    let mut out = point.clone();
    for (j, zj) in out.z.iter_mut().enumerate() {
        let mut tuple = vec![j];
        tuple.extend_from_slice(idx);
        *zj = zj.clone() + T::from_rat(&spec.d(&tuple)) * s.clone();
    }
    Ok(out)
}

/// Hamiltonian flow of `G_J`, `|J| = k+1`: for the `m`-th element (1-based),
/// `p_{j_m} ↦ p_{j_m} + (-1)^m d_{J∖j_m} s` and `z_{j_m} ↦ z_{j_m} - a/p + a/p_new`,
/// which keeps every `G_j` fixed. Other coordinates are unchanged.
pub fn flow_g<T: Scalar>(spec: &ArrangementSpec, idx: &[usize], s: &T, point: &PhasePoint<T>) -> Result<PhasePoint<T>> {
    check_subset(spec, idx, spec.k() + 1)?;
    let mut out = point.clone();
    for (m, &j) in idx.iter().enumerate() {
        let shift = T::from_rat(&(-alt(m) * spec.d(&without(idx, m))));
        let old = point.p[j].clone();
        if old.is_zero() {
            return domain(format!("p{} vanishes at the starting point", j + 1));
        }
        let new = old.clone() + shift * s.clone();
        if new.is_zero() {
            return domain(format!("flow drives p{} to zero", j + 1));
        }
        let a = T::from_rat(spec.weight(j));
        out.z[j] = point.z[j].clone() - a.clone() / old + a / new.clone();
        out.p[j] = new;
    }
    Ok(out)
}

/// `(z, p) ↦ (z/λ, λ p)`.
pub fn cx_action<T: Scalar>(lambda: &T, point: &PhasePoint<T>) -> Result<PhasePoint<T>> {
    if lambda.is_zero() {
        return usage("C× action needs λ ≠ 0");
    }
    Ok(PhasePoint::new(
        point.z.iter().map(|z| z.clone() / lambda.clone()).collect(),
        point.p.iter().map(|p| p.clone() * lambda.clone()).collect(),
    ))
}

fn check_subset(spec: &ArrangementSpec, idx: &[usize], size: usize) -> Result<()> {
    if idx.len() != size || idx.windows(2).any(|w| w[0] >= w[1]) || idx.iter().any(|&i| i >= spec.n()) {
        return usage(format!("expected a sorted {size}-subset of 1..{}", spec.n()));
    }
    Ok(())
}

/// Which Hamiltonian generates a flow.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Flow {
    First(Vec<usize>),
    Second(Vec<usize>),
}

impl Flow {
    pub fn all(spec: &ArrangementSpec) -> Vec<Flow> {
        let k = spec.k();
        subsets(spec.n(), k - 1)
            .into_iter()
            .map(Flow::First)
            .chain(subsets(spec.n(), k + 1).into_iter().map(Flow::Second))
            .collect()
    }

    pub fn apply<T: Scalar>(&self, spec: &ArrangementSpec, s: &T, point: &PhasePoint<T>) -> Result<PhasePoint<T>> {
        match self {
            Flow::First(idx) => flow_f(spec, idx, s, point),
            Flow::Second(idx) => flow_g(spec, idx, s, point),
        }
    }

    pub fn label(&self) -> String {
        let (tag, idx) = match self {
            Flow::First(i) => ("F", i),
            Flow::Second(i) => ("G", i),
        };
        let ids: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
        format!("{tag}[{}]", ids.join(","))
    }
}

/// Points along a flow at each `s` of the grid.
pub fn flow_trajectory<T: Scalar>(
    spec: &ArrangementSpec,
    flow: &Flow,
    grid: &[T],
    point: &PhasePoint<T>,
) -> Result<Vec<PhasePoint<T>>> {
    grid.iter().map(|s| flow.apply(spec, s, point)).collect()
}

fn small_rational(rng: &mut impl Rng, nonzero: bool) -> Rat {
    loop {
        let num: i64 = rng.gen_range(-6..=6);
        if nonzero && num == 0 {
            continue;
        }
        let den: i64 = rng.gen_range(1..=3);
        return rat(num, den);
    }
}

/// Random rational chart coordinates on `idx` whose completion exists.
pub fn sample_chart(spec: &ArrangementSpec, idx: &[usize], rng: &mut impl Rng) -> Result<Chart<Rat>> {
    let k = spec.k();
    let n = spec.n();
    for _ in 0..200 {
        let chart = Chart {
            idx: idx.to_vec(),
            z: (0..k).map(|_| small_rational(rng, false)).collect(),
            p: (0..n - k).map(|_| small_rational(rng, true)).collect(),
        };
        if chart_complete(spec, &chart).is_ok() {
            return Ok(chart);
        }
    }
    Err(Error::Generation(format!(
        "no valid chart point found on chart {:?}",
        idx.iter().map(|i| i + 1).collect::<Vec<_>>()
    )))
}

/// Rational flow parameters used by the invariance checks.
pub fn default_s_grid() -> Vec<Rat> {
    vec![rat(1, 2), int(1), int(-2), rat(3, 5), rat(-7, 3)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relations::RelationSet;
    use crate::spectrum::jacobian_formula;
    use crate::symbolic::{RatPoint, CPoint};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_one() -> ArrangementSpec {
        ArrangementSpec::from_ints(&[&[1], &[1]], &[1, 1]).unwrap()
    }

    fn three_two() -> ArrangementSpec {
        ArrangementSpec::from_ints(&[&[1, 0], &[0, 1], &[1, 1]], &[1, 1, 1]).unwrap()
    }

    fn worked_chart() -> Chart<Rat> {
        Chart {
            idx: vec![0],
            z: vec![int(0)],
            p: vec![int(2)],
        }
    }

    #[test]
    fn worked_completion() {
        let s = two_one();
        let pt = chart_complete(&s, &worked_chart()).unwrap();
        assert_eq!(pt, RatPoint::new(vec![int(0), int(1)], vec![int(-2), int(2)]));
        assert_eq!(generating_map(&s, &worked_chart()).unwrap(), pt);
        assert_eq!(extract_chart(&pt, &[0]), worked_chart());
        assert!(RelationSet::build(&s).vanish_exactly(&pt).unwrap());
    }

    #[test]
    fn chart_domain_errors() {
        let s = two_one();
        let mut c = worked_chart();
        c.p = vec![int(0)];
        assert!(matches!(chart_complete(&s, &c), Err(Error::Domain(_))));
        c.idx = vec![1, 0];
        assert!(matches!(chart_complete(&s, &c), Err(Error::Usage(_))));
    }

    #[test]
    fn projection_jacobian_worked() {
        let s = two_one();
        assert_eq!(projection_jacobian(&s, &worked_chart()).unwrap(), rat(-1, 2));
        let pt = chart_complete(&s, &worked_chart()).unwrap();
        let other = extract_chart(&pt, &[1]);
        assert_eq!(projection_jacobian(&s, &other).unwrap(), rat(-1, 2));
        assert_eq!(jacobian_formula(&s, &[0], &pt.p).unwrap(), rat(-1, 2));
    }

    #[test]
    fn transition_examples() {
        let s = three_two();
        let chart = Chart {
            idx: vec![0, 1],
            z: vec![rat(1, 2), int(-1)],
            p: vec![int(3)],
        };
        let pt = chart_complete(&s, &chart).unwrap().to_complex();
        for (to, expected) in [(vec![0, 1], 1.0), (vec![0, 2], 1.0), (vec![1, 2], 1.0)] {
            let j = transition_jacobian(&s, &[0, 1], &to, &pt, 1e-5).unwrap();
            assert!((j - expected).norm() < 1e-6, "{to:?}: {j}");
            assert_eq!(transition_expected(&s, &[0, 1], &to).unwrap(), int(expected as i64));
        }
        let scaled = ArrangementSpec::from_ints(&[&[1, 0], &[0, 1], &[2, 2]], &[1, 1, 1]).unwrap();
        let pt = chart_complete(&scaled, &chart).unwrap().to_complex();
        let j = transition_jacobian(&scaled, &[0, 1], &[1, 2], &pt, 1e-5).unwrap();
        assert!((j - 4.0).norm() < 1e-6);
        assert_eq!(transition_expected(&scaled, &[0, 1], &[1, 2]).unwrap(), int(4));
    }

    #[test]
    fn worked_flows() {
        let s = two_one();
        let pt = chart_complete(&s, &worked_chart()).unwrap();
        let moved = flow_f(&s, &[], &int(1), &pt).unwrap();
        assert_eq!(moved.z, vec![int(1), int(2)]);
        assert_eq!(moved.p, pt.p);
        let scaled = cx_action(&int(3), &pt).unwrap();
        assert!(RelationSet::build(&s).vanish_exactly(&scaled).unwrap());
        assert_eq!(cx_action(&int(1), &pt).unwrap(), pt);
        assert!(cx_action(&int(0), &pt).is_err());
        // p2 = 2 with shift (-1)^2 d_1 s = s
        assert!(matches!(flow_g(&s, &[0, 1], &int(-2), &pt), Err(Error::Domain(_))));
    }

    fn random_setup(seed: u64) -> (ArrangementSpec, RatPoint) {
        let s = ArrangementSpec::random_generic(5, 2, seed, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chart = sample_chart(&s, &[1, 3], &mut rng).unwrap();
        let pt = chart_complete(&s, &chart).unwrap();
        (s, pt)
    }

    #[test]
    fn flows_preserve_relations_and_commute() {
        let (s, pt) = random_setup(5);
        let rels = RelationSet::build(&s);
        assert!(rels.vanish_exactly(&pt).unwrap());
        let flows = Flow::all(&s);
        for f in &flows {
            for sv in default_s_grid() {
                if let Ok(q) = f.apply(&s, &sv, &pt) {
                    assert!(rels.vanish_exactly(&q).unwrap(), "{}", f.label());
                }
            }
        }
        let (a, b) = (rat(1, 3), rat(-2, 5));
        for f in &flows {
            for g in &flows {
                let ab = f.apply(&s, &a, &pt).and_then(|q| g.apply(&s, &b, &q));
                let ba = g.apply(&s, &b, &pt).and_then(|q| f.apply(&s, &a, &q));
                if let (Ok(x), Ok(y)) = (ab, ba) {
                    assert_eq!(x, y, "{} vs {}", f.label(), g.label());
                }
            }
        }
    }

    #[test]
    fn generators_are_conserved_off_the_variety() {
        let s = ArrangementSpec::random_generic(5, 2, 13, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let pt = RatPoint::new(
            (0..5).map(|_| small_rational(&mut rng, false)).collect(),
            (0..5).map(|_| small_rational(&mut rng, true)).collect(),
        );
        let values = |rels: &RelationSet, q: &RatPoint| -> Vec<Rat> {
            rels.first_kind
                .iter()
                .chain(&rels.hamiltonians_g)
                .map(|(_, f)| f.eval(q).unwrap())
                .collect()
        };
        let rels = RelationSet::build(&s);
        let before = values(&rels, &pt);
        for f in Flow::all(&s) {
            for sv in default_s_grid() {
                if let Ok(q) = f.apply(&s, &sv, &pt) {
                    assert_eq!(values(&rels, &q), before, "{}", f.label());
                }
            }
        }
    }

    #[test]
    fn flow_g_touches_only_its_indices() {
        let (s, pt) = random_setup(6);
        let q = flow_g(&s, &[0, 2, 4], &rat(1, 7), &pt).unwrap();
        for j in [1, 3] {
            assert_eq!(q.z[j], pt.z[j]);
            assert_eq!(q.p[j], pt.p[j]);
        }
    }

    #[test]
    fn group_law() {
        let (s, pt) = random_setup(8);
        for f in Flow::all(&s) {
            let (a, b) = (rat(1, 4), rat(2, 3));
            let two = f.apply(&s, &a, &pt).and_then(|q| f.apply(&s, &b, &q));
            let one = f.apply(&s, &(a + b), &pt);
            if let (Ok(x), Ok(y)) = (two, one) {
                assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn generating_function_derivatives() {
        let (s, pt) = random_setup(9);
        let idx = vec![1, 3];
        let base = extract_chart(&pt.to_complex(), &idx);
        let full = generating_map(&s, &extract_chart(&pt, &idx)).unwrap().to_complex();
        let h = 1e-5;
        let bar = complement(5, &idx);
        for (m, &j) in bar.iter().enumerate() {
            let (mut up, mut dn) = (base.clone(), base.clone());
            up.p[m] += h;
            dn.p[m] -= h;
            let d = (psi_relative(&s, &up, &base).unwrap() - psi_relative(&s, &dn, &base).unwrap()) / (2.0 * h);
            assert!((d - full.z[j]).norm() < 1e-7 * full.z[j].norm().max(1.0));
        }
        for (m, &i) in idx.iter().enumerate() {
            let (mut up, mut dn) = (base.clone(), base.clone());
            up.z[m] += h;
            dn.z[m] -= h;
            let d = (psi_relative(&s, &up, &base).unwrap() - psi_relative(&s, &dn, &base).unwrap()) / (2.0 * h);
            assert!((-d - full.p[i]).norm() < 1e-7 * full.p[i].norm().max(1.0));
        }
    }

    #[test]
    fn projection_jacobian_matches_formula_and_fd() {
        let (s, pt) = random_setup(10);
        let cpt = pt.to_complex();
        let formula_scaled = crate::spectrum::scaled_jacobian(&s, &pt.p).unwrap();
        for m in subsets(5, 2) {
            let exact = projection_jacobian(&s, &extract_chart(&pt, &m)).unwrap();
            let d = s.plucker(&m).unwrap();
            assert_eq!(exact.clone() * d.clone() * d, formula_scaled);
            let fd = projection_jacobian_fd(&s, &m, &cpt, 1e-5).unwrap();
            let ex = CF::from_rat(&exact);
            assert!((fd - ex).norm() < 1e-6 * ex.norm().max(1.0));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn completion_agrees_with_generating_map(seed in 0u64..1000, which in 0usize..10) {
            let s = ArrangementSpec::random_generic(5, 2, seed % 7, 3).unwrap();
            let idx = subsets(5, 2)[which].clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let chart = sample_chart(&s, &idx, &mut rng).unwrap();
            let a = chart_complete(&s, &chart).unwrap();
            prop_assert_eq!(&generating_map(&s, &chart).unwrap(), &a);
            prop_assert_eq!(&extract_chart(&a, &idx), &chart);
            prop_assert!(RelationSet::build(&s).vanish_exactly(&a).unwrap());
        }

        #[test]
        fn cx_action_scales_generators(seed in 0u64..200, num in 1i64..6, den in 1i64..4) {
            let (s, pt) = random_setup(seed % 5);
            let lambda = rat(num, den);
            let moved = cx_action(&lambda, &pt).unwrap();
            let rels = RelationSet::build(&s);
            for (_, f) in &rels.first_kind {
                prop_assert_eq!(f.eval(&moved).unwrap(), f.eval(&pt).unwrap() * lambda.clone());
            }
            for (_, g) in &rels.hamiltonians_g {
                prop_assert_eq!(g.eval(&moved).unwrap(), g.eval(&pt).unwrap() / lambda.clone());
            }
        }
    }

    #[test]
    fn complex_chart_inputs() {
        let s = three_two();
        let chart = Chart {
            idx: vec![1, 2],
            z: vec![CF::new(0.3, -1.0), CF::new(2.0, 0.5)],
            p: vec![CF::new(-1.5, 0.25)],
        };
        let pt: CPoint = chart_complete(&s, &chart).unwrap();
        assert!(RelationSet::build(&s).max_relative_residual(&pt).unwrap() < 1e-10);
    }
}
