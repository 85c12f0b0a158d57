//! The algebra of functions on the critical set over a fixed rational `z`
//! off the discriminant, presented as a quotient of Laurent polynomials in
//! the momenta.
//!
//! A basis is fixed by a distinguished index `j1`: the squarefree degree-`k`
//! monomials `p_I` with `j1 ∉ I`. Multiplication by `p_j` in that basis is
//! the Bethe operator `K_j`; everything else (the unit, general normal
//! forms, operator identities) is derived from the operators.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::arrangement::{alt, sort_with_sign, subsets, without, ArrangementSpec};
use crate::error::{domain, usage, Error, Result};
use crate::linalg::{is_identity, RatMatrix};
use crate::relations::{build_f_first, build_f_second};
use crate::symbolic::{format_rat, LaurentPoly, Rat, Var};

/// Degree-`k` squarefree monomials avoiding `j1`, in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientBasis {
    j1: usize,
    subsets: Vec<Vec<usize>>,
}

impl QuotientBasis {
    pub fn new(spec: &ArrangementSpec, j1: usize) -> Result<Self> {
        if j1 >= spec.n() {
            return usage(format!("distinguished index {} out of range", j1 + 1));
        }
        let subsets = subsets(spec.n(), spec.k())
            .into_iter()
            .filter(|s| !s.contains(&j1))
            .collect();
        Ok(QuotientBasis { j1, subsets })
    }

    pub fn distinguished(&self) -> usize {
        self.j1
    }

    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    pub fn index_of(&self, sorted: &[usize]) -> Option<usize> {
        self.subsets.binary_search_by(|s| s.as_slice().cmp(sorted)).ok()
    }
}

/// Expansion of `p_j` modulo the first-kind relation `F_{I'}`, where `I'` is the
/// lexicographically smallest `(k-1)`-subset of `J ∖ {j}` containing `forbidden`.
///
/// Returns `(l, c_l)` with `p_j ≡ sum c_l p_l`; no `l` lies in `I' ∪ {j}`, so in
/// particular no `l` lies in `forbidden`.
pub fn eliminate_first_kind(
    spec: &ArrangementSpec,
    j: usize,
    forbidden: &[usize],
) -> Result<Vec<(usize, Rat)>> {
    let k = spec.k();
    if forbidden.contains(&j) {
        return Err(Error::Reduction(format!(
            "cannot eliminate p{} while forbidding it",
            j + 1
        )));
    }
    let mut elim: Vec<usize> = forbidden.to_vec();
    elim.sort_unstable();
    elim.dedup();
    if elim.len() > k - 1 {
        return Err(Error::Reduction(format!(
            "no first-kind relation avoids {} indices when k = {k}",
            elim.len()
        )));
    }
    for l in 0..spec.n() {
        if elim.len() == k - 1 {
            break;
        }
        if l != j && !elim.contains(&l) {
            elim.push(l);
        }
    }
    elim.sort_unstable();
    let tuple = |l: usize| {
        let mut t = vec![l];
        t.extend_from_slice(&elim);
        t
    };
    let pivot = spec.d(&tuple(j));
    Ok((0..spec.n())
        .filter(|l| *l != j && !elim.contains(l))
        .map(|l| (l, -spec.d(&tuple(l)) / pivot.clone()))
        .filter(|(_, c)| !c.is_zero())
        .collect())
}

fn support(exps: &[u32]) -> Vec<usize> {
    exps.iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(i, _)| i)
        .collect()
}

fn exps_of(n: usize, idx: &[usize]) -> Vec<u32> {
    let mut e = vec![0u32; n];
    for &i in idx {
        e[i] += 1;
    }
    e
}

/// Coordinates of the monomial `p^mono` in `basis`.
///
/// Supported inputs are the ones the operator pipeline produces: squarefree
/// monomials of degree `k`, and degree `k+1` monomials with at most one
/// squared variable. Rules, applied until only basis monomials remain:
/// a square `p_j^2 p_S` is expanded through `eliminate_first_kind(j, S)`; a
/// squarefree degree-`k+1` monomial `p_L` is replaced using the second-kind
/// relation, `p_L = f_L(z)^{-1} sum_m (-1)^{m-1} a_{l_m} d_{L∖l_m} p_{L∖l_m}`;
/// a degree-`k` monomial containing `p_{j1}` has that factor eliminated.
pub fn reduce_monomial(
    spec: &ArrangementSpec,
    z: &[Rat],
    mono: &[u32],
    basis: &QuotientBasis,
) -> Result<Vec<Rat>> {
    let n = spec.n();
    let k = spec.k();
    if mono.len() != n || z.len() != n {
        return usage(format!("expected exponent and z vectors of length {n}"));
    }
    let mut coords = vec![Rat::zero(); basis.len()];
    let mut pending: BTreeMap<Vec<u32>, Rat> = BTreeMap::new();
    pending.insert(mono.to_vec(), Rat::one());

    let push = |pending: &mut BTreeMap<Vec<u32>, Rat>, e: Vec<u32>, c: Rat| {
        let entry = pending.entry(e).or_insert_with(Rat::zero);
        *entry += c;
    };

    while let Some((exps, c)) = pending.pop_last() {
        if c.is_zero() {
            continue;
        }
        let degree: u32 = exps.iter().sum();
        let max_exp = exps.iter().copied().max().unwrap_or(0);
        let squares = exps.iter().filter(|&&e| e >= 2).count();
        let supp = support(&exps);

        if degree as usize == k && max_exp <= 1 {
            if !supp.contains(&basis.j1) {
                let idx = basis.index_of(&supp).expect("basis contains every admissible subset");
                coords[idx] += c;
            } else {
                let rest: Vec<usize> = supp.iter().copied().filter(|&i| i != basis.j1).collect();
                for (l, cl) in eliminate_first_kind(spec, basis.j1, &rest)? {
                    let mut e = exps.clone();
                    e[basis.j1] -= 1;
                    e[l] += 1;
                    push(&mut pending, e, c.clone() * cl);
                }
            }
        } else if degree as usize == k + 1 && max_exp <= 1 {
            let fl = spec.discriminant_value(&supp, z)?;
            if fl.is_zero() {
                return domain("z lies on the discriminant");
            }
            for (m, &l) in supp.iter().enumerate() {
                let rest = without(&supp, m);
                let coeff = alt(m) * spec.weight(l).clone() * spec.d(&rest) / fl.clone();
                push(&mut pending, exps_of(n, &rest), c.clone() * coeff);
            }
        } else if degree as usize == k + 1 && max_exp == 2 && squares == 1 {
            let j = exps.iter().position(|&e| e == 2).expect("one squared variable");
            let others: Vec<usize> = supp.iter().copied().filter(|&i| i != j).collect();
            for (l, cl) in eliminate_first_kind(spec, j, &others)? {
                let mut e = exps.clone();
                e[j] -= 1;
                e[l] += 1;
                push(&mut pending, e, c.clone() * cl);
            }
        } else {
            return usage(format!(
                "reduce_monomial supports degree k or k+1 inputs with at most one square, got {exps:?}"
            ));
        }
    }
    Ok(coords)
}

/// The algebra at one `z`, with its Bethe operators and unit.
#[derive(Clone, Debug)]
pub struct QuotientAlgebra {
    spec: ArrangementSpec,
    z: Vec<Rat>,
    basis: QuotientBasis,
    operators: Vec<RatMatrix>,
    one: Vec<Rat>,
}

impl QuotientAlgebra {
    pub fn new(spec: &ArrangementSpec, z: &[Rat], j1: usize) -> Result<Self> {
        if z.len() != spec.n() {
            return usage(format!("z must have {} entries", spec.n()));
        }
        if !spec.is_off_discriminant(z) {
            return domain("z lies on the discriminant");
        }
        let basis = QuotientBasis::new(spec, j1)?;
        let dim = basis.len();
        let operators = (0..spec.n())
            .map(|j| bethe_operator(spec, z, j, &basis))
            .collect::<Result<Vec<_>>>()?;
        let mut alg = QuotientAlgebra {
            spec: spec.clone(),
            z: z.to_vec(),
            basis,
            operators,
            one: vec![Rat::zero(); dim],
        };
        alg.one = alg.element_one_via(0)?;
        Ok(alg)
    }

    pub fn spec(&self) -> &ArrangementSpec {
        &self.spec
    }

    pub fn z(&self) -> &[Rat] {
        &self.z
    }

    pub fn basis(&self) -> &QuotientBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn operator(&self, j: usize) -> &RatMatrix {
        &self.operators[j]
    }

    pub fn operators(&self) -> &[RatMatrix] {
        &self.operators
    }

    pub fn element_one(&self) -> &[Rat] {
        &self.one
    }

    /// Product `K_{i_1} ... K_{i_r}`.
    pub fn monomial_operator(&self, idx: &[usize]) -> RatMatrix {
        idx.iter()
            .fold(RatMatrix::identity(self.dim()), |acc, &j| acc.mul(&self.operators[j]))
    }

    /// Unit of the algebra from `K_I u = e_I` for the basis subset at position `which`.
    pub fn element_one_via(&self, which: usize) -> Result<Vec<Rat>> {
        let idx = self
            .basis
            .subsets
            .get(which)
            .ok_or_else(|| Error::Usage("basis position out of range".into()))?;
        let mut e = vec![Rat::zero(); self.dim()];
        e[which] = Rat::one();
        self.monomial_operator(idx).solve(&e).ok_or_else(|| {
            Error::Domain("monomial operator is singular: z on the discriminant or data not generic".into())
        })
    }

    /// `P(K_1, ..., K_n)` as a matrix; `z` is substituted first, negative
    /// exponents use operator inverses.
    pub fn polynomial_operator(&self, poly: &LaurentPoly) -> Result<RatMatrix> {
        let poly = self.p_only(poly)?;
        let dim = self.dim();
        let mut inverses: BTreeMap<usize, RatMatrix> = BTreeMap::new();
        let mut acc = RatMatrix::zeros(dim, dim);
        for (mono, c) in poly.terms() {
            let mut m = RatMatrix::identity(dim);
            for &(id, e) in mono.exponents() {
                let j = id - self.spec.n();
                let base = if e > 0 {
                    self.operators[j].clone()
                } else {
                    if !inverses.contains_key(&j) {
                        let inv = self.operators[j].inverse().ok_or_else(|| {
                            Error::Domain(format!("K_{} is not invertible", j + 1))
                        })?;
                        inverses.insert(j, inv);
                    }
                    inverses[&j].clone()
                };
                m = m.mul(&base.pow(e.unsigned_abs()));
            }
            acc = acc.add(&m.scale(c));
        }
        Ok(acc)
    }

    /// Coordinates of the class of `poly` (a Laurent polynomial in `p`, with
    /// `z` substituted if present): `P(K) · 1`.
    pub fn normal_form(&self, poly: &LaurentPoly) -> Result<Vec<Rat>> {
        let poly = self.p_only(poly)?;
        let mut out = vec![Rat::zero(); self.dim()];
        let mut inverses: BTreeMap<usize, RatMatrix> = BTreeMap::new();
        for (mono, c) in poly.terms() {
            let mut v = self.one.clone();
            for &(id, e) in mono.exponents() {
                let j = id - self.spec.n();
                let op = if e > 0 {
                    &self.operators[j]
                } else {
                    if !inverses.contains_key(&j) {
                        let inv = self.operators[j].inverse().ok_or_else(|| {
                            Error::Domain(format!("K_{} is not invertible", j + 1))
                        })?;
                        inverses.insert(j, inv);
                    }
                    &inverses[&j]
                };
                for _ in 0..e.unsigned_abs() {
                    v = op.mul_vec(&v);
                }
            }
            for (o, x) in out.iter_mut().zip(v) {
                *o += x * c;
            }
        }
        Ok(out)
    }

    fn p_only(&self, poly: &LaurentPoly) -> Result<LaurentPoly> {
        if poly.n() != self.spec.n() {
            return usage("polynomial lives in a different phase space");
        }
        if poly.depends_on_z() {
            poly.substitute_z(&self.z)
        } else {
            Ok(poly.clone())
        }
    }

    /// All exact operator identities the algebra must satisfy.
    pub fn operator_checks(&self) -> OperatorChecks {
        let n = self.spec.n();
        let k = self.spec.k();
        let mut commutator_failures = 0;
        let mut commutators = 0;
        for i in 0..n {
            for j in i + 1..n {
                commutators += 1;
                let a = self.operators[i].mul(&self.operators[j]);
                let b = self.operators[j].mul(&self.operators[i]);
                if a != b {
                    commutator_failures += 1;
                }
            }
        }

        let sum_z = self.weighted_position_sum();
        let unit_identity = is_identity(&sum_z.scale(&self.spec.weight_sum().recip()));

        let first_kind = subsets(n, k - 1);
        let first_kind_failures = first_kind
            .iter()
            .filter(|idx| {
                !self
                    .polynomial_operator(&build_f_first(&self.spec, idx))
                    .expect("p-polynomial")
                    .is_zero()
            })
            .count();

        let second = subsets(n, k + 1);
        let second_kind_failures = second
            .iter()
            .filter(|idx| !self.second_kind_operator_residual(idx).is_zero())
            .count();

        let k_subsets = subsets(n, k);
        let position_sum_failures = k_subsets
            .iter()
            .filter(|idx| self.position_sum_via(idx) != sum_z)
            .count();

        OperatorChecks {
            commutators,
            commutator_failures,
            unit_identity,
            first_kind: first_kind.len(),
            first_kind_failures,
            second_kind: second.len(),
            second_kind_failures,
            position_sum_subsets: k_subsets.len(),
            position_sum_failures,
        }
    }

    /// `sum_j z_j K_j`.
    pub fn weighted_position_sum(&self) -> RatMatrix {
        let dim = self.dim();
        self.operators
            .iter()
            .zip(&self.z)
            .fold(RatMatrix::zeros(dim, dim), |acc, (k, z)| acc.add(&k.scale(z)))
    }

    /// `(1/d_I) sum_{j ∉ I} f_{j, I}(z) K_j`, equal to `sum_j z_j K_j`.
    pub fn position_sum_via(&self, idx: &[usize]) -> RatMatrix {
        let dim = self.dim();
        let d = self.spec.d(idx);
        (0..self.spec.n())
            .filter(|j| !idx.contains(j))
            .fold(RatMatrix::zeros(dim, dim), |acc, j| {
                let mut tuple = vec![j];
                tuple.extend_from_slice(idx);
                let f = self
                    .spec
                    .discriminant_value(&tuple, &self.z)
                    .expect("distinct tuple");
                acc.add(&self.operators[j].scale(&(f / d.clone())))
            })
    }

    /// `f_I(z) K_{i_1}...K_{i_{k+1}} - sum_m (-1)^{m-1} a_{i_m} d_{I∖i_m} prod_{l≠m} K_{i_l}`.
    pub fn second_kind_operator_residual(&self, idx: &[usize]) -> RatMatrix {
        let f = self
            .spec
            .discriminant_value(idx, &self.z)
            .expect("distinct subset");
        let mut out = self.monomial_operator(idx).scale(&f);
        for (m, &i) in idx.iter().enumerate() {
            let rest = without(idx, m);
            let c = alt(m) * self.spec.weight(i).clone() * self.spec.d(&rest);
            out = out.sub(&self.monomial_operator(&rest).scale(&c));
        }
        out
    }

    /// Second-kind relations with `z` substituted, reduced through the operators.
    pub fn second_kind_normal_forms_vanish(&self) -> Result<bool> {
        for idx in subsets(self.spec.n(), self.spec.k() + 1) {
            let nf = self.normal_form(&build_f_second(&self.spec, &idx)?)?;
            if nf.iter().any(|x| !x.is_zero()) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn operator_export(&self) -> OperatorExport {
        OperatorExport {
            j1: self.basis.j1 + 1,
            basis: self
                .basis
                .subsets
                .iter()
                .map(|s| s.iter().map(|i| i + 1).collect())
                .collect(),
            z: self.z.iter().map(format_rat).collect(),
            operators: self.operators.iter().map(RatMatrix::to_string_rows).collect(),
            one: self.one.iter().map(format_rat).collect(),
        }
    }
}

/// Summary of [`QuotientAlgebra::operator_checks`]; every failure count should be zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OperatorChecks {
    pub commutators: usize,
    pub commutator_failures: usize,
    pub unit_identity: bool,
    pub first_kind: usize,
    pub first_kind_failures: usize,
    pub second_kind: usize,
    pub second_kind_failures: usize,
    pub position_sum_subsets: usize,
    pub position_sum_failures: usize,
}

impl OperatorChecks {
    pub fn all_pass(&self) -> bool {
        self.commutator_failures == 0
            && self.unit_identity
            && self.first_kind_failures == 0
            && self.second_kind_failures == 0
            && self.position_sum_failures == 0
    }
}

/// JSON form of the operators: 1-based subsets, rationals as strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OperatorExport {
    pub j1: usize,
    pub basis: Vec<Vec<usize>>,
    pub z: Vec<String>,
    pub operators: Vec<Vec<Vec<String>>>,
    pub one: Vec<String>,
}

/// Matrix of multiplication by `p_j`; column `c` is the normal form of `p_j` times basis monomial `c`.
pub fn bethe_operator(
    spec: &ArrangementSpec,
    z: &[Rat],
    j: usize,
    basis: &QuotientBasis,
) -> Result<RatMatrix> {
    if j >= spec.n() {
        return usage(format!("operator index {} out of range", j + 1));
    }
    let cols = basis
        .subsets
        .iter()
        .map(|idx| {
            let mut e = exps_of(spec.n(), idx);
            e[j] += 1;
            reduce_monomial(spec, z, &e, basis)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RatMatrix::from_columns(&cols))
}

/// The space of singular vectors inside `V = span{v_I : |I| = k}` with the
/// contravariant form `S(v_I, v_I) = prod_{i∈I} a_i`.
#[derive(Clone, Debug)]
pub struct SingSpace {
    ambient: Vec<Vec<usize>>,
    form: Vec<Rat>,
    basis: RatMatrix,
    gram_inverse: RatMatrix,
}

impl SingSpace {
    pub fn new(spec: &ArrangementSpec) -> Result<Self> {
        let n = spec.n();
        let k = spec.k();
        let ambient = subsets(n, k);
        let position = |sorted: &[usize]| {
            ambient
                .binary_search_by(|s| s.as_slice().cmp(sorted))
                .expect("k-subset")
        };
        let rows: Vec<Vec<Rat>> = subsets(n, k - 1)
            .iter()
            .map(|rest| {
                let mut row = vec![Rat::zero(); ambient.len()];
                for j in (0..n).filter(|j| !rest.contains(j)) {
                    let mut tuple = vec![j];
                    tuple.extend_from_slice(rest);
                    let (sign, sorted) = sort_with_sign(&tuple).expect("distinct");
                    let w = spec.weight(j).clone();
                    row[position(&sorted)] += if sign > 0 { w } else { -w };
                }
                row
            })
            .collect();
        let conditions = RatMatrix::from_rows(rows);
        let basis = RatMatrix::from_columns(&conditions.nullspace());
        let form: Vec<Rat> = ambient
            .iter()
            .map(|idx| idx.iter().fold(Rat::one(), |acc, &i| acc * spec.weight(i)))
            .collect();
        let weighted = RatMatrix::from_fn(basis.rows(), basis.cols(), |i, c| {
            basis[(i, c)].clone() * form[i].clone()
        });
        let gram = basis.transpose().mul(&weighted);
        let gram_inverse = gram.inverse().ok_or_else(|| {
            Error::Domain("contravariant form is degenerate on the singular vectors".into())
        })?;
        Ok(SingSpace {
            ambient,
            form,
            basis,
            gram_inverse,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient.len()
    }

    pub fn ambient_subsets(&self) -> &[Vec<usize>] {
        &self.ambient
    }

    /// Basis vectors (columns) in ambient coordinates.
    pub fn basis(&self) -> &RatMatrix {
        &self.basis
    }

    /// Ambient coordinates of `v_idx`, with the antisymmetric sign rule.
    pub fn unit(&self, idx: &[usize]) -> Vec<Rat> {
        let mut v = vec![Rat::zero(); self.ambient.len()];
        if let Some((sign, sorted)) = sort_with_sign(idx) {
            if let Ok(pos) = self.ambient.binary_search_by(|s| s.as_slice().cmp(&sorted)) {
                v[pos] = if sign > 0 { Rat::one() } else { -Rat::one() };
            }
        }
        v
    }

    pub fn contravariant(&self, u: &[Rat], v: &[Rat]) -> Rat {
        u.iter()
            .zip(v)
            .zip(&self.form)
            .fold(Rat::zero(), |acc, ((a, b), w)| acc + a * b * w)
    }

    pub fn is_singular(&self, spec: &ArrangementSpec, v: &[Rat]) -> bool {
        let n = spec.n();
        subsets(n, spec.k() - 1).iter().all(|rest| {
            (0..n)
                .filter(|j| !rest.contains(j))
                .fold(Rat::zero(), |acc, j| {
                    let mut tuple = vec![j];
                    tuple.extend_from_slice(rest);
                    let (sign, sorted) = sort_with_sign(&tuple).expect("distinct");
                    let pos = self
                        .ambient
                        .binary_search_by(|s| s.as_slice().cmp(&sorted))
                        .expect("k-subset");
                    let c = spec.weight(j) * &v[pos];
                    if sign > 0 {
                        acc + c
                    } else {
                        acc - c
                    }
                })
                .is_zero()
        })
    }

    /// Coordinates of `s_perp(v)` in the basis of singular vectors.
    pub fn s_perp_coords(&self, v: &[Rat]) -> Vec<Rat> {
        let sv: Vec<Rat> = v.iter().zip(&self.form).map(|(a, w)| a * w).collect();
        self.gram_inverse.mul_vec(&self.basis.transpose().mul_vec(&sv))
    }

    /// `S`-orthogonal projection onto the singular vectors, in ambient coordinates.
    pub fn s_perp(&self, v: &[Rat]) -> Vec<Rat> {
        self.basis.mul_vec(&self.s_perp_coords(v))
    }
}

/// `μ` in coordinates: column `c` holds the singular-space coordinates of the
/// image of basis monomial `c`, i.e. `s_perp(v_I) / d_I`.
pub fn mu_map(alg: &QuotientAlgebra, sing: &SingSpace) -> RatMatrix {
    let cols: Vec<Vec<Rat>> = alg
        .basis
        .subsets
        .iter()
        .map(|idx| {
            let d = alg.spec.d(idx);
            sing.s_perp_coords(&sing.unit(idx))
                .into_iter()
                .map(|x| x / d.clone())
                .collect()
        })
        .collect();
    RatMatrix::from_columns(&cols)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MuIndependence {
    pub j1: usize,
    pub j1_alt: usize,
    pub checked: usize,
    pub mismatches: usize,
    pub rank: usize,
    pub dim: usize,
    /// `μ K_j μ^{-1}` computed from both bases agree for every `j`.
    pub conjugates_agree: bool,
}

impl MuIndependence {
    pub fn passed(&self) -> bool {
        self.mismatches == 0 && self.rank == self.dim && self.conjugates_agree
    }
}

/// Pushes `d_{I'} p_{I'}` for every basis subset `I'` of the `j1_alt` basis
/// through the `j1` map and compares with `s_perp(v_{I'})`.
pub fn mu_independence_check(
    spec: &ArrangementSpec,
    z: &[Rat],
    j1: usize,
    j1_alt: usize,
    sing: &SingSpace,
) -> Result<MuIndependence> {
    let alg = QuotientAlgebra::new(spec, z, j1)?;
    let alt_alg = QuotientAlgebra::new(spec, z, j1_alt)?;
    let mu = mu_map(&alg, sing);
    let mu_alt = mu_map(&alt_alg, sing);
    let n = spec.n();
    let mut mismatches = 0;
    for idx in alt_alg.basis.subsets() {
        let element = LaurentPoly::p_monomial(n, idx, spec.d(idx));
        let image = mu.mul_vec(&alg.normal_form(&element)?);
        if image != sing.s_perp_coords(&sing.unit(idx)) {
            mismatches += 1;
        }
    }
    let conjugates_agree = match (mu.inverse(), mu_alt.inverse()) {
        (Some(inv), Some(inv_alt)) => (0..n).all(|j| {
            mu.mul(alg.operator(j)).mul(&inv) == mu_alt.mul(alt_alg.operator(j)).mul(&inv_alt)
        }),
        _ => false,
    };
    Ok(MuIndependence {
        j1: j1 + 1,
        j1_alt: j1_alt + 1,
        checked: alt_alg.dim(),
        mismatches,
        rank: mu.rank(),
        dim: alg.dim(),
        conjugates_agree,
    })
}

/// Convenience: `p`-polynomial for `p_j` alone.
pub fn momentum(n: usize, j: usize) -> LaurentPoly {
    LaurentPoly::var(n, Var::P(j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::is_identity;
    use crate::relations::build_g_comb;
    use crate::symbolic::{int, rat};

    fn two_one() -> ArrangementSpec {
        ArrangementSpec::from_ints(&[&[1], &[1]], &[1, 1]).unwrap()
    }

    fn three_two() -> ArrangementSpec {
        ArrangementSpec::from_ints(&[&[1, 0], &[0, 1], &[1, 1]], &[1, 1, 1]).unwrap()
    }

    fn z01() -> Vec<Rat> {
        vec![int(0), int(1)]
    }

    #[test]
    fn elimination_examples() {
        assert_eq!(eliminate_first_kind(&two_one(), 0, &[]).unwrap(), vec![(1, int(-1))]);
        assert_eq!(eliminate_first_kind(&three_two(), 0, &[2]).unwrap(), vec![(1, int(1))]);
        assert!(eliminate_first_kind(&three_two(), 0, &[0]).is_err());
        assert!(eliminate_first_kind(&three_two(), 0, &[1, 2]).is_err());
    }

    #[test]
    fn reduction_examples() {
        let s = two_one();
        let basis = QuotientBasis::new(&s, 0).unwrap();
        assert_eq!(basis.subsets(), &[vec![1]]);
        assert_eq!(reduce_monomial(&s, &z01(), &[0, 2], &basis).unwrap(), vec![int(2)]);
        assert_eq!(reduce_monomial(&s, &z01(), &[1, 1], &basis).unwrap(), vec![int(-2)]);
        assert_eq!(reduce_monomial(&s, &z01(), &[0, 1], &basis).unwrap(), vec![int(1)]);
        assert!(matches!(
            reduce_monomial(&s, &z01(), &[0, 3], &basis),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn worked_operators() {
        let alg = QuotientAlgebra::new(&two_one(), &z01(), 0).unwrap();
        assert_eq!(alg.operator(1), &RatMatrix::from_rows(vec![vec![int(2)]]));
        assert_eq!(alg.operator(0), &RatMatrix::from_rows(vec![vec![int(-2)]]));
        assert_eq!(alg.element_one(), &[rat(1, 2)]);
        assert!(alg.operator_checks().all_pass());
        assert!(QuotientAlgebra::new(&two_one(), &[int(1), int(1)], 0).is_err());
    }

    #[test]
    fn three_two_operators() {
        let z = vec![int(0), int(0), int(1)];
        let alg = QuotientAlgebra::new(&three_two(), &z, 0).unwrap();
        assert_eq!(alg.dim(), 1);
        let eig: Vec<Rat> = alg.operators().iter().map(|k| k[(0, 0)].clone()).collect();
        assert_eq!(eig, vec![int(-3), int(-3), int(3)]);
    }

    fn sample() -> (ArrangementSpec, Vec<Rat>) {
        let s = ArrangementSpec::random_generic(5, 2, 21, 3).unwrap();
        let z = vec![int(1), rat(-1, 2), int(3), rat(2, 3), int(-2)];
        assert!(s.is_off_discriminant(&z));
        (s, z)
    }

    #[test]
    fn operator_identities_hold_exactly() {
        let (s, z) = sample();
        let alg = QuotientAlgebra::new(&s, &z, 2).unwrap();
        assert_eq!(alg.dim(), 6);
        let checks = alg.operator_checks();
        assert!(checks.all_pass(), "{checks:?}");
        assert!(alg.second_kind_normal_forms_vanish().unwrap());
    }

    #[test]
    fn unit_is_independent_of_the_chosen_subset() {
        let (s, z) = sample();
        let alg = QuotientAlgebra::new(&s, &z, 0).unwrap();
        for which in 0..alg.dim() {
            assert_eq!(alg.element_one_via(which).unwrap(), alg.element_one());
        }
        let id = alg.weighted_position_sum().scale(&s.weight_sum().recip());
        assert_eq!(id.mul_vec(alg.element_one()), alg.element_one());
    }

    #[test]
    fn normal_forms_of_relations_vanish() {
        let (s, z) = sample();
        let alg = QuotientAlgebra::new(&s, &z, 1).unwrap();
        for idx in subsets(5, 1) {
            assert!(alg.normal_form(&build_f_first(&s, &idx)).unwrap().iter().all(Zero::is_zero));
        }
        for idx in subsets(5, 3) {
            assert!(alg.normal_form(&build_g_comb(&s, &idx)).unwrap().iter().all(Zero::is_zero));
        }
        assert_eq!(alg.normal_form(&LaurentPoly::one(5)).unwrap(), alg.element_one());
    }

    #[test]
    fn reduction_agrees_with_operator_route() {
        let (s, z) = sample();
        let alg = QuotientAlgebra::new(&s, &z, 3).unwrap();
        for idx in subsets(5, 2) {
            let e = exps_of(5, &idx);
            let direct = reduce_monomial(&s, &z, &e, alg.basis()).unwrap();
            let via_ops = alg.normal_form(&LaurentPoly::p_monomial(5, &idx, int(1))).unwrap();
            assert_eq!(direct, via_ops);
        }
        // squares: p_j^2 p_S
        for j in 0..5 {
            for other in 0..5 {
                if other == j {
                    continue;
                }
                let mut e = vec![0; 5];
                e[j] = 2;
                e[other] = 1;
                let direct = reduce_monomial(&s, &z, &e, alg.basis()).unwrap();
                let poly = &(&momentum(5, j) * &momentum(5, j)) * &momentum(5, other);
                assert_eq!(direct, alg.normal_form(&poly).unwrap());
            }
        }
    }

    #[test]
    fn change_of_basis_conjugates_operators() {
        let (s, z) = sample();
        let a = QuotientAlgebra::new(&s, &z, 0).unwrap();
        let b = QuotientAlgebra::new(&s, &z, 4).unwrap();
        // columns: coordinates of b's basis monomials in a's basis
        let cols: Vec<Vec<Rat>> = b
            .basis()
            .subsets()
            .iter()
            .map(|idx| a.normal_form(&LaurentPoly::p_monomial(5, idx, int(1))).unwrap())
            .collect();
        let t = RatMatrix::from_columns(&cols);
        let t_inv = t.inverse().unwrap();
        for j in 0..5 {
            assert_eq!(t_inv.mul(a.operator(j)).mul(&t), *b.operator(j));
        }
    }

    #[test]
    fn sing_space_worked_example() {
        let s = two_one();
        let sing = SingSpace::new(&s).unwrap();
        assert_eq!(sing.dim(), 1);
        assert_eq!(sing.s_perp(&sing.unit(&[0])), vec![rat(1, 2), rat(-1, 2)]);
        let alg = QuotientAlgebra::new(&s, &z01(), 0).unwrap();
        let mu = mu_map(&alg, &sing);
        let image = sing.basis().mul_vec(&mu.column(0));
        assert_eq!(image, vec![rat(-1, 2), rat(1, 2)]);
        let check = mu_independence_check(&s, &z01(), 0, 1, &sing).unwrap();
        assert!(check.passed(), "{check:?}");
    }

    #[test]
    fn sing_space_projector() {
        let (s, z) = sample();
        let sing = SingSpace::new(&s).unwrap();
        assert_eq!(sing.dim(), 6);
        assert_eq!(sing.ambient_dim(), 10);
        for idx in subsets(5, 2) {
            let v = sing.unit(&idx);
            let once = sing.s_perp(&v);
            assert!(sing.is_singular(&s, &once));
            assert_eq!(sing.s_perp(&once), once);
            // residual is S-orthogonal to Sing V
            let resid: Vec<Rat> = v.iter().zip(&once).map(|(a, b)| a - b).collect();
            for c in 0..sing.dim() {
                assert!(sing.contravariant(&resid, &sing.basis().column(c)).is_zero());
            }
        }
        for (j1, j1_alt) in [(0, 1), (2, 4), (3, 0)] {
            let check = mu_independence_check(&s, &z, j1, j1_alt, &sing).unwrap();
            assert!(check.passed(), "{check:?}");
        }
    }

    #[test]
    fn identity_in_algebra_coordinates() {
        let (s, z) = sample();
        let alg = QuotientAlgebra::new(&s, &z, 0).unwrap();
        let id = alg.weighted_position_sum().scale(&s.weight_sum().recip());
        assert!(is_identity(&id));
    }
}
