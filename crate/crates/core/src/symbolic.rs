//! Exact rationals and sparse Laurent polynomials in the phase-space
//! variables `z_1..z_n, p_1..p_n`.
//!
//! Variables are addressed through [`Var`]; indices are 0-based in the API
//! and printed 1-based (`z1`, `p3^-2`). Coefficients are always exact
//! rationals, so brackets and relation checks produce literal zeros.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{domain, usage, Error, Result};

pub type Rat = BigRational;
pub type CF = Complex64;

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

/// Parses `"p/q"` or `"p"` (surrounding whitespace allowed).
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let bad = || Error::Usage(format!("not a rational number: {s:?}"));
    match s.split_once('/') {
        Some((num, den)) => {
            let num: BigInt = num.trim().parse().map_err(|_| bad())?;
            let den: BigInt = den.trim().parse().map_err(|_| bad())?;
            if den.is_zero() {
                return usage(format!("zero denominator in {s:?}"));
            }
            Ok(Rat::new(num, den))
        }
        None => Ok(Rat::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// `"p/q"`, or `"p"` for integers. Inverse of [`parse_rat`].
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Field operations shared by the exact (`Rat`) and numeric (`CF`) paths.
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    fn from_rat(r: &Rat) -> Self;

    /// Size used for pivot selection and tolerance scaling. For exact
    /// rationals only zero/nonzero matters and this is 0 or 1.
    fn magnitude(&self) -> f64;

    fn is_finite_value(&self) -> bool {
        true
    }

    fn powi(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = acc * self.clone();
        }
        acc
    }
}

impl Scalar for Rat {
    fn from_rat(r: &Rat) -> Self {
        r.clone()
    }

    fn magnitude(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            1.0
        }
    }
}

impl Scalar for CF {
    fn from_rat(r: &Rat) -> Self {
        CF::new(rat_to_f64(r), 0.0)
    }

    fn magnitude(&self) -> f64 {
        self.norm()
    }

    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    fn powi(&self, e: u32) -> Self {
        Complex64::powu(self, e)
    }
}

/// A phase-space variable: position `z_j` or momentum `p_j` (0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Z(usize),
    P(usize),
}

impl Var {
    fn id(self, n: usize) -> usize {
        match self {
            Var::Z(j) => j,
            Var::P(j) => n + j,
        }
    }

    fn from_id(id: usize, n: usize) -> Var {
        if id < n {
            Var::Z(id)
        } else {
            Var::P(id - n)
        }
    }
}

/// A point `(z, p)` of the cotangent space.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint<T> {
    pub z: Vec<T>,
    pub p: Vec<T>,
}

pub type RatPoint = PhasePoint<Rat>;
pub type CPoint = PhasePoint<CF>;

impl<T: Scalar> PhasePoint<T> {
    pub fn new(z: Vec<T>, p: Vec<T>) -> Self {
        PhasePoint { z, p }
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }
}

impl RatPoint {
    pub fn to_complex(&self) -> CPoint {
        PhasePoint {
            z: self.z.iter().map(CF::from_rat).collect(),
            p: self.p.iter().map(CF::from_rat).collect(),
        }
    }
}

/// Sparse exponent vector: `(variable id, exponent)` sorted by id, no zero exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(Vec<(usize, i32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    fn single(id: usize, e: i32) -> Self {
        if e == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(id, e)])
        }
    }

    pub fn exponents(&self) -> &[(usize, i32)] {
        &self.0
    }

    pub fn exponent_of(&self, id: usize) -> i32 {
        self.0
            .iter()
            .find(|(v, _)| *v == id)
            .map_or(0, |(_, e)| *e)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < other.0.len() {
            let take = match (self.0.get(i), other.0.get(j)) {
                (Some(a), Some(b)) => a.0.cmp(&b.0),
                (Some(_), None) => Ordering::Less,
                _ => Ordering::Greater,
            };
            match take {
                Ordering::Less => {
                    out.push(self.0[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    let e = self.0[i].1 + other.0[j].1;
                    if e != 0 {
                        out.push((self.0[i].0, e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        Monomial(out)
    }

    fn total_degree(&self) -> i32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    /// Degree under the grading `deg p_j = 1`, `deg z_j = -1`.
    pub fn weighted_degree(&self, n: usize) -> i32 {
        self.0
            .iter()
            .map(|&(id, e)| if id < n { -e } else { e })
            .sum()
    }

    fn canonical_cmp(&self, other: &Monomial, nvars: usize) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| {
                // graded lex with z_1 < ... < z_n < p_1 < ... < p_n: compare from the largest variable down
                for id in (0..nvars).rev() {
                    match self.exponent_of(id).cmp(&other.exponent_of(id)) {
                        Ordering::Equal => continue,
                        ord => return ord,
                    }
                }
                Ordering::Equal
            })
    }
}

/// Exact Laurent polynomial with rational coefficients in `z_1..z_n, p_1..p_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaurentPoly {
    n: usize,
    terms: BTreeMap<Monomial, Rat>,
}

impl LaurentPoly {
    pub fn zero(n: usize) -> Self {
        LaurentPoly {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: Rat) -> Self {
        let mut out = Self::zero(n);
        out.add_term(Monomial::one(), c);
        out
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, Rat::one())
    }

    /// `c * v^e`.
    pub fn term(n: usize, v: Var, e: i32, c: Rat) -> Self {
        let mut out = Self::zero(n);
        out.add_term(Monomial::single(v.id(n), e), c);
        out
    }

    pub fn var(n: usize, v: Var) -> Self {
        Self::term(n, v, 1, Rat::one())
    }

    pub fn z(n: usize, j: usize) -> Self {
        Self::var(n, Var::Z(j))
    }

    pub fn p(n: usize, j: usize) -> Self {
        Self::var(n, Var::P(j))
    }

    /// Product of momenta `p_j` over `idx`, times `c`.
    pub fn p_monomial(n: usize, idx: &[usize], c: Rat) -> Self {
        let mut mono = Monomial::one();
        for &j in idx {
            mono = mono.mul(&Monomial::single(n + j, 1));
        }
        let mut out = Self::zero(n);
        out.add_term(mono, c);
        out
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Monomial, Rat)>) -> Self {
        let mut out = Self::zero(n);
        for (m, c) in terms {
            out.add_term(m, c);
        }
        out
    }

    /// Number of positions (equal to the number of momenta).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nvars(&self) -> usize {
        2 * self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rat {
        self.terms.get(m).cloned().unwrap_or_else(Rat::zero)
    }

    fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        let remove = match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing += c;
                existing.is_zero()
            }
            None => {
                self.terms.insert(m, c);
                false
            }
        };
        if remove {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    fn check_compatible(&self, other: &LaurentPoly) -> Result<()> {
        if self.n != other.n {
            return usage(format!(
                "variable count mismatch: {} vs {} positions",
                self.n, other.n
            ));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &LaurentPoly) -> Result<LaurentPoly> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &LaurentPoly) -> Result<LaurentPoly> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &LaurentPoly) -> Result<LaurentPoly> {
        self.check_compatible(other)?;
        let mut out = LaurentPoly::zero(self.n);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rat) -> LaurentPoly {
        if c.is_zero() {
            return LaurentPoly::zero(self.n);
        }
        LaurentPoly {
            n: self.n,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    /// Partial derivative; the power rule applies to negative exponents too.
    pub fn derive(&self, v: Var) -> LaurentPoly {
        let id = v.id(self.n);
        assert!(id < self.nvars(), "variable {v:?} out of range");
        let mut out = LaurentPoly::zero(self.n);
        for (m, c) in &self.terms {
            let e = m.exponent_of(id);
            if e == 0 {
                continue;
            }
            out.add_term(m.mul(&Monomial::single(id, -1)), c * int(e as i64));
        }
        out
    }

    pub fn depends_on(&self, v: Var) -> bool {
        let id = v.id(self.n);
        self.terms.keys().any(|m| m.exponent_of(id) != 0)
    }

    pub fn depends_on_z(&self) -> bool {
        (0..self.n).any(|j| self.depends_on(Var::Z(j)))
    }

    /// Common weighted degree of all terms (`deg p = 1`, `deg z = -1`), if any.
    pub fn homogeneous_degree(&self) -> Option<i32> {
        let mut degrees = self.terms.keys().map(|m| m.weighted_degree(self.n));
        let first = degrees.next()?;
        degrees.all(|d| d == first).then_some(first)
    }

    /// Substitution `p_j -> lambda p_j`, `z_j -> z_j / lambda`.
    pub fn scale_degree(&self, lambda: &Rat) -> Result<LaurentPoly> {
        if lambda.is_zero() {
            return usage("scale_degree requires a nonzero factor");
        }
        let terms = self.terms.iter().map(|(m, c)| {
            let d = m.weighted_degree(self.n);
            let factor = if d >= 0 {
                num_traits::pow(lambda.clone(), d as usize)
            } else {
                num_traits::pow(lambda.recip(), (-d) as usize)
            };
            (m.clone(), c * factor)
        });
        Ok(LaurentPoly::from_terms(self.n, terms))
    }

    /// Replace every `z_j` by the rational value `z[j]`.
    pub fn substitute_z(&self, z: &[Rat]) -> Result<LaurentPoly> {
        if z.len() != self.n {
            return usage(format!("expected {} z-values, got {}", self.n, z.len()));
        }
        let mut out = LaurentPoly::zero(self.n);
        for (m, c) in &self.terms {
            let mut coeff = c.clone();
            let mut rest = Vec::new();
            for &(id, e) in m.exponents() {
                if id < self.n {
                    if z[id].is_zero() && e < 0 {
                        return domain(format!("z{} = 0 is a pole", id + 1));
                    }
                    coeff *= if e >= 0 {
                        num_traits::pow(z[id].clone(), e as usize)
                    } else {
                        num_traits::pow(z[id].recip(), (-e) as usize)
                    };
                } else {
                    rest.push((id, e));
                }
            }
            out.add_term(Monomial(rest), coeff);
        }
        Ok(out)
    }

    pub fn eval<T: Scalar>(&self, point: &PhasePoint<T>) -> Result<T> {
        if point.z.len() != self.n || point.p.len() != self.n {
            return usage(format!(
                "point has {}+{} coordinates, polynomial needs {}+{}",
                point.z.len(),
                point.p.len(),
                self.n,
                self.n
            ));
        }
        let mut acc = T::zero();
        for (m, c) in &self.terms {
            let mut val = T::from_rat(c);
            for &(id, e) in m.exponents() {
                let x = match Var::from_id(id, self.n) {
                    Var::Z(j) => &point.z[j],
                    Var::P(j) => &point.p[j],
                };
                if e > 0 {
                    val = val * x.powi(e as u32);
                } else {
                    if x.is_zero() {
                        return domain(format!("pole at {}", var_name(id, self.n)));
                    }
                    val = val / x.powi((-e) as u32);
                }
            }
            acc = acc + val;
        }
        if !acc.is_finite_value() {
            return domain("evaluation produced a non-finite value");
        }
        Ok(acc)
    }

    /// `sum |c * monomial(point)|`: the size against which a numeric residual is judged.
    pub fn term_scale(&self, point: &CPoint) -> Result<f64> {
        let mut total = 0.0;
        for (m, c) in &self.terms {
            total += LaurentPoly::from_terms(self.n, [(m.clone(), c.clone())])
                .eval(point)?
                .norm();
        }
        Ok(total)
    }

    /// Canonical text form: graded-lex order, coefficients as `num/den`.
    pub fn to_canonical_string(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut keys: Vec<&Monomial> = self.terms.keys().collect();
        keys.sort_by(|a, b| a.canonical_cmp(b, self.nvars()));
        let parts: Vec<String> = keys
            .into_iter()
            .map(|m| {
                let c = &self.terms[m];
                let mut s = format!("{}/{}", c.numer(), c.denom());
                for &(id, e) in m.exponents() {
                    s.push('*');
                    s.push_str(&var_name(id, self.n));
                    if e != 1 {
                        s.push_str(&format!("^{e}"));
                    }
                }
                s
            })
            .collect();
        parts.join(" + ")
    }

    /// Inverse of [`LaurentPoly::to_canonical_string`].
    pub fn parse_canonical(n: usize, s: &str) -> Result<LaurentPoly> {
        let s = s.trim();
        if s == "0" {
            return Ok(LaurentPoly::zero(n));
        }
        let mut out = LaurentPoly::zero(n);
        for term in s.split(" + ") {
            let mut pieces = term.trim().split('*');
            let coeff = parse_rat(pieces.next().unwrap_or(""))?;
            let mut mono = Monomial::one();
            for tok in pieces {
                let (name, e) = match tok.split_once('^') {
                    Some((name, e)) => (
                        name,
                        e.parse::<i32>()
                            .map_err(|_| Error::Usage(format!("bad exponent in {tok:?}")))?,
                    ),
                    None => (tok, 1),
                };
                let (kind, idx) = name.split_at(1);
                let idx: usize = idx
                    .parse()
                    .map_err(|_| Error::Usage(format!("bad variable {name:?}")))?;
                if idx == 0 || idx > n {
                    return usage(format!("variable {name:?} out of range"));
                }
                let v = match kind {
                    "z" => Var::Z(idx - 1),
                    "p" => Var::P(idx - 1),
                    _ => return usage(format!("bad variable {name:?}")),
                };
                mono = mono.mul(&Monomial::single(v.id(n), e));
            }
            out.add_term(mono, coeff);
        }
        Ok(out)
    }
}

fn var_name(id: usize, n: usize) -> String {
    match Var::from_id(id, n) {
        Var::Z(j) => format!("z{}", j + 1),
        Var::P(j) => format!("p{}", j + 1),
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical_string())
    }
}

/// Canonical Poisson bracket `sum_j (dM/dz_j dN/dp_j - dM/dp_j dN/dz_j)`.
///
/// Panics if the polynomials live in different phase spaces.
pub fn poisson(m: &LaurentPoly, other: &LaurentPoly) -> LaurentPoly {
    assert_eq!(m.n, other.n, "poisson bracket of incompatible polynomials");
    let mut out = LaurentPoly::zero(m.n);
    for j in 0..m.n {
        let mz = m.derive(Var::Z(j));
        let mp = m.derive(Var::P(j));
        if mz.is_zero() && mp.is_zero() {
            continue;
        }
        let nz = other.derive(Var::Z(j));
        let np = other.derive(Var::P(j));
        out = &out + &(&(&mz * &np) - &(&mp * &nz));
    }
    out
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl<'a> $tr<&'a LaurentPoly> for &'a LaurentPoly {
            type Output = LaurentPoly;
            fn $method(self, rhs: &'a LaurentPoly) -> LaurentPoly {
                self.$checked(rhs).expect(concat!("LaurentPoly::", stringify!($method)))
            }
        }
        impl $tr for LaurentPoly {
            type Output = LaurentPoly;
            fn $method(self, rhs: LaurentPoly) -> LaurentPoly {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        self.scale(&-Rat::one())
    }
}

impl Neg for LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const N: usize = 3;

    fn p(j: usize) -> LaurentPoly {
        LaurentPoly::p(N, j)
    }

    fn z(j: usize) -> LaurentPoly {
        LaurentPoly::z(N, j)
    }

    fn c(v: i64) -> LaurentPoly {
        LaurentPoly::constant(N, int(v))
    }

    #[test]
    fn arithmetic_examples() {
        let p1_inv = LaurentPoly::term(N, Var::P(0), -1, int(1));
        assert_eq!(&p(0) * &p1_inv, LaurentPoly::one(N));

        let zp = &z(0) * &p(0);
        assert!((&zp + &(-&zp)).is_zero());

        let lhs = &(&p(1) + &p(2)) * &(&p(1) - &p(2));
        let rhs = &(&p(1) * &p(1)) - &(&p(2) * &p(2));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn mismatched_counts_are_usage_errors() {
        let a = LaurentPoly::p(2, 0);
        let b = LaurentPoly::p(3, 0);
        assert!(matches!(a.checked_add(&b), Err(Error::Usage(_))));
        assert!(matches!(a.checked_mul(&b), Err(Error::Usage(_))));
    }

    #[test]
    fn derivative_examples() {
        // d/dp1 (z1 - a1/p1) = a1 p1^-2 with a1 = 3
        let g = &z(0) - &LaurentPoly::term(N, Var::P(0), -1, int(3));
        assert_eq!(g.derive(Var::P(0)), LaurentPoly::term(N, Var::P(0), -2, int(3)));
        assert!(p(1).derive(Var::Z(0)).is_zero());
        let f = &(&p(1) * &p(1)) * &p(2);
        assert_eq!(f.derive(Var::P(1)), (&p(1) * &p(2)).scale(&int(2)));
    }

    #[test]
    fn bracket_examples() {
        assert_eq!(poisson(&(&z(0) * &p(0)), &p(0)), p(0));
        let g1 = &z(0) - &LaurentPoly::term(N, Var::P(0), -1, int(1));
        let g2 = &z(1) - &LaurentPoly::term(N, Var::P(1), -1, int(2));
        assert!(poisson(&g1, &g2).is_zero());
        assert!(poisson(&g1, &g1).is_zero());
    }

    #[test]
    fn evaluation_examples() {
        let pt = PhasePoint::new(vec![int(0), int(1), int(0)], vec![int(-2), int(2), int(1)]);
        assert_eq!((&p(0) + &p(1)).eval(&pt).unwrap(), int(0));
        let e = &(&z(0) * &p(0)) + &(&z(1) * &p(1));
        assert_eq!(e.eval(&pt).unwrap(), int(2));
        assert_eq!(c(1).eval(&pt.to_complex()).unwrap(), CF::new(1.0, 0.0));
        let inv_z = LaurentPoly::term(N, Var::Z(0), -1, int(1));
        assert!(matches!(inv_z.eval(&pt), Err(Error::Domain(_))));
    }

    #[test]
    fn degree_scaling() {
        let lam = rat(3, 2);
        let f = &(&p(0) + &p(1)) + &(&(&z(0) * &p(0)) * &p(1));
        assert_eq!(f.homogeneous_degree(), Some(1));
        assert_eq!(f.scale_degree(&lam).unwrap(), f.scale(&lam));
        assert_eq!(f.scale_degree(&int(1)).unwrap(), f);
        let g = &z(0) - &LaurentPoly::term(N, Var::P(0), -1, int(5));
        assert_eq!(g.scale_degree(&lam).unwrap(), g.scale(&lam.recip()));
        assert!(matches!(f.scale_degree(&int(0)), Err(Error::Usage(_))));
    }

    #[test]
    fn canonical_text() {
        let f = &(&(&p(1) * &p(1)) - &p(2)) + &LaurentPoly::term(N, Var::Z(2), -2, rat(1, 3));
        let s = f.to_canonical_string();
        assert_eq!(s, "1/3*z3^-2 + -1/1*p3 + 1/1*p2^2");
        assert_eq!(LaurentPoly::parse_canonical(N, &s).unwrap(), f);
        assert_eq!(LaurentPoly::zero(N).to_string(), "0");
        assert_eq!(parse_rat(" -6/4 ").unwrap(), rat(-3, 2));
        assert_eq!(format_rat(&rat(-3, 2)), "-3/2");
        assert!(parse_rat("1/0").is_err());
    }

    fn arb_poly() -> impl Strategy<Value = LaurentPoly> {
        let term = (
            prop::collection::vec(-2i32..=2, 2 * N),
            -4i64..=4,
            1i64..=3,
        );
        prop::collection::vec(term, 0..4).prop_map(|terms| {
            LaurentPoly::from_terms(
                N,
                terms.into_iter().map(|(exps, num, den)| {
                    let mono = exps
                        .iter()
                        .enumerate()
                        .fold(Monomial::one(), |m, (id, &e)| m.mul(&Monomial::single(id, e)));
                    (mono, rat(num, den))
                }),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn bracket_is_antisymmetric(a in arb_poly(), b in arb_poly()) {
            prop_assert!((&poisson(&a, &b) + &poisson(&b, &a)).is_zero());
        }

        #[test]
        fn bracket_satisfies_leibniz(a in arb_poly(), b in arb_poly(), q in arb_poly()) {
            let lhs = poisson(&(&a * &b), &q);
            let rhs = &(&a * &poisson(&b, &q)) + &(&poisson(&a, &q) * &b);
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn bracket_satisfies_jacobi(a in arb_poly(), b in arb_poly(), q in arb_poly()) {
            let s = &(&poisson(&a, &poisson(&b, &q)) + &poisson(&b, &poisson(&q, &a)))
                + &poisson(&q, &poisson(&a, &b));
            prop_assert!(s.is_zero());
        }

        #[test]
        fn evaluation_is_multiplicative(
            a in arb_poly(),
            b in arb_poly(),
            coords in prop::collection::vec((0.3f64..2.0, -1.0f64..1.0), 2 * N),
        ) {
            let pt = PhasePoint::new(
                coords[..N].iter().map(|&(r, i)| CF::new(r, i)).collect(),
                coords[N..].iter().map(|&(r, i)| CF::new(r, i)).collect(),
            );
            let prod = (&a * &b).eval(&pt).unwrap();
            let expected = a.eval(&pt).unwrap() * b.eval(&pt).unwrap();
            let scale = a.term_scale(&pt).unwrap() * b.term_scale(&pt).unwrap();
            prop_assert!((prod - expected).norm() <= 1e-12 * scale.max(1.0));
        }

        #[test]
        fn canonical_text_round_trips(a in arb_poly()) {
            prop_assert_eq!(LaurentPoly::parse_canonical(N, &a.to_canonical_string()).unwrap(), a);
        }
    }
}
