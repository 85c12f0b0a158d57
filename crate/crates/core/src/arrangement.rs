//! Arrangement data: the coefficient matrix of the linear parts `g_j`, the
//! weights, Plücker coordinates and the discriminant forms `f_I(z)`.
//!
//! Index tuples are 0-based slices. Plücker coordinates and discriminant
//! forms accept tuples in any order and extend antisymmetrically.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{usage, Error, Result};
use crate::linalg::RatMatrix;
use crate::symbolic::{format_rat, int, parse_rat, rat, LaurentPoly, Rat, Scalar};

/// All `r`-element subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < r - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if r <= n {
        rec(0, n, r, &mut Vec::with_capacity(r), &mut out);
    }
    out
}

pub fn binomial(n: usize, r: usize) -> usize {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Sorts `idx`, returning the permutation sign, or `None` on a repeated entry.
pub fn sort_with_sign(idx: &[usize]) -> Option<(i32, Vec<usize>)> {
    let mut v = idx.to_vec();
    let mut sign = 1;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some((sign, v))
    }
}

/// `idx` with position `m` removed.
pub fn without(idx: &[usize], m: usize) -> Vec<usize> {
    idx.iter()
        .enumerate()
        .filter(|&(i, _)| i != m)
        .map(|(_, &v)| v)
        .collect()
}

/// Sign `(-1)^m` for a 0-based position `m`, i.e. `(-1)^{m-1}` for 1-based `m`.
pub(crate) fn alt(m: usize) -> Rat {
    if m % 2 == 0 {
        Rat::one()
    } else {
        -Rat::one()
    }
}

/// A weighted generic arrangement of `n` parallelly translated hyperplanes in `C^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ArrangementSpec {
    n: usize,
    k: usize,
    b: Vec<Vec<Rat>>,
    a: Vec<Rat>,
    minors: BTreeMap<Vec<usize>, Rat>,
}

impl ArrangementSpec {
    /// `b` has one row per hyperplane (`b[j][m]` is the coefficient of `t_m` in `g_j`).
    pub fn new(b: Vec<Vec<Rat>>, a: Vec<Rat>) -> Result<Self> {
        let n = b.len();
        let k = b.first().map_or(0, Vec::len);
        if k == 0 || n <= k {
            return usage(format!("need n > k >= 1, got n = {n}, k = {k}"));
        }
        if b.iter().any(|row| row.len() != k) {
            return usage("coefficient matrix rows must all have length k");
        }
        if a.len() != n {
            return usage(format!("expected {n} weights, got {}", a.len()));
        }
        if let Some(j) = a.iter().position(Zero::is_zero) {
            return usage(format!("weight a{} is zero", j + 1));
        }
        if a.iter().fold(Rat::zero(), |s, x| s + x).is_zero() {
            return usage("the weights sum to zero");
        }
        let mut minors = BTreeMap::new();
        for idx in subsets(n, k) {
            let m = RatMatrix::from_fn(k, k, |l, c| b[idx[l]][c].clone());
            let d = m.det();
            if d.is_zero() {
                let named: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
                return usage(format!(
                    "arrangement is not generic: minor d_{{{}}} vanishes",
                    named.join(",")
                ));
            }
            minors.insert(idx, d);
        }
        Ok(ArrangementSpec { n, k, b, a, minors })
    }

    pub fn from_ints(b: &[&[i64]], a: &[i64]) -> Result<Self> {
        Self::new(
            b.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect(),
            a.iter().map(|&v| int(v)).collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn coefficients(&self) -> &[Vec<Rat>] {
        &self.b
    }

    pub fn b(&self, j: usize, m: usize) -> &Rat {
        &self.b[j][m]
    }

    pub fn weights(&self) -> &[Rat] {
        &self.a
    }

    pub fn weight(&self, j: usize) -> &Rat {
        &self.a[j]
    }

    /// `|a|`.
    pub fn weight_sum(&self) -> Rat {
        self.a.iter().fold(Rat::zero(), |s, x| s + x)
    }

    /// Dimension `C(n-1, k)` of the critical-set algebra.
    pub fn algebra_dim(&self) -> usize {
        binomial(self.n - 1, self.k)
    }

    /// Plücker coordinate `d_idx`; zero on a repeated index, antisymmetric otherwise.
    pub fn plucker(&self, idx: &[usize]) -> Result<Rat> {
        if idx.len() != self.k {
            return usage(format!("Plücker index needs {} entries, got {}", self.k, idx.len()));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.n) {
            return usage(format!("index {} out of range 1..={}", bad + 1, self.n));
        }
        Ok(self.d(idx))
    }

    /// Unchecked Plücker coordinate for in-range tuples of length `k`.
    pub(crate) fn d(&self, idx: &[usize]) -> Rat {
        match sort_with_sign(idx) {
            None => Rat::zero(),
            Some((sign, sorted)) => {
                let v = self.minors[&sorted].clone();
                if sign < 0 {
                    -v
                } else {
                    v
                }
            }
        }
    }

    fn check_tuple(&self, idx: &[usize], len: usize, distinct: bool) -> Result<()> {
        if idx.len() != len {
            return usage(format!("expected a tuple of length {len}, got {}", idx.len()));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.n) {
            return usage(format!("index {} out of range 1..={}", bad + 1, self.n));
        }
        if distinct && sort_with_sign(idx).is_none() {
            return usage("tuple has a repeated index");
        }
        Ok(())
    }

    /// Coefficients of `f_idx(z) = sum_m (-1)^{m-1} d_{idx without m} z_{idx_m}`, as a dense
    /// length-`n` vector.
    pub fn discriminant_coefficients(&self, idx: &[usize]) -> Result<Vec<Rat>> {
        self.check_tuple(idx, self.k + 1, true)?;
        let mut coeffs = vec![Rat::zero(); self.n];
        for (m, &i) in idx.iter().enumerate() {
            coeffs[i] += alt(m) * self.d(&without(idx, m));
        }
        Ok(coeffs)
    }

    pub fn discriminant_form(&self, idx: &[usize]) -> Result<LaurentPoly> {
        let coeffs = self.discriminant_coefficients(idx)?;
        Ok(coeffs
            .into_iter()
            .enumerate()
            .fold(LaurentPoly::zero(self.n), |acc, (j, c)| {
                &acc + &LaurentPoly::z(self.n, j).scale(&c)
            }))
    }

    pub fn discriminant_value<T: Scalar>(&self, idx: &[usize], z: &[T]) -> Result<T> {
        let coeffs = self.discriminant_coefficients(idx)?;
        Ok(coeffs
            .iter()
            .zip(z)
            .fold(T::zero(), |acc, (c, x)| acc + T::from_rat(c) * x.clone()))
    }

    /// `true` iff `f_I(z) != 0` for every `(k+1)`-subset `I`.
    pub fn is_off_discriminant<T: Scalar>(&self, z: &[T]) -> bool {
        z.len() == self.n
            && subsets(self.n, self.k + 1).iter().all(|idx| {
                !self
                    .discriminant_value(idx, z)
                    .map(|v| v.is_zero())
                    .unwrap_or(true)
            })
    }

    /// Rank of the span of all discriminant forms.
    pub fn span_rank(&self) -> usize {
        let rows: Vec<Vec<Rat>> = subsets(self.n, self.k + 1)
            .iter()
            .map(|idx| self.discriminant_coefficients(idx).expect("valid subset"))
            .collect();
        RatMatrix::from_rows(rows).rank()
    }

    /// `sum_m (-1)^{m-1} d_{jseq without m} d_{j_m, iseq}`; always zero.
    pub fn plucker_relation_residual(&self, jseq: &[usize], iseq: &[usize]) -> Result<Rat> {
        self.check_tuple(jseq, self.k + 1, false)?;
        self.check_tuple(iseq, self.k - 1, false)?;
        let mut acc = Rat::zero();
        for (m, &j) in jseq.iter().enumerate() {
            let mut tail = vec![j];
            tail.extend_from_slice(iseq);
            acc += alt(m) * self.d(&without(jseq, m)) * self.d(&tail);
        }
        Ok(acc)
    }

    /// `f_j(z, t) = z_j + sum_m b^m_j t_m`.
    pub fn affine_value<T: Scalar>(&self, j: usize, z: &[T], t: &[T]) -> T {
        self.b[j]
            .iter()
            .zip(t)
            .fold(z[j].clone(), |acc, (c, x)| acc + T::from_rat(c) * x.clone())
    }

    /// Left-hand side of `sum_m (-1)^{m-1} d_{idx without m} (z_{i_m} - f_{i_m}(z,t)) = 0`.
    pub fn id1_residual<T: Scalar>(&self, idx: &[usize], z: &[T], t: &[T]) -> Result<T> {
        self.check_tuple(idx, self.k + 1, true)?;
        Ok(idx.iter().enumerate().fold(T::zero(), |acc, (m, &i)| {
            let diff = z[i].clone() - self.affine_value(i, z, t);
            acc + T::from_rat(&(alt(m) * self.d(&without(idx, m)))) * diff
        }))
    }

    /// Random generic arrangement with integer coefficients in `[-bound, bound]`.
    pub fn random_generic(n: usize, k: usize, seed: u64, coeff_bound: i64) -> Result<Self> {
        if k == 0 || n <= k {
            return usage(format!("need n > k >= 1, got n = {n}, k = {k}"));
        }
        if coeff_bound < 1 {
            return usage("coeff_bound must be at least 1");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nonzero = |rng: &mut ChaCha8Rng| loop {
            let v = rng.gen_range(-coeff_bound..=coeff_bound);
            if v != 0 {
                return v;
            }
        };
        for _ in 0..1000 {
            let b: Vec<Vec<Rat>> = (0..n)
                .map(|_| (0..k).map(|_| int(rng.gen_range(-coeff_bound..=coeff_bound))).collect())
                .collect();
            let a: Vec<i64> = (0..n).map(|_| nonzero(&mut rng)).collect();
            if a.iter().sum::<i64>() == 0 {
                continue;
            }
            if let Ok(spec) = Self::new(b, a.into_iter().map(int).collect()) {
                return Ok(spec);
            }
        }
        Err(Error::Generation(format!(
            "no generic {n}x{k} matrix found with entries bounded by {coeff_bound}"
        )))
    }

    /// Small random rational `z` off the discriminant.
    pub fn sample_z(&self, rng: &mut impl Rng) -> Result<Vec<Rat>> {
        for _ in 0..200 {
            let z: Vec<Rat> = (0..self.n)
                .map(|_| rat(rng.gen_range(-6..=6), rng.gen_range(1..=3)))
                .collect();
            if self.is_off_discriminant(&z) {
                return Ok(z);
            }
        }
        Err(Error::Generation("could not sample z off the discriminant".into()))
    }
}

/// A rational written in text as `"p/q"` or as a plain integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatText(pub Rat);

impl Serialize for RatText {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rat(&self.0))
    }
}

impl<'de> Deserialize<'de> for RatText {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = RatText;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a rational as \"p/q\" or an integer")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<RatText, E> {
                parse_rat(v).map(RatText).map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<RatText, E> {
                Ok(RatText(int(v)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<RatText, E> {
                i64::try_from(v)
                    .map(|v| RatText(int(v)))
                    .map_err(|_| E::custom("integer too large"))
            }
        }
        d.deserialize_any(V)
    }
}

pub fn rat_texts(v: &[Rat]) -> Vec<RatText> {
    v.iter().cloned().map(RatText).collect()
}

/// On-disk form of an arrangement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecFile {
    pub n: usize,
    pub k: usize,
    pub b: Vec<Vec<RatText>>,
    pub a: Vec<RatText>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<RatText>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeff_bound: Option<i64>,
}

impl SpecFile {
    pub fn from_spec(spec: &ArrangementSpec, z: Option<&[Rat]>) -> Self {
        SpecFile {
            n: spec.n,
            k: spec.k,
            b: spec.b.iter().map(|r| rat_texts(r)).collect(),
            a: rat_texts(&spec.a),
            z: z.map(rat_texts),
            seed: None,
            coeff_bound: None,
        }
    }

    pub fn to_spec(&self) -> Result<ArrangementSpec> {
        if self.b.len() != self.n || self.b.iter().any(|r| r.len() != self.k) {
            return usage(format!("matrix b must be {}x{}", self.n, self.k));
        }
        let spec = ArrangementSpec::new(
            self.b.iter().map(|r| r.iter().map(|x| x.0.clone()).collect()).collect(),
            self.a.iter().map(|x| x.0.clone()).collect(),
        )?;
        if let Some(z) = &self.z {
            if z.len() != self.n {
                return usage(format!("z must have {} entries", self.n));
            }
        }
        Ok(spec)
    }

    pub fn z_values(&self) -> Option<Vec<Rat>> {
        self.z.as_ref().map(|z| z.iter().map(|x| x.0.clone()).collect())
    }
}
