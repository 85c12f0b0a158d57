//! Numeric recovery of the critical set.
//!
//! Two independent routes: joint eigenvectors of the commuting Bethe
//! operators (through the exact characteristic polynomial of a random
//! combination), and multistart Newton on the critical equations
//! `sum_j b^i_j a_j / f_j = 0`. Hessian and Jacobian closed forms are
//! evaluated on the recovered points.

use std::f64::consts::PI;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arrangement::{subsets, ArrangementSpec};
use crate::error::{domain, usage, Error, Result};
use crate::linalg::{vec_norm, CMatrix, Matrix, RatMatrix};
use crate::symbolic::{rat_to_f64, Rat, Scalar, CF};

/// Exact characteristic polynomial `det(λI - M)`, coefficients from the
/// constant term up to the leading `1`.
pub fn char_poly(m: &RatMatrix) -> Vec<Rat> {
    assert!(m.is_square(), "characteristic polynomial of a non-square matrix");
    let n = m.rows();
    let mut h: Vec<Vec<Rat>> = m.to_rows();

    // similarity reduction to upper Hessenberg form
    for col in 0..n.saturating_sub(2) {
        let Some(piv) = (col + 1..n).find(|&i| !h[i][col].is_zero()) else {
            continue;
        };
        if piv != col + 1 {
            h.swap(piv, col + 1);
            for row in h.iter_mut() {
                row.swap(piv, col + 1);
            }
        }
        for i in col + 2..n {
            if h[i][col].is_zero() {
                continue;
            }
            let u = h[i][col].clone() / h[col + 1][col].clone();
            for j in 0..n {
                let v = h[col + 1][j].clone() * u.clone();
                h[i][j] -= v;
            }
            for row in h.iter_mut() {
                let v = row[i].clone() * u.clone();
                row[col + 1] += v;
            }
        }
    }

    // p_r = (λ - h_rr) p_{r-1} - sum_{i<r} h_ir (prod_{j=i+1..r} h_{j,j-1}) p_{i-1}
    let mut polys: Vec<Vec<Rat>> = vec![vec![Rat::one()]];
    for r in 0..n {
        let prev = &polys[r];
        let mut next = vec![Rat::zero(); r + 2];
        for (i, c) in prev.iter().enumerate() {
            next[i + 1] += c.clone();
            next[i] -= h[r][r].clone() * c;
        }
        let mut prod = Rat::one();
        for i in (0..r).rev() {
            prod *= h[i + 1][i].clone();
            if prod.is_zero() {
                break;
            }
            let c = h[i][r].clone() * prod.clone();
            if c.is_zero() {
                continue;
            }
            for (deg, q) in polys[i].iter().enumerate() {
                next[deg] -= c.clone() * q;
            }
        }
        polys.push(next);
    }
    polys.pop().expect("at least the constant polynomial")
}

fn horner(coeffs: &[CF], x: CF) -> (CF, CF) {
    let mut val = CF::zero();
    let mut der = CF::zero();
    for c in coeffs.iter().rev() {
        der = der * x + val;
        val = val * x + c;
    }
    (val, der)
}

fn backward_error(coeffs: &[CF], x: CF) -> f64 {
    let r = x.norm();
    let scale: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| c.norm() * r.powi(i as i32))
        .sum();
    horner(coeffs, x).0.norm() / scale.max(f64::MIN_POSITIVE)
}

const ROOT_SWEEPS: usize = 200;

/// All complex roots of the polynomial with coefficients `coeffs` (constant
/// term first) by simultaneous Aberth-Ehrlich iteration, stopping when every
/// root has relative backward error below `tol`.
pub fn poly_roots(coeffs: &[Rat], tol: f64) -> Result<Vec<CF>> {
    let Some(deg) = coeffs.iter().rposition(|c| !c.is_zero()) else {
        return usage("zero polynomial has no finite root set");
    };
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg].clone();
    let monic: Vec<f64> = coeffs[..=deg]
        .iter()
        .map(|c| rat_to_f64(&(c.clone() / lead.clone())))
        .collect();

    let radius = (0..deg)
        .map(|i| monic[i].abs().powf(1.0 / (deg - i) as f64))
        .fold(0.0, f64::max);
    if radius == 0.0 {
        return Ok(vec![CF::zero(); deg]);
    }
    let scaled: Vec<CF> = monic
        .iter()
        .enumerate()
        .map(|(i, c)| CF::new(c / radius.powi((deg - i) as i32), 0.0))
        .collect();

    let start = 1.0 + scaled[..deg].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut roots: Vec<CF> = (0..deg)
        .map(|i| CF::from_polar(start, 2.0 * PI * i as f64 / deg as f64 + 0.4))
        .collect();

    let mut converged = false;
    for _ in 0..ROOT_SWEEPS {
        converged = true;
        for i in 0..deg {
            if backward_error(&scaled, roots[i]) < tol {
                continue;
            }
            converged = false;
            let (val, der) = horner(&scaled, roots[i]);
            let ratio = val / der;
            let repulsion: CF = (0..deg)
                .filter(|&j| j != i)
                .map(|j| CF::one() / (roots[i] - roots[j]))
                .sum();
            let step = ratio / (CF::one() - ratio * repulsion);
            if step.is_finite() {
                roots[i] -= step;
            }
        }
        if converged {
            break;
        }
    }
    if !converged {
        let worst = roots
            .iter()
            .map(|r| backward_error(&scaled, *r))
            .fold(0.0, f64::max);
        if !(worst < tol) {
            return Err(Error::Numeric(format!(
                "root finder did not converge in {ROOT_SWEEPS} sweeps (degree {deg}, worst backward error {worst:.3e})"
            )));
        }
    }
    Ok(roots.into_iter().map(|r| r * radius).collect())
}

/// Options for [`joint_spectrum`].
#[derive(Clone, Debug)]
pub struct SpectrumOptions {
    pub spectral_tol: f64,
    pub root_tol: f64,
    pub cluster_tol: f64,
    pub max_redraws: usize,
    pub seed: u64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            spectral_tol: 1e-9,
            root_tol: 1e-13,
            cluster_tol: 1e-6,
            max_redraws: 5,
            seed: 0,
        }
    }
}

/// One joint eigenvalue `(p_1, ..., p_n)` of the operators.
#[derive(Clone, Debug)]
pub struct SpectralPoint {
    pub p: Vec<CF>,
    /// `‖K_j v - p_j v‖ / (‖K_j‖ ‖v‖)` for each operator.
    pub residuals: Vec<f64>,
    pub multiplicity: usize,
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub points: Vec<SpectralPoint>,
    /// Characteristic polynomial of `sum_j c_j K_j`, constant term first.
    pub charpoly: Vec<Rat>,
    pub combination: Vec<i64>,
    pub redraws: usize,
    /// Eigenvalues of the combination stayed clustered after every redraw.
    pub clustered: bool,
}

impl SpectrumResult {
    pub fn count_with_multiplicity(&self) -> usize {
        self.points.iter().map(|p| p.multiplicity).sum()
    }

    pub fn max_residual(&self) -> f64 {
        self.points
            .iter()
            .flat_map(|p| p.residuals.iter().copied())
            .fold(0.0, f64::max)
    }

    pub fn momenta(&self) -> Vec<Vec<CF>> {
        self.points.iter().map(|p| p.p.clone()).collect()
    }
}

fn clusters(roots: &[CF], tol: f64) -> Vec<Vec<usize>> {
    let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, r) in roots.iter().enumerate() {
        match groups
            .iter_mut()
            .find(|g| g.iter().any(|&j| (roots[j] - r).norm() <= tol * scale))
        {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    groups
}

/// LU factors with complete pivoting: `P A Q = L U`.
struct CompleteLu {
    lu: Vec<Vec<CF>>,
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl CompleteLu {
    fn new(a: &CMatrix) -> Self {
        let n = a.rows();
        let mut lu = a.to_rows();
        let mut rows: Vec<usize> = (0..n).collect();
        let mut cols: Vec<usize> = (0..n).collect();
        for s in 0..n {
            let (mut bi, mut bj, mut best) = (s, s, -1.0);
            for (i, row) in lu.iter().enumerate().skip(s) {
                for (j, v) in row.iter().enumerate().skip(s) {
                    if v.norm() > best {
                        best = v.norm();
                        bi = i;
                        bj = j;
                    }
                }
            }
            lu.swap(s, bi);
            rows.swap(s, bi);
            for row in lu.iter_mut() {
                row.swap(s, bj);
            }
            cols.swap(s, bj);
            let piv = lu[s][s];
            if piv.norm() == 0.0 {
                continue;
            }
            for i in s + 1..n {
                let l = lu[i][s] / piv;
                lu[i][s] = l;
                for j in s + 1..n {
                    let v = lu[s][j];
                    lu[i][j] -= l * v;
                }
            }
        }
        CompleteLu { lu, rows, cols }
    }

    fn pivot(&self, s: usize) -> f64 {
        self.lu[s][s].norm()
    }

    /// Vector with `U y = 0` in the first `n-1` rows, mapped back through `Q`.
    fn null_vector(&self) -> Vec<CF> {
        let n = self.lu.len();
        let mut y = vec![CF::zero(); n];
        y[n - 1] = CF::one();
        for i in (0..n - 1).rev() {
            let s: CF = (i + 1..n).map(|j| self.lu[i][j] * y[j]).sum();
            y[i] = -s / self.guarded(i);
        }
        let mut x = vec![CF::zero(); n];
        for (i, &c) in self.cols.iter().enumerate() {
            x[c] = y[i];
        }
        x
    }

    fn guarded(&self, i: usize) -> CF {
        let floor = self.pivot(0).max(f64::MIN_POSITIVE) * 1e-15;
        if self.lu[i][i].norm() < floor {
            CF::new(floor, 0.0)
        } else {
            self.lu[i][i]
        }
    }

    fn solve(&self, b: &[CF]) -> Vec<CF> {
        let n = self.lu.len();
        let mut y: Vec<CF> = self.rows.iter().map(|&r| b[r]).collect();
        for i in 0..n {
            for j in 0..i {
                let v = self.lu[i][j] * y[j];
                y[i] -= v;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let v = self.lu[i][j] * y[j];
                y[i] -= v;
            }
            y[i] /= self.guarded(i);
        }
        let mut x = vec![CF::zero(); n];
        for (i, &c) in self.cols.iter().enumerate() {
            x[c] = y[i];
        }
        x
    }
}

fn normalized(v: Vec<CF>) -> Vec<CF> {
    let norm = vec_norm(&v);
    v.into_iter().map(|x| x / norm).collect()
}

fn hermitian_dot(u: &[CF], v: &[CF]) -> CF {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

const PIVOT_THRESHOLD: f64 = 1e-6;

fn eigenvector(c: &CMatrix, lambda: CF) -> Result<Vec<CF>> {
    let n = c.rows();
    let shifted = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            c[(i, j)] - lambda
        } else {
            c[(i, j)]
        }
    });
    let lu = CompleteLu::new(&shifted);
    let top = lu.pivot(0).max(c.norm()).max(f64::MIN_POSITIVE);
    if lu.pivot(n - 1) > PIVOT_THRESHOLD * top {
        return Err(Error::Numeric(format!(
            "rank anomaly: C - λI has no small pivot at λ = {lambda}"
        )));
    }
    let mut v = normalized(lu.null_vector());
    for _ in 0..2 {
        let w = lu.solve(&v);
        if w.iter().all(|x| x.is_finite()) && vec_norm(&w) > 0.0 {
            v = normalized(w);
        }
    }
    Ok(v)
}

/// Joint eigenvalues of commuting exact operators.
pub fn joint_spectrum(operators: &[RatMatrix], opts: &SpectrumOptions) -> Result<SpectrumResult> {
    let Some(first) = operators.first() else {
        return usage("joint spectrum of an empty operator family");
    };
    let dim = first.rows();
    if operators.iter().any(|k| !k.is_square() || k.rows() != dim) {
        return usage("operators must be square of a common size");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut redraws = 0;
    let (combination, charpoly, roots, groups) = loop {
        let c: Vec<i64> = (0..operators.len())
            .map(|_| {
                let v: i64 = rng.gen_range(1..=9);
                if rng.gen_bool(0.5) {
                    -v
                } else {
                    v
                }
            })
            .collect();
        let comb = operators.iter().zip(&c).fold(RatMatrix::zeros(dim, dim), |acc, (k, &ci)| {
            acc.add(&k.scale(&Rat::from_integer(ci.into())))
        });
        let cp = char_poly(&comb);
        let roots = poly_roots(&cp, opts.root_tol)?;
        let groups = clusters(&roots, opts.cluster_tol);
        if groups.len() == roots.len() || redraws == opts.max_redraws {
            break (c, cp, roots, groups);
        }
        redraws += 1;
    };
    let clustered = groups.len() != roots.len();

    let comb = operators
        .iter()
        .zip(&combination)
        .fold(CMatrix::zeros(dim, dim), |acc, (k, &ci)| {
            acc.add(&k.to_complex().scale(&CF::new(ci as f64, 0.0)))
        });
    let ops: Vec<CMatrix> = operators.iter().map(RatMatrix::to_complex).collect();
    let norms: Vec<f64> = ops.iter().map(|k| k.norm().max(f64::MIN_POSITIVE)).collect();

    let mut points = groups
        .par_iter()
        .map(|g| {
            let lambda: CF = g.iter().map(|&i| roots[i]).sum::<CF>() / g.len() as f64;
            let v = eigenvector(&comb, lambda)?;
            let vv = hermitian_dot(&v, &v);
            let mut p = Vec::with_capacity(ops.len());
            let mut residuals = Vec::with_capacity(ops.len());
            for (k, norm) in ops.iter().zip(&norms) {
                let kv = k.mul_vec(&v);
                let pj = hermitian_dot(&v, &kv) / vv;
                let diff: Vec<CF> = kv.iter().zip(&v).map(|(a, b)| a - pj * b).collect();
                residuals.push(vec_norm(&diff) / (norm * vec_norm(&v)));
                p.push(pj);
            }
            Ok(SpectralPoint {
                p,
                residuals,
                multiplicity: g.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| cmp_vectors(&a.p, &b.p));
    Ok(SpectrumResult {
        points,
        charpoly,
        combination,
        redraws,
        clustered,
    })
}

fn cmp_vectors(a: &[CF], b: &[CF]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o.is_ne() {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}

/// Exact joint eigenvalue when the algebra is one-dimensional.
pub fn rational_point(operators: &[RatMatrix]) -> Option<Vec<Rat>> {
    if operators.iter().all(|k| k.rows() == 1 && k.cols() == 1) {
        Some(operators.iter().map(|k| k[(0, 0)].clone()).collect())
    } else {
        None
    }
}

/// A critical point of the master function at fixed `z`.
#[derive(Clone, Debug)]
pub struct CriticalPoint {
    pub t: Vec<CF>,
    /// `p_j = a_j / f_j(z, t)`.
    pub p: Vec<CF>,
    /// `max_i |∂Φ/∂t_i|`.
    pub residual: f64,
    pub hess: CF,
}

#[derive(Clone, Debug)]
pub struct NewtonOptions {
    /// Starts per round; defaults to `50 · C(n-1, k)`.
    pub n_starts: Option<usize>,
    /// Further rounds of fresh starts are run while fewer than `C(n-1, k)`
    /// distinct points have been found.
    pub max_rounds: usize,
    pub tol: f64,
    pub dedup_tol: f64,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            n_starts: None,
            tol: 1e-12,
            dedup_tol: 1e-7,
            seed: 0,
            max_iter: 100,
            max_rounds: 4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonResult {
    pub points: Vec<CriticalPoint>,
    pub expected: usize,
    pub starts: usize,
    pub converged_starts: usize,
    /// Fewer distinct points than `C(n-1, k)` were found.
    pub incomplete: bool,
}

fn affine_values(spec: &ArrangementSpec, z: &[CF], t: &[CF]) -> Vec<CF> {
    (0..spec.n()).map(|j| spec.affine_value(j, z, t)).collect()
}

/// `∂Φ/∂t_i = sum_j b^i_j a_j / f_j`, together with the scale `sum_j |b^i_j a_j / f_j|`.
fn gradient(spec: &ArrangementSpec, f: &[CF]) -> (Vec<CF>, f64) {
    let mut scale: f64 = 0.0;
    let g = (0..spec.k())
        .map(|i| {
            let mut sum = CF::zero();
            let mut abs = 0.0;
            for (j, fj) in f.iter().enumerate() {
                let term = CF::from_rat(spec.b(j, i)) * CF::from_rat(spec.weight(j)) / fj;
                sum += term;
                abs += term.norm();
            }
            scale = scale.max(abs);
            sum
        })
        .collect();
    (g, scale)
}

fn critical_hessian_matrix<T: Scalar>(spec: &ArrangementSpec, f: &[T]) -> Matrix<T> {
    let k = spec.k();
    Matrix::from_fn(k, k, |i, l| {
        f.iter().enumerate().fold(T::zero(), |acc, (j, fj)| {
            let c = T::from_rat(&(spec.weight(j) * spec.b(j, i) * spec.b(j, l)));
            acc - c / (fj.clone() * fj.clone())
        })
    })
}

fn max_abs(v: &[CF]) -> f64 {
    v.iter()
        .map(|x| x.norm())
        .fold(0.0, |acc, x| if x.is_nan() { f64::INFINITY } else { acc.max(x) })
}

/// Global phase on `h_i = f_{a_i} f_{b_i} ∂Φ/∂t_i`, with a pair of affine forms
/// per equation. The cleared system grows linearly at infinity, so damped
/// Newton contracts instead of escaping; with distinct pairs per equation it
/// has no extra finite zeros for generic data.
fn cleared_newton(
    spec: &ArrangementSpec,
    z: &[CF],
    mut t: Vec<CF>,
    pairs: &[(usize, usize)],
    max_iter: usize,
) -> Option<Vec<CF>> {
    let k = spec.k();
    let c = |i: usize, j: usize| CF::from_rat(&(spec.b(j, i) * spec.weight(j)));
    let b = |j: usize, l: usize| CF::from_rat(spec.b(j, l));
    let eval = |t: &[CF]| -> Option<(Vec<CF>, CMatrix, f64)> {
        let f = affine_values(spec, z, t);
        let mut h = vec![CF::zero(); k];
        let mut jac = CMatrix::zeros(k, k);
        let mut scale: f64 = 0.0;
        for (i, &(a, bb)) in pairs.iter().enumerate() {
            let (fa, fb) = (f[a], f[bb]);
            let mut abs = 0.0;
            for (j, fj) in f.iter().enumerate() {
                let cij = c(i, j);
                let term = if j == a {
                    for l in 0..k {
                        jac[(i, l)] += cij * b(bb, l);
                    }
                    cij * fb
                } else if j == bb {
                    for l in 0..k {
                        jac[(i, l)] += cij * b(a, l);
                    }
                    cij * fa
                } else {
                    if fj.norm() == 0.0 {
                        return None;
                    }
                    let q = fa * fb / fj;
                    for l in 0..k {
                        jac[(i, l)] += cij * ((b(a, l) * fb + fa * b(bb, l)) / fj - q * b(j, l) / fj);
                    }
                    cij * q
                };
                abs += term.norm();
                h[i] += term;
            }
            scale = scale.max(abs);
        }
        Some((h, jac, scale))
    };
    let (mut h, mut jac, mut scale) = eval(&t)?;
    let mut norm = vec_norm(&h);
    for _ in 0..max_iter {
        if !norm.is_finite() {
            return None;
        }
        if norm < 1e-10 * scale {
            return Some(t);
        }
        let step = jac.solve(&h.iter().map(|v| -v).collect::<Vec<_>>())?;
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand: Vec<CF> = t.iter().zip(&step).map(|(u, d)| u + d * alpha).collect();
            if let Some((ch, cj, cs)) = eval(&cand) {
                let cn = vec_norm(&ch);
                if cn.is_finite() && cn < (1.0 - 1e-4 * alpha) * norm {
                    t = cand;
                    h = ch;
                    jac = cj;
                    scale = cs;
                    norm = cn;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    None
}

fn newton_run(
    spec: &ArrangementSpec,
    z: &[CF],
    mut t: Vec<CF>,
    radius: f64,
    opts: &NewtonOptions,
) -> Option<Vec<CF>> {
    let mut f = affine_values(spec, z, &t);
    let (mut g, mut scale) = gradient(spec, &f);
    for _ in 0..opts.max_iter {
        let res = max_abs(&g);
        if !res.is_finite() {
            return None;
        }
        if res < opts.tol * scale.max(1.0) {
            // two polishing steps, kept only if they help
            for _ in 0..2 {
                let jac = critical_hessian_matrix(spec, &f);
                let Some(step) = jac.solve(&g.iter().map(|x| -x).collect::<Vec<_>>()) else {
                    break;
                };
                let cand: Vec<CF> = t.iter().zip(&step).map(|(a, b)| a + b).collect();
                let cf = affine_values(spec, z, &cand);
                let (cg, _) = gradient(spec, &cf);
                if max_abs(&cg) < max_abs(&g) {
                    t = cand;
                    f = cf;
                    g = cg;
                } else {
                    break;
                }
            }
            return Some(t);
        }
        let jac = critical_hessian_matrix(spec, &f);
        let mut step = jac.solve(&g.iter().map(|x| -x).collect::<Vec<_>>())?;
        let len = vec_norm(&step);
        if len > radius {
            step.iter_mut().for_each(|x| *x *= radius / len);
        }
        t.iter_mut().zip(&step).for_each(|(a, b)| *a += b);
        if vec_norm(&t) > 10.0 * radius {
            return None;
        }
        f = affine_values(spec, z, &t);
        if f.iter().any(|x| x.norm() == 0.0) {
            return None;
        }
        (g, scale) = gradient(spec, &f);
    }
    None
}

fn sample_disk(rng: &mut ChaCha8Rng, radius: f64) -> CF {
    let r = radius * rng.gen::<f64>().sqrt();
    CF::from_polar(r, 2.0 * PI * rng.gen::<f64>())
}

/// Largest norm of a vertex `f_J(z, t) = 0`, `|J| = k`, of the arrangement.
pub fn vertex_radius(spec: &ArrangementSpec, z: &[CF]) -> f64 {
    let k = spec.k();
    subsets(spec.n(), k)
        .iter()
        .filter_map(|idx| {
            let m = Matrix::from_fn(k, k, |r, c| CF::from_rat(spec.b(idx[r], c)));
            let rhs: Vec<CF> = idx.iter().map(|&j| -z[j]).collect();
            m.solve(&rhs).map(|t| vec_norm(&t))
        })
        .fold(0.0, f64::max)
}

/// Multistart damped Newton on the critical equations at a numeric `z`.
/// Starts are drawn from a polydisk of radius `2 (r + 1)`, `r` the
/// [`vertex_radius`], in rounds until all `C(n-1, k)` points are found.
pub fn newton_multistart(spec: &ArrangementSpec, z: &[CF], opts: &NewtonOptions) -> Result<NewtonResult> {
    if z.len() != spec.n() {
        return usage(format!("z must have {} entries", spec.n()));
    }
    if !spec.is_off_discriminant(z) {
        return domain("z lies on the discriminant");
    }
    let expected = spec.algebra_dim();
    let batch = opts.n_starts.unwrap_or(50 * expected);
    let radius = 2.0 * (vertex_radius(spec, z) + 1.0);
    let mut found: Vec<Vec<CF>> = Vec::new();
    let mut starts = 0;
    let mut converged_starts = 0;
    for _ in 0..opts.max_rounds.max(1) {
        let runs: Vec<Option<Vec<CF>>> = (starts..starts + batch)
            .into_par_iter()
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(s as u64 + 1);
                let t0: Vec<CF> = (0..spec.k()).map(|_| sample_disk(&mut rng, radius)).collect();
                let pairs: Vec<(usize, usize)> = (0..spec.k())
                    .map(|_| {
                        let a = rng.gen_range(0..spec.n());
                        (a, (a + rng.gen_range(1..spec.n())) % spec.n())
                    })
                    .collect();
                let t1 = cleared_newton(spec, z, t0, &pairs, opts.max_iter)?;
                newton_run(spec, z, t1, radius, opts)
            })
            .collect();
        starts += batch;
        converged_starts += runs.iter().filter(|r| r.is_some()).count();
        for t in runs.into_iter().flatten() {
            let scale = vec_norm(&t).max(1.0);
            let duplicate = found.iter().any(|u| {
                let d: Vec<CF> = u.iter().zip(&t).map(|(a, b)| a - b).collect();
                vec_norm(&d) < opts.dedup_tol * scale
            });
            if !duplicate {
                found.push(t);
            }
        }
        if found.len() >= expected {
            break;
        }
    }
    let mut points = found
        .into_iter()
        .map(|t| critical_point(spec, z, t))
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| cmp_vectors(&a.p, &b.p));
    Ok(NewtonResult {
        incomplete: points.len() < expected,
        points,
        expected,
        starts,
        converged_starts,
    })
}

/// Assembles a [`CriticalPoint`] from `t`.
pub fn critical_point(spec: &ArrangementSpec, z: &[CF], t: Vec<CF>) -> Result<CriticalPoint> {
    let f = affine_values(spec, z, &t);
    if f.iter().any(|x| x.norm() == 0.0) {
        return domain("critical point lies on a hyperplane");
    }
    let p: Vec<CF> = f
        .iter()
        .enumerate()
        .map(|(j, fj)| CF::from_rat(spec.weight(j)) / fj)
        .collect();
    let (g, _) = gradient(spec, &f);
    let hess = critical_hessian_matrix(spec, &f).det();
    Ok(CriticalPoint {
        residual: max_abs(&g),
        t,
        p,
        hess,
    })
}

/// `det(∂²Φ/∂t_i∂t_l)` with entries `-sum_j a_j b^i_j b^l_j / f_j²`.
pub fn hessian_direct<T: Scalar>(spec: &ArrangementSpec, z: &[T], t: &[T]) -> Result<T> {
    if z.len() != spec.n() || t.len() != spec.k() {
        return usage("hessian_direct: wrong vector lengths");
    }
    let f: Vec<T> = (0..spec.n()).map(|j| spec.affine_value(j, z, t)).collect();
    if f.iter().any(Zero::is_zero) {
        return domain("point lies on a hyperplane");
    }
    Ok(critical_hessian_matrix(spec, &f).det())
}

/// `(-1)^k sum_{|I|=k} d_I² prod_{i∈I} p_i² / a_i`.
pub fn hessian_formula<T: Scalar>(spec: &ArrangementSpec, p: &[T]) -> T {
    let sum = subsets(spec.n(), spec.k()).iter().fold(T::zero(), |acc, idx| {
        let d = spec.d(idx);
        let term = idx.iter().fold(T::from_rat(&(d.clone() * d)), |acc, &i| {
            acc * p[i].clone() * p[i].clone() / T::from_rat(spec.weight(i))
        });
        acc + term
    });
    if spec.k() % 2 == 1 {
        -sum
    } else {
        sum
    }
}

/// `(-1)^{n-k} sum_{|L|=n-k} d²_{L̄} prod_{j∈L} a_j / p_j²`, the value of
/// `d_M² Jac_M` for every `M`.
pub fn scaled_jacobian<T: Scalar>(spec: &ArrangementSpec, p: &[T]) -> Result<T> {
    if p.iter().any(Zero::is_zero) {
        return domain("momentum vanishes");
    }
    let n = spec.n();
    let k = spec.k();
    let sum = subsets(n, k).iter().fold(T::zero(), |acc, comp| {
        let d = spec.d(comp);
        let term = (0..n)
            .filter(|j| !comp.contains(j))
            .fold(T::from_rat(&(d.clone() * d)), |acc, j| {
                acc * T::from_rat(spec.weight(j)) / (p[j].clone() * p[j].clone())
            });
        acc + term
    });
    Ok(if (n - k) % 2 == 1 { -sum } else { sum })
}

/// `Jac_M`: the Jacobian of the projection to `z` in the chart `(z_M, p_{M̄})`.
pub fn jacobian_formula<T: Scalar>(spec: &ArrangementSpec, m: &[usize], p: &[T]) -> Result<T> {
    let d = spec.plucker(m)?;
    Ok(scaled_jacobian(spec, p)? / T::from_rat(&(d.clone() * d)))
}

/// Relative residual of `d_M² Jac_M = (-1)^n Hess prod_j a_j / p_j²`.
pub fn hess_jac_identity(spec: &ArrangementSpec, hess: CF, p: &[CF]) -> Result<f64> {
    let lhs = scaled_jacobian(spec, p)?;
    let prod = (0..spec.n()).fold(CF::one(), |acc, j| acc * CF::from_rat(spec.weight(j)) / (p[j] * p[j]));
    let rhs = if spec.n() % 2 == 1 { -hess * prod } else { hess * prod };
    Ok((lhs - rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE))
}

/// Mixed minor `det(∂²Φ/∂t_i ∂z_{j_m})` over the columns `cols`, evaluated directly.
pub fn mixed_minor_direct<T: Scalar>(spec: &ArrangementSpec, z: &[T], t: &[T], cols: &[usize]) -> Result<T> {
    if cols.len() != spec.k() {
        return usage("mixed minor needs k columns");
    }
    let f: Vec<T> = (0..spec.n()).map(|j| spec.affine_value(j, z, t)).collect();
    if f.iter().any(Zero::is_zero) {
        return domain("point lies on a hyperplane");
    }
    let k = spec.k();
    Ok(Matrix::from_fn(k, k, |i, m| {
        let j = cols[m];
        -T::from_rat(&(spec.b(j, i) * spec.weight(j))) / (f[j].clone() * f[j].clone())
    })
    .det())
}

/// Closed form of the same minor: `(-1)^k d_J prod_{j∈J} a_j / f_j²`.
pub fn mixed_minor_formula<T: Scalar>(spec: &ArrangementSpec, z: &[T], t: &[T], cols: &[usize]) -> Result<T> {
    let d = spec.plucker(cols)?;
    let mut acc = T::from_rat(&d);
    for &j in cols {
        let f = spec.affine_value(j, z, t);
        if f.is_zero() {
            return domain("point lies on a hyperplane");
        }
        acc = acc * T::from_rat(spec.weight(j)) / (f.clone() * f);
    }
    Ok(if spec.k() % 2 == 1 { -acc } else { acc })
}

/// Solves `z_j + sum_m b^m_j t_m = a_j / p_j` in the least-squares sense
/// (consistent on the critical set) via the normal equations.
pub fn recover_t<T: Scalar>(spec: &ArrangementSpec, z: &[T], p: &[T]) -> Result<Vec<T>> {
    let n = spec.n();
    let k = spec.k();
    if z.len() != n || p.len() != n {
        return usage("recover_t: wrong vector lengths");
    }
    if p.iter().any(Zero::is_zero) {
        return domain("momentum vanishes");
    }
    let b = Matrix::from_fn(n, k, |j, m| T::from_rat(spec.b(j, m)));
    let rhs: Vec<T> = (0..n)
        .map(|j| T::from_rat(spec.weight(j)) / p[j].clone() - z[j].clone())
        .collect();
    let bt = b.transpose();
    bt.mul(&b)
        .solve(&bt.mul_vec(&rhs))
        .ok_or_else(|| Error::Numeric("coefficient matrix is rank deficient".into()))
}

/// Pairs each vector in `a` with its nearest unused vector in `b`. Returns the
/// assignment and the largest relative distance `‖a_i - b_σ(i)‖ / max(1, ‖a_i‖)`.
pub fn match_points(a: &[Vec<CF>], b: &[Vec<CF>]) -> Option<(Vec<usize>, f64)> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut assignment = Vec::with_capacity(a.len());
    let mut worst: f64 = 0.0;
    for u in a {
        let scale = vec_norm(u).max(1.0);
        let (best, dist) = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, v)| {
                let d: Vec<CF> = u.iter().zip(v).map(|(x, y)| x - y).collect();
                (i, vec_norm(&d) / scale)
            })
            .min_by(|x, y| x.1.total_cmp(&y.1))?;
        used[best] = true;
        assignment.push(best);
        worst = worst.max(dist);
    }
    Some((assignment, worst))
}
