//! Dense matrices over any [`Scalar`] field.
//!
//! Elimination picks the pivot of largest [`Scalar::magnitude`]; over `Rat`
//! that is simply the first nonzero entry, so every routine here is exact
//! in the rational path.

use std::ops::{Index, IndexMut};

use num_traits::{One, Zero};

use crate::symbolic::{format_rat, Rat, Scalar, CF};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type RatMatrix = Matrix<Rat>;
pub type CMatrix = Matrix<CF>;

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Panics on ragged input.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix rows");
        Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_columns(cols: &[Vec<T>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        Self::from_fn(r, c, |i, j| cols[j][i].clone())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn mul(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = &self[(i, l)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(l, j)];
                    if b.is_zero() {
                        continue;
                    }
                    let prod = a.clone() * b.clone();
                    let cell: &mut T = &mut out[(i, j)];
                    *cell = cell.clone() + prod;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    pub fn add(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        }
    }

    pub fn sub(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        }
    }

    pub fn scale(&self, c: &T) -> Matrix<T> {
        self.map(|x| x.clone() * c.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + self[(i, i)].clone())
    }

    /// Largest entry magnitude.
    pub fn max_magnitude(&self) -> f64 {
        self.data.iter().map(Scalar::magnitude).fold(0.0, f64::max)
    }

    /// Reduced row echelon form; returns the pivot columns.
    fn rref_in_place(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let (best, weight) = (r..self.rows)
                .map(|i| (i, self[(i, c)].magnitude()))
                .fold((r, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if weight == 0.0 {
                continue;
            }
            self.swap_rows(r, best);
            let inv = T::one() / self[(r, c)].clone();
            for j in c..self.cols {
                self[(r, j)] = self[(r, j)].clone() * inv.clone();
            }
            for i in 0..self.rows {
                if i == r || self[(i, c)].is_zero() {
                    continue;
                }
                let f = self[(i, c)].clone();
                for j in c..self.cols {
                    let v = self[(r, j)].clone() * f.clone();
                    self[(i, j)] = self[(i, j)].clone() - v;
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.clone().rref_in_place().len()
    }

    /// Basis of the right null space (one vector per free column).
    pub fn nullspace(&self) -> Vec<Vec<T>> {
        let mut m = self.clone();
        let pivots = m.rref_in_place();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![T::zero(); self.cols];
                v[f] = T::one();
                for (row, &pc) in pivots.iter().enumerate() {
                    v[pc] = -m[(row, f)].clone();
                }
                v
            })
            .collect()
    }

    pub fn det(&self) -> T {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.rows;
        let mut m = self.clone();
        let mut det = T::one();
        for c in 0..n {
            let (best, weight) = (c..n)
                .map(|i| (i, m[(i, c)].magnitude()))
                .fold((c, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if weight == 0.0 {
                return T::zero();
            }
            if best != c {
                m.swap_rows(best, c);
                det = -det;
            }
            let piv = m[(c, c)].clone();
            det = det * piv.clone();
            for i in c + 1..n {
                if m[(i, c)].is_zero() {
                    continue;
                }
                let f = m[(i, c)].clone() / piv.clone();
                for j in c..n {
                    let v = m[(c, j)].clone() * f.clone();
                    m[(i, j)] = m[(i, j)].clone() - v;
                }
            }
        }
        det
    }

    /// Solves `self * x = rhs` for square invertible `self`.
    pub fn solve(&self, rhs: &[T]) -> Option<Vec<T>> {
        let x = self.solve_matrix(&Matrix::from_columns(&[rhs.to_vec()]))?;
        Some(x.column(0))
    }

    pub fn solve_matrix(&self, rhs: &Matrix<T>) -> Option<Matrix<T>> {
        assert!(self.is_square(), "solve with a non-square matrix");
        assert_eq!(self.rows, rhs.rows);
        let n = self.rows;
        let mut aug = Matrix::from_fn(n, n + rhs.cols, |i, j| {
            if j < n {
                self[(i, j)].clone()
            } else {
                rhs[(i, j - n)].clone()
            }
        });
        let pivots = aug.rref_in_place();
        if pivots.len() < n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
            return None;
        }
        Some(Matrix::from_fn(n, rhs.cols, |i, j| aug[(i, n + j)].clone()))
    }

    pub fn inverse(&self) -> Option<Matrix<T>> {
        self.solve_matrix(&Matrix::identity(self.rows))
    }

    pub fn pow(&self, e: u32) -> Matrix<T> {
        let mut acc = Matrix::identity(self.rows);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }
}

impl RatMatrix {
    pub fn to_complex(&self) -> CMatrix {
        self.map(CF::from_rat)
    }

    pub fn to_string_rows(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(format_rat).collect())
            .collect()
    }
}

impl CMatrix {
    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

pub fn vec_norm(v: &[CF]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `true` when every entry is exactly one on the diagonal and zero elsewhere.
pub fn is_identity(m: &RatMatrix) -> bool {
    m.is_square()
        && (0..m.rows()).all(|i| {
            (0..m.cols()).all(|j| {
                let v = &m[(i, j)];
                if i == j {
                    v.is_one()
                } else {
                    v.is_zero()
                }
            })
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{int, rat};

    fn m(rows: &[&[i64]]) -> RatMatrix {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect())
    }

    #[test]
    fn determinant_and_inverse() {
        let a = m(&[&[2, 1, 0], &[1, 3, 1], &[0, 1, 4]]);
        assert_eq!(a.det(), int(18));
        let inv = a.inverse().unwrap();
        assert!(is_identity(&a.mul(&inv)));
        assert_eq!(m(&[&[0, 1], &[1, 0]]).det(), int(-1));
        assert_eq!(m(&[&[1, 2], &[2, 4]]).det(), int(0));
        assert!(m(&[&[1, 2], &[2, 4]]).inverse().is_none());
    }

    #[test]
    fn rank_and_nullspace() {
        let a = m(&[&[1, 1, 0, 0], &[0, 0, 1, 1], &[1, 1, 1, 1]]);
        assert_eq!(a.rank(), 2);
        let ns = a.nullspace();
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!(a.mul_vec(v).iter().all(Zero::is_zero));
        }
    }

    #[test]
    fn solve_rational_system() {
        let a = m(&[&[1, 2], &[3, 4]]);
        let x = a.solve(&[int(5), int(6)]).unwrap();
        assert_eq!(x, vec![int(-4), rat(9, 2)]);
    }

    #[test]
    fn complex_determinant() {
        let a = CMatrix::from_rows(vec![
            vec![CF::new(1.0, 1.0), CF::new(2.0, 0.0)],
            vec![CF::new(0.0, 1.0), CF::new(1.0, -1.0)],
        ]);
        let d = a.det();
        // (1+i)(1-i) - 2i = 2 - 2i
        assert!((d - CF::new(2.0, -2.0)).norm() < 1e-14);
    }
}
