//! Minimal dense linear algebra for the small systems this crate solves.
//!
//! Everything here is O(n³) textbook material on row-major storage; problem
//! sizes are a few dozen rows at most, so clarity wins over blocking.

use std::ops::{Index, IndexMut};

use crate::num::Real;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
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

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// `self' * self` (Gram matrix).
    pub fn xtx(&self) -> Mat<T> {
        let p = self.cols;
        let mut out = Mat::zeros(p, p);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..p {
                for b in a..p {
                    out[(a, b)] += r[a] * r[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                out[(a, b)] = out[(b, a)];
            }
        }
        out
    }

    /// `self' * y`.
    pub fn xty(&self, y: &[T]) -> Vec<T> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &yi) in y.iter().enumerate() {
            let r = self.row(i);
            for (o, &v) in out.iter_mut().zip(r) {
                *o += v * yi;
            }
        }
        out
    }

    /// Solve `self * x = b` by LU with partial pivoting. `None` if singular.
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(b.len(), self.rows);
        let n = self.rows;
        let mut a = self.clone();
        let mut x = b.to_vec();
        for col in 0..n {
            let pivot = (col..n).max_by(|&i, &j| {
                a[(i, col)]
                    .abs()
                    .partial_cmp(&a[(j, col)].abs())
                    .expect("NaN pivot")
            })?;
            if a[(pivot, col)].abs() <= T::epsilon() * T::from(n).unwrap() {
                return None;
            }
            if pivot != col {
                for k in 0..n {
                    let tmp = a[(col, k)];
                    a[(col, k)] = a[(pivot, k)];
                    a[(pivot, k)] = tmp;
                }
                x.swap(col, pivot);
            }
            for i in col + 1..n {
                let f = a[(i, col)] / a[(col, col)];
                if f == T::zero() {
                    continue;
                }
                for k in col..n {
                    let v = a[(col, k)];
                    a[(i, k)] -= f * v;
                }
                let v = x[col];
                x[i] -= f * v;
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= a[(i, k)] * x[k];
            }
            x[i] = s / a[(i, i)];
        }
        Some(x)
    }

    /// Dense product `self * other`.
    pub fn matmul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat<T> {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// Matrix inverse via column-by-column solves. `None` if singular.
    pub fn inverse(&self) -> Option<Mat<T>> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut out = Mat::zeros(n, n);
        for j in 0..n {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            let col = self.solve(&e)?;
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        Some(out)
    }

    /// Numerical rank by Gaussian elimination with partial pivoting.
    pub fn rank(&self) -> usize {
        let mut a = self.clone();
        let scale = self
            .data
            .iter()
            .fold(T::zero(), |m, v| m.max(v.abs()))
            .max(T::one());
        let tol = scale * T::epsilon() * T::from(self.rows.max(self.cols)).unwrap();
        let mut rank = 0;
        let mut row = 0;
        for col in 0..a.cols {
            let pivot = (row..a.rows)
                .max_by(|&i, &j| a[(i, col)].abs().partial_cmp(&a[(j, col)].abs()).unwrap());
            let Some(pivot) = pivot else { break };
            if a[(pivot, col)].abs() <= tol {
                continue;
            }
            if pivot != row {
                for k in 0..a.cols {
                    let tmp = a[(row, k)];
                    a[(row, k)] = a[(pivot, k)];
                    a[(pivot, k)] = tmp;
                }
            }
            for i in row + 1..a.rows {
                let f = a[(i, col)] / a[(row, col)];
                for k in col..a.cols {
                    let v = a[(row, k)];
                    a[(i, k)] -= f * v;
                }
            }
            rank += 1;
            row += 1;
            if row == a.rows {
                break;
            }
        }
        rank
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Ordinary least squares via the normal equations. `None` when `X'X` is
/// singular.
pub fn ols<T: Real>(x: &Mat<T>, y: &[T]) -> Option<Vec<T>> {
    x.xtx().solve(&x.xty(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_known_system() {
        let a: Mat<f64> = Mat::from_rows(vec![vec![2.0, 1.0], vec![1.0, 3.0]]);
        let x = a.solve(&[5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn singular_is_none() {
        let a: Mat<f64> = Mat::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(a.solve(&[1.0, 2.0]).is_none());
        assert_eq!(a.rank(), 1);
    }

    #[test]
    fn inverse_roundtrip() {
        let a: Mat<f64> = Mat::from_rows(vec![
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, 1.0],
            vec![0.0, 1.0, 2.0],
        ]);
        let inv = a.inverse().unwrap();
        for i in 0..3 {
            let prod = a.mul_vec(&(0..3).map(|j| inv[(j, i)]).collect::<Vec<_>>());
            for (k, v) in prod.iter().enumerate() {
                let want = if k == i { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ols_recovers_exact_line() {
        // y = 2 + 3 x, noiseless
        let x = Mat::from_rows((0..6).map(|i| vec![1.0, i as f64]).collect());
        let y: Vec<f64> = (0..6).map(|i| 2.0 + 3.0 * i as f64).collect();
        let beta = ols(&x, &y).unwrap();
        assert!((beta[0] - 2.0).abs() < 1e-10);
        assert!((beta[1] - 3.0).abs() < 1e-10);
    }
}
