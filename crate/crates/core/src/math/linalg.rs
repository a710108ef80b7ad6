//! Small dense linear algebra: row-major matrices, Householder least
//! squares and Gauss-Jordan inversion. Sized for regressions with a
//! handful of columns and for optimizer Hessians.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Build from columns of equal length.
    pub fn from_columns(columns: &[&[f64]]) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.len());
        let mut m = Matrix::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::DimensionMismatch {
                    expected: rows,
                    got: c.len(),
                });
            }
            for (i, v) in c.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn inverse(&self) -> Result<Matrix> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: self.cols,
            });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[(x, col)].abs().total_cmp(&a[(y, col)].abs()))
                .unwrap_or(col);
            if a[(pivot, col)].abs() <= 1e-14 * scale {
                return Err(Error::RankDeficient { column: col });
            }
            a.swap_rows(pivot, col);
            inv.swap_rows(pivot, col);
            let p = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for i in 0..n {
                if i != col {
                    let f = a[(i, col)];
                    if f != 0.0 {
                        for j in 0..n {
                            a[(i, j)] -= f * a[(col, j)];
                            inv[(i, j)] -= f * inv[(col, j)];
                        }
                    }
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Least-squares solution of `X b = y` with the diagonal of `(X'X)^{-1}`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    /// Diagonal of `(X'X)^{-1}`; multiply by the residual variance for
    /// squared standard errors.
    pub xtx_inv_diag: Vec<f64>,
}

/// Householder QR least squares. A column whose residual norm after
/// projection on the preceding columns falls below `1e-10` of its own
/// norm is reported as rank deficient.
pub fn least_squares(x: &Matrix, y: &[f64]) -> Result<LeastSquares> {
    let (n, k) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if n <= k {
        return Err(Error::InsufficientData {
            what: "least squares (observations must exceed regressors)",
            needed: k + 1,
            got: n,
        });
    }
    let mut a = x.clone();
    let mut b = y.to_vec();
    let col_norms: Vec<f64> = (0..k)
        .map(|j| (0..n).map(|i| a[(i, j)].powi(2)).sum::<f64>().sqrt())
        .collect();
    let mut r = Matrix::zeros(k, k);
    for j in 0..k {
        let norm = (j..n).map(|i| a[(i, j)].powi(2)).sum::<f64>().sqrt();
        if col_norms[j] == 0.0 || norm <= 1e-10 * col_norms[j] {
            return Err(Error::RankDeficient { column: j });
        }
        let alpha = if a[(j, j)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..n).map(|i| a[(i, j)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 > 0.0 {
            for c in j..k {
                let dot: f64 = (j..n).map(|i| v[i - j] * a[(i, c)]).sum();
                let f = 2.0 * dot / vnorm2;
                for i in j..n {
                    a[(i, c)] -= f * v[i - j];
                }
            }
            let dot: f64 = (j..n).map(|i| v[i - j] * b[i]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in j..n {
                b[i] -= f * v[i - j];
            }
        }
        for c in j..k {
            r[(j, c)] = a[(j, c)];
        }
    }
    // back substitution
    let mut coef = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = ((i + 1)..k).map(|c| r[(i, c)] * coef[c]).sum();
        coef[i] = (b[i] - s) / r[(i, i)];
    }
    // R^{-1}, then diag(R^{-1} R^{-T}) = squared row norms of R^{-1}
    let mut rinv = Matrix::zeros(k, k);
    for c in 0..k {
        rinv[(c, c)] = 1.0 / r[(c, c)];
        for i in (0..c).rev() {
            let s: f64 = ((i + 1)..=c).map(|m| r[(i, m)] * rinv[(m, c)]).sum();
            rinv[(i, c)] = -s / r[(i, i)];
        }
    }
    let xtx_inv_diag = (0..k)
        .map(|i| (i..k).map(|c| rinv[(i, c)].powi(2)).sum())
        .collect();
    Ok(LeastSquares {
        coefficients: coef,
        xtx_inv_diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let m = Matrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ])
        .unwrap();
        let inv = m.inverse().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| m[(i, k)] * inv[(k, j)]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_inverse_is_rejected() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(m.inverse(), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn qr_matches_normal_equations() {
        let x = Matrix::from_rows(&[
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![1.0, 2.0],
            vec![1.0, 3.0],
        ])
        .unwrap();
        let y = [1.0, 3.0, 2.0, 5.0];
        let ls = least_squares(&x, &y).unwrap();
        // closed form for simple regression
        assert!((ls.coefficients[1] - 1.1).abs() < 1e-12);
        assert!((ls.coefficients[0] - 1.1).abs() < 1e-12);
        // (X'X)^{-1} = [[14,-6],[-6,4]]/20
        assert!((ls.xtx_inv_diag[0] - 0.7).abs() < 1e-12);
        assert!((ls.xtx_inv_diag[1] - 0.2).abs() < 1e-12);
    }
}
