//! Dense linear algebra at desk scale.
//!
//! A flat row-major matrix plus the handful of factorizations the rest of the
//! crate needs: Cholesky (least-squares refits), Gaussian elimination (dense
//! test oracles), cyclic Jacobi (exact spectral norms of small symmetric
//! matrices), and modified Gram–Schmidt (random orthonormal frames). All
//! routines are written for matrices with at most a few thousand rows.

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    /// All-zeros matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Identity matrix.
    pub fn eye(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Build from a closure over (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.data[r * cols + c] = f(r, c);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    /// Borrow one row as a slice.
    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Mutable row access.
    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `A x` for a vector `x` of length `cols`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for r in 0..self.rows {
            y[r] = dot(self.row(r), x);
        }
        y
    }

    /// `Aᵀ x` for a vector `x` of length `rows`.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for r in 0..self.rows {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            let row = self.row(r);
            for c in 0..self.cols {
                y[c] += row[c] * xr;
            }
        }
        y
    }

    /// Transposed copy.
    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// Dense product `self * other`.
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let urow = out.row_mut(r);
                for c in 0..other.cols {
                    urow[c] += a * orow[c];
                }
            }
        }
        out
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }
}

/// Inner product of two equal-length slices.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
#[inline]
pub fn nrm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Squared Euclidean norm.
#[inline]
pub fn nrm2_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// ℓ₁ norm.
#[inline]
pub fn nrm1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

/// ℓ∞ norm.
#[inline]
pub fn nrm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
}

/// `y += alpha * x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Elementwise `a - b`.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Elementwise `a + b`.
pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `alpha * a` as a new vector.
pub fn scaled(alpha: f64, a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| alpha * x).collect()
}

/// Solve the symmetric positive-definite system `G x = b` by Cholesky.
///
/// Returns `None` when a pivot drops below `1e-12 * max_diag` (numerically
/// singular Gram matrix).
pub fn cholesky_solve(g: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    let n = g.rows;
    assert_eq!(g.cols, n);
    assert_eq!(b.len(), n);
    let max_diag = (0..n).fold(0.0f64, |m, i| m.max(g.get(i, i).abs())).max(1.0);
    // Lower-triangular factor, built in place.
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = g.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 1e-12 * max_diag {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    // Forward solve L z = b, then backward solve Lᵀ x = z.
    let mut z = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            z[i] -= l[i * n + k] * z[k];
        }
        z[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            z[i] -= l[k * n + i] * z[k];
        }
        z[i] /= l[i * n + i];
    }
    Some(z)
}

/// Solve a general square system `A x = b` by Gaussian elimination with
/// partial pivoting. Returns `None` on a (near-)singular pivot.
pub fn gauss_solve(a: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows;
    assert_eq!(a.cols, n);
    assert_eq!(b.len(), n);
    let mut m = a.data.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        // Pivot: largest magnitude in this column at/below the diagonal.
        let pivot_row = (col..n)
            .max_by(|&i, &j| {
                m[i * n + col]
                    .abs()
                    .partial_cmp(&m[j * n + col].abs())
                    .unwrap()
            })
            .unwrap();
        if m[pivot_row * n + col].abs() < 1e-14 {
            return None;
        }
        if pivot_row != col {
            for c in 0..n {
                m.swap(col * n + c, pivot_row * n + c);
            }
            x.swap(col, pivot_row);
        }
        let pivot = m[col * n + col];
        for row in col + 1..n {
            let f = m[row * n + col] / pivot;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[row * n + c] -= f * m[col * n + c];
            }
            x[row] -= f * x[col];
        }
    }
    for row in (0..n).rev() {
        for c in row + 1..n {
            x[row] -= m[row * n + c] * x[c];
        }
        x[row] /= m[row * n + row];
    }
    Some(x)
}

/// Spectral norm (largest |eigenvalue|) of a symmetric matrix, by cyclic
/// Jacobi rotations. Exact to ~1e-12 for the small matrices used here.
pub fn sym_spectral_norm(a: &Mat) -> f64 {
    let n = a.rows;
    assert_eq!(a.cols, n);
    if n == 0 {
        return 0.0;
    }
    if n == 1 {
        return a.data[0].abs();
    }
    let mut m = a.data.clone();
    let idx = |r: usize, c: usize| r * n + c;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for r in 0..n {
            for c in r + 1..n {
                off = off.max(m[idx(r, c)].abs());
            }
        }
        if off < 1e-13 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[idx(p, q)];
                if apq.abs() < 1e-15 {
                    continue;
                }
                let app = m[idx(p, p)];
                let aqq = m[idx(q, q)];
                // Standard Jacobi rotation that zeroes (p,q).
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[idx(k, p)];
                    let akq = m[idx(k, q)];
                    m[idx(k, p)] = c * akp - s * akq;
                    m[idx(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[idx(p, k)];
                    let aqk = m[idx(q, k)];
                    m[idx(p, k)] = c * apk - s * aqk;
                    m[idx(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).fold(0.0f64, |mx, i| mx.max(m[idx(i, i)].abs()))
}

/// Orthonormalize the columns of `a` in place by two passes of modified
/// Gram–Schmidt. Requires `rows >= cols`; returns `false` when a column's
/// norm collapses (rank deficiency).
pub fn orthonormalize_columns(a: &mut Mat) -> bool {
    let (rows, cols) = (a.rows, a.cols);
    assert!(rows >= cols);
    for pass in 0..2 {
        let _ = pass;
        for j in 0..cols {
            for i in 0..j {
                // col_j -= <col_i, col_j> col_i
                let mut proj = 0.0;
                for r in 0..rows {
                    proj += a.get(r, i) * a.get(r, j);
                }
                for r in 0..rows {
                    let v = a.get(r, j) - proj * a.get(r, i);
                    a.set(r, j, v);
                }
            }
            let mut norm = 0.0;
            for r in 0..rows {
                norm += a.get(r, j) * a.get(r, j);
            }
            let norm = norm.sqrt();
            if norm < 1e-12 {
                return false;
            }
            for r in 0..rows {
                let v = a.get(r, j) / norm;
                a.set(r, j, v);
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_matches_direct_solve() {
        // SPD system with a known solution.
        let g = Mat::from_fn(3, 3, |r, c| {
            let base = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
            base[r][c]
        });
        let x_true = vec![1.0, -2.0, 0.5];
        let b = g.matvec(&x_true);
        let x = cholesky_solve(&g, &b).unwrap();
        for (a, e) in x.iter().zip(&x_true) {
            assert!((a - e).abs() < 1e-10);
        }
    }

    #[test]
    fn cholesky_rejects_singular() {
        let g = Mat::from_fn(2, 2, |r, c| if r == c && r == 0 { 1.0 } else { 0.0 });
        assert!(cholesky_solve(&g, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn gauss_solves_permuted_system() {
        // Needs pivoting: zero on the leading diagonal.
        let a = Mat::from_fn(3, 3, |r, c| {
            let base = [[0.0, 2.0, 1.0], [1.0, 0.0, 3.0], [2.0, 1.0, 0.0]];
            base[r][c]
        });
        let x_true = vec![3.0, -1.0, 2.0];
        let b = a.matvec(&x_true);
        let x = gauss_solve(&a, &b).unwrap();
        for (got, exp) in x.iter().zip(&x_true) {
            assert!((got - exp).abs() < 1e-10);
        }
    }

    #[test]
    fn jacobi_spectral_norm_of_known_matrix() {
        // Eigenvalues of [[2,1],[1,2]] are 1 and 3.
        let a = Mat::from_fn(2, 2, |r, c| if r == c { 2.0 } else { 1.0 });
        assert!((sym_spectral_norm(&a) - 3.0).abs() < 1e-10);
        // A matrix whose largest-magnitude eigenvalue is negative.
        let b = Mat::from_fn(2, 2, |r, c| if r == c { -5.0 } else { 0.5 });
        assert!((sym_spectral_norm(&b) - 5.5).abs() < 1e-10);
    }

    #[test]
    fn mgs_produces_orthonormal_columns() {
        // Deterministic, mildly ill-conditioned input.
        let mut a = Mat::from_fn(6, 3, |r, c| ((r * 3 + c) as f64 * 0.37).sin() + 0.1);
        assert!(orthonormalize_columns(&mut a));
        for i in 0..3 {
            for j in 0..3 {
                let mut d = 0.0;
                for r in 0..6 {
                    d += a.get(r, i) * a.get(r, j);
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-12, "gram({i},{j}) = {d}");
            }
        }
    }
}
