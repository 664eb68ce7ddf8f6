//! Minimal dense linear algebra: a row-major matrix, Cholesky solves and
//! Householder-QR least squares. Problem sizes here are small (at most a
//! few hundred rows/columns), so nothing is blocked or pivoted.

use alloc::vec;
use alloc::vec::Vec;

use crate::float;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from row-major data. Panics if the length does not
    /// match `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length mismatch");
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `y = A x` with `x` of length `cols`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            y[i] = dot(self.row(i), x);
        }
        y
    }

    /// `y = A^T x` with `x` of length `rows`.
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for (yj, aij) in y.iter_mut().zip(self.row(i)) {
                *yj += aij * xi;
            }
        }
        y
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    float::sqrt(dot(v, v))
}

/// Lower-triangular Cholesky factor of a symmetric positive definite
/// matrix. Returns `None` if the matrix is not (numerically) positive
/// definite.
pub fn cholesky(a: &Mat) -> Option<Mat> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let ljj = float::sqrt(d);
        l.set(j, j, ljj);
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / ljj);
        }
    }
    Some(l)
}

/// Solves `L L^T x = b` given the lower factor from [`cholesky`].
pub fn cholesky_solve(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    assert_eq!(b.len(), n);
    // forward: L y = b
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l.get(i, k) * y[k];
        }
        y[i] /= l.get(i, i);
    }
    // backward: L^T x = y
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] -= l.get(k, i) * y[k];
        }
        y[i] /= l.get(i, i);
    }
    y
}

/// Solves the symmetric positive definite system `A x = b`.
pub fn solve_spd(a: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    cholesky(a).map(|l| cholesky_solve(&l, b))
}

/// Allocation-free SPD solve: `a` holds the `k x k` matrix row-major and
/// is overwritten with its Cholesky factor; `z` holds the right-hand
/// side and is overwritten with the solution. Returns `false` if the
/// matrix is not (numerically) positive definite.
pub fn solve_spd_in_place(a: &mut [f64], z: &mut [f64], k: usize) -> bool {
    debug_assert!(a.len() >= k * k && z.len() >= k);
    for i in 0..k {
        // rows above i are finished factor rows; row i is updated in place
        let (done, row_i) = a.split_at_mut(i * k);
        let row_i = &mut row_i[..k];
        for j in 0..i {
            let row_j = &done[j * k..j * k + j];
            let s = row_i[j] - dot(&row_i[..j], row_j);
            row_i[j] = s / done[j * k + j];
        }
        let s = row_i[i] - dot(&row_i[..i], &row_i[..i]);
        if !(s > 0.0) || !s.is_finite() {
            return false;
        }
        row_i[i] = float::sqrt(s);
    }
    for i in 0..k {
        let row_i = &a[i * k..i * k + k];
        z[i] = (z[i] - dot(&row_i[..i], &z[..i])) / row_i[i];
    }
    for i in (0..k).rev() {
        let mut s = z[i];
        for t in i + 1..k {
            s -= a[t * k + i] * z[t];
        }
        z[i] = s / a[i * k + i];
    }
    true
}

/// Least squares `min_z || M z - b ||` by Householder QR, for `M` with
/// `m >= k` rows and full column rank. Columns of `M` are given
/// explicitly. Returns `None` on (numerical) rank deficiency.
pub fn lstsq_qr(columns: &[&[f64]], b: &[f64]) -> Option<Vec<f64>> {
    let k = columns.len();
    if k == 0 {
        return Some(Vec::new());
    }
    let m = columns[0].len();
    assert!(columns.iter().all(|c| c.len() == m));
    assert_eq!(b.len(), m);
    assert!(m >= k, "least squares needs at least as many rows as columns");

    // Work on a column-major copy; r[j] holds column j.
    let mut r: Vec<Vec<f64>> = columns.iter().map(|c| c.to_vec()).collect();
    let mut rhs = b.to_vec();
    let mut diag = vec![0.0; k];

    let scale: f64 = r
        .iter()
        .flat_map(|c| c.iter())
        .fold(0.0, |acc: f64, &v| acc.max(v.abs()));
    let tiny = 1e-13 * (1.0 + scale);

    for j in 0..k {
        // Householder vector for column j, rows j..m.
        let mut alpha = 0.0;
        for i in j..m {
            alpha = float::hypot(alpha, r[j][i]);
        }
        if alpha <= tiny {
            return None;
        }
        if r[j][j] > 0.0 {
            alpha = -alpha;
        }
        // v = x - alpha e1, stored in place of column j (rows j..m).
        r[j][j] -= alpha;
        let vnorm2 = {
            let mut s = 0.0;
            for i in j..m {
                s += r[j][i] * r[j][i];
            }
            s
        };
        if vnorm2 <= 0.0 {
            return None;
        }
        diag[j] = alpha;
        // Apply the reflector to the remaining columns and the rhs.
        for t in (j + 1)..k {
            let mut s = 0.0;
            for i in j..m {
                s += r[j][i] * r[t][i];
            }
            let f = 2.0 * s / vnorm2;
            for i in j..m {
                r[t][i] -= f * r[j][i];
            }
        }
        let mut s = 0.0;
        for i in j..m {
            s += r[j][i] * rhs[i];
        }
        let f = 2.0 * s / vnorm2;
        for i in j..m {
            rhs[i] -= f * r[j][i];
        }
    }

    // Back substitution with R (upper triangular; diagonal in `diag`,
    // strict upper part in the untouched rows 0..j of columns j+1..k).
    let mut x = vec![0.0; k];
    for j in (0..k).rev() {
        let mut s = rhs[j];
        for t in (j + 1)..k {
            s -= r[t][j] * x[t];
        }
        if diag[j].abs() <= tiny {
            return None;
        }
        x[j] = s / diag[j];
    }
    Some(x)
}
