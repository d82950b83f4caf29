//! Dense row-major matrices and the singular-value pipeline: Householder
//! bidiagonalization, then implicit QL on the Golub–Kahan tridiagonal whose
//! eigenvalues are `±σ`.

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

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::domain(format!(
                "{} values do not fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Householder vector for `x`: returns `(beta, v, alpha)` with
/// `(I - beta v vᵀ) x = alpha e₁`. `beta = 0` means no reflection.
fn householder(x: &[f64]) -> (f64, Vec<f64>, f64) {
    let norm2: f64 = x.iter().map(|v| v * v).sum();
    if norm2 == 0.0 {
        return (0.0, x.to_vec(), 0.0);
    }
    let norm = norm2.sqrt();
    let alpha = if x[0] >= 0.0 { -norm } else { norm };
    let mut v = x.to_vec();
    v[0] -= alpha;
    let beta = 1.0 / (norm2 - x[0] * alpha);
    (beta, v, alpha)
}

/// Reduces a tall matrix (`rows >= cols`) to upper bidiagonal form and
/// returns `(diagonal, superdiagonal)`.
pub fn bidiagonalize(input: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let (m, n) = (input.rows, input.cols);
    assert!(m >= n, "bidiagonalize expects rows >= cols");
    let mut a = input.clone();
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n.saturating_sub(1)];
    let mut w = vec![0.0; n];
    for k in 0..n {
        // Left reflector zeroes column k below the diagonal.
        let col: Vec<f64> = (k..m).map(|i| a.get(i, k)).collect();
        let (beta, v, alpha) = householder(&col);
        diag[k] = alpha;
        if beta != 0.0 && k + 1 < n {
            w[k + 1..].fill(0.0);
            for (vi, i) in v.iter().zip(k..m) {
                let row = &a.data[i * n..(i + 1) * n];
                for j in k + 1..n {
                    w[j] += vi * row[j];
                }
            }
            for (vi, i) in v.iter().zip(k..m) {
                let scale = beta * vi;
                let row = a.row_mut(i);
                for j in k + 1..n {
                    row[j] -= scale * w[j];
                }
            }
        }
        if k + 1 >= n {
            continue;
        }
        // Right reflector zeroes row k beyond the superdiagonal.
        let row: Vec<f64> = a.data[k * n + k + 1..(k + 1) * n].to_vec();
        let (beta, v, alpha) = householder(&row);
        sup[k] = alpha;
        if beta != 0.0 {
            for i in k + 1..m {
                let r = a.row_mut(i);
                let s: f64 = v.iter().zip(&r[k + 1..]).map(|(x, y)| x * y).sum();
                let scale = beta * s;
                for (x, y) in r[k + 1..].iter_mut().zip(&v) {
                    *x -= scale * y;
                }
            }
        }
    }
    (diag, sup)
}

/// Sweep budget per eigenvalue in [`tridiagonal_eigenvalues`].
pub const MAX_QL_SWEEPS: usize = 60;

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (`off.len() == diag.len() - 1`), by implicit-shift QL.
/// Returned ascending.
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    assert_eq!(off.len() + 1, n, "off-diagonal length");
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let norm = (0..n)
        .map(|i| d[i].abs() + e[i].abs() + if i > 0 { e[i - 1].abs() } else { 0.0 })
        .fold(0.0, f64::max);
    let floor = f64::EPSILON * norm;

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(Error::NoConvergence(MAX_QL_SWEEPS));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Singular values of `x`, ascending; `min(rows, cols)` of them.
pub fn singular_values(x: &Matrix) -> Result<Vec<f64>> {
    if x.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("matrix has non-finite entries"));
    }
    if x.rows == 0 || x.cols == 0 {
        return Ok(Vec::new());
    }
    let tall;
    let x = if x.rows >= x.cols {
        x
    } else {
        tall = x.transpose();
        &tall
    };
    let n = x.cols;
    let (diag, sup) = bidiagonalize(x);
    // Golub–Kahan form: zero diagonal, off-diagonal d0, e0, d1, e1, ..., d_{n-1}.
    let mut off = Vec::with_capacity(2 * n - 1);
    for k in 0..n {
        off.push(diag[k]);
        if k + 1 < n {
            off.push(sup[k]);
        }
    }
    let eig = tridiagonal_eigenvalues(&vec![0.0; 2 * n], &off)?;
    let mut sv: Vec<f64> = eig[n..].iter().map(|v| v.abs()).collect();
    sv.sort_by(f64::total_cmp);
    Ok(sv)
}
