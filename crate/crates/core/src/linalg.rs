//! Dense complex linear algebra for small matrices.
//!
//! Everything in this crate works on matrices of order ~16 or less, so the
//! routines here favour robustness over asymptotics: cyclic Jacobi for the
//! Hermitian eigenproblem (run on the real `2n x 2n` embedding), Householder
//! QR with column pivoting for null spaces, and an unpivoted Cholesky for
//! Hermitian positive definite solves.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Entrywise tolerance used to accept a matrix as Hermitian on input.
pub const HERMITIAN_INPUT_TOL: f64 = 1e-12;

/// Relative singular value threshold for rank decisions in [`null_space_basis`].
pub const RANK_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max deviation {max_dev:.3e} exceeds {tol:.3e}")]
    NotHermitian { max_dev: f64, tol: f64 },
    #[error("matrix is singular or not positive definite")]
    Singular,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("eigendecomposition did not converge")]
    NoConvergence,
}

/// Dense complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting bad shapes and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        for (idx, z) in data.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(LinalgError::NonFinite {
                    row: idx / cols.max(1),
                    col: idx % cols.max(1),
                });
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Rank-one outer product `v v^H`, scaled by `scale`.
    pub fn outer(v: &[Complex64], scale: f64) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |i, j| v[i] * v[j].conj() * scale)
    }

    /// Builds the matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<Complex64>]) -> Self {
        if cols.is_empty() {
            return Self::zeros(0, 0);
        }
        let rows = cols[0].len();
        Self::from_fn(rows, cols.len(), |i, j| cols[j][i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Conjugate transpose.
    pub fn herm(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = out.get(i, j) + a * rhs.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self.get(i, j) * v[j])
                    .sum::<Complex64>()
            })
            .collect()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) + rhs.get(i, j))
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) - rhs.get(i, j))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) * s)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise deviation from Hermitian symmetry.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.rows == self.cols && self.hermitian_deviation() <= tol
    }

    /// Symmetrizes in place: `A <- (A + A^H) / 2`.
    pub fn hermitianize(&mut self) {
        assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            for j in i..self.cols {
                let avg = (self.get(i, j) + self.get(j, i).conj()) * 0.5;
                self.set(i, j, avg);
                self.set(j, i, avg.conj());
            }
        }
    }

    /// `Re tr(C^H X)` — the real inner product on the Hermitian matrix space.
    pub fn real_inner(&self, rhs: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data
            .iter()
            .zip(rhs.data.iter())
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }
}

fn check_square_hermitian(a: &ComplexMatrix) -> Result<(), LinalgError> {
    if a.rows() != a.cols() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let dev = a.hermitian_deviation();
    let scale = 1.0 + a.frobenius_norm();
    if dev > HERMITIAN_INPUT_TOL * scale {
        return Err(LinalgError::NotHermitian {
            max_dev: dev,
            tol: HERMITIAN_INPUT_TOL * scale,
        });
    }
    Ok(())
}

// ─── Complex vector helpers ─────────────────────────────────────────────────

/// Conjugated inner product `a^H b`.
pub fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Euclidean norm.
pub fn cnorm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn cscale(v: &[Complex64], s: Complex64) -> Vec<Complex64> {
    v.iter().map(|z| z * s).collect()
}

// ─── Real symmetric Jacobi (internal workhorse) ─────────────────────────────

/// Cyclic Jacobi eigendecomposition of a dense real symmetric matrix.
///
/// `a` is row-major `n*n` and is destroyed. Returns eigenvalues and the
/// row-major matrix whose columns are the matching eigenvectors, unsorted.
pub(crate) fn jacobi_sym_eig(n: usize, a: &mut [f64]) -> Result<(Vec<f64>, Vec<f64>), LinalgError> {
    debug_assert_eq!(a.len(), n * n);
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    if n <= 1 {
        return Ok((a.iter().step_by(n.max(1) + 1).copied().collect(), v));
    }

    let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let stop = 1e-15 * norm.max(f64::MIN_POSITIVE);

    const MAX_SWEEPS: usize = 64;
    for _sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n - 1 {
            for q in p + 1..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if (2.0 * off).sqrt() <= stop {
            let vals = (0..n).map(|i| a[i * n + i]).collect();
            return Ok((vals, v));
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= 0.1 * stop / (n as f64) {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let sgn = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sgn / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for i in 0..n {
                    if i != p && i != q {
                        let aip = a[i * n + p];
                        let aiq = a[i * n + q];
                        let new_ip = aip - s * (aiq + tau * aip);
                        let new_iq = aiq + s * (aip - tau * aiq);
                        a[i * n + p] = new_ip;
                        a[p * n + i] = new_ip;
                        a[i * n + q] = new_iq;
                        a[q * n + i] = new_iq;
                    }
                }
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = vip - s * (viq + tau * vip);
                    v[i * n + q] = viq + s * (vip - tau * viq);
                }
            }
        }
    }
    Err(LinalgError::NoConvergence)
}

/// Eigendecomposition of a real symmetric matrix, eigenvalues descending.
pub(crate) fn sym_eig_desc(n: usize, a: &[f64]) -> Result<(Vec<f64>, Vec<f64>), LinalgError> {
    let mut work = a.to_vec();
    let (vals, vecs) = jacobi_sym_eig(n, &mut work)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap());
    let sorted_vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut sorted_vecs = vec![0.0; n * n];
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            sorted_vecs[i * n + new_j] = vecs[i * n + old_j];
        }
    }
    Ok((sorted_vals, sorted_vecs))
}

// ─── Hermitian eigendecomposition ───────────────────────────────────────────

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Real eigenvalues, sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub eigenvectors: ComplexMatrix,
}

/// Hermitian eigendecomposition via cyclic Jacobi on the real `2n x 2n`
/// embedding `[[Re A, -Im A], [Im A, Re A]]`.
///
/// Each complex eigenpair appears twice in the embedding; the duplicates are
/// collapsed by complexifying the real eigenvectors (`u = [x; y] -> x + iy`)
/// and keeping a maximal orthonormal subset.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEig, LinalgError> {
    check_square_hermitian(a)?;
    let n = a.rows();
    if n == 0 {
        return Ok(HermitianEig {
            eigenvalues: vec![],
            eigenvectors: ComplexMatrix::zeros(0, 0),
        });
    }

    let m = 2 * n;
    let mut emb = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = (a.get(i, j) + a.get(j, i).conj()) * 0.5;
            emb[i * m + j] = z.re;
            emb[i * m + (n + j)] = -z.im;
            emb[(n + i) * m + j] = z.im;
            emb[(n + i) * m + (n + j)] = z.re;
        }
    }

    let (vals, vecs) = sym_eig_desc(m, &emb)?;

    // Complexify embedded eigenvectors and keep an orthonormal subset of n.
    let mut kept_vals: Vec<f64> = Vec::with_capacity(n);
    let mut kept_vecs: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for j in 0..m {
        if kept_vecs.len() == n {
            break;
        }
        let mut cand: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(vecs[i * m + j], vecs[(n + i) * m + j]))
            .collect();
        for kv in &kept_vecs {
            let proj = cdot(kv, &cand);
            for (c, k) in cand.iter_mut().zip(kv.iter()) {
                *c -= proj * k;
            }
        }
        let norm = cnorm(&cand);
        if norm > 0.3 {
            let inv = Complex64::new(1.0 / norm, 0.0);
            kept_vecs.push(cscale(&cand, inv));
            kept_vals.push(vals[j]);
        }
    }
    if kept_vecs.len() != n {
        return Err(LinalgError::NoConvergence);
    }

    Ok(HermitianEig {
        eigenvalues: kept_vals,
        eigenvectors: ComplexMatrix::from_columns(&kept_vecs),
    })
}

// ─── Null space basis ───────────────────────────────────────────────────────

/// Orthonormal basis `U` of the null space of `H^H`, i.e. `H^H U = 0`.
///
/// Computed by Householder QR of `H` with column pivoting; the rank is
/// decided at [`RANK_THRESHOLD`] times the largest pivot, and the basis is
/// the trailing `rows - rank` columns of the accumulated `Q`. A matrix with
/// zero columns yields the full identity.
pub fn null_space_basis(h: &ComplexMatrix) -> ComplexMatrix {
    let n = h.rows();
    let m = h.cols();
    if m == 0 || n == 0 {
        return ComplexMatrix::identity(n);
    }

    let mut r = h.clone();
    let mut q = ComplexMatrix::identity(n);
    let mut diags: Vec<f64> = Vec::new();

    for l in 0..m.min(n) {
        // Column pivot: move the column with the largest remaining norm to l.
        let mut best = l;
        let mut best_norm = 0.0;
        for j in l..m {
            let nj: f64 = (l..n).map(|i| r.get(i, j).norm_sqr()).sum();
            if nj > best_norm {
                best_norm = nj;
                best = j;
            }
        }
        if best != l {
            for i in 0..n {
                let tmp = r.get(i, l);
                r.set(i, l, r.get(i, best));
                r.set(i, best, tmp);
            }
        }
        let xnorm = best_norm.sqrt();
        if xnorm <= f64::MIN_POSITIVE.sqrt() {
            break;
        }

        // Householder vector for column l below the diagonal.
        let x0 = r.get(l, l);
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let alpha = -phase * xnorm;
        let mut v: Vec<Complex64> = (l..n).map(|i| r.get(i, l)).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 > 0.0 {
            let beta = 2.0 / vnorm2;
            // R <- P R on the trailing block.
            for j in l..m {
                let dot: Complex64 = v
                    .iter()
                    .enumerate()
                    .map(|(k, vk)| vk.conj() * r.get(l + k, j))
                    .sum();
                let f = dot * beta;
                for (k, vk) in v.iter().enumerate() {
                    let cur = r.get(l + k, j);
                    r.set(l + k, j, cur - f * vk);
                }
            }
            // Q <- Q P (reflector applied to columns l..n of Q).
            for i in 0..n {
                let dot: Complex64 = v
                    .iter()
                    .enumerate()
                    .map(|(k, vk)| q.get(i, l + k) * vk)
                    .sum();
                let f = dot * beta;
                for (k, vk) in v.iter().enumerate() {
                    let cur = q.get(i, l + k);
                    q.set(i, l + k, cur - f * vk.conj());
                }
            }
        }
        diags.push(r.get(l, l).norm());
    }

    let top = diags.first().copied().unwrap_or(0.0);
    let rank = diags.iter().filter(|&&d| d > RANK_THRESHOLD * top).count();

    ComplexMatrix::from_fn(n, n - rank, |i, j| q.get(i, rank + j))
}

// ─── Spectral norm ──────────────────────────────────────────────────────────

/// Largest singular value, computed from the Gram matrix on the short side.
pub fn spectral_norm(a: &ComplexMatrix) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    let mut gram = if a.rows() <= a.cols() {
        a.mul(&a.herm())
    } else {
        a.herm().mul(a)
    };
    gram.hermitianize();
    let eig = hermitian_eig(&gram).expect("Gram matrix is Hermitian by construction");
    eig.eigenvalues[0].max(0.0).sqrt()
}

// ─── Hermitian positive definite solve ──────────────────────────────────────

/// Solves `A x = b` for Hermitian positive definite `A` via Cholesky.
pub fn solve_hermitian_pd(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
    check_square_hermitian(a)?;
    let n = a.rows();
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "rhs length {} does not match matrix order {n}",
            b.len()
        )));
    }

    // Lower Cholesky factor.
    let mut l = ComplexMatrix::zeros(n, n);
    let max_diag = (0..n).map(|i| a.get(i, i).re.abs()).fold(0.0f64, f64::max);
    for j in 0..n {
        let mut d = a.get(j, j).re;
        for k in 0..j {
            d -= l.get(j, k).norm_sqr();
        }
        if d <= 1e-14 * max_diag.max(f64::MIN_POSITIVE) {
            return Err(LinalgError::Singular);
        }
        let ljj = d.sqrt();
        l.set(j, j, Complex64::new(ljj, 0.0));
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k).conj();
            }
            l.set(i, j, s / ljj);
        }
    }

    // Forward then backward substitution.
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l.get(i, k) * y[k];
        }
        y[i] = s / l.get(i, i);
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l.get(k, i).conj() * x[k];
        }
        x[i] = s / l.get(i, i);
    }
    Ok(x)
}
