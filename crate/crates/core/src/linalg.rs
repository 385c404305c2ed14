//! Dense complex-matrix kernels sized for two-party gates: at most 16x16.
//!
//! Everything here is row-major and double precision. The singular value
//! decomposition is a one-sided (Hestenes) Jacobi iteration, which is simple,
//! accurate to working precision on these sizes and needs no external LAPACK.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Sweep cap for the Jacobi iterations.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Convergence threshold on relative off-diagonal mass.
pub const JACOBI_TOL: f64 = 1e-14;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting empty shapes,
    /// length mismatches and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Input("matrix dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Input("matrix has non-finite entries".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in diag.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        Self::from_diag(&diag.iter().map(|&x| C64::from(x)).collect::<Vec<_>>())
    }

    /// Square matrix from nested rows. Panics on ragged input; meant for literals.
    pub fn from_rows<const N: usize>(rows: [[C64; N]; N]) -> Self {
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self { rows: N, cols: N, data }
    }

    pub fn from_real_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        let data = rows.iter().flat_map(|r| r.iter().map(|&x| C64::from(x))).collect();
        Self { rows: N, cols: N, data }
    }

    /// Column vector (n x 1).
    pub fn column(v: &[C64]) -> Self {
        Self { rows: v.len(), cols: 1, data: v.to_vec() }
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

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn col(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn row(&self, r: usize) -> Vec<C64> {
        self.data[r * self.cols..(r + 1) * self.cols].to_vec()
    }

    pub fn set_col(&mut self, c: usize, v: &[C64]) {
        for (r, &z) in v.iter().enumerate() {
            self[(r, c)] = z;
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(c, r)] = self[(r, c)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(c, r)] = self[(r, c)];
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Matrix product; panics on incompatible shapes (a programming error).
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let out_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        (0..self.rows)
            .map(|r| self.data[r * self.cols..(r + 1) * self.cols].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> C64 {
        assert!(self.is_square(), "determinant of non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = ONE;
        for k in 0..n {
            let pivot = (k..n).max_by(|&i, &j| a[i * n + k].norm().total_cmp(&a[j * n + k].norm())).unwrap();
            if a[pivot * n + k] == ZERO {
                return ZERO;
            }
            if pivot != k {
                for c in 0..n {
                    a.swap(k * n + c, pivot * n + c);
                }
                det = -det;
            }
            let p = a[k * n + k];
            det *= p;
            for r in k + 1..n {
                let f = a[r * n + k] / p;
                if f == ZERO {
                    continue;
                }
                for c in k..n {
                    let v = a[k * n + c];
                    a[r * n + c] -= f * v;
                }
            }
        }
        det
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        (self - other).frobenius_norm()
    }

    /// Frobenius distance after removing the best global phase,
    /// i.e. `min_phi || self - e^{i phi} other ||_F`.
    pub fn distance_up_to_phase(&self, other: &Self) -> f64 {
        let overlap: C64 = other.data.iter().zip(&self.data).map(|(o, s)| o.conj() * s).sum();
        let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
        self.frobenius_distance(&other.scale(phase))
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Kronecker product; row index of the result is `i_a * b.rows + i_b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            let x = a[(ar, ac)];
            if x == ZERO {
                continue;
            }
            for br in 0..b.rows {
                for bc in 0..b.cols {
                    out[(ar * b.rows + br, ac * b.cols + bc)] = x * b[(br, bc)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a list of vectors (state tensor product).
pub fn tensor_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
}

/// `|| m^dagger m - I ||_F`.
pub fn unitarity_residual(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let prod = &m.adjoint() * m;
    prod.frobenius_distance(&ComplexMatrix::identity(m.rows))
}

pub fn is_unitary(m: &ComplexMatrix, tol: f64) -> bool {
    unitarity_residual(m) <= tol
}

pub fn pauli(k: usize) -> ComplexMatrix {
    match k {
        0 => ComplexMatrix::identity(2),
        1 => ComplexMatrix::from_rows([[ZERO, ONE], [ONE, ZERO]]),
        2 => ComplexMatrix::from_rows([[ZERO, -I], [I, ZERO]]),
        3 => ComplexMatrix::from_rows([[ONE, ZERO], [ZERO, -ONE]]),
        _ => panic!("pauli index {k} out of range"),
    }
}

/// Expansion amplitudes of `exp(-i sum_k mu_k s_k (x) s_k)` in the basis
/// `{s_k (x) s_k}`, k = 0..3.
pub fn interaction_amplitudes(mu: [f64; 3]) -> [C64; 4] {
    let (s1, c1) = mu[0].sin_cos();
    let (s2, c2) = mu[1].sin_cos();
    let (s3, c3) = mu[2].sin_cos();
    [
        C64::new(c1 * c2 * c3, -s1 * s2 * s3),
        C64::new(c1 * s2 * s3, -s1 * c2 * c3),
        C64::new(s1 * c2 * s3, -c1 * s2 * c3),
        C64::new(s1 * s2 * c3, -c1 * c2 * s3),
    ]
}

/// `exp(-i (mu_1 XX + mu_2 YY + mu_3 ZZ))` as a 4x4 matrix, assembled from
/// the closed-form amplitudes rather than a generic exponential.
pub fn exp_interaction(mu: [f64; 3]) -> ComplexMatrix {
    let a = interaction_amplitudes(mu);
    let mut out = ComplexMatrix::zeros(4, 4);
    for (k, &ak) in a.iter().enumerate() {
        let p = pauli(k);
        out = &out + &tensor(&p, &p).scale(ak);
    }
    out
}

/// Full singular value decomposition `m = left * diag(s) * right_adjoint`.
///
/// `left` is rows x rows, `right_adjoint` is cols x cols, and
/// `singular_values` has `min(rows, cols)` entries in descending order.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub left: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub right_adjoint: ComplexMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let m = self.left.rows;
        let n = self.right_adjoint.cols;
        let mut sigma = ComplexMatrix::zeros(m, n);
        for (i, &s) in self.singular_values.iter().enumerate() {
            sigma[(i, i)] = C64::from(s);
        }
        &(&self.left * &sigma) * &self.right_adjoint
    }
}

pub fn svd(m: &ComplexMatrix) -> Result<SvdResult> {
    if m.rows < m.cols {
        // Work on the adjoint so the Jacobi sweep runs over the shorter side.
        let t = svd_tall(&m.adjoint())?;
        return Ok(SvdResult {
            left: t.right_adjoint.adjoint(),
            singular_values: t.singular_values,
            right_adjoint: t.left.adjoint(),
        });
    }
    svd_tall(m)
}

/// Relative squared norm below which a column is treated as zero (a norm ratio of 1e-14).
const NEGLIGIBLE_COLUMN: f64 = 1e-28;

/// One-sided Jacobi for rows >= cols.
fn svd_tall(m: &ComplexMatrix) -> Result<SvdResult> {
    let rows = m.rows;
    let n = m.cols;
    let (a, v, total) = jacobi_orthogonalise(m, true)?;
    let v = v.expect("vectors requested");
    let norms: Vec<f64> = a.iter().map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let scale = total.sqrt();
    let mut left_cols: Vec<Vec<C64>> = Vec::with_capacity(rows);
    let mut singular_values = Vec::with_capacity(n);
    let mut right = ComplexMatrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        singular_values.push(norms[j]);
        for r in 0..n {
            right[(r, k)] = v[j][r];
        }
        if norms[j] > 1e-13 * scale.max(f64::MIN_POSITIVE) {
            left_cols.push(a[j].iter().map(|z| z / norms[j]).collect());
        }
    }
    complete_orthonormal(&mut left_cols, rows);
    let mut left = ComplexMatrix::zeros(rows, rows);
    for (c, col) in left_cols.iter().enumerate() {
        left.set_col(c, col);
    }
    Ok(SvdResult { left, singular_values, right_adjoint: right.adjoint() })
}

/// Rotates the columns of `m` until they are mutually orthogonal. Returns the
/// rotated columns, the accumulated rotation (when `with_vectors`) and the
/// squared Frobenius norm.
#[allow(clippy::type_complexity)]
fn jacobi_orthogonalise(m: &ComplexMatrix, with_vectors: bool) -> Result<(Vec<Vec<C64>>, Option<Vec<Vec<C64>>>, f64)> {
    let n = m.cols;
    // Columns stored contiguously for the rotations.
    let mut a: Vec<Vec<C64>> = (0..n).map(|c| m.col(c)).collect();
    let mut v: Option<Vec<Vec<C64>>> = with_vectors.then(|| {
        (0..n)
            .map(|c| {
                let mut e = vec![ZERO; n];
                e[c] = ONE;
                e
            })
            .collect()
    });
    let total: f64 = m.data.iter().map(|z| z.norm_sqr()).sum();
    let mut converged = n < 2 || total == 0.0;
    let mut residual = 0.0;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut off = 0.0f64;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha: f64 = a[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = a[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = a[p].iter().zip(&a[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                // Columns at round-off level relative to the whole matrix are
                // numerically zero; rotating against them never settles.
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() || alpha.min(beta) <= NEGLIGIBLE_COLUMN * total
                {
                    continue;
                }
                off = off.max(g / (alpha * beta).sqrt());
                // Rotate in the plane of (a_p, a_q * e^{-i arg gamma}) which
                // has a real positive overlap `g`.
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s, phase);
                if let Some(v) = v.as_mut() {
                    rotate(v, p, q, c, s, phase);
                }
            }
        }
        residual = off;
        if off <= JACOBI_TOL {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::Numerical { context: "jacobi svd", residual });
    }
    Ok((a, v, total))
}

/// Singular values of `m` in descending order, without the singular vectors.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let t = if m.rows < m.cols { m.adjoint() } else { m.clone() };
    let (a, _, _) = jacobi_orthogonalise(&t, false)?;
    let mut s: Vec<f64> = a.iter().map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// `(x_p, x_q) <- (c x_p - s phase^* x_q, s x_p + c phase^* x_q)`.
fn rotate(cols: &mut [Vec<C64>], p: usize, q: usize, c: f64, s: f64, phase: C64) {
    let pc = phase.conj();
    let (lo, hi) = cols.split_at_mut(q);
    for (xp, xq) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let yq = *xq * pc;
        let np = *xp * c - yq * s;
        let nq = *xp * s + yq * c;
        *xp = np;
        *xq = nq;
    }
}

/// Extends a set of orthonormal vectors to a basis of C^dim by Gram-Schmidt
/// against the standard basis.
pub fn complete_orthonormal(vecs: &mut Vec<Vec<C64>>, dim: usize) {
    let mut e = 0;
    while vecs.len() < dim && e < dim {
        let mut cand = vec![ZERO; dim];
        cand[e] = ONE;
        e += 1;
        for _ in 0..2 {
            for b in vecs.iter() {
                let ov: C64 = b.iter().zip(&cand).map(|(x, y)| x.conj() * y).sum();
                for (c, x) in cand.iter_mut().zip(b) {
                    *c -= ov * x;
                }
            }
        }
        let norm = cand.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            vecs.push(cand.into_iter().map(|z| z / norm).collect());
        }
    }
}

/// Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and the orthogonal eigenvector matrix (columns),
/// both in the order the iteration leaves them.
pub fn symmetric_eigen(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let off = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off(&m) <= JACOBI_TOL * frob.max(f64::MIN_POSITIVE) {
            let evals = (0..n).map(|i| m[i * n + i]).collect();
            return Ok((evals, v));
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::Numerical { context: "symmetric jacobi eigensolver", residual: off(&m) })
}

/// QR factorisation by modified Gram-Schmidt; returns (Q, diag(R)).
/// Input must have full column rank.
pub fn qr_gram_schmidt(m: &ComplexMatrix) -> (ComplexMatrix, Vec<C64>) {
    let n = m.cols;
    let mut q = m.clone();
    let mut r_diag = Vec::with_capacity(n);
    for j in 0..n {
        let mut col = q.col(j);
        for k in 0..j {
            let qk = q.col(k);
            let ov: C64 = qk.iter().zip(&col).map(|(x, y)| x.conj() * y).sum();
            for (c, x) in col.iter_mut().zip(&qk) {
                *c -= ov * x;
            }
        }
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let ov: C64 = m.col(j).iter().zip(&col).map(|(x, y)| y.conj() * x).sum::<C64>() / norm;
        r_diag.push(ov);
        q.set_col(j, &col.iter().map(|z| z / norm).collect::<Vec<_>>());
    }
    (q, r_diag)
}
