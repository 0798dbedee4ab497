//! Dense self-adjoint matrices and the reductions behind the eigensolver.

pub mod kernels;
mod ql;
mod tridiag;

pub use ql::tridiagonal_eigen;
pub use tridiag::{HermitianReduction, SymmetricReduction};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Real symmetric matrix in full row-major storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * m.n + i] = d;
        }
        m
    }

    /// Builds from a full row-major buffer. Returns `None` when the buffer is
    /// not square or not exactly symmetric.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Option<Self> {
        if data.len() != n * n {
            return None;
        }
        for i in 0..n {
            for j in 0..i {
                if data[i * n + j] != data[j * n + i] {
                    return None;
                }
            }
        }
        Some(Self { n, data })
    }

    /// Builds from a lower-triangle generator; the upper triangle is mirrored,
    /// so the result is symmetric bit-for-bit.
    pub fn from_lower(n: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = entry(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets `(i, j)` and `(j, i)` together.
    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    /// `a*self + b*other`, entrywise.
    pub fn combine(&self, a: f64, other: &SymMatrix, b: f64) -> Self {
        assert_eq!(self.n, other.n);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Self { n: self.n, data }
    }

    /// Deletes row and column `k`.
    pub fn minor(&self, k: usize) -> Self {
        let n = self.n;
        let mut data = Vec::with_capacity((n - 1) * (n - 1));
        for i in (0..n).filter(|&i| i != k) {
            for j in (0..n).filter(|&j| j != k) {
                data.push(self.get(i, j));
            }
        }
        Self { n: n - 1, data }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| kernels::dot(self.row(i), x)).collect()
    }

    /// Largest absolute row sum; an upper bound on the spectral norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Complex Hermitian matrix in full row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct HermMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl HermMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    /// Builds from a lower-triangle generator; the diagonal keeps only its real
    /// part and the upper triangle is the exact conjugate mirror.
    pub fn from_lower(n: usize, mut entry: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..i {
                let v = entry(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v.conj();
            }
            let d = entry(i, i);
            m.data[i * n + i] = Complex64::new(d.re, 0.0);
        }
        m
    }

    pub fn from_real(a: &SymMatrix) -> Self {
        Self {
            n: a.n,
            data: a.data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    /// Sets `(i, j)` to `v` and `(j, i)` to its conjugate.
    #[inline]
    pub fn set_herm(&mut self, i: usize, j: usize, v: Complex64) {
        if i == j {
            self.data[i * self.n + i] = Complex64::new(v.re, 0.0);
        } else {
            self.data[i * self.n + j] = v;
            self.data[j * self.n + i] = v.conj();
        }
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i).re).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn is_hermitian(&self) -> bool {
        (0..self.n).all(|i| {
            self.get(i, i).im == 0.0 && (0..i).all(|j| self.get(i, j) == self.get(j, i).conj())
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    pub fn combine(&self, a: f64, other: &HermMatrix, b: f64) -> Self {
        assert_eq!(self.n, other.n);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| x * a + y * b)
            .collect();
        Self { n: self.n, data }
    }

    pub fn minor(&self, k: usize) -> Self {
        let n = self.n;
        let mut data = Vec::with_capacity((n - 1) * (n - 1));
        for i in (0..n).filter(|&i| i != k) {
            for j in (0..n).filter(|&j| j != k) {
                data.push(self.get(i, j));
            }
        }
        Self { n: n - 1, data }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|x| x.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn eigvalsh(a: &SymMatrix) -> crate::Result<Vec<f64>> {
    let t = SymmetricReduction::new(a);
    Ok(tridiagonal_eigen(t.diag(), t.off(), false)?.0)
}

/// Eigenvalues (ascending) and unit eigenvectors; `vectors[j]` belongs to
/// `values[j]`.
pub fn eigh(a: &SymMatrix) -> crate::Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let t = SymmetricReduction::new(a);
    let (values, z) = tridiagonal_eigen(t.diag(), t.off(), true)?;
    let mut vectors = z.unwrap_or_default();
    for v in &mut vectors {
        t.apply_q(v);
    }
    Ok((values, vectors))
}

/// Eigenvalues of a complex Hermitian matrix, ascending.
pub fn eigvalsh_c(a: &HermMatrix) -> crate::Result<Vec<f64>> {
    let t = HermitianReduction::new(a);
    Ok(tridiagonal_eigen(t.diag(), t.off(), false)?.0)
}

pub fn eigh_c(a: &HermMatrix) -> crate::Result<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let t = HermitianReduction::new(a);
    let (values, z) = tridiagonal_eigen(t.diag(), t.off(), true)?;
    let vectors = z
        .unwrap_or_default()
        .iter()
        .map(|v| t.back_transform(v))
        .collect();
    Ok((values, vectors))
}

/// A self-adjoint matrix of either symmetry class.
#[derive(Debug, Clone, PartialEq)]
pub enum Matrix {
    Real(SymMatrix),
    Complex(HermMatrix),
}

impl Matrix {
    pub fn n(&self) -> usize {
        match self {
            Matrix::Real(a) => a.n(),
            Matrix::Complex(a) => a.n(),
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, Matrix::Complex(_))
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        match self {
            Matrix::Real(a) => Complex64::new(a.get(i, j), 0.0),
            Matrix::Complex(a) => a.get(i, j),
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            Matrix::Real(a) => a.trace(),
            Matrix::Complex(a) => a.trace(),
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        match self {
            Matrix::Real(a) => a.frobenius_sq(),
            Matrix::Complex(a) => a.frobenius_sq(),
        }
    }

    pub fn is_self_adjoint(&self) -> bool {
        match self {
            Matrix::Real(a) => a.is_symmetric(),
            Matrix::Complex(a) => a.is_hermitian(),
        }
    }

    pub fn norm_inf(&self) -> f64 {
        match self {
            Matrix::Real(a) => a.norm_inf(),
            Matrix::Complex(a) => a.norm_inf(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        match self {
            Matrix::Real(a) => Matrix::Real(a.scale(c)),
            Matrix::Complex(a) => Matrix::Complex(a.scale(c)),
        }
    }

    pub fn minor(&self, k: usize) -> Self {
        match self {
            Matrix::Real(a) => Matrix::Real(a.minor(k)),
            Matrix::Complex(a) => Matrix::Complex(a.minor(k)),
        }
    }

    /// Complex view; real matrices are promoted.
    pub fn to_complex(&self) -> HermMatrix {
        match self {
            Matrix::Real(a) => HermMatrix::from_real(a),
            Matrix::Complex(a) => a.clone(),
        }
    }

    pub fn eigenvalues(&self) -> crate::Result<Vec<f64>> {
        match self {
            Matrix::Real(a) => eigvalsh(a),
            Matrix::Complex(a) => eigvalsh_c(a),
        }
    }
}

/// `(1/N) Tr (T - z)^{-1}` for the symmetric tridiagonal `T` with diagonal
/// `d` and sub-diagonal `e`, in `O(N)` via the continuant recursion for
/// `p_k = det(T_k - z)` and its logarithmic derivative. Needs `Im z != 0`.
pub fn tridiagonal_stieltjes(d: &[f64], e: &[f64], z: Complex64) -> Complex64 {
    let n = d.len();
    // r_k = p_k / p_{k-1}, s_k = p_k' / p_k; Tr (T - z)^{-1} = -s_N
    let mut r_prev = Complex64::new(1.0, 0.0);
    let mut s_prev = Complex64::new(0.0, 0.0);
    let mut s_prev2 = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let a = d[k] - z;
        let (r, s) = if k == 0 {
            (a, -a.inv())
        } else {
            let e2 = e[k - 1] * e[k - 1];
            let r = a - e2 / r_prev;
            let s = (-1.0 + a * s_prev - e2 * s_prev2 / r_prev) / r;
            (r, s)
        };
        s_prev2 = s_prev;
        s_prev = s;
        r_prev = r;
    }
    -s_prev / n as f64
}
