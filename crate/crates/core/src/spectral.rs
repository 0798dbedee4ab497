//! Spectra, resolvents, Stieltjes transforms and the semicircle law.
//!
//! Sign convention: `m(z) = (1/N) Σ 1/(λ_j - z)`, so `Im m > 0` for `Im z > 0`
//! and `m ~ -1/z` at infinity.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ensembles::MatrixSample;
use crate::error::{invalid, Result, RmtError};
use crate::linalg::{self, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub enum Eigenvectors {
    Real(Vec<Vec<f64>>),
    Complex(Vec<Vec<Complex64>>),
}

impl Eigenvectors {
    /// `|u_alpha(i)|^2`.
    #[inline]
    pub fn weight(&self, alpha: usize, i: usize) -> f64 {
        match self {
            Eigenvectors::Real(v) => v[alpha][i] * v[alpha][i],
            Eigenvectors::Complex(v) => v[alpha][i].norm_sqr(),
        }
    }

    /// `u_alpha(i) conj(u_alpha(j))`.
    #[inline]
    pub fn outer(&self, alpha: usize, i: usize, j: usize) -> Complex64 {
        match self {
            Eigenvectors::Real(v) => Complex64::new(v[alpha][i] * v[alpha][j], 0.0),
            Eigenvectors::Complex(v) => v[alpha][i] * v[alpha][j].conj(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Eigenvectors::Real(v) => v.len(),
            Eigenvectors::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Eigenvector `alpha` as complex numbers.
    pub fn vector(&self, alpha: usize) -> Vec<Complex64> {
        match self {
            Eigenvectors::Real(v) => v[alpha].iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            Eigenvectors::Complex(v) => v[alpha].clone(),
        }
    }

    /// `max_i |u_alpha(i)|^2`.
    pub fn sup_norm_sq(&self, alpha: usize) -> f64 {
        let n = match self {
            Eigenvectors::Real(v) => v[alpha].len(),
            Eigenvectors::Complex(v) => v[alpha].len(),
        };
        (0..n).map(|i| self.weight(alpha, i)).fold(0.0, f64::max)
    }
}

/// Ordered eigenvalues of one sample, with eigenvectors when requested.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[alpha]` belongs to `eigenvalues[alpha]`.
    pub eigenvectors: Option<Eigenvectors>,
}

impl Spectrum {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        Self {
            eigenvalues,
            eigenvectors: None,
        }
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `m_N(z) = (1/N) Σ 1/(λ_j - z)`.
    pub fn stieltjes(&self, z: Complex64) -> Complex64 {
        let s: Complex64 = self.eigenvalues.iter().map(|&l| (l - z).inv()).sum();
        s / self.n() as f64
    }

    /// Largest eigenvector residual `‖H v - λ v‖₂` and largest deviation of
    /// the Gram matrix from the identity.
    pub fn check_against(&self, h: &Matrix) -> Option<(f64, f64)> {
        let vecs = self.eigenvectors.as_ref()?;
        let n = self.n();
        let hc = h.to_complex();
        let cols: Vec<Vec<Complex64>> = (0..n).map(|a| vecs.vector(a)).collect();
        let mut res: f64 = 0.0;
        for (a, v) in cols.iter().enumerate() {
            let hv = hc.matvec(v);
            let r: f64 = hv
                .iter()
                .zip(v)
                .map(|(x, y)| (x - y * self.eigenvalues[a]).norm_sqr())
                .sum();
            res = res.max(r.sqrt());
        }
        let mut gram: f64 = 0.0;
        for a in 0..n {
            for b in 0..=a {
                let ip: Complex64 = cols[a]
                    .iter()
                    .zip(&cols[b])
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                let want = if a == b { 1.0 } else { 0.0 };
                gram = gram.max((ip - want).norm());
            }
        }
        Some((res, gram))
    }
}

/// Short content hash used in diagnostics.
pub fn matrix_hash(h: &Matrix) -> String {
    let mut d = Sha256::new();
    d.update((h.n() as u64).to_le_bytes());
    for i in 0..h.n() {
        for j in 0..h.n() {
            let z = h.get(i, j);
            d.update(z.re.to_le_bytes());
            d.update(z.im.to_le_bytes());
        }
    }
    d.finalize()
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn eigen_matrix(h: &Matrix, want_vectors: bool) -> Result<Spectrum> {
    let wrap = |e: RmtError| RmtError::Eigen {
        hash: matrix_hash(h),
        cause: Box::new(e),
    };
    match (h, want_vectors) {
        (Matrix::Real(a), false) => Ok(Spectrum {
            eigenvalues: linalg::eigvalsh(a).map_err(wrap)?,
            eigenvectors: None,
        }),
        (Matrix::Complex(a), false) => Ok(Spectrum {
            eigenvalues: linalg::eigvalsh_c(a).map_err(wrap)?,
            eigenvectors: None,
        }),
        (Matrix::Real(a), true) => {
            let (v, u) = linalg::eigh(a).map_err(wrap)?;
            Ok(Spectrum {
                eigenvalues: v,
                eigenvectors: Some(Eigenvectors::Real(u)),
            })
        }
        (Matrix::Complex(a), true) => {
            let (v, u) = linalg::eigh_c(a).map_err(wrap)?;
            Ok(Spectrum {
                eigenvalues: v,
                eigenvectors: Some(Eigenvectors::Complex(u)),
            })
        }
    }
}

pub fn eigen(h: &MatrixSample, want_vectors: bool) -> Result<Spectrum> {
    eigen_matrix(&h.matrix, want_vectors)
}

/// Resolvent data on a grid of spectral parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventSample {
    pub z_grid: Vec<Complex64>,
    pub m_values: Vec<Complex64>,
    /// Per grid point, the row-major `n x n` Green function when requested.
    pub entries: Option<Vec<Vec<Complex64>>>,
    /// Original labels of the rows kept (all of `0..N` unless a minor).
    pub labels: Vec<usize>,
    /// Deleted index for a minor resolvent.
    pub minor_index: Option<usize>,
    /// Normalization used for `m_values` (`N` of the full matrix for minors).
    pub normalization: usize,
}

impl ResolventSample {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    /// `G_kl` at grid point `p`, in local (row) indices.
    pub fn g(&self, p: usize, k: usize, l: usize) -> Option<Complex64> {
        self.entries.as_ref().map(|e| e[p][k * self.dim() + l])
    }

    /// `max_k |Σ_l |G_kl|² - Im G_kk / η|` at grid point `p`.
    pub fn ward_residual(&self, p: usize) -> Option<f64> {
        let e = self.entries.as_ref()?;
        let n = self.dim();
        let eta = self.z_grid[p].im;
        let g = &e[p];
        Some(
            (0..n)
                .map(|k| {
                    let lhs: f64 = g[k * n..(k + 1) * n].iter().map(|x| x.norm_sqr()).sum();
                    (lhs - g[k * n + k].im / eta).abs() / (1.0 + lhs)
                })
                .fold(0.0, f64::max),
        )
    }

    /// `|m_values - (1/normalization) Tr G|`, largest over the grid.
    pub fn trace_consistency(&self) -> Option<f64> {
        let e = self.entries.as_ref()?;
        let n = self.dim();
        Some(
            e.iter()
                .zip(&self.m_values)
                .map(|(g, m)| {
                    let tr: Complex64 = (0..n).map(|k| g[k * n + k]).sum();
                    (tr / self.normalization as f64 - m).norm()
                })
                .fold(0.0, f64::max),
        )
    }
}

fn check_grid(z_grid: &[Complex64]) -> Result<()> {
    match z_grid.iter().find(|z| !(z.im > 0.0) || !z.re.is_finite()) {
        Some(z) => invalid(format!("spectral parameter {z} must have Im z > 0")),
        None => Ok(()),
    }
}

fn green_entries(spec: &Spectrum, z: Complex64) -> Vec<Complex64> {
    let n = spec.n();
    let vecs = spec
        .eigenvectors
        .as_ref()
        .expect("eigenvectors checked by caller");
    let mut g = vec![Complex64::new(0.0, 0.0); n * n];
    for (a, &l) in spec.eigenvalues.iter().enumerate() {
        let u = vecs.vector(a);
        let w = (l - z).inv();
        for i in 0..n {
            let ui = u[i] * w;
            for (gij, uj) in g[i * n..(i + 1) * n].iter_mut().zip(&u) {
                *gij += ui * uj.conj();
            }
        }
    }
    g
}

pub fn resolvent(
    spectrum: &Spectrum,
    z_grid: &[Complex64],
    want_entries: bool,
) -> Result<ResolventSample> {
    check_grid(z_grid)?;
    if want_entries && spectrum.eigenvectors.is_none() {
        return invalid("resolvent entries need eigenvectors");
    }
    let n = spectrum.n();
    let m_values = z_grid.iter().map(|&z| spectrum.stieltjes(z)).collect();
    let entries =
        want_entries.then(|| z_grid.iter().map(|&z| green_entries(spectrum, z)).collect());
    Ok(ResolventSample {
        z_grid: z_grid.to_vec(),
        m_values,
        entries,
        labels: (0..n).collect(),
        minor_index: None,
        normalization: n,
    })
}

/// Resolvent of `H` with row and column `i` removed. `m_values` keep the
/// full-matrix normalization `1/N`, so `|m - m^{(i)}| ≤ 1/(Nη)`.
pub fn minor_resolvent(
    h: &Matrix,
    i: usize,
    z_grid: &[Complex64],
    want_entries: bool,
) -> Result<ResolventSample> {
    let n = h.n();
    if i >= n || n < 2 {
        return invalid(format!("minor index {i} out of range for N = {n}"));
    }
    let sp = eigen_matrix(&h.minor(i), want_entries)?;
    let mut r = resolvent(&sp, z_grid, want_entries)?;
    let scale = (n - 1) as f64 / n as f64;
    r.m_values.iter_mut().for_each(|m| *m *= scale);
    r.labels = (0..n).filter(|&k| k != i).collect();
    r.minor_index = Some(i);
    r.normalization = n;
    Ok(r)
}

/// Stieltjes transform of the semicircle: the root of `m² + zm + 1 = 0`
/// with `|m| < 1` (equivalently `Im m > 0` off the real axis).
pub fn m_sc(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) || z.im < 0.0 || (z.im == 0.0 && z.re.abs() <= 2.0) {
        return invalid(format!("m_sc needs Im z > 0 or real |z| > 2, got {z}"));
    }
    let d = (z * z - 4.0).sqrt();
    let a = (-z + d) * 0.5;
    let b = (-z - d) * 0.5;
    // roots multiply to 1; invert the larger one for accuracy
    let big = if a.norm() >= b.norm() { a } else { b };
    Ok(big.inv())
}

/// A one-interval spectral density with its distribution function.
pub trait SpectralLaw {
    fn support(&self) -> (f64, f64);
    fn density(&self, x: f64) -> f64;
    fn cdf(&self, x: f64) -> f64;

    fn quantile(&self, u: f64) -> f64 {
        let (mut lo, mut hi) = self.support();
        if u <= 0.0 {
            return lo;
        }
        if u >= 1.0 {
            return hi;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SemicircleLaw;

impl SpectralLaw for SemicircleLaw {
    fn support(&self) -> (f64, f64) {
        (-2.0, 2.0)
    }

    fn density(&self, x: f64) -> f64 {
        rho_sc(x)
    }

    fn cdf(&self, x: f64) -> f64 {
        cdf_sc(x)
    }
}

/// `law` pushed forward by `x -> scale * x + shift`.
#[derive(Debug, Clone, Copy)]
pub struct AffineLaw<L> {
    pub inner: L,
    pub shift: f64,
    pub scale: f64,
}

impl<L: SpectralLaw> SpectralLaw for AffineLaw<L> {
    fn support(&self) -> (f64, f64) {
        let (a, b) = self.inner.support();
        (self.scale * a + self.shift, self.scale * b + self.shift)
    }

    fn density(&self, x: f64) -> f64 {
        self.inner.density((x - self.shift) / self.scale) / self.scale
    }

    fn cdf(&self, x: f64) -> f64 {
        self.inner.cdf((x - self.shift) / self.scale)
    }
}

/// Uniform density on `[a, b]`; the reference law for Poisson points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformLaw {
    pub a: f64,
    pub b: f64,
}

impl SpectralLaw for UniformLaw {
    fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    fn density(&self, x: f64) -> f64 {
        if x >= self.a && x <= self.b {
            1.0 / (self.b - self.a)
        } else {
            0.0
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        ((x - self.a) / (self.b - self.a)).clamp(0.0, 1.0)
    }
}

pub fn rho_sc(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * std::f64::consts::PI)
    }
}

pub fn cdf_sc(x: f64) -> f64 {
    if x <= -2.0 {
        return 0.0;
    }
    if x >= 2.0 {
        return 1.0;
    }
    let pi = std::f64::consts::PI;
    0.5 + x * (4.0 - x * x).sqrt() / (4.0 * pi) + (x / 2.0).asin() / pi
}

/// `γ_j` with `N F(γ_j) = j`, `j = 1..=N`; `γ_N` is the upper support edge.
pub fn classical_locations(n: usize, law: &dyn SpectralLaw) -> Vec<f64> {
    (1..=n).map(|j| law.quantile(j as f64 / n as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msc_examples() {
        let m = m_sc(Complex64::new(0.0, 2.0)).unwrap();
        assert!(m.re.abs() < 1e-15 && (m.im - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        let m = m_sc(Complex64::new(3.0, 0.0)).unwrap();
        assert!((m.re - (-3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!(m_sc(Complex64::new(1.0, 0.0)).is_err());
        assert!(m_sc(Complex64::new(0.0, -1.0)).is_err());
    }

    #[test]
    fn classical_locations_small() {
        let g = classical_locations(4, &SemicircleLaw);
        assert!(g[1].abs() < 1e-12);
        assert!((g[0] + 0.81).abs() < 0.005);
        assert_eq!(g[3], 2.0);
    }

    #[test]
    fn one_by_one_resolvent() {
        let s = Spectrum::from_eigenvalues(vec![0.0]);
        let z = Complex64::new(0.0, 1.0);
        let r = resolvent(&s, &[z], false).unwrap();
        assert!((r.m_values[0] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!(resolvent(&s, &[Complex64::new(0.0, 0.0)], false).is_err());
    }
}
