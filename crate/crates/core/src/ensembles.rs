//! Random-matrix samplers with pluggable entry laws and variance profiles.
//!
//! Every sampler is a pure function of its spec and [`SeedPath`]. Row `i` of
//! the lower triangle is drawn from substream `i`, so a matrix is the same no
//! matter how rows are scheduled.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{HermMatrix, Matrix, SymMatrix};
use crate::rng::{SeedPath, Stream};

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Gaussian,
    BernoulliSymmetric,
    UniformCentered,
    ThreePointMatched,
    CustomDiscrete(Vec<(f64, f64)>),
}

/// Law of a single standardized entry `x`; matrix entries are `sigma_ij * x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryDistribution {
    pub kind: EntryKind,
    /// Optional `(C0, theta)` subexponential-decay tag, carried as metadata.
    pub subexp: Option<(f64, f64)>,
    /// Cumulative probabilities for discrete kinds, cached for sampling.
    #[serde(skip)]
    cdf: Vec<f64>,
}

impl EntryDistribution {
    fn built_in(kind: EntryKind) -> Self {
        let mut d = Self {
            kind,
            subexp: None,
            cdf: Vec::new(),
        };
        d.cdf = d.atoms().map(|a| cumulative(&a)).unwrap_or_default();
        d
    }

    pub fn gaussian() -> Self {
        Self::built_in(EntryKind::Gaussian)
    }

    pub fn bernoulli() -> Self {
        Self::built_in(EntryKind::BernoulliSymmetric)
    }

    pub fn uniform() -> Self {
        Self::built_in(EntryKind::UniformCentered)
    }

    pub fn three_point_matched() -> Self {
        make_moment_matched_three_point()
    }

    pub fn custom(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return invalid("custom_discrete needs at least one atom");
        }
        if atoms
            .iter()
            .any(|(v, p)| !v.is_finite() || !p.is_finite() || *p < 0.0)
        {
            return invalid("custom_discrete atoms must be finite with nonnegative probability");
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!(
                "custom_discrete probabilities sum to {total}, not 1"
            ));
        }
        Ok(Self::built_in(EntryKind::CustomDiscrete(atoms)))
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            EntryKind::Gaussian => "gaussian",
            EntryKind::BernoulliSymmetric => "bernoulli_symmetric",
            EntryKind::UniformCentered => "uniform_centered",
            EntryKind::ThreePointMatched => "three_point_matched",
            EntryKind::CustomDiscrete(_) => "custom_discrete",
        }
    }

    /// Looks up a built-in kind by its config name.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "gaussian" => Self::gaussian(),
            "bernoulli" | "bernoulli_symmetric" => Self::bernoulli(),
            "uniform" | "uniform_centered" => Self::uniform(),
            "three_point" | "three_point_matched" => Self::three_point_matched(),
            _ => return None,
        })
    }

    /// Atoms of the discrete kinds; `None` for continuous laws.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match &self.kind {
            EntryKind::BernoulliSymmetric => Some(vec![(-1.0, 0.5), (1.0, 0.5)]),
            EntryKind::ThreePointMatched => Some(vec![
                (-SQRT3, 1.0 / 6.0),
                (0.0, 2.0 / 3.0),
                (SQRT3, 1.0 / 6.0),
            ]),
            EntryKind::CustomDiscrete(a) => Some(a.clone()),
            _ => None,
        }
    }

    /// Raw moments `E x^s` for `s = 1..=4`.
    pub fn moments(&self) -> [f64; 4] {
        match &self.kind {
            EntryKind::Gaussian | EntryKind::ThreePointMatched => [0.0, 1.0, 0.0, 3.0],
            EntryKind::BernoulliSymmetric => [0.0, 1.0, 0.0, 1.0],
            EntryKind::UniformCentered => [0.0, 1.0, 0.0, 1.8],
            EntryKind::CustomDiscrete(a) => {
                let m = |s: i32| a.iter().map(|(v, p)| p * v.powi(s)).sum::<f64>();
                [m(1), m(2), m(3), m(4)]
            }
        }
    }

    pub fn sample(&self, rng: &mut Stream) -> f64 {
        match &self.kind {
            EntryKind::Gaussian => rng.sample(StandardNormal),
            EntryKind::BernoulliSymmetric => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryKind::UniformCentered => SQRT3 * (2.0 * rng.random::<f64>() - 1.0),
            EntryKind::ThreePointMatched | EntryKind::CustomDiscrete(_) => {
                self.quantile(rng.random())
            }
        }
    }

    /// Left-continuous inverse CDF, `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match &self.kind {
            EntryKind::Gaussian => {
                use statrs::distribution::{ContinuousCDF, Normal};
                Normal::standard().inverse_cdf(u)
            }
            EntryKind::UniformCentered => SQRT3 * (2.0 * u - 1.0),
            _ => {
                let atoms = self.atoms().unwrap_or_default();
                // deserialized values arrive without the cached table
                let rebuilt;
                let cdf = if self.cdf.len() == atoms.len() {
                    &self.cdf
                } else {
                    rebuilt = cumulative(&atoms);
                    &rebuilt
                };
                let k = cdf.partition_point(|&c| c <= u).min(atoms.len() - 1);
                atoms[k].0
            }
        }
    }
}

fn cumulative(atoms: &[(f64, f64)]) -> Vec<f64> {
    atoms
        .iter()
        .scan(0.0, |acc, (_, p)| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

/// Symmetric three-atom law sharing the first four Gaussian moments:
/// `P(±√3) = 1/6`, `P(0) = 2/3`.
pub fn make_moment_matched_three_point() -> EntryDistribution {
    EntryDistribution::built_in(EntryKind::ThreePointMatched)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandShape {
    /// `f = 1` on `[-1/2, 1/2]`.
    Indicator,
    /// `f(x) = 4(1/2 - |x|)_+`.
    Triangle,
}

impl BandShape {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            BandShape::Indicator => {
                if x.abs() <= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            BandShape::Triangle => (4.0 * (0.5 - x.abs())).max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Flat,
    Generalized,
    Band { width: usize, shape: BandShape },
}

/// Variances `sigma2[i][j]` of the matrix entries. Rows sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceProfile {
    pub kind: ProfileKind,
    n: usize,
    /// Row-major `n x n` table; empty for the flat profile.
    sigma2: Vec<f64>,
    /// Bounds `C_inf <= N sigma2_ij <= C_sup`.
    pub c_inf: f64,
    pub c_sup: f64,
    pub warnings: Vec<String>,
}

impl VarianceProfile {
    pub fn flat(n: usize) -> Self {
        Self {
            kind: ProfileKind::Flat,
            n,
            sigma2: Vec::new(),
            c_inf: 1.0,
            c_sup: 1.0,
            warnings: Vec::new(),
        }
    }

    /// Symmetric table of variances, rescaled so every row sums to one.
    pub fn generalized(n: usize, table: Vec<f64>) -> Result<Self> {
        if table.len() != n * n {
            return invalid(format!(
                "variance table has {} entries, expected {}",
                table.len(),
                n * n
            ));
        }
        if table.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return invalid("variances must be finite and nonnegative");
        }
        for i in 0..n {
            for j in 0..i {
                if table[i * n + j] != table[j * n + i] {
                    return invalid("variance table is not symmetric");
                }
            }
        }
        let sigma2 = symmetric_row_normalize(n, table)?;
        Ok(Self::from_table(ProfileKind::Generalized, n, sigma2))
    }

    /// `sigma2_ij ∝ f([i-j]_N / W) / W` with periodic distance, renormalized.
    /// A width above `N/2` degrades to the flat profile.
    pub fn band(n: usize, width: usize, shape: BandShape) -> Result<Self> {
        if width == 0 {
            return invalid("band width must be positive");
        }
        if 2 * width > n {
            let mut p = Self::flat(n);
            p.warnings.push(format!(
                "band width {width} exceeds N/2 = {}; using flat profile",
                n / 2
            ));
            return Ok(p);
        }
        let w = width as f64;
        let mut table = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let d = i.abs_diff(j);
                let d = d.min(n - d) as f64;
                table[i * n + j] = shape.eval(d / w) / w;
            }
        }
        let sigma2 = symmetric_row_normalize(n, table)?;
        Ok(Self::from_table(
            ProfileKind::Band { width, shape },
            n,
            sigma2,
        ))
    }

    fn from_table(kind: ProfileKind, n: usize, sigma2: Vec<f64>) -> Self {
        let nf = n as f64;
        let c_inf = sigma2.iter().fold(f64::INFINITY, |a, &v| a.min(nf * v));
        let c_sup = sigma2.iter().fold(0.0f64, |a, &v| a.max(nf * v));
        Self {
            kind,
            n,
            sigma2,
            c_inf,
            c_sup,
            warnings: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_flat(&self) -> bool {
        self.sigma2.is_empty()
    }

    #[inline]
    pub fn variance(&self, i: usize, j: usize) -> f64 {
        if self.sigma2.is_empty() {
            1.0 / self.n as f64
        } else {
            self.sigma2[i * self.n + j]
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.variance(i, j)).sum())
            .collect()
    }
}

/// Symmetric diagonal scaling `D S D` with unit row sums (Sinkhorn-Knopp in
/// its symmetric form). Exact in one step for circulant tables.
fn symmetric_row_normalize(n: usize, mut s: Vec<f64>) -> Result<Vec<f64>> {
    for _ in 0..10_000 {
        let rows: Vec<f64> = (0..n).map(|i| s[i * n..(i + 1) * n].iter().sum()).collect();
        if rows.iter().any(|&r| r <= 0.0) {
            return invalid("variance profile has an all-zero row");
        }
        if rows.iter().all(|r| (r - 1.0).abs() <= 1e-13) {
            return Ok(s);
        }
        let d: Vec<f64> = rows.iter().map(|r| r.sqrt().recip()).collect();
        for i in 0..n {
            for j in 0..n {
                s[i * n + j] *= d[i] * d[j];
            }
        }
    }
    invalid("variance profile could not be normalized")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    RealSymmetric,
    ComplexHermitian,
}

impl Symmetry {
    pub fn beta(self) -> f64 {
        match self {
            Symmetry::RealSymmetric => 1.0,
            Symmetry::ComplexHermitian => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErParams {
    pub p: f64,
    pub q: f64,
    pub gamma: f64,
}

impl ErParams {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return invalid(format!("Erdős–Rényi p = {p} must lie in (0, 1)"));
        }
        let q = (p * n as f64).sqrt();
        if q < 1.0 {
            return invalid(format!(
                "Erdős–Rényi graph too sparse: q = sqrt(pN) = {q:.4} < 1"
            ));
        }
        Ok(Self {
            p,
            q,
            gamma: (1.0 - p).powf(-0.5),
        })
    }

    /// Predicted location `γq + 1/(γq)` of the outlier eigenvalue.
    pub fn outlier_location(&self) -> f64 {
        let g = self.gamma * self.q;
        g + 1.0 / g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub symmetry: Symmetry,
    pub n: usize,
    pub entries: EntryDistribution,
    pub profile: VarianceProfile,
    pub er: Option<ErParams>,
    /// Complex off-diagonals are `(x + iy)/√2` when set (so `E h² = 0`);
    /// otherwise they are real draws stored in a Hermitian matrix.
    pub isotropic_complex: bool,
}

impl EnsembleSpec {
    pub fn wigner(symmetry: Symmetry, n: usize, entries: EntryDistribution) -> Self {
        Self {
            symmetry,
            n,
            entries,
            profile: VarianceProfile::flat(n),
            er: None,
            isotropic_complex: true,
        }
    }

    pub fn goe(n: usize) -> Self {
        Self::wigner(Symmetry::RealSymmetric, n, EntryDistribution::gaussian())
    }

    pub fn gue(n: usize) -> Self {
        Self::wigner(Symmetry::ComplexHermitian, n, EntryDistribution::gaussian())
    }

    pub fn with_profile(mut self, profile: VarianceProfile) -> Self {
        self.profile = profile;
        self
    }

    pub fn erdos_renyi(n: usize, p: f64) -> Result<Self> {
        let er = ErParams::new(n, p)?;
        Ok(Self {
            er: Some(er),
            ..Self::goe(n)
        })
    }

    pub fn beta(&self) -> f64 {
        self.symmetry.beta()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return invalid("matrix dimension must be positive");
        }
        if self.profile.n() != self.n {
            return invalid(format!(
                "profile dimension {} does not match N = {}",
                self.profile.n(),
                self.n
            ));
        }
        if let Some(er) = &self.er {
            let want = ErParams::new(self.n, er.p)?;
            if (want.q - er.q).abs() > 1e-12 * want.q
                || (want.gamma - er.gamma).abs() > 1e-12 * want.gamma
            {
                return invalid("Erdős–Rényi (q, γ) inconsistent with (N, p)");
            }
            if self.symmetry != Symmetry::RealSymmetric {
                return invalid("Erdős–Rényi matrices are real symmetric");
            }
        }
        let m = self.entries.moments();
        let builtin = !matches!(self.entries.kind, EntryKind::CustomDiscrete(_));
        if builtin && (m[0].abs() > 1e-12 || (m[1] - 1.0).abs() > 1e-12) {
            return invalid("built-in entry law is not standardized");
        }
        Ok(())
    }
}

/// One matrix draw together with what produced it.
#[derive(Debug, Clone)]
pub struct MatrixSample {
    pub matrix: Matrix,
    pub spec: EnsembleSpec,
    pub seed_path: SeedPath,
}

impl MatrixSample {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.matrix.eigenvalues()
    }
}

/// Draws a sample of any spec, Erdős–Rényi included.
pub fn sample(spec: &EnsembleSpec, seed: &SeedPath) -> Result<MatrixSample> {
    match spec.er {
        Some(er) => sample_erdos_renyi(spec.n, er.p, seed),
        None => sample_wigner(spec, seed),
    }
}

pub fn sample_wigner(spec: &EnsembleSpec, seed: &SeedPath) -> Result<MatrixSample> {
    spec.validate()?;
    if spec.er.is_some() {
        return invalid("use sample_erdos_renyi for Erdős–Rényi specs");
    }
    let n = spec.n;
    let prof = &spec.profile;
    let dist = &spec.entries;
    let matrix = match spec.symmetry {
        Symmetry::RealSymmetric => {
            let mut a = SymMatrix::zeros(n);
            for i in 0..n {
                let mut rng = seed.substream(i as u64);
                for j in 0..=i {
                    let x = dist.sample(&mut rng);
                    a.set_sym(i, j, prof.variance(i, j).sqrt() * x);
                }
            }
            Matrix::Real(a)
        }
        Symmetry::ComplexHermitian => {
            let mut a = HermMatrix::zeros(n);
            let r = std::f64::consts::FRAC_1_SQRT_2;
            for i in 0..n {
                let mut rng = seed.substream(i as u64);
                for j in 0..i {
                    let s = prof.variance(i, j).sqrt();
                    let x = dist.sample(&mut rng);
                    let v = if spec.isotropic_complex {
                        let y = dist.sample(&mut rng);
                        Complex64::new(r * s * x, r * s * y)
                    } else {
                        Complex64::new(s * x, 0.0)
                    };
                    a.set_herm(i, j, v);
                }
                let x = dist.sample(&mut rng);
                a.set_herm(i, i, Complex64::new(prof.variance(i, i).sqrt() * x, 0.0));
            }
            Matrix::Complex(a)
        }
    };
    Ok(MatrixSample {
        matrix,
        spec: spec.clone(),
        seed_path: seed.clone(),
    })
}

/// Scaled adjacency matrix: each entry (diagonal included) is `γ/q` with
/// probability `p = q²/N`, else 0.
pub fn sample_erdos_renyi(n: usize, p: f64, seed: &SeedPath) -> Result<MatrixSample> {
    let er = ErParams::new(n, p)?;
    let h = er.gamma / er.q;
    let mut a = SymMatrix::zeros(n);
    for i in 0..n {
        let mut rng = seed.substream(i as u64);
        for j in 0..=i {
            if rng.random::<f64>() < p {
                a.set_sym(i, j, h);
            }
        }
    }
    let spec = EnsembleSpec {
        er: Some(er),
        ..EnsembleSpec::goe(n)
    };
    Ok(MatrixSample {
        matrix: Matrix::Real(a),
        spec,
        seed_path: seed.clone(),
    })
}

pub fn sample_band(
    n: usize,
    width: usize,
    shape: BandShape,
    symmetry: Symmetry,
    entries: EntryDistribution,
    seed: &SeedPath,
) -> Result<MatrixSample> {
    let spec = EnsembleSpec::wigner(symmetry, n, entries)
        .with_profile(VarianceProfile::band(n, width, shape)?);
    sample_wigner(&spec, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_atoms() {
        let d = make_moment_matched_three_point();
        let a = d.atoms().unwrap();
        assert_eq!(a.len(), 3);
        assert!((a[0].0 + 3f64.sqrt()).abs() < 1e-15 && (a[0].1 - 1.0 / 6.0).abs() < 1e-15);
        assert!((a[1].1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn custom_rejects_bad_mass() {
        assert!(EntryDistribution::custom(vec![(1.0, 0.5), (-1.0, 0.4)]).is_err());
        assert!(EntryDistribution::custom(vec![(f64::NAN, 1.0)]).is_err());
        assert!(EntryDistribution::custom(vec![(1.0, 0.5), (-1.0, 0.5)]).is_ok());
    }

    #[test]
    fn er_rejects_degenerate_p() {
        assert!(ErParams::new(100, 1.0).is_err());
        assert!(ErParams::new(100, 0.001).is_err());
        let er = ErParams::new(1000, 0.1).unwrap();
        assert!((er.q - 10.0).abs() < 1e-12);
    }

    #[test]
    fn band_wider_than_half_degrades() {
        let p = VarianceProfile::band(10, 6, BandShape::Indicator).unwrap();
        assert!(p.is_flat());
        assert_eq!(p.warnings.len(), 1);
    }
}
