//! Empirical checks of the local semicircle law and its corollaries.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensembles::{sample, EnsembleSpec, EntryKind, Symmetry};
use crate::error::{invalid, Result};
use crate::linalg::{tridiagonal_stieltjes, Matrix};
use crate::loggas::{gaussian_beta_tridiagonal, gaussian_beta_tridiagonal_sample};
use crate::par_map;
use crate::rng::SeedPath;
use crate::spectral::{
    classical_locations, eigen_matrix, m_sc, minor_resolvent, Eigenvectors, SemicircleLaw,
};
use crate::stats::{linear_regression, mean, median, median_std_err, std_err, Regression};

/// Where spectra come from. The tridiagonal route draws the invariant
/// Gaussian ensemble in `O(N²)` and gives only eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSource {
    Dense(EnsembleSpec),
    GaussianTridiagonal { beta: f64, n: usize },
}

impl SpectrumSource {
    pub fn n(&self) -> usize {
        match self {
            SpectrumSource::Dense(s) => s.n,
            SpectrumSource::GaussianTridiagonal { n, .. } => *n,
        }
    }

    /// The tridiagonal route for invariant Gaussian specs, the dense one
    /// otherwise.
    pub fn fastest_for(spec: &EnsembleSpec) -> Self {
        let gaussian = matches!(spec.entries.kind, EntryKind::Gaussian)
            && spec.profile.is_flat()
            && spec.er.is_none();
        if gaussian && spec.symmetry == Symmetry::ComplexHermitian && spec.isotropic_complex {
            SpectrumSource::GaussianTridiagonal {
                beta: 2.0,
                n: spec.n,
            }
        } else {
            SpectrumSource::Dense(spec.clone())
        }
    }

    pub fn eigenvalues(&self, seed: &SeedPath) -> Result<Vec<f64>> {
        match self {
            SpectrumSource::Dense(spec) => sample(spec, seed)?.eigenvalues(),
            SpectrumSource::GaussianTridiagonal { beta, n } => {
                Ok(gaussian_beta_tridiagonal_sample(*beta, *n, seed)?.eigenvalues)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalLawRecord {
    pub n: usize,
    pub z: Complex64,
    /// `|m_N - m_sc|` per sample.
    pub m_err: Vec<f64>,
    /// `max_j |G_jj - m_sc|` per sample, when entries were computed.
    pub diag_err: Option<Vec<f64>>,
    /// `max_{i≠j} |G_ij|` over the inspected rows, per sample.
    pub offdiag_max: Option<Vec<f64>>,
    /// `√(Im m_sc/(Nη)) + 1/(Nη)`.
    pub envelope_entry: f64,
    /// `1/(Nη)`.
    pub envelope_avg: f64,
}

impl LocalLawRecord {
    pub fn n_eta(&self) -> f64 {
        self.n as f64 * self.z.im
    }

    pub fn median_m_err(&self) -> f64 {
        median(&self.m_err)
    }

    pub fn ratio(&self) -> f64 {
        self.median_m_err() / self.envelope_avg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalLawReport {
    pub records: Vec<LocalLawRecord>,
    /// Polylog parameters `(L, φ)`; metadata only.
    pub polylog: (f64, f64),
}

impl LocalLawReport {
    /// Regression of `log median |m_N - m_sc|` on `log(Nη)` across records.
    pub fn slope(&self) -> Result<Regression> {
        let x: Vec<f64> = self.records.iter().map(|r| r.n_eta().ln()).collect();
        let y: Vec<f64> = self.records.iter().map(|r| r.median_m_err().ln()).collect();
        linear_regression(&x, &y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalLawOptions {
    /// Compute Green function entries (needs eigenvectors, dense only).
    pub entries: bool,
    /// Rows inspected for the off-diagonal maximum.
    pub offdiag_rows: usize,
}

impl Default for LocalLawOptions {
    fn default() -> Self {
        Self {
            entries: false,
            offdiag_rows: 16,
        }
    }
}

pub fn local_law_report(
    source: &SpectrumSource,
    z_grid: &[Complex64],
    samples: usize,
    seed: &SeedPath,
    opts: LocalLawOptions,
) -> Result<LocalLawReport> {
    let n = source.n();
    let nf = n as f64;
    for z in z_grid {
        if z.re.abs() > 5.0 || z.im > 10.0 {
            return invalid(format!("z = {z} outside |E| <= 5, η <= 10"));
        }
        if z.im < 1.0 / nf {
            return invalid(format!(
                "η = {} is below the resolution 1/N = {}",
                z.im,
                1.0 / nf
            ));
        }
    }
    if samples == 0 {
        return invalid("need at least one sample");
    }
    let msc: Vec<Complex64> = z_grid.iter().map(|&z| m_sc(z)).collect::<Result<_>>()?;
    let want_entries = opts.entries && matches!(source, SpectrumSource::Dense(_));

    type Row = (Vec<f64>, Option<(Vec<f64>, Vec<f64>)>);
    let per_sample: Vec<Result<Row>> = par_map(samples, |k| {
        let sp = seed.with_index(k as u64);
        match source {
            SpectrumSource::GaussianTridiagonal { beta, n } => {
                let (d, e) = gaussian_beta_tridiagonal(*beta, *n, &sp)?;
                let errs = z_grid
                    .iter()
                    .zip(&msc)
                    .map(|(&z, &m)| (tridiagonal_stieltjes(&d, &e, z) - m).norm())
                    .collect();
                Ok((errs, None))
            }
            SpectrumSource::Dense(spec) => {
                let h = sample(spec, &sp)?;
                let spec_ = eigen_matrix(&h.matrix, want_entries)?;
                let errs = z_grid
                    .iter()
                    .zip(&msc)
                    .map(|(&z, &m)| (spec_.stieltjes(z) - m).norm())
                    .collect();
                if !want_entries {
                    return Ok((errs, None));
                }
                let vecs = spec_.eigenvectors.as_ref().expect("requested");
                let mut dmax = Vec::with_capacity(z_grid.len());
                let mut omax = Vec::with_capacity(z_grid.len());
                for (&z, &m) in z_grid.iter().zip(&msc) {
                    let w: Vec<Complex64> =
                        spec_.eigenvalues.iter().map(|&l| (l - z).inv()).collect();
                    let dm = (0..n)
                        .map(|j| {
                            let g: Complex64 = w
                                .iter()
                                .enumerate()
                                .map(|(a, wa)| wa * vecs.weight(a, j))
                                .sum();
                            (g - m).norm()
                        })
                        .fold(0.0, f64::max);
                    dmax.push(dm);
                    omax.push(offdiag_max(vecs, &w, opts.offdiag_rows.min(n)));
                }
                Ok((errs, Some((dmax, omax))))
            }
        }
    });
    let per_sample: Vec<Row> = per_sample.into_iter().collect::<Result<_>>()?;

    let records = z_grid
        .iter()
        .enumerate()
        .map(|(p, &z)| {
            let eta = z.im;
            let m_err = per_sample.iter().map(|r| r.0[p]).collect();
            let (diag_err, offdiag) = if want_entries {
                (
                    Some(
                        per_sample
                            .iter()
                            .map(|r| r.1.as_ref().expect("entries").0[p])
                            .collect(),
                    ),
                    Some(
                        per_sample
                            .iter()
                            .map(|r| r.1.as_ref().expect("entries").1[p])
                            .collect(),
                    ),
                )
            } else {
                (None, None)
            };
            LocalLawRecord {
                n,
                z,
                m_err,
                diag_err,
                offdiag_max: offdiag,
                envelope_entry: (msc[p].im / (nf * eta)).sqrt() + 1.0 / (nf * eta),
                envelope_avg: 1.0 / (nf * eta),
            }
        })
        .collect();
    Ok(LocalLawReport {
        records,
        polylog: (f64::NAN, f64::NAN),
    })
}

fn offdiag_max(vecs: &Eigenvectors, w: &[Complex64], rows: usize) -> f64 {
    let n = w.len();
    let cols: Vec<Vec<Complex64>> = (0..n).map(|a| vecs.vector(a)).collect();
    let mut best: f64 = 0.0;
    for i in 0..rows {
        let mut g = vec![Complex64::new(0.0, 0.0); n];
        for (a, u) in cols.iter().enumerate() {
            let c = w[a] * u[i];
            for (gj, uj) in g.iter_mut().zip(u) {
                *gj += c * uj.conj();
            }
        }
        for (j, gj) in g.iter().enumerate() {
            if j != i {
                best = best.max(gj.norm());
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub n: usize,
    /// `max_j |λ_j - γ_j| N^{2/3} min(j, N-j+1)^{1/3}` per sample.
    pub max_scaled: Vec<f64>,
    /// `Q = (1/N) Σ (λ_j - γ_j)²` per sample.
    pub q: Vec<f64>,
    /// `|λ_{N/2} - γ_{N/2}|` per sample.
    pub bulk_dev: Vec<f64>,
}

impl RigidityReport {
    pub fn q_mean(&self) -> f64 {
        mean(&self.q)
    }

    pub fn q_stderr(&self) -> f64 {
        if self.q.len() < 2 {
            0.0
        } else {
            std_err(&self.q)
        }
    }

    pub fn median_bulk_dev(&self) -> f64 {
        median(&self.bulk_dev)
    }
}

/// Rigidity statistics of one ascending spectrum against `γ`.
pub fn rigidity_of(eigs: &[f64], gamma: &[f64]) -> (f64, f64, f64) {
    let n = eigs.len();
    let n23 = (n as f64).powf(2.0 / 3.0);
    let mut max_scaled: f64 = 0.0;
    let mut q = 0.0;
    for j in 0..n {
        let d = (eigs[j] - gamma[j]).abs();
        let w = ((j + 1).min(n - j) as f64).cbrt();
        max_scaled = max_scaled.max(d * n23 * w);
        q += d * d;
    }
    let mid = (n / 2).max(1) - 1;
    (max_scaled, q / n as f64, (eigs[mid] - gamma[mid]).abs())
}

pub fn rigidity_report(
    source: &SpectrumSource,
    samples: usize,
    seed: &SeedPath,
) -> Result<RigidityReport> {
    let n = source.n();
    let gamma = classical_locations(n, &SemicircleLaw);
    let rows: Vec<Result<(f64, f64, f64)>> = par_map(samples, |k| {
        let eigs = source.eigenvalues(&seed.with_index(k as u64))?;
        Ok(rigidity_of(&eigs, &gamma))
    });
    let rows: Vec<(f64, f64, f64)> = rows.into_iter().collect::<Result<_>>()?;
    Ok(RigidityReport {
        n,
        max_scaled: rows.iter().map(|r| r.0).collect(),
        q: rows.iter().map(|r| r.1).collect(),
        bulk_dev: rows.iter().map(|r| r.2).collect(),
    })
}

/// Regression of `log Q` on `log N`.
pub fn rigidity_slope(reports: &[RigidityReport]) -> Result<Regression> {
    let x: Vec<f64> = reports.iter().map(|r| (r.n as f64).ln()).collect();
    let y: Vec<f64> = reports.iter().map(|r| r.q_mean().ln()).collect();
    linear_regression(&x, &y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelocalizationReport {
    pub n: usize,
    /// `N max_α ‖u_α‖²_∞` per sample.
    pub values: Vec<f64>,
}

impl DelocalizationReport {
    pub fn median(&self) -> f64 {
        median(&self.values)
    }

    pub fn median_stderr(&self) -> f64 {
        median_std_err(&self.values)
    }
}

/// `N max_α ‖u_α‖²_∞` of one eigenbasis.
pub fn delocalization_of(vecs: &Eigenvectors) -> f64 {
    let n = vecs.len();
    n as f64 * (0..n).map(|a| vecs.sup_norm_sq(a)).fold(0.0, f64::max)
}

pub fn delocalization_report(
    spec: &EnsembleSpec,
    samples: usize,
    seed: &SeedPath,
) -> Result<DelocalizationReport> {
    let rows: Vec<Result<f64>> = par_map(samples, |k| {
        let h = sample(spec, &seed.with_index(k as u64))?;
        let sp = eigen_matrix(&h.matrix, true)?;
        Ok(delocalization_of(
            sp.eigenvectors.as_ref().expect("requested"),
        ))
    });
    Ok(DelocalizationReport {
        n: spec.n,
        values: rows.into_iter().collect::<Result<_>>()?,
    })
}

/// `Z_i` for every `i`, from one eigendecomposition:
/// `Σ_{k,l≠i} h_ik G^{(i)}_kl h_li = h_ii - z - 1/G_ii` and
/// `Tr G^{(i)} = Tr G - (G²)_ii / G_ii`.
pub fn z_values(h: &Matrix, z: Complex64) -> Result<Vec<Complex64>> {
    let n = h.n();
    let sp = eigen_matrix(h, true)?;
    let vecs = sp.eigenvectors.as_ref().expect("requested");
    let w: Vec<Complex64> = sp.eigenvalues.iter().map(|&l| (l - z).inv()).collect();
    let mut gii = vec![Complex64::new(0.0, 0.0); n];
    let mut g2ii = vec![Complex64::new(0.0, 0.0); n];
    for (a, wa) in w.iter().enumerate() {
        let w2 = wa * wa;
        for i in 0..n {
            let u2 = vecs.weight(a, i);
            gii[i] += wa * u2;
            g2ii[i] += w2 * u2;
        }
    }
    let tr: Complex64 = w.iter().sum();
    let nf = n as f64;
    Ok((0..n)
        .map(|i| {
            let quad = h.get(i, i).re - z - gii[i].inv();
            let tr_minor = tr - g2ii[i] / gii[i];
            quad - tr_minor / nf
        })
        .collect())
}

/// Direct Schur reconstruction for one index: returns
/// `(G_ii direct, 1/(h_ii - z - h_i^* G^{(i)} h_i), Z_i via the minor)`.
pub fn schur_check(
    h: &Matrix,
    i: usize,
    z: Complex64,
) -> Result<(Complex64, Complex64, Complex64)> {
    let n = h.n();
    let full = eigen_matrix(h, true)?;
    let vecs = full.eigenvectors.as_ref().expect("requested");
    let gii: Complex64 = full
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(a, &l)| vecs.weight(a, i) / (l - z))
        .sum();
    let minor = minor_resolvent(h, i, &[z], true)?;
    let m = minor.dim();
    let row: Vec<Complex64> = minor.labels.iter().map(|&k| h.get(i, k)).collect();
    let mut quad = Complex64::new(0.0, 0.0);
    let mut tr = Complex64::new(0.0, 0.0);
    for k in 0..m {
        let gk = minor.g(0, k, k).expect("entries");
        tr += gk;
        for l in 0..m {
            quad += row[k] * minor.g(0, k, l).expect("entries") * row[l].conj();
        }
    }
    let recon = (h.get(i, i).re - z - quad).inv();
    Ok((gii, recon, quad - tr / n as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationAveragingRecord {
    pub n: usize,
    pub z: Complex64,
    /// `|(1/N) Σ Z_i|` per sample.
    pub averaged: Vec<f64>,
    /// `(1/N) Σ |Z_i|` per sample.
    pub individual: Vec<f64>,
    /// Mean of `Re Z_i` and `Im Z_i` per sample.
    pub z_mean: Vec<Complex64>,
}

impl FluctuationAveragingRecord {
    pub fn n_eta(&self) -> f64 {
        self.n as f64 * self.z.im
    }
}

pub fn fluctuation_averaging_report(
    spec: &EnsembleSpec,
    z: Complex64,
    samples: usize,
    seed: &SeedPath,
) -> Result<FluctuationAveragingRecord> {
    if z.im < 1.0 / spec.n as f64 {
        return invalid("η must be at least 1/N");
    }
    let rows: Vec<Result<(f64, f64, Complex64)>> = par_map(samples, |k| {
        let h = sample(spec, &seed.with_index(k as u64))?;
        let zs = z_values(&h.matrix, z)?;
        let nf = zs.len() as f64;
        let avg: Complex64 = zs.iter().sum::<Complex64>() / nf;
        let ind = zs.iter().map(|v| v.norm()).sum::<f64>() / nf;
        Ok((avg.norm(), ind, avg))
    });
    let rows: Vec<(f64, f64, Complex64)> = rows.into_iter().collect::<Result<_>>()?;
    Ok(FluctuationAveragingRecord {
        n: spec.n,
        z,
        averaged: rows.iter().map(|r| r.0).collect(),
        individual: rows.iter().map(|r| r.1).collect(),
        z_mean: rows.iter().map(|r| r.2).collect(),
    })
}

/// Slopes of `log median A` and `log median B` against `log(Nη)`.
pub fn fluctuation_averaging_slopes(
    records: &[FluctuationAveragingRecord],
) -> Result<(Regression, Regression)> {
    let x: Vec<f64> = records.iter().map(|r| r.n_eta().ln()).collect();
    let ya: Vec<f64> = records.iter().map(|r| median(&r.averaged).ln()).collect();
    let yb: Vec<f64> = records.iter().map(|r| median(&r.individual).ln()).collect();
    Ok((linear_regression(&x, &ya)?, linear_regression(&x, &yb)?))
}

/// Smooth cutoff: 1 on `[-1/2, 1/2]`, 0 outside `[-1, 1]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SmoothCutoff;

impl SmoothCutoff {
    fn bump(t: f64) -> (f64, f64) {
        // e^{-1/t} and its derivative, zero for t <= 0
        if t <= 0.0 {
            (0.0, 0.0)
        } else {
            let v = (-1.0 / t).exp();
            (v, v / (t * t))
        }
    }

    /// `(χ(y), χ'(y))`.
    pub fn eval(self, y: f64) -> (f64, f64) {
        let a = y.abs();
        if a <= 0.5 {
            return (1.0, 0.0);
        }
        if a >= 1.0 {
            return (0.0, 0.0);
        }
        // t runs from 1 at |y| = 1/2 to 0 at |y| = 1
        let t = 2.0 * (1.0 - a);
        let (p, dp) = Self::bump(t);
        let (q, dq) = Self::bump(1.0 - t);
        let s = p + q;
        let chi = p / s;
        let dchi_dt = (dp * s - p * (dp - dq)) / (s * s);
        (chi, dchi_dt * -2.0 * a.signum() * y.signum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsResult {
    pub integral: f64,
    pub exact: f64,
    pub residual: f64,
    pub nodes: usize,
}

/// Two-dimensional quadrature of the Helffer–Sjöstrand representation of
/// `f(λ)`, with `f` given as `x -> (f, f', f'')` supported in `support`.
/// Uses the `y -> -y` symmetry and tensor Gauss–Legendre panels split at
/// `x = λ` and `|y| = 1/2`; `grid` is the node count per axis.
pub fn hs_identity_check(
    f: &dyn Fn(f64) -> (f64, f64, f64),
    support: (f64, f64),
    lambda: f64,
    grid: usize,
) -> Result<HsResult> {
    let (a, b) = support;
    if !(b > a) || grid < 20 {
        return invalid("HS check needs a nonempty support and grid >= 20");
    }
    let chi = SmoothCutoff;
    let (gx, gw) = gauss_legendre_10();
    let panels = grid / 10;
    let mut xs_breaks = vec![a, b];
    if lambda > a && lambda < b {
        xs_breaks.insert(1, lambda);
    }
    let x_nodes = panel_nodes(&xs_breaks, panels, &gx, &gw);
    let y_nodes = panel_nodes(&[0.0, 0.5, 1.0], panels, &gx, &gw);
    let mut total = 0.0;
    for &(x, wx) in &x_nodes {
        let (fx, f1, f2) = f(x);
        for &(y, wy) in &y_nodes {
            let (c, dc) = chi.eval(y);
            let num = Complex64::new(0.0, y * f2 * c)
                + Complex64::new(0.0, 1.0) * Complex64::new(fx, y * f1) * dc;
            let den = Complex64::new(lambda - x, -y);
            total += wx * wy * (num / den).re;
        }
    }
    // the integrand's real part is even in y
    let integral = 2.0 * total / (2.0 * std::f64::consts::PI);
    let exact = if lambda >= a && lambda <= b {
        f(lambda).0
    } else {
        0.0
    };
    Ok(HsResult {
        integral,
        exact,
        residual: (integral - exact).abs(),
        nodes: x_nodes.len() * y_nodes.len(),
    })
}

fn panel_nodes(breaks: &[f64], panels: usize, gx: &[f64; 10], gw: &[f64; 10]) -> Vec<(f64, f64)> {
    let segs = breaks.len() - 1;
    let per = (panels / segs).max(1);
    let mut out = Vec::with_capacity(segs * per * 10);
    for s in 0..segs {
        let (lo, hi) = (breaks[s], breaks[s + 1]);
        // geometric grading towards the left break, where the integrand kinks
        for p in 0..per {
            let t0 = p as f64 / per as f64;
            let t1 = (p + 1) as f64 / per as f64;
            let (u0, u1) = (lo + (hi - lo) * t0, lo + (hi - lo) * t1);
            let (c, h) = (0.5 * (u0 + u1), 0.5 * (u1 - u0));
            for k in 0..10 {
                out.push((c + h * gx[k], h * gw[k]));
            }
        }
    }
    out
}

fn gauss_legendre_10() -> ([f64; 10], [f64; 10]) {
    let x = [
        -0.973_906_528_517_171_7,
        -0.865_063_366_688_984_5,
        -0.679_409_568_299_024_4,
        -0.433_395_394_129_247_2,
        -0.148_874_338_981_631_2,
        0.148_874_338_981_631_2,
        0.433_395_394_129_247_2,
        0.679_409_568_299_024_4,
        0.865_063_366_688_984_5,
        0.973_906_528_517_171_7,
    ];
    let w = [
        0.066_671_344_308_688_1,
        0.149_451_349_150_580_6,
        0.219_086_362_515_982_0,
        0.269_266_719_309_996_4,
        0.295_524_224_714_752_9,
        0.295_524_224_714_752_9,
        0.269_266_719_309_996_4,
        0.219_086_362_515_982_0,
        0.149_451_349_150_580_6,
        0.066_671_344_308_688_1,
    ];
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_shape() {
        let c = SmoothCutoff;
        assert_eq!(c.eval(0.3).0, 1.0);
        assert_eq!(c.eval(-1.2).0, 0.0);
        let (v, _) = c.eval(0.75);
        assert!((v - 0.5).abs() < 1e-12);
        // derivative by finite differences
        let h = 1e-6;
        for y in [0.6, 0.8, -0.7] {
            let fd = (c.eval(y + h).0 - c.eval(y - h).0) / (2.0 * h);
            assert!(
                (fd - c.eval(y).1).abs() < 1e-6,
                "{y}: {fd} vs {}",
                c.eval(y).1
            );
        }
    }

    #[test]
    fn rigidity_of_exact_locations_is_zero() {
        let g = classical_locations(10, &SemicircleLaw);
        let (m, q, b) = rigidity_of(&g, &g);
        assert_eq!((m, q, b), (0.0, 0.0, 0.0));
    }
}
