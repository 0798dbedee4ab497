//! β-ensemble experiments: bulk rigidity, the first loop equation, and the
//! conditional local measure compared with its Gaussian reference.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::mcmc::{ChainParams, ConditionalChain};
use super::{
    equilibrium_density, gaussian_beta_tridiagonal_sample, loggas_mcmc_sample, LogGasSpec,
    Potential,
};
use crate::error::{invalid, Result, RmtError};
use crate::par_map;
use crate::rng::SeedPath;
use crate::spectral::{classical_locations, SemicircleLaw};
use crate::stats::{ks_distance, linear_regression, median, quantile, Regression};

fn spectra(spec: &LogGasSpec, samples: usize, seed: &SeedPath) -> Result<Vec<Vec<f64>>> {
    match spec.potential {
        Potential::Quadratic => par_map(samples, |k| {
            Ok(
                gaussian_beta_tridiagonal_sample(spec.beta, spec.n, &seed.with_index(k as u64))?
                    .eigenvalues,
            )
        })
        .into_iter()
        .collect(),
        _ => {
            let params = ChainParams {
                samples: samples.div_ceil(4),
                ..ChainParams::default()
            };
            let mut s = loggas_mcmc_sample(spec, &params, seed)?.samples;
            s.truncate(samples);
            Ok(s)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogGasRigidity {
    pub n: usize,
    pub beta: f64,
    /// Median over samples and bulk `k` of `|λ_k - γ_k|`.
    pub median_dev: f64,
    /// Quantiles 0.5, 0.9, 0.99 of `N |λ_k - γ_k|` over bulk `k`.
    pub scaled_quantiles: [f64; 3],
    /// `λ_{⌈N/2⌉}` per sample; the centre particle when `N` is odd.
    pub middle: Vec<f64>,
}

/// Bulk window `⟦αN, (1-α)N⟧` with `α = 0.1`; the Gaussian potential uses
/// the tridiagonal model, other potentials the MCMC route.
pub fn loggas_rigidity_report(
    spec: &LogGasSpec,
    samples: usize,
    seed: &SeedPath,
) -> Result<LogGasRigidity> {
    let n = spec.n;
    if n < 10 || samples == 0 {
        return invalid("rigidity needs N >= 10 and at least one sample");
    }
    let gamma = match spec.potential {
        Potential::Quadratic => classical_locations(n, &SemicircleLaw),
        _ => classical_locations(n, &equilibrium_density(spec)?),
    };
    let lo = (0.1 * n as f64).ceil() as usize;
    let hi = (0.9 * n as f64).floor() as usize;
    let mut devs = Vec::with_capacity(samples * (hi - lo + 1));
    let mut middle = Vec::with_capacity(samples);
    for eigs in spectra(spec, samples, seed)? {
        for k in lo..=hi {
            devs.push((eigs[k - 1] - gamma[k - 1]).abs());
        }
        middle.push(eigs[(n - 1) / 2]);
    }
    let nf = n as f64;
    let scaled: Vec<f64> = devs.iter().map(|d| d * nf).collect();
    Ok(LogGasRigidity {
        n,
        beta: spec.beta,
        median_dev: median(&devs),
        scaled_quantiles: [
            quantile(&scaled, 0.5),
            quantile(&scaled, 0.9),
            quantile(&scaled, 0.99),
        ],
        middle,
    })
}

pub fn loggas_rigidity_slope(reports: &[LogGasRigidity]) -> Result<Regression> {
    let x: Vec<f64> = reports.iter().map(|r| (r.n as f64).ln()).collect();
    let y: Vec<f64> = reports.iter().map(|r| r.median_dev.ln()).collect();
    linear_regression(&x, &y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopRow {
    pub z: Complex64,
    /// `E (1/N) Σ 1/(λ_k - z)`.
    pub mbar: Complex64,
    pub m: Complex64,
    /// `var Σ 1/(z - λ_k)`, without conjugation.
    pub k: Complex64,
    pub mbar_prime: Complex64,
    /// `(m̄ - m)² - s (m̄ - m) + k/N² + (2/β - 1) m̄'/N`, zero in expectation.
    pub residual: Complex64,
    pub stderr: f64,
}

struct LoopSums {
    count: f64,
    g: Complex64,
    g2: Complex64,
    dg: Complex64,
}

fn loop_estimate(
    sums: &LoopSums,
    beta: f64,
    n: usize,
    m: Complex64,
    s: Complex64,
) -> (Complex64, Complex64, Complex64, Complex64) {
    let c = sums.count;
    let mbar = sums.g / c;
    let var_g = (sums.g2 / c - mbar * mbar) * (c / (c - 1.0));
    let nf = n as f64;
    let k = var_g * nf * nf;
    let mp = sums.dg / c;
    let d = mbar - m;
    (
        d * d - s * d + k / (nf * nf) + (2.0 / beta - 1.0) * mp / nf,
        mbar,
        k,
        mp,
    )
}

/// Quadratic potential only, where the `b_N` term vanishes identically.
/// Standard errors come from a 20-batch jackknife.
pub fn loop_equation_residual(
    spec: &LogGasSpec,
    z_grid: &[Complex64],
    samples: usize,
    seed: &SeedPath,
) -> Result<Vec<LoopRow>> {
    spec.validate()?;
    if spec.potential != Potential::Quadratic {
        return invalid("loop-equation residual is implemented for the quadratic potential");
    }
    if samples < 100 {
        return Err(RmtError::InsufficientData(format!(
            "{samples} samples; the variance term needs at least 100"
        )));
    }
    if z_grid.iter().any(|z| z.im < 0.5) {
        return invalid("loop-equation grid needs Im z >= 0.5");
    }
    let law = equilibrium_density(spec)?;
    let n = spec.n;
    let nf = n as f64;
    // per sample and z: g = (1/N) Σ 1/(λ - z) and g' = (1/N) Σ 1/(λ - z)²
    let per: Vec<Result<Vec<(Complex64, Complex64)>>> = par_map(samples, |k| {
        let eigs =
            gaussian_beta_tridiagonal_sample(spec.beta, n, &seed.with_index(k as u64))?.eigenvalues;
        Ok(z_grid
            .iter()
            .map(|&z| {
                let mut g = Complex64::new(0.0, 0.0);
                let mut dg = Complex64::new(0.0, 0.0);
                for &l in &eigs {
                    let w = (l - z).inv();
                    g += w;
                    dg += w * w;
                }
                (g / nf, dg / nf)
            })
            .collect())
    });
    let per: Vec<Vec<(Complex64, Complex64)>> = per.into_iter().collect::<Result<_>>()?;
    let batches = 20;
    let mut rows = Vec::with_capacity(z_grid.len());
    for (p, &z) in z_grid.iter().enumerate() {
        let m = law.stieltjes(z)?;
        let s = law.s_function(z);
        let zero = Complex64::new(0.0, 0.0);
        let mut batch = vec![(zero, zero, zero, 0.0); batches];
        for (idx, row) in per.iter().enumerate() {
            let (g, dg) = row[p];
            let b = &mut batch[idx * batches / samples];
            b.0 += g;
            b.1 += g * g;
            b.2 += dg;
            b.3 += 1.0;
        }
        let total = batch.iter().fold(
            LoopSums {
                count: 0.0,
                g: zero,
                g2: zero,
                dg: zero,
            },
            |acc, b| LoopSums {
                count: acc.count + b.3,
                g: acc.g + b.0,
                g2: acc.g2 + b.1,
                dg: acc.dg + b.2,
            },
        );
        let (residual, mbar, k, mp) = loop_estimate(&total, spec.beta, n, m, s);
        let leave_out: Vec<Complex64> = batch
            .iter()
            .map(|b| {
                let sums = LoopSums {
                    count: total.count - b.3,
                    g: total.g - b.0,
                    g2: total.g2 - b.1,
                    dg: total.dg - b.2,
                };
                loop_estimate(&sums, spec.beta, n, m, s).0
            })
            .collect();
        let bf = batches as f64;
        let avg: Complex64 = leave_out.iter().sum::<Complex64>() / bf;
        let var = (bf - 1.0) / bf * leave_out.iter().map(|r| (r - avg).norm_sqr()).sum::<f64>();
        rows.push(LoopRow {
            z,
            mbar,
            m,
            k,
            mbar_prime: mp,
            residual,
            stderr: var.sqrt(),
        });
    }
    Ok(rows)
}

/// `K` interior particles with indices `L+1..=L+K` (one-based) of an
/// `N`-particle gas, the rest frozen at classical locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalSpec {
    pub n: usize,
    pub l: usize,
    pub k: usize,
    pub beta: f64,
    pub potential: Potential,
    /// Distance of the frozen points from their classical locations.
    pub delta: f64,
}

impl ConditionalSpec {
    /// Centred bulk window.
    pub fn centred(n: usize, k: usize, beta: f64, potential: Potential) -> Self {
        Self {
            n,
            l: (n - k) / 2,
            k,
            beta,
            potential,
            delta: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > 64 {
            return invalid(format!("K = {} outside 1..=64", self.k));
        }
        if self.l == 0 || self.l + self.k + 1 > self.n {
            return invalid("window must leave a frozen point on each side");
        }
        LogGasSpec::new(self.beta, self.potential.clone(), self.n).map(|_| ())
    }

    fn locations(&self) -> Result<Vec<f64>> {
        let spec = LogGasSpec::new(self.beta, self.potential.clone(), self.n)?;
        Ok(classical_locations(self.n, &equilibrium_density(&spec)?))
    }

    /// Frozen points, interval `(y_L, y_{L+K+1})` and the starting interior.
    fn split(&self, loc: &[f64]) -> (Vec<f64>, (f64, f64), Vec<f64>) {
        let (l, k) = (self.l, self.k);
        let fixed = loc[..l].iter().chain(&loc[l + k..]).copied().collect();
        ((fixed), (loc[l - 1], loc[l + k]), loc[l..l + k].to_vec())
    }

    fn chain(&self, loc: &[f64], step: f64) -> ConditionalChain {
        let (fixed, (lo, hi), x) = self.split(loc);
        ConditionalChain {
            beta: self.beta,
            n: self.n,
            potential: self.potential.clone(),
            fixed,
            lo,
            hi,
            x,
            step,
        }
    }

    /// Same window for the Gaussian potential at semicircle locations.
    pub fn gaussian_reference(&self) -> Self {
        Self {
            potential: Potential::Quadratic,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalRecord {
    pub k: usize,
    pub l: usize,
    pub beta: f64,
    pub potential: String,
    pub ks: f64,
    pub stderr: f64,
    pub acceptance: f64,
    pub acceptance_reference: f64,
    /// `x -> scale x + shift` sends `[y_L, y_{L+K+1}]` onto `[θ_L, θ_{L+K+1}]`.
    pub affine: (f64, f64),
    pub gaps: usize,
}

/// Interior samples of the conditional measure, mean acceptance and the
/// interval `(y_L, y_{L+K+1})`.
pub fn conditional_samples(
    cond: &ConditionalSpec,
    params: &ChainParams,
    seed: &SeedPath,
) -> Result<(Vec<Vec<f64>>, f64, (f64, f64))> {
    let loc = cond.locations()?;
    let (_, interval, _) = cond.split(&loc);
    let runs: Vec<Result<(Vec<Vec<f64>>, f64)>> = par_map(params.chains, |c| {
        let mut chain = cond.chain(&loc, params.step);
        chain.run(params, &mut seed.with_index(c as u64).rng())
    });
    let runs: Vec<(Vec<Vec<f64>>, f64)> = runs.into_iter().collect::<Result<_>>()?;
    let acc = runs.iter().map(|r| r.1).sum::<f64>() / runs.len() as f64;
    Ok((runs.into_iter().flat_map(|r| r.0).collect(), acc, interval))
}

fn interior_gaps(samples: &[Vec<f64>], scale: f64, spacing: f64) -> Vec<f64> {
    samples
        .iter()
        .flat_map(|x| x.windows(2).map(move |w| scale * (w[1] - w[0]) / spacing))
        .collect()
}

/// Samples `μ_y` and the Gaussian `σ_θ` on the same window, maps `μ_y`
/// affinely onto the `σ_θ` interval and compares interior gaps.
pub fn conditional_measure_experiment(
    cond: &ConditionalSpec,
    params: &ChainParams,
    seed: &SeedPath,
) -> Result<ConditionalRecord> {
    cond.validate()?;
    if cond.k < 2 {
        return invalid("gap comparison needs K >= 2");
    }
    let reference = cond.gaussian_reference();
    let (mu, acc_mu, (ya, yb)) = conditional_samples(cond, params, &seed.child("mu"))?;
    let (sigma, acc_sigma, (ta, tb)) =
        conditional_samples(&reference, params, &seed.child("sigma"))?;
    if mu.iter().flatten().any(|&x| !(x > ya && x < yb)) {
        return Err(RmtError::NonFinite(
            "interior point escaped its interval".into(),
        ));
    }
    let scale = (tb - ta) / (yb - ya);
    let spacing = (tb - ta) / (cond.k + 1) as f64;
    let a = interior_gaps(&mu, scale, spacing);
    let b = interior_gaps(&sigma, 1.0, spacing);
    Ok(ConditionalRecord {
        k: cond.k,
        l: cond.l,
        beta: cond.beta,
        potential: cond.potential.name(),
        ks: ks_distance(&a, &b)?,
        stderr: crate::dbm::ks_stderr(mu.len(), sigma.len()),
        acceptance: acc_mu,
        acceptance_reference: acc_sigma,
        affine: (scale, ta - scale * ya),
        gaps: a.len(),
    })
}

/// Exact law of the single interior particle when `K = 1`: returns a
/// grid on `(y_L, y_{L+2})` and the CDF on it, by composite Simpson on
/// `exp(-(βN/2) V(x) + β Σ_j log|x - y_j|)`.
pub fn k1_conditional_cdf(cond: &ConditionalSpec, points: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if cond.k != 1 {
        return invalid("exact conditional law is for K = 1");
    }
    cond.validate()?;
    let loc = cond.locations()?;
    let (fixed, (lo, hi), _) = cond.split(&loc);
    let m = points.max(100) & !1;
    let h = (hi - lo) / m as f64;
    let nf = cond.n as f64;
    let logw: Vec<f64> = (0..=m)
        .map(|i| {
            let x = lo + h * i as f64;
            if i == 0 || i == m {
                return f64::NEG_INFINITY;
            }
            -0.5 * cond.beta * nf * cond.potential.v(x)
                + cond.beta * fixed.iter().map(|y| (x - y).abs().ln()).sum::<f64>()
        })
        .collect();
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - top).exp()).collect();
    let grid: Vec<f64> = (0..=m).map(|i| lo + h * i as f64).collect();
    let mut cdf = vec![0.0; m + 1];
    for i in 1..=m {
        cdf[i] = cdf[i - 1] + 0.5 * h * (w[i - 1] + w[i]);
    }
    let total = cdf[m];
    Ok((grid, cdf.iter().map(|c| c / total).collect()))
}
