//! Observables built from spectra: unfolded gaps, histograms, pair
//! correlations, edge statistics, and the summary statistics used to compare
//! them.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, Result, RmtError};
use crate::rng::SeedPath;
use crate::spectral::SpectralLaw;

/// Two-sample Kolmogorov–Smirnov statistic, computed exactly by merging the
/// sorted samples. Ties advance both empirical CDFs together.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(RmtError::InsufficientData(
            "KS distance needs two nonempty samples".into(),
        ));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// One-sample KS statistic against a continuous CDF.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(RmtError::InsufficientData(
            "KS distance needs a nonempty sample".into(),
        ));
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    Ok(s.iter().enumerate().fold(0.0f64, |d, (k, &x)| {
        let f = cdf(x);
        d.max((f - k as f64 / n).abs())
            .max(((k + 1) as f64 / n - f).abs())
    }))
}

/// GOE Wigner surmise `(πs/2) exp(-πs²/4)`.
pub fn wigner_surmise_pdf(s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return invalid(format!("spacing {s} must be nonnegative"));
    }
    let pi = std::f64::consts::PI;
    Ok(0.5 * pi * s * (-0.25 * pi * s * s).exp())
}

pub fn wigner_surmise_cdf(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        1.0 - (-0.25 * std::f64::consts::PI * s * s).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnfoldedGaps {
    pub gaps: Vec<f64>,
    /// `(E, b)`: gaps come from eigenvalues in `[E - b, E + b]`.
    pub window: (f64, f64),
}

impl UnfoldedGaps {
    pub fn empty(window: (f64, f64)) -> Self {
        Self {
            gaps: Vec::new(),
            window,
        }
    }

    pub fn extend(&mut self, other: &UnfoldedGaps) {
        self.gaps.extend_from_slice(&other.gaps);
    }

    pub fn mean(&self) -> f64 {
        mean(&self.gaps)
    }
}

/// Consecutive eigenvalues inside the window, each gap scaled by
/// `N ρ(midpoint)` where `N` is the number of eigenvalues.
pub fn unfold(
    eigenvalues: &[f64],
    law: &dyn SpectralLaw,
    window: (f64, f64),
) -> Result<UnfoldedGaps> {
    let (e, b) = window;
    let (lo, hi) = law.support();
    if !(b > 0.0) || e - b <= lo + 0.1 || e + b >= hi - 0.1 {
        return invalid(format!(
            "window [{}, {}] is not inside the bulk ({}, {})",
            e - b,
            e + b,
            lo + 0.1,
            hi - 0.1
        ));
    }
    let n = eigenvalues.len() as f64;
    let inside: Vec<f64> = eigenvalues
        .iter()
        .copied()
        .filter(|&x| x >= e - b && x <= e + b)
        .collect();
    if inside.len() < 2 {
        return Err(RmtError::InsufficientData(
            "fewer than two eigenvalues in the unfolding window".into(),
        ));
    }
    let gaps = inside
        .windows(2)
        .map(|w| n * law.density(0.5 * (w[0] + w[1])) * (w[1] - w[0]))
        .collect();
    Ok(UnfoldedGaps { gaps, window })
}

/// Density-normalized histogram over `[edges[0], edges[last]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub stderr: Vec<f64>,
    pub count: usize,
    /// Values outside the binned range; excluded from the normalization.
    pub outside: usize,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn integral(&self) -> f64 {
        self.density
            .iter()
            .zip(self.edges.windows(2))
            .map(|(d, w)| d * (w[1] - w[0]))
            .sum()
    }

    /// `max_k |density_k - (1/width) ∫_bin f|`, given the CDF of `f`.
    pub fn sup_distance_to(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        self.density
            .iter()
            .zip(self.edges.windows(2))
            .map(|(d, w)| (d - (cdf(w[1]) - cdf(w[0])) / (w[1] - w[0])).abs())
            .fold(0.0, f64::max)
    }

    /// Largest bin-wise difference between two histograms on the same bins.
    pub fn sup_difference(&self, other: &Histogram) -> f64 {
        self.density
            .iter()
            .zip(&other.density)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub const MIN_HISTOGRAM_GAPS: usize = 500;

pub fn histogram(values: &[f64], bins: usize, range: (f64, f64)) -> Result<Histogram> {
    let (lo, hi) = range;
    if bins == 0 || !(hi > lo) {
        return invalid("histogram needs at least one bin and a nonempty range");
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|k| lo + width * k as f64).collect();
    let mut counts = vec![0usize; bins];
    let mut outside = 0;
    for &v in values {
        if v < lo || v > hi || !v.is_finite() {
            outside += 1;
            continue;
        }
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let total = values.len() - outside;
    if total == 0 {
        return Err(RmtError::InsufficientData(
            "no values inside the histogram range".into(),
        ));
    }
    let norm = total as f64 * width;
    let density = counts.iter().map(|&c| c as f64 / norm).collect();
    let stderr = counts.iter().map(|&c| (c as f64).sqrt() / norm).collect();
    Ok(Histogram {
        edges,
        density,
        stderr,
        count: total,
        outside,
    })
}

/// Normalized histogram of unfolded gaps; at least 500 gaps are required.
pub fn gap_histogram(gaps: &UnfoldedGaps, bins: usize, upper: f64) -> Result<Histogram> {
    if gaps.gaps.len() < MIN_HISTOGRAM_GAPS {
        return Err(RmtError::InsufficientData(format!(
            "{} gaps pooled; gap histograms need at least {MIN_HISTOGRAM_GAPS}",
            gaps.gaps.len()
        )));
    }
    histogram(&gaps.gaps, bins, (0.0, upper))
}

/// Averaged two-point function in a window, relative to independent points.
///
/// Pairs of eigenvalues in `[E - b, E + b]` are binned by their rescaled
/// separation `α = Nρ(E)(λ_j - λ_i)`. Each bin count is divided by the count
/// expected for uniform independent points at the same intensity, so the
/// estimate is ≈ 1 without correlations. Only differences between two
/// ensembles are meaningful.
pub fn two_point_window_correlation(
    spectra: &[Vec<f64>],
    law: &dyn SpectralLaw,
    e: f64,
    b: f64,
    alpha_max: f64,
    bins: usize,
) -> Result<Histogram> {
    if spectra.len() < 50 {
        return Err(RmtError::InsufficientData(format!(
            "{} spectra pooled; need at least 50",
            spectra.len()
        )));
    }
    let n = spectra[0].len() as f64;
    let rho = law.density(e);
    if !(rho > 0.0) || b < 10.0 / (n * rho) {
        return invalid(format!("window half-width {b} is narrower than 10/(Nρ(E))"));
    }
    let scale = n * rho;
    let length = 2.0 * b * scale;
    let width = alpha_max / bins as f64;
    let mut counts = vec![0.0f64; bins];
    let mut points = 0usize;
    for s in spectra {
        let inside: Vec<f64> = s
            .iter()
            .copied()
            .filter(|&x| x >= e - b && x <= e + b)
            .collect();
        points += inside.len();
        for i in 0..inside.len() {
            for j in i + 1..inside.len() {
                let a = scale * (inside[j] - inside[i]);
                if a >= alpha_max {
                    break;
                }
                counts[((a / width) as usize).min(bins - 1)] += 1.0;
            }
        }
    }
    // independent points at intensity ρ: E #pairs with separation in da is ρ² (L - a) da
    let per_sample = points as f64 / spectra.len() as f64;
    let intensity = per_sample / length;
    let edges: Vec<f64> = (0..=bins).map(|k| width * k as f64).collect();
    let mut density = Vec::with_capacity(bins);
    let mut stderr = Vec::with_capacity(bins);
    for k in 0..bins {
        let (a0, a1) = (edges[k], edges[k + 1]);
        // ∫_{a0}^{a1} (length - a) da
        let overlap = (length - 0.5 * (a0 + a1)) * (a1 - a0);
        let expected = spectra.len() as f64 * intensity * intensity * overlap;
        density.push(counts[k] / expected);
        stderr.push(counts[k].sqrt() / expected);
    }
    Ok(Histogram {
        edges,
        density,
        stderr,
        count: counts.iter().sum::<f64>() as usize,
        outside: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeWhich {
    Largest,
    SecondLargest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeStatistic {
    pub values: Vec<f64>,
    pub which: EdgeWhich,
    pub tag: String,
}

/// `N^{2/3}(λ - 2)` for the largest or second-largest eigenvalue of each
/// ascending spectrum.
pub fn edge_statistic(spectra: &[Vec<f64>], which: EdgeWhich, tag: &str) -> Result<EdgeStatistic> {
    let mut values = Vec::with_capacity(spectra.len());
    for s in spectra {
        let n = s.len();
        if n < 100 {
            return invalid(format!("edge statistic needs N >= 100, got {n}"));
        }
        let lambda = match which {
            EdgeWhich::Largest => s[n - 1],
            EdgeWhich::SecondLargest => s[n - 2],
        };
        values.push(edge_scale(n, lambda));
    }
    Ok(EdgeStatistic {
        values,
        which,
        tag: tag.to_string(),
    })
}

pub fn edge_scale(n: usize, lambda: f64) -> f64 {
    (n as f64).powf(2.0 / 3.0) * (lambda - 2.0)
}

/// iid uniform points on `[a, b]`, sorted; a spectrum without repulsion.
pub fn poisson_points(n: usize, a: f64, b: f64, seed: &SeedPath) -> Vec<f64> {
    let mut rng = seed.rng();
    let mut v: Vec<f64> = (0..n).map(|_| a + (b - a) * rng.random::<f64>()).collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        f64::NAN
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn std_err(x: &[f64]) -> f64 {
    (variance(x) / x.len() as f64).sqrt()
}

/// Linear-interpolated quantile, `q` in `[0, 1]`.
pub fn quantile(x: &[f64], q: f64) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

pub fn median(x: &[f64]) -> f64 {
    quantile(x, 0.5)
}

/// Standard error of the median from the interquartile range,
/// `1.253 · (IQR / 1.349) / √n`.
pub fn median_std_err(x: &[f64]) -> f64 {
    let iqr = quantile(x, 0.75) - quantile(x, 0.25);
    1.2533 * iqr / 1.349 / (x.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<Regression> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(RmtError::InsufficientData(
            "regression needs at least two (x, y) pairs".into(),
        ));
    }
    let n = x.len() as f64;
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return invalid("regression abscissae are all equal");
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let slope_stderr = if x.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(Regression {
        slope,
        intercept,
        slope_stderr,
    })
}

/// Weighted least squares with known per-point standard errors of `y`; the
/// slope error is propagated from those errors.
pub fn weighted_regression(x: &[f64], y: &[f64], y_err: &[f64]) -> Result<Regression> {
    if x.len() != y.len() || x.len() != y_err.len() || x.len() < 2 {
        return Err(RmtError::InsufficientData(
            "regression needs at least two (x, y) pairs".into(),
        ));
    }
    let w: Vec<f64> = y_err.iter().map(|e| 1.0 / (e * e)).collect();
    let sw: f64 = w.iter().sum();
    let mx = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = w.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(x).map(|(a, b)| a * (b - mx).powi(2)).sum();
    let sxy: f64 = w
        .iter()
        .zip(x.iter().zip(y))
        .map(|(a, (b, c))| a * (b - mx) * (c - my))
        .sum();
    let slope = sxy / sxx;
    Ok(Regression {
        slope,
        intercept: my - slope * mx,
        slope_stderr: sxx.recip().sqrt(),
    })
}

/// One-sided one-sample t-test of `H0: mean(x) <= 0` against `mean > 0`;
/// returns the p-value.
pub fn one_sided_t_pvalue(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(RmtError::InsufficientData(
            "t-test needs at least two observations".into(),
        ));
    }
    let se = std_err(x);
    let m = mean(x);
    if se == 0.0 {
        return Ok(if m > 0.0 { 0.0 } else { 1.0 });
    }
    let t = StudentsT::new(0.0, 1.0, x.len() as f64 - 1.0)
        .map_err(|e| RmtError::InvalidParameter(e.to_string()))?;
    Ok(1.0 - t.cdf(m / se))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_extremes() {
        let a = [0.1, 0.5, 0.9];
        assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_distance(&a, &[2.0, 3.0]).unwrap(), 1.0);
        assert!(ks_distance(&[], &a).is_err());
    }

    #[test]
    fn ks_ties() {
        assert_eq!(
            ks_distance(&[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]).unwrap(),
            1.0 / 3.0
        );
    }

    #[test]
    fn surmise_domain() {
        assert_eq!(wigner_surmise_pdf(0.0).unwrap(), 0.0);
        assert!(wigner_surmise_pdf(-0.1).is_err());
    }

    #[test]
    fn regression_exact_line() {
        let r = linear_regression(&[1.0, 2.0, 3.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((r.slope - 2.0).abs() < 1e-14 && (r.intercept + 1.0).abs() < 1e-14);
    }

    #[test]
    fn quantiles() {
        let x = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(median(&x), 2.5);
        assert_eq!(quantile(&x, 0.0), 1.0);
        assert_eq!(quantile(&x, 1.0), 4.0);
    }
}
