//! Tridiagonal model of the Gaussian β-ensemble.
//!
//! Diagonal `N(0, 2)`, sub-diagonal `χ_{β(N-k)}` for `k = 1..N`, eigenvalues
//! divided by `√(βN)`. The eigenvalue law is exactly
//! `∝ Π|λ_i - λ_j|^β exp(-βN Σ λ²/4)`, i.e. the log-gas with `V = x²/2`,
//! whose equilibrium measure is the semicircle on `[-2, 2]`.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::linalg::tridiagonal_eigen;
use crate::rng::SeedPath;
use crate::spectral::Spectrum;

/// Diagonal and sub-diagonal of one scaled tridiagonal draw.
pub fn gaussian_beta_tridiagonal(
    beta: f64,
    n: usize,
    seed: &SeedPath,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(beta > 0.0 && beta.is_finite()) {
        return invalid(format!("β = {beta} must be positive"));
    }
    if n == 0 {
        return invalid("N must be positive");
    }
    let mut rng = seed.rng();
    let scale = (beta * n as f64).sqrt().recip();
    let d: Vec<f64> = (0..n)
        .map(|_| 2f64.sqrt() * rng.sample::<f64, _>(StandardNormal) * scale)
        .collect();
    let mut e = Vec::with_capacity(n - 1);
    for k in 1..n {
        let dof = beta * (n - k) as f64;
        let chi2 = ChiSquared::new(dof)
            .map_err(|err| crate::RmtError::InvalidParameter(err.to_string()))?;
        e.push(chi2.sample(&mut rng).sqrt() * scale);
    }
    Ok((d, e))
}

pub fn gaussian_beta_tridiagonal_sample(beta: f64, n: usize, seed: &SeedPath) -> Result<Spectrum> {
    let (d, e) = gaussian_beta_tridiagonal(beta, n, seed)?;
    let (eigenvalues, _) = tridiagonal_eigen(&d, &e, false)?;
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: None,
    })
}
