//! One-cut equilibrium densities `ρ(t) = (1/π) r(t) √((t-A)(B-t))` solving
//! `V'(t)/2 = PV ∫ ρ(s)/(t-s) ds`, for polynomial `V'`.
//!
//! With Gauss–Chebyshev nodes every integral against `1/√((s-A)(B-s))` of a
//! polynomial is exact, so the endpoint conditions and `r` are computed
//! without discretization error; the residual check uses an independent
//! quadrature.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{LogGasSpec, Potential};
use crate::error::{invalid, Result, RmtError};
use crate::spectral::SpectralLaw;

const CHEB_NODES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumLaw {
    pub a: f64,
    pub b: f64,
    /// Coefficients of the polynomial `r`.
    pub r: Vec<f64>,
    pub potential: Potential,
    /// Largest balance-equation residual over the interior check grid.
    pub residual: f64,
}

fn cheb_nodes(a: f64, b: f64) -> impl Iterator<Item = f64> {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    (1..=CHEB_NODES).map(move |k| {
        c + h * ((2 * k - 1) as f64 * std::f64::consts::PI / (2 * CHEB_NODES) as f64).cos()
    })
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn poly_c(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// `((1/π)∫ V'/√, (1/2π)∫ t V'/√ - 1)`; both vanish at the one-cut endpoints.
fn endpoint_conditions(dv: &[f64], a: f64, b: f64) -> (f64, f64) {
    let m = CHEB_NODES as f64;
    let (mut f1, mut f2) = (0.0, 0.0);
    for t in cheb_nodes(a, b) {
        let d = poly(dv, t);
        f1 += d;
        f2 += t * d;
    }
    (f1 / m, f2 / (2.0 * m) - 1.0)
}

fn solve_endpoints(dv: &[f64]) -> Result<(f64, f64)> {
    let (mut a, mut b) = (-2.0, 2.0);
    for it in 0..100 {
        let (f1, f2) = endpoint_conditions(dv, a, b);
        if f1.abs() < 1e-14 && f2.abs() < 1e-14 {
            return Ok((a, b));
        }
        let h = 1e-7;
        let (f1a, f2a) = endpoint_conditions(dv, a + h, b);
        let (f1b, f2b) = endpoint_conditions(dv, a, b + h);
        let j = [
            [(f1a - f1) / h, (f1b - f1) / h],
            [(f2a - f2) / h, (f2b - f2) / h],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 || !det.is_finite() {
            return Err(RmtError::NoConvergence {
                what: "equilibrium endpoints (singular Jacobian)",
                iterations: it,
            });
        }
        let da = (f1 * j[1][1] - f2 * j[0][1]) / det;
        let db = (j[0][0] * f2 - j[1][0] * f1) / det;
        // damp so the interval never inverts
        let mut s = 1.0;
        while b - s * db <= a - s * da + 1e-12 {
            s *= 0.5;
        }
        a -= s * da;
        b -= s * db;
        if (da.abs() + db.abs()) * s < 1e-15 {
            return Ok((a, b));
        }
    }
    Err(RmtError::NoConvergence {
        what: "equilibrium endpoints",
        iterations: 100,
    })
}

pub fn equilibrium_density(spec: &LogGasSpec) -> Result<EquilibriumLaw> {
    spec.validate()?;
    let Some(dv) = spec.potential.dv_poly() else {
        return invalid("equilibrium density needs a quadratic or quartic potential");
    };
    let (a, b) = solve_endpoints(&dv)?;
    // μ_j = ∫ s^j / √((s-A)(B-s)) ds
    let mu: Vec<f64> = (0..dv.len())
        .map(|j| {
            std::f64::consts::PI / CHEB_NODES as f64
                * cheb_nodes(a, b).map(|t| t.powi(j as i32)).sum::<f64>()
        })
        .collect();
    // r(t) = (1/2π) Σ_k c_k Σ_{i<k} t^i μ_{k-1-i}
    let deg = dv.len().saturating_sub(1);
    let mut r = vec![0.0; deg.max(1)];
    for (k, &ck) in dv.iter().enumerate() {
        for i in 0..k {
            r[i] += ck * mu[k - 1 - i] / (2.0 * std::f64::consts::PI);
        }
    }
    let mut law = EquilibriumLaw {
        a,
        b,
        r,
        potential: spec.potential.clone(),
        residual: f64::NAN,
    };
    let grid: Vec<f64> = (1..=50).map(|k| a + (b - a) * k as f64 / 51.0).collect();
    if grid
        .iter()
        .chain([a, b].iter())
        .any(|&t| law.r_at(t) <= 0.0)
    {
        return invalid("potential is not one-cut: r vanishes on the support");
    }
    law.residual = grid
        .iter()
        .map(|&t| law.balance_residual(t))
        .fold(0.0, f64::max);
    if !(law.residual <= 1e-4) {
        return Err(RmtError::NonFinite(format!(
            "equilibrium residual {} exceeds 1e-4",
            law.residual
        )));
    }
    Ok(law)
}

impl EquilibriumLaw {
    pub fn r_at(&self, t: f64) -> f64 {
        poly(&self.r, t)
    }

    fn sqrt_branch(&self, z: Complex64) -> Complex64 {
        // product of principal roots: analytic off [A, B] and ~ z at infinity
        (z - self.a).sqrt() * (z - self.b).sqrt()
    }

    /// `s(z) = -2 r(z) √((A-z)(B-z))`, root branch `~ z` at infinity.
    pub fn s_function(&self, z: Complex64) -> Complex64 {
        -2.0 * poly_c(&self.r, z) * self.sqrt_branch(z)
    }

    /// `∫ ρ(s)/(s - z) ds`.
    pub fn stieltjes(&self, z: Complex64) -> Result<Complex64> {
        let dv = self
            .potential
            .dv_poly()
            .expect("equilibrium laws have polynomial V'");
        Ok(-0.5 * poly_c(&dv, z) + poly_c(&self.r, z) * self.sqrt_branch(z))
    }

    /// `|V'(t)/2 - PV ∫ ρ(s)/(t-s) ds|` by composite Gauss–Legendre in the
    /// angle `s = c - h cos θ`, with the singular part integrated exactly.
    pub fn balance_residual(&self, t: f64) -> f64 {
        let (c, h) = (0.5 * (self.a + self.b), 0.5 * (self.b - self.a));
        let rho_t = self.density(t);
        let (x, w) = gauss_legendre(16);
        let panels = 200;
        let dth = std::f64::consts::PI / panels as f64;
        let mut smooth = 0.0;
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * dth;
            for k in 0..x.len() {
                let th = mid + 0.5 * dth * x[k];
                let s = c - h * th.cos();
                let ds = h * th.sin();
                let diff = t - s;
                if diff.abs() < 1e-14 {
                    continue;
                }
                smooth += 0.5 * dth * w[k] * (self.density(s) - rho_t) / diff * ds;
            }
        }
        let pv = smooth + rho_t * ((t - self.a) / (self.b - t)).ln();
        (0.5 * self.potential.dv(t) - pv).abs()
    }
}

impl SpectralLaw for EquilibriumLaw {
    fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    fn density(&self, x: f64) -> f64 {
        if x <= self.a || x >= self.b {
            0.0
        } else {
            self.r_at(x) * ((x - self.a) * (self.b - x)).sqrt() / std::f64::consts::PI
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.a {
            return 0.0;
        }
        if x >= self.b {
            return 1.0;
        }
        let (c, h) = (0.5 * (self.a + self.b), 0.5 * (self.b - self.a));
        let theta = ((c - x) / h).clamp(-1.0, 1.0).acos();
        let (gx, gw) = gauss_legendre(32);
        let half = 0.5 * theta;
        let integral: f64 = gx
            .iter()
            .zip(&gw)
            .map(|(&u, &w)| {
                let th = half * (u + 1.0);
                let s = th.sin();
                w * self.r_at(c - h * th.cos()) * s * s
            })
            .sum();
        (h * h / std::f64::consts::PI * half * integral).clamp(0.0, 1.0)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton on `P_n`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            let dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
    }
}
