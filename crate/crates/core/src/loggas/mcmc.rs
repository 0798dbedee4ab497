//! Metropolis sampling of ordered log-gas configurations by single-site
//! Gaussian moves.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{equilibrium_density, LogGasSpec, Potential};
use crate::error::{invalid, Result, RmtError};
use crate::par_map;
use crate::rng::{SeedPath, Stream};
use crate::spectral::{classical_locations, SemicircleLaw};

/// `𝓗(λ) = Σ V(λ_k)/2 - (1/N) Σ_{i<j} log|λ_j - λ_i|`; symmetric under
/// permutations.
pub fn hamiltonian(spec: &LogGasSpec, lambda: &[f64]) -> f64 {
    let n = lambda.len() as f64;
    let conf: f64 = lambda.iter().map(|&x| 0.5 * spec.potential.v(x)).sum();
    let mut inter = 0.0;
    for i in 0..lambda.len() {
        for j in (i + 1)..lambda.len() {
            inter += (lambda[j] - lambda[i]).abs().ln();
        }
    }
    conf - inter / n
}

/// `-βN 𝓗(λ)` on the ordered chamber, `-∞` off it.
pub fn log_target(spec: &LogGasSpec, lambda: &[f64]) -> f64 {
    if lambda.windows(2).any(|w| !(w[1] > w[0])) {
        return f64::NEG_INFINITY;
    }
    -spec.beta * lambda.len() as f64 * hamiltonian(spec, lambda)
}

/// `log min(1, π(y)/π(x))` for a symmetric proposal, given
/// `log π(y) - log π(x)`.
pub fn metropolis_log_acceptance(delta_log_target: f64) -> f64 {
    delta_log_target.min(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub chains: usize,
    /// Sweeps discarded while the step is tuned.
    pub burn_in: usize,
    /// Retained configurations per chain.
    pub samples: usize,
    /// Sweeps between retained configurations.
    pub thin: usize,
    /// Initial proposal width relative to the local spacing.
    pub step: f64,
    pub target_acceptance: f64,
}

impl Default for ChainParams {
    fn default() -> Self {
        Self {
            chains: 4,
            burn_in: 500,
            samples: 250,
            thin: 4,
            step: 0.5,
            target_acceptance: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcRun {
    pub samples: Vec<Vec<f64>>,
    pub acceptance: f64,
    pub step: f64,
}

/// `K` mobile particles in `(lo, hi)` interacting with `β log|·|` among
/// themselves and with frozen particles, under `exp(-(βN/2) V)`.
#[derive(Debug, Clone)]
pub struct ConditionalChain {
    pub beta: f64,
    pub n: usize,
    pub potential: Potential,
    pub fixed: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
    pub x: Vec<f64>,
    pub step: f64,
}

impl ConditionalChain {
    /// Whole-gas chain: nothing frozen, unbounded.
    pub fn full(spec: &LogGasSpec, init: Vec<f64>, step: f64) -> Self {
        Self {
            beta: spec.beta,
            n: spec.n,
            potential: spec.potential.clone(),
            fixed: Vec::new(),
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            x: init,
            step,
        }
    }

    /// `Σ_j log|(u - p_j)/(x - p_j)|`, taking one log per block of ratios.
    fn log_ratio(points: impl Iterator<Item = f64>, u: f64, x: f64) -> f64 {
        let mut total = 0.0;
        let mut prod = 1.0;
        for (k, p) in points.enumerate() {
            prod *= (u - p) / (x - p);
            if k % 8 == 7 {
                total += prod.abs().ln();
                prod = 1.0;
            }
        }
        total + prod.abs().ln()
    }

    fn delta_log_target(&self, i: usize, u: f64) -> f64 {
        let x = self.x[i];
        let conf = -0.5 * self.beta * self.n as f64 * (self.potential.v(u) - self.potential.v(x));
        let mobile = self
            .x
            .iter()
            .enumerate()
            .filter(|(m, _)| *m != i)
            .map(|(_, &p)| p);
        let inter =
            Self::log_ratio(mobile, u, x) + Self::log_ratio(self.fixed.iter().copied(), u, x);
        conf + self.beta * inter
    }

    /// Proposal scale for site `i`; depends only on the other particles so
    /// the proposal stays symmetric.
    fn scale(&self, i: usize) -> f64 {
        let k = self.x.len();
        let left = if i > 0 { self.x[i - 1] } else { self.lo };
        let right = if i + 1 < k { self.x[i + 1] } else { self.hi };
        if left.is_finite() && right.is_finite() {
            return 0.5 * (right - left);
        }
        if i + 2 < k {
            return self.x[i + 2] - self.x[i + 1];
        }
        if i >= 2 {
            return self.x[i - 1] - self.x[i - 2];
        }
        1.0 / self.n as f64
    }

    /// One sweep over all mobile sites; returns accepted moves.
    pub fn sweep(&mut self, rng: &mut Stream) -> usize {
        let k = self.x.len();
        let mut accepted = 0;
        for i in 0..k {
            let left = if i > 0 { self.x[i - 1] } else { self.lo };
            let right = if i + 1 < k { self.x[i + 1] } else { self.hi };
            let g: f64 = rng.sample(StandardNormal);
            let u = self.x[i] + self.step * self.scale(i) * g;
            let uniform: f64 = rng.random();
            if !(u > left && u < right) {
                // the log barrier makes the target vanish here
                continue;
            }
            if uniform.ln() < metropolis_log_acceptance(self.delta_log_target(i, u)) {
                self.x[i] = u;
                accepted += 1;
            }
        }
        accepted
    }

    /// Burn-in with step adaptation toward `target`, then sampling.
    pub fn run(&mut self, params: &ChainParams, rng: &mut Stream) -> Result<(Vec<Vec<f64>>, f64)> {
        let k = self.x.len().max(1);
        let block = 20;
        let mut acc = 0;
        for s in 0..params.burn_in {
            acc += self.sweep(rng);
            if (s + 1) % block == 0 {
                let rate = acc as f64 / (block * k) as f64;
                self.step *= ((rate - params.target_acceptance) * 2.0).exp();
                acc = 0;
            }
        }
        let mut out = Vec::with_capacity(params.samples);
        let mut accepted = 0;
        let mut proposed = 0;
        for _ in 0..params.samples {
            for _ in 0..params.thin.max(1) {
                accepted += self.sweep(rng);
                proposed += k;
            }
            out.push(self.x.clone());
        }
        let rate = if proposed == 0 {
            f64::NAN
        } else {
            accepted as f64 / proposed as f64
        };
        if !(0.1..=0.7).contains(&rate) {
            return Err(RmtError::NoConvergence {
                what: "MCMC acceptance outside [0.1, 0.7] after tuning",
                iterations: params.burn_in,
            });
        }
        Ok((out, rate))
    }
}

pub fn loggas_mcmc_sample(
    spec: &LogGasSpec,
    params: &ChainParams,
    seed: &SeedPath,
) -> Result<McmcRun> {
    spec.validate()?;
    if !(spec.convexity() > 0.0) {
        return invalid("MCMC route needs a strictly convex potential");
    }
    if params.chains == 0 || params.samples == 0 {
        return invalid("MCMC needs at least one chain and one sample");
    }
    let init = match spec.potential {
        Potential::Custom { .. } => classical_locations(spec.n, &SemicircleLaw),
        _ => classical_locations(spec.n, &equilibrium_density(spec)?),
    };
    let runs: Vec<Result<(Vec<Vec<f64>>, f64, f64)>> = par_map(params.chains, |c| {
        let mut rng = seed.with_index(c as u64).rng();
        let mut chain = ConditionalChain::full(spec, init.clone(), params.step);
        let (s, rate) = chain.run(params, &mut rng)?;
        Ok((s, rate, chain.step))
    });
    let runs: Vec<(Vec<Vec<f64>>, f64, f64)> = runs.into_iter().collect::<Result<_>>()?;
    let acceptance = runs.iter().map(|r| r.1).sum::<f64>() / runs.len() as f64;
    let step = runs.iter().map(|r| r.2).sum::<f64>() / runs.len() as f64;
    Ok(McmcRun {
        samples: runs.into_iter().flat_map(|r| r.0).collect(),
        acceptance,
        step,
    })
}
