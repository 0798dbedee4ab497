//! Dyson Brownian motion: the exact Ornstein–Uhlenbeck matrix flow, the
//! eigenvalue SDE it induces, and the relaxation experiment comparing global
//! and local time scales.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ensembles::{sample, EnsembleSpec, EntryDistribution, MatrixSample, Symmetry};
use crate::error::{invalid, Result, RmtError};
use crate::linalg::Matrix;
use crate::par_map;
use crate::rng::{SeedPath, Stream};
use crate::spectral::{AffineLaw, SemicircleLaw};
use crate::stats::{ks_distance, unfold};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DbmOrigin {
    MatrixFlow,
    Sde,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbmState {
    pub t: f64,
    /// Strictly increasing.
    pub lambda: Vec<f64>,
    pub beta: f64,
    pub origin: DbmOrigin,
}

impl DbmState {
    pub fn new(lambda: Vec<f64>, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return invalid(format!("β = {beta} must be positive"));
        }
        if !is_strictly_increasing(&lambda) {
            return invalid("initial positions must be strictly increasing");
        }
        Ok(Self {
            t: 0.0,
            lambda,
            beta,
            origin: DbmOrigin::Sde,
        })
    }

    pub fn min_gap(&self) -> f64 {
        self.lambda
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

fn is_strictly_increasing(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite()) && x.windows(2).all(|w| w[1] > w[0])
}

/// `H_t = e^{-t/2} H_0 + (1 - e^{-t})^{1/2} U` with `U` a fresh Gaussian
/// matrix of the requested symmetry, exact in law for every `t`.
pub fn ou_matrix_flow(
    h0: &MatrixSample,
    t: f64,
    gaussian: Symmetry,
    seed: &SeedPath,
) -> Result<MatrixSample> {
    if !(t >= 0.0) {
        return invalid(format!("flow time {t} must be nonnegative"));
    }
    let n = h0.n();
    let (a, b) = ((-0.5 * t).exp(), (-(-t).exp_m1()).sqrt());
    let uspec = match gaussian {
        Symmetry::RealSymmetric => EnsembleSpec::goe(n),
        Symmetry::ComplexHermitian => EnsembleSpec::gue(n),
    };
    let u = sample(&uspec, seed)?;
    let matrix = match (&h0.matrix, &u.matrix) {
        (Matrix::Real(h), Matrix::Real(g)) => Matrix::Real(h.combine(a, g, b)),
        (Matrix::Complex(h), Matrix::Complex(g)) => Matrix::Complex(h.combine(a, g, b)),
        _ => return invalid("symmetry of H0 and of the Gaussian component differ"),
    };
    Ok(MatrixSample {
        matrix,
        spec: h0.spec.clone(),
        seed_path: seed.clone(),
    })
}

/// Moments `E v^s`, `s = 1..4`, of `e^{-t/2} v + (1 - e^{-t})^{1/2} g` for a
/// standardized `v` and standard Gaussian `g`, with their drift from `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentDrift {
    pub t: f64,
    pub moments: [f64; 4],
    pub drift: [f64; 4],
}

pub fn moment_drift(dist0: &EntryDistribution, t: f64) -> MomentDrift {
    let m = dist0.moments();
    let e = (-t).exp();
    // odd Gaussian moments vanish and m1 = 0, so only even cross terms survive
    let m3 = e.powf(1.5) * m[2];
    let m4 = e * e * m[3] + 6.0 * e * (1.0 - e) + 3.0 * (1.0 - e) * (1.0 - e);
    let moments = [e.sqrt() * m[0], e * m[1] + (1.0 - e), m3, m4];
    let drift = std::array::from_fn(|s| (moments[s] - m[s]).abs());
    MomentDrift { t, moments, drift }
}

/// `-(β/4) λ_i + (β/2N) Σ_{j≠i} 1/(λ_i - λ_j)`.
pub fn dbm_drift(lambda: &[f64], beta: f64) -> Vec<f64> {
    let n = lambda.len();
    let c = beta / (2.0 * n as f64);
    let mut rep = vec![0.0; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let w = 1.0 / (lambda[i] - lambda[j]);
            rep[i] += w;
            rep[j] -= w;
        }
    }
    lambda
        .iter()
        .zip(&rep)
        .map(|(&l, &r)| -0.25 * beta * l + c * r)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeOptions {
    pub noise: bool,
    pub max_halvings: u32,
}

impl Default for SdeOptions {
    fn default() -> Self {
        Self {
            noise: true,
            max_halvings: 30,
        }
    }
}

/// Advances the eigenvalue SDE by `dt` with Euler–Maruyama. Each coordinate
/// gets Brownian increments of variance `h/N` per substep `h`; substeps halve
/// while the minimal gap is below `10 √(h/N)` or a step would reorder.
pub fn dbm_sde_step(
    state: &DbmState,
    dt: f64,
    opts: SdeOptions,
    rng: &mut Stream,
) -> Result<DbmState> {
    if !(dt > 0.0) {
        return invalid(format!("time step {dt} must be positive"));
    }
    let n = state.lambda.len();
    let nf = n as f64;
    let mut lambda = state.lambda.clone();
    let mut remaining = dt;
    let mut h = dt;
    let mut halvings = 0;
    while remaining > 0.0 {
        let step = h.min(remaining);
        let gap = lambda
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        let too_close = opts.noise && gap < 10.0 * (step / nf).sqrt();
        let mut candidate = None;
        if !too_close {
            let drift = dbm_drift(&lambda, state.beta);
            let sd = (step / nf).sqrt();
            let next: Vec<f64> = lambda
                .iter()
                .zip(&drift)
                .map(|(&l, &d)| {
                    let noise = if opts.noise {
                        let g: f64 = StandardNormal.sample(rng);
                        sd * g
                    } else {
                        0.0
                    };
                    l + d * step + noise
                })
                .collect();
            if is_strictly_increasing(&next) {
                candidate = Some(next);
            }
        }
        match candidate {
            Some(next) => {
                lambda = next;
                remaining -= step;
                halvings = 0;
                if step == h && h < dt {
                    h *= 2.0;
                }
            }
            None => {
                halvings += 1;
                if halvings > opts.max_halvings {
                    return Err(RmtError::Collision {
                        t: state.t + dt - remaining,
                        halvings,
                        state: lambda,
                    });
                }
                h *= 0.5;
            }
        }
    }
    Ok(DbmState {
        t: state.t + dt,
        lambda,
        beta: state.beta,
        origin: DbmOrigin::Sde,
    })
}

/// Runs the SDE to `t_end` with nominal step `dt`, recording every
/// `dump_every` steps when nonzero.
pub fn dbm_sde_run(
    state: &DbmState,
    t_end: f64,
    dt: f64,
    opts: SdeOptions,
    dump_every: usize,
    rng: &mut Stream,
) -> Result<(DbmState, Vec<DbmState>)> {
    let steps = ((t_end - state.t) / dt).ceil().max(0.0) as usize;
    let mut cur = state.clone();
    let mut dump = Vec::new();
    for k in 0..steps {
        let h = (t_end - cur.t).min(dt);
        if h <= 0.0 {
            break;
        }
        cur = dbm_sde_step(&cur, h, opts, rng)?;
        if dump_every > 0 && (k + 1) % dump_every == 0 {
            dump.push(cur.clone());
        }
    }
    Ok((cur, dump))
}

/// The SDE above runs on the clock `t_sde = 2 t / β` of the matrix flow.
pub fn sde_time_for_matrix_time(beta: f64, t: f64) -> f64 {
    2.0 * t / beta
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationRow {
    pub t: f64,
    pub ks_global: f64,
    pub ks_local: f64,
    pub stderr_global: f64,
    pub stderr_local: f64,
    pub gaps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationTable {
    pub n: usize,
    pub rows: Vec<RelaxationRow>,
}

impl RelaxationTable {
    /// Every local KS is at most the previous one plus `k` combined
    /// standard errors.
    pub fn local_non_increasing(&self, k: f64) -> bool {
        self.rows.windows(2).all(|w| {
            w[1].ks_local
                <= w[0].ks_local
                    + k * (w[0].stderr_local.powi(2) + w[1].stderr_local.powi(2)).sqrt()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationOptions {
    /// Entry variance of the seed relative to `1/N`; values other than 1
    /// shift the global law away from the semicircle.
    pub variance_factor: f64,
    /// Half-width of the bulk unfolding window centred at 0.
    pub window: f64,
}

impl Default for RelaxationOptions {
    fn default() -> Self {
        Self {
            variance_factor: 1.0,
            window: 1.0,
        }
    }
}

/// Scale of the semicircle at flow time `t` for a seed of entry variance `v/N`.
pub fn flow_scale(variance_factor: f64, t: f64) -> f64 {
    let e = (-t).exp();
    (e * variance_factor + 1.0 - e).sqrt()
}

/// Approximate standard deviation of a two-sample KS statistic under the null.
pub fn ks_stderr(n1: usize, n2: usize) -> f64 {
    0.26 * (1.0 / n1 as f64 + 1.0 / n2 as f64).sqrt()
}

pub fn relaxation_experiment(
    spec0: &EnsembleSpec,
    t_grid: &[f64],
    samples: usize,
    seed: &SeedPath,
    opts: RelaxationOptions,
) -> Result<RelaxationTable> {
    spec0.validate()?;
    if samples == 0 || t_grid.iter().any(|t| !(*t >= 0.0)) {
        return invalid("relaxation needs samples and nonnegative times");
    }
    let n = spec0.n;
    let gauss = match spec0.symmetry {
        Symmetry::RealSymmetric => EnsembleSpec::goe(n),
        Symmetry::ComplexHermitian => EnsembleSpec::gue(n),
    };
    let window = (0.0, opts.window);
    let reference: Vec<Result<Vec<f64>>> = par_map(samples, |k| {
        sample(&gauss, &seed.child("reference").with_index(k as u64))?.eigenvalues()
    });
    let reference: Vec<Vec<f64>> = reference.into_iter().collect::<Result<_>>()?;
    let ref_eigs: Vec<f64> = reference.iter().flatten().copied().collect();
    let mut ref_gaps = Vec::new();
    for e in &reference {
        ref_gaps.extend(unfold(e, &SemicircleLaw, window)?.gaps);
    }

    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let spectra: Vec<Result<Vec<f64>>> = par_map(samples, |k| {
            let sp = seed.child("seed").with_index(k as u64);
            let mut h0 = sample(spec0, &sp)?;
            if opts.variance_factor != 1.0 {
                h0.matrix = h0.matrix.scale(opts.variance_factor.sqrt());
            }
            let ht = ou_matrix_flow(
                &h0,
                t,
                spec0.symmetry,
                &seed.child("flow").with_index(k as u64),
            )?;
            ht.eigenvalues()
        });
        let spectra: Vec<Vec<f64>> = spectra.into_iter().collect::<Result<_>>()?;
        let law = AffineLaw {
            inner: SemicircleLaw,
            shift: 0.0,
            scale: flow_scale(opts.variance_factor, t),
        };
        let mut gaps = Vec::new();
        for e in &spectra {
            gaps.extend(unfold(e, &law, window)?.gaps);
        }
        let eigs: Vec<f64> = spectra.iter().flatten().copied().collect();
        rows.push(RelaxationRow {
            t,
            ks_global: ks_distance(&eigs, &ref_eigs)?,
            ks_local: ks_distance(&gaps, &ref_gaps)?,
            // eigenvalues of one matrix are strongly correlated; count matrices
            stderr_global: ks_stderr(samples, samples) / n as f64,
            stderr_local: ks_stderr(gaps.len(), ref_gaps.len()),
            gaps: gaps.len(),
        });
    }
    Ok(RelaxationTable { n, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_particle_drift() {
        let d = dbm_drift(&[-1.0, 1.0], 2.0);
        assert!((d[1] + 0.25).abs() < 1e-15 && (d[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn bernoulli_moment_drift() {
        let b = EntryDistribution::bernoulli();
        let m = moment_drift(&b, 0.01);
        assert!(m.drift[1] < 1e-15 && m.drift[2] == 0.0);
        let exact = 2.0 * (1.0 - (-0.02f64).exp());
        // 2(1 - e^{-2t}) <= 4t, and already exceeds 3t at t = 0.01
        assert!((m.drift[3] - exact).abs() < 1e-14 && m.drift[3] <= 0.04);
    }
}
