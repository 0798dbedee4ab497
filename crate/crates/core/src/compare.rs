//! Green-function comparison: swapping matrix entries one pair at a time
//! between two entry laws while tracking `(1/N) Tr G(z)`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dbm::moment_drift;
use crate::ensembles::EntryDistribution;
use crate::error::{invalid, Result};
use crate::linalg::{eigh, eigvalsh, SymMatrix};
use crate::par_map;
use crate::rng::SeedPath;
use crate::stats::{mean, std_err};

const MATCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentGap {
    /// `|E v^s - E w^s|` for `s = 1..=4`.
    pub gaps: [f64; 4],
    /// Number of leading moments that agree, capped at 4.
    pub order: u32,
}

pub fn moment_gap(v: &EntryDistribution, w: &EntryDistribution) -> MomentGap {
    let (a, b) = (v.moments(), w.moments());
    let gaps = std::array::from_fn(|s| (a[s] - b[s]).abs());
    let order = gaps.iter().take_while(|g| **g <= MATCH_TOL).count() as u32;
    MomentGap { gaps, order }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuMatching {
    pub t: f64,
    pub gaps: [f64; 4],
    pub order: u32,
    /// At `t = 0` the laws coincide, so every moment matches.
    pub identical: bool,
    /// `|gap_s| <= N^{-δ-2+s/2}` for every `s`.
    pub within_bound: bool,
}

/// Moment gaps between `dist0` and its OU evolution at time `t`, checked
/// against `N^{-δ-2+s/2}`.
pub fn ou_matching_check(
    dist0: &EntryDistribution,
    t: f64,
    n: usize,
    delta: f64,
) -> Result<OuMatching> {
    if !(t >= 0.0) {
        return invalid(format!("time {t} must be nonnegative"));
    }
    let d = moment_drift(dist0, t);
    let nf = n as f64;
    let within_bound = d
        .drift
        .iter()
        .enumerate()
        .all(|(s, g)| *g <= nf.powf(-delta - 2.0 + (s + 1) as f64 / 2.0));
    let order = d.drift.iter().take_while(|g| **g <= MATCH_TOL).count() as u32;
    Ok(OuMatching {
        t,
        gaps: d.drift,
        order,
        identical: t == 0.0,
        within_bound,
    })
}

/// How the two laws' entries are drawn for one matrix position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    Independent,
    /// Both entries are quantile transforms of one Gaussian variate.
    Quantile,
}

/// Upper-triangle entries `(x_v, x_w)` of a coupled pair of real Wigner
/// matrices, scaled by `1/√N`, in row-major order.
fn coupled_entries(
    v: &EntryDistribution,
    w: &EntryDistribution,
    n: usize,
    coupling: Coupling,
    seed: &SeedPath,
) -> Vec<(f64, f64)> {
    let s = (n as f64).sqrt().recip();
    let normal = Normal::standard();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        let mut rng = seed.substream(i as u64);
        for _ in i..n {
            let (a, b) = match coupling {
                Coupling::Independent => (v.sample(&mut rng), w.sample(&mut rng)),
                Coupling::Quantile => {
                    let g: f64 = rng.sample(StandardNormal);
                    let u = normal.cdf(g).clamp(0.0, 1.0 - f64::EPSILON);
                    (v.quantile(u), w.quantile(u))
                }
            };
            out.push((a * s, b * s));
        }
    }
    out
}

fn build(n: usize, entries: &[(f64, f64)], pick_w: impl Fn(usize) -> bool) -> SymMatrix {
    let mut h = SymMatrix::zeros(n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            let (a, b) = entries[k];
            h.set_sym(i, j, if pick_w(k) { b } else { a });
            k += 1;
        }
    }
    h
}

fn trace_avg(h: &SymMatrix, z: Complex64) -> Result<Complex64> {
    let e = eigvalsh(h)?;
    Ok(e.iter().map(|&l| (l - z).inv()).sum::<Complex64>() / h.n() as f64)
}

/// Dense complex-symmetric resolvent `(H - z)^{-1}`, maintained under
/// symmetric updates of one entry pair.
#[derive(Debug, Clone)]
pub struct Resolvent {
    n: usize,
    z: Complex64,
    g: Vec<Complex64>,
    pub recomputes: usize,
}

impl Resolvent {
    pub fn new(h: &SymMatrix, z: Complex64) -> Result<Self> {
        let mut r = Self {
            n: h.n(),
            z,
            g: Vec::new(),
            recomputes: 0,
        };
        r.recompute(h)?;
        r.recomputes = 0;
        Ok(r)
    }

    fn recompute(&mut self, h: &SymMatrix) -> Result<()> {
        let n = self.n;
        let (vals, vecs) = eigh(h)?;
        let w: Vec<Complex64> = vals.iter().map(|&l| (l - self.z).inv()).collect();
        let mut g = vec![Complex64::new(0.0, 0.0); n * n];
        for (a, u) in vecs.iter().enumerate() {
            for i in 0..n {
                let c = w[a] * u[i];
                for j in 0..n {
                    g[i * n + j] += c * u[j];
                }
            }
        }
        self.g = g;
        self.recomputes += 1;
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.g[i * self.n + j]
    }

    pub fn trace_avg(&self) -> Complex64 {
        (0..self.n)
            .map(|i| self.g[i * self.n + i])
            .sum::<Complex64>()
            / self.n as f64
    }

    /// Applies `H_ij = H_ji += d`; `h` must already hold the new matrix, for
    /// the fallback when the update is degenerate.
    pub fn update(&mut self, i: usize, j: usize, d: f64, h: &SymMatrix) -> Result<()> {
        let n = self.n;
        if d == 0.0 {
            return Ok(());
        }
        let gi: Vec<Complex64> = (0..n).map(|k| self.g[k * n + i]).collect();
        if i == j {
            let den = 1.0 + d * gi[i];
            if den.norm() < 1e-12 {
                return self.recompute(h);
            }
            let c = d / den;
            for r in 0..n {
                let f = c * gi[r];
                for (s, gs) in gi.iter().enumerate() {
                    self.g[r * n + s] -= f * gs;
                }
            }
            return Ok(());
        }
        let gj: Vec<Complex64> = (0..n).map(|k| self.g[k * n + j]).collect();
        // G' = G - d [g_i g_j] A^{-1} [g_j; g_i]^T with A = I + d [[G_ji, G_jj], [G_ii, G_ij]]
        let a = [[1.0 + d * gj[i], d * gj[j]], [d * gi[i], 1.0 + d * gi[j]]];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det.norm() < 1e-12 {
            return self.recompute(h);
        }
        let inv = [
            [a[1][1] / det, -a[0][1] / det],
            [-a[1][0] / det, a[0][0] / det],
        ];
        for r in 0..n {
            let p = d * gi[r];
            let q = d * gj[r];
            let c0 = p * inv[0][0] + q * inv[1][0];
            let c1 = p * inv[0][1] + q * inv[1][1];
            let row = &mut self.g[r * n..(r + 1) * n];
            for s in 0..n {
                row[s] -= c0 * gj[s] + c1 * gi[s];
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapTrace {
    pub n: usize,
    pub z: Complex64,
    /// Pairs `(i, j)`, `i <= j`, in swap order.
    pub schedule_len: usize,
    /// Mean cumulative change of `(1/N) Tr G` at every `N`-th swap, with
    /// standard errors.
    pub checkpoints: Vec<(usize, Complex64, f64)>,
    pub endpoint_v: (Complex64, f64),
    pub endpoint_w: (Complex64, f64),
    /// `|E m^(v) - E m^(w)|` and its standard error.
    pub difference: (f64, f64),
    /// Largest per-sample gap between the summed increments and the
    /// independently computed endpoint difference.
    pub telescoping_error: f64,
    pub recomputes: usize,
}

struct SampleTrace {
    mv: Complex64,
    mw: Complex64,
    cumulative: Vec<Complex64>,
    tele: f64,
    recomputes: usize,
}

fn swap_one(
    v: &EntryDistribution,
    w: &EntryDistribution,
    n: usize,
    z: Complex64,
    coupling: Coupling,
    seed: &SeedPath,
) -> Result<SampleTrace> {
    let entries = coupled_entries(v, w, n, coupling, seed);
    let mut h = build(n, &entries, |_| false);
    let mv = trace_avg(&h, z)?;
    let mw = trace_avg(&build(n, &entries, |_| true), z)?;
    let mut res = Resolvent::new(&h, z)?;
    let start = res.trace_avg();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut prev = start;
    let mut cumulative = Vec::with_capacity(entries.len() / n + 1);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            let (a, b) = entries[k];
            h.set_sym(i, j, b);
            res.update(i, j, b - a, &h)?;
            let cur = res.trace_avg();
            sum += cur - prev;
            prev = cur;
            k += 1;
            if k % n == 0 {
                cumulative.push(sum);
            }
        }
    }
    // start is the updated resolvent's own value; compare with fresh endpoints
    let tele = ((start - mv).norm()).max((sum - (mw - mv)).norm());
    Ok(SampleTrace {
        mv,
        mw,
        cumulative,
        tele,
        recomputes: res.recomputes,
    })
}

/// Swaps the entries of a `v`-Wigner matrix to `w` pair by pair in
/// row-major order of the upper triangle, updating the resolvent by exact
/// rank-two corrections.
pub fn swap_experiment(
    v: &EntryDistribution,
    w: &EntryDistribution,
    n: usize,
    z: Complex64,
    samples: usize,
    coupling: Coupling,
    seed: &SeedPath,
) -> Result<SwapTrace> {
    let nf = n as f64;
    if !(2..=400).contains(&n) {
        return invalid(format!("swap experiment needs 2 <= N <= 400, got {n}"));
    }
    if z.im < nf.powf(-1.2) {
        return invalid(format!("Im z = {} below N^(-1.2)", z.im));
    }
    if samples < 2 {
        return invalid("swap experiment needs at least two samples");
    }
    let traces: Vec<Result<SampleTrace>> = par_map(samples, |s| {
        swap_one(v, w, n, z, coupling, &seed.with_index(s as u64))
    });
    let traces: Vec<SampleTrace> = traces.into_iter().collect::<Result<_>>()?;
    let summary = |f: &dyn Fn(&SampleTrace) -> Complex64| {
        let re: Vec<f64> = traces.iter().map(|t| f(t).re).collect();
        let im: Vec<f64> = traces.iter().map(|t| f(t).im).collect();
        (
            Complex64::new(mean(&re), mean(&im)),
            std_err(&re).hypot(std_err(&im)),
        )
    };
    let checkpoints = (0..traces[0].cumulative.len())
        .map(|c| {
            let (m, se) = summary(&|t| t.cumulative[c]);
            ((c + 1) * n, m, se)
        })
        .collect();
    let endpoint_v = summary(&|t| t.mv);
    let endpoint_w = summary(&|t| t.mw);
    let (d, d_se) = summary(&|t| t.mw - t.mv);
    Ok(SwapTrace {
        n,
        z,
        schedule_len: n * (n + 1) / 2,
        checkpoints,
        endpoint_v,
        endpoint_w,
        difference: (d.norm(), d_se),
        telescoping_error: traces.iter().map(|t| t.tele).fold(0.0, f64::max),
        recomputes: traces.iter().map(|t| t.recomputes).sum(),
    })
}

/// `E m^(w) - E m^(v)` from the endpoints alone, with the standard error of
/// the per-sample difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndpointDifference {
    pub n: usize,
    pub diff: Complex64,
    pub stderr: f64,
}

pub fn endpoint_difference(
    v: &EntryDistribution,
    w: &EntryDistribution,
    n: usize,
    z: Complex64,
    samples: usize,
    coupling: Coupling,
    seed: &SeedPath,
) -> Result<EndpointDifference> {
    if samples < 2 {
        return invalid("need at least two samples");
    }
    let d: Vec<Result<Complex64>> = par_map(samples, |s| {
        let entries = coupled_entries(v, w, n, coupling, &seed.with_index(s as u64));
        Ok(trace_avg(&build(n, &entries, |_| true), z)?
            - trace_avg(&build(n, &entries, |_| false), z)?)
    });
    let d: Vec<Complex64> = d.into_iter().collect::<Result<_>>()?;
    let re: Vec<f64> = d.iter().map(|x| x.re).collect();
    let im: Vec<f64> = d.iter().map(|x| x.im).collect();
    Ok(EndpointDifference {
        n,
        diff: Complex64::new(mean(&re), mean(&im)),
        stderr: std_err(&re).hypot(std_err(&im)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moment_gap_orders() {
        let g = EntryDistribution::gaussian();
        let t = moment_gap(&g, &EntryDistribution::three_point_matched());
        assert_eq!((t.order, t.gaps), (4, [0.0; 4]));
        let b = moment_gap(&g, &EntryDistribution::bernoulli());
        assert_eq!(b.order, 3);
        assert!((b.gaps[3] - 2.0).abs() < 1e-15);
        assert_eq!(moment_gap(&b_self(), &b_self()).order, 4);
    }

    fn b_self() -> EntryDistribution {
        EntryDistribution::uniform()
    }
}
