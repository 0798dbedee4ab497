//! Householder reduction of self-adjoint matrices to real tridiagonal form.
//!
//! The trailing rank-2 update of step `k` is deferred and fused with the
//! symmetric matrix-vector product of step `k+1`, so each step makes one pass
//! over the remaining lower triangle.

use num_complex::Complex64;

use super::kernels;
use super::{HermMatrix, SymMatrix};

/// Elementary reflector `I - tau v v^H` acting on indices `start..n`.
#[derive(Debug, Clone)]
struct Reflector<T> {
    start: usize,
    v: Vec<T>,
    tau: f64,
}

/// `A = Q T Q^T` with `T` given by `diag` and `off` (sub-diagonal).
#[derive(Debug, Clone)]
pub struct SymmetricReduction {
    diag: Vec<f64>,
    off: Vec<f64>,
    reflectors: Vec<Reflector<f64>>,
}

impl SymmetricReduction {
    pub fn new(a: &SymMatrix) -> Self {
        let n = a.n();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        let mut reflectors = Vec::with_capacity(n.saturating_sub(1));
        if n == 0 {
            return Self {
                diag,
                off,
                reflectors,
            };
        }
        let mut w = a.as_slice().to_vec();
        let mut pv = vec![0.0; n];
        let mut pw = vec![0.0; n];
        let mut h = vec![0.0; n];
        let mut p = vec![0.0; n];

        for k in 0..n - 1 {
            for i in k..n {
                w[i * n + k] -= pv[i] * pw[k] + pw[i] * pv[k];
            }
            diag[k] = w[k * n + k];

            let x0 = w[(k + 1) * n + k];
            let tail: f64 = (k + 2..n).map(|i| w[i * n + k].powi(2)).sum();
            h[..=k].iter_mut().for_each(|x| *x = 0.0);
            let tau = if tail == 0.0 {
                off[k] = x0;
                h[k + 1..].iter_mut().for_each(|x| *x = 0.0);
                0.0
            } else {
                let norm = (x0 * x0 + tail).sqrt();
                let alpha = if x0 >= 0.0 { -norm } else { norm };
                h[k + 1] = x0 - alpha;
                for i in k + 2..n {
                    h[i] = w[i * n + k];
                }
                off[k] = alpha;
                1.0 / (norm * (norm + x0.abs()))
            };

            p[k + 1..].iter_mut().for_each(|x| *x = 0.0);
            for i in k + 1..n {
                let (row, _) = w[i * n + k + 1..].split_at_mut(i - k);
                let (strict, dg) = row.split_at_mut(i - k - 1);
                let (pl, pr) = p.split_at_mut(i);
                let acc = kernels::fused_row(
                    strict,
                    &pv[k + 1..i],
                    &pw[k + 1..i],
                    &h[k + 1..i],
                    &mut pl[k + 1..],
                    pv[i],
                    pw[i],
                    h[i],
                );
                dg[0] -= 2.0 * pv[i] * pw[i];
                pr[0] += acc + dg[0] * h[i];
            }

            pv[..=k].iter_mut().for_each(|x| *x = 0.0);
            pw[..=k].iter_mut().for_each(|x| *x = 0.0);
            if tau == 0.0 {
                pv[k + 1..].iter_mut().for_each(|x| *x = 0.0);
                pw[k + 1..].iter_mut().for_each(|x| *x = 0.0);
            } else {
                p[k + 1..].iter_mut().for_each(|x| *x *= tau);
                let kk = 0.5 * tau * kernels::dot(&p[k + 1..], &h[k + 1..]);
                for i in k + 1..n {
                    pv[i] = h[i];
                    pw[i] = p[i] - kk * h[i];
                }
                reflectors.push(Reflector {
                    start: k + 1,
                    v: h[k + 1..].to_vec(),
                    tau,
                });
            }
        }
        diag[n - 1] = w[n * n - 1] - 2.0 * pv[n - 1] * pw[n - 1];
        Self {
            diag,
            off,
            reflectors,
        }
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    /// `x <- Q x`.
    pub fn apply_q(&self, x: &mut [f64]) {
        for r in self.reflectors.iter().rev() {
            let seg = &mut x[r.start..];
            let s = r.tau * kernels::dot(&r.v, seg);
            kernels::axpy(seg, -s, &r.v);
        }
    }

    /// `x <- Q^T x`.
    pub fn apply_qt(&self, x: &mut [f64]) {
        for r in &self.reflectors {
            let seg = &mut x[r.start..];
            let s = r.tau * kernels::dot(&r.v, seg);
            kernels::axpy(seg, -s, &r.v);
        }
    }
}

/// `A = Q D T D^H Q^H` with `T` real symmetric tridiagonal and `D` a unitary
/// diagonal phase matrix.
#[derive(Debug, Clone)]
pub struct HermitianReduction {
    diag: Vec<f64>,
    off: Vec<f64>,
    phases: Vec<Complex64>,
    reflectors: Vec<Reflector<Complex64>>,
}

impl HermitianReduction {
    pub fn new(a: &HermMatrix) -> Self {
        let n = a.n();
        let mut diag = vec![0.0; n];
        let mut off_c = vec![Complex64::new(0.0, 0.0); n.saturating_sub(1)];
        let mut reflectors = Vec::with_capacity(n.saturating_sub(1));
        if n == 0 {
            return Self {
                diag,
                off: Vec::new(),
                phases: Vec::new(),
                reflectors,
            };
        }
        let mut wr: Vec<f64> = a.as_slice().iter().map(|z| z.re).collect();
        let mut wi: Vec<f64> = a.as_slice().iter().map(|z| z.im).collect();
        let z0 = || vec![0.0; n];
        let (mut pvr, mut pvi, mut pwr, mut pwi) = (z0(), z0(), z0(), z0());
        let (mut hr, mut hi, mut pr, mut pi) = (z0(), z0(), z0(), z0());

        for k in 0..n - 1 {
            for i in k..n {
                // v_i conj(w_k) + w_i conj(v_k)
                let re = pvr[i] * pwr[k] + pvi[i] * pwi[k] + pwr[i] * pvr[k] + pwi[i] * pvi[k];
                let im = pvi[i] * pwr[k] - pvr[i] * pwi[k] + pwi[i] * pvr[k] - pwr[i] * pvi[k];
                wr[i * n + k] -= re;
                wi[i * n + k] -= im;
            }
            diag[k] = wr[k * n + k];

            let x0 = Complex64::new(wr[(k + 1) * n + k], wi[(k + 1) * n + k]);
            let tail: f64 = (k + 2..n)
                .map(|i| wr[i * n + k].powi(2) + wi[i * n + k].powi(2))
                .sum();
            for v in [&mut hr, &mut hi] {
                v[..=k].iter_mut().for_each(|x| *x = 0.0);
            }
            let tau = if tail == 0.0 {
                off_c[k] = x0;
                for v in [&mut hr, &mut hi] {
                    v[k + 1..].iter_mut().for_each(|x| *x = 0.0);
                }
                0.0
            } else {
                let ax0 = x0.norm();
                let norm = (ax0 * ax0 + tail).sqrt();
                let phase = if ax0 == 0.0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    x0 / ax0
                };
                let alpha = -phase * norm;
                let h0 = x0 - alpha;
                hr[k + 1] = h0.re;
                hi[k + 1] = h0.im;
                for i in k + 2..n {
                    hr[i] = wr[i * n + k];
                    hi[i] = wi[i * n + k];
                }
                off_c[k] = alpha;
                1.0 / (norm * (norm + ax0))
            };

            pr[k + 1..].iter_mut().for_each(|x| *x = 0.0);
            pi[k + 1..].iter_mut().for_each(|x| *x = 0.0);
            for i in k + 1..n {
                let lo = i * n + k + 1;
                let len = i - k - 1;
                let (rrow, ddr) = wr[lo..lo + len + 1].split_at_mut(len);
                let (irow, ddi) = wi[lo..lo + len + 1].split_at_mut(len);
                let (prl, prr) = pr.split_at_mut(i);
                let (pil, pir) = pi.split_at_mut(i);
                let (ar, ai) = kernels::fused_row_c(
                    rrow,
                    irow,
                    (&pvr[k + 1..i], &pvi[k + 1..i]),
                    (&pwr[k + 1..i], &pwi[k + 1..i]),
                    (&hr[k + 1..i], &hi[k + 1..i]),
                    (&mut prl[k + 1..], &mut pil[k + 1..]),
                    (pvr[i], pvi[i]),
                    (pwr[i], pwi[i]),
                    (hr[i], hi[i]),
                );
                ddr[0] -= 2.0 * (pvr[i] * pwr[i] + pvi[i] * pwi[i]);
                ddi[0] = 0.0;
                prr[0] += ar + ddr[0] * hr[i];
                pir[0] += ai + ddr[0] * hi[i];
            }

            for v in [&mut pvr, &mut pvi, &mut pwr, &mut pwi] {
                v[..=k].iter_mut().for_each(|x| *x = 0.0);
            }
            if tau == 0.0 {
                for v in [&mut pvr, &mut pvi, &mut pwr, &mut pwi] {
                    v[k + 1..].iter_mut().for_each(|x| *x = 0.0);
                }
            } else {
                pr[k + 1..].iter_mut().for_each(|x| *x *= tau);
                pi[k + 1..].iter_mut().for_each(|x| *x *= tau);
                // h^H p is real for Hermitian B
                let hp = kernels::dot(&hr[k + 1..], &pr[k + 1..])
                    + kernels::dot(&hi[k + 1..], &pi[k + 1..]);
                let kk = 0.5 * tau * hp;
                for i in k + 1..n {
                    pvr[i] = hr[i];
                    pvi[i] = hi[i];
                    pwr[i] = pr[i] - kk * hr[i];
                    pwi[i] = pi[i] - kk * hi[i];
                }
                let v = (k + 1..n).map(|i| Complex64::new(hr[i], hi[i])).collect();
                reflectors.push(Reflector {
                    start: k + 1,
                    v,
                    tau,
                });
            }
        }
        diag[n - 1] = wr[n * n - 1] - 2.0 * (pvr[n - 1] * pwr[n - 1] + pvi[n - 1] * pwi[n - 1]);

        let mut phases = Vec::with_capacity(n);
        phases.push(Complex64::new(1.0, 0.0));
        let mut off = Vec::with_capacity(n - 1);
        for (k, e) in off_c.iter().enumerate() {
            let r = e.norm();
            let next = if r == 0.0 {
                phases[k]
            } else {
                phases[k] * (e / r)
            };
            phases.push(next);
            off.push(r);
        }
        Self {
            diag,
            off,
            phases,
            reflectors,
        }
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    /// Maps an eigenvector of the real tridiagonal form back to the
    /// original basis: `Q D z`.
    pub fn back_transform(&self, z: &[f64]) -> Vec<Complex64> {
        let mut x: Vec<Complex64> = z.iter().zip(&self.phases).map(|(a, ph)| ph * *a).collect();
        self.apply_q(&mut x);
        x
    }

    /// `x <- Q x`.
    pub fn apply_q(&self, x: &mut [Complex64]) {
        for r in self.reflectors.iter().rev() {
            let seg = &mut x[r.start..];
            let s: Complex64 =
                r.v.iter()
                    .zip(seg.iter())
                    .map(|(v, y)| v.conj() * y)
                    .sum::<Complex64>()
                    * r.tau;
            for (y, v) in seg.iter_mut().zip(&r.v) {
                *y -= v * s;
            }
        }
    }

    /// `x <- D^H Q^H x`, the map into the basis of the real tridiagonal form.
    pub fn to_tridiagonal_basis(&self, x: &mut [Complex64]) {
        for r in &self.reflectors {
            let seg = &mut x[r.start..];
            let s: Complex64 =
                r.v.iter()
                    .zip(seg.iter())
                    .map(|(v, y)| v.conj() * y)
                    .sum::<Complex64>()
                    * r.tau;
            for (y, v) in seg.iter_mut().zip(&r.v) {
                *y -= v * s;
            }
        }
        for (y, ph) in x.iter_mut().zip(&self.phases) {
            *y *= ph.conj();
        }
    }
}
