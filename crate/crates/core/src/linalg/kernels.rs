//! Inner loops of the dense reductions.
//!
//! Every kernel has a portable body and an AVX2+FMA body selected at runtime.
//! Reductions keep eight independent accumulators so the compiler can map
//! them onto vector lanes without reassociating floating point sums. The
//! lane layout is fixed, so results do not depend on how many threads run.

use std::sync::atomic::{AtomicU8, Ordering};

const LANES: usize = 8;

static FMA_STATE: AtomicU8 = AtomicU8::new(0);

#[inline]
fn has_fma() -> bool {
    match FMA_STATE.load(Ordering::Relaxed) {
        1 => false,
        2 => true,
        _ => {
            #[cfg(target_arch = "x86_64")]
            let detected =
                std::is_x86_feature_detected!("avx2") && std::is_x86_feature_detected!("fma");
            #[cfg(not(target_arch = "x86_64"))]
            let detected = false;
            FMA_STATE.store(if detected { 2 } else { 1 }, Ordering::Relaxed);
            detected
        }
    }
}

macro_rules! madd {
    (fma, $a:expr, $b:expr, $c:expr) => {
        f64::mul_add($a, $b, $c)
    };
    (plain, $a:expr, $b:expr, $c:expr) => {
        $a * $b + $c
    };
}

macro_rules! kernel_bodies {
    ($mode:ident, $modname:ident) => {
        mod $modname {
            use super::LANES;

            #[inline(always)]
            pub fn dot(a: &[f64], b: &[f64]) -> f64 {
                let n = a.len().min(b.len());
                let (a, b) = (&a[..n], &b[..n]);
                let mut acc = [0.0f64; LANES];
                let mut ca = a.chunks_exact(LANES);
                let mut cb = b.chunks_exact(LANES);
                for (x, y) in (&mut ca).zip(&mut cb) {
                    for l in 0..LANES {
                        acc[l] = madd!($mode, x[l], y[l], acc[l]);
                    }
                }
                let mut tail = 0.0;
                for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
                    tail = madd!($mode, *x, *y, tail);
                }
                fold(acc) + tail
            }

            #[inline(always)]
            pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
                for (yi, xi) in y.iter_mut().zip(x) {
                    *yi = madd!($mode, alpha, *xi, *yi);
                }
            }

            /// `r -= a*x + b*y`
            #[inline(always)]
            pub fn rank2(r: &mut [f64], a: f64, x: &[f64], b: f64, y: &[f64]) {
                let n = r.len();
                let (x, y) = (&x[..n], &y[..n]);
                for j in 0..n {
                    r[j] = madd!($mode, -a, x[j], madd!($mode, -b, y[j], r[j]));
                }
            }

            /// Applies the pending rank-2 update `r -= vi*w + wi*v` to one
            /// row of the strict lower triangle, then accumulates that row's
            /// contribution to the symmetric product with `h`.
            #[inline(always)]
            pub fn fused_row(
                r: &mut [f64],
                pv: &[f64],
                pw: &[f64],
                h: &[f64],
                p: &mut [f64],
                pvi: f64,
                pwi: f64,
                hi: f64,
            ) -> f64 {
                let n = r.len();
                let (pv, pw, h, p) = (&pv[..n], &pw[..n], &h[..n], &mut p[..n]);
                let mut acc = [0.0f64; LANES];
                let full = n - n % LANES;
                let mut j = 0;
                while j < full {
                    for l in 0..LANES {
                        let t = madd!(
                            $mode,
                            -pvi,
                            pw[j + l],
                            madd!($mode, -pwi, pv[j + l], r[j + l])
                        );
                        r[j + l] = t;
                        acc[l] = madd!($mode, t, h[j + l], acc[l]);
                        p[j + l] = madd!($mode, t, hi, p[j + l]);
                    }
                    j += LANES;
                }
                let mut tail = 0.0;
                while j < n {
                    let t = madd!($mode, -pvi, pw[j], madd!($mode, -pwi, pv[j], r[j]));
                    r[j] = t;
                    tail = madd!($mode, t, h[j], tail);
                    p[j] = madd!($mode, t, hi, p[j]);
                    j += 1;
                }
                fold(acc) + tail
            }

            /// Complex (planar) variant of [`fused_row`] for Hermitian input.
            /// Update: `r -= v_i conj(w) + w_i conj(v)`; then
            /// `acc += r h` and `p += conj(r) h_i`.
            #[inline(always)]
            #[allow(clippy::too_many_arguments)]
            pub fn fused_row_c(
                rr: &mut [f64],
                ri: &mut [f64],
                pv: (&[f64], &[f64]),
                pw: (&[f64], &[f64]),
                h: (&[f64], &[f64]),
                p: (&mut [f64], &mut [f64]),
                pvi: (f64, f64),
                pwi: (f64, f64),
                hi: (f64, f64),
            ) -> (f64, f64) {
                let n = rr.len();
                let ri = &mut ri[..n];
                let (pvr, pvm) = (&pv.0[..n], &pv.1[..n]);
                let (pwr, pwm) = (&pw.0[..n], &pw.1[..n]);
                let (hr, hm) = (&h.0[..n], &h.1[..n]);
                let (pr, pm) = (&mut p.0[..n], &mut p.1[..n]);
                let mut acc_r = [0.0f64; LANES];
                let mut acc_i = [0.0f64; LANES];
                let mut j = 0;
                let full = n - n % LANES;
                macro_rules! step {
                    ($j:expr, $ar:expr, $ai:expr) => {{
                        // v_i conj(w_j) = (a+ib)(c-id) = (ac+bd) + i(bc-ad)
                        let re = madd!($mode, pvi.0, pwr[$j], pvi.1 * pwm[$j]);
                        let re = madd!($mode, pwi.0, pvr[$j], madd!($mode, pwi.1, pvm[$j], re));
                        let im = madd!($mode, pvi.1, pwr[$j], -pvi.0 * pwm[$j]);
                        let im = madd!($mode, pwi.1, pvr[$j], madd!($mode, -pwi.0, pvm[$j], im));
                        let tr = rr[$j] - re;
                        let ti = ri[$j] - im;
                        rr[$j] = tr;
                        ri[$j] = ti;
                        // acc += t * h_j
                        $ar = madd!($mode, tr, hr[$j], madd!($mode, -ti, hm[$j], $ar));
                        $ai = madd!($mode, tr, hm[$j], madd!($mode, ti, hr[$j], $ai));
                        // p_j += conj(t) * h_i
                        pr[$j] = madd!($mode, tr, hi.0, madd!($mode, ti, hi.1, pr[$j]));
                        pm[$j] = madd!($mode, tr, hi.1, madd!($mode, -ti, hi.0, pm[$j]));
                    }};
                }
                while j < full {
                    for l in 0..LANES {
                        step!(j + l, acc_r[l], acc_i[l]);
                    }
                    j += LANES;
                }
                let (mut tr, mut ti) = (0.0, 0.0);
                while j < n {
                    step!(j, tr, ti);
                    j += 1;
                }
                (fold(acc_r) + tr, fold(acc_i) + ti)
            }

            /// Plane rotation of two rows: `(x, y) <- (c x - s y, s x + c y)`.
            #[inline(always)]
            pub fn rot(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
                let n = x.len().min(y.len());
                let (x, y) = (&mut x[..n], &mut y[..n]);
                for j in 0..n {
                    let a = x[j];
                    let b = y[j];
                    x[j] = madd!($mode, c, a, -s * b);
                    y[j] = madd!($mode, s, a, c * b);
                }
            }

            #[inline(always)]
            fn fold(acc: [f64; LANES]) -> f64 {
                ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]))
            }
        }
    };
}

kernel_bodies!(fma, fma_impl);
kernel_bodies!(plain, plain_impl);

#[cfg(target_arch = "x86_64")]
mod fast {
    use super::fma_impl;

    #[target_feature(enable = "avx2,fma")]
    pub unsafe fn dot(a: &[f64], b: &[f64]) -> f64 {
        fma_impl::dot(a, b)
    }
    #[target_feature(enable = "avx2,fma")]
    pub unsafe fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
        fma_impl::axpy(y, alpha, x)
    }
    #[target_feature(enable = "avx2,fma")]
    pub unsafe fn rank2(r: &mut [f64], a: f64, x: &[f64], b: f64, y: &[f64]) {
        fma_impl::rank2(r, a, x, b, y)
    }
    #[target_feature(enable = "avx2,fma")]
    #[allow(clippy::too_many_arguments)]
    pub unsafe fn fused_row(
        r: &mut [f64],
        pv: &[f64],
        pw: &[f64],
        h: &[f64],
        p: &mut [f64],
        pvi: f64,
        pwi: f64,
        hi: f64,
    ) -> f64 {
        fma_impl::fused_row(r, pv, pw, h, p, pvi, pwi, hi)
    }
    #[target_feature(enable = "avx2,fma")]
    #[allow(clippy::too_many_arguments)]
    pub unsafe fn fused_row_c(
        rr: &mut [f64],
        ri: &mut [f64],
        pv: (&[f64], &[f64]),
        pw: (&[f64], &[f64]),
        h: (&[f64], &[f64]),
        p: (&mut [f64], &mut [f64]),
        pvi: (f64, f64),
        pwi: (f64, f64),
        hi: (f64, f64),
    ) -> (f64, f64) {
        fma_impl::fused_row_c(rr, ri, pv, pw, h, p, pvi, pwi, hi)
    }
    #[target_feature(enable = "avx2,fma")]
    pub unsafe fn rot(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
        fma_impl::rot(x, y, c, s)
    }
}

macro_rules! dispatch {
    ($name:ident ( $($arg:ident : $ty:ty),* ) $(-> $ret:ty)?) => {
        #[inline]
        #[allow(clippy::too_many_arguments)]
        pub fn $name($($arg: $ty),*) $(-> $ret)? {
            #[cfg(target_arch = "x86_64")]
            if has_fma() {
                // SAFETY: guarded by runtime feature detection.
                return unsafe { fast::$name($($arg),*) };
            }
            plain_impl::$name($($arg),*)
        }
    };
}

dispatch!(dot(a: &[f64], b: &[f64]) -> f64);
dispatch!(axpy(y: &mut [f64], alpha: f64, x: &[f64]));
dispatch!(rank2(r: &mut [f64], a: f64, x: &[f64], b: f64, y: &[f64]));
dispatch!(fused_row(
    r: &mut [f64],
    pv: &[f64],
    pw: &[f64],
    h: &[f64],
    p: &mut [f64],
    pvi: f64,
    pwi: f64,
    hi: f64
) -> f64);
dispatch!(fused_row_c(
    rr: &mut [f64],
    ri: &mut [f64],
    pv: (&[f64], &[f64]),
    pw: (&[f64], &[f64]),
    h: (&[f64], &[f64]),
    p: (&mut [f64], &mut [f64]),
    pvi: (f64, f64),
    pwi: (f64, f64),
    hi: (f64, f64)
) -> (f64, f64));
dispatch!(rot(x: &mut [f64], y: &mut [f64], c: f64, s: f64));
