//! Implicit QL with Wilkinson-type shifts on a real symmetric tridiagonal.

use super::kernels;
use crate::error::{Result, RmtError};

const MAX_SWEEPS: usize = 60;

/// Eigen-decomposition of the symmetric tridiagonal matrix with diagonal `d`
/// and sub-diagonal `e` (`e.len() + 1 == d.len()`).
///
/// Eigenvalues come back ascending. When `want_vectors` is set, row `j` of
/// the returned list is the unit eigenvector of eigenvalue `j`.
pub fn tridiagonal_eigen(
    d: &[f64],
    e: &[f64],
    want_vectors: bool,
) -> Result<(Vec<f64>, Option<Vec<Vec<f64>>>)> {
    let n = d.len();
    if n == 0 {
        return Ok((Vec::new(), want_vectors.then(Vec::new)));
    }
    if e.len() + 1 != n {
        return Err(RmtError::InvalidParameter(format!(
            "tridiagonal: {} diagonal entries but {} off-diagonal",
            n,
            e.len()
        )));
    }
    if d.iter().chain(e).any(|x| !x.is_finite()) {
        return Err(RmtError::NonFinite("tridiagonal input".into()));
    }
    let mut d = d.to_vec();
    let mut e: Vec<f64> = e.iter().copied().chain(std::iter::once(0.0)).collect();
    // rows of Z^T, so each rotation touches two contiguous rows
    let mut z: Vec<Vec<f64>> = if want_vectors {
        (0..n)
            .map(|i| {
                let mut r = vec![0.0; n];
                r[i] = 1.0;
                r
            })
            .collect()
    } else {
        Vec::new()
    };

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_SWEEPS {
                return Err(RmtError::NoConvergence {
                    what: "tridiagonal QL",
                    iterations: MAX_SWEEPS,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if want_vectors {
                    let (lo, hi) = z.split_at_mut(i + 1);
                    kernels::rot(&mut lo[i], &mut hi[0], c, s);
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = want_vectors.then(|| {
        let mut slots: Vec<Option<Vec<f64>>> = z.into_iter().map(Some).collect();
        order
            .iter()
            .map(|&k| slots[k].take().unwrap_or_default())
            .collect()
    });
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let (v, z) = tridiagonal_eigen(&[1.0, 1.0], &[1.0], true).unwrap();
        assert!((v[0] - 0.0).abs() < 1e-14 && (v[1] - 2.0).abs() < 1e-14);
        let z = z.unwrap();
        assert!((z[1][0].abs() - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((z[1][0] - z[1][1]).abs() < 1e-14);
    }

    #[test]
    fn free_laplacian_spectrum() {
        // eigenvalues of tridiag(1, 0, 1) of size n are 2 cos(k pi / (n+1))
        let n = 40;
        let (v, _) = tridiagonal_eigen(&vec![0.0; n], &vec![1.0; n - 1], false).unwrap();
        for (j, x) in v.iter().enumerate() {
            let k = (n - j) as f64;
            let exact = 2.0 * (k * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((x - exact).abs() < 1e-12, "{x} vs {exact}");
        }
    }

    #[test]
    fn rejects_shape_mismatch() {
        assert!(tridiagonal_eigen(&[1.0, 2.0], &[], false).is_err());
    }
}
