use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmtlab::linalg::{
    eigh, eigh_c, eigvalsh, eigvalsh_c, tridiagonal_eigen, tridiagonal_stieltjes, HermMatrix,
    SymMatrix,
};

/// Cyclic Jacobi on a dense copy; slow but independent of the Householder path.
fn jacobi_eigenvalues(n: usize, a: &[f64]) -> Vec<f64> {
    let mut m = a.to_vec();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j].powi(2))
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (m[k * n + p], m[k * n + q]);
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (m[p * n + k], m[q * n + k]);
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut d: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    d.sort_by(f64::total_cmp);
    d
}

fn random_sym(n: usize, seed: u64) -> SymMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SymMatrix::from_lower(n, |_, _| rng.random_range(-1.0..1.0))
}

fn random_herm(n: usize, seed: u64) -> HermMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    HermMatrix::from_lower(n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

#[test]
fn real_eigenvalues_match_jacobi() {
    for (n, seed) in [(1, 1), (2, 2), (3, 3), (7, 4), (33, 5), (64, 6)] {
        let a = random_sym(n, seed);
        let got = eigvalsh(&a).unwrap();
        let want = jacobi_eigenvalues(n, a.as_slice());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-11, "n={n}: {g} vs {w}");
        }
    }
}

#[test]
fn complex_eigenvalues_match_real_embedding() {
    // [[Re, -Im], [Im, Re]] has each eigenvalue of the Hermitian matrix twice
    for (n, seed) in [(1, 11), (2, 12), (5, 13), (30, 14)] {
        let a = random_herm(n, seed);
        let m = 2 * n;
        let mut big = vec![0.0; m * m];
        for i in 0..n {
            for j in 0..n {
                let z = a.get(i, j);
                big[i * m + j] = z.re;
                big[(i + n) * m + j + n] = z.re;
                big[i * m + j + n] = -z.im;
                big[(i + n) * m + j] = z.im;
            }
        }
        let want = jacobi_eigenvalues(m, &big);
        let got = eigvalsh_c(&a).unwrap();
        for (k, g) in got.iter().enumerate() {
            assert!((g - want[2 * k]).abs() < 1e-11 && (g - want[2 * k + 1]).abs() < 1e-11);
        }
    }
}

#[test]
fn real_eigenvectors_have_small_residual() {
    let n = 80;
    let a = random_sym(n, 21);
    let (vals, vecs) = eigh(&a).unwrap();
    for (l, v) in vals.iter().zip(&vecs) {
        let av = a.matvec(v);
        let res: f64 = av
            .iter()
            .zip(v)
            .map(|(x, y)| (x - l * y).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(res < 1e-12, "residual {res}");
    }
    for i in 0..n {
        for j in 0..=i {
            let ip: f64 = vecs[i].iter().zip(&vecs[j]).map(|(x, y)| x * y).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((ip - want).abs() < 1e-12);
        }
    }
}

#[test]
fn complex_eigenvectors_have_small_residual() {
    let n = 60;
    let a = random_herm(n, 22);
    let (vals, vecs) = eigh_c(&a).unwrap();
    for (l, v) in vals.iter().zip(&vecs) {
        let av = a.matvec(v);
        let res: f64 = av
            .iter()
            .zip(v)
            .map(|(x, y)| (x - y * l).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(res < 1e-12, "residual {res}");
        let nrm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert!((nrm - 1.0).abs() < 1e-12);
    }
}

#[test]
fn degenerate_and_diagonal_inputs() {
    let a = SymMatrix::from_diagonal(&[3.0, -1.0, 3.0, 0.0]);
    assert_eq!(eigvalsh(&a).unwrap(), vec![-1.0, 0.0, 3.0, 3.0]);
    let z = SymMatrix::zeros(5);
    assert!(eigvalsh(&z).unwrap().iter().all(|&x| x == 0.0));
}

#[test]
fn continuant_stieltjes_matches_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 300;
    let d: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let e: Vec<f64> = (1..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let (ev, _) = tridiagonal_eigen(&d, &e, false).unwrap();
    for z in [
        Complex64::new(0.1, 1e-3),
        Complex64::new(-0.4, 0.05),
        Complex64::new(3.0, 2.0),
    ] {
        let want: Complex64 = ev.iter().map(|&l| (l - z).inv()).sum::<Complex64>() / n as f64;
        let got = tridiagonal_stieltjes(&d, &e, z);
        assert!(
            (got - want).norm() < 1e-9 * (1.0 + want.norm()),
            "{got} vs {want}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trace_and_frobenius_are_preserved(n in 1usize..24, seed in any::<u64>()) {
        let a = random_sym(n, seed);
        let v = eigvalsh(&a).unwrap();
        let s: f64 = v.iter().sum();
        let s2: f64 = v.iter().map(|x| x * x).sum();
        prop_assert!((s - a.trace()).abs() < 1e-10);
        prop_assert!((s2 - a.frobenius_sq()).abs() < 1e-9);
        prop_assert!(v.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn hermitian_trace_is_preserved(n in 1usize..16, seed in any::<u64>()) {
        let a = random_herm(n, seed);
        let v = eigvalsh_c(&a).unwrap();
        prop_assert!((v.iter().sum::<f64>() - a.trace()).abs() < 1e-10);
        prop_assert!((v.iter().map(|x| x * x).sum::<f64>() - a.frobenius_sq()).abs() < 1e-9);
    }
}
