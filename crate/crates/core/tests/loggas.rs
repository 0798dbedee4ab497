use num_complex::Complex64;
use proptest::prelude::*;
use rmtlab::loggas::*;
use rmtlab::rng::SeedPath;
use rmtlab::spectral::{cdf_sc, classical_locations, m_sc, rho_sc, SemicircleLaw, SpectralLaw};
use rmtlab::stats::{ks_distance, ks_one_sample, mean, std_err, unfold};
use statrs::distribution::{ContinuousCDF, Normal};

fn quad(beta: f64, n: usize) -> LogGasSpec {
    LogGasSpec::new(beta, Potential::Quadratic, n).unwrap()
}

#[test]
fn two_particle_energy() {
    let h = hamiltonian(&quad(2.0, 2), &[-1.0, 1.0]);
    assert!((h - (0.5 - 0.5 * 2f64.ln())).abs() < 1e-15);
    assert!((h - 0.15343).abs() < 1e-5);
    assert_eq!(hamiltonian(&quad(2.0, 2), &[1.0, -1.0]), h);
    assert_eq!(log_target(&quad(2.0, 2), &[1.0, -1.0]), f64::NEG_INFINITY);
}

#[test]
fn metropolis_rule_satisfies_detailed_balance() {
    use rand::Rng;
    let spec = LogGasSpec::new(1.5, Potential::Quartic { c: 0.1 }, 6).unwrap();
    let mut rng = SeedPath::new(1, 0, "db").rng();
    let mut worst: f64 = 0.0;
    for _ in 0..100_000 {
        let mut x: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
        x.sort_by(f64::total_cmp);
        let mut y = x.clone();
        let i = rng.random_range(0..6);
        y[i] += rng.random_range(-0.3..0.3);
        let (lx, ly) = (log_target(&spec, &x), log_target(&spec, &y));
        if !ly.is_finite() {
            continue;
        }
        let fwd = metropolis_log_acceptance(ly - lx);
        let back = metropolis_log_acceptance(lx - ly);
        worst = worst.max(((fwd - back) - (ly - lx)).abs());
    }
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn quadratic_equilibrium_is_semicircle() {
    let law = equilibrium_density(&quad(1.0, 10)).unwrap();
    assert!((law.a + 2.0).abs() < 1e-12 && (law.b - 2.0).abs() < 1e-12);
    assert!((law.r[0] - 0.5).abs() < 1e-14);
    for x in [-1.9, -0.3, 0.0, 1.2] {
        assert!((law.density(x) - rho_sc(x)).abs() < 1e-12);
        assert!((law.cdf(x) - cdf_sc(x)).abs() < 1e-12);
    }
    assert!(law.residual <= 1e-4);
    let z = Complex64::new(0.3, 2.0);
    assert!((law.s_function(z) + (z * z - 4.0).sqrt()).norm() < 1e-12);
    assert!((law.stieltjes(z).unwrap() - m_sc(z).unwrap()).norm() < 1e-12);
    // s(z)/z along a ray
    for r in [1e2, 1e4, 1e6] {
        let z = Complex64::from_polar(r, 1.0);
        let ratio = law.s_function(z) / z;
        assert!((ratio + 1.0).norm() < 10.0 / (r * r), "{ratio}");
    }
}

#[test]
fn quartic_equilibrium_matches_closed_form() {
    let c = 0.1;
    let law =
        equilibrium_density(&LogGasSpec::new(2.0, Potential::Quartic { c }, 10).unwrap()).unwrap();
    let a2 = ((1.0 + 48.0 * c).sqrt() - 1.0) / (6.0 * c);
    assert!((law.b - a2.sqrt()).abs() < 1e-12 && (law.a + a2.sqrt()).abs() < 1e-12);
    assert!((law.r[0] - (0.5 + c * a2)).abs() < 1e-12 && (law.r[2] - 2.0 * c).abs() < 1e-12);
    assert!(law.residual <= 1e-4);
    // total mass by an independent midpoint rule
    let m = 200_000;
    let h = (law.b - law.a) / m as f64;
    let mass: f64 = (0..m)
        .map(|i| law.density(law.a + (i as f64 + 0.5) * h) * h)
        .sum();
    assert!((mass - 1.0).abs() < 1e-8, "{mass}");
    assert!((law.cdf(law.b - 1e-15) - 1.0).abs() < 1e-10);
    let near =
        equilibrium_density(&LogGasSpec::new(2.0, Potential::Quartic { c: 1e-9 }, 10).unwrap())
            .unwrap();
    for x in [-1.5, 0.0, 0.7, 1.9] {
        assert!((near.density(x) - rho_sc(x)).abs() < 1e-6);
    }
}

#[test]
fn custom_potential_has_no_equilibrium_here() {
    let p = Potential::Custom {
        name: "cosh".into(),
        v: std::sync::Arc::new(f64::cosh),
        dv: std::sync::Arc::new(f64::sinh),
        inf_v2: 1.0,
    };
    assert!(equilibrium_density(&LogGasSpec::new(1.0, p, 10).unwrap()).is_err());
    assert!(LogGasSpec::new(1.0, Potential::Quartic { c: -0.1 }, 10).is_err());
}

#[test]
fn classical_locations_hit_quantiles() {
    let law =
        equilibrium_density(&LogGasSpec::new(2.0, Potential::Quartic { c: 0.1 }, 300).unwrap())
            .unwrap();
    let g = classical_locations(300, &law);
    for (k, x) in g.iter().enumerate().take(299) {
        assert!((law.cdf(*x) - (k + 1) as f64 / 300.0).abs() < 1e-10);
    }
}

/// `E f(λ)` for the one-particle gas `∝ exp(-βλ²/4)`.
fn one_particle_mean(beta: f64, f: impl Fn(f64) -> Complex64) -> Complex64 {
    let sd = (2.0 / beta).sqrt();
    let m = 20_000;
    let (lo, hi) = (-14.0 * sd, 14.0 * sd);
    let h = (hi - lo) / m as f64;
    let norm = (2.0 * std::f64::consts::PI).sqrt() * sd;
    (0..m)
        .map(|i| {
            let x = lo + (i as f64 + 0.5) * h;
            f(x) * ((-0.5 * x * x / (sd * sd)).exp() * h / norm)
        })
        .sum()
}

#[test]
fn loop_identity_is_exact_for_one_particle() {
    for beta in [1.0, 2.0, 4.0] {
        for z in [Complex64::new(0.0, 2.0), Complex64::new(1.0, 0.7)] {
            let mbar = one_particle_mean(beta, |x| (x - z).inv());
            let g2 = one_particle_mean(beta, |x| (x - z).inv().powi(2));
            let k = g2 - mbar * mbar;
            let mp = g2;
            let m = m_sc(z).unwrap();
            let s = -(z * z - 4.0).sqrt();
            let d = mbar - m;
            let ours = d * d - s * d + k + (2.0 / beta - 1.0) * mp;
            assert!(ours.norm() < 1e-9, "β={beta} z={z}: {ours}");
            // with +k the relation fails by 2k
            let flipped = d * d - s * d - k + (2.0 / beta - 1.0) * mp;
            assert!((flipped + 2.0 * k).norm() < 1e-9 && k.norm() > 1e-3);
        }
    }
}

#[test]
fn loop_residual_is_within_noise() {
    let rows = loop_equation_residual(
        &quad(2.0, 100),
        &[Complex64::new(0.0, 2.0), Complex64::new(0.5, 1.0)],
        2000,
        &SeedPath::new(2, 0, "loop"),
    )
    .unwrap();
    for r in rows {
        assert!(r.residual.norm() <= 4.0 * r.stderr, "{:?}", r);
        assert!(r.stderr > 0.0);
    }
    assert!(loop_equation_residual(
        &quad(2.0, 100),
        &[Complex64::new(0.0, 2.0)],
        50,
        &SeedPath::new(2, 0, "loop")
    )
    .is_err());
    assert!(loop_equation_residual(
        &quad(2.0, 100),
        &[Complex64::new(0.0, 0.1)],
        200,
        &SeedPath::new(2, 0, "loop")
    )
    .is_err());
}

#[test]
fn tridiagonal_second_moment_and_density() {
    for beta in [0.5, 1.0, 2.0, 4.0] {
        let e = gaussian_beta_tridiagonal_sample(beta, 1000, &SeedPath::new(3, 0, "tri"))
            .unwrap()
            .eigenvalues;
        let m2 = mean(&e.iter().map(|x| x * x).collect::<Vec<_>>());
        assert!((m2 - 1.0).abs() < 0.05, "β={beta}: {m2}");
        assert!(ks_one_sample(&e, cdf_sc).unwrap() < 0.03);
    }
}

#[test]
fn mcmc_one_particle_matches_gaussian() {
    for beta in [1.0, 2.0] {
        let params = ChainParams {
            chains: 4,
            burn_in: 200,
            samples: 5000,
            thin: 3,
            step: 1.0,
            target_acceptance: 0.3,
        };
        let run = loggas_mcmc_sample(&quad(beta, 1), &params, &SeedPath::new(4, 0, "n1")).unwrap();
        let x: Vec<f64> = run.samples.iter().map(|s| s[0]).collect();
        let normal = Normal::new(0.0, (2.0 / beta).sqrt()).unwrap();
        let ks = ks_one_sample(&x, |v| normal.cdf(v)).unwrap();
        assert!(ks < 0.02, "β={beta}: {ks}");
        assert!((0.1..=0.7).contains(&run.acceptance));
    }
}

#[test]
fn mcmc_gaps_match_tridiagonal_small() {
    let n = 60;
    let params = ChainParams {
        chains: 4,
        burn_in: 300,
        samples: 500,
        thin: 4,
        ..ChainParams::default()
    };
    let run = loggas_mcmc_sample(&quad(2.0, n), &params, &SeedPath::new(5, 0, "mc")).unwrap();
    assert!(run
        .samples
        .iter()
        .all(|s| s.windows(2).all(|w| w[1] > w[0])));
    let mut a = Vec::new();
    for s in &run.samples {
        a.extend(unfold(s, &SemicircleLaw, (0.0, 1.0)).unwrap().gaps);
    }
    let mut b = Vec::new();
    for k in 0..2000 {
        let e = gaussian_beta_tridiagonal_sample(2.0, n, &SeedPath::new(5, k, "tri"))
            .unwrap()
            .eigenvalues;
        b.extend(unfold(&e, &SemicircleLaw, (0.0, 1.0)).unwrap().gaps);
    }
    let ks = ks_distance(&a, &b).unwrap();
    assert!(ks < 0.06, "{ks}");
}

#[test]
fn rigidity_middle_is_centred() {
    let r = loggas_rigidity_report(&quad(2.0, 201), 400, &SeedPath::new(6, 0, "rig")).unwrap();
    assert!(mean(&r.middle).abs() < 3.0 * std_err(&r.middle));
    assert!(
        r.scaled_quantiles[0] < r.scaled_quantiles[1]
            && r.scaled_quantiles[1] < r.scaled_quantiles[2]
    );
}

#[test]
fn single_interior_particle_matches_exact_law() {
    let cond = ConditionalSpec::centred(100, 1, 2.0, Potential::Quartic { c: 0.1 });
    let (grid, cdf) = k1_conditional_cdf(&cond, 20_000).unwrap();
    let params = ChainParams {
        chains: 4,
        burn_in: 200,
        samples: 5000,
        thin: 3,
        step: 0.5,
        target_acceptance: 0.3,
    };
    let (samples, acc, _) =
        conditional_samples(&cond, &params, &SeedPath::new(7, 0, "k1")).unwrap();
    let x: Vec<f64> = samples.iter().map(|s| s[0]).collect();
    let interp = |v: f64| {
        let pos = grid.partition_point(|g| *g < v).clamp(1, grid.len() - 1);
        let t = (v - grid[pos - 1]) / (grid[pos] - grid[pos - 1]);
        cdf[pos - 1] + t * (cdf[pos] - cdf[pos - 1])
    };
    let ks = ks_one_sample(&x, interp).unwrap();
    assert!(ks < 0.02, "{ks} (acceptance {acc})");
}

#[test]
fn conditional_self_comparison_is_at_noise_floor() {
    let cond = ConditionalSpec::centred(100, 16, 2.0, Potential::Quadratic);
    let params = ChainParams {
        chains: 4,
        burn_in: 300,
        samples: 2500,
        thin: 4,
        ..ChainParams::default()
    };
    let rec = conditional_measure_experiment(&cond, &params, &SeedPath::new(8, 0, "self")).unwrap();
    assert!((rec.affine.0 - 1.0).abs() < 1e-12 && rec.affine.1.abs() < 1e-12);
    assert!(rec.ks < 0.03, "{rec:?}");
}

proptest! {
    #[test]
    fn energy_is_permutation_symmetric(x in prop::collection::vec(-3.0f64..3.0, 2..8), seed in 0u64..1000) {
        use rand::seq::SliceRandom;
        let spec = LogGasSpec::new(1.0, Potential::Quartic { c: 0.05 }, x.len()).unwrap();
        let mut y = x.clone();
        y.shuffle(&mut SeedPath::new(seed, 0, "perm").rng());
        let (a, b) = (hamiltonian(&spec, &x), hamiltonian(&spec, &y));
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()) || (a.is_nan() && b.is_nan()) || a == b);
    }
}
