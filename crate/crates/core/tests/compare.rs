use num_complex::Complex64;
use rand::Rng;
use rmtlab::compare::*;
use rmtlab::ensembles::EntryDistribution;
use rmtlab::linalg::SymMatrix;
use rmtlab::rng::SeedPath;

#[test]
fn rank_two_updates_match_reinversion() {
    let n = 50;
    let mut rng = SeedPath::new(1, 0, "r2").rng();
    let mut h = SymMatrix::from_lower(n, |_, _| rng.random_range(-1.0..1.0) / (n as f64).sqrt());
    let z = Complex64::new(0.1, 0.05);
    let mut r = Resolvent::new(&h, z).unwrap();
    for _ in 0..100 {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        let d = rng.random_range(-0.3..0.3);
        let v = h.get(i, j) + d;
        h.set_sym(i, j, v);
        r.update(i, j, d, &h).unwrap();
    }
    let fresh = Resolvent::new(&h, z).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((r.get(i, j) - fresh.get(i, j)).norm());
        }
    }
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn telescoping_is_exact() {
    let t = swap_experiment(
        &EntryDistribution::gaussian(),
        &EntryDistribution::bernoulli(),
        40,
        Complex64::new(0.0, 0.1),
        4,
        Coupling::Independent,
        &SeedPath::new(2, 0, "swap"),
    )
    .unwrap();
    assert!(t.telescoping_error < 1e-10, "{}", t.telescoping_error);
    assert_eq!(t.schedule_len, 40 * 41 / 2);
    assert_eq!(t.checkpoints.len(), t.schedule_len / 40);
}

#[test]
fn identical_laws_give_zero_difference() {
    let g = EntryDistribution::gaussian();
    let d = endpoint_difference(
        &g,
        &g,
        60,
        Complex64::new(0.0, 1.0),
        10,
        Coupling::Quantile,
        &SeedPath::new(3, 0, "same"),
    )
    .unwrap();
    assert_eq!(d.diff, Complex64::new(0.0, 0.0));
    let t = swap_experiment(
        &g,
        &g,
        30,
        Complex64::new(0.0, 0.5),
        6,
        Coupling::Independent,
        &SeedPath::new(3, 0, "same"),
    )
    .unwrap();
    assert!(t.difference.0 <= 3.0 * t.difference.1 + 1e-12);
}

#[test]
fn bernoulli_gap_at_z_i_is_order_one_over_n() {
    let n = 200;
    let d = endpoint_difference(
        &EntryDistribution::gaussian(),
        &EntryDistribution::bernoulli(),
        n,
        Complex64::new(0.0, 1.0),
        400,
        Coupling::Quantile,
        &SeedPath::new(4, 0, "bern"),
    )
    .unwrap();
    assert!(d.diff.norm() <= 5.0 / n as f64, "{:?}", d);
}

#[test]
fn ou_matching_examples() {
    let b = EntryDistribution::bernoulli();
    let zero = ou_matching_check(&b, 0.0, 1000, 0.5).unwrap();
    assert!(zero.identical && zero.gaps.iter().all(|g| *g == 0.0));
    let m = ou_matching_check(&b, 1e-3, 1000, 0.79).unwrap();
    assert!((m.gaps[3] - 2.0 * (1.0 - (-2e-3f64).exp())).abs() < 1e-15);
    assert!(m.within_bound && m.gaps[0] == 0.0 && m.gaps[1] < 1e-15);
    for t in [0.1, 1.0, 5.0] {
        let m = ou_matching_check(&b, t, 100, 0.5).unwrap();
        assert!(m.gaps[0] == 0.0 && m.gaps[1] < 1e-15);
    }
}
