use proptest::prelude::*;
use rmtlab::ensembles::{sample, EnsembleSpec};
use rmtlab::rng::SeedPath;
use rmtlab::spectral::{SemicircleLaw, UniformLaw};
use rmtlab::stats::{
    edge_statistic, gap_histogram, histogram, ks_distance, ks_one_sample, linear_regression,
    median, one_sided_t_pvalue, poisson_points, quantile, two_point_window_correlation, unfold,
    weighted_regression, wigner_surmise_cdf, wigner_surmise_pdf, EdgeWhich, UnfoldedGaps,
};

fn seed(i: u64) -> SeedPath {
    SeedPath::new(21, i, "stats-test")
}

fn spectra(spec: &EnsembleSpec, count: u64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| sample(spec, &seed(i)).unwrap().eigenvalues().unwrap())
        .collect()
}

fn pooled_gaps(spectra: &[Vec<f64>], window: (f64, f64)) -> UnfoldedGaps {
    let mut all = UnfoldedGaps::empty(window);
    for s in spectra {
        all.extend(&unfold(s, &SemicircleLaw, window).unwrap());
    }
    all
}

/// `sup_x |F_a(x) - F_b(x)|` by brute force over every sample point.
fn ks_brute(a: &[f64], b: &[f64]) -> f64 {
    let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
    a.iter()
        .chain(b)
        .map(|&x| (cdf(a, x) - cdf(b, x)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn equally_spaced_points_unfold_to_unit_gaps() {
    let n = 500;
    let pts: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) / n as f64).collect();
    let g = unfold(&pts, &UniformLaw { a: 0.0, b: 1.0 }, (0.5, 0.3)).unwrap();
    assert_eq!(g.gaps.len(), 299);
    assert!(g.gaps.iter().all(|s| (s - 1.0).abs() < 1e-9));
}

#[test]
fn unfold_rejects_windows_touching_the_edge() {
    let pts = [-1.0, 0.0, 1.0];
    assert!(unfold(&pts, &SemicircleLaw, (1.5, 0.5)).is_err());
    assert!(unfold(&pts, &SemicircleLaw, (0.0, 0.0)).is_err());
    assert!(unfold(&pts, &SemicircleLaw, (0.0, 0.05)).is_err());
}

#[test]
fn goe_bulk_gaps_have_unit_mean_and_follow_the_surmise() {
    let g = pooled_gaps(&spectra(&EnsembleSpec::goe(300), 30), (0.0, 1.0));
    assert!(g.gaps.len() > 2000);
    assert!((g.mean() - 1.0).abs() < 0.03, "{}", g.mean());
    let h = gap_histogram(&g, 12, 3.0).unwrap();
    // out-of-range gaps are excluded from the normalization
    assert!((h.integral() - 1.0).abs() < 1e-12);
    assert!(h.sup_distance_to(wigner_surmise_cdf) < 0.08);
}

#[test]
fn unitary_gaps_repel_more_than_orthogonal() {
    let small = |spec: &EnsembleSpec| {
        let g = pooled_gaps(&spectra(spec, 20), (0.0, 1.0));
        g.gaps.iter().filter(|&&s| s < 0.3).count() as f64 / g.gaps.len() as f64
    };
    let (goe, gue) = (
        small(&EnsembleSpec::goe(200)),
        small(&EnsembleSpec::gue(200)),
    );
    // surmise: P(s < 0.3) ≈ 0.068 for β = 1 and ≈ 0.011 for β = 2
    assert!(gue < 0.5 * goe, "goe {goe} gue {gue}");
}

#[test]
fn surmise_is_a_normalized_density_with_unit_mean() {
    let k = 200_000;
    let h = 12.0 / k as f64;
    let (mut mass, mut first) = (0.0, 0.0);
    for i in 0..k {
        let s = (i as f64 + 0.5) * h;
        let p = wigner_surmise_pdf(s).unwrap();
        mass += p * h;
        first += s * p * h;
    }
    // midpoint error is about h²/24 · |f'(0)|
    assert!((mass - 1.0).abs() < 1e-8);
    assert!((first - 1.0).abs() < 1e-8);
    let upto: f64 = (0..1000)
        .map(|i| wigner_surmise_pdf((i as f64 + 0.5) * 1.5e-3).unwrap() * 1.5e-3)
        .sum();
    assert!((upto - wigner_surmise_cdf(1.5)).abs() < 1e-6);
    assert!(wigner_surmise_pdf(-0.1).is_err());
}

#[test]
fn histogram_integrates_to_one() {
    let x: Vec<f64> = (0..1000).map(|k| (k as f64 * 0.618).fract()).collect();
    let h = histogram(&x, 10, (0.0, 1.0)).unwrap();
    assert!((h.integral() - 1.0).abs() < 1e-12);
    assert_eq!(h.count, 1000);
    assert!(h.density.iter().all(|&d| (d - 1.0).abs() < 0.05));
}

#[test]
fn uniform_sample_passes_one_sample_ks() {
    let x = poisson_points(2000, 0.0, 1.0, &seed(1));
    // 99.9% critical value sqrt(-ln(0.0005)/2)/sqrt(n)
    let crit = (-(0.0005f64).ln() / 2.0).sqrt() / (2000f64).sqrt();
    assert!(ks_one_sample(&x, |v| v.clamp(0.0, 1.0)).unwrap() < crit);
    assert!(ks_one_sample(&x, |v| (v * v).clamp(0.0, 1.0)).unwrap() > 0.2);
}

#[test]
fn poisson_points_have_flat_two_point_function() {
    let sp: Vec<Vec<f64>> = (0..60)
        .map(|i| poisson_points(400, 0.0, 1.0, &seed(100 + i)))
        .collect();
    let h = two_point_window_correlation(&sp, &UniformLaw { a: 0.0, b: 1.0 }, 0.5, 0.2, 3.0, 6)
        .unwrap();
    for (d, e) in h.density.iter().zip(&h.stderr) {
        assert!((d - 1.0).abs() < 5.0 * e + 0.02, "{d} ± {e}");
    }
    let goe = spectra(&EnsembleSpec::goe(200), 60);
    let r = two_point_window_correlation(&goe, &SemicircleLaw, 0.0, 0.5, 3.0, 6).unwrap();
    assert!(r.density[0] < 0.5, "{}", r.density[0]);
}

#[test]
fn edge_statistic_reads_the_top_of_the_spectrum() {
    let s: Vec<f64> = (0..125).map(|k| -2.0 + 4.0 * k as f64 / 124.0).collect();
    let top = edge_statistic(std::slice::from_ref(&s), EdgeWhich::Largest, "t").unwrap();
    assert_eq!(top.values, vec![0.0]);
    let second = edge_statistic(&[s], EdgeWhich::SecondLargest, "t").unwrap();
    // N^{2/3} = 25
    assert!((second.values[0] + 25.0 * 4.0 / 124.0).abs() < 1e-12);
    assert!(edge_statistic(&[vec![0.0; 50]], EdgeWhich::Largest, "t").is_err());
}

#[test]
fn regressions_recover_exact_lines() {
    let x = [1.0, 2.0, 3.0, 5.0];
    let y: Vec<f64> = x.iter().map(|v| -1.5 * v + 0.25).collect();
    let r = linear_regression(&x, &y).unwrap();
    assert!((r.slope + 1.5).abs() < 1e-14 && (r.intercept - 0.25).abs() < 1e-14);
    assert!(r.slope_stderr < 1e-12);
    let w = weighted_regression(&x, &y, &[0.1, 1.0, 0.3, 2.0]).unwrap();
    assert!((w.slope + 1.5).abs() < 1e-13);
    assert!(linear_regression(&[1.0, 1.0], &[0.0, 1.0]).is_err());
}

#[test]
fn t_test_and_quantiles() {
    assert!((one_sided_t_pvalue(&[-1.0, 1.0, -2.0, 2.0]).unwrap() - 0.5).abs() < 1e-12);
    assert!(one_sided_t_pvalue(&[1.0, 1.1, 0.9, 1.05]).unwrap() < 1e-3);
    assert!(one_sided_t_pvalue(&[-1.0, -1.1, -0.9]).unwrap() > 0.99);
    assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    assert_eq!(quantile(&[0.0, 10.0], 0.25), 2.5);
}

fn sample_vec() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-10.0f64..10.0, 1..60)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ks_matches_brute_force(a in sample_vec(), b in sample_vec()) {
        let d = ks_distance(&a, &b).unwrap();
        prop_assert!((d - ks_brute(&a, &b)).abs() < 1e-12);
        prop_assert_eq!(d, ks_distance(&b, &a).unwrap());
    }

    #[test]
    fn ks_is_a_pseudometric(a in sample_vec(), b in sample_vec(), c in sample_vec()) {
        let ab = ks_distance(&a, &b).unwrap();
        let bc = ks_distance(&b, &c).unwrap();
        let ac = ks_distance(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn unfolding_is_affine_covariant(s in 0u64..500, scale in 1.0f64..10.0, shift in -5.0f64..5.0) {
        let pts = poisson_points(300, 0.0, 1.0, &seed(s));
        let moved: Vec<f64> = pts.iter().map(|x| scale * x + shift).collect();
        let g = unfold(&pts, &UniformLaw { a: 0.0, b: 1.0 }, (0.5, 0.3)).unwrap();
        let law = UniformLaw { a: shift, b: scale + shift };
        let h = unfold(&moved, &law, (scale * 0.5 + shift, scale * 0.3)).unwrap();
        prop_assert_eq!(g.gaps.len(), h.gaps.len());
        for (x, y) in g.gaps.iter().zip(&h.gaps) {
            prop_assert!((x - y).abs() < 1e-9 * (1.0 + x));
        }
    }

    #[test]
    fn edge_statistic_is_shift_equivariant(s in 0u64..200, delta in -0.5f64..0.5) {
        let pts = poisson_points(150, -2.0, 2.0, &seed(s));
        let moved: Vec<f64> = pts.iter().map(|x| x + delta).collect();
        let a = edge_statistic(&[pts], EdgeWhich::Largest, "a").unwrap().values[0];
        let b = edge_statistic(&[moved], EdgeWhich::Largest, "b").unwrap().values[0];
        prop_assert!((b - a - 150f64.powf(2.0 / 3.0) * delta).abs() < 1e-9);
    }
}
