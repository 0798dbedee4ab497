use num_complex::Complex64;
use rmtlab::ensembles::EnsembleSpec;
use rmtlab::rng::SeedPath;
use rmtlab::semicircle_law::*;
use rmtlab::spectral::m_sc;

fn bump(x: f64) -> (f64, f64, f64) {
    if x.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let u = 1.0 - x * x;
    (u * u * u, -6.0 * x * u * u, -6.0 * u * u + 24.0 * x * x * u)
}

#[test]
fn hs_reproduces_bump_inside_support() {
    for lambda in [0.0, 0.3, -0.71, 0.95] {
        let r = hs_identity_check(&bump, (-1.0, 1.0), lambda, 400).unwrap();
        assert!(
            r.residual < 1e-4,
            "λ={lambda}: {} vs {}",
            r.integral,
            r.exact
        );
    }
}

#[test]
fn hs_vanishes_off_support_and_for_zero() {
    let r = hs_identity_check(&bump, (-1.0, 1.0), 5.0, 400).unwrap();
    assert!(r.integral.abs() < 1e-6, "{}", r.integral);
    let zero = |_: f64| (0.0, 0.0, 0.0);
    assert_eq!(
        hs_identity_check(&zero, (-1.0, 1.0), 0.2, 200)
            .unwrap()
            .integral,
        0.0
    );
}

#[test]
fn fast_z_identities_match_direct_minor() {
    let spec = EnsembleSpec::goe(40);
    let h = rmtlab::ensembles::sample(&spec, &SeedPath::new(11, 0, "schur")).unwrap();
    let z = Complex64::new(0.3, 0.05);
    let fast = z_values(&h.matrix, z).unwrap();
    for i in [0, 17, 39] {
        let (gii, recon, zi) = schur_check(&h.matrix, i, z).unwrap();
        assert!(
            (gii - recon).norm() < 1e-9 * (1.0 + gii.norm()),
            "{gii} vs {recon}"
        );
        assert!((zi - fast[i]).norm() < 1e-8, "{zi} vs {}", fast[i]);
    }
    let spec = EnsembleSpec::gue(30);
    let h = rmtlab::ensembles::sample(&spec, &SeedPath::new(12, 0, "schur")).unwrap();
    let fast = z_values(&h.matrix, z).unwrap();
    let (_, _, zi) = schur_check(&h.matrix, 5, z).unwrap();
    assert!((zi - fast[5]).norm() < 1e-8);
}

#[test]
fn local_law_errors_are_small_and_below_resolution_rejected() {
    let src = SpectrumSource::Dense(EnsembleSpec::goe(200));
    let z = vec![Complex64::new(0.0, 0.1), Complex64::new(1.0, 0.5)];
    let rep = local_law_report(
        &src,
        &z,
        4,
        &SeedPath::new(1, 0, "ll"),
        LocalLawOptions {
            entries: true,
            offdiag_rows: 4,
        },
    )
    .unwrap();
    for r in &rep.records {
        assert!(r.median_m_err() < 10.0 * r.envelope_avg);
        let d = r.diag_err.as_ref().unwrap();
        assert!(d.iter().all(|&x| x < 20.0 * r.envelope_entry));
        assert!(r.offdiag_max.as_ref().unwrap().iter().all(|&x| x < 1.0));
    }
    let bad = local_law_report(
        &src,
        &[Complex64::new(0.0, 1e-4)],
        1,
        &SeedPath::new(1, 0, "ll"),
        Default::default(),
    );
    assert!(bad.is_err());
    let far = local_law_report(
        &src,
        &[Complex64::new(6.0, 0.5)],
        1,
        &SeedPath::new(1, 0, "ll"),
        Default::default(),
    );
    assert!(far.is_err());
}

#[test]
fn tridiagonal_and_dense_gue_agree_statistically() {
    let z = [Complex64::new(0.5, 0.05)];
    let a = local_law_report(
        &SpectrumSource::GaussianTridiagonal { beta: 2.0, n: 200 },
        &z,
        200,
        &SeedPath::new(2, 0, "a"),
        Default::default(),
    )
    .unwrap();
    let b = local_law_report(
        &SpectrumSource::Dense(EnsembleSpec::gue(200)),
        &z,
        200,
        &SeedPath::new(3, 0, "b"),
        Default::default(),
    )
    .unwrap();
    let (ma, mb) = (a.records[0].median_m_err(), b.records[0].median_m_err());
    assert!((ma / mb - 1.0).abs() < 0.25, "{ma} vs {mb}");
    assert!(m_sc(z[0]).unwrap().im > 0.0);
}

#[test]
fn rigidity_and_delocalization_are_bounded() {
    let src = SpectrumSource::Dense(EnsembleSpec::goe(200));
    let r = rigidity_report(&src, 5, &SeedPath::new(4, 0, "rig")).unwrap();
    assert!(r.max_scaled.iter().all(|&m| m < 10.0));
    assert!(r.q_mean() * 200.0 * 200.0 < 60.0);
    let d = delocalization_report(&EnsembleSpec::goe(200), 5, &SeedPath::new(5, 0, "del")).unwrap();
    assert!(d.median() > 5.0 && d.median() < 40.0, "{}", d.median());
}

#[test]
fn fluctuation_averaging_gains_over_individual() {
    let spec = EnsembleSpec::goe(200);
    let rec = fluctuation_averaging_report(
        &spec,
        Complex64::new(0.0, 0.05),
        6,
        &SeedPath::new(6, 0, "fa"),
    )
    .unwrap();
    let a = rmtlab::stats::median(&rec.averaged);
    let b = rmtlab::stats::median(&rec.individual);
    assert!(a < 0.5 * b, "{a} vs {b}");
}
