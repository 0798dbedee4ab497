//! One preparer per experiment. Preparing validates every spec block and
//! returns a closure that does the sampling, so `validate` and `run` share
//! the same checks.

use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::config::{EnsembleBlock, ExperimentConfig, Source};
use super::{Envelopes, ExperimentKind, HarnessError, Row};
use crate::compare::{endpoint_difference, ou_matching_check, swap_experiment, Coupling};
use crate::dbm::{ks_stderr, ou_matrix_flow, relaxation_experiment, RelaxationOptions};
use crate::ensembles::{sample, EnsembleSpec, EntryDistribution};
use crate::error::Result;
use crate::loggas::{
    conditional_measure_experiment, conditional_samples, equilibrium_density, k1_conditional_cdf,
    loggas_mcmc_sample, loggas_rigidity_report, loggas_rigidity_slope, loop_equation_residual,
    ChainParams, ConditionalSpec, Potential,
};
use crate::par_map;
use crate::rng::SeedPath;
use crate::semicircle_law::{
    delocalization_report, fluctuation_averaging_report, fluctuation_averaging_slopes,
    hs_identity_check, local_law_report, rigidity_report, rigidity_slope, schur_check,
    LocalLawOptions,
};
use crate::spectral::{eigen, minor_resolvent, resolvent, SemicircleLaw, SpectralLaw};
use crate::stats::{
    edge_statistic, gap_histogram, ks_distance, ks_one_sample, linear_regression, mean, median,
    median_std_err, one_sided_t_pvalue, std_err, two_point_window_correlation, unfold,
    wigner_surmise_cdf, EdgeWhich, Regression,
};

pub(super) type Job = Box<dyn Fn() -> Result<Vec<Row>> + Send + Sync>;

type Prepared = std::result::Result<Job, HarnessError>;

pub(super) fn prepare(kind: ExperimentKind, cfg: &ExperimentConfig, env: &Envelopes) -> Prepared {
    if cfg.samples < 2 {
        return Err(HarnessError::InvalidSpec(
            "samples must be at least 2".into(),
        ));
    }
    match kind {
        ExperimentKind::Semicircle => semicircle(cfg, env),
        ExperimentKind::Rigidity => rigidity(cfg, env),
        ExperimentKind::Deloc => deloc(cfg, env),
        ExperimentKind::Gaps => gaps(cfg, env),
        ExperimentKind::Twopoint => twopoint(cfg, env),
        ExperimentKind::DbmRelax => dbm_relax(cfg, env),
        ExperimentKind::Edge => edge(cfg, env),
        ExperimentKind::Er => er(cfg, env),
        ExperimentKind::Loggas => loggas(cfg, env),
        ExperimentKind::Conditional => conditional(cfg, env),
        ExperimentKind::Loop => loop_equation(cfg, env),
        ExperimentKind::Compare => compare(cfg, env),
        ExperimentKind::Flucavg => flucavg(cfg, env),
        ExperimentKind::HsCheck => hs_check(cfg, env),
    }
}

fn spec_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::InvalidSpec(msg.into())
}

fn block(b: &Option<EnsembleBlock>) -> EnsembleBlock {
    b.clone().unwrap_or_default()
}

fn spectra(source: &Source, samples: usize, seed: &SeedPath) -> Result<Vec<Vec<f64>>> {
    par_map(samples, |k| source.eigenvalues(&seed.with_index(k as u64)))
        .into_iter()
        .collect()
}

fn pooled_gaps(
    spectra: &[Vec<f64>],
    law: &dyn SpectralLaw,
    window: (f64, f64),
) -> Result<Vec<f64>> {
    let mut gaps = Vec::new();
    for s in spectra {
        gaps.extend(unfold(s, law, window)?.gaps);
    }
    Ok(gaps)
}

fn size_seed(cfg: &ExperimentConfig, n: usize) -> SeedPath {
    cfg.seed().child(&format!("n{n}"))
}

/// Slope row plus its 95% confidence interval, when there are enough points.
fn slope_rows(
    name: &str,
    reg: &Regression,
    points: usize,
    lo: Option<f64>,
    hi: Option<f64>,
) -> Vec<Row> {
    let mut rows = vec![Row::check(name, None, reg.slope, lo, hi).with_stderr(reg.slope_stderr)];
    if points > 2 && reg.slope_stderr.is_finite() {
        let t = StudentsT::new(0.0, 1.0, (points - 2) as f64)
            .map(|d| d.inverse_cdf(0.975))
            .unwrap_or(f64::NAN);
        rows.push(Row::info(
            &format!("{name}_ci95_lo"),
            None,
            reg.slope - t * reg.slope_stderr,
        ));
        rows.push(Row::info(
            &format!("{name}_ci95_hi"),
            None,
            reg.slope + t * reg.slope_stderr,
        ));
    }
    rows
}

fn mean_row(name: &str, n: usize, values: &[f64]) -> Row {
    Row::info(name, Some(n), mean(values))
        .with_stderr(std_err(values))
        .with_samples(values.len())
}

fn eta_for(cfg: &ExperimentConfig, n: usize, default_exponent: f64) -> f64 {
    cfg.params
        .eta
        .unwrap_or_else(|| (n as f64).powf(-cfg.params.eta_exponent.unwrap_or(default_exponent)))
}

fn semicircle(cfg: &ExperimentConfig, env: &Envelopes) -> Prepared {
    let b = block(&cfg.ensemble);
    let sizes = cfg.sizes()?;
    let sources = sizes
        .iter()
        .map(|&n| b.source(n)?.spectrum_source())
        .collect::<Result<Vec<_>>>()?;
    let e = cfg.params.energy.unwrap_or(0.0);
    let energies = cfg.params.energies.clone().unwrap_or_else(|| vec![e]);
    for &n in &sizes {
        let eta = eta_for(cfg, n, 0.8);
        for &e in energies.iter().chain([&e]) {
            if e.abs() > 5.0 || eta < 1.0 / n as f64 || eta > 10.0 {
                return Err(spec_err(format!(
                    "z = {e} + {eta}i outside |E| <= 5, 1/N <= η <= 10 at N = {n}"
                )));
            }
        }
    }
    let cfg = cfg.clone();
    let tol = [
        env.get("moment2_tol"),
        env.get("moment4_tol"),
        env.get("moment6_tol"),
    ];
    let (factor, macro_err) = (env.get("local_law_factor"), env.get("macroscopic_m_err"));
    let slope_bounds = (env.get("local_law_slope_lo"), env.get("local_law_slope_hi"));
    Ok(Box::new(move || {
        let mut rows = Vec::new();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (source, &n) in sources.iter().zip(&sizes) {
            let seed = size_seed(&cfg, n);
            let eigs: Vec<Result<Vec<f64>>> = par_map(cfg.samples, |k| {
                source.eigenvalues(&seed.child("moments").with_index(k as u64))
            });
            let eigs: Vec<Vec<f64>> = eigs.into_iter().collect::<Result<_>>()?;
            for (k, (catalan, tol)) in [(1.0, tol[0]), (2.0, tol[1]), (5.0, tol[2])]
                .into_iter()
                .enumerate()
            {
                let p = 2 * (k as i32 + 1);
                let m: Vec<f64> = eigs
                    .iter()
                    .map(|l| l.iter().map(|v| v.powi(p)).sum::<f64>() / n as f64)
                    .collect();
                rows.push(
                    Row::check(
                        &format!("moment{p}"),
                        Some(n),
                        mean(&m),
                        Some(catalan - tol),
                        Some(catalan + tol),
                    )
                    .with_stderr(std_err(&m))
                    .with_samples(m.len()),
                );
            }
            let eta = eta_for(&cfg, n, 0.8);
            // Energies a few η apart give nearly independent errors, so
            // pooling them sharpens the median without more samples.
            let mut z: Vec<Complex64> = energies.iter().map(|&e| Complex64::new(e, eta)).collect();
            z.push(Complex64::new(e, 10.0));
            let report = local_law_report(
                source,
                &z,
                cfg.samples,
                &seed.child("local"),
                LocalLawOptions::default(),
            )?;
            let (local, macroscopic) = report.records.split_at(energies.len());
            let (macroscopic, n_eta) = (&macroscopic[0], local[0].n_eta());
            let pooled: Vec<f64> = local.iter().flat_map(|r| r.m_err.iter().copied()).collect();
            let med = median(&pooled);
            rows.push(
                Row::check("local_law_m_err", Some(n), med, None, Some(factor / n_eta))
                    .with_stderr(median_std_err(&pooled))
                    .with_samples(pooled.len()),
            );
            rows.push(Row::info("local_law_ratio", Some(n), med * n_eta));
            rows.push(
                Row::check(
                    "macroscopic_m_err",
                    Some(n),
                    macroscopic.median_m_err(),
                    None,
                    Some(macro_err),
                )
                .with_samples(cfg.samples),
            );
            x.push(n_eta.ln());
            y.push(med.ln());
        }
        if sizes.len() >= 2 {
            let reg = linear_regression(&x, &y)?;
            rows.extend(slope_rows(
                "local_law_slope",
                &reg,
                sizes.len(),
                Some(slope_bounds.0),
                Some(slope_bounds.1),
            ));
        }
        Ok(rows)
    }))
}

fn rigidity(cfg: &ExperimentConfig, env: &Envelopes) -> Prepared {
    let b = block(&cfg.ensemble);
    let sizes = cfg.sizes()?;
    let sources = sizes
        .iter()
        .map(|&n| b.source(n)?.spectrum_source())
        .collect::<Result<Vec<_>>>()?;
    let cfg = cfg.clone();
    let factor = env.get("bulk_dev_factor");
    let bounds = (env.get("q_slope_lo"), env.get("q_slope_hi"));
    Ok(Box::new(move || {
        let mut rows = Vec::new();
        let mut reports = Vec::new();
        for (source, &n) in sources.iter().zip(&sizes) {
            let r = rigidity_report(source, cfg.samples, &size_seed(&cfg, n))?;
            let nf = n as f64;
            rows.push(
                Row::info("q_mean", Some(n), r.q_mean())
                    .with_stderr(r.q_stderr())
                    .with_samples(cfg.samples),
            );
            rows.push(
                Row::check(
                    "bulk_median_dev",
                    Some(n),
                    r.median_bulk_dev(),
                    None,
                    Some(factor * nf.ln() / nf),
                )
                .with_stderr(median_std_err(&r.bulk_dev))
                .with_samples(cfg.samples),
            );
            rows.push(
                Row::info("max_scaled_median", Some(n), median(&r.max_scaled))
                    .with_samples(cfg.samples),
            );
            reports.push(r);
        }
        if reports.len() >= 2 {
            rows.extend(slope_rows(
                "q_slope",
                &rigidity_slope(&reports)?,
                reports.len(),
                Some(bounds.0),
                Some(bounds.1),
            ));
        }
        Ok(rows)
    }))
}

fn deloc(cfg: &ExperimentConfig, env: &Envelopes) -> Prepared {
    let b = block(&cfg.ensemble);
    let sizes = cfg.sizes()?;
    let specs = sizes
        .iter()
        .map(|&n| b.matrix_spec(n))
        .collect::<Result<Vec<_>>>()?;
    let cfg = cfg.clone();
    let envelope_n = cfg.params.envelope_n.unwrap_or(1000);
    let (cap, growth) = (env.get("deloc_median_max"), env.get("deloc_growth_max"));
    Ok(Box::new(move || {
        let mut rows = Vec::new();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for spec in &specs {
            let n = spec.n;
            let r = delocalization_report(spec, cfg.samples, &size_seed(&cfg, n))?;
            let (med, se) = (r.median(), r.median_stderr());
            let log2 = (n as f64).ln().powi(2);
            rows.push(
                Row::check("deloc_median", Some(n), med, None, Some(log2))
                    .with_stderr(se)
                    .with_samples(cfg.samples),
            );
            if n == envelope_n {
                rows.push(
                    Row::check("deloc_median_envelope", Some(n), med, None, Some(cap))
                        .with_stderr(se),
                );
            }
            x.push((n as f64).ln());
            y.push(med.ln());
        }
        if specs.len() >= 2 {
            rows.extend(slope_rows(
                "deloc_growth",
                &linear_regression(&x, &y)?,
                specs.len(),
                None,
                Some(growth),
            ));
        }
        Ok(rows)
    }))
}

fn window(cfg: &ExperimentConfig, default_b: f64) -> (f64, f64) {
    (
        cfg.params.energy.unwrap_or(0.0),
        cfg.params.window.unwrap_or(default_b),
    )
}

fn gaps(cfg: &ExperimentConfig, env: &Envelopes) -> Prepared {
    let n = cfg.single_size()?;
    let source = block(&cfg.ensemble).source(n)?;
    let reference = cfg.reference.as_ref().map(|r| r.source(n)).transpose()?;
    let w = window(cfg, 0.1);
    let (bins, upper) = (
        cfg.params.bins.unwrap_or(15),
        cfg.params.bin_upper.unwrap_or(3.0),
    );
    if bins == 0 || !(upper > 0.0) {
        return Err(spec_err("histogram needs bins > 0 and bin_upper > 0"));
    }
    let cfg = cfg.clone();
    let env = env.clone();
    Ok(Box::new(move || {
        let seed = size_seed(&cfg, n);
        let sp = spectra(&source, cfg.samples, &seed.child("spectra"))?;
        let law = source.law();
        let gaps = pooled_gaps(&sp, law.as_ref(), w)?;
        let mut rows = vec![
            Row::info("gap_count", Some(n), gaps.len() as f64),
            Row::check(
                "mean_gap",
                Some(n),
                mean(&gaps),
                Some(env.get("mean_gap_lo")),
                Some(env.get("mean_gap_hi")),
            )
            .with_stderr(std_err(&gaps)),
        ];
        let hist = gap_histogram(
            &crate::stats::UnfoldedGaps {
                gaps: gaps.clone(),
                window: w,
            },
            bins,
            upper,
        )?;
        let sup = hist.sup_distance_to(wigner_surmise_cdf);
        if source.beta() == Some(1.0) {
            rows.push(Row::check(
                "surmise_sup_norm",
                Some(n),
                sup,
                None,
                Some(env.get("surmise_sup")),
            ));
        } else {
            rows.push(Row::info("surmise_sup_norm", Some(n), sup));
        }
        rows.push(
            Row::info("density_near_zero", Some(n), hist.density[0]).with_stderr(hist.stderr[0]),
        );
        if hist.density.iter().all(|d| *d <= hist.density[0]) {
            rows.push(Row::info("no_level_repulsion", Some(n), 1.0));
        }
        if let Some(reference) = &reference {
            let rs = spectra(reference, cfg.reference_samples(), &seed.child("reference"))?;
            let rg = pooled_gaps(&rs, reference.law().as_ref(), w)?;
            rows.push(
                Row::check(
                    "gap_ks",
                    Some(n),
                    ks_distance(&gaps, &rg)?,
                    None,
                    Some(env.get("gap_ks")),
                )
                .with_stderr(ks_stderr(gaps.len(), rg.len()))
                .with_samples(cfg.samples),
            );
        }
        Ok(rows)
    }))
}

fn twopoint(cfg: &ExperimentConfig, env: &Envelopes) -> Prepared {
    let n = cfg.single_size()?;
    let source = block(&cfg.ensemble).source(n)?;
    let flow_t = cfg.params.flow_t;
    if flow_t.is_some() && !matches!(source, Source::Matrix(_)) {
        return Err(spec_err("flow_t needs a dense ensemble"));
    }
    let gaussian = match source.beta() {
        Some(2.0) => EnsembleSpec::gue(n),
        _ => EnsembleSpec::goe(n),
    };
    let reference = match &cfg.reference {
        Some(r) => r.source(n)?,
        None => Source::Matrix(gaussian),
    };
    let (e, b) = window(cfg, 0.5);
    let (alpha_max, bins) = (
        cfg.params.alpha_max.unwrap_or(3.0),
        cfg.params.bins.unwrap_or(12),
    );
    let cfg = cfg.clone();
    let hi = env.get("two_point_sup");
    Ok(Box::new(move || {
        let seed = size_seed(&cfg, n);
        let sp: Vec<Vec<f64>> = match (&source, flow_t) {
            (Source::Matrix(spec), Some(t)) => par_map(cfg.samples, |k| {
                let h0 = sample(spec, &seed.child("spectra").with_index(k as u64))?;
                ou_matrix_flow(
                    &h0,
                    t,
                    spec.symmetry,
                    &seed.child("flow").with_index(k as u64),
                )?
                .eigenvalues()
            })
            .into_iter()
            .collect::<Result<_>>()?,
            _ => spectra(&source, cfg.samples, &seed.child("spectra"))?,
        };
        let rs = spectra(
            &reference,
            cfg.reference_samples(),
            &seed.child("reference"),
        )?;
        let a = two_point_window_correlation(&sp, source.law().as_ref(), e, b, alpha_max, bins)?;
        let r = two_point_window_correlation(&rs, reference.law().as_ref(), e, b, alpha_max, bins)?;
        let mut rows = vec![Row::check(
            "two_point_sup_difference",
            Some(n),
            a.sup_difference(&r),
            None,
            Some(hi),
        )];
        rows.push(Row::info("two_point_first_bin", Some(n), a.density[0]).with_stderr(a.stderr[0]));
        rows.push(
            Row::info("two_point_reference_first_bin", Some(n), r.density[0])
                .with_stderr(r.stderr[0]),
        );
        Ok(rows)
    }))
}

fn dbm_relax(cfg: &ExperimentConfig, env: &Envelopes) -> Prepared {
    let n = cfg.single_size()?;
    let b = cfg.ensemble.clone().unwrap_or(EnsembleBlock {
        entries: "bernoulli".into(),
        ..EnsembleBlock::default()
    });
    let spec = b.matrix_spec(n)?;
    let t_grid = cfg
        .params
        .t_grid
        .clone()
        .unwrap_or_else(|| vec![0.0, 0.01, 0.1, 1.0, 3.0]);
    if t_grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(spec_err("t_grid entries must be finite and nonnegative"));
    }
    let detune = cfg.params.detune.unwrap_or(1.05);
    if !(detune > 0.0) {
        return Err(spec_err("detune must be positive"));
    }
    let window = cfg.params.window.unwrap_or(1.0);
    let cfg = cfg.clone();
    let sigmas = env.get("relax_sigmas");
    Ok(Box::new(move || {
        let seed = size_seed(&cfg, n);
        let opts = RelaxationOptions {
            variance_factor: 1.0,
            window,
        };
        let table = relaxation_experiment(&spec, &t_grid, cfg.samples, &seed.child("plain"), opts)?;
        let mut rows = Vec::new();
        for r in &table.rows {
            rows.push(
                Row::info(&format!("ks_local[t={}]", r.t), Some(n), r.ks_local)
                    .with_stderr(r.stderr_local),
            );
            rows.push(
                Row::info(&format!("ks_global[t={}]", r.t), Some(n), r.ks_global)
                    .with_stderr(r.stderr_global),
            );
        }
        let worst = table
            .rows
            .windows(2)
            .map(|w| (w[1].ks_local - w[0].ks_local) / w[0].stderr_local.hypot(w[1].stderr_local))
            .fold(f64::NEG_INFINITY, f64::max);
        if table.rows.len() >= 2 {
            rows.push(Row::check(
                "ks_local_max_increase_sigmas",
                Some(n),
                worst,
                None,
                Some(sigmas),
            ));
        }
        if detune != 1.0 {
            let opts = RelaxationOptions {
                variance_factor: detune,
                window,
            };
            let t = [1.0 / n as f64, 1.0];
            let d = relaxation_experiment(&spec, &t, cfg.samples, &seed.child("detuned"), opts)?;
            let (early, late) = (&d.rows[0], &d.rows[1]);
            rows.push(
                Row::info("detuned_ks_global[t=1/N]", Some(n), early.ks_global)
                    .with_stderr(early.stderr_global),
            );
            rows.push(
                Row::info("detuned_ks_global[t=1]", Some(n), late.ks_global)
                    .with_stderr(late.stderr_global),
            );
            rows.push(
                Row::check(
                    "detuned_global_drop",
                    Some(n),
                    early.ks_global - late.ks_global,
                    Some(f64::MIN_POSITIVE),
                    None,
                )
                .with_stderr(early.stderr_global.hypot(late.stderr_global)),
            );
        }
        Ok(rows)
    }))
}

fn edge(cfg: &ExperimentConfig, env: &Envelopes) -> Prepared {
    let n = cfg.single_size()?;
    if n < 100 {
        return Err(spec_err("edge statistics need N >= 100"));
    }
    let source = block(&cfg.ensemble).source(n)?;
    let rb = cfg.reference.clone().unwrap_or(EnsembleBlock {
        entries: "bernoulli".into(),
        ..EnsembleBlock::default()
    });
    let reference = rb.source(n)?;
    let cfg = cfg.clone();
    let hi = env.get("edge_ks");
    Ok(Box::new(move || {
        let seed = size_seed(&cfg, n);
        let a = edge_statistic(
            &spectra(&source, cfg.samples, &seed.child("spectra"))?,
            EdgeWhich::Largest,
            "ensemble",
        )?;
        let b = edge_statistic(
            &spectra(
                &reference,
                cfg.reference_samples(),
                &seed.child("reference"),
            )?,
            EdgeWhich::Largest,
            "reference",
        )?;
        Ok(vec![
            mean_row("edge_mean", n, &a.values),
            mean_row("reference_edge_mean", n, &b.values),
            Row::check(
                "edge_ks",
                Some(n),
                ks_distance(&a.values, &b.values)?,
                None,
                Some(hi),
            )
            .with_stderr(ks_stderr(cfg.samples, cfg.reference_samples()))
            .with_samples(cfg.samples),
        ])
    }))
}

fn er(cfg: &ExperimentConfig, env: &Envelopes) -> Prepared {
    let n = cfg.single_size()?;
    let b = cfg.ensemble.clone().unwrap_or(EnsembleBlock {
        er_p: Some(0.1),
        ..EnsembleBlock::default()
    });
    let spec = b.matrix_spec(n)?;
    let Some(params) = spec.er else {
        return Err(spec_err("er experiment needs `er_p` in [ensemble]"));
    };
    let reference = block(&cfg.reference).source(n)?;
    let source = Source::Matrix(spec);
    let cfg = cfg.clone();
    let (rel, ks_hi) = (env.get("er_outlier_rel"), env.get("er_second_ks"));
    Ok(Box::new(move || {
        let seed = size_seed(&cfg, n);
        let sp = spectra(&source, cfg.samples, &seed.child("spectra"))?;
        let top: Vec<f64> = sp.iter().map(|s| s[n - 1]).collect();
        let predicted = params.outlier_location();
        let second = edge_statistic(&sp, EdgeWhich::SecondLargest, "er")?;
        let goe = edge_statistic(
            &spectra(
                &reference,
                cfg.reference_samples(),
                &seed.child("reference"),
            )?,
            EdgeWhich::Largest,
            "reference",
        )?;
        Ok(vec![
            mean_row("outlier_mean", n, &top),
            Row::info("outlier_predicted", Some(n), predicted),
            Row::check(
                "outlier_rel_err",
                Some(n),
                (mean(&top) - predicted).abs() / predicted,
                None,
                Some(rel),
            )
            .with_stderr(std_err(&top) / predicted),
            mean_row("second_edge_mean", n, &second.values),
            mean_row("reference_edge_mean", n, &goe.values),
            Row::check(
                "second_edge_ks",
                Some(n),
                ks_distance(&second.values, &goe.values)?,
                None,
                Some(ks_hi),
            )
            .with_stderr(ks_stderr(cfg.samples, cfg.reference_samples()))
            .with_samples(cfg.samples),
        ])
    }))
}

fn loggas_block(
    cfg: &ExperimentConfig,
) -> std::result::Result<super::config::LogGasBlock, HarnessError> {
    cfg.loggas.clone().ok_or_else(|| {
        spec_err(format!(
            "experiment `{}` needs a [loggas] block",
            cfg.experiment
        ))
    })
}

fn loggas(cfg: &ExperimentConfig, env: &Envelopes) -> Prepared {
    let lg = loggas_block(cfg)?;
    let sizes = cfg.sizes()?;
    let specs = sizes
        .iter()
        .map(|&n| lg.spec(n))
        .collect::<Result<Vec<_>>>()?;
    let quadratic = specs[0].potential == Potential::Quadratic;
    let route_n = cfg.params.route_n.unwrap_or(1000);
    let route = match &cfg.reference {
        Some(r) => {
            if !quadratic {
                return Err(spec_err("route comparison needs the quadratic potential"));
            }
            let src = r.source(route_n)?;
            if src.beta() != Some(lg.beta) {
                return Err(spec_err(format!(
                    "reference symmetry class does not match β = {}",
                    lg.beta
                )));
            }
            Some(src)
        }
        None => None,
    };
    let mcmc = match cfg.params.mcmc_n {
        Some(m) => {
            if !quadratic {
                return Err(spec_err(
                    "MCMC route check compares against the tridiagonal model (quadratic only)",
                ));
            }
            Some(lg.spec(m)?)
        }
        None => None,
    };
    let route_samples = cfg.params.route_samples.unwrap_or(cfg.samples);
    let w = window(cfg, 1.0);
    let chain = cfg.chain.params();
    let cfg = cfg.clone();
    let env = env.clone();
    Ok(Box::new(move || {
        let mut rows = Vec::new();
        let seed = cfg.seed();
        if !matches!(specs[0].potential, Potential::Custom { .. }) {
            let law = equilibrium_density(&specs[0])?;
            rows.push(Row::check(
                "equilibrium_residual",
                None,
                law.residual,
                None,
                Some(env.get("equilibrium_residual")),
            ));
            rows.push(Row::info("support_lo", None, law.a));
            rows.push(Row::info("support_hi", None, law.b));
        }
        if let Some(reference) = &route {
            let tri = Source::Tridiagonal {
                beta: lg.beta,
                n: route_n,
            };
            let a = pooled_gaps(
                &spectra(&tri, route_samples, &seed.child("route/tridiagonal"))?,
                &SemicircleLaw,
                w,
            )?;
            let b = pooled_gaps(
                &spectra(reference, route_samples, &seed.child("route/dense"))?,
                &SemicircleLaw,
                w,
            )?;
            rows.push(
                Row::check(
                    "route_gap_ks",
                    Some(route_n),
                    ks_distance(&a, &b)?,
                    None,
                    Some(env.get("route_ks")),
                )
                .with_stderr(ks_stderr(a.len(), b.len()))
                .with_samples(route_samples),
            );
        }
        if let Some(spec) = &mcmc {
            let run = loggas_mcmc_sample(spec, &chain, &seed.child("mcmc"))?;
            let tri = Source::Tridiagonal {
                beta: spec.beta,
                n: spec.n,
            };
            let a = pooled_gaps(&run.samples, &SemicircleLaw, w)?;
            let b = pooled_gaps(
                &spectra(&tri, cfg.samples, &seed.child("mcmc/tridiagonal"))?,
                &SemicircleLaw,
                w,
            )?;
            rows.push(Row::info("mcmc_acceptance", Some(spec.n), run.acceptance));
            rows.push(
                Row::check(
                    "mcmc_gap_ks",
                    Some(spec.n),
                    ks_distance(&a, &b)?,
                    None,
                    Some(env.get("mcmc_ks")),
                )
                .with_stderr(ks_stderr(a.len(), b.len()))
                .with_samples(run.samples.len()),
            );
        }
        let mut reports = Vec::new();
        for spec in &specs {
            let r = loggas_rigidity_report(spec, cfg.samples, &size_seed(&cfg, spec.n))?;
            rows.push(
                Row::info("median_dev", Some(spec.n), r.median_dev).with_samples(cfg.samples),
            );
            rows.push(mean_row("middle_particle", spec.n, &r.middle));
            reports.push(r);
        }
        if reports.len() >= 2 {
            let reg = loggas_rigidity_slope(&reports)?;
            let (lo, hi) = (env.get("loggas_slope_lo"), env.get("loggas_slope_hi"));
            rows.extend(slope_rows(
                "rigidity_slope",
                &reg,
                reports.len(),
                Some(lo),
                Some(hi),
            ));
        }
        Ok(rows)
    }))
}

fn conditional(cfg: &ExperimentConfig, env: &Envelopes) -> Prepared {
    let lg = loggas_block(cfg)?;
    let n = cfg.single_size()?;
    let k = cfg.params.k.unwrap_or(32);
    let cond = ConditionalSpec::centred(n, k.min(n.saturating_sub(2)), lg.beta, lg.potential()?);
    if k + 2 > n {
        return Err(spec_err(format!(
            "K = {k} leaves no frozen points at N = {n}"
        )));
    }
    cond.validate()?;
    if k < 2 {
        return Err(spec_err("gap comparison needs K >= 2"));
    }
    let oracle = cfg
        .params
        .k1_oracle
        .unwrap_or(false)
        .then(|| ConditionalSpec::centred(n, 1, lg.beta, cond.potential.clone()));
    let chain = cfg.chain.params();
    // One free particle mixes fast but the oracle tolerance needs ~10⁴ draws.
    let k1_chain = ChainParams {
        samples: cfg.params.k1_samples.unwrap_or(5000),
        thin: 3,
        ..chain
    };
    let cfg = cfg.clone();
    let (ks_hi, oracle_hi) = (env.get("conditional_ks"), env.get("k1_oracle_ks"));
    Ok(Box::new(move || {
        let seed = cfg.seed();
        let rec = conditional_measure_experiment(&cond, &chain, &seed.child("window"))?;
        let mut rows = vec![
            Row::check("conditional_gap_ks", Some(n), rec.ks, None, Some(ks_hi))
                .with_stderr(rec.stderr)
                .with_samples(rec.gaps),
            Row::info("acceptance", Some(n), rec.acceptance),
            Row::info("acceptance_reference", Some(n), rec.acceptance_reference),
            Row::info("affine_scale", Some(n), rec.affine.0),
        ];
        if let Some(one) = &oracle {
            let (grid, cdf) = k1_conditional_cdf(one, 20_000)?;
            let (samples, _, _) = conditional_samples(one, &k1_chain, &seed.child("k1"))?;
            let x: Vec<f64> = samples.iter().map(|s| s[0]).collect();
            let interp = |v: f64| {
                let pos = grid.partition_point(|g| *g < v).clamp(1, grid.len() - 1);
                let t = (v - grid[pos - 1]) / (grid[pos] - grid[pos - 1]);
                cdf[pos - 1] + t * (cdf[pos] - cdf[pos - 1])
            };
            rows.push(
                Row::check(
                    "k1_oracle_ks",
                    Some(n),
                    ks_one_sample(&x, interp)?,
                    None,
                    Some(oracle_hi),
                )
                .with_samples(x.len()),
            );
        }
        Ok(rows)
    }))
}

fn loop_equation(cfg: &ExperimentConfig, env: &Envelopes) -> Prepared {
    let lg = loggas_block(cfg)?;
    let sizes = cfg.sizes()?;
    let specs = sizes
        .iter()
        .map(|&n| lg.spec(n))
        .collect::<Result<Vec<_>>>()?;
    if specs[0].potential != Potential::Quadratic {
        return Err(spec_err(
            "loop equation check needs the quadratic potential",
        ));
    }
    if cfg.samples < 100 {
        return Err(spec_err(
            "loop equation variance needs at least 100 samples",
        ));
    }
    let z = cfg.z_grid(&[[0.0, 2.0]]);
    if z.iter().any(|z| z.im < 0.5) {
        return Err(spec_err("loop equation check needs Im z >= 0.5"));
    }
    let cfg = cfg.clone();
    let sigmas = env.get("loop_sigmas");
    Ok(Box::new(move || {
        let mut rows = Vec::new();
        for spec in &specs {
            for r in loop_equation_residual(spec, &z, cfg.samples, &size_seed(&cfg, spec.n))? {
                let tag = format!("[z={}{:+}i]", r.z.re, r.z.im);
                let res = r.residual.norm();
                rows.push(
                    Row::check(
                        &format!("loop_residual{tag}"),
                        Some(spec.n),
                        res,
                        None,
                        Some(sigmas * r.stderr),
                    )
                    .with_stderr(r.stderr)
                    .with_samples(cfg.samples),
                );
                rows.push(Row::info(
                    &format!("mbar_minus_m{tag}"),
                    Some(spec.n),
                    (r.mbar - r.m).norm(),
                ));
                rows.push(Row::info(
                    &format!("variance_term{tag}"),
                    Some(spec.n),
                    r.k.norm() / (spec.n as f64).powi(2),
                ));
            }
        }
        Ok(rows)
    }))
}

fn compare(cfg: &ExperimentConfig, env: &Envelopes) -> Prepared {
    let sizes = cfg.sizes()?;
    if sizes.len() < 2 || sizes.iter().any(|&n| !(2..=400).contains(&n)) {
        return Err(spec_err(
            "compare needs an n_sweep of at least two sizes in 2..=400",
        ));
    }
    let z = cfg.z_grid(&[[0.0, 1.0]]);
    let z = match z.as_slice() {
        [z] => *z,
        _ => return Err(spec_err("compare takes a single z")),
    };
    let seeds = cfg.params.seeds.unwrap_or(10);
    if seeds < 2 {
        return Err(spec_err("compare needs at least two seeds"));
    }
    let swap_n = cfg.params.swap_n.unwrap_or(50);
    let swap_samples = cfg.params.swap_samples.unwrap_or(4);
    if !(2..=400).contains(&swap_n) || swap_samples < 2 {
        return Err(spec_err(
            "swap check needs 2 <= swap_n <= 400 and swap_samples >= 2",
        ));
    }
    let ou_t = cfg.params.ou_t.unwrap_or(1e-3);
    let delta = cfg.params.delta.unwrap_or(0.79);
    let cfg = cfg.clone();
    let (tele_hi, alpha) = (env.get("telescoping"), env.get("compare_alpha"));
    Ok(Box::new(move || {
        let v = EntryDistribution::gaussian();
        let four = EntryDistribution::three_point_matched();
        let three = EntryDistribution::bernoulli();
        let seed = cfg.seed();
        let mut rows = Vec::new();
        for (tag, w) in [("four", &four), ("three", &three)] {
            let tr = swap_experiment(
                &v,
                w,
                swap_n,
                z,
                swap_samples,
                Coupling::Quantile,
                &seed.child(&format!("swap/{tag}")),
            )?;
            rows.push(Row::check(
                &format!("telescoping_error_{tag}"),
                Some(swap_n),
                tr.telescoping_error,
                None,
                Some(tele_hi),
            ));
            rows.push(
                Row::info(
                    &format!("swap_difference_{tag}"),
                    Some(swap_n),
                    tr.difference.0,
                )
                .with_stderr(tr.difference.1),
            );
        }
        let x: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
        let mut per_size = vec![(Vec::new(), Vec::new()); sizes.len()];
        let (mut s4, mut s3, mut d) = (Vec::new(), Vec::new(), Vec::new());
        for s in 0..seeds {
            let (mut y4, mut y3) = (Vec::new(), Vec::new());
            for (i, &n) in sizes.iter().enumerate() {
                let base = seed.child(&format!("seed{s}/n{n}"));
                let a =
                    endpoint_difference(&v, &four, n, z, cfg.samples, Coupling::Quantile, &base)?
                        .diff
                        .norm();
                let b =
                    endpoint_difference(&v, &three, n, z, cfg.samples, Coupling::Quantile, &base)?
                        .diff
                        .norm();
                per_size[i].0.push(a);
                per_size[i].1.push(b);
                y4.push(a.ln());
                y3.push(b.ln());
            }
            let (r4, r3) = (
                linear_regression(&x, &y4)?.slope,
                linear_regression(&x, &y3)?.slope,
            );
            s4.push(r4);
            s3.push(r3);
            d.push(r4 - r3);
        }
        for (i, &n) in sizes.iter().enumerate() {
            rows.push(mean_row("abs_diff_four", n, &per_size[i].0));
            rows.push(mean_row("abs_diff_three", n, &per_size[i].1));
        }
        rows.push(
            Row::info("decay_slope_four", None, mean(&s4))
                .with_stderr(std_err(&s4))
                .with_samples(seeds),
        );
        rows.push(
            Row::info("decay_slope_three", None, mean(&s3))
                .with_stderr(std_err(&s3))
                .with_samples(seeds),
        );
        rows.push(
            Row::info("slope_difference", None, mean(&d))
                .with_stderr(std_err(&d))
                .with_samples(seeds),
        );
        rows.push(
            Row::check(
                "slower_decay_pvalue",
                None,
                one_sided_t_pvalue(&d)?,
                Some(alpha),
                None,
            )
            .with_samples(seeds),
        );
        let ou = ou_matching_check(&three, ou_t, 1000, delta)?;
        rows.push(Row::info("ou_fourth_moment_gap", Some(1000), ou.gaps[3]));
        rows.push(Row::info(
            "ou_within_bound",
            Some(1000),
            if ou.within_bound { 1.0 } else { 0.0 },
        ));
        Ok(rows)
    }))
}

fn flucavg(cfg: &ExperimentConfig, env: &Envelopes) -> Prepared {
    let b = block(&cfg.ensemble);
    let sizes = cfg.sizes()?;
    let specs = sizes
        .iter()
        .map(|&n| b.matrix_spec(n))
        .collect::<Result<Vec<_>>>()?;
    let e = cfg.params.energy.unwrap_or(0.0);
    for spec in &specs {
        if eta_for(cfg, spec.n, 0.5) < 1.0 / spec.n as f64 {
            return Err(spec_err("η must be at least 1/N"));
        }
    }
    let cfg = cfg.clone();
    let env = env.clone();
    Ok(Box::new(move || {
        let mut rows = Vec::new();
        let mut records = Vec::new();
        for spec in &specs {
            let n = spec.n;
            let z = Complex64::new(e, eta_for(&cfg, n, 0.5));
            let rec = fluctuation_averaging_report(spec, z, cfg.samples, &size_seed(&cfg, n))?;
            rows.push(
                Row::info("averaged_median", Some(n), median(&rec.averaged))
                    .with_stderr(median_std_err(&rec.averaged)),
            );
            rows.push(
                Row::info("individual_median", Some(n), median(&rec.individual))
                    .with_stderr(median_std_err(&rec.individual)),
            );
            let k = env.get("z_mean_sigmas");
            for (part, vals) in [
                ("re", rec.z_mean.iter().map(|c| c.re).collect::<Vec<_>>()),
                ("im", rec.z_mean.iter().map(|c| c.im).collect()),
            ] {
                let se = std_err(&vals);
                rows.push(
                    Row::check(
                        &format!("z_mean_{part}"),
                        Some(n),
                        mean(&vals),
                        Some(-k * se),
                        Some(k * se),
                    )
                    .with_stderr(se),
                );
            }
            records.push(rec);
        }
        if records.len() >= 2 {
            let (a, b) = fluctuation_averaging_slopes(&records)?;
            let pts = records.len();
            rows.extend(slope_rows(
                "averaged_slope",
                &a,
                pts,
                Some(env.get("averaged_slope_lo")),
                Some(env.get("averaged_slope_hi")),
            ));
            rows.extend(slope_rows(
                "individual_slope",
                &b,
                pts,
                Some(env.get("individual_slope_lo")),
                Some(env.get("individual_slope_hi")),
            ));
        }
        let spec = &specs[0];
        let z = Complex64::new(e, eta_for(&cfg, spec.n, 0.5));
        let h = sample(spec, &cfg.seed().child("schur"))?;
        let mut worst: f64 = 0.0;
        for i in 0..spec.n.min(4) {
            let (g, recon, _) = schur_check(&h.matrix, i, z)?;
            worst = worst.max((g - recon).norm() / g.norm());
        }
        rows.push(Row::check(
            "schur_reconstruction",
            Some(spec.n),
            worst,
            None,
            Some(env.get("schur")),
        ));
        Ok(rows)
    }))
}

/// `(1 - x²)³` on `[-1, 1]` with its first two derivatives; `C²` at the
/// endpoints.
fn bump(x: f64) -> (f64, f64, f64) {
    if x.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let u = 1.0 - x * x;
    (u.powi(3), -6.0 * x * u * u, -6.0 * u * u + 24.0 * x * x * u)
}

fn hs_check(cfg: &ExperimentConfig, env: &Envelopes) -> Prepared {
    let n = cfg.n.unwrap_or(100);
    let spec = block(&cfg.ensemble).matrix_spec(n)?;
    let lambdas = cfg
        .params
        .lambdas
        .clone()
        .unwrap_or_else(|| vec![0.0, 0.3, -0.7]);
    let grid = cfg.params.grid.unwrap_or(400);
    if grid < 20 {
        return Err(spec_err("HS grid must be at least 20"));
    }
    let z = cfg.z_grid(&[[0.0, 1.0], [0.5, 0.1]]);
    if z.iter().any(|z| !(z.im > 0.0)) {
        return Err(spec_err("spectral parameters need Im z > 0"));
    }
    let cfg = cfg.clone();
    let env = env.clone();
    Ok(Box::new(move || {
        let mut rows = Vec::new();
        let res = par_map(lambdas.len(), |k| {
            hs_identity_check(&bump, (-1.0, 1.0), lambdas[k], grid)
        });
        for (l, r) in lambdas.iter().zip(res) {
            rows.push(Row::check(
                &format!("hs_residual[λ={l}]"),
                None,
                r?.residual,
                None,
                Some(env.get("hs_residual")),
            ));
        }
        let outside = hs_identity_check(&bump, (-1.0, 1.0), 5.0, grid)?;
        rows.push(Row::check(
            "hs_outside_support",
            None,
            outside.integral.abs(),
            None,
            Some(env.get("hs_outside")),
        ));
        let zero = hs_identity_check(&|_| (0.0, 0.0, 0.0), (-1.0, 1.0), 0.0, grid)?;
        rows.push(Row::check(
            "hs_zero_function",
            None,
            zero.integral.abs(),
            None,
            Some(0.0),
        ));

        let h = sample(&spec, &cfg.seed().child("matrix"))?;
        let sp = eigen(&h, true)?;
        let g = resolvent(&sp, &z, true)?;
        let ward = (0..z.len())
            .filter_map(|p| g.ward_residual(p))
            .fold(0.0, f64::max);
        rows.push(Row::check(
            "ward_identity",
            Some(n),
            ward,
            None,
            Some(env.get("ward")),
        ));
        rows.push(Row::check(
            "trace_consistency",
            Some(n),
            g.trace_consistency().unwrap_or(f64::NAN),
            None,
            Some(env.get("ward")),
        ));
        let (mut schur, mut interlace): (f64, f64) = (0.0, 0.0);
        for i in 0..n.min(4) {
            for &zz in &z {
                let (gii, recon, _) = schur_check(&h.matrix, i, zz)?;
                schur = schur.max((gii - recon).norm() / gii.norm());
            }
            let minor = minor_resolvent(&h.matrix, i, &z, false)?;
            for (p, zz) in z.iter().enumerate() {
                interlace =
                    interlace.max((g.m_values[p] - minor.m_values[p]).norm() * n as f64 * zz.im);
            }
        }
        rows.push(Row::check(
            "schur_reconstruction",
            Some(n),
            schur,
            None,
            Some(env.get("schur")),
        ));
        rows.push(Row::check(
            "interlacing_constant",
            Some(n),
            interlace,
            None,
            Some(1.0),
        ));
        Ok(rows)
    }))
}
