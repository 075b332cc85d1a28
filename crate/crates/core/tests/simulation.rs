//! Monte Carlo checks against exact laws. Seeds are fixed, so every run
//! sees the same samples.

use std::f64::consts::PI;

use num_complex::Complex64;
use slelab_core::analytic::HitMap;
use slelab_core::experiments::{
    adjacent_intervals, hit_matrices, interior_range, lag_one_checks, marginal_checks, one_interval, scaling_test,
    swallow_time_samples, two_interval, ExperimentConfig,
};
use slelab_core::harmonic::{exit_frequency, hm_strip_bottom, BoundaryLabel, Domain, SamplerConfig};
use slelab_core::loewner::SweepConfig;
use slelab_core::stats::{kolmogorov_q, Estimate, Z99};
use slelab_core::SleParams;
use statrs::distribution::{Continuous, ContinuousCDF, Gamma};
use statrs::function::gamma::gamma_ur;

fn kappa6() -> SleParams {
    SleParams::for_hitting(6.0).unwrap()
}

/// `T_x = x^2 / (2 Z)` with `Z ~ Gamma(1/2 - a)`, so
/// `P(T_x <= t) = Q(1/2 - a, x^2 / (2t))`.
fn exact_cdf(a: f64, x: f64, t: f64) -> f64 {
    gamma_ur(0.5 - a, x * x / (2.0 * t))
}

/// One-sample Kolmogorov-Smirnov p-value against a continuous CDF.
fn ks_one_sample(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    kolmogorov_q((n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d)
}

#[test]
fn confidence_intervals_cover_the_exact_value() {
    let (y, x) = (0.3, 0.9);
    let mut covered = 0;
    let mut exact = 0.0;
    for campaign in 0..100 {
        let cfg = ExperimentConfig::new(6.0, 200, 1000 + campaign);
        let out = one_interval(&cfg, y, x).unwrap();
        exact = out.exact;
        covered += usize::from(out.estimate.covers(out.exact));
    }
    println!("99% intervals covering F({}) = {exact:.5}: {covered}/100", y / x);
    assert!(covered >= 95);
}

#[test]
fn swallow_time_follows_the_exact_law() {
    let params = kappa6();
    for (x, seed) in [(1.0, 3), (0.5, 4)] {
        let samples: Vec<f64> = swallow_time_samples(&params, x, 5000, seed, SweepConfig::default())
            .unwrap()
            .into_iter()
            .map(|t| t.expect("uncensored"))
            .collect();
        let p = ks_one_sample(samples, |t| exact_cdf(params.a, x, t));
        println!("T_{x} against the exact law: p = {p:.4}");
        assert!(p > 0.01);
    }
}

#[test]
fn median_is_stable_under_step_refinement() {
    let params = kappa6();
    let median = |rel_step: f64| {
        let sweep = SweepConfig { rel_step, ..Default::default() };
        let mut v: Vec<f64> = swallow_time_samples(&params, 1.0, 10_000, 21, sweep)
            .unwrap()
            .into_iter()
            .flatten()
            .collect();
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let coarse = median(0.02);
    let fine = median(0.002);
    let law = Gamma::new(0.5 - params.a, 1.0).unwrap();
    let z = law.inverse_cdf(0.5);
    let exact = 1.0 / (2.0 * z);
    // standard error of a sample median, 1 / (2 f(m) sqrt(n)), from the
    // exact density of T_1 at its median
    let density = law.pdf(z) * 2.0 * z * z;
    let se = 1.0 / (2.0 * density * 100.0);
    println!(
        "median T_1: coarse {coarse:.3}, fine {fine:.3}, exact {exact:.3}, se {se:.3} ({:.1}%)",
        100.0 * se / exact
    );
    // the two runs are not coupled, so their difference carries the noise
    // of both medians; a 2% agreement would need far more samples
    assert!((coarse - fine).abs() <= 3.0 * 2f64.sqrt() * se);
    assert!((coarse - exact).abs() <= 3.0 * se);
    assert!((fine - exact).abs() <= 3.0 * se);
}

#[test]
fn scaling_in_law() {
    let params = kappa6();
    let same = scaling_test(&params, 1.0, 500, 8, 8, SweepConfig::default()).unwrap();
    assert_eq!(same.ks.statistic, 0.0);
    let double = scaling_test(&params, 2.0, 2000, 9, 10, SweepConfig::default()).unwrap();
    println!("T_2 against 4 T_1: D = {:.4}, p = {:.4}", double.ks.statistic, double.ks.p_value);
    assert!(double.ks.p_value > 0.01);
}

#[test]
fn hit_probability_grows_with_kappa() {
    let (y, x) = (0.4, 0.8);
    let five = one_interval(&ExperimentConfig::new(5.0, 4000, 2), y, x).unwrap();
    let seven = one_interval(&ExperimentConfig::new(7.0, 4000, 2), y, x).unwrap();
    assert!(seven.exact > five.exact);
    assert!(seven.estimate.value > five.estimate.value);
    for r in [&five, &seven] {
        assert!(r.estimate.within_sigmas(r.exact, 3.0), "{:?} vs {}", r.estimate, r.exact);
    }
    let point = one_interval(&ExperimentConfig::new(6.0, 100, 1), 0.5, 0.5).unwrap();
    assert_eq!((point.estimate.value, point.estimate.stderr), (0.0, 0.0));
}

#[test]
fn adjacent_pair_matches_its_closed_form() {
    let out = adjacent_intervals(&ExperimentConfig::new(6.0, 20_000, 12), 0.4, 0.55, 0.7).unwrap();
    println!("adjacent: {:.4} +- {:.4}, exact {:.4}", out.estimate.value, out.estimate.stderr, out.exact);
    assert!(out.estimate.within_sigmas(out.exact, 3.0));
}

#[test]
fn doubling_the_separation() {
    let params = kappa6();
    let mut cfg = ExperimentConfig::new(6.0, 10_000, 31);
    cfg.delta = 0.2;
    let eps = 1.0 / 32.0;
    let near = two_interval(&cfg, 0.375, 0.5, eps).unwrap().estimate;
    let far = two_interval(&cfg.with_seed(32), 0.375, 0.625, eps).unwrap().estimate;
    let ratio = far.value / near.value;
    let rel = ((near.stderr / near.value).powi(2) + (far.stderr / far.value).powi(2)).sqrt();
    let predicted = 2f64.powf(1.0 - 4.0 * params.a);
    println!("separation doubled: ratio {ratio:.4} +- {:.4}, predicted {predicted:.4}", ratio * rel);
    assert!((ratio - predicted).abs() <= Z99 * ratio * rel);
}

#[test]
fn level_eight_marginals() {
    let params = kappa6();
    let mut cfg = ExperimentConfig::new(6.0, 600, 77);
    cfg.level = 8;
    let mats = hit_matrices(&cfg).unwrap();
    let delta = 0.25;

    // P(D_k^n) >= C1 2^-(1-s)n with C1 read off the exact marginals
    let h = HitMap::for_params(&params).unwrap();
    let n = 8;
    let scale = 2f64.powf(-(1.0 - params.s) * f64::from(n));
    let (k_lo, k_hi) = interior_range(n, delta);
    let c1 = (k_lo..=k_hi)
        .map(|k| h.f_real((k - 1) as f64 / k as f64).unwrap() / scale)
        .fold(f64::INFINITY, f64::min);
    let marg = marginal_checks(&mats, &params, delta).unwrap();
    let below = marg.iter().filter(|c| c.estimate.ci_hi < c1 * scale).count();
    println!("C1 = {c1:.4}; cells significantly below the bound: {below}/{}", marg.len());
    assert_eq!(below, 0);

    let off = |cs: &[slelab_core::experiments::CellCheck]| {
        cs.iter().filter(|c| !c.estimate.within_sigmas(c.exact, 3.0) && c.estimate.stderr > 0.0).count()
    };
    let marg_off = off(&marg);
    let lag1 = lag_one_checks(&mats, &params, delta).unwrap();
    let lag_off = off(&lag1);
    println!("outside 3 sigma: marginals {marg_off}/{}, lag one {lag_off}/{}", marg.len(), lag1.len());
    // about 0.3% of cells are expected outside 3 sigma by chance
    assert!(marg_off * 50 <= marg.len());
    assert!(lag_off * 50 <= lag1.len());

    // the interior hit count of each matrix, against the sum of exact marginals
    let ks: Vec<usize> = marg.iter().map(|c| c.k).collect();
    let counts: Vec<f64> = mats.iter().map(|m| ks.iter().filter(|&&k| m.bit(k)).count() as f64).collect();
    let pooled = Estimate::mean(&counts).unwrap();
    let exact: f64 = marg.iter().map(|c| c.exact).sum();
    println!("interior hits per curve: {:.3} +- {:.3}, exact {exact:.3}", pooled.value, pooled.stderr);
    assert!(pooled.within_sigmas(exact, 3.0));
}

#[test]
fn exit_frequencies() {
    let cfg = SamplerConfig::default();
    let n = 20_000;
    let sd = |p: f64| (p * (1.0 - p) / n as f64).sqrt();

    let strip = exit_frequency(Domain::Strip, Complex64::new(0.0, PI / 4.0), &cfg, n, 5, |s| {
        s.label == BoundaryLabel::Bottom
    })
    .unwrap() as f64
        / n as f64;
    let exact = hm_strip_bottom(PI / 4.0).unwrap();
    println!("strip bottom from i pi/4: {strip:.4} vs {exact}");
    assert!((strip - exact).abs() <= 3.0 * sd(exact));

    // a slit can only help the walk reach the real line or the slit itself
    let slit = exit_frequency(
        Domain::StripWithSlit { phi: PI / 2.0 },
        Complex64::new(0.0, PI / 4.0) + Complex64::new(0.3, 0.0),
        &cfg,
        n,
        6,
        |s| s.label != BoundaryLabel::Top,
    )
    .unwrap() as f64
        / n as f64;
    println!("slit strip, exit on R or slit: {slit:.4} >= 3/4");
    assert!(slit >= 0.75 - 3.0 * sd(0.75));
}
