//! Acceptance suite.
//!
//! Each test exercises one release criterion end to end at its stated
//! tolerance and prints a single pass/fail line (visible with
//! `cargo test --test acceptance -- --nocapture`). The Monte Carlo
//! criteria are property checks at desk scale with pinned seeds, not
//! reproductions of tabulated numbers.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use sampden::estimators::{
    DomainBox, EstimatorKind, FrequencyPolygonEstimate, HistogramEstimate,
};
use sampden::grid::{BinIndex, Partition};
use sampden::processes::{OuModel, ProcessModel};
use sampden::risk::{
    exact_isb, pointwise_variance_scaled, RateExperiment, RiskConfig, SchemeRule,
};
use sampden::sampling::{delta_star, SamplePlan, SamplingScheme};
use sampden::theory::{
    c_gamma0, fit_rate, mise_upper_bound, optimal_c, slack_constant_c, slope_window,
    tn_rate_class, MixingProfile,
};

const SQRT_PI: f64 = 1.772_453_850_905_516;

fn report(criterion: &str, pass: bool, elapsed: Duration, detail: &str) {
    println!(
        "criterion {criterion}: {} [{elapsed:.2?}] {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn std_ou() -> ProcessModel {
    ProcessModel::Ou(OuModel::standard(1))
}

fn run_sweep_slope(
    model: ProcessModel,
    scheme: SchemeRule,
    estimator: EstimatorKind,
    n_grid: Vec<usize>,
    replications: usize,
    seed: u64,
) -> (sampden::theory::RateFit, Vec<sampden::risk::SweepRow>) {
    let dim = model.dim();
    let roughness = match estimator {
        EstimatorKind::Histogram => model.roughness_grad().unwrap(),
        EstimatorKind::FrequencyPolygon => model.roughness_hess().unwrap(),
    };
    let c = optimal_c(estimator, dim, roughness, 0.0).unwrap();
    let experiment = RateExperiment {
        model,
        scheme,
        estimator,
        n_grid,
        bandwidth_c: c,
        bandwidth_exp: None,
        replications,
        base_seed: seed,
        quad_order: 5,
        domain_sds: 8.0,
    };
    let rows = experiment.run().unwrap();
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.report.mise)).collect();
    (fit_rate(&points).unwrap(), rows)
}

#[test]
fn criterion_01_normalization() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA1);
    let mut worst = 0.0f64;
    for trial in 0..1000 {
        let h = rng.random_range(0.01..=1.0);
        let n = rng.random_range(10..=10_000);
        let scale = rng.random_range(0.5..3.0);
        let partition = Partition::univariate(h).unwrap();
        let samples: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                scale * z
            })
            .collect();
        let integral = if trial % 2 == 0 {
            HistogramEstimate::fit(&partition, &samples).unwrap().integral()
        } else {
            FrequencyPolygonEstimate::fit(&partition, &samples).unwrap().integral()
        };
        worst = worst.max((integral - 1.0).abs());
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-12 && elapsed < Duration::from_secs(10);
    report(
        "1 (normalization suite)",
        pass,
        elapsed,
        &format!("worst |integral - 1| = {worst:.3e} over 1000 fits"),
    );
}

#[test]
fn criterion_02_histogram_bias_constant() {
    let start = Instant::now();
    let model = std_ou();
    let domain = DomainBox::centered(&[8.0]).unwrap();
    let h = 0.05;
    let isb = exact_isb(
        EstimatorKind::Histogram,
        &model,
        &Partition::univariate(h).unwrap(),
        &domain,
        5,
    )
    .unwrap();
    let isb_half = exact_isb(
        EstimatorKind::Histogram,
        &model,
        &Partition::univariate(h / 2.0).unwrap(),
        &domain,
        5,
    )
    .unwrap();
    let leading = h * h / 12.0 * (1.0 / (4.0 * SQRT_PI));
    let rel = (isb - leading).abs() / leading;
    let ratio = isb / isb_half;
    let elapsed = start.elapsed();
    let pass = rel <= 0.05 && (3.8..=4.2).contains(&ratio) && elapsed < Duration::from_secs(5);
    report(
        "2 (histogram bias constant)",
        pass,
        elapsed,
        &format!("isb = {isb:.6e} vs h^2/12 R(f') = {leading:.6e} (rel {rel:.2e}), halving ratio {ratio:.4}"),
    );
}

#[test]
fn criterion_03_fp_bias_constant() {
    let start = Instant::now();
    let model = std_ou();
    let domain = DomainBox::centered(&[8.0]).unwrap();
    let h = 0.3;
    let isb = exact_isb(
        EstimatorKind::FrequencyPolygon,
        &model,
        &Partition::univariate(h).unwrap(),
        &domain,
        5,
    )
    .unwrap();
    let isb_half = exact_isb(
        EstimatorKind::FrequencyPolygon,
        &model,
        &Partition::univariate(h / 2.0).unwrap(),
        &domain,
        5,
    )
    .unwrap();
    let leading = 49.0 / 2880.0 * (3.0 / (8.0 * SQRT_PI)) * h.powi(4);
    let rel = (isb - leading).abs() / leading;
    let ratio = isb / isb_half;
    let elapsed = start.elapsed();
    let pass = rel <= 0.10 && (14.0..=18.0).contains(&ratio) && elapsed < Duration::from_secs(5);
    report(
        "3 (frequency polygon bias constant)",
        pass,
        elapsed,
        &format!("isb = {isb:.6e} vs 49/2880 R(f'') h^4 = {leading:.6e} (rel {rel:.2e}), halving ratio {ratio:.3}"),
    );
}

#[test]
fn criterion_04_histogram_rate_renewal() {
    let start = Instant::now();
    let (fit, _) = run_sweep_slope(
        std_ou(),
        SchemeRule::Fixed(SamplingScheme::renewal(1, 5.0).unwrap()),
        EstimatorKind::Histogram,
        vec![1 << 10, 1 << 12, 1 << 14, 1 << 16],
        200,
        0xA4,
    );
    let (lo, hi) = slope_window(EstimatorKind::Histogram, 1).unwrap();
    let elapsed = start.elapsed();
    let pass = (lo..=hi).contains(&fit.slope) && elapsed < Duration::from_secs(180);
    report(
        "4 (histogram rate, renewal)",
        pass,
        elapsed,
        &format!("slope = {:.4} +- {:.4}, window [{lo}, {hi}]", fit.slope, fit.slope_stderr),
    );
}

#[test]
fn criterion_05_fp_rate_renewal() {
    let start = Instant::now();
    let (fit, _) = run_sweep_slope(
        std_ou(),
        SchemeRule::Fixed(SamplingScheme::renewal(1, 5.0).unwrap()),
        EstimatorKind::FrequencyPolygon,
        vec![1 << 10, 1 << 12, 1 << 14, 1 << 16],
        200,
        0xA5,
    );
    let (lo, hi) = slope_window(EstimatorKind::FrequencyPolygon, 1).unwrap();
    let elapsed = start.elapsed();
    let pass = (lo..=hi).contains(&fit.slope) && elapsed < Duration::from_secs(180);
    report(
        "5 (frequency polygon rate, renewal)",
        pass,
        elapsed,
        &format!("slope = {:.4} +- {:.4}, window [{lo}, {hi}]", fit.slope, fit.slope_stderr),
    );
}

#[test]
fn criterion_06_high_frequency_admissible() {
    let start = Instant::now();
    let (fit, rows) = run_sweep_slope(
        std_ou(),
        SchemeRule::MinimalStep { d1: 1.0, d2: 1.0, d3: 1.0 },
        EstimatorKind::Histogram,
        vec![1 << 12, 1 << 14, 1 << 16, 1 << 18],
        200,
        0xA6,
    );
    let (lo, hi) = slope_window(EstimatorKind::Histogram, 1).unwrap();
    // bounded MISE * T_n across the grid is the O(1/T) signature
    let scaled: Vec<f64> = rows
        .iter()
        .map(|r| r.report.mise * r.n as f64 * r.delta_n.expect("high-frequency step"))
        .collect();
    let spread = scaled.iter().cloned().fold(0.0f64, f64::max)
        / scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let elapsed = start.elapsed();
    let pass =
        (lo..=hi).contains(&fit.slope) && spread <= 2.5 && elapsed < Duration::from_secs(300);
    report(
        "6 (high-frequency admissible step)",
        pass,
        elapsed,
        &format!(
            "slope = {:.4} +- {:.4} in [{lo}, {hi}]; MISE*T spread max/min = {spread:.3}",
            fit.slope, fit.slope_stderr
        ),
    );
}

#[test]
fn criterion_07_histogram_rate_jittered() {
    let start = Instant::now();
    let (fit, _) = run_sweep_slope(
        std_ou(),
        SchemeRule::Fixed(SamplingScheme::jittered(5.0).unwrap()),
        EstimatorKind::Histogram,
        vec![1 << 10, 1 << 12, 1 << 14, 1 << 16],
        200,
        0xA7,
    );
    let (lo, hi) = slope_window(EstimatorKind::Histogram, 1).unwrap();
    let elapsed = start.elapsed();
    let pass = (lo..=hi).contains(&fit.slope) && elapsed < Duration::from_secs(180);
    report(
        "7 (histogram rate, jittered)",
        pass,
        elapsed,
        &format!("slope = {:.4} +- {:.4}, window [{lo}, {hi}]", fit.slope, fit.slope_stderr),
    );
}

fn pointwise_limit_check(criterion: &str, kind: EstimatorKind, seed: u64) {
    let start = Instant::now();
    let model = std_ou();
    let n = 1usize << 20;
    let h = (n as f64).powf(-0.2);
    let delta_n = h * h;
    let mut cfg = RiskConfig::new(
        model.clone(),
        SamplingScheme::high_frequency(delta_n).unwrap(),
        kind,
        n,
        h,
        500,
        seed,
    );
    cfg.quad_order = 5;
    let outcome = pointwise_variance_scaled(&cfg, &[0.0]).unwrap();
    let limit = 2.0 * model.integrated_g(&[0.0]).unwrap();
    let rel = (outcome.scaled_variance - limit).abs() / limit;
    let elapsed = start.elapsed();
    let pass = rel <= 0.20 && elapsed < Duration::from_secs(300);
    report(
        criterion,
        pass,
        elapsed,
        &format!(
            "T Var(fhat(0)) = {:.5} vs 2 int g = {limit:.5} (rel {rel:.3})",
            outcome.scaled_variance
        ),
    );
}

#[test]
fn criterion_08a_pointwise_limit_histogram() {
    pointwise_limit_check("8a (pointwise variance limit, histogram)", EstimatorKind::Histogram, 0xA8);
}

#[test]
fn criterion_08b_pointwise_limit_fp() {
    pointwise_limit_check(
        "8b (pointwise variance limit, frequency polygon)",
        EstimatorKind::FrequencyPolygon,
        0xA9,
    );
}

#[test]
fn criterion_09_histogram_rate_two_dimensional() {
    let start = Instant::now();
    let (fit, _) = run_sweep_slope(
        ProcessModel::Ou(OuModel::standard(2)),
        SchemeRule::Fixed(SamplingScheme::renewal(1, 5.0).unwrap()),
        EstimatorKind::Histogram,
        vec![1 << 12, 1 << 14, 1 << 16],
        100,
        0xB2,
    );
    let (lo, hi) = slope_window(EstimatorKind::Histogram, 2).unwrap();
    let elapsed = start.elapsed();
    let pass = (lo..=hi).contains(&fit.slope) && elapsed < Duration::from_secs(300);
    report(
        "9 (histogram rate, d = 2)",
        pass,
        elapsed,
        &format!("slope = {:.4} +- {:.4}, window [{lo}, {hi}]", fit.slope, fit.slope_stderr),
    );
}

#[test]
fn criterion_10_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xB3);
    // histogram counts against an edge-comparison tally
    for _ in 0..100 {
        let h = rng.random_range(0.05..0.8);
        let origin = rng.random_range(-0.5..0.5);
        let partition = Partition::new(1, h, vec![origin]).unwrap();
        let n = rng.random_range(1..=100);
        let samples: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                2.0 * z
            })
            .collect();
        let est = HistogramEstimate::fit(&partition, &samples).unwrap();
        let mut brute: HashMap<i64, u64> = HashMap::new();
        for &x in &samples {
            let mut cell = None;
            for j in -600..600i64 {
                if origin + j as f64 * h <= x && x < origin + (j + 1) as f64 * h {
                    cell = Some(j);
                    break;
                }
            }
            *brute.entry(cell.expect("sample inside scan window")).or_insert(0) += 1;
        }
        assert_eq!(est.sorted_counts().len(), brute.len());
        for (j, count) in brute {
            assert_eq!(est.count(&BinIndex(vec![j])), count, "cell {j}");
        }
    }
    // frequency polygon evaluation against the interpolation formula
    let mut worst_rel = 0.0f64;
    let h = 0.31;
    let partition = Partition::univariate(h).unwrap();
    let samples: Vec<f64> = (0..80)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z
        })
        .collect();
    let fp = FrequencyPolygonEstimate::fit(&partition, &samples).unwrap();
    for _ in 0..1000 {
        let x = rng.random_range(-4.0..4.0);
        // direct formula: scan for the segment with c_j <= x < c_{j+1}
        let mut direct = None;
        for j in -40..40i64 {
            let c_j = (j as f64 + 0.5) * h;
            let c_j1 = (j as f64 + 1.5) * h;
            if c_j <= x && x < c_j1 {
                let f_j = fp.base().count(&BinIndex(vec![j])) as f64 / (80.0 * h);
                let f_j1 = fp.base().count(&BinIndex(vec![j + 1])) as f64 / (80.0 * h);
                direct = Some(((x - c_j) / h) * f_j1 + ((c_j1 - x) / h) * f_j);
                break;
            }
        }
        let direct = direct.expect("segment inside scan window");
        let got = fp.eval(x);
        let denom = direct.abs().max(1e-300);
        if direct == 0.0 {
            assert_eq!(got, 0.0, "x = {x}");
        } else {
            worst_rel = worst_rel.max((got - direct).abs() / denom);
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_rel <= 1e-14 && elapsed < Duration::from_secs(5);
    report(
        "10 (oracle equivalence)",
        pass,
        elapsed,
        &format!("counts exact on 100 instances; worst FP formula deviation {worst_rel:.2e}"),
    );
}

#[test]
fn criterion_11_formula_suite() {
    let start = Instant::now();
    let profile = MixingProfile {
        u0: 1.0,
        u1: 2.0,
        a0: 1.0,
        rho: 3.0,
        h0: 0.5,
        norm_k: 1.0,
        norm_phi: 1.0,
        f_sup: 0.4,
        pi_sup_on_band: 0.1,
        pi_tail: 0.05,
    };
    // design constants
    let renewal = SamplingScheme::renewal(1, 5.0).unwrap();
    assert_eq!(slack_constant_c(&renewal, &profile).unwrap(), 1.0);
    assert_eq!(
        slack_constant_c(&SamplingScheme::jittered(0.4).unwrap(), &profile).unwrap(),
        6.0
    );
    assert_eq!(
        slack_constant_c(&SamplingScheme::jittered(1.0).unwrap(), &profile).unwrap(),
        2.0
    );
    // high-frequency slack constants
    assert_eq!(c_gamma0(&profile, 1.0, None, Some(2.0), None).unwrap(), 1.0);
    assert_eq!(c_gamma0(&profile, 2.0, None, None, Some(1.0)).unwrap(), 4.0);
    let v = c_gamma0(&profile, 0.5, Some(1.0), None, None).unwrap();
    assert!((v - 5.1).abs() < 1e-12, "{v}");
    // minimal step
    let plan = |gamma0: f64, h: f64| SamplePlan {
        gamma0,
        dim: 1,
        bin_width: h,
        d1: 1.0,
        d2: 1.0,
        d3: 1.0,
        n: 1,
    };
    assert!((delta_star(&plan(0.5, 0.1)).unwrap() - 0.1).abs() < 1e-15);
    assert!((delta_star(&plan(1.0, 0.1)).unwrap() - 0.1 * 10f64.ln()).abs() < 1e-15);
    assert!((delta_star(&plan(2.0, 0.1)).unwrap() - 0.1f64.sqrt()).abs() < 1e-15);
    // optimal bandwidth constants against a golden-section search
    let golden_min = |f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64| {
        let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let c = b - inv_phi * (b - a);
            let d = a + inv_phi * (b - a);
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        0.5 * (a + b)
    };
    let r_grad = 1.0 / (4.0 * SQRT_PI);
    let c_hist = optimal_c(EstimatorKind::Histogram, 1, r_grad, 0.0).unwrap();
    let oracle = golden_min(
        &|c| mise_upper_bound(EstimatorKind::Histogram, c, 1, r_grad, 0.0),
        0.1,
        30.0,
    );
    assert!((c_hist - oracle).abs() <= 1e-6 * c_hist);
    assert!((c_hist - (6.0 / r_grad).powf(1.0 / 3.0)).abs() < 1e-12);
    let r_hess = 3.0 / (8.0 * SQRT_PI);
    let c_fp = optimal_c(EstimatorKind::FrequencyPolygon, 1, r_hess, 0.0).unwrap();
    let oracle = golden_min(
        &|c| mise_upper_bound(EstimatorKind::FrequencyPolygon, c, 1, r_hess, 0.0),
        0.1,
        30.0,
    );
    assert!((c_fp - oracle).abs() <= 1e-6 * c_fp);
    // T_n rate classes
    let r = tn_rate_class(0.5, 1).unwrap();
    assert!(r.exponent == -1.0 && !r.log_factor);
    let r = tn_rate_class(1.0, 1).unwrap();
    assert!(r.exponent == -1.0 && r.log_factor);
    let r = tn_rate_class(2.0, 1).unwrap();
    assert!((r.exponent + 0.8).abs() < 1e-15 && !r.log_factor);
    let elapsed = start.elapsed();
    let pass = elapsed < Duration::from_secs(1);
    report(
        "11 (formula suite)",
        pass,
        elapsed,
        &format!("design constants, minimal steps, c* = ({c_hist:.4}, {c_fp:.4}), rate classes"),
    );
}
