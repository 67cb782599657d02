//! Integrated squared bias, integrated variance, and MISE.
//!
//! The decomposition `MISE = ISB + IV` is computed with the bias side
//! exact: expected cell heights come from the model's per-axis CDF, so the
//! integrated squared bias involves no Monte Carlo at all. The variance
//! side is simulated, with the exact expectation inside the integrand
//! (`int (fhat - E fhat)^2`), which keeps the decomposition identity free
//! of plug-in bias.
//!
//! Replications are independent, seeded as `base_seed XOR replication
//! index`, and may run in parallel; per-replication values are accumulated
//! in index order, so reports are schedule-independent and bit-exactly
//! reproducible.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{
    for_each_box, l2_distance_sq, tensor_integrate, DomainBox, Estimate, EstimatorKind,
    HistogramEstimate,
};
use crate::grid::Partition;
use crate::processes::ProcessModel;
use crate::quad::GaussLegendre;
use crate::sampling::{delta_star, derive_seed, draw_times, SamplePlan, SamplingScheme};
use crate::theory::bandwidth_exponent;

const TIMES_STREAM: u64 = 0x74;
const PATH_STREAM: u64 = 0x70;

/// One Monte Carlo risk measurement: a model observed under a sampling
/// design, an estimator, and the experiment sizes.
#[derive(Debug, Clone)]
pub struct RiskConfig {
    pub model: ProcessModel,
    pub scheme: SamplingScheme,
    pub estimator: EstimatorKind,
    pub n: usize,
    pub bin_width: f64,
    pub replications: usize,
    pub base_seed: u64,
    pub quad_order: usize,
    /// Domain half-width per axis, in units of the marginal standard
    /// deviation. The mass beyond the default 8 is far below every
    /// tolerance in use.
    pub domain_sds: f64,
}

impl RiskConfig {
    pub fn new(
        model: ProcessModel,
        scheme: SamplingScheme,
        estimator: EstimatorKind,
        n: usize,
        bin_width: f64,
        replications: usize,
        base_seed: u64,
    ) -> Self {
        RiskConfig {
            model,
            scheme,
            estimator,
            n,
            bin_width,
            replications,
            base_seed,
            quad_order: 5,
            domain_sds: 8.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("a risk run needs n >= 2"));
        }
        if self.replications < 2 {
            return Err(Error::invalid("a risk run needs at least 2 replications"));
        }
        if !(self.bin_width.is_finite() && self.bin_width > 0.0) {
            return Err(Error::invalid("bin width must be positive"));
        }
        if !(self.domain_sds.is_finite() && self.domain_sds > 0.0) {
            return Err(Error::invalid("domain width must be positive"));
        }
        Ok(())
    }

    pub fn partition(&self) -> Result<Partition> {
        Partition::anchored_at_zero(self.model.dim(), self.bin_width)
    }

    pub fn domain(&self) -> Result<DomainBox> {
        let widths: Vec<f64> = (0..self.model.dim())
            .map(|k| self.domain_sds * self.model.axis_sd(k))
            .collect();
        DomainBox::centered(&widths)
    }
}

/// Outcome of a single replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replication {
    pub rep: usize,
    pub seed: u64,
    /// Integrated squared error of the fitted estimate against `f`.
    pub l2: f64,
    /// Integrated squared deviation from the exact expected estimate.
    pub iv_term: f64,
}

/// Aggregated risk measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub mise: f64,
    pub mise_stderr: f64,
    pub isb_exact: f64,
    pub iv_mc: f64,
    pub replications: Vec<Replication>,
}

impl RiskReport {
    /// CSV rendering: one summary row, and per-replication rows when
    /// requested. Values carry 17 significant digits.
    pub fn to_csv(&self, include_replications: bool) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("mise,mise_stderr,isb_exact,iv_mc,replications\n");
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{}",
            self.mise,
            self.mise_stderr,
            self.isb_exact,
            self.iv_mc,
            self.replications.len()
        )
        .unwrap();
        if include_replications {
            out.push_str("rep,seed,l2,iv_term\n");
            for rep in &self.replications {
                writeln!(out, "{},{},{:.16e},{:.16e}", rep.rep, rep.seed, rep.l2, rep.iv_term)
                    .unwrap();
            }
        }
        out
    }
}

/// Expected cell heights of an estimator over an index box, from the
/// model's exact CDF.
struct ExpectedHeights {
    lo: Vec<i64>,
    hi: Vec<i64>,
    values: Vec<f64>,
}

impl ExpectedHeights {
    fn index_of(&self, j: &[i64]) -> usize {
        let mut idx = 0usize;
        for ((&jk, &lo), &hi) in j.iter().zip(&self.lo).zip(&self.hi) {
            let width = (hi - lo + 1) as usize;
            idx = idx * width + (jk - lo) as usize;
        }
        idx
    }

    fn get(&self, j: &[i64]) -> f64 {
        self.values[self.index_of(j)]
    }
}

/// Probability that one observation falls in cell `j`.
fn cell_probability(model: &ProcessModel, partition: &Partition, j: &[i64]) -> f64 {
    let mut p = 1.0;
    for (k, &jk) in j.iter().enumerate() {
        let (lo, hi) = partition.axis_edges(k, jk);
        p *= model.axis_interval_prob(k, lo, hi);
    }
    p
}

/// Index box of partition cells meeting the domain.
fn domain_cell_box(partition: &Partition, domain: &DomainBox) -> Result<(Vec<i64>, Vec<i64>)> {
    let d = partition.dim();
    let mut lo = Vec::with_capacity(d);
    let mut hi = Vec::with_capacity(d);
    for k in 0..d {
        lo.push(partition.axis_bin(k, domain.lo()[k])?);
        hi.push(partition.axis_bin(k, domain.hi()[k])?);
    }
    Ok((lo, hi))
}

fn expected_histogram_heights(
    model: &ProcessModel,
    partition: &Partition,
    domain: &DomainBox,
) -> Result<ExpectedHeights> {
    let (lo, hi) = domain_cell_box(partition, domain)?;
    let len: usize = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| (b - a + 1) as usize)
        .product();
    let mut values = Vec::with_capacity(len);
    let volume = partition.cell_volume();
    for_each_box(&lo, &hi, |j| {
        values.push(cell_probability(model, partition, j) / volume);
        Ok(())
    })?;
    Ok(ExpectedHeights { lo, hi, values })
}

/// Expected polygon heights at cell centers for segments `seg_lo..=seg_hi`;
/// entry `i` is the height at center `seg_lo + i`.
fn expected_fp_heights(
    model: &ProcessModel,
    partition: &Partition,
    seg_lo: i64,
    seg_hi: i64,
) -> Vec<f64> {
    let h = partition.bin_width();
    (seg_lo..=seg_hi + 1)
        .map(|j| {
            let (a, b) = partition.axis_edges(0, j);
            model.axis_interval_prob(0, a, b) / h
        })
        .collect()
}

/// The exact expectation of a fitted estimator over the domain, matching
/// the estimator's cell geometry.
enum ExpectedEstimate {
    Histogram(ExpectedHeights),
    FrequencyPolygon { seg_lo: i64, heights: Vec<f64> },
}

impl ExpectedEstimate {
    fn build(
        kind: EstimatorKind,
        model: &ProcessModel,
        partition: &Partition,
        domain: &DomainBox,
    ) -> Result<Self> {
        match kind {
            EstimatorKind::Histogram => Ok(ExpectedEstimate::Histogram(
                expected_histogram_heights(model, partition, domain)?,
            )),
            EstimatorKind::FrequencyPolygon => {
                let half = 0.5 * partition.bin_width();
                let seg_lo = partition.axis_bin(0, domain.lo()[0] - half)?;
                let seg_hi = partition.axis_bin(0, domain.hi()[0] - half)?;
                Ok(ExpectedEstimate::FrequencyPolygon {
                    seg_lo,
                    heights: expected_fp_heights(model, partition, seg_lo, seg_hi),
                })
            }
        }
    }
}

/// Exact integrated squared bias of the estimator over the domain.
///
/// The expected histogram height over a cell is the exact cell probability
/// divided by the cell volume; the expected polygon interpolates those
/// heights at the centers. The squared difference from `f` is integrated
/// per cell by Gauss-Legendre quadrature, with boundary cells clipped.
pub fn exact_isb(
    kind: EstimatorKind,
    model: &ProcessModel,
    partition: &Partition,
    domain: &DomainBox,
    quad_order: usize,
) -> Result<f64> {
    let d = partition.dim();
    if model.dim() != d || domain.dim() != d {
        return Err(Error::invalid("model, partition and domain dimensions must agree"));
    }
    let gl = GaussLegendre::new(quad_order)?;
    match kind {
        EstimatorKind::Histogram => {
            let expected = expected_histogram_heights(model, partition, domain)?;
            let mut total = 0.0;
            for_each_box(&expected.lo.clone(), &expected.hi.clone(), |j| {
                let mut cell_lo = Vec::with_capacity(d);
                let mut cell_hi = Vec::with_capacity(d);
                for (k, &jk) in j.iter().enumerate() {
                    let (a, b) = partition.axis_edges(k, jk);
                    cell_lo.push(a.max(domain.lo()[k]));
                    cell_hi.push(b.min(domain.hi()[k]));
                }
                if (0..d).any(|k| cell_lo[k] >= cell_hi[k]) {
                    return Ok(());
                }
                let height = expected.get(j);
                total += tensor_integrate(&gl, &cell_lo, &cell_hi, &mut |x| {
                    let diff = height - model.marginal_density(x);
                    diff * diff
                });
                Ok(())
            })?;
            Ok(total)
        }
        EstimatorKind::FrequencyPolygon => {
            if d != 1 {
                return Err(Error::Unsupported(
                    "frequency polygons are defined for dimension 1 only".into(),
                ));
            }
            let h = partition.bin_width();
            let half = 0.5 * h;
            let seg_lo = partition.axis_bin(0, domain.lo()[0] - half)?;
            let seg_hi = partition.axis_bin(0, domain.hi()[0] - half)?;
            let heights = expected_fp_heights(model, partition, seg_lo, seg_hi);
            let mut total = 0.0;
            for (i, j) in (seg_lo..=seg_hi).enumerate() {
                let c_j = partition.axis_center(0, j);
                let a = c_j.max(domain.lo()[0]);
                let b = (c_j + h).min(domain.hi()[0]);
                if a >= b {
                    continue;
                }
                let y0 = heights[i];
                let y1 = heights[i + 1];
                total += gl.integrate(a, b, |x| {
                    let v = y0 + (y1 - y0) * (x - c_j) / h;
                    let diff = v - model.marginal_density(&[x]);
                    diff * diff
                });
            }
            Ok(total)
        }
    }
}

/// Exact `int_domain (estimate - E estimate)^2`: piecewise constant or
/// piecewise linear minus its expectation, integrated in closed form per
/// cell.
fn iv_term(
    estimate: &Estimate,
    partition: &Partition,
    domain: &DomainBox,
    expected: &ExpectedEstimate,
) -> Result<f64> {
    match (estimate, expected) {
        (Estimate::Histogram(hist), ExpectedEstimate::Histogram(heights)) => {
            let mut total = 0.0;
            for_each_box(&heights.lo.clone(), &heights.hi.clone(), |j| {
                let mut volume = 1.0;
                for (k, &jk) in j.iter().enumerate() {
                    let (a, b) = partition.axis_edges(k, jk);
                    let w = b.min(domain.hi()[k]) - a.max(domain.lo()[k]);
                    if w <= 0.0 {
                        volume = 0.0;
                        break;
                    }
                    volume *= w;
                }
                if volume > 0.0 {
                    let diff = hist.height_of_count(hist.count_slice(j)) - heights.get(j);
                    total += volume * diff * diff;
                }
                Ok(())
            })?;
            Ok(total)
        }
        (Estimate::FrequencyPolygon(fp), ExpectedEstimate::FrequencyPolygon { seg_lo, heights }) => {
            let h = partition.bin_width();
            let mut total = 0.0;
            for (i, j) in (*seg_lo..seg_lo + heights.len() as i64 - 1).enumerate() {
                let c_j = partition.axis_center(0, j);
                let a = c_j.max(domain.lo()[0]);
                let b = (c_j + h).min(domain.hi()[0]);
                if a >= b {
                    continue;
                }
                let d0 = fp.base().height_at_axis1(j) - heights[i];
                let d1 = fp.base().height_at_axis1(j + 1) - heights[i + 1];
                // linear deviation: value at the clipped endpoints
                let da = d0 + (d1 - d0) * (a - c_j) / h;
                let db = d0 + (d1 - d0) * (b - c_j) / h;
                total += (b - a) / 3.0 * (da * da + da * db + db * db);
            }
            Ok(total)
        }
        _ => Err(Error::invalid("estimate and expected-estimate kinds differ")),
    }
}

/// Verify every occupied cell sits inside the integration domain; mass
/// outside it would silently vanish from the risk integrals, so it is
/// treated as a configuration error.
fn check_occupied_in_domain(est: &HistogramEstimate, domain: &DomainBox) -> Result<()> {
    let p = est.partition();
    for (j, _) in est.occupied() {
        let (lo, hi) = p.bin_range(j);
        for k in 0..p.dim() {
            if lo[k] < domain.lo()[k] || hi[k] > domain.hi()[k] {
                return Err(Error::invalid(format!(
                    "occupied cell {:?} spans [{:?}, {:?}], outside the integration domain; widen the domain or check the model scale",
                    j.coords(),
                    lo,
                    hi
                )));
            }
        }
    }
    Ok(())
}

/// Monte Carlo MISE with the exact bias-variance decomposition.
pub fn mc_mise(cfg: &RiskConfig) -> Result<RiskReport> {
    cfg.validate()?;
    let partition = cfg.partition()?;
    let domain = cfg.domain()?;
    let isb_exact = exact_isb(cfg.estimator, &cfg.model, &partition, &domain, cfg.quad_order)?;
    let expected = ExpectedEstimate::build(cfg.estimator, &cfg.model, &partition, &domain)?;

    let replications: Vec<Replication> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| -> Result<Replication> {
            let seed = cfg.base_seed ^ rep as u64;
            let run = || -> Result<Replication> {
                let times = draw_times(&cfg.scheme, cfg.n, derive_seed(seed, TIMES_STREAM))?;
                let xs = cfg.model.sample_at(&times[1..], derive_seed(seed, PATH_STREAM))?;
                let est = Estimate::fit(cfg.estimator, &partition, &xs)?;
                check_occupied_in_domain(est.histogram(), &domain)?;
                let l2 = l2_distance_sq(
                    &est,
                    |x| cfg.model.marginal_density(x),
                    &domain,
                    cfg.quad_order,
                )?;
                let iv = iv_term(&est, &partition, &domain, &expected)?;
                Ok(Replication { rep, seed, l2, iv_term: iv })
            };
            run().map_err(|e| {
                Error::Numerical(format!(
                    "replication {rep} (seed {seed}, n {}) failed: {e}",
                    cfg.n
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let r = replications.len() as f64;
    let mise = replications.iter().map(|o| o.l2).sum::<f64>() / r;
    let var = replications
        .iter()
        .map(|o| (o.l2 - mise) * (o.l2 - mise))
        .sum::<f64>()
        / (r - 1.0);
    let mise_stderr = (var / r).sqrt();
    let iv_mc = replications.iter().map(|o| o.iv_term).sum::<f64>() / r;
    Ok(RiskReport { mise, mise_stderr, isb_exact, iv_mc, replications })
}

/// Scaled pointwise variance measurement at a single point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseReport {
    /// `T_n * Var(fhat(x))` across replications.
    pub scaled_variance: f64,
    pub variance: f64,
    pub mean_value: f64,
    pub t_n: f64,
    pub delta_n: f64,
    pub n: usize,
}

/// Measure `T_n * Var(fhat(x))` under the high-frequency design.
///
/// The configured step must vanish faster than the cell volume
/// (`delta_n < h^d` as the finite-n proxy for `delta_n = o(h^d)`),
/// otherwise the scaled variance does not stabilize.
pub fn pointwise_variance_scaled(cfg: &RiskConfig, x: &[f64]) -> Result<PointwiseReport> {
    cfg.validate()?;
    let delta_n = match cfg.scheme {
        SamplingScheme::HighFrequency { step } => step,
        ref other => {
            return Err(Error::invalid(format!(
                "the pointwise variance limit requires the high-frequency design, got {}",
                other.name()
            )))
        }
    };
    let d = cfg.model.dim();
    if x.len() != d {
        return Err(Error::invalid("evaluation point dimension mismatch"));
    }
    let hd = cfg.bin_width.powi(d as i32);
    if delta_n >= hd {
        return Err(Error::invalid(format!(
            "step {delta_n} must be below the cell volume {hd} for the variance limit to apply"
        )));
    }
    let partition = cfg.partition()?;
    let values: Vec<f64> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| -> Result<f64> {
            let seed = cfg.base_seed ^ rep as u64;
            let run = || -> Result<f64> {
                let times = draw_times(&cfg.scheme, cfg.n, derive_seed(seed, TIMES_STREAM))?;
                let xs = cfg.model.sample_at(&times[1..], derive_seed(seed, PATH_STREAM))?;
                let est = Estimate::fit(cfg.estimator, &partition, &xs)?;
                Ok(est.eval(x))
            };
            run().map_err(|e| {
                Error::Numerical(format!("replication {rep} (seed {seed}) failed: {e}"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
    let t_n = cfg.n as f64 * delta_n;
    Ok(PointwiseReport {
        scaled_variance: t_n * variance,
        variance,
        mean_value: mean,
        t_n,
        delta_n,
        n: cfg.n,
    })
}

/// How the sampling design scales along a rate sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeRule {
    /// The same design at every n (renewal and jittered sweeps).
    Fixed(SamplingScheme),
    /// High-frequency sampling at the minimal admissible step
    /// `delta*_n(gamma0)` derived from the model regularity and the
    /// per-branch constants.
    MinimalStep { d1: f64, d2: f64, d3: f64 },
}

impl SchemeRule {
    pub fn resolve(&self, model: &ProcessModel, bin_width: f64, n: u64) -> Result<SamplingScheme> {
        match *self {
            SchemeRule::Fixed(scheme) => Ok(scheme),
            SchemeRule::MinimalStep { d1, d2, d3 } => {
                let plan = SamplePlan {
                    gamma0: model.gamma0(),
                    dim: model.dim(),
                    bin_width,
                    d1,
                    d2,
                    d3,
                    n,
                };
                SamplingScheme::high_frequency(delta_star(&plan)?)
            }
        }
    }
}

/// A MISE sweep over a sample-size grid with a bandwidth rule.
#[derive(Debug, Clone)]
pub struct RateExperiment {
    pub model: ProcessModel,
    pub scheme: SchemeRule,
    pub estimator: EstimatorKind,
    pub n_grid: Vec<usize>,
    /// Bandwidth rule `h = c n^(-e)`; the exponent defaults to the
    /// rate-optimal one for the estimator and dimension.
    pub bandwidth_c: f64,
    pub bandwidth_exp: Option<f64>,
    pub replications: usize,
    pub base_seed: u64,
    pub quad_order: usize,
    /// Integration-domain half-width in marginal standard deviations.
    pub domain_sds: f64,
}

/// One row of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub n: usize,
    pub bin_width: f64,
    pub delta_n: Option<f64>,
    pub report: RiskReport,
}

impl RateExperiment {
    fn bandwidth_for(&self, n: usize) -> Result<f64> {
        let e = match self.bandwidth_exp {
            Some(e) => e,
            None => bandwidth_exponent(self.estimator, self.model.dim())?,
        };
        Ok(self.bandwidth_c * (n as f64).powf(-e))
    }

    /// Run the sweep. Each grid point gets its own derived seed, so rows
    /// are independent and the whole sweep is reproducible from
    /// `base_seed`.
    pub fn run(&self) -> Result<Vec<SweepRow>> {
        if self.n_grid.len() < 3 {
            return Err(Error::invalid("a rate sweep needs at least 3 grid points"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("the sample-size grid must be strictly increasing"));
        }
        let mut rows = Vec::with_capacity(self.n_grid.len());
        for &n in &self.n_grid {
            let h = self.bandwidth_for(n)?;
            let scheme = self.scheme.resolve(&self.model, h, n as u64)?;
            let delta_n = match scheme {
                SamplingScheme::HighFrequency { step } => Some(step),
                _ => None,
            };
            let mut cfg = RiskConfig::new(
                self.model.clone(),
                scheme,
                self.estimator,
                n,
                h,
                self.replications,
                derive_seed(self.base_seed, n as u64),
            );
            cfg.quad_order = self.quad_order;
            cfg.domain_sds = self.domain_sds;
            let report = mc_mise(&cfg)?;
            rows.push(SweepRow { n, bin_width: h, delta_n, report });
        }
        Ok(rows)
    }
}
