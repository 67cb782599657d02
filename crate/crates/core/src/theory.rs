//! Asymptotic constants, bandwidth rules and empirical rate fits.
//!
//! The variance bounds for both estimators take the form
//! `limsup n h^d IV <= V0 + C`, with `V0 = 1` for the histogram and `2/3`
//! for the frequency polygon, and a covariance-slack constant `C` set by
//! the sampling design. Combined with the exact bias constants this yields
//! evaluable MISE upper bounds, optimal bandwidth constants, and the
//! observation-time rate classification for admissible high-frequency
//! designs. None of this is estimated from data: the mixing profile is an
//! input, and every output here is an upper-bound ingredient rather than a
//! ground truth.

use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::sampling::SamplingScheme;

/// User-supplied envelope and mixing summaries of a process.
///
/// None of these are estimated by the crate; they parameterize the
/// variance-slack constants below. `pi_sup_on_band` is the supremum of the
/// covariance envelope over `[u0, u1]` and `pi_tail` its integral over
/// `(u1, inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingProfile {
    pub u0: f64,
    pub u1: f64,
    pub a0: f64,
    pub rho: f64,
    pub h0: f64,
    pub norm_k: f64,
    pub norm_phi: f64,
    pub f_sup: f64,
    pub pi_sup_on_band: f64,
    pub pi_tail: f64,
}

impl MixingProfile {
    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("u0", self.u0),
            ("a0", self.a0),
            ("h0", self.h0),
            ("norm_k", self.norm_k),
            ("norm_phi", self.norm_phi),
            ("f_sup", self.f_sup),
            ("pi_sup_on_band", self.pi_sup_on_band),
            ("pi_tail", self.pi_tail),
        ];
        for (name, v) in positives {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("profile field {name} must be positive, got {v}")));
            }
        }
        if !(self.u1.is_finite() && self.u1 > self.u0) {
            return Err(Error::invalid("profile requires u1 > u0"));
        }
        if !(self.rho.is_finite() && self.rho > 2.0) {
            return Err(Error::invalid("profile requires a mixing exponent rho > 2"));
        }
        Ok(())
    }
}

/// Covariance-slack constant `C` of the variance bound for the two random
/// designs: `2 u0 h0` under renewal sampling and `2 ceil(u0 / delta)`
/// under jittered sampling.
pub fn slack_constant_c(scheme: &SamplingScheme, profile: &MixingProfile) -> Result<f64> {
    profile.validate()?;
    match scheme {
        SamplingScheme::Renewal(_) => Ok(2.0 * profile.u0 * profile.h0),
        SamplingScheme::Jittered { period, .. } => Ok(2.0 * (profile.u0 / period).ceil()),
        SamplingScheme::HighFrequency { .. } => Err(Error::invalid(
            "the high-frequency design has no design constant C; its slack is c_gamma0",
        )),
    }
}

/// Covariance-slack constant `C_gamma0` for the high-frequency design run
/// at the minimal admissible step:
///
/// ```text
/// gamma0 < 1:  (1/d1) { 2 |phi|_1 u0^(1-gamma0) / (1-gamma0)
///                       + 2 u0 |f|_inf + (k7 + k8) |k|_1 }
/// gamma0 = 1:  2 |phi|_1 / d2
/// gamma0 > 1:  2 |phi|_1 gamma0 / (d3^gamma0 (gamma0 - 1))
/// ```
///
/// with `k7 = 2 (u1 - u0) sup_[u0,u1] pi` and `k8 = 2 int_u1^inf pi`.
/// Each branch needs only its own step constant; the others may be absent.
pub fn c_gamma0(
    profile: &MixingProfile,
    gamma0: f64,
    d1: Option<f64>,
    d2: Option<f64>,
    d3: Option<f64>,
) -> Result<f64> {
    profile.validate()?;
    if !(gamma0.is_finite() && gamma0 > 0.0) {
        return Err(Error::invalid("gamma0 must be positive"));
    }
    let need = |name: &str, v: Option<f64>| -> Result<f64> {
        match v {
            Some(v) if v.is_finite() && v > 0.0 => Ok(v),
            Some(v) => Err(Error::invalid(format!("step constant {name} must be positive, got {v}"))),
            None => Err(Error::invalid(format!(
                "step constant {name} is required for gamma0 = {gamma0}"
            ))),
        }
    };
    if gamma0 < 1.0 {
        let d1 = need("d1", d1)?;
        let k6 = 2.0 * profile.u0 * profile.f_sup;
        let k7 = 2.0 * (profile.u1 - profile.u0) * profile.pi_sup_on_band;
        let k8 = 2.0 * profile.pi_tail;
        let local = 2.0 * profile.norm_phi * profile.u0.powf(1.0 - gamma0) / (1.0 - gamma0);
        Ok((local + k6 + (k7 + k8) * profile.norm_k) / d1)
    } else if gamma0 == 1.0 {
        let d2 = need("d2", d2)?;
        Ok(2.0 * profile.norm_phi / d2)
    } else {
        let d3 = need("d3", d3)?;
        Ok(2.0 * profile.norm_phi * gamma0 / (d3.powf(gamma0) * (gamma0 - 1.0)))
    }
}

/// The asymptotic MISE bound as a function of the bandwidth constant `c`:
/// this value bounds `limsup n^(2/(d+2)) MISE` for the histogram and
/// `limsup n^(4/5) MISE` for the (univariate) frequency polygon.
pub fn mise_upper_bound(
    kind: EstimatorKind,
    c: f64,
    dim: usize,
    roughness: f64,
    slack: f64,
) -> f64 {
    debug_assert!(c > 0.0 && roughness >= 0.0 && slack >= 0.0);
    match kind {
        EstimatorKind::Histogram => {
            c * c / 12.0 * roughness + (1.0 + slack) / c.powi(dim as i32)
        }
        EstimatorKind::FrequencyPolygon => {
            49.0 / 2880.0 * c.powi(4) * roughness + (2.0 / 3.0 + slack) / c
        }
    }
}

/// The bandwidth constant minimizing [`mise_upper_bound`], in closed form
/// from the stationarity condition:
///
/// ```text
/// histogram:         c* = (6 d (1 + C) / R)^(1/(d+2))
/// frequency polygon: c* = (720 (2/3 + C) / (49 R''))^(1/5)
/// ```
pub fn optimal_c(kind: EstimatorKind, dim: usize, roughness: f64, slack: f64) -> Result<f64> {
    if !(roughness.is_finite() && roughness > 0.0) {
        return Err(Error::invalid(
            "optimal bandwidth needs positive roughness (a flat density has no interior minimum)",
        ));
    }
    if !(slack.is_finite() && slack >= 0.0) {
        return Err(Error::invalid("slack constant must be nonnegative"));
    }
    match kind {
        EstimatorKind::Histogram => {
            let d = dim as f64;
            Ok((6.0 * d * (1.0 + slack) / roughness).powf(1.0 / (d + 2.0)))
        }
        EstimatorKind::FrequencyPolygon => {
            Ok((720.0 * (2.0 / 3.0 + slack) / (49.0 * roughness)).powf(0.2))
        }
    }
}

/// The rate-optimal bandwidth: `c n^(-1/(d+2))` for the histogram and
/// `c n^(-1/5)` for the univariate frequency polygon.
pub fn bandwidth(kind: EstimatorKind, c: f64, n: u64, dim: usize) -> Result<f64> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::invalid("bandwidth constant must be positive"));
    }
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let exponent = bandwidth_exponent(kind, dim)?;
    Ok(c * (n as f64).powf(-exponent))
}

/// The bandwidth decay exponent for the rate-optimal rule.
pub fn bandwidth_exponent(kind: EstimatorKind, dim: usize) -> Result<f64> {
    match kind {
        EstimatorKind::Histogram => Ok(1.0 / (dim as f64 + 2.0)),
        EstimatorKind::FrequencyPolygon if dim == 1 => Ok(0.2),
        EstimatorKind::FrequencyPolygon => Err(Error::Unsupported(
            "the frequency polygon bandwidth rule is univariate".into(),
        )),
    }
}

/// MISE order in the observation time `T_n` for an admissible
/// high-frequency design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TnRateClass {
    /// Exponent `e` in `MISE = O(T_n^e)`.
    pub exponent: f64,
    /// Whether a `ln T_n` factor multiplies the power.
    pub log_factor: bool,
}

impl std::fmt::Display for TnRateClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.log_factor {
            write!(f, "O(T^{} ln T)", self.exponent)
        } else {
            write!(f, "O(T^{})", self.exponent)
        }
    }
}

/// Classify the MISE order in `T_n` by the regularity exponent:
/// `O(T^-1)` for `gamma0 < 1`, `O(T^-1 ln T)` at `gamma0 = 1`, and
/// `O(T^(-2 gamma0 / (2 gamma0 + d (gamma0 - 1))))` above.
pub fn tn_rate_class(gamma0: f64, dim: usize) -> Result<TnRateClass> {
    if !(gamma0.is_finite() && gamma0 > 0.0) {
        return Err(Error::invalid("gamma0 must be positive"));
    }
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if gamma0 < 1.0 {
        Ok(TnRateClass { exponent: -1.0, log_factor: false })
    } else if gamma0 == 1.0 {
        Ok(TnRateClass { exponent: -1.0, log_factor: true })
    } else {
        let d = dim as f64;
        Ok(TnRateClass {
            exponent: -2.0 * gamma0 / (2.0 * gamma0 + d * (gamma0 - 1.0)),
            log_factor: false,
        })
    }
}

/// The theoretical MISE-vs-n slope for a rate sweep.
pub fn target_slope(kind: EstimatorKind, dim: usize) -> Result<f64> {
    match kind {
        EstimatorKind::Histogram => Ok(-2.0 / (dim as f64 + 2.0)),
        EstimatorKind::FrequencyPolygon if dim == 1 => Ok(-0.8),
        EstimatorKind::FrequencyPolygon => Err(Error::Unsupported(
            "the frequency polygon rate is univariate".into(),
        )),
    }
}

/// The desk-scale acceptance window on the fitted slope for a given
/// estimator and dimension.
pub fn slope_window(kind: EstimatorKind, dim: usize) -> Result<(f64, f64)> {
    match (kind, dim) {
        (EstimatorKind::Histogram, 1) => Ok((-0.78, -0.56)),
        (EstimatorKind::Histogram, 2) => Ok((-0.62, -0.38)),
        (EstimatorKind::FrequencyPolygon, 1) => Ok((-0.92, -0.68)),
        (kind, dim) => {
            let target = target_slope(kind, dim)?;
            Ok((target - 0.12, target + 0.12))
        }
    }
}

/// An ordinary least-squares fit of `log(mise)` on `log(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

/// Fit the empirical convergence rate from `(n, mise)` pairs.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::invalid(format!(
            "a rate fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    for &(n, mise) in points {
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::invalid(format!("sample sizes must be positive, got {n}")));
        }
        if !(mise.is_finite() && mise > 0.0) {
            return Err(Error::invalid(format!("mise values must be positive, got {mise}")));
        }
    }
    let mut ns: Vec<f64> = points.iter().map(|p| p.0).collect();
    ns.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if ns.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("sample sizes must be distinct"));
    }

    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let slope_stderr = (ssr / (m - 2.0) / sxx).sqrt();
    Ok(RateFit { points: points.to_vec(), slope, intercept, slope_stderr })
}

impl RateFit {
    /// CSV rendering: `n,mise,stderr` rows (with the optional per-point
    /// standard errors, `nan` when unknown) and the slope footer comment.
    pub fn to_csv(&self, stderrs: &[Option<f64>]) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("n,mise,stderr\n");
        for (i, &(n, mise)) in self.points.iter().enumerate() {
            let se = stderrs
                .get(i)
                .copied()
                .flatten()
                .map(|s| format!("{s:.16e}"))
                .unwrap_or_else(|| "nan".to_string());
            writeln!(out, "{n:.16e},{mise:.16e},{se}").unwrap();
        }
        writeln!(out, "# slope={:.16e} stderr={:.16e}", self.slope, self.slope_stderr).unwrap();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn profile() -> MixingProfile {
        MixingProfile {
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
        }
    }

    /// Golden-section minimizer over [a, b] for unimodal f.
    fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
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
    }

    #[test]
    fn slack_constant_per_design() {
        let p = profile();
        let renewal = SamplingScheme::renewal(1, 5.0).unwrap();
        assert_eq!(slack_constant_c(&renewal, &p).unwrap(), 1.0);
        let jit = SamplingScheme::jittered(0.4).unwrap();
        assert_eq!(slack_constant_c(&jit, &p).unwrap(), 6.0);
        let jit1 = SamplingScheme::jittered(1.0).unwrap();
        assert_eq!(slack_constant_c(&jit1, &p).unwrap(), 2.0);
        let hf = SamplingScheme::high_frequency(0.1).unwrap();
        assert!(slack_constant_c(&hf, &p).is_err());
    }

    #[test]
    fn c_gamma0_branches() {
        let p = profile();
        // gamma0 = 1
        let v = c_gamma0(&p, 1.0, None, Some(2.0), None).unwrap();
        assert_eq!(v, 1.0);
        // gamma0 > 1
        let v = c_gamma0(&p, 2.0, None, None, Some(1.0)).unwrap();
        assert_eq!(v, 4.0);
        // gamma0 < 1: hand evaluation 4 + 0.8 + (0.2 + 0.1) * 1 = 5.1
        let v = c_gamma0(&p, 0.5, Some(1.0), None, None).unwrap();
        assert!((v - 5.1).abs() < 1e-12, "{v}");
        // missing branch constant is an error
        assert!(c_gamma0(&p, 1.0, Some(1.0), None, Some(1.0)).is_err());
        assert!(c_gamma0(&p, 0.0, Some(1.0), None, None).is_err());
    }

    #[test]
    fn c_gamma0_lipschitz_in_profile() {
        // 1% perturbations of any field move the gamma0 < 1 constant by a
        // few percent at most
        let base = c_gamma0(&profile(), 0.5, Some(1.0), None, None).unwrap();
        for field in 0..6 {
            let mut p = profile();
            match field {
                0 => p.u0 *= 1.01,
                1 => p.u1 *= 1.01,
                2 => p.norm_k *= 1.01,
                3 => p.norm_phi *= 1.01,
                4 => p.f_sup *= 1.01,
                5 => p.pi_tail *= 1.01,
                _ => unreachable!(),
            }
            let v = c_gamma0(&p, 0.5, Some(1.0), None, None).unwrap();
            assert!(
                (v - base).abs() / base <= 0.03,
                "field {field} moved the constant from {base} to {v}"
            );
        }
    }

    #[test]
    fn mise_bound_values() {
        let r_grad = 0.141_047_395_886_939_07; // 1/(4 sqrt(pi))
        let v = mise_upper_bound(EstimatorKind::Histogram, 1.0, 1, r_grad, 0.0);
        assert!((v - (r_grad / 12.0 + 1.0)).abs() < 1e-15);
        let r_hess = 0.211_571_093_830_408_6; // 3/(8 sqrt(pi))
        let v = mise_upper_bound(EstimatorKind::FrequencyPolygon, 1.0, 1, r_hess, 0.0);
        assert!((v - (49.0 / 2880.0 * r_hess + 2.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn mise_bound_is_unimodal_in_c() {
        // decreasing then increasing over a log-spaced grid
        for (kind, rough) in [
            (EstimatorKind::Histogram, 0.141),
            (EstimatorKind::FrequencyPolygon, 0.2116),
        ] {
            let mut values = Vec::new();
            for i in 0..60 {
                let c = 10f64.powf(-1.5 + 3.0 * i as f64 / 59.0);
                values.push(mise_upper_bound(kind, c, 1, rough, 0.5));
            }
            let min_at = values
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert!(min_at > 0 && min_at < 59);
            assert!(values[..min_at].windows(2).all(|w| w[0] > w[1]));
            assert!(values[min_at..].windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn optimal_c_matches_search_oracle() {
        let r_grad = 0.141_047_395_886_939_07;
        let c = optimal_c(EstimatorKind::Histogram, 1, r_grad, 0.0).unwrap();
        assert!((c - (6.0 / r_grad).powf(1.0 / 3.0)).abs() < 1e-12);
        let oracle = golden_min(
            |x| mise_upper_bound(EstimatorKind::Histogram, x, 1, r_grad, 0.0),
            0.1,
            30.0,
        );
        assert!((c - oracle).abs() <= 1e-6 * c, "{c} vs oracle {oracle}");

        let r_hess = 0.211_571_093_830_408_6;
        let c = optimal_c(EstimatorKind::FrequencyPolygon, 1, r_hess, 0.0).unwrap();
        assert!((c - (720.0 * (2.0 / 3.0) / (49.0 * r_hess)).powf(0.2)).abs() < 1e-12);
        let oracle = golden_min(
            |x| mise_upper_bound(EstimatorKind::FrequencyPolygon, x, 1, r_hess, 0.0),
            0.1,
            30.0,
        );
        assert!((c - oracle).abs() <= 1e-6 * c, "{c} vs oracle {oracle}");

        // increasing in the slack constant
        let c0 = optimal_c(EstimatorKind::Histogram, 1, r_grad, 0.0).unwrap();
        let c1 = optimal_c(EstimatorKind::Histogram, 1, r_grad, 1.0).unwrap();
        assert!(c1 > c0);
        // no interior minimum without curvature
        assert!(optimal_c(EstimatorKind::Histogram, 1, 0.0, 0.0).is_err());
    }

    #[test]
    fn optimal_c_is_stationary() {
        // central-difference derivative of the bound vanishes at c*
        for (kind, rough) in [
            (EstimatorKind::Histogram, 0.141_047_395_886_939_07),
            (EstimatorKind::FrequencyPolygon, 0.211_571_093_830_408_6),
        ] {
            let c = optimal_c(kind, 1, rough, 0.3).unwrap();
            let step = 1e-6 * c;
            let deriv = (mise_upper_bound(kind, c + step, 1, rough, 0.3)
                - mise_upper_bound(kind, c - step, 1, rough, 0.3))
                / (2.0 * step);
            let scale = mise_upper_bound(kind, c, 1, rough, 0.3);
            assert!(deriv.abs() / scale < 1e-6, "kind {kind:?}: slope {deriv}");
        }
    }

    #[test]
    fn optimal_c_bounds_everything_nearby() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let rough = 0.141_047_395_886_939_07;
        let c_star = optimal_c(EstimatorKind::Histogram, 1, rough, 0.0).unwrap();
        let best = mise_upper_bound(EstimatorKind::Histogram, c_star, 1, rough, 0.0);
        for _ in 0..100 {
            let c = rng.random_range(c_star / 10.0..c_star * 10.0);
            assert!(best <= mise_upper_bound(EstimatorKind::Histogram, c, 1, rough, 0.0) + 1e-14);
        }
    }

    #[test]
    fn bandwidth_rules() {
        let h = bandwidth(EstimatorKind::Histogram, 1.0, 1024, 1).unwrap();
        assert!((h - 1024f64.powf(-1.0 / 3.0)).abs() < 1e-15);
        let h = bandwidth(EstimatorKind::FrequencyPolygon, 2.0, 100_000, 1).unwrap();
        assert!((h - 0.2).abs() < 1e-15);
        let h = bandwidth(EstimatorKind::Histogram, 1.0, 10_000, 2).unwrap();
        assert!((h - 0.1).abs() < 1e-15);
        assert!(bandwidth(EstimatorKind::FrequencyPolygon, 1.0, 100, 2).is_err());
        assert!(bandwidth(EstimatorKind::Histogram, 0.0, 100, 1).is_err());
    }

    #[test]
    fn tn_rate_classification() {
        let c = tn_rate_class(0.5, 1).unwrap();
        assert_eq!(c, TnRateClass { exponent: -1.0, log_factor: false });
        let c = tn_rate_class(1.0, 1).unwrap();
        assert_eq!(c, TnRateClass { exponent: -1.0, log_factor: true });
        let c = tn_rate_class(2.0, 1).unwrap();
        assert!((c.exponent - (-0.8)).abs() < 1e-15);
        assert!(!c.log_factor);
        assert!(tn_rate_class(0.0, 1).is_err());
    }

    #[test]
    fn fit_rate_recovers_planted_slope() {
        // exact power law: slope recovered exactly, zero residual
        let pts: Vec<(f64, f64)> = [100.0, 1000.0, 10_000.0]
            .iter()
            .map(|&n: &f64| (n, 7.0 * n.powf(-0.8)))
            .collect();
        let fit = fit_rate(&pts).unwrap();
        assert!((fit.slope + 0.8).abs() < 1e-12, "{}", fit.slope);
        assert!((fit.intercept - 7f64.ln()).abs() < 1e-12);
        assert!(fit.slope_stderr.abs() < 1e-12);
    }

    #[test]
    fn fit_rate_on_noisy_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut hits = 0;
        for _ in 0..50 {
            let pts: Vec<(f64, f64)> = (0..8)
                .map(|i| {
                    let n = 10f64.powf(2.0 + i as f64 * 0.4);
                    let noise: f64 = rng.random_range(-0.05..0.05);
                    (n, 3.0 * n.powf(-2.0 / 3.0) * noise.exp())
                })
                .collect();
            let fit = fit_rate(&pts).unwrap();
            if (fit.slope + 2.0 / 3.0).abs() <= 2.0 * fit.slope_stderr {
                hits += 1;
            }
        }
        // a 2-stderr interval should cover the planted slope most of the time
        assert!(hits >= 45, "only {hits}/50 runs covered the planted slope");
    }

    #[test]
    fn rate_fit_csv_round_trips() {
        let pts: Vec<(f64, f64)> = [100.0f64, 1000.0, 10_000.0]
            .iter()
            .map(|&n| (n, 2.0 * n.powf(-0.5)))
            .collect();
        let fit = fit_rate(&pts).unwrap();
        let csv = fit.to_csv(&[Some(0.1), None, Some(0.3)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "n,mise,stderr");
        assert!(lines[2].ends_with(",nan"));
        let footer = lines[4];
        assert!(footer.starts_with("# slope="));
        let slope: f64 = footer
            .strip_prefix("# slope=")
            .unwrap()
            .split_whitespace()
            .next()
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(slope, fit.slope);
        // data rows parse back to the inputs exactly
        let n0: f64 = lines[1].split(',').next().unwrap().parse().unwrap();
        assert_eq!(n0, 100.0);
    }

    #[test]
    fn fit_rate_input_validation() {
        assert!(fit_rate(&[(10.0, 1.0), (100.0, 0.1)]).is_err());
        assert!(fit_rate(&[(10.0, 1.0), (10.0, 0.5), (100.0, 0.1)]).is_err());
        assert!(fit_rate(&[(10.0, 1.0), (20.0, -0.5), (100.0, 0.1)]).is_err());
        assert!(fit_rate(&[(10.0, 1.0), (20.0, 0.5), (100.0, 0.0)]).is_err());
    }

    #[test]
    fn slope_windows_cover_targets() {
        for (kind, dim) in [
            (EstimatorKind::Histogram, 1),
            (EstimatorKind::Histogram, 2),
            (EstimatorKind::FrequencyPolygon, 1),
            (EstimatorKind::Histogram, 3),
        ] {
            let (lo, hi) = slope_window(kind, dim).unwrap();
            let target = target_slope(kind, dim).unwrap();
            assert!(lo < target && target < hi, "{kind:?} d={dim}");
        }
    }
}
