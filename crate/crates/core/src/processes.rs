//! Stationary Gaussian process models with exact density oracles.
//!
//! Two reference models cover the two path-regularity regimes that matter
//! for sampled-data density estimation:
//!
//! - [`OuModel`]: a product of independent Ornstein-Uhlenbeck coordinates.
//!   Paths are diffusion-rough, so the joint density of `(X_0, X_u)` blows
//!   up like `u^{-d/2}` near `u = 0` and the regularity exponent is
//!   `gamma0 = d/2`.
//! - [`SmoothGaussianModel`]: a univariate mean-square smooth Gaussian
//!   process with squared-exponential covariance, the `gamma0 = d` regime.
//!
//! Both expose the exact marginal density `f`, per-axis CDF, the joint
//! density `f_u` of `(X_0, X_u)`, and `g_u = f_u - f ⊗ f`, so bias and
//! variance functionals can be computed without Monte Carlo.

use crate::error::{Error, Result};
use crate::quad::integrate_adaptive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Product of independent Ornstein-Uhlenbeck coordinates.
///
/// Coordinate `k` solves `dX = -theta_k X dt + sigma_k dW`, so its
/// stationary law is `N(0, sigma_k^2 / (2 theta_k))` and the lag-`u`
/// correlation is `exp(-theta_k u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OuModel {
    theta: Vec<f64>,
    sigma: Vec<f64>,
}

impl OuModel {
    pub fn new(theta: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if theta.is_empty() || theta.len() != sigma.len() {
            return Err(Error::invalid(
                "theta and sigma must be non-empty and of equal length",
            ));
        }
        if theta.iter().any(|&t| !(t.is_finite() && t > 0.0))
            || sigma.iter().any(|&s| !(s.is_finite() && s > 0.0))
        {
            return Err(Error::invalid("theta and sigma must be positive and finite"));
        }
        Ok(OuModel { theta, sigma })
    }

    /// `d` identical coordinates with the given parameters.
    pub fn isotropic(dim: usize, theta: f64, sigma: f64) -> Result<Self> {
        OuModel::new(vec![theta; dim], vec![sigma; dim])
    }

    /// `d` coordinates with unit stationary variance (`theta = 1`,
    /// `sigma = sqrt(2)`), i.e. a standard normal marginal per axis.
    pub fn standard(dim: usize) -> Self {
        OuModel::isotropic(dim, 1.0, std::f64::consts::SQRT_2).expect("valid parameters")
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }
}

/// Univariate stationary Gaussian process with covariance
/// `r(u) = exp(-(u/ell)^2)` and unit marginal variance.
///
/// Sample paths are mean-square smooth; simulation goes through a dense
/// Cholesky factorization of the covariance matrix and is therefore capped
/// at [`SmoothGaussianModel::MAX_POINTS`] observation times.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothGaussianModel {
    length_scale: f64,
}

impl SmoothGaussianModel {
    pub const MAX_POINTS: usize = 4096;

    pub fn new(length_scale: f64) -> Result<Self> {
        if !(length_scale.is_finite() && length_scale > 0.0) {
            return Err(Error::invalid("length scale must be positive and finite"));
        }
        Ok(SmoothGaussianModel { length_scale })
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }
}

/// A simulable stationary Gaussian model together with its density oracles.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessModel {
    Ou(OuModel),
    Smooth(SmoothGaussianModel),
}

impl From<OuModel> for ProcessModel {
    fn from(m: OuModel) -> Self {
        ProcessModel::Ou(m)
    }
}

impl From<SmoothGaussianModel> for ProcessModel {
    fn from(m: SmoothGaussianModel) -> Self {
        ProcessModel::Smooth(m)
    }
}

impl ProcessModel {
    pub fn dim(&self) -> usize {
        match self {
            ProcessModel::Ou(m) => m.theta.len(),
            ProcessModel::Smooth(_) => 1,
        }
    }

    /// Regularity exponent of the joint-density blow-up near `u = 0`:
    /// `d/2` for the diffusion-rough OU coordinates, `d` (= 1) for the
    /// smooth model.
    pub fn gamma0(&self) -> f64 {
        match self {
            ProcessModel::Ou(m) => m.theta.len() as f64 / 2.0,
            ProcessModel::Smooth(_) => 1.0,
        }
    }

    /// Stationary standard deviation of coordinate `axis`.
    pub fn axis_sd(&self, axis: usize) -> f64 {
        match self {
            ProcessModel::Ou(m) => (m.sigma[axis] * m.sigma[axis] / (2.0 * m.theta[axis])).sqrt(),
            ProcessModel::Smooth(_) => 1.0,
        }
    }

    /// Correlation of `(X_0, X_u)` on coordinate `axis`, `u >= 0`.
    pub fn axis_corr(&self, axis: usize, u: f64) -> f64 {
        match self {
            ProcessModel::Ou(m) => (-m.theta[axis] * u).exp(),
            ProcessModel::Smooth(m) => {
                let z = u / m.length_scale;
                (-z * z).exp()
            }
        }
    }

    /// `1 - corr(u)^2` computed without cancellation for small `u`.
    fn axis_one_minus_corr_sq(&self, axis: usize, u: f64) -> f64 {
        match self {
            ProcessModel::Ou(m) => -(-2.0 * m.theta[axis] * u).exp_m1(),
            ProcessModel::Smooth(m) => {
                let z = u / m.length_scale;
                -(-2.0 * z * z).exp_m1()
            }
        }
    }

    /// Marginal density of coordinate `axis` at `x`.
    pub fn axis_pdf(&self, axis: usize, x: f64) -> f64 {
        let s = self.axis_sd(axis);
        let z = x / s;
        (-0.5 * z * z).exp() / (s * SQRT_2PI)
    }

    /// Marginal CDF of coordinate `axis` at `x`.
    pub fn axis_cdf(&self, axis: usize, x: f64) -> f64 {
        let s = self.axis_sd(axis);
        0.5 * libm::erfc(-x / (s * std::f64::consts::SQRT_2))
    }

    /// `P(lo <= X <= hi)` for coordinate `axis`, with full relative
    /// precision in both tails (complementary form on each side of the
    /// mean).
    pub fn axis_interval_prob(&self, axis: usize, lo: f64, hi: f64) -> f64 {
        debug_assert!(lo <= hi);
        let s = self.axis_sd(axis) * std::f64::consts::SQRT_2;
        let (zl, zh) = (lo / s, hi / s);
        if zl >= 0.0 {
            0.5 * (libm::erfc(zl) - libm::erfc(zh))
        } else if zh <= 0.0 {
            0.5 * (libm::erfc(-zh) - libm::erfc(-zl))
        } else {
            0.5 * (libm::erf(zh) - libm::erf(zl))
        }
    }

    fn axis_pdf_deriv(&self, axis: usize, x: f64) -> f64 {
        let s2 = self.axis_sd(axis).powi(2);
        -x / s2 * self.axis_pdf(axis, x)
    }

    fn axis_pdf_deriv2(&self, axis: usize, x: f64) -> f64 {
        let s2 = self.axis_sd(axis).powi(2);
        (x * x / (s2 * s2) - 1.0 / s2) * self.axis_pdf(axis, x)
    }

    /// Marginal density `f(x)`.
    pub fn marginal_density(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim(), "point dimension mismatch");
        x.iter()
            .enumerate()
            .map(|(k, &v)| self.axis_pdf(k, v))
            .product()
    }

    /// Joint density `f_u(x, y)` of `(X_0, X_u)`, `u > 0`.
    pub fn joint_density(&self, u: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        if !(u.is_finite() && u > 0.0) {
            return Err(Error::invalid(format!("joint density requires u > 0, got {u}")));
        }
        assert_eq!(x.len(), self.dim(), "point dimension mismatch");
        assert_eq!(y.len(), self.dim(), "point dimension mismatch");
        let mut dens = 1.0;
        for k in 0..self.dim() {
            let s = self.axis_sd(k);
            let rho = self.axis_corr(k, u);
            let omr2 = self.axis_one_minus_corr_sq(k, u);
            let zx = x[k] / s;
            let zy = y[k] / s;
            let q = (zx * zx - 2.0 * rho * zx * zy + zy * zy) / (2.0 * omr2);
            dens *= (-q).exp() / (2.0 * std::f64::consts::PI * s * s * omr2.sqrt());
        }
        Ok(dens)
    }

    /// Covariance-structure remainder `g_u(x, y) = f_u(x, y) - f(x) f(y)`.
    pub fn g_u(&self, u: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(self.joint_density(u, x, y)? - self.marginal_density(x) * self.marginal_density(y))
    }

    /// Roughness of the marginal gradient: `sum_i int (df/dx_i)^2 dx`.
    ///
    /// Each factor of the separable integrand is integrated adaptively;
    /// nothing here relies on the marginals being Gaussian beyond the
    /// oracle derivatives themselves.
    pub fn roughness_grad(&self) -> Result<f64> {
        self.roughness_grad_with_tol(1e-13)
    }

    pub(crate) fn roughness_grad_with_tol(&self, rel_tol: f64) -> Result<f64> {
        let d = self.dim();
        let mut deriv_sq = Vec::with_capacity(d);
        let mut pdf_sq = Vec::with_capacity(d);
        for k in 0..d {
            let s = self.axis_sd(k);
            let (a, b) = (-10.0 * s, 10.0 * s);
            deriv_sq.push(integrate_adaptive(
                |x| self.axis_pdf_deriv(k, x).powi(2),
                a,
                b,
                rel_tol / (s * s * s),
            )?);
            pdf_sq.push(integrate_adaptive(|x| self.axis_pdf(k, x).powi(2), a, b, rel_tol / s)?);
        }
        let mut total = 0.0;
        for (i, &dsq) in deriv_sq.iter().enumerate() {
            let mut term = dsq;
            for (j, &p) in pdf_sq.iter().enumerate() {
                if j != i {
                    term *= p;
                }
            }
            total += term;
        }
        Ok(total)
    }

    /// Roughness of the second derivative, `int f''(x)^2 dx` (univariate).
    pub fn roughness_hess(&self) -> Result<f64> {
        self.roughness_hess_with_tol(1e-13)
    }

    pub(crate) fn roughness_hess_with_tol(&self, rel_tol: f64) -> Result<f64> {
        if self.dim() != 1 {
            return Err(Error::Unsupported(
                "second-derivative roughness is defined for dimension 1 only".into(),
            ));
        }
        let s = self.axis_sd(0);
        integrate_adaptive(
            |x| self.axis_pdf_deriv2(0, x).powi(2),
            -10.0 * s,
            10.0 * s,
            rel_tol / s.powi(5),
        )
    }

    /// `int_0^infty g_u(x, x) du`, the integrated autocovariance of the
    /// occupation density at `x`.
    ///
    /// Defined only for `gamma0 < 1`: the diagonal of `f_u` grows like
    /// `u^{-gamma0}` near zero, so for `gamma0 >= 1` the integral diverges
    /// and a numerical-failure error is returned. The integrable
    /// square-root blow-up in the `gamma0 = 1/2` case is removed by the
    /// substitution `u = v^2`.
    pub fn integrated_g(&self, x: &[f64]) -> Result<f64> {
        Ok(self.integrated_g_with_cutoff(x)?.0)
    }

    /// As [`integrated_g`](Self::integrated_g), also returning the upper
    /// truncation point `U` solved from the analytic tail bound.
    pub fn integrated_g_with_cutoff(&self, x: &[f64]) -> Result<(f64, f64)> {
        assert_eq!(x.len(), self.dim(), "point dimension mismatch");
        if self.gamma0() >= 1.0 {
            return Err(Error::Numerical(format!(
                "integrated autocovariance diverges: near u = 0 the diagonal joint density grows like u^-{}, which is not integrable",
                self.gamma0()
            )));
        }
        // gamma0 < 1 restricts us to the univariate OU coordinate set.
        let theta_min = match self {
            ProcessModel::Ou(m) => m.theta.iter().cloned().fold(f64::INFINITY, f64::min),
            ProcessModel::Smooth(_) => unreachable!("smooth model has gamma0 = 1"),
        };
        let fx = self.marginal_density(x);
        // Tail bound for u with all correlations <= 1/2:
        //   |g_u(x,x)| <= f(x)^2 * S * exp(S/2) * rho(u),
        // with S = sum_i (x_i/s_i)^2 + 0.3 d and rho(u) = exp(-theta_min u),
        // using ln A(rho) <= rho (a + 0.3) per axis for rho <= 1/2.
        let s_const: f64 = x
            .iter()
            .enumerate()
            .map(|(k, &v)| (v / self.axis_sd(k)).powi(2) + 0.3)
            .sum();
        let tail_scale = fx * fx * s_const * (0.5 * s_const).exp() / theta_min;
        let tol = 1e-10;
        let u_half = std::f64::consts::LN_2 / theta_min; // rho(u_half) = 1/2
        let cutoff = if tail_scale <= tol {
            u_half
        } else {
            u_half.max((tail_scale / tol).ln() / theta_min)
        };
        if !cutoff.is_finite() {
            return Err(Error::Numerical(
                "tail cutoff for the integrated autocovariance diverged".into(),
            ));
        }
        // Near-zero piece via u = v^2; the transformed integrand is bounded.
        let split = (0.5 / theta_min).min(1.0);
        let near = integrate_adaptive(
            |v| 2.0 * v * self.g_u(v * v, x, x).expect("u > 0 inside quadrature"),
            0.0,
            split.sqrt(),
            1e-11,
        )?;
        let far = integrate_adaptive(
            |u| self.g_u(u, x, x).expect("u > 0 inside quadrature"),
            split,
            cutoff,
            1e-11,
        )?;
        Ok((near + far, cutoff))
    }

    /// Simulate the process at the given strictly increasing times; returns
    /// the observations as a flat row-major array (`times.len() * dim`
    /// values).
    ///
    /// OU coordinates use the exact stationary transition, so there is no
    /// discretization bias at any spacing. The smooth model draws one joint
    /// Gaussian vector through a dense Cholesky factorization.
    pub fn sample_at(&self, times: &[f64], seed: u64) -> Result<Vec<f64>> {
        if times.is_empty() {
            return Err(Error::invalid("at least one observation time is required"));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("observation times must be finite"));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("observation times must be strictly increasing"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            ProcessModel::Ou(m) => Ok(sample_ou(m, times, &mut rng)),
            ProcessModel::Smooth(m) => sample_smooth(m, times, &mut rng),
        }
    }
}

fn sample_ou(model: &OuModel, times: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let d = model.theta.len();
    let n = times.len();
    let sd: Vec<f64> = (0..d)
        .map(|k| (model.sigma[k] * model.sigma[k] / (2.0 * model.theta[k])).sqrt())
        .collect();
    let mut out = vec![0.0; n * d];
    for k in 0..d {
        let z: f64 = StandardNormal.sample(rng);
        out[k] = sd[k] * z;
    }
    // decay/innovation coefficients are reused while the spacing repeats,
    // which makes constant-step schemes cost one exp per axis total
    let mut last_dt = f64::NAN;
    let mut decay = vec![0.0; d];
    let mut innov = vec![0.0; d];
    for t in 1..n {
        let dt = times[t] - times[t - 1];
        if dt != last_dt {
            for k in 0..d {
                decay[k] = (-model.theta[k] * dt).exp();
                innov[k] = sd[k] * (-(-2.0 * model.theta[k] * dt).exp_m1()).sqrt();
            }
            last_dt = dt;
        }
        for k in 0..d {
            let z: f64 = StandardNormal.sample(rng);
            out[t * d + k] = decay[k] * out[(t - 1) * d + k] + innov[k] * z;
        }
    }
    out
}

fn sample_smooth(
    model: &SmoothGaussianModel,
    times: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let n = times.len();
    if n > SmoothGaussianModel::MAX_POINTS {
        return Err(Error::ResourceLimit(format!(
            "smooth model is capped at {} observation times (requested {n}) by the dense factorization",
            SmoothGaussianModel::MAX_POINTS
        )));
    }
    let ell = model.length_scale;
    let mut cov = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let z = (times[i] - times[j]) / ell;
            let c = (-z * z).exp();
            cov[i * n + j] = c;
            cov[j * n + i] = c;
        }
    }
    // The squared-exponential Gram matrix is numerically rank-deficient on
    // dense time grids; a diagonal nugget restores positive definiteness.
    let mut nugget = 0.0;
    let factored = loop {
        let mut attempt = cov.clone();
        if nugget > 0.0 {
            for i in 0..n {
                attempt[i * n + i] += nugget;
            }
        }
        if cholesky_in_place(&mut attempt, n) {
            break attempt;
        }
        nugget = if nugget == 0.0 { 1e-12 } else { nugget * 10.0 };
        if nugget > 1e-6 {
            return Err(Error::Numerical(
                "covariance factorization failed even with a 1e-6 nugget".into(),
            ));
        }
    };
    let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for k in 0..=i {
            acc += factored[i * n + k] * z[k];
        }
        out[i] = acc;
    }
    Ok(out)
}

/// Lower-triangular Cholesky factorization in place; returns false if the
/// matrix is not positive definite.
fn cholesky_in_place(a: &mut [f64], n: usize) -> bool {
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return false;
                }
                a[i * n + i] = s.sqrt();
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
    }
    true
}
