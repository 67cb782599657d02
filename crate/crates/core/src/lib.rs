//! Density estimation for discretely sampled stationary continuous-time
//! processes.
//!
//! The crate fits multivariate histograms and univariate frequency polygons
//! to observations of a stationary process collected under one of three
//! time-sampling designs (renewal, jittered, high-frequency), and provides
//! the machinery to measure their L2 risk: exact integrated squared bias,
//! Monte Carlo MISE, pointwise variance scaling, and the asymptotic
//! constants and bandwidth rules that govern the convergence rates.
//!
//! Modules:
//! - [`grid`]: regular partition of R^d into half-open hypercubes
//! - [`estimators`]: histogram / frequency polygon fitting and evaluation
//! - [`sampling`]: observation-time generators and optimal step sizes
//! - [`processes`]: simulable Gaussian process models with exact density
//!   oracles
//! - [`risk`]: ISB / IV / MISE computation and rate sweeps
//! - [`theory`]: asymptotic constants, bandwidth rules, log-log rate fits
//! - [`quad`]: Gauss-Legendre and adaptive quadrature
//!
//! # Example
//!
//! Observe a unit-variance Ornstein-Uhlenbeck path at renewal times, fit a
//! histogram, and measure its squared L2 distance to the true marginal:
//!
//! ```
//! use sampden::{draw_times, l2_distance_sq, DomainBox, Estimate, EstimatorKind};
//! use sampden::{OuModel, Partition, ProcessModel, SamplingScheme};
//!
//! let model = ProcessModel::Ou(OuModel::standard(1));
//! let scheme = SamplingScheme::renewal(1, 5.0)?;
//! let times = draw_times(&scheme, 4000, 7)?;
//! let xs = model.sample_at(&times[1..], 8)?;
//!
//! let partition = Partition::univariate(0.25)?;
//! let est = Estimate::fit(EstimatorKind::Histogram, &partition, &xs)?;
//! assert!((est.integral() - 1.0).abs() < 1e-12);
//!
//! let domain = DomainBox::centered(&[8.0])?;
//! let ise = l2_distance_sq(&est, |x| model.marginal_density(x), &domain, 5)?;
//! assert!(ise > 0.0 && ise < 0.05);
//! # Ok::<(), sampden::Error>(())
//! ```

pub mod error;
pub mod estimators;
pub mod grid;
pub mod processes;
pub mod quad;
pub mod risk;
pub mod sampling;
pub mod theory;

pub use error::{Error, Result};
pub use estimators::{
    l2_distance_sq, DomainBox, Estimate, EstimatorKind, FrequencyPolygonEstimate,
    HistogramEstimate,
};
pub use grid::{BinIndex, Partition};
pub use processes::{OuModel, ProcessModel, SmoothGaussianModel};
pub use risk::{exact_isb, mc_mise, pointwise_variance_scaled, RateExperiment, RiskConfig, RiskReport};
pub use sampling::{delta_star, draw_times, SamplePlan, SamplingScheme};
pub use theory::{fit_rate, optimal_c, MixingProfile, RateFit};
